"""Explicit decision variables of the binary program and checks against them.

``x[i, j]`` marks facility type ``i`` open at zone ``j``. Visit variables
``y[i, j, p, t]`` are stored sparsely as event rows (one row per 1 entry).
Queue sizes ``k[i, j, t]`` are either the number of visits in the slot
(``k_mode="count"``) or the simulated queue length, taking the largest value
seen within a slot (``k_mode="trace"``).

Constraint labels used in reports:

* ``C4`` open facilities of a type exceed the budget
* ``C5`` a person visits a type more than once (``once`` reading) or is at two
  zones in the same slot (``simultaneous`` reading)
* ``C6`` a person has no visit at home or within distance ``d``
* ``C7`` neighbour visited before home (product form ``<= 0`` violated)
* ``C8`` / ``C9`` non-binary ``x`` / ``y`` (or ``y`` slot outside the horizon)
* ``LINK`` a visit to a facility that is not open
"""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sdfl.errors import ConfigError
from sdfl.network import RoadNetwork
from sdfl.queuesim import SimOutcome, person_ids, person_offsets
from sdfl.scenario import Scenario, SdParams
from sdfl.socdist import sd_values

logger = logging.getLogger(__name__)


@dataclass
class AssignmentTensor:
    x: np.ndarray
    types: np.ndarray
    zones: np.ndarray
    persons: np.ndarray
    slots: np.ndarray
    slot_count: int
    k: dict[tuple[int, int, int], int] = field(default_factory=dict)
    k_mode: str = "count"

    @property
    def n_events(self) -> int:
        return len(self.types)

    @classmethod
    def from_events(
        cls,
        x: np.ndarray,
        events: list[tuple[int, int, int, int]] | np.ndarray,
        slot_count: int,
    ) -> AssignmentTensor:
        """Tensor whose ``k`` is the per-slot visit count."""
        ev = np.asarray(events, dtype=np.int64).reshape(-1, 4)
        counts = Counter(zip(ev[:, 0].tolist(), ev[:, 1].tolist(), ev[:, 3].tolist()))
        return cls(
            x=np.asarray(x, dtype=np.int64),
            types=ev[:, 0].copy(),
            zones=ev[:, 1].copy(),
            persons=ev[:, 2].copy(),
            slots=ev[:, 3].copy(),
            slot_count=slot_count,
            k=dict(counts),
            k_mode="count",
        )

    def event_k(self) -> np.ndarray:
        return np.array(
            [self.k[(i, j, t)] for i, j, t in zip(self.types.tolist(), self.zones.tolist(), self.slots.tolist())],
            dtype=np.int64,
        )


@dataclass(frozen=True)
class Violation:
    constraint: str
    indices: tuple[int, ...]
    detail: str = ""


@dataclass
class FeasibilityReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def by_constraint(self) -> dict[str, int]:
        return dict(Counter(v.constraint for v in self.violations))

    def summary(self) -> str:
        if self.ok:
            return "pass"
        return ", ".join(f"{c}: {n}" for c, n in sorted(self.by_constraint().items()))


def objective_from_tensor(tensor: AssignmentTensor, sd: SdParams) -> float:
    """Sum of ``S(k[i, j, t])`` over visits to open facilities."""
    if tensor.n_events == 0:
        return 0.0
    kvals = tensor.event_k()
    total = 0.0
    keys = np.stack([tensor.types, tensor.zones], axis=1)
    for i, j in sorted(set(map(tuple, keys.tolist()))):
        if not tensor.x[i, j]:
            continue
        mask = (tensor.types == i) & (tensor.zones == j)
        total += float(sd_values(kvals[mask], sd, sd.gamma_for(i, j)).sum())
    return total


def trace_to_tensor(outcome: SimOutcome, scenario: Scenario) -> AssignmentTensor:
    """Decision tensor realized by a simulation run.

    Each customer becomes one visit in slot ``floor(arrival / time_slot)``;
    ``k`` is the largest simulated queue length among arrivals sharing that
    facility slot.
    """
    x = np.zeros((scenario.k, scenario.n), dtype=np.int64)
    for i, zones in enumerate(outcome.placement.open):
        x[i, list(zones)] = 1
    horizon = scenario.queue.horizon
    cols: list[list[np.ndarray]] = [[], [], [], []]
    kmap: dict[tuple[int, int, int], int] = {}
    for tr in outcome.traces:
        arrivals = tr.arrivals
        keep = np.ones(len(arrivals), dtype=bool)
        if horizon is not None:
            keep = arrivals <= horizon
            if not keep.all():
                logger.warning("dropping %d arrivals after the horizon at facility %s",
                               int((~keep).sum()), (tr.type_index, tr.zone))
        slots = np.floor(arrivals[keep] / scenario.time_slot).astype(np.int64)
        persons = person_ids(scenario, tr.origins[keep], tr.customers[keep])
        for t, q in zip(slots.tolist(), tr.queue_lengths[keep].tolist()):
            key = (tr.type_index, tr.zone, t)
            if q > kmap.get(key, -1):
                kmap[key] = q
        cols[0].append(np.full(len(slots), tr.type_index, dtype=np.int64))
        cols[1].append(np.full(len(slots), tr.zone, dtype=np.int64))
        cols[2].append(persons)
        cols[3].append(slots)
    merged = [np.concatenate(c) if c else np.empty(0, dtype=np.int64) for c in cols]
    if horizon is not None:
        slot_count = math.floor(horizon / scenario.time_slot) + 1
    else:
        slot_count = int(merged[3].max()) + 1 if len(merged[3]) else 0
    return AssignmentTensor(x, *merged, slot_count=slot_count, k=kmap, k_mode="trace")


def _home_zones(scenario: Scenario, persons: np.ndarray) -> np.ndarray:
    return np.searchsorted(person_offsets(scenario), persons, side="right") - 1


def check_feasibility(
    tensor: AssignmentTensor,
    net: RoadNetwork,
    scenario: Scenario,
    d: float | None = None,
) -> FeasibilityReport:
    """Check every model constraint and list each violation with its indices.

    ``d`` bounds the service vicinity (strictly closer than ``d``); it
    defaults to the network diameter plus one, which admits every zone.
    """
    if d is None:
        d = net.diameter + 1
    out: list[Violation] = []
    x = tensor.x
    T, J, P, S = tensor.types, tensor.zones, tensor.persons, tensor.slots
    total_pop = sum(scenario.populations)

    # C8: binary x
    for i, j in zip(*np.nonzero((x != 0) & (x != 1))):
        out.append(Violation("C8", (int(i), int(j)), f"x = {x[i, j]}"))

    # C4: budgets
    for i in range(scenario.k):
        opened = int((x[i] != 0).sum())
        if opened > scenario.budgets[i]:
            out.append(Violation("C4", (i,), f"{opened} open > budget {scenario.budgets[i]}"))

    # C9: binary y (duplicate rows) and slot range
    rows = list(zip(T.tolist(), J.tolist(), P.tolist(), S.tolist()))
    for key, count in Counter(rows).items():
        if count > 1:
            out.append(Violation("C9", key, f"y = {count}"))
    for key in rows:
        if not 0 <= key[3] < max(tensor.slot_count, 1) or not 0 <= key[2] < total_pop:
            out.append(Violation("C9", key, "slot or person outside the model range"))

    for key in rows:
        if not (0 <= key[1] < scenario.n) or x[key[0], key[1]] != 1:
            out.append(Violation("LINK", key, "visit to a facility that is not open"))

    # C5: exactly one visit per (type, person); never two places at once
    visits: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
    for i, j, p, t in rows:
        visits[(i, p)].append((j, t))
    for (i, p), vs in visits.items():
        if len(vs) > 1:
            out.append(Violation("C5", (i, p), f"once: {len(vs)} visits"))
        by_slot: dict[int, set[int]] = defaultdict(set)
        for j, t in vs:
            by_slot[t].add(j)
        for t, zs in sorted(by_slot.items()):
            if len(zs) > 1:
                out.append(Violation("C5", (i, p, t), f"simultaneous: zones {sorted(zs)}"))

    # C6: served at home or within distance d
    homes = _home_zones(scenario, P) if len(P) else P
    far_mask = homes != J
    near = np.ones(len(P), dtype=bool)
    if far_mask.any():
        uniq = np.unique(homes[far_mask])
        dist = net.distance_matrix(uniq.tolist())
        row_of = {int(h): r for r, h in enumerate(uniq.tolist())}
        idx = np.flatnonzero(far_mask)
        near[idx] = [dist[row_of[int(homes[e])], int(J[e])] < d for e in idx]
    offsets = person_offsets(scenario)
    for i in range(scenario.k):
        served = set(P[(T == i) & near].tolist())
        for z in range(scenario.n):
            need = min(scenario.demands[i][z], scenario.populations[z])
            start = int(offsets[z])
            for p in range(start, start + need):
                if p not in served:
                    out.append(Violation("C6", (i, z, p), "no visit at home or within d"))

    # C7: home visited no later than any neighbour, in product form
    for (i, p), vs in visits.items():
        if len(vs) < 2:
            continue
        home = int(_home_zones(scenario, np.array([p]))[0])
        at: dict[int, list[int]] = defaultdict(list)
        for j, t in vs:
            at[j].append(t)
        for t in at.get(home, []):
            for k in net.neighbors(home):
                if k in at:
                    value = len(at[k]) * (t - sum(at[k]))
                    if value > 0:
                        out.append(Violation("C7", (i, home, k, p, t), f"product = {value}"))
    return FeasibilityReport(out)


# -- interchange file --------------------------------------------------------

TENSOR_COLUMNS = ["record", "type", "zone", "person", "slot", "k"]


def write_tensor_csv(tensor: AssignmentTensor, scenario: Scenario, path: str | Path) -> None:
    """``x`` rows (``record=x``) followed by one ``y`` row per visit."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TENSOR_COLUMNS)
        for i, j in zip(*np.nonzero(tensor.x)):
            writer.writerow(["x", scenario.facility_types[i], int(j), "", "", ""])
        kvals = tensor.event_k() if tensor.n_events else []
        for i, j, p, t, k in zip(tensor.types.tolist(), tensor.zones.tolist(), tensor.persons.tolist(),
                                 tensor.slots.tolist(), list(kvals)):
            writer.writerow(["y", scenario.facility_types[i], j, p, t, int(k)])


def read_tensor_csv(path: str | Path, scenario: Scenario) -> AssignmentTensor:
    x = np.zeros((scenario.k, scenario.n), dtype=np.int64)
    events: list[tuple[int, int, int, int]] = []
    kmap: dict[tuple[int, int, int], int] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(TENSOR_COLUMNS) - set(reader.fieldnames):
            raise ConfigError(f"{path}: expected columns {','.join(TENSOR_COLUMNS)}")
        for rec in reader:
            i = scenario.type_index(rec["type"])
            j = int(rec["zone"])
            if rec["record"] == "x":
                x[i, j] += 1
            elif rec["record"] == "y":
                t = int(rec["slot"])
                events.append((i, j, int(rec["person"]), t))
                if rec["k"]:
                    kmap[(i, j, t)] = max(kmap.get((i, j, t), 0), int(rec["k"]))
            else:
                raise ConfigError(f"{path}: unknown record kind {rec['record']!r}")
    slot_count = max((t for *_, t in events), default=-1) + 1
    tensor = AssignmentTensor.from_events(x, events, slot_count)
    if kmap:
        tensor.k.update(kmap)
        tensor.k_mode = "file"
    return tensor
