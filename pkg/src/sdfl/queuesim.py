"""Single-server FCFS queue simulation at every open facility.

For each facility type independently: customers are generated per zone with
exponential inter-arrival gaps, routed to an open facility, merged by arrival
time, and served first-come-first-served with exponential service times. Each
customer scores ``S(k)`` once, where ``k`` is the number of people present at
the facility (including the arriver and whoever is in service) right after the
arrival. A departure at exactly the arrival instant leaves before the arriver
is counted.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from sdfl.errors import NoFacilityError
from sdfl.network import RoadNetwork
from sdfl.scenario import Scenario, stream_for
from sdfl.socdist import sd_values

if TYPE_CHECKING:
    from sdfl.placement import Placement

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ArrivalSchedule:
    type_index: int
    zone: int
    times: np.ndarray


@dataclass(frozen=True)
class CustomerAssignment:
    """Facility zone serving each home zone, per facility type."""

    facility_of: tuple[tuple[int, ...], ...]
    policy: str = "nearest"

    def served_by(self, type_index: int, facility: int) -> list[int]:
        return [z for z, f in enumerate(self.facility_of[type_index]) if f == facility]


@dataclass(frozen=True)
class CustomerDraws:
    """Pre-drawn randomness for every customer.

    ``arrivals[i][z]`` holds the arrival times of zone ``z``'s type-``i``
    customers. ``services`` is either ``None`` (service times are drawn per
    facility in queue order during evaluation) or aligned with ``arrivals``,
    attaching one service requirement to each customer.
    """

    arrivals: tuple[tuple[np.ndarray, ...], ...]
    services: tuple[tuple[np.ndarray, ...], ...] | None = None


@dataclass
class FacilityQueueTrace:
    """All customers served at one facility, in FCFS order."""

    type_index: int
    zone: int
    arrivals: np.ndarray
    departures: np.ndarray
    queue_lengths: np.ndarray
    contributions: np.ndarray
    origins: np.ndarray
    customers: np.ndarray

    @property
    def size(self) -> int:
        return len(self.arrivals)

    @property
    def makespan(self) -> float:
        return float(self.departures[-1]) if self.size else 0.0

    @property
    def total(self) -> float:
        return float(self.contributions.sum())

    def time_average_length(self) -> float:
        """Time-weighted number in system over ``[0, makespan]``."""
        if not self.size:
            return 0.0
        return float((self.departures - self.arrivals).sum() / self.makespan)

    def events(self) -> list[tuple[float, str, int, int]]:
        """``(time, kind, queue_length_after, customer_position)`` in time order."""
        raw = [(float(t), 1, i) for i, t in enumerate(self.arrivals)]
        raw += [(float(t), 0, i) for i, t in enumerate(self.departures)]
        raw.sort()
        out = []
        length = 0
        for t, kind, i in raw:
            length += 1 if kind else -1
            out.append((t, "arrival" if kind else "departure", length, i))
        return out


@dataclass
class SimOutcome:
    placement: Placement
    assignment: CustomerAssignment
    total_social_distancing: float
    average_queue_length: float
    traces: list[FacilityQueueTrace] = field(repr=False)
    makespan: float

    @property
    def F(self) -> float:
        return self.total_social_distancing

    def mean_length_at_arrival(self) -> float:
        """Queue length seen by the average customer (arrival-weighted)."""
        lengths = [tr.queue_lengths for tr in self.traces if tr.size]
        return float(np.concatenate(lengths).mean()) if lengths else 0.0


# -- randomness --------------------------------------------------------------


def generate_arrivals(
    scenario: Scenario, type_index: int, zone: int, rng: np.random.Generator
) -> ArrivalSchedule:
    """Cumulative sums of exponential gaps, one arrival per unit of demand."""
    demand = scenario.demands[type_index][zone]
    gaps = rng.exponential(scenario.queue.mean_interarrival, size=demand)
    return ArrivalSchedule(type_index, zone, np.cumsum(gaps))


def draw_customers(scenario: Scenario, rng: np.random.Generator) -> CustomerDraws:
    """Arrivals for every (type, zone) drawn sequentially from one stream."""
    arrivals = tuple(
        tuple(generate_arrivals(scenario, i, z, rng).times for z in range(scenario.n))
        for i in range(scenario.k)
    )
    return CustomerDraws(arrivals)


def crn_draws(scenario: Scenario) -> CustomerDraws:
    """Common random numbers: placement-independent arrival and service draws.

    Zone ``z`` of type ``i`` uses the streams ``("arrivals", i*n + z)`` and
    ``("service", i*n + z)``, so every customer keeps the same arrival time
    and service requirement whichever facility serves them.
    """
    n = scenario.n
    arrivals, services = [], []
    for i in range(scenario.k):
        arr_row, svc_row = [], []
        for z in range(n):
            key = i * n + z
            arr_row.append(generate_arrivals(scenario, i, z, stream_for(scenario.master_seed, "arrivals", key)).times)
            svc_row.append(
                stream_for(scenario.master_seed, "service", key).exponential(
                    scenario.queue.mean_service, size=scenario.demands[i][z]
                )
            )
        arrivals.append(tuple(arr_row))
        services.append(tuple(svc_row))
    return CustomerDraws(tuple(arrivals), tuple(services))


# -- routing -----------------------------------------------------------------


def assign_customers(
    net: RoadNetwork,
    scenario: Scenario,
    placement: Placement,
    policy: str | CustomerAssignment | Mapping[int, Sequence[int]] = "nearest",
) -> CustomerAssignment:
    """Route every zone to an open facility of each type.

    ``"nearest"`` picks the open zone with the smallest shortest-path distance,
    breaking ties by the smaller zone id. Anything else is taken as an explicit
    per-type map and validated against the placement.
    """
    for i, open_zones in enumerate(placement.open):
        if not open_zones:
            raise NoFacilityError(f"no open facility of type {scenario.facility_types[i]!r}")
    if isinstance(policy, str):
        if policy != "nearest":
            raise ValueError(f"unknown assignment policy {policy!r}")
        rows = []
        for open_zones in placement.open:
            sources = sorted(open_zones)
            dist = net.distance_matrix(sources)
            rows.append(tuple(int(sources[j]) for j in np.argmin(dist, axis=0)))
        return CustomerAssignment(tuple(rows), "nearest")

    label = "explicit"
    if isinstance(policy, CustomerAssignment):
        rows = list(policy.facility_of)
        label = policy.policy
    else:
        rows = [tuple(policy[i]) for i in range(scenario.k)]
    if len(rows) != scenario.k:
        raise ValueError(f"explicit assignment covers {len(rows)} types, expected {scenario.k}")
    for i, row in enumerate(rows):
        if len(row) != scenario.n:
            raise ValueError(f"explicit assignment for type {i} has {len(row)} zones")
        bad = sorted({f for f in row if f not in placement.open[i]})
        if bad:
            raise NoFacilityError(f"type {i} assigned to closed facilities {bad}")
    return CustomerAssignment(tuple(tuple(int(f) for f in row) for row in rows), label)


# -- queue -------------------------------------------------------------------


def simulate_queue(
    arrivals: np.ndarray,
    scenario: Scenario,
    rng: np.random.Generator | None = None,
    *,
    type_index: int = 0,
    zone: int = 0,
    service_times: np.ndarray | None = None,
    origins: np.ndarray | None = None,
    customers: np.ndarray | None = None,
) -> FacilityQueueTrace:
    """Serve sorted ``arrivals`` FCFS at facility ``(type_index, zone)``.

    Service times come from ``service_times`` when given, otherwise they are
    drawn from ``rng`` in queue order.
    """
    arr = np.asarray(arrivals, dtype=float)
    n = len(arr)
    if n and np.any(np.diff(arr) < 0):
        raise ValueError("arrivals must be sorted in nondecreasing order")
    if service_times is None:
        if rng is None:
            raise ValueError("simulate_queue needs either service_times or an rng")
        svc = rng.exponential(scenario.queue.mean_service, size=n)
    else:
        svc = np.asarray(service_times, dtype=float)
        if len(svc) != n:
            raise ValueError(f"{len(svc)} service times for {n} arrivals")

    departures = np.empty(n)
    prev = 0.0
    for idx, (a, s) in enumerate(zip(arr.tolist(), svc.tolist())):
        prev = (a if a > prev else prev) + s
        departures[idx] = prev
    # departures are nondecreasing under FCFS, so earlier leavers are a prefix
    lengths = np.arange(1, n + 1) - np.searchsorted(departures, arr, side="right")
    gamma = scenario.sd.gamma_for(type_index, zone)
    return FacilityQueueTrace(
        type_index=type_index,
        zone=zone,
        arrivals=arr,
        departures=departures,
        queue_lengths=lengths.astype(np.int64),
        contributions=sd_values(lengths, scenario.sd, gamma),
        origins=np.full(n, zone, dtype=np.int64) if origins is None else np.asarray(origins, dtype=np.int64),
        customers=np.arange(n, dtype=np.int64) if customers is None else np.asarray(customers, dtype=np.int64),
    )


def evaluate_placement(
    net: RoadNetwork,
    scenario: Scenario,
    placement: Placement,
    assignment_policy: str | CustomerAssignment = "nearest",
    rng: np.random.Generator | None = None,
    draws: CustomerDraws | None = None,
) -> SimOutcome:
    """Simulate every open facility and total the social-distancing score.

    Without ``draws`` the arrivals are drawn from ``rng`` first (type-major,
    zone order) and then service times per facility in queue order.
    """
    assignment = assign_customers(net, scenario, placement, assignment_policy)
    if draws is None:
        if rng is None:
            raise ValueError("evaluate_placement needs either draws or an rng")
        draws = draw_customers(scenario, rng)
    elif draws.services is None and rng is None:
        raise ValueError("draws without service times need an rng")
    horizon = scenario.queue.horizon

    traces: list[FacilityQueueTrace] = []
    for i in range(scenario.k):
        for fac in sorted(placement.open[i]):
            zones = assignment.served_by(i, fac)
            parts_t, parts_o, parts_c, parts_s = [], [], [], []
            for z in zones:
                t = draws.arrivals[i][z]
                keep = len(t) if horizon is None else int(np.searchsorted(t, horizon, side="right"))
                parts_t.append(t[:keep])
                parts_o.append(np.full(keep, z, dtype=np.int64))
                parts_c.append(np.arange(keep, dtype=np.int64))
                if draws.services is not None:
                    parts_s.append(draws.services[i][z][:keep])
            times = np.concatenate(parts_t) if parts_t else np.empty(0)
            order = np.argsort(times, kind="stable")
            svc = None
            if draws.services is not None:
                svc = np.concatenate(parts_s)[order] if parts_s else np.empty(0)
            traces.append(
                simulate_queue(
                    times[order],
                    scenario,
                    rng,
                    type_index=i,
                    zone=fac,
                    service_times=svc,
                    origins=np.concatenate(parts_o)[order] if parts_o else None,
                    customers=np.concatenate(parts_c)[order] if parts_c else None,
                )
            )

    total = float(sum(tr.total for tr in traces))
    avg = float(np.mean([tr.time_average_length() for tr in traces])) if traces else 0.0
    makespan = max((tr.makespan for tr in traces), default=0.0)
    return SimOutcome(placement, assignment, total, avg, traces, makespan)


# -- trace dump --------------------------------------------------------------

TRACE_COLUMNS = [
    "run", "type", "facility_zone", "event_time", "event_kind",
    "queue_len", "s_contrib", "home_zone", "person",
]


def person_offsets(scenario: Scenario) -> np.ndarray:
    """Global id of the first resident of each zone."""
    return np.concatenate([[0], np.cumsum(scenario.populations)[:-1]]).astype(np.int64)


def person_ids(scenario: Scenario, origins: np.ndarray, customers: np.ndarray) -> np.ndarray:
    """Global person id of each customer (demand beyond population wraps)."""
    pops = np.asarray(scenario.populations, dtype=np.int64)
    return person_offsets(scenario)[origins] + customers % pops[origins]


def write_trace_csv(
    runs: Iterable[tuple[int, SimOutcome]], scenario: Scenario, path: str | Path
) -> None:
    """Dump every queue event of each ``(run, outcome)`` pair."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for run, outcome in runs:
            for tr in outcome.traces:
                persons = person_ids(scenario, tr.origins, tr.customers)
                name = scenario.facility_types[tr.type_index]
                for t, kind, length, pos in tr.events():
                    contrib = repr(float(tr.contributions[pos])) if kind == "arrival" else ""
                    writer.writerow(
                        [run, name, tr.zone, repr(t), kind, length, contrib, int(tr.origins[pos]), int(persons[pos])]
                    )
