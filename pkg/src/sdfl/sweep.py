"""Facility-count sweeps and post-hoc feasibility validation of run artifacts."""

from __future__ import annotations

import csv
import io
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from sdfl.errors import ConfigError, EnumerationCapError, InvalidBudgetError
from sdfl.ilpmodel import (
    TENSOR_COLUMNS,
    AssignmentTensor,
    FeasibilityReport,
    check_feasibility,
    read_tensor_csv,
)
from sdfl.oracle import DEFAULT_CAP, brute_force_best, placement_count
from sdfl.placement import run_heuristic, simulation_search
from sdfl.queuesim import TRACE_COLUMNS, crn_draws, evaluate_placement
from sdfl.scenario import Scenario

ALGORITHMS = ("alg1", "alg2", "oracle")
SWEEP_COLUMNS = ["ell", "algorithm", "F", "avg_queue_len", "runtime_ms", "seed"]


@dataclass(frozen=True)
class SweepRow:
    ell: int
    algorithm: str
    F: float
    avg_queue_len: float
    runtime_ms: float | None
    seed: int

    def as_csv(self) -> list[str]:
        runtime = "" if self.runtime_ms is None else f"{self.runtime_ms:.1f}"
        return [str(self.ell), self.algorithm, repr(self.F), repr(self.avg_queue_len), runtime, str(self.seed)]


def _run_cell(args: tuple[Scenario, int, str, int, bool, bool, int]) -> SweepRow:
    base, ell, algorithm, R, crn, timing, cap = args
    scenario = base.with_budgets(ell)
    net = scenario.network
    start = time.perf_counter()
    if algorithm == "alg1":
        _, outcome, _ = simulation_search(net, scenario, R, crn=crn)
    elif algorithm == "alg2":
        _, outcome = run_heuristic(net, scenario)
    else:
        placement, _ = brute_force_best(net, scenario, cap)
        outcome = evaluate_placement(net, scenario, placement, draws=crn_draws(scenario))
    elapsed = (time.perf_counter() - start) * 1000 if timing else None
    return SweepRow(ell, algorithm, outcome.F, outcome.average_queue_length, elapsed, scenario.master_seed)


def run_sweep(
    scenario: Scenario,
    facility_counts: Iterable[int],
    algorithms: Sequence[str],
    R: int,
    output: str | Path | None = None,
    *,
    crn: bool = False,
    workers: int = 1,
    timing: bool = False,
    cap: int = DEFAULT_CAP,
) -> list[SweepRow]:
    """One row per ``(ell, algorithm)`` cell, sorted by ``ell`` then algorithm.

    Every facility type gets budget ``ell``. The ``runtime_ms`` column is left
    blank unless ``timing`` is set, so that reruns produce identical files.
    """
    counts = sorted(set(int(c) for c in facility_counts))
    algos = [a for a in ALGORITHMS if a in set(algorithms)]
    unknown = set(algorithms) - set(ALGORITHMS)
    if unknown:
        raise ConfigError(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
    if not counts or not algos:
        raise ConfigError("sweep needs at least one facility count and one algorithm")
    for ell in counts:
        if not 1 <= ell <= scenario.n:
            raise InvalidBudgetError(f"facility count {ell} outside 1..{scenario.n}")
        if "oracle" in algos and placement_count(scenario.n, [ell] * scenario.k) > cap:
            raise EnumerationCapError(placement_count(scenario.n, [ell] * scenario.k), cap)
    if R < 1:
        raise ConfigError(f"need at least one simulation run, got R={R}")

    jobs = [(scenario, ell, a, R, crn, timing, cap) for ell in counts for a in algos]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, jobs))
    else:
        rows = [_run_cell(job) for job in jobs]
    if output is not None:
        write_sweep_csv(rows, output)
    return rows


def sweep_csv_text(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(row.as_csv())
    return buf.getvalue()


def write_sweep_csv(rows: Iterable[SweepRow], path: str | Path) -> None:
    Path(path).write_text(sweep_csv_text(rows))


# -- validation --------------------------------------------------------------


def tensors_from_trace_csv(path: str | Path, scenario: Scenario) -> dict[str, AssignmentTensor]:
    """Rebuild one decision tensor per run from a trace dump.

    ``x`` is taken to be the set of facilities that appear in the run.
    """
    opened: dict[str, set[tuple[int, int]]] = defaultdict(set)
    events: dict[str, list[tuple[int, int, int, int]]] = defaultdict(list)
    kmaps: dict[str, dict[tuple[int, int, int], int]] = defaultdict(dict)
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            run = rec["run"]
            i = scenario.type_index(rec["type"])
            j = int(rec["facility_zone"])
            opened[run].add((i, j))
            if rec["event_kind"] != "arrival":
                continue
            t = math.floor(float(rec["event_time"]) / scenario.time_slot)
            events[run].append((i, j, int(rec["person"]), t))
            key = (i, j, t)
            kmaps[run][key] = max(kmaps[run].get(key, 0), int(rec["queue_len"]))
    out = {}
    for run in opened:
        x = np.zeros((scenario.k, scenario.n), dtype=np.int64)
        for i, j in opened[run]:
            x[i, j] = 1
        ev = events[run]
        if scenario.queue.horizon is not None:
            slot_count = math.floor(scenario.queue.horizon / scenario.time_slot) + 1
        else:
            slot_count = max((t for *_, t in ev), default=-1) + 1
        tensor = AssignmentTensor.from_events(x, ev, slot_count)
        tensor.k = kmaps[run]
        tensor.k_mode = "trace"
        out[f"{Path(path).name}:run={run}"] = tensor
    return out


def _artifact_kind(path: Path) -> str:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    if set(TRACE_COLUMNS) <= set(header):
        return "trace"
    if set(TENSOR_COLUMNS) <= set(header):
        return "tensor"
    raise ConfigError(f"{path}: not a trace dump or tensor file (header {header})")


def validate_run(
    scenario: Scenario, artifacts: Sequence[str | Path], d: float | None = None
) -> dict[str, FeasibilityReport]:
    """Feasibility report for every run found in the given artifact files."""
    if not artifacts:
        raise ConfigError("no run artifacts given")
    reports: dict[str, FeasibilityReport] = {}
    net = scenario.network
    for raw in artifacts:
        path = Path(raw)
        if not path.is_file():
            raise FileNotFoundError(f"run artifact not found: {path}")
        if _artifact_kind(path) == "trace":
            tensors = tensors_from_trace_csv(path, scenario)
        else:
            tensors = {path.name: read_tensor_csv(path, scenario)}
        if not tensors:
            raise ConfigError(f"{path}: contains no runs")
        for label, tensor in tensors.items():
            reports[label] = check_feasibility(tensor, net, scenario, d)
    return reports
