"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 infeasible or
failed validation, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from typing import Sequence

from sdfl.errors import SdflError
from sdfl.ilpmodel import trace_to_tensor, write_tensor_csv
from sdfl.network import WeightSpec, generate_complete, generate_grid, write_network
from sdfl.oracle import DEFAULT_CAP, score_placements
from sdfl.placement import (
    read_assignment_csv,
    read_placement_csv,
    run_heuristic,
    simulation_search,
    write_assignment_csv,
    write_placement_csv,
)
from sdfl.queuesim import evaluate_placement, write_trace_csv
from sdfl.scenario import (
    DEFAULT_SEED,
    SEED_ENV_VAR,
    Scenario,
    build_scenario,
    derive_stream,
    load_config,
    load_scenario,
    save_scenario,
    stream_for,
)
from sdfl.sweep import ALGORITHMS, run_sweep, validate_run, write_sweep_csv

logger = logging.getLogger("sdfl")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    return int(raw) if raw else DEFAULT_SEED


def _load(args: argparse.Namespace) -> Scenario:
    """Scenario from ``--scenario`` JSON or ``--config`` INI plus overrides."""
    if getattr(args, "scenario", None):
        scenario = load_scenario(args.scenario)
        return scenario.with_seed(args.seed) if args.seed is not None else scenario
    if not getattr(args, "config", None):
        raise SdflError("either --config or --scenario is required")
    config = load_config(args.config)
    for item in args.set or []:
        key, eq, value = item.partition("=")
        section, _, name = key.partition(".")
        if not (eq and name):
            raise SdflError(f"--set expects section.key=value, got {item!r}")
        section = section.lower()
        keep_case = section == "budgets" or name.lower().startswith("gamma.")
        config.setdefault(section, {})[name if keep_case else name.lower()] = value
    seed = args.seed
    if seed is None and "master_seed" not in config.get("seed", {}):
        seed = _env_seed()
    return build_scenario(config, master_seed=seed)


def _scenario_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="INI configuration file")
    src.add_argument("--scenario", help="scenario JSON written by build-scenario")
    p.add_argument("--seed", type=int, help=f"master seed (default: config, then ${SEED_ENV_VAR})")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")


def _outputs(args: argparse.Namespace, scenario: Scenario, run: int, outcome) -> None:
    if getattr(args, "placement_out", None):
        write_placement_csv(outcome.placement, scenario, args.placement_out)
    if getattr(args, "trace_out", None):
        write_trace_csv([(run, outcome)], scenario, args.trace_out)
    if getattr(args, "tensor_out", None):
        write_tensor_csv(trace_to_tensor(outcome, scenario), scenario, args.tensor_out)


def _report(outcome) -> None:
    print(f"F={outcome.F!r} avg_queue_len={outcome.average_queue_length!r} makespan={outcome.makespan!r}")
    for i, zones in enumerate(outcome.placement.open):
        print(f"type {i}: open {list(zones)}")


def cmd_gen_net(args: argparse.Namespace) -> int:
    weights = WeightSpec.parse(args.weights)
    rng = stream_for(args.seed if args.seed is not None else _env_seed(), "network")
    if args.kind == "complete":
        net = generate_complete(args.n, weights, rng)
    else:
        net = generate_grid(args.rows, args.cols, weights, rng, neighborhood=args.neighborhood)
    write_network(net, args.output)
    print(f"wrote {net.n} zones, {net.m} edges to {args.output}")
    return EXIT_OK


def cmd_build_scenario(args: argparse.Namespace) -> int:
    scenario = _load(args)
    save_scenario(scenario, args.output)
    print(f"wrote scenario ({scenario.n} zones, types {list(scenario.facility_types)}) to {args.output}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    scenario = _load(args)
    placement = read_placement_csv(args.placement, scenario)
    placement.validate(scenario)
    policy = read_assignment_csv(args.assignment, scenario) if args.assignment else "nearest"
    outcome = evaluate_placement(
        scenario.network, scenario, placement, policy, rng=derive_stream(scenario, "eval", args.stream_index)
    )
    _outputs(args, scenario, args.stream_index, outcome)
    _report(outcome)
    return EXIT_OK


def cmd_alg1(args: argparse.Namespace) -> int:
    scenario = _load(args)
    placement, outcome, log = simulation_search(
        scenario.network, scenario, args.runs, crn=args.crn, workers=args.workers
    )
    best_run = max(log, key=lambda rec: (rec.F, -rec.run)).run
    if args.log_out:
        with open(args.log_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run", "F", "avg_queue_len"])
            for rec in log:
                writer.writerow([rec.run, repr(rec.F), repr(rec.average_queue_length)])
    _outputs(args, scenario, best_run, outcome)
    print(f"best run {best_run} of {args.runs}")
    _report(outcome)
    return EXIT_OK


def cmd_alg2(args: argparse.Namespace) -> int:
    scenario = _load(args)
    _, outcome = run_heuristic(scenario.network, scenario)
    if args.assignment_out:
        write_assignment_csv(outcome.assignment, scenario, args.assignment_out)
    _outputs(args, scenario, 0, outcome)
    _report(outcome)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    scenario = _load(args)
    best = None
    rows = []
    for placement, F in score_placements(scenario.network, scenario, args.cap):
        rows.append((placement, F))
        if best is None or F > best[1]:
            best = (placement, F)
    assert best is not None
    if args.scores_out:
        with open(args.scores_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["placement", "F"])
            for placement, F in rows:
                writer.writerow([";".join(" ".join(map(str, z)) for z in placement.open), repr(F)])
    if args.placement_out:
        write_placement_csv(best[0], scenario, args.placement_out)
    print(f"evaluated {len(rows)} placements; best F={best[1]!r}")
    for i, zones in enumerate(best[0].open):
        print(f"type {i}: open {list(zones)}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = _load(args)
    counts = [int(c) for c in args.counts.split(",") if c.strip()]
    algos = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    rows = run_sweep(
        scenario, counts, algos, args.runs, None, crn=args.crn, workers=args.workers, timing=args.timing,
        cap=args.cap,
    )
    write_sweep_csv(rows, args.output)
    print(f"wrote {len(rows)} rows to {args.output}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = _load(args)
    reports = validate_run(scenario, args.artifacts, args.d)
    failed = 0
    for label, report in reports.items():
        print(f"{label}: {report.summary()}")
        if not report.ok:
            failed += 1
            for v in report.violations[: args.show]:
                print(f"  {v.constraint} {v.indices} {v.detail}")
    return EXIT_INFEASIBLE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="sdfl", description="Social-distancing facility location toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("gen-net", help="generate a synthetic road network")
    p.add_argument("--kind", choices=["complete", "grid"], default="complete")
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--rows", type=int, default=10)
    p.add_argument("--cols", type=int, default=10)
    p.add_argument("--weights", default="unit", help="unit or uniform(lo,hi)")
    p.add_argument("--neighborhood", choices=["moore", "von_neumann"], default="moore")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_net)

    p = sub.add_parser("build-scenario", help="sample populations and write scenario JSON")
    _scenario_args(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_build_scenario)

    p = sub.add_parser("eval", help="simulate a given placement")
    _scenario_args(p)
    p.add_argument("--placement", required=True, help="CSV with columns type,zone")
    p.add_argument("--assignment", help="explicit routing CSV (type,customer_zone,facility_zone)")
    p.add_argument("--stream-index", type=int, default=0)
    p.add_argument("--trace-out")
    p.add_argument("--tensor-out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("alg1", help="simulation-based random search")
    _scenario_args(p)
    p.add_argument("--runs", "-R", type=int, default=50)
    p.add_argument("--crn", action="store_true", help="common random numbers across runs")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--placement-out")
    p.add_argument("--log-out")
    p.add_argument("--trace-out")
    p.add_argument("--tensor-out")
    p.set_defaults(func=cmd_alg1)

    p = sub.add_parser("alg2", help="demand-sorted heuristic with snake allocation")
    _scenario_args(p)
    p.add_argument("--placement-out")
    p.add_argument("--assignment-out")
    p.add_argument("--trace-out")
    p.add_argument("--tensor-out")
    p.set_defaults(func=cmd_alg2)

    p = sub.add_parser("oracle", help="exhaustive search (small instances only)")
    _scenario_args(p)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--placement-out")
    p.add_argument("--scores-out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="sweep facility counts and write CSV")
    _scenario_args(p)
    p.add_argument("--counts", required=True, help="comma-separated facility counts")
    p.add_argument("--algorithms", default="alg1,alg2", help=f"subset of {','.join(ALGORITHMS)}")
    p.add_argument("--runs", "-R", type=int, default=50)
    p.add_argument("--crn", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check run artifacts against the model constraints")
    _scenario_args(p)
    p.add_argument("artifacts", nargs="*", help="trace dumps or tensor CSV files")
    p.add_argument("--d", type=float, help="service vicinity (default: diameter + 1)")
    p.add_argument("--show", type=int, default=10, help="violations to print per run")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"sdfl: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"sdfl: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SdflError, ValueError) as exc:
        print(f"sdfl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
