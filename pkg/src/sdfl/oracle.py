"""Ground truth for small instances: exhaustive search and M/M/1 formulas."""

from __future__ import annotations

import itertools
import math
from typing import Iterator, Sequence

from sdfl.errors import EnumerationCapError, UnstableQueueError
from sdfl.network import RoadNetwork
from sdfl.placement import Placement
from sdfl.queuesim import crn_draws, evaluate_placement
from sdfl.scenario import Scenario

DEFAULT_CAP = 10**6


def placement_count(n: int, budgets: Sequence[int]) -> int:
    return math.prod(math.comb(n, ell) for ell in budgets)


def enumerate_placements(n: int, budgets: Sequence[int], cap: int = DEFAULT_CAP) -> Iterator[Placement]:
    """Every placement opening exactly ``budgets[i]`` zones per type, in
    lexicographic order."""
    count = placement_count(n, budgets)
    if count > cap:
        raise EnumerationCapError(count, cap)
    per_type = [list(itertools.combinations(range(n), ell)) for ell in budgets]
    for combo in itertools.product(*per_type):
        yield Placement(tuple(combo))


def score_placements(
    net: RoadNetwork, scenario: Scenario, cap: int = DEFAULT_CAP
) -> Iterator[tuple[Placement, float]]:
    """``(placement, F)`` for every placement under common random numbers.

    Service requirements are attached to customers rather than facilities so
    that only routing differs between placements.
    """
    placements = enumerate_placements(scenario.n, scenario.budgets, cap)
    draws = crn_draws(scenario)
    for placement in placements:
        yield placement, evaluate_placement(net, scenario, placement, "nearest", draws=draws).F


def brute_force_best(net: RoadNetwork, scenario: Scenario, cap: int = DEFAULT_CAP) -> tuple[Placement, float]:
    best: tuple[Placement, float] | None = None
    for placement, F in score_placements(net, scenario, cap):
        if best is None or F > best[1]:
            best = (placement, F)
    assert best is not None
    return best


def mm1_mean_number(lam: float, mu: float) -> float:
    """Steady-state mean number in an M/M/1 system, ``rho / (1 - rho)``."""
    if lam <= 0 or mu <= 0:
        raise ValueError("rates must be positive")
    if lam >= mu:
        raise UnstableQueueError(f"arrival rate {lam} is not below service rate {mu}")
    rho = lam / mu
    return rho / (1 - rho)
