from __future__ import annotations

from typing import Sequence

import pytest

from sdfl.network import RoadNetwork, generate_complete
from sdfl.scenario import QueueParams, Scenario, SdParams

DEFAULT_SD = SdParams(A=10.0, b=0.5, gamma=4)


def path_network(n: int, populations: Sequence[int] | None = None) -> RoadNetwork:
    edges = tuple((z, z + 1, 1.0) for z in range(n - 1))
    return RoadNetwork(n, edges, None if populations is None else tuple(populations))


def make_scenario(
    net: RoadNetwork,
    budgets: Sequence[int],
    populations: Sequence[int] | None = None,
    demands: Sequence[Sequence[int]] | None = None,
    *,
    sd: SdParams = DEFAULT_SD,
    queue: QueueParams | None = None,
    seed: int = 7,
    time_slot: float = 1.0,
) -> Scenario:
    if populations is not None:
        net = net.with_populations(populations)
    assert net.populations is not None
    if demands is None:
        demands = [list(net.populations) for _ in budgets]
    return Scenario(
        network=net,
        facility_types=tuple(f"h{i + 1}" for i in range(len(budgets))),
        budgets=tuple(budgets),
        demands=tuple(tuple(row) for row in demands),
        sd=sd,
        queue=queue or QueueParams(),
        time_slot=time_slot,
        master_seed=seed,
    )


@pytest.fixture
def k5_scenario() -> Scenario:
    """Complete unit-weight network on 5 zones, one type, budget 2."""
    return make_scenario(generate_complete(5), [2], populations=[12, 9, 15, 10, 11])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
