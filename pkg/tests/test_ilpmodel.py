from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdfl.ilpmodel import (
    AssignmentTensor,
    check_feasibility,
    objective_from_tensor,
    read_tensor_csv,
    trace_to_tensor,
    write_tensor_csv,
)
from sdfl.network import generate_complete, generate_grid
from sdfl.placement import Placement, random_placement
from sdfl.queuesim import crn_draws, evaluate_placement
from sdfl.scenario import QueueParams, SdParams, stream_for

from conftest import DEFAULT_SD, make_scenario, path_network


def _x(k, n, opened):
    x = np.zeros((k, n), dtype=np.int64)
    for i, zones in enumerate(opened):
        x[i, list(zones)] = 1
    return x


def test_objective_trivial_examples():
    x = _x(1, 2, [(0,)])
    assert objective_from_tensor(AssignmentTensor.from_events(x, [], 1), DEFAULT_SD) == 0.0
    one = AssignmentTensor.from_events(x, [(0, 0, 0, 0)], 1)
    assert objective_from_tensor(one, DEFAULT_SD) == 10.0
    two = AssignmentTensor.from_events(x, [(0, 0, 0, 0), (0, 0, 1, 0)], 1)
    assert two.k[(0, 0, 0)] == 2
    assert objective_from_tensor(two, DEFAULT_SD) == 20.0


def test_count_mode_k_dominates_visits():
    x = _x(1, 1, [(0,)])
    ev = [(0, 0, p, t) for p, t in enumerate([0, 0, 0, 0, 0, 1])]
    tensor = AssignmentTensor.from_events(x, ev, 2)
    per_slot = Counter((i, j, t) for i, j, _, t in ev)
    assert all(tensor.k[key] >= c for key, c in per_slot.items())
    # five in slot 0 exceed gamma=4: 5 * (10 - 0.5) + 10
    assert objective_from_tensor(tensor, DEFAULT_SD) == 5 * 9.5 + 10


def test_closed_facility_visits_do_not_count_but_are_flagged():
    scen = make_scenario(path_network(2), [1], [1, 1])
    tensor = AssignmentTensor.from_events(_x(1, 2, [(0,)]), [(0, 0, 0, 0), (0, 1, 1, 0)], 1)
    assert objective_from_tensor(tensor, DEFAULT_SD) == 10.0
    report = check_feasibility(tensor, scen.network, scen)
    assert report.by_constraint() == {"LINK": 1}


def test_single_customer_slot():
    scen = make_scenario(path_network(1), [1], [1], queue=QueueParams(mean_interarrival=0.4))
    out = evaluate_placement(scen.network, scen, Placement(((0,),)), draws=None, rng=stream_for(0, "x"))
    out.traces[0].arrivals[:] = 0.4
    tensor = trace_to_tensor(out, scen)
    assert tensor.slots.tolist() == [0]
    assert tensor.persons.tolist() == [0]


def test_empty_outcome_gives_empty_tensor(caplog):
    scen = make_scenario(path_network(2), [1], [3, 3], queue=QueueParams(horizon=1e-9))
    out = evaluate_placement(scen.network, scen, Placement(((0,),)), draws=crn_draws(scen))
    tensor = trace_to_tensor(out, scen)
    assert tensor.n_events == 0
    assert objective_from_tensor(tensor, DEFAULT_SD) == 0.0 == out.F


def _sim(seed, n=6, ell=2, queue=None, time_slot=1.0, sd=DEFAULT_SD):
    net = generate_complete(n)
    rng = stream_for(seed, "pops")
    pops = rng.integers(2, 9, size=n).tolist()
    scen = make_scenario(net, [ell], pops, queue=queue, seed=seed, time_slot=time_slot, sd=sd)
    pl = random_placement(scen, stream_for(seed, "pl"))
    return scen, evaluate_placement(net, scen, pl, draws=crn_draws(scen))


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_trace_tensor_objective_bounded_by_simulation(seed):
    scen, out = _sim(seed)
    tensor = trace_to_tensor(out, scen)
    F_t = objective_from_tensor(tensor, scen.sd)
    # intra-slot max can only lower S
    assert F_t <= out.F + 1e-9
    # each extra arrival in a facility slot moves k by at most one step of b
    per_slot = Counter(zip(tensor.types.tolist(), tensor.zones.tolist(), tensor.slots.tolist()))
    bound = scen.sd.b * sum(m * (m - 1) / 2 for m in per_slot.values())
    assert out.F - F_t <= bound + 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_collision_free_trace_matches_simulation_exactly(seed):
    scen, out = _sim(seed, time_slot=1e-6)
    tensor = trace_to_tensor(out, scen)
    per_slot = Counter(zip(tensor.types.tolist(), tensor.zones.tolist(), tensor.slots.tolist()))
    assert max(per_slot.values()) == 1
    assert objective_from_tensor(tensor, scen.sd) == pytest.approx(out.F, rel=1e-12)


@given(st.integers(0, 10_000), st.floats(0.01, 10.0))
@settings(max_examples=30, deadline=None)
def test_b_invariance_below_threshold(seed, scale):
    x = _x(1, 3, [(0, 1, 2)])
    rng = stream_for(seed, "ev")
    ev = [(0, int(rng.integers(3)), p, p) for p in range(20)]
    tensor = AssignmentTensor.from_events(x, ev, 20)
    base = objective_from_tensor(tensor, DEFAULT_SD)
    scaled = objective_from_tensor(tensor, SdParams(10, 0.5 * scale, 4))
    assert base == scaled == 200.0


def test_additive_over_types():
    scen = make_scenario(generate_complete(4), [1, 2], [5, 6, 7, 8])
    out = evaluate_placement(scen.network, scen, Placement(((0,), (1, 3))), draws=crn_draws(scen))
    t = trace_to_tensor(out, scen)
    parts = []
    for i in range(2):
        m = t.types == i
        sub = AssignmentTensor(t.x, t.types[m], t.zones[m], t.persons[m], t.slots[m], t.slot_count, t.k, t.k_mode)
        parts.append(objective_from_tensor(sub, scen.sd))
    assert objective_from_tensor(t, scen.sd) == pytest.approx(sum(parts))


@pytest.mark.parametrize("seed", range(10))
def test_simulated_runs_are_feasible(seed):
    net = generate_grid(3, 3)
    pops = stream_for(seed, "p").integers(1, 6, size=9).tolist()
    scen = make_scenario(net, [3, 2], pops, seed=seed)
    pl = random_placement(scen, stream_for(seed, "pl"))
    out = evaluate_placement(net, scen, pl, draws=crn_draws(scen))
    report = check_feasibility(trace_to_tensor(out, scen), net, scen)
    assert report.ok, report.summary()


def test_double_visit_same_slot_is_C5():
    scen = make_scenario(path_network(3), [2], [1, 1, 1])
    x = _x(1, 3, [(0, 2)])
    ev = [(0, 0, 0, 0), (0, 2, 0, 0), (0, 0, 1, 0), (0, 2, 2, 0)]
    report = check_feasibility(AssignmentTensor.from_events(x, ev, 1), scen.network, scen)
    kinds = {v.detail.split(":")[0] for v in report.violations if v.constraint == "C5"}
    assert kinds == {"once", "simultaneous"}


def test_over_budget_is_C4():
    scen = make_scenario(path_network(3), [1], [1, 1, 1])
    x = _x(1, 3, [(0, 1)])
    report = check_feasibility(AssignmentTensor.from_events(x, [(0, 0, 0, 0), (0, 1, 1, 0), (0, 1, 2, 0)], 1),
                               scen.network, scen)
    assert report.by_constraint() == {"C4": 1}


def test_binarity_C8_C9():
    scen = make_scenario(path_network(2), [1], [1, 1])
    x = np.array([[2, 0]])
    report = check_feasibility(AssignmentTensor.from_events(x, [(0, 0, 0, 0), (0, 0, 0, 0), (0, 0, 1, 5)], 1),
                               scen.network, scen)
    counts = report.by_constraint()
    assert counts["C8"] == 1 and counts["C9"] == 2


def test_C6_respects_distance():
    scen = make_scenario(path_network(3), [1], [1, 1, 1])
    x = _x(1, 3, [(0,)])
    ev = [(0, 0, 0, 0), (0, 0, 1, 1), (0, 0, 2, 2)]
    tensor = AssignmentTensor.from_events(x, ev, 3)
    assert check_feasibility(tensor, scen.network, scen).ok
    tight = check_feasibility(tensor, scen.network, scen, d=1.5)
    assert [v.indices for v in tight.violations] == [(0, 2, 2)]


def test_C7_vacuous_under_single_visits_and_literal_otherwise():
    scen = make_scenario(path_network(2), [2], [1, 1])
    x = _x(1, 2, [(0, 1)])
    ok = AssignmentTensor.from_events(x, [(0, 1, 0, 0), (0, 0, 1, 0)], 1)
    assert "C7" not in check_feasibility(ok, scen.network, scen).by_constraint()
    # person 0 (home zone 0) visits neighbour zone 1 at slot 0, then home at slot 3
    bad = AssignmentTensor.from_events(x, [(0, 1, 0, 0), (0, 0, 0, 3), (0, 1, 1, 0)], 4)
    rep = check_feasibility(bad, scen.network, scen)
    assert rep.by_constraint()["C7"] == 1
    # home first satisfies the product form
    good = AssignmentTensor.from_events(x, [(0, 0, 0, 0), (0, 1, 0, 3), (0, 1, 1, 0)], 4)
    assert "C7" not in check_feasibility(good, scen.network, scen).by_constraint()


events = st.lists(
    st.tuples(st.integers(0, 3), st.integers(0, 7), st.integers(0, 4)), min_size=0, max_size=20
)


@given(events, st.floats(0.5, 4.0), st.floats(0.0, 4.0))
@settings(max_examples=60, deadline=None)
def test_feasibility_monotone_in_d(evs, d, extra):
    scen = make_scenario(path_network(4), [4], [2, 2, 2, 2])
    x = _x(1, 4, [(0, 1, 2, 3)])
    tensor = AssignmentTensor.from_events(x, [(0, j, p, t) for j, p, t in evs], 5)
    small = set(check_feasibility(tensor, scen.network, scen, d=d).violations)
    large = set(check_feasibility(tensor, scen.network, scen, d=d + extra).violations)
    assert large <= small


def test_tensor_csv_round_trip(tmp_path):
    scen, out = _sim(3)
    tensor = trace_to_tensor(out, scen)
    write_tensor_csv(tensor, scen, tmp_path / "t.csv")
    back = read_tensor_csv(tmp_path / "t.csv", scen)
    np.testing.assert_array_equal(back.x, tensor.x)
    assert sorted(zip(back.types, back.zones, back.persons, back.slots)) == sorted(
        zip(tensor.types, tensor.zones, tensor.persons, tensor.slots)
    )
    assert back.k_mode == "file"
    assert objective_from_tensor(back, scen.sd) == pytest.approx(objective_from_tensor(tensor, scen.sd))
    assert check_feasibility(back, scen.network, scen).ok
