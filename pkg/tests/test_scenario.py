import numpy as np
import pytest

from sdfl.errors import ConfigError, InvalidBudgetError
from sdfl.scenario import (
    build_scenario,
    derive_stream,
    load_scenario,
    parse_config_text,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    stream_for,
)

BASE = """
[network]
kind = complete
n = 12
population_low = {lo}
population_high = {hi}
[budgets]
grocery = 3
medicine = 2
[sd]
A = 10
b = 0.5
gamma = 4
gamma.medicine.3 = 6
[queue]
mean_interarrival = 1
mean_service = 0.7
[seed]
master_seed = 99
"""


def cfg(lo=1000, hi=2000):
    return parse_config_text(BASE.format(lo=lo, hi=hi))


def test_populations_in_interval_and_uniform_demand():
    s = build_scenario(cfg())
    assert all(1000 <= p <= 2000 for p in s.populations)
    assert s.demands == (s.populations, s.populations)
    assert s.facility_types == ("grocery", "medicine")
    assert s.budgets == (3, 2)
    assert s.total_demand(0) == sum(s.populations)


def test_degenerate_interval():
    s = build_scenario(cfg(5, 5))
    assert set(s.populations) == {5}


def test_same_seed_same_scenario():
    assert build_scenario(cfg()) == build_scenario(cfg())
    assert build_scenario(cfg(), master_seed=100) != build_scenario(cfg())


def test_gamma_override():
    s = build_scenario(cfg())
    assert s.sd.gamma_for(1, 3) == 6
    assert s.sd.gamma_for(0, 3) == 4


def test_budget_exceeding_n():
    with pytest.raises(InvalidBudgetError):
        build_scenario(parse_config_text(BASE.format(lo=1, hi=2).replace("grocery = 3", "grocery = 13")))


@pytest.mark.parametrize(
    "text, match",
    [
        ("[network]\nkind = complete\nn = 4\ncolour = red\n[budgets]\na = 1\n", "unknown key"),
        ("[weather]\nsun = 1\n", "unknown section"),
        ("[network]\nkind = complete\nn = 4\n", "budgets"),
        ("[network]\nkind = complete\nn = four\n[budgets]\na = 1\n", "bad value"),
        ("[network]\nkind = blob\n[budgets]\na = 1\n", "unknown network kind"),
        ("no section header", "malformed"),
    ],
)
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        build_scenario(parse_config_text(text))


def test_round_trip(tmp_path):
    s = build_scenario(cfg())
    assert scenario_from_dict(scenario_to_dict(s)) == s
    save_scenario(s, tmp_path / "s.json")
    assert load_scenario(tmp_path / "s.json") == s


def test_streams_deterministic_and_distinct():
    s = build_scenario(cfg())
    a1 = derive_stream(s, "arrivals", 3).random(5)
    a2 = derive_stream(s, "arrivals", 3).random(5)
    b = derive_stream(s, "service", 3).random(5)
    np.testing.assert_array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    runs = [derive_stream(s, "run", r).random(3) for r in range(4)]
    assert len({tuple(r) for r in runs}) == 4
    np.testing.assert_array_equal(runs[2], derive_stream(s, "run", 2).random(3))


def test_stream_is_documented_construction():
    import hashlib

    h = int.from_bytes(hashlib.blake2b(b"run", digest_size=8).digest(), "little")
    ref = np.random.Generator(np.random.PCG64(np.random.SeedSequence(5, spawn_key=(h, 2))))
    np.testing.assert_array_equal(stream_for(5, "run", 2).random(4), ref.random(4))
