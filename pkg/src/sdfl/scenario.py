"""Problem parameters, configuration parsing, and reproducible random streams.

Random streams
--------------
Every consumer of randomness asks for its own generator with
:func:`stream_for` (or :func:`derive_stream`). A stream is a numpy ``PCG64``
generator seeded by ``SeedSequence(master_seed, spawn_key=(label_hash, *keys))``
where ``label_hash`` is the first 8 bytes (little endian) of the BLAKE2b digest
of the UTF-8 label. The same ``(seed, label, keys)`` always reproduces the same
sequence, and distinct keys give independent streams.

Configuration
-------------
INI-style text read with :mod:`configparser`. Recognized sections and keys::

    [network]  kind = complete | grid
               n = 60                      ; complete only
               rows = 10, cols = 10        ; grid only
               neighborhood = moore | von_neumann
               weights = unit | uniform(lo,hi)
               population_low = 1000
               population_high = 2000
               demand_multiplicity = 1
    [budgets]  <type name> = <count>       ; one key per facility type, in order
    [sd]       A = 10, b = 0.5, gamma = 4, mode = linear | exponential
               clamp = false               ; floor scores at 0
               gamma.<type>.<zone> = <int> ; optional per-facility override
    [queue]    mean_interarrival = 1.0, mean_service = 0.7
               horizon = until_all_served | <minutes>
               time_slot = 1.0
    [seed]     master_seed = 12345

Unknown sections or keys raise :class:`~sdfl.errors.ConfigError`.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from sdfl.errors import ConfigError, InvalidBudgetError, SdflError
from sdfl.network import RoadNetwork, WeightSpec, generate_complete, generate_grid

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20210509
SEED_ENV_VAR = "SDFL_SEED"


def _label_hash(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little")


def stream_for(master_seed: int, label: str, *keys: int) -> np.random.Generator:
    """Deterministic child generator keyed by ``(master_seed, label, *keys)``."""
    if any(k < 0 for k in keys):
        raise ValueError(f"stream keys must be non-negative, got {keys}")
    seq = np.random.SeedSequence(master_seed, spawn_key=(_label_hash(label), *keys))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class SdParams:
    """Parameters of the social-distancing score.

    ``gamma_overrides`` maps ``(type_index, zone)`` to a facility-specific
    queue threshold; every other facility uses ``gamma``.
    """

    A: float = 10.0
    b: float = 0.5
    gamma: int = 4
    mode: str = "linear"
    clamp: bool = False
    gamma_overrides: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in ("linear", "exponential"):
            raise ValueError(f"unknown social-distancing mode {self.mode!r}")
        if not (self.A > 0 and self.b > 0):
            raise ValueError(f"A and b must be positive, got A={self.A}, b={self.b}")
        if self.mode == "exponential" and not self.A > 1:
            raise ValueError(f"exponential mode requires A > 1, got {self.A}")
        for g in (self.gamma, *self.gamma_overrides.values()):
            if int(g) != g or g < 1:
                raise ValueError(f"gamma must be a positive integer, got {g}")

    def gamma_for(self, type_index: int, zone: int) -> int:
        return int(self.gamma_overrides.get((type_index, zone), self.gamma))


@dataclass(frozen=True)
class QueueParams:
    """Arrival/service means in minutes; ``horizon=None`` runs until every
    customer is served, otherwise arrivals after ``horizon`` are dropped."""

    mean_interarrival: float = 1.0
    mean_service: float = 0.7
    horizon: float | None = None

    def __post_init__(self) -> None:
        if not (self.mean_interarrival > 0 and self.mean_service > 0):
            raise ValueError("queue means must be strictly positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError(f"fixed horizon must be positive, got {self.horizon}")


@dataclass(frozen=True)
class Scenario:
    network: RoadNetwork
    facility_types: tuple[str, ...]
    budgets: tuple[int, ...]
    demands: tuple[tuple[int, ...], ...]
    sd: SdParams = field(default_factory=SdParams)
    queue: QueueParams = field(default_factory=QueueParams)
    time_slot: float = 1.0
    master_seed: int = DEFAULT_SEED
    demand_multiplicity: int = 1

    def __post_init__(self) -> None:
        n = self.network.n
        k = len(self.facility_types)
        if k == 0:
            raise ConfigError("at least one facility type is required")
        if len(set(self.facility_types)) != k:
            raise ConfigError(f"duplicate facility type names in {self.facility_types}")
        if len(self.budgets) != k or len(self.demands) != k:
            raise ConfigError("budgets and demands need one entry per facility type")
        if self.network.populations is None:
            raise ConfigError("scenario network has no populations")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if not self.time_slot > 0:
            raise ConfigError(f"time_slot must be positive, got {self.time_slot}")
        for name, ell in zip(self.facility_types, self.budgets):
            if not 1 <= ell <= n:
                raise InvalidBudgetError(f"budget for {name!r} is {ell}; must lie in 1..{n}")
            if ell > n / 2:
                logger.warning("budget %d for %r exceeds half of the %d zones", ell, name, n)
        for name, row in zip(self.facility_types, self.demands):
            if len(row) != n:
                raise ConfigError(f"demand row for {name!r} has {len(row)} entries, expected {n}")
            for z, (dem, pop) in enumerate(zip(row, self.network.populations)):
                if not 0 <= dem <= pop * self.demand_multiplicity:
                    raise ConfigError(
                        f"demand {dem} for {name!r} at zone {z} outside 0..{pop * self.demand_multiplicity}"
                    )

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def populations(self) -> tuple[int, ...]:
        assert self.network.populations is not None
        return self.network.populations

    @property
    def k(self) -> int:
        return len(self.facility_types)

    def total_demand(self, type_index: int) -> int:
        return sum(self.demands[type_index])

    def type_index(self, name: str) -> int:
        try:
            return self.facility_types.index(name)
        except ValueError:
            raise ConfigError(f"unknown facility type {name!r}") from None

    def with_budgets(self, budgets: int | tuple[int, ...]) -> Scenario:
        """Copy with new budgets (an int applies to every type)."""
        if isinstance(budgets, int):
            budgets = (budgets,) * self.k
        return replace(self, budgets=tuple(budgets))

    def with_seed(self, master_seed: int) -> Scenario:
        return replace(self, master_seed=master_seed)


def derive_stream(scenario: Scenario, label: str, index: int = 0) -> np.random.Generator:
    """Child stream keyed by ``(scenario.master_seed, label, index)``."""
    return stream_for(scenario.master_seed, label, index)


# -- configuration -----------------------------------------------------------

_SCHEMA: dict[str, set[str]] = {
    "network": {
        "kind", "n", "rows", "cols", "neighborhood", "weights",
        "population_low", "population_high", "demand_multiplicity",
    },
    "budgets": set(),  # free-form: one key per facility type
    "sd": {"a", "b", "gamma", "mode", "clamp"},
    "queue": {"mean_interarrival", "mean_service", "horizon", "time_slot"},
    "seed": {"master_seed"},
}


def parse_config_text(text: str) -> dict[str, dict[str, str]]:
    """Parse INI text into ``{section: {key: value}}`` with schema checks.

    Budget keys keep their case; all other keys are lower-cased.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        values = {}
        for key, value in parser.items(section):
            k = key if sec == "budgets" or key.lower().startswith("gamma.") else key.lower()
            if sec == "sd" and k.lower().startswith("gamma."):
                k = "gamma." + k[len("gamma."):]
            elif _SCHEMA[sec] and k not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[k] = value.strip()
        out[sec] = values
    return out


def load_config(path: str | Path) -> dict[str, dict[str, str]]:
    return parse_config_text(Path(path).read_text())


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _get(section: Mapping[str, str], key: str, cast, default=None, where: str = ""):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required key {key!r} in [{where}]")
        return default
    try:
        return cast(section[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r} in [{where}]: {section[key]!r}") from exc


def build_network(net_cfg: Mapping[str, str], master_seed: int) -> RoadNetwork:
    """Build the (population-free) network described by a ``[network]`` section."""
    kind = _get(net_cfg, "kind", str, "complete", "network")
    try:
        weights = WeightSpec.parse(net_cfg.get("weights", "unit"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rng = stream_for(master_seed, "network")
    if kind == "complete":
        return generate_complete(_get(net_cfg, "n", int, where="network"), weights, rng)
    if kind == "grid":
        return generate_grid(
            _get(net_cfg, "rows", int, where="network"),
            _get(net_cfg, "cols", int, where="network"),
            weights,
            rng,
            neighborhood=net_cfg.get("neighborhood", "moore"),
        )
    raise ConfigError(f"unknown network kind {kind!r}")


def build_scenario(config: Mapping[str, Mapping[str, str]], master_seed: int | None = None) -> Scenario:
    """Build a scenario from parsed configuration.

    Populations are drawn uniformly from ``[population_low, population_high]``
    and every facility type gets demand equal to the zone population.
    ``master_seed`` overrides the ``[seed]`` section when given.
    """
    try:
        return _build_scenario(config, master_seed)
    except SdflError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _build_scenario(config: Mapping[str, Mapping[str, str]], master_seed: int | None) -> Scenario:
    net_cfg = config.get("network", {})
    if master_seed is None:
        master_seed = _get(config.get("seed", {}), "master_seed", int, DEFAULT_SEED, "seed")
    net = build_network(net_cfg, master_seed)

    lo = _get(net_cfg, "population_low", int, 1000, "network")
    hi = _get(net_cfg, "population_high", int, 2000, "network")
    if not 1 <= lo <= hi:
        raise ConfigError(f"population interval [{lo}, {hi}] must satisfy 1 <= low <= high")
    pops = stream_for(master_seed, "population").integers(lo, hi, size=net.n, endpoint=True)
    net = net.with_populations(int(p) for p in pops)

    budgets_cfg = config.get("budgets", {})
    if not budgets_cfg:
        raise ConfigError("[budgets] must name at least one facility type")
    types = tuple(budgets_cfg)
    budgets = tuple(_get(budgets_cfg, t, int, where="budgets") for t in types)

    sd_cfg = dict(config.get("sd", {}))
    overrides = {}
    for key in [k for k in sd_cfg if k.startswith("gamma.")]:
        parts = key.split(".")
        if len(parts) != 3 or parts[1] not in types:
            raise ConfigError(f"gamma override {key!r} must look like gamma.<type>.<zone>")
        zone = int(parts[2])
        if not 0 <= zone < net.n:
            raise ConfigError(f"gamma override {key!r} names a zone outside 0..{net.n - 1}")
        overrides[(types.index(parts[1]), zone)] = int(sd_cfg.pop(key))
    sd = SdParams(
        A=_get(sd_cfg, "a", float, 10.0, "sd"),
        b=_get(sd_cfg, "b", float, 0.5, "sd"),
        gamma=_get(sd_cfg, "gamma", int, 4, "sd"),
        mode=_get(sd_cfg, "mode", str, "linear", "sd"),
        clamp=_get(sd_cfg, "clamp", _parse_bool, False, "sd"),
        gamma_overrides=overrides,
    )

    q_cfg = config.get("queue", {})
    horizon_text = q_cfg.get("horizon", "until_all_served").strip().lower()
    horizon = None if horizon_text == "until_all_served" else float(horizon_text)
    queue = QueueParams(
        mean_interarrival=_get(q_cfg, "mean_interarrival", float, 1.0, "queue"),
        mean_service=_get(q_cfg, "mean_service", float, 0.7, "queue"),
        horizon=horizon,
    )

    if any(b > net.n for b in budgets):
        raise InvalidBudgetError(f"budgets {budgets} exceed the {net.n} zones")
    return Scenario(
        network=net,
        facility_types=types,
        budgets=budgets,
        demands=tuple(tuple(net.populations) for _ in types),  # type: ignore[arg-type]
        sd=sd,
        queue=queue,
        time_slot=_get(q_cfg, "time_slot", float, 1.0, "queue"),
        master_seed=master_seed,
        demand_multiplicity=_get(net_cfg, "demand_multiplicity", int, 1, "network"),
    )


# -- serialization -----------------------------------------------------------


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    return {
        "network": {
            "n": s.network.n,
            "edges": [[u, v, w] for u, v, w in s.network.edges],
            "populations": list(s.populations),
        },
        "facility_types": list(s.facility_types),
        "budgets": list(s.budgets),
        "demands": [list(row) for row in s.demands],
        "sd": {
            "A": s.sd.A,
            "b": s.sd.b,
            "gamma": s.sd.gamma,
            "mode": s.sd.mode,
            "clamp": s.sd.clamp,
            "gamma_overrides": [[i, j, g] for (i, j), g in sorted(s.sd.gamma_overrides.items())],
        },
        "queue": {
            "mean_interarrival": s.queue.mean_interarrival,
            "mean_service": s.queue.mean_service,
            "horizon": s.queue.horizon,
        },
        "time_slot": s.time_slot,
        "master_seed": s.master_seed,
        "demand_multiplicity": s.demand_multiplicity,
    }


def scenario_from_dict(d: Mapping[str, Any]) -> Scenario:
    try:
        net = RoadNetwork(
            int(d["network"]["n"]),
            tuple((int(u), int(v), float(w)) for u, v, w in d["network"]["edges"]),
            tuple(int(p) for p in d["network"]["populations"]),
        )
        sd = d["sd"]
        return Scenario(
            network=net,
            facility_types=tuple(d["facility_types"]),
            budgets=tuple(int(b) for b in d["budgets"]),
            demands=tuple(tuple(int(x) for x in row) for row in d["demands"]),
            sd=SdParams(
                A=float(sd["A"]),
                b=float(sd["b"]),
                gamma=int(sd["gamma"]),
                mode=sd["mode"],
                clamp=bool(sd.get("clamp", False)),
                gamma_overrides={(int(i), int(j)): int(g) for i, j, g in sd.get("gamma_overrides", [])},
            ),
            queue=QueueParams(**d["queue"]),
            time_slot=float(d["time_slot"]),
            master_seed=int(d["master_seed"]),
            demand_multiplicity=int(d.get("demand_multiplicity", 1)),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed scenario document: {exc!r}") from exc


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=1) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    try:
        return scenario_from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not a scenario JSON document ({exc})") from exc
