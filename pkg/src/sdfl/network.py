"""Road networks: construction, synthetic topologies, and distance queries.

Zones are integers ``0..n-1``. A :class:`RoadNetwork` is immutable once built
and validates that it is simple, connected, and positively weighted.

Text format (``write_network`` / ``read_network``)::

    n m
    u v w        # m edge lines
    zone pop     # optional, one line per zone

Integral weights are written without a decimal point; other weights use
Python's shortest round-tripping ``repr``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from sdfl.errors import InvalidSizeError, NetworkError

Edge = tuple[int, int, float]


@dataclass(frozen=True)
class WeightSpec:
    """Edge-weight distribution for generated networks."""

    kind: str = "unit"
    lo: float = 1.0
    hi: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("unit", "uniform"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "uniform" and not (0 < self.lo <= self.hi):
            raise ValueError(f"uniform weights need 0 < lo <= hi, got ({self.lo}, {self.hi})")

    @classmethod
    def parse(cls, text: str) -> WeightSpec:
        """Parse ``unit`` or ``uniform(lo, hi)``."""
        text = text.strip().lower().replace(" ", "")
        if text == "unit":
            return cls()
        if text.startswith("uniform(") and text.endswith(")"):
            parts = text[len("uniform(") : -1].split(",")
            if len(parts) == 2:
                return cls("uniform", float(parts[0]), float(parts[1]))
        raise ValueError(f"cannot parse weight spec {text!r}; expected 'unit' or 'uniform(lo,hi)'")

    def __str__(self) -> str:
        if self.kind == "unit":
            return "unit"
        return f"uniform({self.lo!r},{self.hi!r})"

    def sample(self, count: int, rng: np.random.Generator | None) -> list[float]:
        if self.kind == "unit":
            return [1.0] * count
        if rng is None:
            raise ValueError("uniform weights require an rng stream")
        return [float(w) for w in rng.uniform(self.lo, self.hi, size=count)]


@dataclass(frozen=True)
class RoadNetwork:
    """Weighted undirected road network over zones ``0..n-1``.

    ``populations`` is ``None`` until a scenario fills it in.
    """

    n: int
    edges: tuple[Edge, ...]
    populations: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidSizeError(f"network needs at least one zone, got n={self.n}")
        seen: set[tuple[int, int]] = set()
        for u, v, w in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise NetworkError(f"edge ({u}, {v}) references a zone outside 0..{self.n - 1}")
            if u == v:
                raise NetworkError(f"self-loop at zone {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise NetworkError(f"parallel edge between {key[0]} and {key[1]}")
            seen.add(key)
            if not (w > 0 and math.isfinite(w)):
                raise NetworkError(f"edge ({u}, {v}) has non-positive weight {w}")
        if self.populations is not None:
            if len(self.populations) != self.n:
                raise NetworkError(
                    f"{len(self.populations)} populations given for {self.n} zones"
                )
            if any(p < 1 for p in self.populations):
                raise NetworkError("every zone population must be >= 1")
        if self.n > 1:
            ncomp, _ = connected_components(self.adjacency, directed=False)
            if ncomp != 1:
                raise NetworkError(f"network is disconnected ({ncomp} components)")

    @property
    def zones(self) -> range:
        return range(self.n)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> csr_matrix:
        if not self.edges:
            return csr_matrix((self.n, self.n))
        u, v, w = zip(*self.edges)
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.concatenate([w, w]).astype(float)
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def degree(self, zone: int) -> int:
        return int(self.adjacency.indptr[zone + 1] - self.adjacency.indptr[zone])

    def neighbors(self, zone: int) -> list[int]:
        """Zones sharing an edge with ``zone``."""
        a = self.adjacency
        return sorted(int(z) for z in a.indices[a.indptr[zone] : a.indptr[zone + 1]])

    def with_populations(self, populations: Iterable[int]) -> RoadNetwork:
        return RoadNetwork(self.n, self.edges, tuple(int(p) for p in populations))

    def distance_matrix(self, sources: Iterable[int] | None = None) -> np.ndarray:
        """Shortest-path distances from ``sources`` (all zones by default)."""
        idx = None if sources is None else np.asarray(list(sources), dtype=int)
        dist = dijkstra(self.adjacency, directed=False, indices=idx)
        return np.atleast_2d(dist)

    @cached_property
    def diameter(self) -> float:
        if self.n == 1:
            return 0.0
        return float(self.distance_matrix().max())


def generate_complete(
    n: int, weight_spec: WeightSpec | None = None, rng: np.random.Generator | None = None
) -> RoadNetwork:
    """Complete network on ``n`` zones with ``n(n-1)/2`` edges."""
    if n < 2:
        raise InvalidSizeError(f"complete network needs n >= 2, got {n}")
    weight_spec = weight_spec or WeightSpec()
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    weights = weight_spec.sample(len(pairs), rng)
    return RoadNetwork(n, tuple((u, v, w) for (u, v), w in zip(pairs, weights)))


def generate_grid(
    rows: int,
    cols: int,
    weight_spec: WeightSpec | None = None,
    rng: np.random.Generator | None = None,
    neighborhood: str = "moore",
) -> RoadNetwork:
    """Rectangular grid with cell ``(i, j)`` stored as zone ``i * cols + j``.

    ``neighborhood="moore"`` joins cells with ``|di| <= 1`` and ``|dj| <= 1``
    (diagonals included); ``"von_neumann"`` keeps only the four axis moves.
    """
    if rows < 2 or cols < 2:
        raise InvalidSizeError(f"grid needs rows, cols >= 2, got {rows}x{cols}")
    if neighborhood == "moore":
        offsets = [(0, 1), (1, -1), (1, 0), (1, 1)]
    elif neighborhood == "von_neumann":
        offsets = [(0, 1), (1, 0)]
    else:
        raise ValueError(f"unknown neighborhood {neighborhood!r}")
    weight_spec = weight_spec or WeightSpec()
    pairs = []
    for i in range(rows):
        for j in range(cols):
            for di, dj in offsets:
                ii, jj = i + di, j + dj
                if 0 <= ii < rows and 0 <= jj < cols:
                    pairs.append((i * cols + j, ii * cols + jj))
    weights = weight_spec.sample(len(pairs), rng)
    return RoadNetwork(rows * cols, tuple((u, v, w) for (u, v), w in zip(pairs, weights)))


def shortest_distances(net: RoadNetwork, source: int) -> dict[int, float]:
    """Exact single-source shortest-path distances from ``source``."""
    if not 0 <= source < net.n:
        raise NetworkError(f"zone {source} not in network")
    row = net.distance_matrix([source])[0]
    if not np.all(np.isfinite(row)):
        unreachable = int(np.flatnonzero(~np.isfinite(row))[0])
        raise NetworkError(f"zone {unreachable} unreachable from {source}")
    return {z: float(d) for z, d in enumerate(row)}


def neighbors_within(net: RoadNetwork, v: int, d: float) -> set[int]:
    """Zones other than ``v`` whose distance from ``v`` is strictly below ``d``."""
    if d <= 0:
        raise ValueError(f"distance bound must be positive, got {d}")
    dist = shortest_distances(net, v)
    return {u for u, du in dist.items() if u != v and du < d}


def _fmt_weight(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def write_network(net: RoadNetwork, path: str | Path) -> None:
    lines = [f"{net.n} {net.m}"]
    lines += [f"{u} {v} {_fmt_weight(w)}" for u, v, w in net.edges]
    if net.populations is not None:
        lines += [f"{z} {p}" for z, p in enumerate(net.populations)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_network(path: str | Path) -> RoadNetwork:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise NetworkError(f"{path}: missing 'n m' header")
    n, m = int(rows[0][0]), int(rows[0][1])
    if len(rows) < 1 + m:
        raise NetworkError(f"{path}: expected {m} edge lines, found {len(rows) - 1}")
    edges = []
    for parts in rows[1 : 1 + m]:
        if len(parts) != 3:
            raise NetworkError(f"{path}: malformed edge line {' '.join(parts)!r}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    pop_rows = rows[1 + m :]
    populations = None
    if pop_rows:
        if len(pop_rows) != n:
            raise NetworkError(f"{path}: expected {n} population lines, found {len(pop_rows)}")
        by_zone = {int(z): int(p) for z, p in pop_rows}
        populations = tuple(by_zone[z] for z in range(n))
    return RoadNetwork(n, tuple(edges), populations)
