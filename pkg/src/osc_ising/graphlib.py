"""Unweighted graphs, cut/Ising-energy evaluation and an exact MaxCut oracle.

Every edge carries coupling J_ij = -1, so the Ising energy of a spin
assignment reduces to ``H = sum_{(i,j) in E} s_i s_j`` and a cut relates to it
through ``cut = (|E| - H) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable

import numpy as np

MAX_ORACLE_NODES = 24


class GraphFormatError(ValueError):
    """Raised for malformed graph files or invalid edge lists."""


@dataclass(frozen=True, init=False)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    Edges are stored canonicalized (``u < v``) and sorted, so two graphs with
    the same edge set compare equal.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise GraphFormatError(f"node count must be positive, got {n}")
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphFormatError(f"self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) has endpoint outside [0, {n})")
            e = (u, v) if u < v else (v, u)
            if e in seen:
                raise GraphFormatError(f"duplicate edge {e}")
            seen.add(e)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` integer array."""
        return np.array(self.edges, dtype=np.int64).reshape(-1, 2)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        return a

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def density(self) -> float:
        pairs = self.n * (self.n - 1) / 2
        return self.m / pairs if pairs else 0.0


@dataclass(frozen=True, eq=False)
class CutResult:
    spins: np.ndarray
    cut: int
    ising_energy: int
    residual_deg: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph(n, combinations(range(n), 2))


def gen_random(n: int, eta: float, seed: int) -> Graph:
    """Random graph with exactly ``round(eta * n(n-1)/2)`` edges.

    Edges are drawn uniformly without replacement from all node pairs, so the
    realized density equals ``eta`` up to rounding on every instance.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    pairs = list(combinations(range(n), 2))
    m = int(round(eta * len(pairs)))
    rng = np.random.default_rng(np.uint64(seed % 2**64))
    chosen = rng.choice(len(pairs), size=m, replace=False)
    return Graph(n, (pairs[k] for k in chosen))


def _check_spins(g: Graph, spins) -> np.ndarray:
    s = np.asarray(spins)
    if s.shape != (g.n,):
        raise ValueError(f"expected {g.n} spins, got shape {s.shape}")
    if not np.all(np.abs(s) == 1):
        raise ValueError("spins must be +1 or -1")
    return s.astype(np.int64)


def cut_value(g: Graph, spins) -> int:
    """Number of edges whose endpoints carry different spins."""
    s = _check_spins(g, spins)
    if g.m == 0:
        return 0
    e = g.edge_array()
    return int(np.count_nonzero(s[e[:, 0]] != s[e[:, 1]]))


def ising_energy(g: Graph, spins) -> int:
    """``-sum J_ij s_i s_j`` with ``J_ij = -1`` on every edge."""
    s = _check_spins(g, spins)
    if g.m == 0:
        return 0
    e = g.edge_array()
    return int(np.sum(s[e[:, 0]] * s[e[:, 1]]))


def cut_result(g: Graph, spins, residual_deg: float = 0.0) -> CutResult:
    s = _check_spins(g, spins)
    return CutResult(s, cut_value(g, s), ising_energy(g, s), residual_deg)


def brute_force_maxcut(g: Graph, chunk_bits: int = 20) -> CutResult:
    """Exact MaxCut by enumerating the ``2^(n-1)`` assignments with ``spins[0] = +1``.

    Among optimal assignments the lexicographically smallest spin vector is
    returned (with ``-1 < +1``).
    """
    n = g.n
    if n > MAX_ORACLE_NODES:
        raise ValueError(f"oracle limited to n <= {MAX_ORACLE_NODES}, got {n}")
    if n == 1 or g.m == 0:
        spins = np.full(n, -1, dtype=np.int64)
        spins[0] = 1
        return cut_result(g, spins)

    # node i >= 1 owns bit (n-1-i); bit set means spin +1, so integer order
    # equals lexicographic order of the spin vector
    shift = np.array([n - 1 - i for i in range(n)], dtype=np.int64)
    e = g.edge_array()
    total = 1 << (n - 1)
    step = 1 << min(chunk_bits, n - 1)
    best_cut, best_x = -1, 0
    for start in range(0, total, step):
        x = np.arange(start, min(start + step, total), dtype=np.int64)
        cuts = np.zeros(x.shape, dtype=np.int32)
        for u, v in e:
            bu = np.ones_like(x) if u == 0 else (x >> shift[u]) & 1
            bv = np.ones_like(x) if v == 0 else (x >> shift[v]) & 1
            cuts += (bu ^ bv).astype(np.int32)
        k = int(np.argmax(cuts))
        if cuts[k] > best_cut:
            best_cut, best_x = int(cuts[k]), int(x[k])
    spins = np.empty(n, dtype=np.int64)
    spins[0] = 1
    for i in range(1, n):
        spins[i] = 1 if (best_x >> int(shift[i])) & 1 else -1
    return cut_result(g, spins)


def save_graph(g: Graph, path) -> None:
    lines = [f"{g.n} {g.m}"] + [f"{u} {v}" for u, v in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_graph(text: str) -> Graph:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected two integers, got {line!r}")
        try:
            rows.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer field in {line!r}") from None
    if not rows:
        raise GraphFormatError("missing 'n m' header")
    (n, m), body = rows[0], rows[1:]
    if n < 1 or m < 0:
        raise GraphFormatError(f"bad header 'n m' = {n} {m}")
    if len(body) != m:
        raise GraphFormatError(f"header declares {m} edges, found {len(body)}")
    return Graph(n, body)


def load_graph(path) -> Graph:
    return parse_graph(Path(path).read_text())
