"""Synthetic annealer hardware graphs (Chimera, Pegasus, Zephyr).

Nodes are relabelled to ``0..N-1`` in sorted coordinate order; the original
lattice coordinates are kept in ``HardwareGraph.coordinates``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable

import numpy as np
import scipy.sparse as sp

FAMILIES = ("chimera", "pegasus", "zephyr")
# sizes picked so the three families have a few hundred qubits each
DEFAULT_SIZES = {"chimera": 8, "pegasus": 6, "zephyr": 4}

_PEGASUS_OFFSETS = (
    (2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6),
    (6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10),
)


class TopologyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HardwareGraph:
    family: str
    size: int
    coordinates: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]
    tile: int = 4
    adjacency: tuple[frozenset[int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        adj: list[set[int]] = [set() for _ in self.coordinates]
        for a, b in self.edges:
            if a == b:
                raise TopologyError("self-loop in hardware graph")
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "adjacency", tuple(frozenset(s) for s in adj))

    @property
    def n_nodes(self) -> int:
        return len(self.coordinates)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency])

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adjacency[a]

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency matrix."""
        n = self.n_nodes
        if not self.edges:
            return sp.csr_matrix((n, n))
        e = np.array(self.edges)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    def summary(self) -> dict:
        d = self.degrees()
        return {
            "family": self.family,
            "size": self.size,
            "nodes": self.n_nodes,
            "edges": self.n_edges,
            "max_degree": int(d.max()) if len(d) else 0,
            "mean_degree": float(d.mean()) if len(d) else 0.0,
        }


def _relabel(family: str, size: int, coord_edges: Iterable[tuple[tuple, tuple]],
             extra_nodes: Iterable[tuple] = (), tile: int = 4) -> HardwareGraph:
    pairs = list(coord_edges)
    nodes = sorted({q for e in pairs for q in e} | set(extra_nodes))
    index = {q: i for i, q in enumerate(nodes)}
    edges = sorted({tuple(sorted((index[a], index[b]))) for a, b in pairs})
    return HardwareGraph(family, size, tuple(nodes), tuple(edges), tile)


def chimera_graph(m: int, n: int | None = None, t: int = 4) -> HardwareGraph:
    """``m x n`` grid of K_{t,t} cells; coordinates ``(row, col, side, k)``."""
    n = m if n is None else n
    edges = [((i, j, 0, a), (i, j, 1, b)) for i, j, a, b in product(range(m), range(n), range(t), range(t))]
    edges += [((i, j, 1, k), (i, j + 1, 1, k)) for i, j, k in product(range(m), range(n - 1), range(t))]
    edges += [((i, j, 0, k), (i + 1, j, 0, k)) for i, j, k in product(range(m - 1), range(n), range(t))]
    nodes = product(range(m), range(n), (0, 1), range(t))
    return _relabel("chimera", m, edges, nodes, t)


def pegasus_graph(m: int) -> HardwareGraph:
    """Fabric-only Pegasus lattice with the standard offsets; coordinates ``(u, w, k, z)``."""
    if m < 2:
        raise TopologyError("pegasus needs size >= 2")
    m1 = m - 1
    off0, off1 = _PEGASUS_OFFSETS
    start = (min(off1), min(off0))
    end = (12 - max(off1), 12 - max(off0))

    def krange(u, w, step=1):
        return range(start[u] if w == 0 else 0, 12 - (end[u] if w == m1 else 0), step)

    def ok(u, w, k, z):
        if w == 0:
            return k >= start[u]
        if w == m1:
            return k < 12 - end[u]
        return True

    edges = [((u, w, k, z), (u, w, k, z + 1))
             for u in (0, 1) for w in range(m) for k in krange(u, w) for z in range(m1 - 1)]
    edges += [((u, w, k, z), (u, w, k + 1, z))
              for u in (0, 1) for w in range(m) for k in krange(u, w, 2) for z in range(m1)]
    for w in range(m):
        for kk in range(12):
            for k in range(0 if w else off1[kk], 12 if w < m1 else off1[kk]):
                for z in range(m1):
                    a = (0, w, k, z)
                    b = (1, z + (kk < off0[k]), kk, w - (k < off1[kk]))
                    if ok(*a) and ok(*b):
                        edges.append((a, b))
    return _relabel("pegasus", m, edges, tile=12)


def zephyr_graph(m: int, t: int = 4) -> HardwareGraph:
    """Zephyr lattice ``Z(m, t)``; coordinates ``(u, w, k, j, z)``."""
    M = 2 * m + 1
    edges = [((u, w, k, j, z), (u, w, k, j, z + 1))
             for u, w, k, j, z in product((0, 1), range(M), range(t), (0, 1), range(m - 1))]
    edges += [((u, w, k, 0, z), (u, w, k, 1, z - a))
              for u, w, k, a in product((0, 1), range(M), range(t), (0, 1)) for z in range(a, m)]
    edges += [((0, 2 * w + 1 + a * (2 * i - 1), k, j, z), (1, 2 * z + 1 + b * (2 * j - 1), h, i, w))
              for w, z, h, k, i, j, a, b in product(range(m), range(m), range(t), range(t),
                                                    (0, 1), (0, 1), (0, 1), (0, 1))]
    nodes = product((0, 1), range(M), range(t), (0, 1), range(m))
    return _relabel("zephyr", m, edges, nodes, t)


def generate_graph(family: str, size: int | None = None) -> HardwareGraph:
    if family not in FAMILIES:
        raise TopologyError(f"unknown hardware family {family!r}; expected one of {FAMILIES}")
    size = DEFAULT_SIZES[family] if size is None else size
    if size < 1:
        raise TopologyError("size must be >= 1")
    if family == "chimera":
        return chimera_graph(size)
    if family == "pegasus":
        return pegasus_graph(size)
    return zephyr_graph(size)
