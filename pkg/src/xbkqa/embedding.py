"""Minor embedding of logical Ising models into hardware graphs.

The heuristic grows one chain per logical variable: the chain root is the
node minimising the summed weighted distance to the chains of already placed
neighbours, and the chain is the union of the shortest paths back to them.
Node weights grow exponentially with the number of chains already using the
node, so repeated rip-up-and-reroute passes drive overlaps out.  Several
randomised attempts are made and the best (max chain length, then total
qubits) valid one is kept.
"""
from __future__ import annotations

import csv
import json
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .polyopt import IsingModel
from .topology import HardwareGraph, generate_graph

CHAIN_LENGTH_THRESHOLD = 8


class EmbeddingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Embedding:
    chains: Mapping[int, tuple[int, ...]]
    chain_strength: float
    family: str = ""
    size: int = 0
    seed: int | None = None

    @property
    def physical_nodes(self) -> tuple[int, ...]:
        return tuple(sorted(q for c in self.chains.values() for q in c))

    @property
    def lengths(self) -> list[int]:
        return [len(self.chains[v]) for v in sorted(self.chains)]

    def score(self) -> tuple[int, int]:
        ls = self.lengths
        return (max(ls, default=0), sum(ls))

    def with_chain_strength(self, cs: float) -> "Embedding":
        return Embedding(self.chains, cs, self.family, self.size, self.seed)

    def to_json(self) -> dict:
        return {
            "chains": {str(v): list(c) for v, c in sorted(self.chains.items())},
            "chain_strength": self.chain_strength,
            "family": self.family,
            "size": self.size,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Embedding":
        chains = {int(v): tuple(int(q) for q in c) for v, c in data["chains"].items()}
        return cls(chains, float(data["chain_strength"]), data.get("family", ""),
                   int(data.get("size", 0)), data.get("seed"))


def logical_edges(model: IsingModel) -> list[tuple[int, int]]:
    return sorted((i, j) for (i, j), v in model.J.items() if v != 0)


def default_chain_strength(model: IsingModel) -> float:
    top = model.max_abs_coefficient()
    return 2.0 * top if top > 0 else 1.0


# -- validation -------------------------------------------------------------------

def embedding_problems(e: Embedding, edges: Sequence[tuple[int, int]], hw: HardwareGraph,
                       variables: Sequence[int] | None = None) -> list[str]:
    """Structural violations; empty when the embedding is valid."""
    problems = []
    owner: dict[int, int] = {}
    for v, chain in e.chains.items():
        if not chain:
            problems.append(f"variable {v} has an empty chain")
            continue
        for q in chain:
            if not 0 <= q < hw.n_nodes:
                problems.append(f"variable {v} uses unknown node {q}")
            elif q in owner:
                problems.append(f"node {q} shared by variables {owner[q]} and {v}")
            else:
                owner[q] = v
        if not _connected(chain, hw):
            problems.append(f"chain of variable {v} is disconnected")
    for v in variables or ():
        if v not in e.chains:
            problems.append(f"variable {v} has no chain")
    for a, b in edges:
        if a not in e.chains or b not in e.chains:
            problems.append(f"coupling ({a},{b}) has an unembedded endpoint")
        elif _coupler(e.chains[a], e.chains[b], hw) is None:
            problems.append(f"coupling ({a},{b}) has no physical edge between its chains")
    if e.chain_strength <= 0:
        problems.append("chain strength must be positive")
    return problems


def validate_embedding(e: Embedding, logical: IsingModel, hw: HardwareGraph) -> None:
    problems = embedding_problems(e, logical_edges(logical), hw, range(logical.n_vars))
    if problems:
        raise EmbeddingError("; ".join(problems[:5]))


def _connected(chain: Sequence[int], hw: HardwareGraph) -> bool:
    nodes = set(chain)
    if not nodes:
        return False
    start = next(iter(nodes))
    seen = {start}
    todo = [start]
    while todo:
        q = todo.pop()
        for nb in hw.adjacency[q] & nodes:
            if nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return seen == nodes


def _coupler(ca: Sequence[int], cb: Sequence[int], hw: HardwareGraph) -> tuple[int, int] | None:
    """Lexicographically smallest physical edge (a in ca, b in cb)."""
    sb = set(cb)
    for a in sorted(ca):
        hits = hw.adjacency[a] & sb
        if hits:
            return a, min(hits)
    return None


# -- heuristic --------------------------------------------------------------------

_UNBOUNDED = 64


class _Router:
    """Chain placement state for one embedding attempt.

    ``usage[q]`` counts the chains holding qubit ``q``.  Qubit weights are
    ``base ** usage`` with ``base`` large enough that one extra overlap outweighs
    any amount of chain length, and qubits with ``usage >= bound`` are off
    limits altogether.
    """

    def __init__(self, hw: HardwareGraph, n_vars: int, edges, rng: np.random.Generator):
        self.hw = hw
        self.graph = hw.csr.copy()
        self.indices = self.graph.indices
        self.n = hw.n_nodes
        self.n_vars = n_vars
        self.nbrs: list[list[int]] = [[] for _ in range(n_vars)]
        for a, b in edges:
            self.nbrs[a].append(b)
            self.nbrs[b].append(a)
        self.rng = rng
        self.usage = np.zeros(self.n, dtype=np.int64)
        self.chains: dict[int, list[int]] = {}
        top_degree = max((len(x) for x in self.nbrs), default=1) or 1
        self.log2_margin = math.log2(top_degree * self.n)

    # -- bookkeeping
    def weights(self, bound: int) -> np.ndarray:
        top = max(int(self.usage.max(initial=0)), 1)
        base = 2.0 ** ((60.0 - self.log2_margin) / top)
        w = np.power(base, self.usage.astype(float))
        w[self.usage >= bound] = np.inf
        return w

    def remove(self, v: int) -> list[int]:
        chain = self.chains.pop(v, [])
        if chain:
            self.usage[chain] -= 1
        return chain

    def restore(self, v: int, chain: list[int]):
        self.remove(v)
        self.chains[v] = list(chain)
        self.usage[chain] += 1

    def overfill_stats(self) -> tuple[int, ...]:
        """Lexicographic badness: overlap histogram from the top, else chain-length histogram."""
        top = int(self.usage.max(initial=0))
        if top > 1:
            counts = np.bincount(self.usage, minlength=top + 1)
            return (1, top) + tuple(int(counts[k]) for k in range(top, 1, -1))
        lengths = np.bincount([len(c) for c in self.chains.values()])
        top_len = len(lengths) - 1
        return (0, top_len) + tuple(int(lengths[k]) for k in range(top_len, 0, -1))

    def snapshot(self) -> dict[int, list[int]]:
        return {v: list(c) for v, c in self.chains.items()}

    # -- placement
    def place(self, v: int, bound: int) -> bool:
        w = self.weights(bound)
        placed = [u for u in self.nbrs[v] if u in self.chains]
        if not placed:
            ok = np.isfinite(w)
            if not ok.any():
                return False
            free = np.flatnonzero(w == w[ok].min())
            self._commit(v, [int(self.rng.choice(free))], [])
            return True
        self.graph.data = w[self.indices]
        total = np.zeros(self.n)
        searches = []
        for u in placed:
            chain_u = self.chains[u]
            dist, pred, _ = dijkstra(self.graph, directed=True, indices=chain_u,
                                     min_only=True, return_predecessors=True)
            dist = dist.copy()
            dist[chain_u] = w[chain_u]
            total += dist
            searches.append((u, dist, pred, set(chain_u)))
        total[~np.isfinite(w)] = np.inf
        best = total.min()
        if not np.isfinite(best):
            return False
        root = int(self.rng.choice(np.flatnonzero(total <= best)))
        chain = [root]
        members = {root}
        segments = []
        for u, dist, pred, sources in searches:
            # attach at the chain node closest to u, then walk the path out to u
            attach = min(chain, key=lambda q: dist[q])
            seg = []
            q = attach
            if q not in sources:
                q = int(pred[q])
                while q >= 0 and q not in sources:
                    if q not in members:
                        members.add(q)
                        chain.append(q)
                        seg.append(q)
                    q = int(pred[q])
            segments.append((u, attach, seg))
        self._commit(v, chain, segments)
        return True

    def _commit(self, v: int, chain: list[int], segments):
        self.chains[v] = sorted(chain)
        self.usage[chain] += 1
        self.segments = segments

    def flip_back(self, v: int, target: int):
        """Hand the linking tail of each new path to the neighbour it reaches.

        Segments run from the attach point outwards, so giving away nodes from the
        far end keeps both chains connected.  ``target`` caps the receiving
        chain's length (0 for no cap).
        """
        anchors = {a for _, a, _ in self.segments}
        chain = set(self.chains[v])
        for u, _, seg in self.segments:
            give = []
            for q in reversed(seg):
                if q in anchors or (target and len(self.chains[u]) + len(give) >= target):
                    break
                give.append(q)
            if give:
                chain.difference_update(give)
                self.chains[u] = sorted(set(self.chains[u]).union(give))
        self.chains[v] = sorted(chain)

    def order(self) -> list[int]:
        """Breadth-first order from a random start, so neighbours land close together."""
        n = self.n_vars
        seen = [False] * n
        out = []
        for start in self.rng.permutation(n):
            if seen[start]:
                continue
            seen[start] = True
            todo = deque([int(start)])
            while todo:
                v = todo.popleft()
                out.append(v)
                for u in (self.rng.permutation(self.nbrs[v]) if self.nbrs[v] else ()):
                    if not seen[u]:
                        seen[u] = True
                        todo.append(int(u))
        return out


def _prune(chains: dict[int, list[int]], nbrs, hw: HardwareGraph) -> dict[int, list[int]]:
    """Drop leaf nodes that are not needed for connectivity or couplings."""
    chains = {v: list(c) for v, c in chains.items()}
    changed = True
    while changed:
        changed = False
        for v in sorted(chains):
            chain = chains[v]
            if len(chain) == 1:
                continue
            cset = set(chain)
            for q in sorted(chain):
                if len(cset) == 1 or len(hw.adjacency[q] & cset) != 1:
                    continue
                rest = [x for x in chain if x != q]
                if all(_coupler(rest, chains[u], hw) is not None for u in nbrs[v]):
                    chain = rest
                    cset.discard(q)
                    changed = True
            chains[v] = chain
    return chains


def _attempt(n_vars: int, edges, hw: HardwareGraph, rng: np.random.Generator,
             patience: int = 10, max_rounds: int = 200) -> dict[int, list[int]] | None:
    r = _Router(hw, n_vars, edges, rng)
    for v in r.order():
        if not r.place(v, _UNBOUNDED):
            return None
        r.flip_back(v, 0)
    best, best_stats = r.snapshot(), r.overfill_stats()

    def consider():
        nonlocal best, best_stats
        st = r.overfill_stats()
        if st < best_stats:
            best, best_stats = r.snapshot(), st
            return True
        return False

    # overlap removal: pushdown passes never let a chain's worst qubit get more crowded
    stale, pushback = patience, 0
    for _ in range(max_rounds):
        if best_stats[0] == 0 or not stale:
            break
        improved = False
        bounded = pushback < n_vars
        if not bounded:
            pushback -= 1
        for v in rng.permutation(n_vars):
            v = int(v)
            old = r.chains.get(v, [])
            bound = int(r.usage[old].max()) if (bounded and old) else _UNBOUNDED
            r.remove(v)
            if r.place(v, bound):
                r.flip_back(v, 0)
            else:
                pushback += 3
                r.restore(v, old)
            improved |= consider()
            if best_stats[0] == 0:
                break
        stale = patience if improved else stale - 1
        if improved:
            pushback = 0
    if best_stats[0] != 0:
        return None

    # chain shortening on free qubits only; a chain is never replaced by a longer one
    for v, c in list(r.chains.items()):
        r.restore(v, best[v])
    stale = patience
    while stale:
        improved = False
        target = best_stats[1]
        for v in rng.permutation(n_vars):
            v = int(v)
            old = r.chains[v]
            r.remove(v)
            if not r.place(v, 1) or len(r.chains[v]) > len(old):
                r.restore(v, old)
            else:
                r.flip_back(v, target)
            improved |= consider()
        stale = patience if improved else stale - 1
    return _prune(best, [r.nbrs[v] for v in range(n_vars)], hw)


def find_embedding(logical: IsingModel, hw: HardwareGraph, seed: int | None = 0, tries: int = 1,
                   patience: int = 10, chain_strength: float | None = None) -> Embedding:
    """Best valid embedding over ``tries`` randomised attempts."""
    edges = logical_edges(logical)
    cs = default_chain_strength(logical) if chain_strength is None else float(chain_strength)
    if logical.n_vars > hw.n_nodes:
        raise EmbeddingError(f"{logical.n_vars} variables cannot fit on {hw.n_nodes} qubits")
    rng = np.random.default_rng(seed)
    best: Embedding | None = None
    for _ in range(tries):
        chains = _attempt(logical.n_vars, edges, hw, rng, patience)
        if chains is None:
            continue
        cand = Embedding({v: tuple(sorted(c)) for v, c in sorted(chains.items())}, cs,
                         hw.family, hw.size, seed)
        if embedding_problems(cand, edges, hw, range(logical.n_vars)):
            continue
        if best is None or cand.score() < best.score():
            best = cand
    if best is None:
        raise EmbeddingError(f"no valid embedding into {hw.family}({hw.size}) after {tries} attempts")
    return best


def best_of(logical: IsingModel, hw: HardwareGraph, runs: int, seed: int = 0, **kw) -> list[Embedding]:
    """Independent single-attempt embeddings, one per derived seed (failures skipped)."""
    out = []
    for k in range(runs):
        try:
            out.append(find_embedding(logical, hw, seed=seed + k, **kw))
        except EmbeddingError:
            pass
    return out


# -- physical model ---------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalModel:
    """Embedded Ising model over the used hardware nodes, indexed ``0..len(nodes)-1``."""

    model: IsingModel
    nodes: tuple[int, ...]
    intra_chain_edges: int
    index: Mapping[int, int] = field(repr=False, default_factory=dict)


def embed_ising(logical: IsingModel, e: Embedding, hw: HardwareGraph) -> PhysicalModel:
    validate_embedding(e, logical, hw)
    nodes = e.physical_nodes
    index = {q: i for i, q in enumerate(nodes)}
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    for v in range(logical.n_vars):
        chain = e.chains[v]
        hv = logical.h.get(v, 0.0)
        if hv:
            for q in chain:
                h[index[q]] = h.get(index[q], 0.0) + hv / len(chain)
    intra = 0
    for v in range(logical.n_vars):
        cset = set(e.chains[v])
        for q in e.chains[v]:
            for nb in hw.adjacency[q] & cset:
                if q < nb:
                    J[(index[q], index[nb])] = -e.chain_strength
                    intra += 1
    for (a, b), val in logical.J.items():
        if val == 0:
            continue
        pa, pb = _coupler(e.chains[a], e.chains[b], hw)
        key = (min(index[pa], index[pb]), max(index[pa], index[pb]))
        J[key] = J.get(key, 0.0) + val
    model = IsingModel.from_dicts(h, J, logical.offset, len(nodes))
    return PhysicalModel(model, nodes, intra, index)


@dataclass(frozen=True)
class ChainBreakStats:
    per_chain: dict[int, float]
    broken_fraction: float
    samples_with_breaks: int

    def to_json(self) -> dict:
        return {
            "per_chain": {str(k): v for k, v in self.per_chain.items()},
            "broken_fraction": self.broken_fraction,
            "samples_with_breaks": self.samples_with_breaks,
        }


def unembed(samples: np.ndarray, e: Embedding, logical: IsingModel,
            phys: PhysicalModel) -> tuple[np.ndarray, ChainBreakStats]:
    """Majority-vote chains back to logical spins.

    Ties are settled one variable at a time (ascending index) by the sign that
    lowers the logical energy given the variables already fixed, then -1.
    """
    samples = np.atleast_2d(np.asarray(samples))
    if samples.shape[1] != len(phys.nodes):
        raise EmbeddingError(f"samples have {samples.shape[1]} columns, embedding uses {len(phys.nodes)} qubits")
    n = logical.n_vars
    out = np.zeros((samples.shape[0], n), dtype=np.int8)
    broken = np.zeros((samples.shape[0], n), dtype=bool)
    votes = np.zeros((samples.shape[0], n))
    for v in range(n):
        cols = [phys.index[q] for q in e.chains[v]]
        block = samples[:, cols]
        votes[:, v] = block.sum(axis=1)
        broken[:, v] = np.abs(votes[:, v]) != len(cols)
    out[:] = np.sign(votes).astype(np.int8)
    ties = np.argwhere(out == 0)
    if len(ties):
        nbr: dict[int, list[tuple[int, float]]] = {}
        for (a, b), val in logical.J.items():
            nbr.setdefault(a, []).append((b, val))
            nbr.setdefault(b, []).append((a, val))
        for s, v in ties:
            field_v = logical.h.get(int(v), 0.0) + sum(val * out[s, u] for u, val in nbr.get(int(v), ()))
            out[s, v] = 1 if field_v < 0 else -1
    per_chain = {v: float(broken[:, v].mean()) for v in range(n)}
    stats = ChainBreakStats(per_chain, float(broken.mean()) if broken.size else 0.0,
                            int(broken.any(axis=1).sum()))
    return out, stats


def chain_stats(e: Embedding, threshold: int = CHAIN_LENGTH_THRESHOLD) -> dict:
    ls = e.lengths
    n_phys = sum(ls)
    return {
        "max_length": max(ls, default=0),
        "mean_length": n_phys / len(ls) if ls else 0.0,
        "histogram": dict(sorted(Counter(ls).items())),
        "physical_qubit_count": n_phys,
        "logical_qubit_count": len(ls),
        "overhead_ratio": n_phys / len(ls) if ls else 0.0,
        "unreliable": max(ls, default=0) >= threshold,
    }


def write_embedding_json(e: Embedding, path: str | Path) -> None:
    Path(path).write_text(json.dumps(e.to_json(), indent=1))


def read_embedding_json(path: str | Path) -> Embedding:
    return Embedding.from_json(json.loads(Path(path).read_text()))


STATS_FIELDS = ("label", "family", "size", "seed", "max_length", "mean_length",
                "physical_qubit_count", "logical_qubit_count", "overhead_ratio", "unreliable")


def write_stats_csv(rows: Sequence[Mapping], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=STATS_FIELDS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def hardware_for(family: str, size: int | None = None) -> HardwareGraph:
    return generate_graph(family, size)
