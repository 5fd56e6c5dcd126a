"""Replica expansion of a qubit Hamiltonian into diagonal ratio problems.

``r`` replicas of an ``m``-qubit register each hold one computational basis
state; the signed sum of the replicas is the trial wavefunction.  With spin
variable ``s[i*m + k]`` the Z eigenvalue of qubit ``k`` in replica ``i``
(``+1`` for bit 0), matrix elements between replicas are polynomials:

    <b_i| I |b_j> -> (1 + s_i s_j) / 2        <b_i| X |b_j> -> (1 - s_i s_j) / 2
    <b_i| Z |b_j> -> (s_i + s_j) / 2          <b_i| Y |b_j> -> 1j (s_j - s_i) / 2

Sector ``p`` fixes the replica signs to ``p`` copies of -1 followed by
``r - p`` copies of +1, giving ``H'_p`` (energy numerator) and ``C_p`` (squared
norm).  The sector energy is ``min H'_p / C_p`` over assignments with
``C_p > 0``, found by Dinkelbach iteration on ``H'_p - lambda * C_p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .pauli import OperatorSum
from .polyopt import Polynomial, argmin_lex, energies, index_to_assignment


class XbkError(ValueError):
    pass


@dataclass(frozen=True)
class XbkConfig:
    r: int
    m: int
    lambda_tolerance: float = 1e-9
    max_lambda_iterations: int = 100
    lambda_init: float = 0.0

    def __post_init__(self):
        if self.r < 1:
            raise XbkError("replica count r must be >= 1")
        if self.m < 0:
            raise XbkError("qubit count m must be >= 0")

    @property
    def n_xbk_qubits(self) -> int:
        return self.r * self.m


def sign_vector(p: int, r: int) -> tuple[int, ...]:
    return tuple([-1] * p + [1] * (r - p))


@dataclass(frozen=True)
class XbkSector:
    p: int
    sign_vector: tuple[int, ...]
    h_prime: Polynomial
    c_p: Polynomial
    r: int
    m: int
    lam: float = 0.0

    def objective(self, lam: float | None = None) -> Polynomial:
        """``D_{p,lambda} = H'_p - lambda C_p`` (spin domain)."""
        lam = self.lam if lam is None else lam
        return self.h_prime - lam * self.c_p

    def replica_states(self, assignment: Sequence[int]) -> list[tuple[int, ...]]:
        """Basis bit-vector held by each replica of a spin assignment."""
        return [tuple((1 - int(assignment[i * self.m + k])) // 2 for k in range(self.m))
                for i in range(self.r)]

    def to_json(self, trace: Sequence[dict] | None = None) -> dict:
        return {
            "p": self.p,
            "sign_vector": list(self.sign_vector),
            "r": self.r,
            "m": self.m,
            "lambda": self.lam,
            "h_prime": self.h_prime.to_json(),
            "c_p": self.c_p.to_json(),
            "lambda_trace": list(trace or []),
        }


_I, _X, _Z, _Y = (0, 0), (1, 0), (0, 1), (1, 1)


def _pair_factor(kind: tuple[int, int], a: int, b: int, same: bool) -> dict[tuple[int, ...], complex]:
    """Matrix-element polynomial of one single-qubit Pauli between bra var ``a`` and ket var ``b``."""
    if same:
        if kind == _I:
            return {(): 1.0}
        if kind == _Z:
            return {(a,): 1.0}
        return {}
    ab = (a, b) if a < b else (b, a)
    if kind == _I:
        return {(): 0.5, ab: 0.5}
    if kind == _X:
        return {(): 0.5, ab: -0.5}
    if kind == _Z:
        return {(a,): 0.5, (b,): 0.5}
    return {(b,): 0.5j, (a,): -0.5j}


def _matrix_element_poly(h: OperatorSum, i: int, j: int, m: int) -> dict[tuple[int, ...], complex]:
    acc: dict[tuple[int, ...], complex] = {}
    same = i == j
    for (x, z), c in h.terms.items():
        cur: dict[tuple[int, ...], complex] = {(): c}
        for k in range(m):
            fac = _pair_factor(((x >> k) & 1, (z >> k) & 1), i * m + k, j * m + k, same)
            if not fac:
                cur = {}
                break
            nxt: dict[tuple[int, ...], complex] = {}
            for k1, c1 in cur.items():
                for k2, c2 in fac.items():
                    key = tuple(sorted(k1 + k2))
                    nxt[key] = nxt.get(key, 0) + c1 * c2
            cur = nxt
        for key, v in cur.items():
            acc[key] = acc.get(key, 0) + v
    return acc


def _real_poly(acc: dict[tuple[int, ...], complex], n: int, what: str) -> Polynomial:
    worst = max((abs(v.imag) for v in acc.values() if isinstance(v, complex)), default=0.0)
    if worst > 1e-9:
        raise XbkError(f"{what} has imaginary coefficients (max {worst:.3g})")
    return Polynomial({k: complex(v).real for k, v in acc.items()}, n, "spin")


def xbk_expand(h: OperatorSum, cfg: XbkConfig, sectors: Sequence[int] | None = None) -> list[XbkSector]:
    if h.n_qubits != cfg.m:
        raise XbkError(f"Hamiltonian acts on {h.n_qubits} qubits, config says m = {cfg.m}")
    if not h.is_hermitian(1e-10):
        raise XbkError("XBK expansion needs real Pauli coefficients")
    h = h.real()
    r, m = cfg.r, cfg.m
    n = r * m
    ident = OperatorSum.identity(m)
    # only the unordered pair matters up to conjugation; keep ordered pairs for Y terms
    pair_h = {(i, j): _matrix_element_poly(h, i, j, m) for i in range(r) for j in range(r)}
    pair_c = {(i, j): _matrix_element_poly(ident, i, j, m) for i in range(r) for j in range(r)}
    wanted = range(r // 2 + 1) if sectors is None else sectors
    out = []
    for p in wanted:
        if not 0 <= p <= r // 2:
            raise XbkError(f"sector p = {p} outside 0..{r // 2}")
        signs = sign_vector(p, r)
        acc_h: dict[tuple[int, ...], complex] = {}
        acc_c: dict[tuple[int, ...], complex] = {}
        for (i, j), poly in pair_h.items():
            w = signs[i] * signs[j]
            for k, v in poly.items():
                acc_h[k] = acc_h.get(k, 0) + w * v
            for k, v in pair_c[(i, j)].items():
                acc_c[k] = acc_c.get(k, 0) + w * v
        out.append(XbkSector(p, signs, _real_poly(acc_h, n, "H'_p"), _real_poly(acc_c, n, "C_p"),
                             r, m, cfg.lambda_init))
    return out


# -- solving ---------------------------------------------------------------------

class SolverBackend(Protocol):
    """Anything that proposes low-objective spin assignments.

    ``constraint`` is ``C_p``: assignments where it vanishes have undefined
    ratio and count as +inf; exact backends exclude them, sampling backends
    may return them and the caller discards them.
    """

    name: str
    exact: bool

    def minimize(self, objective: Polynomial, constraint: Polynomial | None = None,
                 seed: int | None = None) -> list[tuple[int, ...]]:
        ...


class ExactBackend:
    name = "exact"
    exact = True

    def __init__(self, cap: int = 24):
        self.cap = cap

    def minimize(self, objective, constraint=None, seed=None):
        e = energies(objective, self.cap)
        if constraint is not None:
            c = energies(constraint.with_n_vars(objective.n_vars), self.cap)
            e = np.where(c > 0.5, e, np.inf)
        idx = argmin_lex(e)
        return [index_to_assignment(idx, objective.n_vars, "spin")]


@dataclass
class SectorResult:
    p: int
    lambda_prime: float
    best_assignment: tuple[int, ...] | None
    iterations: int
    converged: bool
    valid: bool = True
    trace: list[dict] = field(default_factory=list)
    samples: list[tuple[int, ...]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "lambda_prime": self.lambda_prime,
            "best_assignment": list(self.best_assignment) if self.best_assignment else None,
            "iterations": self.iterations,
            "converged": self.converged,
            "valid": self.valid,
            "trace": self.trace,
        }


def solve_sector(sec: XbkSector, solver: SolverBackend, cfg: XbkConfig,
                 seed: int | None = None) -> SectorResult:
    """Dinkelbach iteration on ``H'_p - lambda C_p``."""
    lam = sec.lam
    best_ratio = math.inf
    best: tuple[int, ...] | None = None
    best_samples: list[tuple[int, ...]] = []
    trace: list[dict] = []
    converged = False
    it = 0
    for it in range(1, cfg.max_lambda_iterations + 1):
        obj = sec.objective(lam)
        cands = solver.minimize(obj, sec.c_p, None if seed is None else seed + it)
        scored = []
        for a in cands:
            cv = sec.c_p.evaluate(a)
            if cv > 0.5:
                hv = sec.h_prime.evaluate(a)
                scored.append((hv - lam * cv, hv / cv, tuple(a)))
        if not scored:
            if best is None:
                return SectorResult(sec.p, math.inf, None, it, False, False, trace)
            break
        dval, ratio, a = min(scored)
        trace.append({"iteration": it, "lambda": lam, "min_objective": dval, "ratio": ratio})
        if ratio < best_ratio:
            best_ratio, best = ratio, a
            best_samples = [s for _, _, s in scored]
        if abs(ratio - lam) < cfg.lambda_tolerance:
            converged = True
            break
        if not solver.exact and ratio >= best_ratio and it > 1 and ratio > lam:
            # heuristic minimizer found nothing below the current ratio
            converged = True
            break
        lam = ratio
    return SectorResult(sec.p, best_ratio, best, it, converged, True, trace, best_samples)


@dataclass
class XbkResult:
    energy: float
    best_sector: int
    sectors: list[SectorResult]
    r: int
    m: int

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.sectors if s.valid)

    def to_json(self) -> dict:
        return {
            "energy": self.energy,
            "best_sector": self.best_sector,
            "converged": self.converged,
            "r": self.r,
            "m": self.m,
            "n_xbk_qubits": self.r * self.m,
            "sectors": [s.to_json() for s in self.sectors],
        }


def ground_energy_xbk(h: OperatorSum, cfg: XbkConfig, solver: SolverBackend | None = None,
                      sectors: Sequence[int] | None = None, seed: int | None = None) -> XbkResult:
    solver = solver or ExactBackend()
    results = []
    for sec in xbk_expand(h, cfg, sectors):
        results.append(solve_sector(sec, solver, cfg, None if seed is None else seed + 1000 * sec.p))
    valid = [s for s in results if s.valid]
    if not valid:
        raise XbkError("every sector has zero norm")
    best = min(valid, key=lambda s: (s.lambda_prime, s.p))
    return XbkResult(best.lambda_prime, best.p, results, cfg.r, cfg.m)


# -- state reconstruction ----------------------------------------------------------

@dataclass(frozen=True)
class StateReconstruction:
    counts: dict[tuple[int, ...], int]
    signs: dict[tuple[int, ...], int]
    coefficients: dict[tuple[int, ...], float]
    conflicts: tuple[tuple[int, ...], ...] = ()

    def vector(self, m: int) -> np.ndarray:
        """Dense amplitude vector (qubit 0 most significant)."""
        out = np.zeros(1 << m)
        for bits, a in self.coefficients.items():
            out[sum(b << (m - 1 - k) for k, b in enumerate(bits))] = a
        return out


def reconstruct_state(samples: Sequence[Sequence[int]], sec: XbkSector) -> StateReconstruction:
    """Amplitudes ``a = b S / sqrt(sum b^2)`` from sign-weighted replica counts."""
    if not samples:
        raise XbkError("no samples to reconstruct from")
    weight: dict[tuple[int, ...], int] = {}
    seen_signs: dict[tuple[int, ...], set[int]] = {}
    for a in samples:
        for state, sgn in zip(sec.replica_states(a), sec.sign_vector):
            weight[state] = weight.get(state, 0) + sgn
            seen_signs.setdefault(state, set()).add(sgn)
    counts = {b: abs(w) for b, w in weight.items() if w != 0}
    signs = {b: (1 if weight[b] > 0 else -1) for b in counts}
    norm = math.sqrt(sum(c * c for c in counts.values()))
    if norm == 0:
        raise XbkError("replica signs cancel on every basis state")
    coeffs = {b: counts[b] * signs[b] / norm for b in counts}
    conflicts = tuple(sorted(b for b, s in seen_signs.items() if len(s) > 1))
    return StateReconstruction(counts, signs, coeffs, conflicts)
