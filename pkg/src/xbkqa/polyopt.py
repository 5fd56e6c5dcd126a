"""Pseudo-Boolean polynomials: HUBO/QUBO/Ising forms, quadratisation, exhaustive search.

Variable domains:

* ``"spin"``   -- ``s in {-1, +1}``, so ``s_i**2 == 1``
* ``"binary"`` -- ``x in {0, 1}``, so ``x_i**2 == x_i``

The two are linked by ``s = 2x - 1``.

Assignments enumerated exhaustively are indexed so that variable 0 is the most
significant bit; index order is then lexicographic order of the assignment
tuple (``-1 < +1`` for spins, ``0 < 1`` for binaries).
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

Domain = Literal["spin", "binary"]
EXACT_VAR_CAP = 24
COEFF_TOL = 1e-12


class PolynomialError(ValueError):
    pass


Key = tuple[int, ...]


def _norm_key(key: Iterable[int], domain: Domain) -> Key:
    if domain == "binary":
        return tuple(sorted(set(key)))
    # spin: s_i^2 = 1, so repeated indices cancel in pairs
    out: set[int] = set()
    for i in key:
        out ^= {i}
    return tuple(sorted(out))


class Polynomial:
    """Immutable sparse polynomial ``sum_T c_T prod_{i in T} v_i``."""

    __slots__ = ("terms", "n_vars", "domain")

    def __init__(self, terms: Mapping[Iterable[int], float] | None = None, n_vars: int | None = None,
                 domain: Domain = "binary", prune: float = COEFF_TOL):
        if domain not in ("spin", "binary"):
            raise PolynomialError(f"unknown domain {domain!r}")
        acc: dict[Key, float] = {}
        for key, c in (terms or {}).items():
            k = _norm_key(key, domain)
            acc[k] = acc.get(k, 0.0) + float(c)
        self.terms: dict[Key, float] = {k: c for k, c in acc.items() if abs(c) > prune}
        top = max((k[-1] for k in self.terms if k), default=-1)
        if n_vars is None:
            n_vars = top + 1
        elif top >= n_vars:
            raise PolynomialError(f"variable {top} outside {n_vars} variables")
        self.n_vars = n_vars
        self.domain = domain

    # -- basics -------------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    @property
    def offset(self) -> float:
        return self.terms.get((), 0.0)

    def is_constant(self) -> bool:
        return all(not k for k in self.terms)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"Polynomial({self.domain}, n_vars={self.n_vars}, terms={len(self)}, degree={self.degree})"

    def _check(self, other: "Polynomial"):
        if self.domain != other.domain:
            raise PolynomialError("domain mismatch")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            return self + Polynomial({(): other}, self.n_vars, self.domain)
        self._check(other)
        acc = dict(self.terms)
        for k, c in other.terms.items():
            acc[k] = acc.get(k, 0.0) + c
        return Polynomial(acc, max(self.n_vars, other.n_vars), self.domain)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            acc: dict[Key, float] = {}
            binary = self.domain == "binary"
            for k1, c1 in self.terms.items():
                s1 = set(k1)
                for k2, c2 in other.terms.items():
                    k = tuple(sorted(s1 | set(k2))) if binary else tuple(sorted(s1.symmetric_difference(k2)))
                    acc[k] = acc.get(k, 0.0) + c1 * c2
            return Polynomial(acc, max(self.n_vars, other.n_vars), self.domain)
        return Polynomial({k: c * other for k, c in self.terms.items()}, self.n_vars, self.domain)

    __rmul__ = __mul__

    def isclose(self, other: "Polynomial", tol: float = 1e-9) -> bool:
        if self.domain != other.domain:
            return False
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= tol for k in keys)

    def with_n_vars(self, n_vars: int) -> "Polynomial":
        return Polynomial(self.terms, n_vars, self.domain)

    # -- evaluation ------------------------------------------------------------
    def evaluate(self, assignment: Sequence[int]) -> float:
        if len(assignment) < self.n_vars:
            raise PolynomialError(f"assignment has {len(assignment)} values for {self.n_vars} variables")
        total = 0.0
        for k, c in self.terms.items():
            v = c
            for i in k:
                v *= assignment[i]
            total += v
        return total

    def evaluate_many(self, assignments: np.ndarray) -> np.ndarray:
        a = np.asarray(assignments, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        out = np.zeros(a.shape[0])
        for k, c in self.terms.items():
            if k:
                out += c * np.prod(a[:, list(k)], axis=1)
            else:
                out += c
        return out

    # -- domain conversion ---------------------------------------------------------
    def to_binary(self) -> "Polynomial":
        """Substitute ``s = 2x - 1``."""
        if self.domain == "binary":
            return self
        acc: dict[Key, float] = {}
        for k, c in self.terms.items():
            deg = len(k)
            for r in range(deg + 1):
                for sub in itertools.combinations(k, r):
                    acc[sub] = acc.get(sub, 0.0) + c * (2.0 ** r) * (-1.0) ** (deg - r)
        return Polynomial(acc, self.n_vars, "binary")

    def to_spin(self) -> "Polynomial":
        """Substitute ``x = (s + 1) / 2``."""
        if self.domain == "spin":
            return self
        acc: dict[Key, float] = {}
        for k, c in self.terms.items():
            scale = c / (2.0 ** len(k))
            for r in range(len(k) + 1):
                for sub in itertools.combinations(k, r):
                    acc[sub] = acc.get(sub, 0.0) + scale
        return Polynomial(acc, self.n_vars, "spin")

    def to_json(self) -> dict:
        return {
            "domain": self.domain,
            "n_vars": self.n_vars,
            "terms": [[list(k), c] for k, c in sorted(self.terms.items())],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Polynomial":
        return cls({tuple(k): c for k, c in data["terms"]}, data["n_vars"], data["domain"])


# -- Ising ------------------------------------------------------------------------

@dataclass(frozen=True)
class IsingModel:
    """``E(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset``."""

    h: dict[int, float]
    J: dict[tuple[int, int], float]
    offset: float = 0.0
    n_vars: int = 0

    def __post_init__(self):
        for (i, j) in self.J:
            if i == j:
                raise PolynomialError("Ising couplings may not be self-pairs")
            if i > j:
                raise PolynomialError("Ising coupling keys must be ordered (i < j)")
        top = max([*self.h, *(j for _, j in self.J)], default=-1)
        if self.n_vars <= top:
            object.__setattr__(self, "n_vars", top + 1)

    @classmethod
    def from_dicts(cls, h: Mapping[int, float], J: Mapping[tuple[int, int], float],
                   offset: float = 0.0, n_vars: int = 0) -> "IsingModel":
        hh = {int(i): float(v) for i, v in h.items() if v != 0.0}
        jj: dict[tuple[int, int], float] = {}
        for (i, j), v in J.items():
            key = (min(i, j), max(i, j))
            jj[key] = jj.get(key, 0.0) + float(v)
        jj = {k: v for k, v in jj.items() if v != 0.0}
        return cls(hh, jj, float(offset), n_vars)

    def energy(self, spins: Sequence[int]) -> float:
        e = self.offset
        for i, v in self.h.items():
            e += v * spins[i]
        for (i, j), v in self.J.items():
            e += v * spins[i] * spins[j]
        return e

    def energies(self, spins: np.ndarray) -> np.ndarray:
        s = np.atleast_2d(np.asarray(spins, dtype=float))
        hv, jm = self.arrays()
        return self.offset + s @ hv + 0.5 * np.einsum("ri,ij,rj->r", s, jm, s)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense field vector and symmetric coupling matrix (zero diagonal)."""
        hv = np.zeros(self.n_vars)
        for i, v in self.h.items():
            hv[i] = v
        jm = np.zeros((self.n_vars, self.n_vars))
        for (i, j), v in self.J.items():
            jm[i, j] += v
            jm[j, i] += v
        return hv, jm

    def max_abs_coefficient(self) -> float:
        return max([abs(v) for v in self.h.values()] + [abs(v) for v in self.J.values()], default=0.0)

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.J)

    def to_polynomial(self) -> Polynomial:
        terms: dict[Key, float] = {(): self.offset}
        terms.update({(i,): v for i, v in self.h.items()})
        terms.update({k: v for k, v in self.J.items()})
        return Polynomial(terms, self.n_vars, "spin")

    def to_json(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "h": {str(i): v for i, v in sorted(self.h.items())},
            "J": [[i, j, v] for (i, j), v in sorted(self.J.items())],
            "offset": self.offset,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "IsingModel":
        return cls.from_dicts({int(i): v for i, v in data["h"].items()},
                              {(int(i), int(j)): v for i, j, v in data["J"]},
                              data.get("offset", 0.0), data.get("n_vars", 0))


def qubo_to_ising(p: Polynomial) -> IsingModel:
    if p.degree > 2:
        raise PolynomialError(f"QUBO must be at most quadratic, got degree {p.degree}")
    s = p.to_spin() if p.domain == "binary" else p
    h = {k[0]: c for k, c in s.terms.items() if len(k) == 1}
    J = {k: c for k, c in s.terms.items() if len(k) == 2}
    return IsingModel.from_dicts(h, J, s.offset, p.n_vars)


def ising_to_qubo(model: IsingModel) -> Polynomial:
    return model.to_polynomial().to_binary()


# -- quadratisation -------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratisationMap:
    """Ancilla ``n_original + k`` stands for ``x_a * x_b`` of ``ancilla_definitions[k]``."""

    n_original: int
    ancilla_definitions: tuple[tuple[int, int], ...] = ()
    penalty_weights: tuple[float, ...] = ()

    @property
    def n_ancillas(self) -> int:
        return len(self.ancilla_definitions)

    @property
    def n_total(self) -> int:
        return self.n_original + self.n_ancillas

    def extend(self, original: Sequence[int]) -> tuple[int, ...]:
        """Binary assignment of all variables with ancillas set consistently."""
        vals = list(original[: self.n_original])
        for a, b in self.ancilla_definitions:
            vals.append(vals[a] * vals[b])
        return tuple(vals)

    def is_consistent(self, assignment: Sequence[int]) -> bool:
        return all(assignment[self.n_original + k] == assignment[a] * assignment[b]
                   for k, (a, b) in enumerate(self.ancilla_definitions))

    def to_json(self) -> dict:
        return {
            "n_original": self.n_original,
            "ancillas": [[self.n_original + k, a, b, m] for k, ((a, b), m) in
                         enumerate(zip(self.ancilla_definitions, self.penalty_weights))],
        }


def quadratize(p: Polynomial) -> tuple[Polynomial, QuadratisationMap]:
    """Rosenberg reduction of a binary polynomial to degree <= 2.

    The pair occurring in the most degree >= 3 terms (ties: lexicographically
    smallest) is replaced by a fresh ancilla ``y`` in every such term, and
    ``M * (x_a x_b - 2 (x_a + x_b) y + 3 y)`` is added with
    ``M = 1 + 2 * sum |c|`` over the rewritten terms.
    """
    if p.domain != "binary":
        raise PolynomialError("quadratize expects a binary-domain polynomial")
    terms = dict(p.terms)
    n = p.n_vars
    defs: list[tuple[int, int]] = []
    weights: list[float] = []
    counts: Counter = Counter()
    for k in terms:
        if len(k) >= 3:
            counts.update(itertools.combinations(k, 2))
    while counts:
        top = max(counts.values())
        a, b = min(pair for pair, c in counts.items() if c == top)
        y = n + len(defs)
        hit = [k for k in terms if len(k) >= 3 and a in k and b in k]
        m = 1.0 + 2.0 * sum(abs(terms[k]) for k in hit)
        for k in hit:
            c = terms.pop(k)
            counts.subtract(itertools.combinations(k, 2))
            nk = tuple(sorted([v for v in k if v != a and v != b] + [y]))
            if nk in terms:
                if len(nk) >= 3:
                    counts.subtract(itertools.combinations(nk, 2))
                c += terms[nk]
            terms[nk] = c
            if len(nk) >= 3:
                counts.update(itertools.combinations(nk, 2))
        for key, c in (((a, b), m), ((a, y), -2 * m), ((b, y), -2 * m), ((y,), 3 * m)):
            terms[key] = terms.get(key, 0.0) + c
        defs.append((a, b))
        weights.append(m)
        counts = +counts
    qmap = QuadratisationMap(n, tuple(defs), tuple(weights))
    return Polynomial(terms, qmap.n_total, "binary"), qmap


# -- exhaustive search --------------------------------------------------------------

def _check_cap(n: int, cap: int):
    if n > cap:
        raise PolynomialError(f"{n} variables exceeds the exhaustive-search cap of {cap}")


def energies(p: Polynomial, cap: int = EXACT_VAR_CAP) -> np.ndarray:
    """Objective value of every assignment, in lexicographic index order."""
    n = p.n_vars
    _check_cap(n, cap)
    vec = np.zeros(1 << n)
    for k, c in p.terms.items():
        idx = sum(1 << (n - 1 - i) for i in k)
        vec[idx] += c * ((-1.0) ** len(k) if p.domain == "spin" else 1.0)
    for bit in range(n):
        view = vec.reshape(-1, 2, 1 << bit)
        if p.domain == "spin":
            lo = view[:, 0, :].copy()
            view[:, 0, :] += view[:, 1, :]
            view[:, 1, :] = lo - view[:, 1, :]
        else:
            view[:, 1, :] += view[:, 0, :]
    return vec


def index_to_assignment(idx: int, n: int, domain: Domain) -> tuple[int, ...]:
    bits = [(idx >> (n - 1 - i)) & 1 for i in range(n)]
    if domain == "spin":
        return tuple(2 * b - 1 for b in bits)
    return tuple(bits)


def assignment_to_index(assignment: Sequence[int], domain: Domain) -> int:
    n = len(assignment)
    bits = [(v + 1) // 2 for v in assignment] if domain == "spin" else list(assignment)
    return sum(int(b) << (n - 1 - i) for i, b in enumerate(bits))


def all_assignments(n: int, domain: Domain) -> np.ndarray:
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return (2 * bits - 1).astype(np.int8) if domain == "spin" else bits.astype(np.int8)


def _tie_tol(e: float) -> float:
    return 1e-10 * max(1.0, abs(e))


def argmin_lex(values: np.ndarray) -> int:
    finite = np.isfinite(values)
    if not finite.any():
        raise PolynomialError("no feasible assignment")
    emin = values[finite].min()
    return int(np.flatnonzero(values <= emin + _tie_tol(emin))[0])


def minimize_exact(p: Polynomial, cap: int = EXACT_VAR_CAP) -> tuple[float, tuple[int, ...]]:
    """Global minimum by enumeration; ties go to the lexicographically smallest assignment."""
    idx = argmin_lex(energies(p, cap))
    assignment = index_to_assignment(idx, p.n_vars, p.domain)
    return p.evaluate(assignment), assignment


def minimize_ising_exact(model: IsingModel, cap: int = EXACT_VAR_CAP) -> tuple[float, tuple[int, ...]]:
    return minimize_exact(model.to_polynomial(), cap)


def distinct_levels(values: np.ndarray, count: int = 2) -> list[float]:
    """Lowest ``count`` distinct finite values (relative tolerance 1e-9)."""
    vals = np.sort(values[np.isfinite(values)])
    levels: list[float] = []
    for v in vals:
        if not levels or v > levels[-1] + 1e-9 * max(1.0, abs(levels[-1])):
            levels.append(float(v))
            if len(levels) == count:
                break
    return levels


def spectral_gap(p: Polynomial, cap: int = EXACT_VAR_CAP) -> float:
    """Difference between the two lowest distinct objective values."""
    if p.is_constant() or p.n_vars == 0:
        raise PolynomialError("spectral gap undefined for a constant polynomial")
    levels = distinct_levels(energies(p, cap))
    if len(levels) < 2:
        raise PolynomialError("spectral gap undefined for a constant polynomial")
    return levels[1] - levels[0]


# -- file formats ----------------------------------------------------------------------

def write_qubo_file(p: Polynomial, path: str | Path) -> None:
    """qbsolv-style layout; the constant travels in a ``c offset`` comment."""
    if p.domain != "binary" or p.degree > 2:
        raise PolynomialError("QUBO files hold binary polynomials of degree <= 2")
    diag = sorted((k[0], c) for k, c in p.terms.items() if len(k) == 1)
    coup = sorted((k, c) for k, c in p.terms.items() if len(k) == 2)
    nodes = len(diag)
    lines = [f"c offset {p.offset!r}", f"p qubo 0 {p.n_vars} {nodes} {len(coup)}"]
    lines += [f"{i} {i} {c!r}" for i, c in diag]
    lines += [f"{i} {j} {c!r}" for (i, j), c in coup]
    Path(path).write_text("\n".join(lines) + "\n")


def read_qubo_file(path: str | Path) -> Polynomial:
    terms: dict[Key, float] = {}
    n_vars = None
    for raw in Path(path).read_text().splitlines():
        tok = raw.split()
        if not tok:
            continue
        if tok[0] == "c":
            if len(tok) >= 3 and tok[1] == "offset":
                terms[()] = float(tok[2])
            continue
        if tok[0] == "p":
            n_vars = int(tok[3])
            continue
        i, j, v = int(tok[0]), int(tok[1]), float(tok[2])
        key = (i,) if i == j else (min(i, j), max(i, j))
        terms[key] = terms.get(key, 0.0) + v
    return Polynomial(terms, n_vars, "binary")


def write_ising_json(model: IsingModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json(), indent=1))


def read_ising_json(path: str | Path) -> IsingModel:
    return IsingModel.from_json(json.loads(Path(path).read_text()))
