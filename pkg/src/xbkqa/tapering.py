"""Z2 symmetry detection and qubit tapering.

Symmetries are found as the GF(2) kernel of the symplectic check matrix of the
Hamiltonian terms.  Each generator ``g`` is rotated onto a single-qubit
``X_q`` by the Clifford ``U = (X_q + g) / sqrt(2)`` (after a Hadamard on ``q``
when ``g`` acts there as ``X``); the target qubit is then replaced by the
generator eigenvalue and deleted.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .pauli import (
    OperatorSum,
    PauliTerm,
    conjugate,
    expectation,
    ground_energy_exact,
    multiply,
    symplectic_inner,
)

_SQRT_HALF = 2 ** -0.5


class TaperingError(ValueError):
    pass


@dataclass(frozen=True)
class SymmetrySet:
    """Commuting Pauli symmetries and the Clifford sequence that isolates them.

    ``clifford_sequence`` holds ``(U_i, W_i)`` pairs: ``U_i`` is the Clifford as an
    operator sum (a Hadamard on the target qubit, when needed, is folded into
    ``U_i``) and ``W_i`` is the qubit permutation moving the target to the end
    of the register.  ``eigenvalue_assignments`` is empty until a sector is
    chosen.
    """

    generators: tuple[PauliTerm, ...]
    n_qubits: int
    clifford_sequence: tuple[tuple[OperatorSum, tuple[int, ...]], ...] = ()
    target_qubits: tuple[int, ...] = ()
    eigenvalue_assignments: tuple[int, ...] = ()
    # per generator: indices of earlier generators multiplied in during elimination
    products: tuple[tuple[int, ...], ...] = field(default=(), repr=False)
    preserves_basis: bool = True

    def with_assignments(self, assignments) -> "SymmetrySet":
        values = tuple(int(a) for a in assignments)
        if len(values) != len(self.generators):
            raise TaperingError(
                f"{len(values)} eigenvalues given for {len(self.generators)} generators")
        if any(a not in (1, -1) for a in values):
            raise TaperingError("eigenvalues must be +1 or -1")
        return SymmetrySet(self.generators, self.n_qubits, self.clifford_sequence,
                           self.target_qubits, values, self.products, self.preserves_basis)

    def labels(self) -> list[str]:
        return [g.label() for g in self.generators]


# -- GF(2) linear algebra -----------------------------------------------------

def _rref(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    m = mat.copy() % 2
    pivots = []
    row = 0
    for col in range(m.shape[1]):
        if row >= m.shape[0]:
            break
        hits = np.nonzero(m[row:, col])[0]
        if len(hits) == 0:
            continue
        k = row + hits[0]
        if k != row:
            m[[row, k]] = m[[k, row]]
        others = np.nonzero(m[:, col])[0]
        for r in others:
            if r != row:
                m[r] ^= m[row]
        pivots.append(col)
        row += 1
    return m[:row], pivots


def _kernel(mat: np.ndarray) -> np.ndarray:
    """Basis (rows) of ``{v : mat @ v = 0 mod 2}``."""
    ncols = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(ncols, dtype=np.uint8)
    red, pivots = _rref(mat)
    free = [c for c in range(ncols) if c not in pivots]
    basis = np.zeros((len(free), ncols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, p in enumerate(pivots):
            basis[i, p] = red[r, f]
    return basis


def _to_vec(key: tuple[int, int], n: int) -> np.ndarray:
    x, z = key
    return np.array([(x >> k) & 1 for k in range(n)] + [(z >> k) & 1 for k in range(n)], dtype=np.uint8)


def _from_vec(v: np.ndarray, n: int) -> tuple[int, int]:
    x = sum(int(v[k]) << k for k in range(n))
    z = sum(int(v[n + k]) << k for k in range(n))
    return x, z


def _abelian_subset(keys: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Maximal commuting subgroup basis of the span of ``keys`` (symplectic Gram-Schmidt).

    Hyperbolic pairs contribute their first member; earlier (more Z-like)
    vectors are preferred.
    """
    pool = list(keys)
    chosen = []
    while pool:
        v = pool.pop(0)
        partner = next((i for i, w in enumerate(pool) if symplectic_inner(v, w)), None)
        if partner is None:
            chosen.append(v)
            continue
        w = pool.pop(partner)
        fixed = []
        for u in pool:
            if symplectic_inner(u, w):
                u = (u[0] ^ v[0], u[1] ^ v[1])
            if symplectic_inner(u, v):
                u = (u[0] ^ w[0], u[1] ^ w[1])
            fixed.append(u)
        pool = fixed
        chosen.append(v)
    return chosen


# -- public operations ----------------------------------------------------------

def find_symmetries(h: OperatorSum) -> SymmetrySet:
    """Independent commuting Pauli symmetries of ``h`` plus their Clifford sequence."""
    n = h.n_qubits
    keys = [k for k in h.terms if k != (0, 0)]
    if keys:
        # rows [z | x] so that row . [x' | z'] is the symplectic product
        check = np.array([np.concatenate([_to_vec(k, n)[n:], _to_vec(k, n)[:n]]) for k in keys],
                         dtype=np.uint8)
    else:
        check = np.zeros((0, 2 * n), dtype=np.uint8)
    kernel = _kernel(check)
    if len(kernel):
        # reduce X columns first: rows without an X pivot are pure Z strings
        red, _ = _rref(kernel)
        vecs = [_from_vec(r, n) for r in red]
        vecs.sort(key=lambda k: (k[0] != 0, bin(k[0]).count("1"), k))
        # Z-type part in reduced form so each generator owns a pivot qubit
        ztype = [k for k in vecs if k[0] == 0]
        rest = [k for k in vecs if k[0] != 0]
        if ztype:
            zmat = np.array([_to_vec(k, n)[n:] for k in ztype], dtype=np.uint8)
            zred, _ = _rref(zmat)
            ztype = [(0, sum(int(b) << q for q, b in enumerate(row))) for row in zred]
        gens_keys = _abelian_subset(ztype + rest)
    else:
        gens_keys = []
    generators = tuple(PauliTerm(x, z, n) for x, z in gens_keys)
    return _build_cliffords(h, generators)


def _build_cliffords(h: OperatorSum, generators: tuple[PauliTerm, ...]) -> SymmetrySet:
    n = h.n_qubits
    current = [OperatorSum.from_term(g) for g in generators]
    products: list[list[int]] = [[] for _ in generators]
    targets: list[int] = []
    sequence = []
    for i in range(len(generators)):
        (gx, gz), sign = next(iter(current[i].terms.items()))
        support = (gx | gz) & ~sum(1 << t for t in targets)
        if not support:
            raise TaperingError("symmetry generators are not independent")
        q = (support & -support).bit_length() - 1
        if (gx >> q) & 1 and not (gz >> q) & 1:
            had = OperatorSum({(1 << q, 0): _SQRT_HALF, (0, 1 << q): _SQRT_HALF}, n)
            current = [conjugate(c, had) for c in current]
            u_had = had
        else:
            u_had = None
        u = (OperatorSum({(1 << q, 0): _SQRT_HALF}, n) + current[i] * _SQRT_HALF)
        current = [conjugate(c, u) if j >= i else c for j, c in enumerate(current)]
        xq = OperatorSum({(1 << q, 0): 1.0}, n)
        for j in range(i + 1, len(generators)):
            (cx, _), _ = next(iter(current[j].terms.items()))
            if (cx >> q) & 1:
                current[j] = multiply(current[j], xq)
                products[j].append(i)
        targets.append(q)
        full_u = multiply(u, u_had) if u_had is not None else u
        perm = tuple([k for k in range(n) if k != q] + [q])
        sequence.append((full_u, perm))
    # Z on every kept qubit must pass through the Cliffords unchanged for tapered
    # basis states to be original basis states with target bits dropped
    preserves = True
    for k in set(range(n)) - set(targets):
        zk = OperatorSum({(0, 1 << k): 1.0}, n)
        for cu, _ in sequence:
            zk = conjugate(zk, cu)
        preserves &= zk.isclose(OperatorSum({(0, 1 << k): 1.0}, n), 1e-12)
    return SymmetrySet(generators, n, tuple(sequence), tuple(targets), (),
                       tuple(tuple(p) for p in products), preserves)


def _effective_values(s: SymmetrySet) -> list[int]:
    vals: list[int] = []
    for j, a in enumerate(s.eigenvalue_assignments):
        v = a
        for i in s.products[j]:
            v *= vals[i]
        vals.append(v)
    return vals


def taper(h: OperatorSum, s: SymmetrySet) -> OperatorSum:
    """Rotate ``h`` with the symmetry Cliffords, fix target qubits, delete them."""
    if len(s.eigenvalue_assignments) != len(s.generators):
        raise TaperingError(
            f"{len(s.eigenvalue_assignments)} eigenvalues given for {len(s.generators)} generators")
    if h.n_qubits != s.n_qubits:
        raise TaperingError("Hamiltonian and symmetry set act on different registers")
    hh = h
    for u, _ in s.clifford_sequence:
        hh = conjugate(hh, u)
    values = dict(zip(s.target_qubits, _effective_values(s)))
    # the sign of each rotated generator is +1 by construction (U g U = X_q)
    keep = [k for k in range(s.n_qubits) if k not in values]
    acc: dict[tuple[int, int], complex] = {}
    for (x, z), c in hh.terms.items():
        for q, val in values.items():
            if (z >> q) & 1:
                raise TaperingError(f"rotated Hamiltonian acts non-trivially on target qubit {q}")
            if (x >> q) & 1:
                c *= val
        nx = sum(((x >> q) & 1) << i for i, q in enumerate(keep))
        nz = sum(((z >> q) & 1) << i for i, q in enumerate(keep))
        acc[(nx, nz)] = acc.get((nx, nz), 0) + c
    out = OperatorSum(acc, len(keep))
    return out.real() if h.is_hermitian() else out


def select_sector(h: OperatorSum, s: SymmetrySet, reference_state) -> tuple[int, ...]:
    """Generator eigenvalues on ``reference_state``; falls back to a sector scan."""
    values = []
    for g in s.generators:
        val = expectation(OperatorSum.from_term(g), reference_state)
        if abs(val) < 0.5:
            return sector_scan(h, s)[0]
        values.append(1 if val > 0 else -1)
    return tuple(values)


def select_sector_strict(s: SymmetrySet, reference_state) -> tuple[int, ...]:
    values = []
    for g in s.generators:
        val = expectation(OperatorSum.from_term(g), reference_state)
        if abs(val) < 0.5:
            raise TaperingError(f"reference state is not an eigenstate of {g.label()}")
        values.append(1 if val > 0 else -1)
    return tuple(values)


def sector_scan(h: OperatorSum, s: SymmetrySet) -> tuple[tuple[int, ...], float]:
    """Assignment with the lowest tapered ground energy (dense oracle)."""
    best = None
    for values in itertools.product((1, -1), repeat=len(s.generators)):
        e = ground_energy_exact(taper(h, s.with_assignments(values)))
        if best is None or e < best[1] - 1e-12:
            best = (values, e)
    assert best is not None
    return best


def taper_state(bits, s: SymmetrySet) -> tuple[int, ...]:
    """Basis state of the tapered register matching an original basis state."""
    if not s.preserves_basis:
        raise TaperingError("basis states only map directly for Z-type symmetries")
    return tuple(int(b) for k, b in enumerate(bits) if k not in set(s.target_qubits))


def tapering_report(s: SymmetrySet, n_before: int, n_after: int) -> dict:
    return {
        "generators": s.labels(),
        "target_qubits": list(s.target_qubits),
        "eigenvalue_assignments": list(s.eigenvalue_assignments),
        "n_qubits_before": n_before,
        "n_qubits_after": n_after,
    }
