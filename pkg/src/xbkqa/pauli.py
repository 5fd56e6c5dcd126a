"""Weighted sums of Pauli strings in binary-symplectic form.

A Pauli string on ``n`` qubits is stored as two integer bit masks: bit ``k`` of
``x_mask``/``z_mask`` is the X/Z component on qubit ``k``.  A qubit with both
bits set is a Y.  The key ``(x_mask, z_mask)`` always denotes the Hermitian
string (no phase); phases live in the coefficient.

Dense matrices use qubit 0 as the most significant tensor factor, so the
basis bit-vector ``b`` maps to index ``sum(b[k] << (n - 1 - k))``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

PRUNE_TOL = 1e-12
DENSE_QUBIT_CAP = 14

_PHASES = (1, 1j, -1, -1j)
_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


class PauliError(ValueError):
    pass


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _mul_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Power of i produced by sigma(x1, z1) * sigma(x2, z2) = i^k sigma(x1^x2, z1^z2)."""
    x3, z3 = x1 ^ x2, z1 ^ z2
    k = _popcount(x1 & z1) + _popcount(x2 & z2) + 2 * _popcount(z1 & x2) - _popcount(x3 & z3)
    return k % 4


@dataclass(frozen=True)
class PauliTerm:
    """A single Pauli string ``i^phase * P(x_mask, z_mask)`` on ``n_qubits``."""

    x_mask: int
    z_mask: int
    n_qubits: int
    phase: int = 0

    def __post_init__(self):
        limit = 1 << self.n_qubits
        if self.x_mask >= limit or self.z_mask >= limit or self.x_mask < 0 or self.z_mask < 0:
            raise PauliError("mask exceeds qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliTerm":
        """Build from a dense label such as ``"XIZY"`` (character ``k`` is qubit ``k``)."""
        x = z = 0
        for k, ch in enumerate(label):
            bx, bz = _BITS[ch.upper()]
            x |= bx << k
            z |= bz << k
        return cls(x, z, len(label), phase)

    @classmethod
    def single(cls, letter: str, qubit: int, n_qubits: int) -> "PauliTerm":
        bx, bz = _BITS[letter.upper()]
        return cls(bx << qubit, bz << qubit, n_qubits)

    @property
    def key(self) -> tuple[int, int]:
        return (self.x_mask, self.z_mask)

    @property
    def factor(self) -> complex:
        return _PHASES[self.phase]

    @property
    def support(self) -> int:
        return self.x_mask | self.z_mask

    @property
    def is_diagonal(self) -> bool:
        return self.x_mask == 0

    def letter(self, qubit: int) -> str:
        return _LETTER[((self.x_mask >> qubit) & 1, (self.z_mask >> qubit) & 1)]

    def label(self) -> str:
        return "".join(self.letter(k) for k in range(self.n_qubits))

    def __mul__(self, other: "PauliTerm") -> "PauliTerm":
        if self.n_qubits != other.n_qubits:
            raise PauliError("qubit-count mismatch")
        k = _mul_phase(self.x_mask, self.z_mask, other.x_mask, other.z_mask)
        return PauliTerm(
            self.x_mask ^ other.x_mask,
            self.z_mask ^ other.z_mask,
            self.n_qubits,
            self.phase + other.phase + k,
        )

    def commutes(self, other: "PauliTerm") -> bool:
        return symplectic_inner(self.key, other.key) == 0

    def __repr__(self):
        return f"PauliTerm({_PHASES[self.phase]!r}*{self.label()})"


def symplectic_inner(a: tuple[int, int], b: tuple[int, int]) -> int:
    """0 if the strings commute, 1 if they anticommute."""
    return (_popcount(a[0] & b[1]) + _popcount(a[1] & b[0])) & 1


class OperatorSum:
    """Immutable map from Hermitian Pauli keys to complex coefficients."""

    __slots__ = ("_terms", "n_qubits")

    def __init__(self, terms: Mapping[tuple[int, int], complex] | None = None, n_qubits: int = 0,
                 prune: float = PRUNE_TOL):
        clean: dict[tuple[int, int], complex] = {}
        limit = 1 << n_qubits
        for key, c in (terms or {}).items():
            if key[0] >= limit or key[1] >= limit:
                raise PauliError(f"term {key} does not fit on {n_qubits} qubits")
            c = complex(c)
            if abs(c) > prune:
                clean[key] = c
        self._terms = clean
        self.n_qubits = n_qubits

    # -- construction ---------------------------------------------------
    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "OperatorSum":
        return cls({(0, 0): coeff}, n_qubits)

    @classmethod
    def from_term(cls, term: PauliTerm, coeff: complex = 1.0) -> "OperatorSum":
        return cls({term.key: coeff * term.factor}, term.n_qubits)

    @classmethod
    def from_labels(cls, items: Iterable[tuple[str, complex]]) -> "OperatorSum":
        acc: dict[tuple[int, int], complex] = {}
        n = None
        for label, c in items:
            t = PauliTerm.from_label(label)
            if n is not None and t.n_qubits != n:
                raise PauliError("labels of different length")
            n = t.n_qubits
            acc[t.key] = acc.get(t.key, 0) + c
        return cls(acc, n or 0)

    # -- mapping-like access ---------------------------------------------
    @property
    def terms(self) -> Mapping[tuple[int, int], complex]:
        return self._terms

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[PauliTerm, complex]]:
        for (x, z), c in self._terms.items():
            yield PauliTerm(x, z, self.n_qubits), c

    def coefficient(self, term: PauliTerm | str) -> complex:
        if isinstance(term, str):
            term = PauliTerm.from_label(term)
        return self._terms.get(term.key, 0.0) * term.factor.conjugate()

    def constant(self) -> float:
        return self._terms.get((0, 0), 0.0).real

    # -- arithmetic ------------------------------------------------------
    def _check(self, other: "OperatorSum"):
        if self.n_qubits != other.n_qubits:
            raise PauliError(f"qubit-count mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        self._check(other)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0) + c
        return OperatorSum(acc, self.n_qubits)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + other * -1

    def __neg__(self):
        return self * -1

    def __mul__(self, other) -> "OperatorSum":
        if isinstance(other, OperatorSum):
            return multiply(self, other)
        return OperatorSum({k: c * other for k, c in self._terms.items()}, self.n_qubits)

    __rmul__ = __mul__

    def __matmul__(self, other: "OperatorSum") -> "OperatorSum":
        return multiply(self, other)

    def __eq__(self, other):
        if not isinstance(other, OperatorSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.isclose(other, 0.0)

    def isclose(self, other: "OperatorSum", tol: float = 1e-10) -> bool:
        if self.n_qubits != other.n_qubits:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= tol for k in keys)

    def dagger(self) -> "OperatorSum":
        return OperatorSum({k: c.conjugate() for k, c in self._terms.items()}, self.n_qubits)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def real(self, tol: float = 1e-10) -> "OperatorSum":
        """Drop imaginary parts after checking they are below ``tol``."""
        if not self.is_hermitian(tol):
            worst = max(abs(c.imag) for c in self._terms.values())
            raise PauliError(f"operator is not Hermitian (max imaginary coefficient {worst:.3g})")
        return OperatorSum({k: c.real for k, c in self._terms.items()}, self.n_qubits)

    def is_diagonal(self) -> bool:
        return all(x == 0 for x, _ in self._terms)

    def __repr__(self):
        return f"OperatorSum(n_qubits={self.n_qubits}, terms={len(self)})"

    def __str__(self):
        return format_pauli_text(self)


def multiply(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    """Distributive product ``a * b`` with exact phase tracking."""
    if a.n_qubits != b.n_qubits:
        raise PauliError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")
    acc: dict[tuple[int, int], complex] = {}
    for (x1, z1), c1 in a.terms.items():
        for (x2, z2), c2 in b.terms.items():
            key = (x1 ^ x2, z1 ^ z2)
            acc[key] = acc.get(key, 0) + c1 * c2 * _PHASES[_mul_phase(x1, z1, x2, z2)]
    return OperatorSum(acc, a.n_qubits)


def commutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    return multiply(a, b) - multiply(b, a)


def anticommutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    return multiply(a, b) + multiply(b, a)


def conjugate(h: OperatorSum, u: OperatorSum) -> OperatorSum:
    """``u h u^dagger``."""
    return multiply(multiply(u, h), u.dagger())


# -- dense oracle -------------------------------------------------------------

def _reverse_bits(v: int, n: int) -> int:
    out = 0
    for k in range(n):
        if (v >> k) & 1:
            out |= 1 << (n - 1 - k)
    return out


def _parity_table(n: int) -> np.ndarray:
    par = np.zeros(1 << n, dtype=np.uint8)
    for k in range(n):
        par[1 << k: 1 << (k + 1)] = par[: 1 << k] ^ 1
    return par


def to_dense(h: OperatorSum, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    n = h.n_qubits
    if n > cap:
        raise PauliError(f"{n} qubits exceeds the dense oracle cap of {cap}")
    dim = 1 << n
    mat = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    par = _parity_table(n)
    for (x, z), c in h.terms.items():
        xi, zi = _reverse_bits(x, n), _reverse_bits(z, n)
        signs = 1.0 - 2.0 * par[cols & zi]
        mat[cols ^ xi, cols] += c * _PHASES[_popcount(x & z) % 4] * signs
    return mat


def ground_energy_exact(h: OperatorSum, cap: int = DENSE_QUBIT_CAP) -> float:
    if not h.is_hermitian():
        raise PauliError("ground_energy_exact needs a Hermitian operator")
    return float(np.linalg.eigvalsh(to_dense(h.real(), cap))[0])


def spectrum(h: OperatorSum, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    if not h.is_hermitian():
        raise PauliError("spectrum needs a Hermitian operator")
    return np.linalg.eigvalsh(to_dense(h.real(), cap))


def state_index(bits: Sequence[int]) -> int:
    n = len(bits)
    return sum(int(b) << (n - 1 - k) for k, b in enumerate(bits))


def bits_to_mask(bits: Sequence[int]) -> int:
    return sum(int(b) << k for k, b in enumerate(bits))


def parse_bits(bits: str | Sequence[int]) -> tuple[int, ...]:
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return tuple(int(ch) for ch in bits)
    return tuple(int(b) for b in bits)


def expectation(h: OperatorSum, basis_state: str | Sequence[int]) -> float:
    """Diagonal expectation value on a computational basis state."""
    bits = parse_bits(basis_state)
    if len(bits) != h.n_qubits:
        raise PauliError(f"state has {len(bits)} bits, operator has {h.n_qubits} qubits")
    mask = bits_to_mask(bits)
    total = 0.0
    for (x, z), c in h.terms.items():
        if x == 0:
            total += c.real * (-1 if _popcount(z & mask) & 1 else 1)
    return total


# -- text format ----------------------------------------------------------------

_FACTOR = re.compile(r"^([IXYZ])(\d+)$")


def parse_pauli_text(text: str, n_qubits: int | None = None) -> OperatorSum:
    """Parse ``<re> [<im>] <LETTER><index> ...`` lines."""
    rows = []
    top = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            coeff = complex(float(tokens[0]))
        except ValueError as exc:
            raise PauliError(f"line {lineno}: bad coefficient {tokens[0]!r}") from exc
        rest = tokens[1:]
        if rest:
            try:
                coeff += 1j * float(rest[0])
                rest = rest[1:]
            except ValueError:
                pass
        factors = []
        for tok in rest:
            m = _FACTOR.match(tok.upper())
            if not m:
                raise PauliError(f"line {lineno}: bad factor {tok!r}")
            q = int(m.group(2))
            top = max(top, q)
            factors.append((m.group(1), q))
        rows.append((coeff, factors))
    n = n_qubits if n_qubits is not None else top + 1
    if top >= n:
        raise PauliError(f"index {top} out of range for {n} qubits")
    total = OperatorSum({}, n)
    for coeff, factors in rows:
        term = PauliTerm(0, 0, n)
        for letter, q in factors:
            term = term * PauliTerm.single(letter, q, n)
        total = total + OperatorSum.from_term(term, coeff)
    return total


def format_pauli_text(h: OperatorSum) -> str:
    lines = []
    for (x, z), c in sorted(h.terms.items()):
        t = PauliTerm(x, z, h.n_qubits)
        ops = " ".join(f"{t.letter(k)}{k}" for k in range(h.n_qubits) if (t.support >> k) & 1)
        coeff = f"{c.real:.17g}" if abs(c.imag) <= PRUNE_TOL else f"{c.real:.17g} {c.imag:.17g}"
        lines.append(f"{coeff} {ops}".rstrip())
    return "\n".join(lines) + "\n"


def read_pauli_file(path: str | Path, n_qubits: int | None = None) -> OperatorSum:
    text = Path(path).read_text()
    if n_qubits is None:
        m = re.search(r"^#\s*n_qubits\s+(\d+)", text, re.MULTILINE)
        if m:
            n_qubits = int(m.group(1))
    return parse_pauli_text(text, n_qubits)


def write_pauli_file(h: OperatorSum, path: str | Path) -> None:
    Path(path).write_text(f"# n_qubits {h.n_qubits}\n" + format_pauli_text(h))
