"""Second-quantized Hamiltonians and their Jordan-Wigner / parity encodings."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Literal

from .pauli import OperatorSum, PauliTerm, conjugate, multiply

Encoding = Literal["jordan_wigner", "parity"]
ENCODINGS = ("jordan_wigner", "parity")
HERMITICITY_TOL = 1e-10


class FermionFormatError(ValueError):
    pass


@dataclass(frozen=True)
class FermionHamiltonian:
    """``H = const + sum h_pq a+_p a_q + 1/2 sum h_pqrs a+_p a+_q a_r a_s``.

    ``two_body`` holds the raw ``h_pqrs``; the 1/2 is applied at encoding time.
    """

    n_modes: int
    one_body: dict[tuple[int, int], float] = field(default_factory=dict)
    two_body: dict[tuple[int, int, int, int], float] = field(default_factory=dict)
    constant: float = 0.0
    n_electrons: int | None = None
    hf_occupation: tuple[int, ...] | None = None
    e_hf: float | None = None
    e_fci: float | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        n = self.n_modes
        for idx in list(self.one_body) + list(self.two_body):
            if any(not 0 <= i < n for i in idx):
                raise FermionFormatError(f"index {idx} out of range for {n} modes")
        for (p, q), c in self.one_body.items():
            if abs(c - self.one_body.get((q, p), 0.0)) > HERMITICITY_TOL:
                raise FermionFormatError(f"one-body term ({p},{q}) violates Hermiticity")
        for (p, q, r, s), c in self.two_body.items():
            if abs(c - self.two_body.get((s, r, q, p), 0.0)) > HERMITICITY_TOL:
                raise FermionFormatError(f"two-body term ({p},{q},{r},{s}) violates Hermiticity")
        if self.hf_occupation is not None:
            if len(self.hf_occupation) != n:
                raise FermionFormatError("hf_occupation length differs from n_modes")
            if self.n_electrons is not None and sum(self.hf_occupation) != self.n_electrons:
                raise FermionFormatError("hf_occupation does not hold n_electrons set bits")

    @property
    def label(self) -> str:
        return self.metadata.get("active_space", f"({self.n_modes},{self.n_electrons})")


_HEADERS = {"n_modes", "n_electrons", "constant", "e_hf", "e_fci", "hf_occupation"}


def parse_fermion_text(text: str) -> FermionHamiltonian:
    header: dict[str, str] = {}
    meta: dict[str, str] = {}
    one: dict[tuple[int, int], float] = {}
    two: dict[tuple[int, int, int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if not head[0].isdigit():
            if len(tokens) < 2:
                raise FermionFormatError(f"line {lineno}: header {head!r} has no value")
            (header if head in _HEADERS else meta)[head] = " ".join(tokens[1:])
            continue
        try:
            if len(tokens) == 3 and tokens[0].endswith("^") and not tokens[1].endswith("^"):
                key2 = (int(tokens[0][:-1]), int(tokens[1]))
                one[key2] = one.get(key2, 0.0) + float(tokens[2])
            elif (len(tokens) == 5 and tokens[0].endswith("^") and tokens[1].endswith("^")
                  and not tokens[2].endswith("^") and not tokens[3].endswith("^")):
                key4 = (int(tokens[0][:-1]), int(tokens[1][:-1]), int(tokens[2]), int(tokens[3]))
                two[key4] = two.get(key4, 0.0) + float(tokens[4])
            else:
                raise ValueError
        except ValueError as exc:
            raise FermionFormatError(f"line {lineno}: malformed term {line!r}") from exc

    if "n_modes" not in header:
        top = max([i for k in list(one) + list(two) for i in k], default=-1)
        header["n_modes"] = str(top + 1)
    occ = header.get("hf_occupation")
    try:
        return FermionHamiltonian(
            n_modes=int(header["n_modes"]),
            one_body=one,
            two_body=two,
            constant=float(header.get("constant", 0.0)),
            n_electrons=int(header["n_electrons"]) if "n_electrons" in header else None,
            hf_occupation=tuple(int(c) for c in occ) if occ else None,
            e_hf=float(header["e_hf"]) if "e_hf" in header else None,
            e_fci=float(header["e_fci"]) if "e_fci" in header else None,
            metadata=meta,
        )
    except ValueError as exc:
        if isinstance(exc, FermionFormatError):
            raise
        raise FermionFormatError(str(exc)) from exc


def parse_fermion_file(path: str | Path) -> FermionHamiltonian:
    return parse_fermion_text(Path(path).read_text())


def format_fermion_text(f: FermionHamiltonian) -> str:
    lines = [f"n_modes {f.n_modes}"]
    if f.n_electrons is not None:
        lines.append(f"n_electrons {f.n_electrons}")
    lines.append(f"constant {f.constant!r}")
    if f.e_hf is not None:
        lines.append(f"e_hf {f.e_hf!r}")
    if f.e_fci is not None:
        lines.append(f"e_fci {f.e_fci!r}")
    if f.hf_occupation is not None:
        lines.append("hf_occupation " + "".join(map(str, f.hf_occupation)))
    lines += [f"{k} {v}" for k, v in f.metadata.items()]
    lines += [f"{p}^ {q} {c!r}" for (p, q), c in sorted(f.one_body.items())]
    lines += [f"{p}^ {q}^ {r} {s} {c!r}" for (p, q, r, s), c in sorted(f.two_body.items())]
    return "\n".join(lines) + "\n"


FIXTURES = {"h2": "h2_sto3g.ferm", "h2o": "h2o_sto3g_8_4.ferm"}


def fixture_path(name: str) -> Path:
    """Path of a bundled fixture (``"h2"``, ``"h2o"``) or a literal file name."""
    fname = FIXTURES.get(name, name)
    return Path(str(resources.files("xbkqa") / "data" / fname))


def load_fixture(name: str) -> FermionHamiltonian:
    return parse_fermion_file(fixture_path(name))


# -- encodings -------------------------------------------------------------------

@lru_cache(maxsize=None)
def _jw_ladder(p: int, n: int, dagger: bool) -> OperatorSum:
    zstring = (1 << p) - 1
    x = PauliTerm(1 << p, zstring, n)
    y = PauliTerm(1 << p, (1 << p) | zstring, n)
    # Z_j (j < p) factors commute past X_p / Y_p, so the string keys are exact
    sign = -0.5j if dagger else 0.5j
    return OperatorSum({x.key: 0.5, y.key: sign}, n)


def _to_parity(op: OperatorSum) -> OperatorSum:
    """Conjugate by the CNOT chain sending occupation bits to running parities.

    CNOT(j-1 -> j) is applied for j = 1..n-1 in order, so bit j ends up holding
    n_0 ^ ... ^ n_j.
    """
    n = op.n_qubits
    for j in range(1, n):
        op = conjugate(op, _cnot(j - 1, j, n))
    return op


def _cnot(control: int, target: int, n: int) -> OperatorSum:
    return OperatorSum({
        (0, 0): 0.5,
        (0, 1 << control): 0.5,
        (1 << target, 0): 0.5,
        (1 << target, 1 << control): -0.5,
    }, n)


def ladder_operator(p: int, n_modes: int, dagger: bool = False,
                    encoding: Encoding = "jordan_wigner") -> OperatorSum:
    """Encoded ``a_p`` (or ``a_p^dagger``)."""
    if not 0 <= p < n_modes:
        raise ValueError(f"mode {p} out of range")
    op = _jw_ladder(p, n_modes, dagger)
    if encoding == "parity":
        op = _to_parity(op)
    elif encoding != "jordan_wigner":
        raise ValueError(f"unknown encoding {encoding!r}")
    return op


def jordan_wigner(f: FermionHamiltonian) -> OperatorSum:
    n = f.n_modes
    total = OperatorSum.identity(n, f.constant) if n else OperatorSum({(0, 0): f.constant}, 0)
    acc: dict[tuple[int, int], complex] = dict(total.terms)

    def add(op: OperatorSum, c: float):
        for k, v in op.terms.items():
            acc[k] = acc.get(k, 0) + c * v

    for (p, q), c in f.one_body.items():
        add(multiply(_jw_ladder(p, n, True), _jw_ladder(q, n, False)), c)
    pairs: dict[tuple[int, int], OperatorSum] = {}
    for (p, q, r, s), c in f.two_body.items():
        left = pairs.get((p, q))
        if left is None:
            left = pairs[(p, q)] = multiply(_jw_ladder(p, n, True), _jw_ladder(q, n, True))
        right = pairs.get((-1 - r, -1 - s))
        if right is None:
            right = pairs[(-1 - r, -1 - s)] = multiply(_jw_ladder(r, n, False), _jw_ladder(s, n, False))
        add(multiply(left, right), 0.5 * c)
    return OperatorSum(acc, n).real()


def parity_encode(f: FermionHamiltonian) -> OperatorSum:
    h = jordan_wigner(f)
    if f.n_modes <= 1:
        return h
    return _to_parity(h).real()


def encode(f: FermionHamiltonian, encoding: Encoding = "parity") -> OperatorSum:
    if encoding == "jordan_wigner":
        return jordan_wigner(f)
    if encoding == "parity":
        return parity_encode(f)
    raise ValueError(f"unknown encoding {encoding!r}")


def hf_state_in_encoding(f: FermionHamiltonian, encoding: Encoding = "parity") -> tuple[int, ...]:
    if f.hf_occupation is None:
        raise ValueError("fermion Hamiltonian carries no HF occupation")
    occ = tuple(f.hf_occupation)
    if encoding == "jordan_wigner":
        return occ
    if encoding == "parity":
        out, acc = [], 0
        for b in occ:
            acc ^= b
            out.append(acc)
        return tuple(out)
    raise ValueError(f"unknown encoding {encoding!r}")
