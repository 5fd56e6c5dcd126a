import json
from functools import reduce
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ORACLE_PATH = Path(__file__).parent / "data" / "oracles.json"

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def dense_label(label: str) -> np.ndarray:
    """Kronecker product of single-qubit matrices, qubit 0 leftmost."""
    return reduce(np.kron, [_MATS[ch] for ch in label])


@pytest.fixture(scope="session")
def oracles() -> dict:
    return json.loads(ORACLE_PATH.read_text())


def random_symmetric_hamiltonian(seed: int, n: int, n_sym: int = 2):
    """Random Hermitian Pauli sum commuting with ``n_sym`` random commuting strings."""
    from xbkqa.pauli import OperatorSum, PauliTerm

    rng = np.random.default_rng(seed)

    def rand_term():
        return PauliTerm(int(rng.integers(0, 1 << n)), int(rng.integers(0, 1 << n)), n)

    syms: list = []
    while len(syms) < n_sym:
        t = rand_term()
        if t.key != (0, 0) and all(t.commutes(s) for s in syms):
            syms.append(t)
    acc = {(0, 0): float(rng.normal())}
    for _ in range(12 * n):
        t = rand_term()
        if all(t.commutes(s) for s in syms):
            acc[t.key] = float(rng.normal())
    return OperatorSum(acc, n), syms


_TAPERED: dict = {}


def tapered_fixture(name: str):
    """Parity-encoded, tapered fixture Hamiltonian in the HF sector."""
    if name not in _TAPERED:
        from xbkqa.fermion import encode, hf_state_in_encoding, load_fixture
        from xbkqa.tapering import find_symmetries, select_sector, taper

        f = load_fixture(name)
        h = encode(f, "parity")
        s = find_symmetries(h)
        s = s.with_assignments(select_sector(h, s, hf_state_in_encoding(f, "parity")))
        _TAPERED[name] = taper(h, s)
    return _TAPERED[name]


def replica_ratio_oracle(hmat: np.ndarray, r: int, p: int) -> float:
    """min over replica tuples of a.H.a / a.a with a = sum_i S_i e_{b_i}."""
    import itertools

    dim = hmat.shape[0]
    signs = [-1] * p + [1] * (r - p)
    best = np.inf
    for tup in itertools.product(range(dim), repeat=r):
        a = np.zeros(dim)
        for s, b in zip(signs, tup):
            a[b] += s
        den = a @ a
        if den > 0.5:
            best = min(best, float(a @ hmat @ a) / den)
    return best


def brute_energies(p) -> np.ndarray:
    """Objective of every assignment, variable 0 most significant, by direct products."""
    n = p.n_vars
    idx = np.arange(1 << n)
    bits = ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1).astype(float)
    vals = 2 * bits - 1 if p.domain == "spin" else bits
    out = np.zeros(1 << n)
    for key, c in p.terms.items():
        out += c * (np.prod(vals[:, list(key)], axis=1) if key else 1.0)
    return out


def random_hubo(seed: int, n: int, max_degree: int = 4, n_terms: int | None = None):
    """Binary polynomial with every variable present linearly and generic coefficients."""
    from xbkqa.polyopt import Polynomial

    rng = np.random.default_rng(seed)
    terms = {(i,): float(rng.normal()) for i in range(n)}
    for _ in range(n_terms if n_terms is not None else n):
        deg = int(rng.integers(2, max_degree + 1))
        key = tuple(sorted(rng.choice(n, size=min(deg, n), replace=False).tolist()))
        terms[key] = terms.get(key, 0.0) + float(rng.normal())
    return Polynomial(terms, n, "binary")


ACCEPTANCE: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE.append(f"acceptance {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
