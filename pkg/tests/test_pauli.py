import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xbkqa.fermion import encode, hf_state_in_encoding, load_fixture
from xbkqa.pauli import (
    OperatorSum,
    PauliError,
    PauliTerm,
    anticommutator,
    commutator,
    expectation,
    format_pauli_text,
    ground_energy_exact,
    multiply,
    parse_pauli_text,
    read_pauli_file,
    to_dense,
    write_pauli_file,
)

from conftest import dense_label

labels = st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.text("IXYZ", min_size=n, max_size=n), st.text("IXYZ", min_size=n, max_size=n)))


def op(*items):
    return OperatorSum.from_labels(items)


def test_x_times_z_is_minus_i_y():
    assert multiply(op(("X", 1)), op(("Z", 1))) == op(("Y", -1j))


def test_identity_is_neutral():
    h = op(("XZ", 0.3), ("YY", -1.2), ("II", 0.5))
    assert multiply(OperatorSum.identity(2), h) == h
    assert multiply(h, OperatorSum.identity(2)) == h


def test_involution_has_unit_coefficient():
    assert multiply(op(("XZ", 1)), op(("XZ", 1))) == OperatorSum.identity(2)


def test_qubit_count_mismatch_rejected():
    with pytest.raises(PauliError):
        multiply(op(("X", 1)), op(("XX", 1)))


def test_small_dense_matrices():
    np.testing.assert_array_equal(to_dense(op(("Z", 1))), np.diag([1, -1]))
    np.testing.assert_array_equal(to_dense(op(("X", 0.5))), [[0, 0.5], [0.5, 0]])


def test_dense_cap_enforced():
    with pytest.raises(PauliError):
        to_dense(OperatorSum.identity(15))


def test_ground_energy_trivial():
    assert ground_energy_exact(op(("Z", 1))) == pytest.approx(-1)
    assert ground_energy_exact(op(("ZI", 1), ("IZ", 1))) == pytest.approx(-2)


def test_ground_energy_rejects_non_hermitian():
    with pytest.raises(PauliError):
        ground_energy_exact(op(("X", 1j)))


def test_expectation_trivial():
    assert expectation(op(("Z", 1)), "0") == 1
    assert expectation(op(("X", 1)), "0") == 0
    with pytest.raises(PauliError):
        expectation(op(("ZZ", 1)), "0")


def test_h2_dense_ground_energy_matches_oracle(oracles):
    h = encode(load_fixture("h2"), "jordan_wigner")
    assert ground_energy_exact(h) == pytest.approx(oracles["fixtures"]["h2"]["e_ground_dense"], abs=1e-9)


def test_h2_hf_expectation_matches_oracle(oracles):
    f = load_fixture("h2")
    h = encode(f, "jordan_wigner")
    e = expectation(h, hf_state_in_encoding(f, "jordan_wigner"))
    assert e == pytest.approx(oracles["fixtures"]["h2"]["e_hf_dense"], abs=1e-9)


def test_text_round_trip(tmp_path):
    h = op(("XZI", 0.5), ("IYY", -0.25), ("III", 1.5), ("ZII", 0.1 + 0.2j))
    assert parse_pauli_text(format_pauli_text(h), 3) == h
    write_pauli_file(h, tmp_path / "h.pauli")
    assert read_pauli_file(tmp_path / "h.pauli") == h


def test_text_format_parsing():
    h = parse_pauli_text("# comment\n0.5 X0 Z1\n\n-1 0.5 Y1\n")
    assert h == op(("XZ", 0.5), ("IY", -1 + 0.5j))
    with pytest.raises(PauliError):
        parse_pauli_text("0.5 Q0")
    with pytest.raises(PauliError):
        parse_pauli_text("0.5 X3", n_qubits=2)


def test_prune_threshold():
    h = op(("X", 1.0)) + op(("X", -1.0 + 1e-13))
    assert len(h) == 0


@given(labels)
def test_product_matches_dense_product(pair):
    a, b = pair
    prod = multiply(op((a, 1)), op((b, 1)))
    np.testing.assert_allclose(to_dense(prod), dense_label(a) @ dense_label(b), atol=1e-12)


@given(labels)
def test_commutation_from_symplectic_form(pair):
    a, b = (PauliTerm.from_label(x) for x in pair)
    da, db = dense_label(pair[0]), dense_label(pair[1])
    assert a.commutes(b) == np.allclose(da @ db, db @ da)
    bracket = commutator(op((pair[0], 1)), op((pair[1], 1))) if a.commutes(b) else \
        anticommutator(op((pair[0], 1)), op((pair[1], 1)))
    assert len(bracket) == 0


@given(st.text("IXYZ", min_size=1, max_size=6))
def test_self_product_is_identity(label):
    t = PauliTerm.from_label(label)
    sq = t * t
    assert sq.key == (0, 0) and sq.factor in (1, -1)


@given(st.lists(st.tuples(st.text("IXYZ", min_size=3, max_size=3),
                          st.floats(-2, 2, allow_nan=False)), min_size=1, max_size=8),
       st.lists(st.integers(0, 1), min_size=3, max_size=3))
def test_variational_bound_and_hermiticity(terms, bits):
    h = op(*terms)
    d = to_dense(h)
    np.testing.assert_allclose(d, d.conj().T)
    assert ground_energy_exact(h) <= expectation(h, bits) + 1e-9
