import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fidest.operators import (
    I2,
    PAULIS,
    X,
    Y,
    Z,
    NotHermitianError,
    check_density_matrix,
    check_hermitian,
    hs_inner,
    kron_all,
    lambda_max,
    pauli_basis,
    pauli_coefficients,
    pauli_labels,
    pauli_string_sparse,
    projector,
    tensor_product,
)
from fidest.simulate import haar_random_target

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_tensor_identity():
    assert np.array_equal(tensor_product(I2, I2), np.eye(4))


def test_tensor_basis_projectors():
    p = tensor_product(projector([1, 0]), projector([0, 1]))
    expected = np.zeros((4, 4))
    expected[1, 1] = 1
    assert np.array_equal(p, expected)


def test_tensor_rejects_oversized():
    big = np.eye(2**7)
    with pytest.raises(ValueError):
        tensor_product(big, big)


def test_check_hermitian_rejects():
    with pytest.raises(NotHermitianError):
        check_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_check_hermitian_symmetrizes_small_noise():
    a = X + 1e-14 * np.array([[0, 1], [0, 0]])
    out = check_hermitian(a)
    assert np.array_equal(out, out.conj().T)


@pytest.mark.parametrize("h, expected", [(np.eye(4), 1.0), (np.diag([3.0, -1.0]), 3.0)])
def test_lambda_max_examples(h, expected):
    assert lambda_max(h) == pytest.approx(expected, abs=1e-14)


def test_hs_inner_examples():
    assert hs_inner(I2, I2) == 2
    assert hs_inner(X, Z) == 0
    o = projector(haar_random_target(3, 1))
    assert hs_inner(o, o) == pytest.approx(1.0, abs=1e-12)


def test_pauli_basis_orthogonality():
    for n in (1, 2, 3):
        basis = pauli_basis(n)
        gram = np.einsum("aij,bji->ab", basis, basis)
        assert np.allclose(gram, 2**n * np.eye(4**n), atol=1e-12)
    assert pauli_labels(1) == ["I", "X", "Y", "Z"]
    assert np.array_equal(pauli_basis(1)[2], Y)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pauli_basis_elements(n):
    eye = np.eye(2**n)
    for s in pauli_basis(n):
        assert np.array_equal(s, s.conj().T)
        assert np.allclose(s @ s, eye)
        assert lambda_max(s) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sparse_pauli_strings_match_dense(n):
    dense = pauli_basis(n)
    for k, lbl in enumerate(pauli_labels(n)):
        assert np.array_equal(pauli_string_sparse(lbl).toarray(), dense[k])


def test_pauli_coefficients_reconstruct():
    o = projector(haar_random_target(2, 3))
    c = pauli_coefficients(o)
    assert np.allclose(np.einsum("k,kij->ij", c, pauli_basis(2)), o, atol=1e-13)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([0.6, 0.6]))


@settings(max_examples=60, deadline=None)
@given(a=finite, c=finite, re=finite, im=finite)
def test_lambda_max_matches_characteristic_root(a, c, re, im):
    h = np.array([[a, re - 1j * im], [re + 1j * im, c]])
    # largest root of x^2 - (a + c) x + (ac - |b|^2)
    root = 0.5 * (a + c) + np.sqrt(0.25 * (a - c) ** 2 + re**2 + im**2)
    assert abs(lambda_max(h) - root) <= 1e-10 * max(1.0, abs(root))


@settings(max_examples=30, deadline=None)
@given(labels=st.lists(st.sampled_from("IXYZ"), min_size=3, max_size=3), scale=finite)
def test_tensor_product_associative(labels, scale):
    a, b, c = (PAULIS[s] * (1 + scale * k) for k, s in enumerate(labels))
    assert np.array_equal(tensor_product(tensor_product(a, b), c), tensor_product(a, tensor_product(b, c)))
    assert np.array_equal(kron_all([a, b, c]), tensor_product(a, tensor_product(b, c)))
