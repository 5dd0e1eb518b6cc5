import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from tpslab.errors import DimensionMismatch, DimensionOverflow, EmptyKeepSet, NotHermitian
from tpslab.numkernel import (
    PAULI_X,
    PAULI_Z,
    commutation_map,
    eigh,
    haar_unitary,
    kron,
    make_rng,
    matrix_from_json,
    matrix_to_json,
    nullspace_dim,
    partial_trace,
    unitarity_residual,
    unitary_exp,
)

from conftest import random_hermitian, random_matrix

seeds = st.integers(min_value=0, max_value=2**64 - 1)


# -- eigh ----------------------------------------------------------------------


def test_eigh_diagonal_sorts_and_permutes():
    dec = eigh(np.diag([2.0, 0.0, 1.0]))
    np.testing.assert_array_equal(dec.eigenvalues, [0, 1, 2])
    # eigenvectors are signed permutation columns
    np.testing.assert_allclose(np.abs(dec.eigenvectors), np.eye(3)[:, [1, 2, 0]])


def test_eigh_identity():
    np.testing.assert_allclose(eigh(np.eye(4)).eigenvalues, [1, 1, 1, 1])


def test_eigh_xx_matches_characteristic_polynomial():
    xx = np.kron(PAULI_X, PAULI_X)
    lam = sympy.symbols("lam")
    poly = sympy.Matrix(xx.real.astype(int)).charpoly(lam).as_expr()
    roots = sorted(float(r) for r, m in sympy.roots(poly, lam).items() for _ in range(m))
    assert roots == [-1.0, -1.0, 1.0, 1.0]
    np.testing.assert_allclose(eigh(xx).eigenvalues, roots, atol=1e-14)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        eigh(np.array([[0, 1], [0, 0]], dtype=complex))


@settings(max_examples=40, deadline=None)
@given(seed=seeds, dim=st.integers(1, 12))
def test_eigh_contract(seed, dim):
    a = random_hermitian(dim, make_rng(seed))
    dec = eigh(a)
    assert np.all(np.diff(dec.eigenvalues) >= 0)
    assert unitarity_residual(dec.eigenvectors) <= 1e-10 * dim
    assert np.linalg.norm(dec.reconstruct() - a) <= 1e-9 * np.linalg.norm(a)


def test_eigh_is_deterministic(rng):
    a = random_hermitian(6, rng)
    d1, d2 = eigh(a), eigh(a)
    assert np.array_equal(d1.eigenvectors, d2.eigenvectors)


# -- kron ----------------------------------------------------------------------


def test_kron_identities_and_shape():
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    assert kron(np.ones((2, 2)), np.ones((3, 3))).shape == (6, 6)


def test_kron_local_z_product():
    i2 = np.eye(2)
    prod = kron(PAULI_Z, i2) @ kron(i2, PAULI_Z)
    np.testing.assert_array_equal(prod, np.diag([1, -1, -1, 1]))


def test_kron_blocks(rng):
    a, b = random_matrix(2, 3, rng), random_matrix(3, 2, rng)
    k = kron(a, b)
    for i in range(2):
        for j in range(3):
            np.testing.assert_array_equal(k[3 * i:3 * i + 3, 2 * j:2 * j + 2], a[i, j] * b)


def test_kron_cap():
    with pytest.raises(DimensionOverflow):
        kron(np.eye(64), np.eye(65))
    assert kron(np.eye(2), np.eye(2), cap=4).shape == (4, 4)
    with pytest.raises(DimensionOverflow):
        kron(np.eye(2), np.eye(3), cap=4)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_kron_mixed_product(seed):
    rng = make_rng(seed)
    a, c = random_matrix(2, 2, rng), random_matrix(2, 2, rng)
    b, d = random_matrix(3, 3, rng), random_matrix(3, 3, rng)
    lhs = kron(a, b) @ kron(c, d)
    rhs = kron(a @ c, b @ d)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_kron_bilinear_and_associative(seed):
    rng = make_rng(seed)
    a1, a2, b = random_matrix(2, 2, rng), random_matrix(2, 2, rng), random_matrix(3, 3, rng)
    c = random_matrix(2, 2, rng)
    np.testing.assert_allclose(kron(a1 + 2j * a2, b), kron(a1, b) + 2j * kron(a2, b), atol=1e-12)
    np.testing.assert_allclose(kron(kron(a1, b), c), kron(a1, kron(b, c)), rtol=1e-14, atol=1e-14)


# -- partial trace -------------------------------------------------------------


def _density(dim, rng):
    g = random_matrix(dim, dim, rng)
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def test_partial_trace_product(rng):
    ra, rb = _density(2, rng), 3.0 * _density(3, rng)
    np.testing.assert_allclose(partial_trace(np.kron(ra, rb), [2, 3], [0]), ra * np.trace(rb), atol=1e-14)
    np.testing.assert_allclose(partial_trace(np.kron(ra, rb), [2, 3], [1]), rb * np.trace(ra), atol=1e-14)


def test_partial_trace_bell_by_explicit_sum():
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    rho = np.outer(psi, psi.conj())
    oracle = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                oracle[i, j] += rho[2 * i + k, 2 * j + k]
    np.testing.assert_allclose(oracle, np.eye(2) / 2)
    np.testing.assert_allclose(partial_trace(rho, [2, 2], [0]), oracle, atol=1e-15)


def test_partial_trace_keep_all_is_identity(rng):
    rho = _density(6, rng)
    np.testing.assert_array_equal(partial_trace(rho, [2, 3], [0, 1]), rho)


def test_partial_trace_errors(rng):
    rho = _density(6, rng)
    with pytest.raises(EmptyKeepSet):
        partial_trace(rho, [2, 3], [])
    with pytest.raises(DimensionMismatch):
        partial_trace(rho, [2, 2], [0])


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_partial_trace_composes_and_preserves_trace(seed):
    rng = make_rng(seed)
    dims = [2, 3, 2]
    rho = _density(12, rng)
    step = partial_trace(partial_trace(rho, dims, [0, 1]), [2, 3], [0])
    direct = partial_trace(rho, dims, [0])
    assert np.linalg.norm(step - direct) <= 1e-10
    red = partial_trace(rho, dims, [0, 2])
    assert abs(np.trace(red) - np.trace(rho)) <= 1e-10 * abs(np.trace(rho))
    assert np.linalg.norm(red - red.conj().T) <= 1e-10


def test_partial_trace_middle_factor_against_loop(rng):
    dims = [2, 3, 2]
    rho = _density(12, rng)
    t = rho.reshape(dims + dims)
    oracle = np.zeros((3, 3), dtype=complex)
    for a in range(2):
        for c in range(2):
            oracle += t[a, :, c, a, :, c]
    np.testing.assert_allclose(partial_trace(rho, dims, [1]), oracle, atol=1e-14)


# -- Haar ----------------------------------------------------------------------


def test_haar_dim_one_is_phase(rng):
    u = haar_unitary(1, rng)
    assert u.shape == (1, 1)
    assert abs(abs(u[0, 0]) - 1) < 1e-14


def test_haar_dim_four_seed_seven():
    u = haar_unitary(4, make_rng(7))
    assert unitarity_residual(u) <= 1e-10


def test_haar_first_entry_weight_is_uniform():
    # |U00|^2 is Uniform[0,1] for Haar U(2): mean 1/2, and both halves equally likely
    rng = make_rng(2000)
    w = np.array([abs(haar_unitary(2, rng)[0, 0]) ** 2 for _ in range(2000)])
    assert abs(w.mean() - 0.5) <= 0.05
    assert abs(np.mean(w < 0.5) - 0.5) <= 0.05


def test_haar_phase_correction_matters():
    # raw LAPACK QR gives mean cos(arg Q00) near -0.63; Haar needs a uniform phase
    rng = make_rng(11)
    ph = np.array([np.angle(haar_unitary(2, rng)[0, 0]) for _ in range(4000)])
    assert abs(np.mean(np.cos(ph))) < 0.05 and abs(np.mean(np.sin(ph))) < 0.05


# -- nullspace -----------------------------------------------------------------


def test_nullspace_zero_and_identity():
    assert nullspace_dim(np.zeros((5, 5))) == 5
    assert nullspace_dim(np.eye(5)) == 0


def test_nullspace_commutation_map_planted():
    mult = (1, 2, 1)
    assert nullspace_dim(commutation_map(np.diag([0.0, 1, 1, 2]))) == sum(m * m for m in mult)


def test_commutation_map_matches_direct_commutator(rng):
    h = random_hermitian(4, rng)
    s = random_matrix(4, 4, rng)
    np.testing.assert_allclose(
        (commutation_map(h) @ s.reshape(-1)).reshape(4, 4), s @ h - h @ s, atol=1e-12
    )


# -- unitary_exp ---------------------------------------------------------------


def test_unitary_exp_zero_time(rng):
    np.testing.assert_allclose(unitary_exp(random_hermitian(3, rng), 0.0), np.eye(3), atol=1e-14)


def test_unitary_exp_pauli_z_pi():
    np.testing.assert_allclose(unitary_exp(PAULI_Z, math.pi), -np.eye(2), atol=1e-15)


def test_unitary_exp_closed_form_sign():
    t = 0.37
    np.testing.assert_allclose(unitary_exp(PAULI_Z, t, 1), np.diag([np.exp(-1j * t), np.exp(1j * t)]), atol=1e-15)
    np.testing.assert_allclose(unitary_exp(PAULI_Z, t, -1), np.diag([np.exp(1j * t), np.exp(-1j * t)]), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, dim=st.integers(1, 8))
def test_unitary_exp_group_law_and_commutation(seed, dim):
    h = random_hermitian(dim, make_rng(seed))
    u3, u4, u7 = unitary_exp(h, 0.3), unitary_exp(h, 0.4), unitary_exp(h, 0.7)
    assert np.linalg.norm(u3 @ u4 - u7) <= 1e-8
    assert unitarity_residual(u7) <= 1e-9 * dim
    assert np.linalg.norm(u7 @ h - h @ u7) <= 1e-9 * np.linalg.norm(h)


def test_unitary_exp_propagates_not_hermitian():
    with pytest.raises(NotHermitian):
        unitary_exp(np.array([[0, 1], [0, 0]]), 1.0)


# -- JSON + RNG ----------------------------------------------------------------


def test_matrix_json_roundtrip(rng):
    m = random_matrix(2, 3, rng)
    obj = matrix_to_json(m)
    assert obj["rows"] == 2 and obj["cols"] == 3 and len(obj["entries"]) == 6
    assert obj["entries"][1] == [m[0, 1].real, m[0, 1].imag]
    np.testing.assert_array_equal(matrix_from_json(obj), m)


def test_matrix_json_rejects_wrong_length():
    with pytest.raises(DimensionMismatch):
        matrix_from_json({"rows": 2, "cols": 2, "entries": [[1, 0]]})


def test_rng_streams_reproduce():
    a = make_rng(2**64 - 1).standard_normal(5)
    b = make_rng(2**64 - 1).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_rng(0).standard_normal(5))
