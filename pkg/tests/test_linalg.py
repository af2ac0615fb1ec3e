import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cocyclelab.exceptions import DimensionMismatch, InvalidMatrix, InvalidOrder, SingularMatrix
from cocyclelab.linalg import (
    Subspace,
    conorm,
    exterior_power,
    hestenes_batch,
    intersect,
    left_vectors_batch,
    norm,
    principal_angles,
    singular_values,
    singular_values_batch,
    subspace_angle,
    svd,
    wedge_indices,
)

# roots of t^2 - 3t + 1, the characteristic polynomial of [[2,1],[1,1]]
PHI2 = (3 + math.sqrt(5)) / 2
PHI2_INV = (3 - math.sqrt(5)) / 2
CAT = np.array([[2.0, 1.0], [1.0, 1.0]])


def leibniz_det(M):
    """Determinant by the permutation expansion; independent of LAPACK."""
    n = len(M)
    total = 0.0
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = -1.0 if inv % 2 else 1.0
        for i in range(n):
            term *= M[i][perm[i]]
        total += term
    return total


def wedge_oracle(M, i):
    """Entries of the i-th exterior power are the i x i minors (Cauchy-Binet)."""
    d = len(M)
    subsets = list(itertools.combinations(range(d), i))
    return np.array([[leibniz_det([[M[r][c] for c in J] for r in I]) for J in subsets] for I in subsets])


def well_conditioned(d_min=2, d_max=5):
    return st.integers(d_min, d_max).flatmap(
        lambda d: arrays(np.float64, (d, d), elements=st.floats(-3, 3, allow_nan=False, width=64))
    )


def _usable(M, cap=1e6):
    s = np.linalg.svd(M, compute_uv=False)
    return s[-1] > 1e-6 and s[0] / s[-1] < cap


# --- svd -------------------------------------------------------------------


def test_svd_identity():
    assert np.allclose(svd(np.eye(2)).singular_values, [1, 1], atol=1e-15)


def test_svd_diagonal():
    assert np.allclose(svd(np.diag([math.e, 1 / math.e])).singular_values, [math.e, 1 / math.e], rtol=1e-14)


def test_svd_symmetric_matches_characteristic_roots():
    assert np.allclose(svd(CAT).singular_values, [PHI2, PHI2_INV], rtol=1e-13)


def test_svd_rejects_non_finite():
    with pytest.raises(InvalidMatrix):
        svd(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(InvalidMatrix):
        svd(np.array([[np.inf, 0.0], [0.0, 1.0]]))


@settings(max_examples=80, deadline=None)
@given(well_conditioned(1, 6))
def test_svd_invariants(M):
    res = svd(M)
    s = res.singular_values
    assert np.all(np.diff(s) <= 0)
    assert np.all(s >= 0)
    scale = max(np.abs(M).max(), 1e-300)
    assert np.abs(res.left_basis @ np.diag(s) @ res.right_basis.T - M).max() <= 1e-10 * max(scale, s[0])
    assert np.allclose(res.left_basis.T @ res.left_basis, np.eye(len(M)), atol=1e-10)
    assert np.allclose(res.right_basis.T @ res.right_basis, np.eye(len(M)), atol=1e-10)
    det = abs(np.linalg.det(M))
    if det > 1e-8 * s[0] ** len(M):
        assert np.prod(s) == pytest.approx(det, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(well_conditioned(1, 6))
def test_jacobi_agrees_with_lapack(M):
    # dual route: in-house Jacobi against LAPACK
    ref = np.linalg.svd(M, compute_uv=False)
    assert np.allclose(singular_values(M), ref, rtol=1e-10, atol=1e-12 * max(ref[0], 1e-300))
    assert singular_values(M)[0] == pytest.approx(norm(M), rel=1e-14)


def test_batched_jacobi_matches_scalar():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(40, 4, 4)) * np.exp(rng.normal(scale=3, size=(40, 1, 4)))
    batch = singular_values_batch(A)
    for k in range(len(A)):
        assert np.allclose(batch[k], singular_values(A[k]), rtol=1e-10)
    W, s = hestenes_batch(A)
    assert W.shape == A.shape
    U = left_vectors_batch(A)
    for k in range(len(A)):
        assert np.allclose(U[k].T @ U[k], np.eye(4), atol=1e-10)
        # the leading left vector attains the norm
        assert np.linalg.norm(A[k].T @ U[k][:, 0]) == pytest.approx(batch[k][0], rel=1e-9)


# --- norms -----------------------------------------------------------------


@pytest.mark.parametrize(
    "M, expected",
    [(np.eye(2), 1.0), (np.diag([2.0, 0.5]), 0.5), (CAT, PHI2_INV)],
)
def test_conorm_examples(M, expected):
    assert conorm(M) == pytest.approx(expected, rel=1e-12)


def test_conorm_singular():
    with pytest.raises(SingularMatrix):
        conorm(np.array([[1.0, 2.0], [2.0, 4.0]]))


@settings(max_examples=80, deadline=None)
@given(well_conditioned())
def test_conorm_times_inverse_norm_is_one(M):
    assume(_usable(M))
    assert conorm(M) * norm(np.linalg.inv(M)) == pytest.approx(1.0, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4).flatmap(lambda d: st.tuples(*[arrays(np.float64, (d, d), elements=st.floats(-2, 2, width=64))] * 3)))
def test_product_singular_value_bounds(mats):
    M1, M2, M3 = mats
    assume(_usable(M1, 1e4) and _usable(M3, 1e4))
    s = singular_values(M3 @ M2 @ M1)
    s2 = singular_values(M2)
    lo = conorm(M3) * s2 * conorm(M1)
    hi = norm(M3) * s2 * norm(M1)
    tol = 1e-8 * hi.max()
    assert np.all(lo <= s * (1 + 1e-8) + tol)
    assert np.all(s <= hi * (1 + 1e-8) + tol)


# --- exterior powers -------------------------------------------------------


def test_exterior_first_power_is_identity_map():
    M = np.arange(9.0).reshape(3, 3) + np.eye(3)
    assert np.array_equal(exterior_power(M, 1), M)


def test_exterior_top_power_is_determinant():
    M = np.array([[1.5, -2.0], [0.25, 3.0]])
    assert exterior_power(M, 2).shape == (1, 1)
    assert exterior_power(M, 2)[0, 0] == pytest.approx(1.5 * 3.0 + 2.0 * 0.25, rel=1e-15)


def test_exterior_diagonal():
    a, b, c = 2.0, 3.0, 5.0
    out = exterior_power(np.diag([a, b, c]), 2)
    assert np.allclose(out, np.diag([a * b, a * c, b * c]))
    assert np.allclose(out, wedge_oracle(np.diag([a, b, c]), 2))


def test_wedge_basis_is_lexicographic():
    assert wedge_indices(4, 2) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


@pytest.mark.parametrize("i", [0, 4, -1])
def test_exterior_order_out_of_range(i):
    with pytest.raises(InvalidOrder):
        exterior_power(np.eye(3), i)


@settings(max_examples=40, deadline=None)
@given(well_conditioned(2, 4), st.data())
def test_exterior_matches_minor_oracle(M, data):
    i = data.draw(st.integers(1, len(M)))
    assert np.allclose(exterior_power(M, i), wedge_oracle(M.tolist(), i), atol=1e-9 * max(1, np.abs(M).max()) ** i)


@settings(max_examples=60, deadline=None)
@given(well_conditioned(2, 5), st.data())
def test_exterior_singular_values_are_products(M, data):
    assume(_usable(M))
    i = data.draw(st.integers(1, len(M)))
    s = singular_values(M)
    products = sorted((math.prod(s[list(J)]) for J in itertools.combinations(range(len(M)), i)), reverse=True)
    assert np.allclose(singular_values(exterior_power(M, i)), products, rtol=1e-8, atol=1e-12 * products[0])


# --- subspaces -------------------------------------------------------------


def test_angle_examples():
    e1, e2 = Subspace.span([1, 0]), Subspace.span([0, 1])
    assert subspace_angle(e1, e2) == pytest.approx(math.pi / 2, abs=1e-15)
    assert subspace_angle(e1, e1) == 0.0
    diag = Subspace.span([1, 1])
    # oracle: arccos(<e1, (1,1)/sqrt2>)
    assert subspace_angle(e1, diag) == pytest.approx(math.acos(1 / math.sqrt(2)), abs=1e-14)


def test_angle_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        subspace_angle(Subspace.span([1, 0]), Subspace.span([1, 0, 0]))


def test_subspace_basis_must_be_orthonormal():
    with pytest.raises(InvalidMatrix):
        Subspace(np.array([[1.0], [1.0]]))


def test_intersect_planes_in_r3():
    E = Subspace.span([1, 0, 0], [0, 1, 0])
    F = Subspace.span([0, 1, 0], [0, 0, 1])
    line, quality = intersect(E, F, 1)
    assert subspace_angle(line, Subspace.span([0, 1, 0])) < 1e-12
    assert quality >= 0


def _random_subspace(rng, d, k):
    return Subspace.span(*rng.normal(size=(k, d)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5), st.data())
def test_angle_symmetric_and_basis_free(seed, d, data):
    rng = np.random.default_rng(seed)
    k1, k2 = data.draw(st.integers(1, d)), data.draw(st.integers(1, d))
    E, F = _random_subspace(rng, d, k1), _random_subspace(rng, d, k2)
    assert subspace_angle(E, F) == subspace_angle(F, E)
    Q, _ = np.linalg.qr(rng.normal(size=(k1, k1)))
    E2 = Subspace(E.basis @ Q)
    assert abs(subspace_angle(E2, F) - subspace_angle(E, F)) <= 1e-10
    ang = principal_angles(E, F)
    assert np.all((ang >= 0) & (ang <= math.pi / 2 + 1e-15))
