import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from matrices import A_II4, CITY, CITY_R1, SIGMA_I2, SIGMA_II4
from unifactor import (
    ConvergenceError,
    DataMatrix,
    DimensionError,
    NegativeSpectrumError,
    RankDeficiencyError,
    SymmetricMatrix,
    covariance_from_data,
    cumulative_proportion,
    eigendecompose,
    is_psd,
    loewner_leq,
    numeric_rank,
    subspace_contains,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def symmetric(draw, max_p=8):
    p = draw(st.integers(1, max_p))
    m = draw(arrays(np.float64, (p, p), elements=finite))
    return (m + m.T) / 2


def power_iteration(m, iters=2000):
    x = np.ones(m.shape[0])
    for _ in range(iters):
        x = m @ x
        x /= np.linalg.norm(x)
    return float(x @ m @ x), x


# ---- SymmetricMatrix -------------------------------------------------------

def test_construction_symmetrizes_exactly():
    s = SymmetricMatrix([[1.0, 2.0], [2.0 + 1e-9, 1.0]])
    assert s.entries[0, 1] == s.entries[1, 0]
    assert s.dim == 2


def test_entries_are_read_only():
    s = SymmetricMatrix(SIGMA_I2)
    with pytest.raises(ValueError):
        s.entries[0, 0] = 5.0


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((0, 0)), np.zeros((2, 2, 2))])
def test_non_square_rejected(bad):
    with pytest.raises(DimensionError):
        SymmetricMatrix(bad)


def test_data_matrix_needs_two_rows():
    with pytest.raises(DimensionError):
        DataMatrix([[1.0, 2.0]])
    d = DataMatrix(np.arange(6.0).reshape(3, 2))
    assert (d.n, d.p) == (3, 2)


# ---- eigendecompose --------------------------------------------------------

def test_eigen_2x2_closed_form_and_power_oracle():
    es = eigendecompose(SIGMA_I2)
    roots = np.array([(5 + np.sqrt(5)) / 2, (5 - np.sqrt(5)) / 2])
    np.testing.assert_allclose(es.values, roots, atol=1e-12)
    np.testing.assert_allclose(es.values, [3.61803, 1.38197], atol=1e-5)
    np.testing.assert_allclose(es.vectors[:, 0], [0.52573, 0.85065], atol=1e-5)
    lam, x = power_iteration(SIGMA_I2)
    assert lam == pytest.approx(es.values[0], abs=1e-10)
    assert abs(x @ es.vectors[:, 0]) == pytest.approx(1.0, abs=1e-10)


def test_eigen_identity_tie_break():
    es = eigendecompose(np.eye(3))
    np.testing.assert_array_equal(es.values, [1.0, 1.0, 1.0])
    np.testing.assert_array_equal(es.vectors, np.eye(3))


def test_eigen_diagonal_returns_axes_in_value_order():
    es = eigendecompose(np.diag([1.0, 3.0, 2.0]))
    np.testing.assert_array_equal(es.values, [3.0, 2.0, 1.0])
    np.testing.assert_array_equal(np.abs(es.vectors), np.eye(3)[:, [1, 2, 0]])


def test_eigen_city_first_vector_matches_numpy():
    v = eigendecompose(CITY).vectors[:, 0]
    w, vecs = np.linalg.eigh(CITY)
    ref = vecs[:, -1] * np.sign(vecs[0, -1])
    np.testing.assert_allclose(v, ref, atol=1e-12)
    # the published rounded vector is about 1 degree away from this one
    assert np.degrees(np.arccos(abs(v @ CITY_R1) / np.linalg.norm(CITY_R1))) < 1.5


def test_eigen_sign_convention():
    es = eigendecompose(np.array([[1.0, -2.0], [-2.0, 1.0]]))
    for col in es.vectors.T:
        assert col[np.argmax(np.abs(col))] >= 0


def test_eigen_sweep_budget_exhaustion():
    with pytest.raises(ConvergenceError):
        eigendecompose(SIGMA_I2, max_sweeps=0)


@settings(max_examples=200, deadline=None)
@given(symmetric())
def test_eigen_invariants(m):
    es = eigendecompose(m)
    assert np.all(np.diff(es.values) <= 0)
    assert np.max(np.abs(es.vectors.T @ es.vectors - np.eye(m.shape[0]))) <= 1e-10
    assert np.max(np.abs(es.reconstruct() - m)) <= 1e-8
    np.testing.assert_allclose(es.values, np.linalg.eigvalsh(m)[::-1], atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(symmetric(max_p=6))
def test_eigen_deterministic(m):
    a, b = eigendecompose(m), eigendecompose(m.copy())
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.vectors, b.vectors)


# ---- PSD predicates and rank -----------------------------------------------

def test_is_psd_examples():
    assert is_psd(np.diag([5 / 3, 0.0]), 1e-10)
    assert not is_psd(np.array([[1.0, 2.0], [2.0, 1.0]]), 1e-10)
    assert is_psd(SIGMA_II4 - A_II4 @ A_II4.T, 1e-10)


def test_loewner_examples():
    assert loewner_leq(np.diag([1.0, 1.0]), np.diag([2.0, 3.0]))
    assert loewner_leq(SIGMA_I2, SIGMA_I2)
    t_star = np.array([[1.0, 1.6180], [1.6180, 2.6180]])
    # rounded entries sit 1e-5 inside the boundary
    assert loewner_leq(t_star, SIGMA_I2, 1e-4)
    assert not loewner_leq(np.diag([3.0, 0.0]), SIGMA_I2)


def test_loewner_dimension_mismatch():
    with pytest.raises(DimensionError):
        loewner_leq(np.eye(2), np.eye(3))


@settings(max_examples=100, deadline=None)
@given(symmetric(max_p=5), st.floats(0, 1e-7))
def test_loewner_antisymmetry(a, jitter):
    b = a + jitter * np.eye(a.shape[0])
    if loewner_leq(a, b) and loewner_leq(b, a):
        assert np.max(np.abs(a - b)) <= 1e-6


def test_numeric_rank_examples():
    assert numeric_rank(np.diag([5 / 3, 0.0])) == 1
    assert numeric_rank(np.ones((3, 3))) == 1
    assert numeric_rank(SIGMA_II4 - np.diag([1.0, 1.0, 0.0, 0.0])) == 2


# ---- covariance ------------------------------------------------------------

def test_covariance_examples():
    rows = [[1.0, 0.0], [-1.0, 0.0]]
    np.testing.assert_array_equal(covariance_from_data(rows, "ml").entries, [[1, 0], [0, 0]])
    np.testing.assert_array_equal(covariance_from_data(rows, "sample").entries, [[2, 0], [0, 0]])
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    c = pts - pts.mean(axis=0)
    oracle = sum(np.outer(r, r) for r in c) / 3
    np.testing.assert_allclose(covariance_from_data(pts, "ml").entries, oracle, atol=1e-15)
    np.testing.assert_allclose(oracle, np.full((2, 2), 2 / 3), atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 4)), elements=finite))
def test_covariance_estimators_agree(x):
    n = x.shape[0]
    ml = covariance_from_data(x, "ml").entries
    sample = covariance_from_data(x, "sample").entries
    np.testing.assert_allclose(ml * n / (n - 1), sample, rtol=1e-12, atol=1e-12)


# ---- cumulative proportion -------------------------------------------------

def test_cumulative_proportion_examples():
    assert cumulative_proportion(eigendecompose(SIGMA_I2), 1) == pytest.approx(0.72361, abs=1e-5)
    assert cumulative_proportion(eigendecompose(SIGMA_I2), 2) == 1.0
    assert cumulative_proportion(eigendecompose(np.eye(4)), 1) == 0.25


def test_cumulative_proportion_negative_spectrum():
    with pytest.raises(NegativeSpectrumError):
        cumulative_proportion(eigendecompose(np.diag([1.0, -1.0])), 1)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (5, 5), elements=finite))
def test_cumulative_proportion_nondecreasing(b):
    es = eigendecompose(b @ b.T + 1e-3 * np.eye(5))
    props = [cumulative_proportion(es, q) for q in range(1, 6)]
    assert all(x <= y + 1e-15 for x, y in zip(props, props[1:]))
    assert props[-1] == pytest.approx(1.0)


# ---- subspace containment --------------------------------------------------

def test_subspace_examples():
    vecs = eigendecompose(SIGMA_II4).vectors
    assert subspace_contains(vecs[:, :2], vecs[:, 0], 1e-8)
    e = np.eye(3)
    assert not subspace_contains(e[:2, 0], e[:2, 1], 1e-8)
    assert subspace_contains(e[:, :2], np.array([1.0, 1.0, 0.0]) / np.sqrt(2), 1e-8)


def test_subspace_rank_deficient():
    with pytest.raises(RankDeficiencyError):
        subspace_contains(np.array([[1.0, 2.0], [1.0, 2.0]]), np.array([1.0, 0.0]))
