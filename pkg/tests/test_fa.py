import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matrices import SIGMA_I2, SIGMA_II4, SIGMA_i, SIGMA_ii, random_psd
from unifactor import (
    ValidationError,
    fit_fa_ls,
    fit_fa_ml,
    fit_fa_pls,
    loewner_leq,
    regularization_sweep,
    solve_pca,
)
from unifactor.fa import emit_sweep_csv, t_step, v_step
from unifactor.objectives import eval_ls, eval_modified_l0, eval_neg_loglik, eval_pls


def non_increasing(trace, slack=1e-12):
    return all(b <= a + slack * max(1.0, abs(a)) for a, b in zip(trace, trace[1:]))


def ls_loss(fit, sigma):
    dec = fit.decomposition
    return eval_ls(dec.low_rank, dec.residual, sigma)


# ---- least squares ---------------------------------------------------------

def test_ls_sigma_i_recovers_exact_decomposition():
    fit = fit_fa_ls(SIGMA_i, 1)
    np.testing.assert_allclose(fit.v, [1.0, 2.0, 2.0], atol=1e-3)
    assert ls_loss(fit, SIGMA_i) <= 1e-6
    assert fit.report.converged
    assert non_increasing(fit.report.objective_trace)


def test_ls_diagonal_sigma_fits_exactly():
    sigma = np.diag([4.0, 1.0])
    fit = fit_fa_ls(sigma, 1)
    assert ls_loss(fit, sigma) <= 1e-12
    np.testing.assert_allclose(fit.decomposition.implied().entries, sigma, atol=1e-9)


def test_ls_sigma_ii():
    fit = fit_fa_ls(SIGMA_ii, 2)
    assert ls_loss(fit, SIGMA_ii) <= 1e-6
    assert non_increasing(fit.report.objective_trace)


def test_loading_reproduces_low_rank():
    dec = fit_fa_ls(SIGMA_ii, 2).decomposition
    np.testing.assert_allclose(dec.loading @ dec.loading.T, dec.low_rank.entries, atol=1e-10)


# ---- penalized least squares -----------------------------------------------

def test_pls_fixed_point_identity():
    lam = 1e-3
    fit = fit_fa_pls(SIGMA_I2, 1, lam)
    t = fit.decomposition.low_rank.entries
    np.testing.assert_allclose(fit.v, np.clip(np.diag(SIGMA_I2 - t), 0, None) / (1 + lam), atol=1e-12)
    # T lags one half-step behind, within the stopping threshold
    np.testing.assert_allclose(t, t_step(SIGMA_I2, fit.v, 1), atol=1e-5)


def test_pls_sigma_I_small_lambda():
    fit = fit_fa_pls(SIGMA_I2, 1, 1e-3)
    assert ls_loss(fit, SIGMA_I2) <= 1e-3
    # the fit stays below the minimal-norm exact decomposition
    assert 1.6 < fit.v_fro < 1.655


@pytest.mark.parametrize("sigma,q", [(SIGMA_I2, 1), (SIGMA_II4, 2), (SIGMA_i, 1)])
def test_pls_large_lambda_shrinks(sigma, q):
    lam = 1e3
    fit = fit_fa_pls(sigma, q, lam)
    assert fit.v_fro <= np.linalg.norm(np.diag(sigma)) / (1 + lam) + 1e-12


def test_sweep_monotone_toward_minimal_norm():
    rows = regularization_sweep(SIGMA_I2, 1, [1.0, 0.1, 0.01, 0.001])
    norms = [r.v_fro for r in rows]
    assert all(b >= a - 1e-6 for a, b in zip(norms, norms[1:]))
    losses = [r.ls_loss for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))


def test_sweep_csv():
    text = emit_sweep_csv(regularization_sweep(SIGMA_I2, 1, [1.0, 0.1]))
    lines = text.splitlines()
    assert lines[0] == "lambda,v_fro,ls_loss"
    assert len(lines) == 3
    assert lines[1].startswith("1.0,")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.sampled_from([0.0, 1e-3, 0.1, 1.0]))
def test_descent_invariants(seed, p, lam):
    rng = np.random.default_rng(seed)
    sigma = random_psd(rng, p)
    q = int(rng.integers(1, p))
    fit = fit_fa_pls(sigma, q, lam, max_iters=300)
    trace = fit.report.objective_trace
    assert non_increasing(trace)
    assert trace[-1] == pytest.approx(
        eval_pls(fit.decomposition.low_rank, fit.decomposition.residual, sigma, lam), rel=1e-9, abs=1e-12)
    assert np.all(fit.v >= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.floats(0.0, 2.0))
def test_block_steps_are_optimal(seed, p, lam):
    rng = np.random.default_rng(seed)
    sigma = random_psd(rng, p)
    q = int(rng.integers(1, p))
    v = rng.uniform(0, 1, p) * np.diag(sigma)
    t = t_step(sigma, v, q)
    w, r = np.linalg.eigh(sigma - np.diag(v))
    top = np.clip(w[::-1][:q], 0, None)
    ref = (r[:, ::-1][:, :q] * top) @ r[:, ::-1][:, :q].T
    np.testing.assert_allclose(t, ref, atol=1e-10)
    if np.linalg.eigvalsh(sigma - np.diag(v))[0] > 0:
        np.testing.assert_allclose(t, solve_pca(sigma - np.diag(v), q).low_rank.entries, atol=1e-10)
    v_new = v_step(sigma, t, lam)
    base = eval_pls(t, np.diag(v_new), sigma, lam)
    for i in range(p):
        for delta in (1e-3, -1e-3):
            w = v_new.copy()
            w[i] += delta
            if w[i] < 0:
                continue
            assert eval_pls(t, np.diag(w), sigma, lam) >= base - 1e-12


def test_stop_on_loewner_keeps_previous_iterate():
    fit = fit_fa_pls(SIGMA_I2, 1, 0.0, stop_on_loewner=True)
    assert loewner_leq(np.diag(fit.v), SIGMA_I2)
    assert non_increasing(fit.report.objective_trace)


def test_v0_validation():
    with pytest.raises(ValidationError):
        fit_fa_ls(SIGMA_I2, 1, v0=[-1.0, 0.0])
    with pytest.raises(ValidationError):
        fit_fa_ls(SIGMA_I2, 1, v0=[[1.0, 0.5], [0.5, 1.0]])
    with pytest.raises(ValidationError):
        fit_fa_ls(SIGMA_I2, 1, v0=[3.0, 0.0])
    fit = fit_fa_ls(SIGMA_i, 1, v0=[0.5, 0.5, 0.5])
    assert ls_loss(fit, SIGMA_i) <= 1e-6


def test_q_validation():
    with pytest.raises(ValidationError):
        fit_fa_ls(SIGMA_I2, 2)
    with pytest.raises(ValidationError):
        fit_fa_pls(SIGMA_I2, 1, -1.0)


def test_identified_case_modified_l0():
    """At the exact decomposition of sigma(i) the modified l0 loss is p and no
    feasible rank-one T on a coarse grid does better."""
    assert eval_modified_l0(SIGMA_i - np.ones((3, 3))) == 3
    grid = np.linspace(-2, 2, 21)
    for a in itertools.product(grid, repeat=3):
        t = np.outer(a, a)
        if np.linalg.eigvalsh(SIGMA_i - t)[0] < -1e-10:
            continue
        assert eval_modified_l0(SIGMA_i - t) >= 3


# ---- maximum likelihood ----------------------------------------------------

def test_ml_sigma_i():
    fit = fit_fa_ml(SIGMA_i, 1)
    dec = fit.decomposition
    exact = eval_neg_loglik(np.ones((3, 3)), np.diag([1.0, 2.0, 2.0]), SIGMA_i)
    assert exact == pytest.approx(np.log(12) + 3, abs=1e-12)
    assert eval_neg_loglik(dec.low_rank, dec.residual, SIGMA_i) <= exact + 1e-4
    assert fit.report.objective == pytest.approx(eval_neg_loglik(dec.low_rank, dec.residual, SIGMA_i))
    assert non_increasing(fit.report.objective_trace, 0)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_ml_scaled_identity(c):
    fit = fit_fa_ml(c * np.eye(3), 1)
    assert fit.report.objective <= np.log(c ** 3) + 3 + 1e-6


def test_ml_sigma_I():
    assert fit_fa_ml(SIGMA_I2, 1).report.objective <= np.log(5) + 2 + 1e-4


def test_ml_requires_positive_definite():
    with pytest.raises(ValidationError):
        fit_fa_ml(np.ones((3, 3)), 1)


def test_ml_budget_flag():
    fit = fit_fa_ml(SIGMA_i, 1, max_evals=20)
    assert not fit.report.converged
