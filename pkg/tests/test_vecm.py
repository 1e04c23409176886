import numpy as np
import pytest

from cvarkit.errors import GrangerConditionViolated, RankOutOfBounds, ValidationError
from cvarkit.ident import cholesky_identify, structural_irf
from cvarkit.var import VarModel, estimate_var, simulate
from cvarkit.vecm import (
    PUBLISHED_TRACE_CRITICAL,
    VecmModel,
    estimate_vecm,
    granger_representation,
    johansen_trace_test,
    level_ma,
    orthogonal_complement,
    trace_critical_values,
    trace_statistics,
    vecm_structural_irf,
)


def common_trend(T, seed, loading=0.5, drift=0.0):
    rng = np.random.default_rng(seed)
    trend = np.cumsum(drift + rng.standard_normal(T))
    return np.column_stack([trend + rng.standard_normal(T), loading * trend + rng.standard_normal(T)])


def test_matches_statsmodels_johansen():
    vecm_sm = pytest.importorskip("statsmodels.tsa.vector_ar.vecm")
    rng = np.random.default_rng(0)
    T = 500
    tr = np.cumsum(rng.normal(size=T))
    X = np.column_stack([tr + rng.normal(size=T), 0.5 * tr + rng.normal(size=T),
                         np.cumsum(rng.normal(size=T))])
    # statsmodels aligns the level regressor differently when there are no lagged
    # differences, so compare from p = 2 on
    for p in (2, 3):
        ref = vecm_sm.coint_johansen(X, 0, p - 1)
        ours = johansen_trace_test(X, p)
        np.testing.assert_allclose(ours.trace_stats, ref.lr1, rtol=1e-10)
        np.testing.assert_allclose(ours.eigenvalues, ref.eig, rtol=1e-8)
        np.testing.assert_allclose(ours.critical_values, ref.cvt[:, 1])
    m = estimate_vecm(X, 2, 1)
    fit = vecm_sm.VECM(X, k_ar_diff=1, coint_rank=1, deterministic="co").fit()
    np.testing.assert_allclose(m.pi, fit.alpha @ fit.beta.T, atol=1e-10)
    np.testing.assert_allclose(m.beta, fit.beta, atol=1e-10)
    np.testing.assert_allclose(m.short_run[0], fit.gamma, atol=1e-10)
    np.testing.assert_allclose(m.sigma, fit.sigma_u, atol=1e-10)


def test_invariants():
    X = common_trend(800, 1)
    m = estimate_vecm(X, 2, 1)
    sv = np.linalg.svd(m.pi, compute_uv=False)
    assert sv[0] > 1e-8 * np.linalg.norm(m.pi) and sv[1] < 1e-8 * np.linalg.norm(m.pi)
    assert np.all((m.eigenvalues >= 0) & (m.eigenvalues < 1))
    assert np.all(np.diff(m.eigenvalues) <= 0)
    np.testing.assert_allclose(m.beta[:1], np.eye(1))


def test_rank_zero_is_difference_var():
    X = common_trend(400, 2)
    m = estimate_vecm(X, 3, 0)
    assert np.all(m.pi == 0.0)
    dvar = estimate_var(np.diff(X, axis=0), 2)
    np.testing.assert_allclose(m.short_run, dvar.coefs, atol=1e-10)
    np.testing.assert_allclose(m.intercept, dvar.intercept, atol=1e-10)
    np.testing.assert_allclose(m.sigma, dvar.sigma, atol=1e-10)


def test_full_rank_is_level_var():
    rng = np.random.default_rng(3)
    X = np.cumsum(rng.standard_normal((300, 3)), axis=0) * 0.1 + rng.standard_normal((300, 3))
    for p in (1, 2):
        m = estimate_vecm(X, p, 3)
        var = estimate_var(X, p)
        np.testing.assert_allclose(m.level_coefs(), var.coefs, atol=1e-8)
        np.testing.assert_allclose(m.intercept, var.intercept, atol=1e-8)
        np.testing.assert_allclose(m.sigma, var.sigma, atol=1e-10)


def test_rank_bounds():
    X = common_trend(200, 4)
    with pytest.raises(RankOutOfBounds):
        estimate_vecm(X, 1, 3)
    with pytest.raises(RankOutOfBounds):
        estimate_vecm(X, 1, -1)


def test_beta_direction_recovered():
    hits = 0
    for seed in range(100):
        X = common_trend(10_000, seed, loading=0.5)
        b = estimate_vecm(X, 1, 1).beta[:, 0]
        true = np.array([0.5, -1.0])
        cos = abs(b @ true) / (np.linalg.norm(b) * np.linalg.norm(true))
        hits += np.degrees(np.arccos(min(cos, 1.0))) < 2.0
    assert hits >= 95


def test_trace_statistics_from_eigenvalues():
    X = common_trend(500, 5)
    res = johansen_trace_test(X, 2)
    lam = np.array(res.eigenvalues)
    for r in range(2):
        expected = -res.n_obs_effective * np.sum(np.log(1 - lam[r:]))
        assert res.trace_stats[r] == pytest.approx(expected, abs=1e-10)
    assert np.all(np.diff(res.trace_stats) <= 0)
    np.testing.assert_allclose(trace_statistics(lam, 10), [-10 * np.log((1 - lam[0]) * (1 - lam[1])), -10 * np.log(1 - lam[1])])


def test_critical_tables():
    assert trace_critical_values(2) == (15.4943, 3.8415)
    assert trace_critical_values(1, 0.99) == (6.6349,)
    assert trace_critical_values(2, constant=False) == (12.3212, 4.1296)
    rng = np.random.default_rng(0)
    X = np.cumsum(rng.standard_normal((300, 6)), axis=0)
    res = johansen_trace_test(X, 1, critical_values="published")
    assert res.critical_values == PUBLISHED_TRACE_CRITICAL
    with pytest.raises(ValidationError):
        johansen_trace_test(X[:, :5], 1, critical_values="published")
    with pytest.raises(ValidationError):
        johansen_trace_test(X[:, :1], 1)


def test_selected_rank_is_first_non_rejection():
    X = common_trend(600, 6, drift=0.2)
    res = johansen_trace_test(X, 1, critical_values=[1e9, 0.0])
    assert res.selected_rank == 0
    res = johansen_trace_test(X, 1, critical_values=[0.0, 1e9])
    assert res.selected_rank == 1
    res = johansen_trace_test(X, 1, critical_values=[0.0, 0.0])
    assert res.selected_rank == 2


def test_granger_hand_example():
    # alpha = (-0.5, 0)', beta = (1, -1)': alpha_perp = e2, beta_perp = (1, 1)/sqrt2,
    # C = beta_perp (alpha_perp' beta_perp)^{-1} alpha_perp' = [[0, 1], [0, 1]]
    m = VecmModel.from_params([[-0.5], [0.0]], [[1.0], [-1.0]])
    rep = granger_representation(m)
    assert rep.condition_ok
    np.testing.assert_allclose(rep.C, [[0.0, 1.0], [0.0, 1.0]], atol=1e-12)
    np.testing.assert_allclose(rep.C @ m.alpha, 0.0, atol=1e-12)
    np.testing.assert_allclose(m.beta.T @ rep.C, 0.0, atol=1e-12)


def test_granger_degenerate_ranks():
    full = VecmModel.from_params(-0.5 * np.eye(2), np.eye(2))
    np.testing.assert_array_equal(granger_representation(full).C, 0.0)
    gamma = np.array([[[0.3, 0.1], [0.0, 0.2]]])
    zero = VecmModel.from_params(np.zeros((2, 0)), np.zeros((2, 0)), short_run=gamma)
    np.testing.assert_allclose(granger_representation(zero).C, np.linalg.inv(np.eye(2) - gamma[0]))


def test_granger_condition_violation():
    # alpha_perp = e2 and beta_perp ~ (1, 1); Psi = [[1, 0], [1, -1]] makes
    # alpha_perp' Psi beta_perp = 0
    alpha, beta = np.array([[-0.5], [0.0]]), np.array([[1.0], [-1.0]])
    A1 = np.eye(2) - np.array([[1.0, 0.0], [1.0, -1.0]])
    m = VecmModel.from_params(alpha, beta, short_run=A1[None])
    rep = granger_representation(m)
    assert not rep.condition_ok
    with pytest.raises(GrangerConditionViolated):
        _ = m.long_run_impact


def test_c_is_basis_invariant():
    rng = np.random.default_rng(8)
    alpha, beta = rng.standard_normal((3, 1)), rng.standard_normal((3, 1))
    m = VecmModel.from_params(alpha, beta, short_run=0.1 * rng.standard_normal((1, 3, 3)))
    C = granger_representation(m).C
    a_perp = orthogonal_complement(alpha) @ np.array([[2.0, 1.0], [0.5, -1.0]])
    b_perp = orthogonal_complement(beta) @ np.array([[1.0, 3.0], [0.0, 1.0]])
    psi = np.eye(3) - m.short_run.sum(axis=0)
    C2 = b_perp @ np.linalg.solve(a_perp.T @ psi @ b_perp, a_perp.T)
    np.testing.assert_allclose(C, C2, atol=1e-10)


def test_level_irf_full_rank_matches_var():
    rng = np.random.default_rng(9)
    x = np.zeros((2000, 2))
    e = rng.standard_normal((2000, 2))
    for t in range(1, 2000):
        x[t] = np.array([[0.5, 0.1], [0.2, 0.3]]) @ x[t - 1] + e[t]
    m = estimate_vecm(x, 1, 2)
    var = estimate_var(x, 1)
    level, diff = vecm_structural_irf(m, cholesky_identify(m), 30)
    ref = structural_irf(var, cholesky_identify(var), 30)
    np.testing.assert_allclose(level.point, ref.point, atol=1e-8)
    assert np.abs(level.point[30]).max() < 1e-3
    np.testing.assert_allclose(diff.point[1:], np.diff(level.point, axis=0))


def test_level_irf_converges_to_c_impact():
    X = common_trend(3000, 10, drift=0.1)
    m = estimate_vecm(X, 2, 1)
    ident = cholesky_identify(m)
    level, _ = vecm_structural_irf(m, ident, 500)
    C = granger_representation(m).C
    np.testing.assert_allclose(level.point[500], C @ ident.impact, atol=1e-6)
    # cumulative MA coefficients approach C monotonically once transients die out
    phi = level_ma(m, 200)
    gaps = [np.linalg.norm(phi[h] - C) for h in (10, 50, 100, 200)]
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))


def test_random_walk_irf_is_constant():
    m = VecmModel.from_params(np.zeros((2, 0)), np.zeros((2, 0)),
                              sigma=np.array([[1.0, 0.4], [0.4, 1.0]]))
    ident = cholesky_identify(m)
    level, diff = vecm_structural_irf(m, ident, 10)
    np.testing.assert_allclose(level.point, np.broadcast_to(ident.impact, level.point.shape))
    assert np.all(diff.point[1:] == 0)


def test_level_mapping_round_trip():
    rng = np.random.default_rng(11)
    # rank 2: a single unit root keeps one noiseless path spanning the companion space
    alpha = np.array([[-0.3, 0.0], [0.1, -0.2], [0.0, 0.1]])
    beta = np.array([[1.0, 0.0], [0.0, 1.0], [0.2, -0.4]])
    short = 0.2 * rng.standard_normal((2, 3, 3))
    m = VecmModel.from_params(alpha, beta, short_run=short)
    B = m.level_coefs()
    assert B.shape == (3, 3, 3)
    np.testing.assert_allclose(B.sum(axis=0) - np.eye(3), m.pi, atol=1e-12)
    # unit roots make a constant collinear with noiseless levels, so fit without one
    path = simulate(VarModel.from_coefficients(B), np.zeros((20, 3)),
                    init=rng.standard_normal((3, 3)))
    fit = estimate_var(path, 3, intercept=False)
    np.testing.assert_allclose(fit.coefs, B, atol=1e-8)


def test_cointegrating_combination_has_bounded_variance():
    # beta'X is stationary: its variance over the full window matches the first half.
    # X is I(1): its variance grows with the window, so averaged over paths the
    # full-window variance is about four times the first-quarter variance.
    z_ratio, x_full, x_quarter = [], [], []
    for seed in range(30):
        X = common_trend(8000, seed, loading=0.5)
        z = X @ estimate_vecm(X, 1, 1).beta[:, 0]
        z_ratio.append(z.var() / z[:4000].var())
        x_full.append(X[:, 0].var())
        x_quarter.append(X[:2000, 0].var())
    assert max(z_ratio) < 1.5
    assert np.mean(x_full) / np.mean(x_quarter) > 2.0
