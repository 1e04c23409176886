"""Wild-bootstrap impulse-response bands and a residual autocorrelation LM test."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

from cvarkit import kernels
from cvarkit.errors import (
    BootstrapDegenerate,
    CvarkitError,
    TooFewObservations,
    ValidationError,
)
from cvarkit.ident import StructuralIdentification, cholesky_identify
from cvarkit.irf import IrfBundle
from cvarkit.var import VarModel, lag_matrix
from cvarkit.vecm import VecmModel, estimate_vecm, vecm_structural_irf

__all__ = ["IrfBundle", "BgTestResult", "breusch_godfrey", "chi2_critical",
           "wild_bootstrap_irf", "rademacher"]

log = logging.getLogger(__name__)

BG_LEVELS = (0.90, 0.95, 0.99)
MAX_FAILURE_SHARE = 0.02


def rademacher(seed: int, b: int, size: int) -> np.ndarray:
    """Multipliers for replication ``b``; independent of the order replications run in."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
    return rng.choice(np.array([-1.0, 1.0]), size=size)


def _batched_ma(coefs: np.ndarray, horizons: int) -> np.ndarray:
    """MA matrices for a batch of VARs; ``coefs`` is ``(B, p, n, n)``."""
    B, p, n, _ = coefs.shape
    phi = np.zeros((B, horizons + 1, n, n))
    phi[:, 0] = np.eye(n)
    for h in range(1, horizons + 1):
        for lag in range(1, min(h, p) + 1):
            phi[:, h] += coefs[:, lag - 1] @ phi[:, h - lag]
    return phi


def _batched_impact(sigma: np.ndarray, ident: StructuralIdentification) -> np.ndarray:
    order = list(ident.ordering)
    perm = sigma[:, order][:, :, order]
    chol = np.linalg.cholesky(perm)
    n, K = ident.impact.shape
    impact = np.zeros((sigma.shape[0], n, K))
    for k, col in enumerate(ident.policy_positions):
        pos = order.index(col)
        impact[:, order, k] = chol[:, :, pos] / chol[:, pos, pos][:, None]
    return impact


def _reidentify(sigma: np.ndarray, ident: StructuralIdentification) -> np.ndarray:
    return cholesky_identify(sigma, ordering=ident.ordering,
                             policies=list(ident.policy_positions)).impact


def _var_replications(model: VarModel, ident, horizons, B, seed, fixed_impact):
    p, n = model.p, model.n_series
    resid = model.residuals
    T_eff = resid.shape[0]
    init = np.ascontiguousarray(model.endog[:p])
    eta = np.stack([rademacher(seed, b, T_eff) for b in range(B)])
    eps = eta[:, :, None] * resid[None]
    paths = kernels.simulate_var(model.intercept, model.coefs, eps, init)   # (B, T, n)

    k_int = int(model.has_intercept)
    lags = [paths[:, p - lag:p - lag + T_eff] for lag in range(1, p + 1)]
    blocks = ([np.ones((B, T_eff, 1))] if k_int else []) + lags
    Z = np.concatenate(blocks, axis=2)
    Y = paths[:, p:]
    ZtZ = np.einsum("btk,btl->bkl", Z, Z)
    ZtY = np.einsum("btk,btn->bkn", Z, Y)
    ok = np.ones(B, dtype=bool)
    try:
        coef = np.linalg.solve(ZtZ, ZtY)
    except np.linalg.LinAlgError:
        coef = np.zeros_like(ZtY)
        for b in range(B):
            try:
                coef[b] = np.linalg.solve(ZtZ[b], ZtY[b])
            except np.linalg.LinAlgError:
                ok[b] = False
    ok &= np.all(np.isfinite(coef), axis=(1, 2))
    resid_b = Y - np.einsum("btk,bkn->btn", Z, coef)
    sigma = np.einsum("bti,btj->bij", resid_b, resid_b) / T_eff
    slopes = coef[:, k_int:].reshape(B, p, n, n).transpose(0, 1, 3, 2)

    if fixed_impact is not None:
        impact = np.broadcast_to(fixed_impact, (B,) + fixed_impact.shape).copy()
    else:
        try:
            impact = _batched_impact(np.where(ok[:, None, None], sigma, np.eye(n)), ident)
        except np.linalg.LinAlgError:
            impact = np.zeros((B,) + ident.impact.shape)
            for b in np.flatnonzero(ok):
                try:
                    impact[b] = _reidentify(sigma[b], ident)
                except CvarkitError:
                    ok[b] = False
    phi = _batched_ma(slopes, horizons)
    draws = phi @ impact[:, None]
    return {"level": draws}, ok


def _vecm_replications(model: VecmModel, ident, horizons, B, seed, fixed_impact):
    p, n = model.p, model.n_series
    resid = model.residuals
    T_eff = resid.shape[0]
    init = np.ascontiguousarray(model.endog[:p])
    levels = np.empty((B, horizons + 1) + ident.impact.shape)
    diffs = np.empty_like(levels)
    ok = np.ones(B, dtype=bool)
    coefs = model.level_coefs()
    for b in range(B):
        eps = rademacher(seed, b, T_eff)[:, None] * resid
        path = kernels.simulate_var(model.intercept, coefs, eps[None], init)[0]
        try:
            fit = estimate_vecm(path, p, model.r, constant=model.has_constant)
            if fixed_impact is None:
                ident_b = cholesky_identify(fit, ordering=ident.ordering,
                                            policies=list(ident.policy_positions))
            else:
                ident_b = ident
            lvl, dif = vecm_structural_irf(fit, ident_b, horizons)
        except (CvarkitError, np.linalg.LinAlgError):
            ok[b] = False
            continue
        levels[b], diffs[b] = lvl.point, dif.point
    return {"level": levels, "difference": diffs}, ok


def wild_bootstrap_irf(fit, ident: StructuralIdentification = None, horizons: int = 20,
                       B: int = 999, level: float = 0.95, seed: int = 0, space: str = "level"):
    """Pointwise percentile bands from a recursive-design wild bootstrap.

    Each replication multiplies the fitted residuals by Rademacher signs,
    rebuilds the sample from the fitted recursion and the original initial
    values, re-estimates the same model (same ``p``, and ``r`` for a VECM),
    re-identifies with the same ordering and recomputes the responses.

    Parameters
    ----------
    fit : VarModel or VecmModel
    ident : StructuralIdentification, optional
        Ordering and policy positions; default :func:`cholesky_identify` of ``fit``.
    space : {"level", "difference", "both"}
        Difference-space responses exist for VECM fits only. ``"both"``
        returns a ``(level, difference)`` pair.

    Notes
    -----
    When the fitted residuals are zero (up to rounding) every replication
    reproduces the sample, the residual covariance is zero and carries no
    identifying information; the supplied impact matrix is then kept.
    Failed re-estimations are skipped and counted; more than 2% of ``B``
    raises :class:`BootstrapDegenerate`.
    """
    if B < 199:
        raise ValidationError("B must be at least 199")
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie in (0, 1)")
    if fit.residuals is None or fit.endog is None:
        raise ValidationError("the fit carries no residuals to resample")
    is_vecm = isinstance(fit, VecmModel)
    if space not in ("level", "difference", "both"):
        raise ValidationError("space must be level, difference or both")
    if space != "level" and not is_vecm:
        raise ValidationError("difference-space bands need a VECM fit")
    ident = cholesky_identify(fit) if ident is None else ident
    scale = max(1.0, float(np.max(np.abs(fit.endog))))
    # residuals at rounding level: re-identifying from them would amplify noise
    fixed = ident.impact if np.max(np.abs(fit.residuals)) <= 1e-12 * scale else None

    if is_vecm:
        point_level, point_diff = vecm_structural_irf(fit, ident, horizons)
        points = {"level": point_level, "difference": point_diff}
        draws, ok = _vecm_replications(fit, ident, horizons, B, seed, fixed)
    else:
        phi = kernels.ma_coefficients(fit.coefs, int(horizons))
        points = {"level": IrfBundle(point=phi @ ident.impact, labels=tuple(fit.labels),
                                     shock_labels=ident.shock_labels, space="level")}
        draws, ok = _var_replications(fit, ident, horizons, B, seed, fixed)

    skipped = int(B - ok.sum())
    if skipped > MAX_FAILURE_SHARE * B:
        raise BootstrapDegenerate(f"{skipped} of {B} bootstrap replications failed")
    if skipped:
        log.warning("%d of %d bootstrap replications failed and were skipped", skipped, B)

    probs = [(1.0 - level) / 2.0, (1.0 + level) / 2.0]
    out = {}
    for key, point in points.items():
        lo, hi = np.quantile(draws[key][ok], probs, axis=0)
        out[key] = point.with_bands(lo, hi, level, B, skipped, seed=int(seed),
                                    multipliers="rademacher", design="recursive")
    if space == "both":
        return out["level"], out["difference"]
    return out[space]


@dataclass(frozen=True)
class BgTestResult:
    """System LM test for residual autocorrelation up to ``h`` lags."""

    statistic: float
    df: int
    critical_values: dict
    reject: dict
    p_value: float
    per_equation: tuple
    h_lags: int


def chi2_critical(df: int, levels=BG_LEVELS) -> dict:
    return {float(lv): float(stats.chi2.ppf(lv, df)) for lv in levels}


def _regressors(fit) -> np.ndarray:
    if isinstance(fit, VecmModel):
        data, p = fit.endog, fit.p
        T = data.shape[0]
        dx = np.diff(data, axis=0)
        blocks = [data[p - 1:T - 1]] + [dx[p - 1 - lag:T - 1 - lag] for lag in range(1, p)]
        if fit.has_constant:
            blocks.insert(0, np.ones((T - p, 1)))
        return np.hstack(blocks)
    return lag_matrix(fit.endog, fit.p, fit.has_intercept)


def breusch_godfrey(fit, h_lags: int = 1) -> BgTestResult:
    """LM test of no residual autocorrelation up to lag ``h_lags``.

    Residuals are whitened by the Cholesky factor of their covariance. Each
    whitened component is regressed on the model's regressors plus its own
    ``h_lags`` lags (zeros before the sample starts); the statistic is the
    sum over components of ``T_eff * R^2`` and is compared with
    ``chi2(n * h_lags)``.
    """
    if int(h_lags) != h_lags or h_lags < 1:
        raise ValidationError("h_lags must be a positive integer")
    h = int(h_lags)
    if fit.residuals is None or fit.endog is None:
        raise ValidationError("the fit carries no residuals")
    resid = fit.residuals
    T_eff, n = resid.shape
    X = _regressors(fit)
    if T_eff - X.shape[1] - h < 2:
        raise TooFewObservations(
            f"{T_eff} residuals cannot support {X.shape[1]} regressors plus {h} lags")
    sigma = resid.T @ resid / T_eff
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise TooFewObservations("residual covariance is singular") from None
    white = np.linalg.solve(chol, resid.T).T

    per_eq = []
    for i in range(n):
        e = white[:, i]
        lagged = np.zeros((T_eff, h))
        for lag in range(1, h + 1):
            lagged[lag:, lag - 1] = e[:-lag]
        Z = np.hstack([X, lagged])
        coef, *_ = np.linalg.lstsq(Z, e, rcond=None)
        u = e - Z @ coef
        r2 = 1.0 - (u @ u) / (e @ e)
        per_eq.append(float(T_eff * max(r2, 0.0)))
    stat = float(sum(per_eq))
    df = n * h
    crit = chi2_critical(df)
    return BgTestResult(statistic=stat, df=df, critical_values=crit,
                        reject={lv: stat > cv for lv, cv in crit.items()},
                        p_value=float(stats.chi2.sf(stat, df)), per_equation=tuple(per_eq),
                        h_lags=h)
