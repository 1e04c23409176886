"""Johansen reduced-rank VECM estimation, rank tests and long-run impacts.

The model is

    dx_t = c + Pi x_{t-1} + sum_{l=1}^{p-1} A_l dx_{t-l} + e_t,   Pi = alpha beta'

with ``p`` the lag order of the equivalent level VAR.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import scipy.linalg

from cvarkit import kernels
from cvarkit.errors import (
    GrangerConditionViolated,
    RankOutOfBounds,
    SingularMomentMatrix,
    ValidationError,
)
from cvarkit.irf import IrfBundle
from cvarkit.panel import TimeSeriesPanel
from cvarkit.var import check_sample, gaussian_loglik, ols

LEVELS = (0.90, 0.95, 0.99)

# Critical values from a published 5-variable rank table (six null
# hypotheses). Only usable when exactly six statistics are tested.
PUBLISHED_TRACE_CRITICAL = (97.18, 71.88, 49.65, 32.00, 17.85, 7.52)


@dataclass(frozen=True, eq=False)
class VecmModel:
    """Reduced-rank VECM fit.

    ``beta`` is normalised so that the rows listed in ``normalization_rows``
    form an identity block (the leading rows unless that block is singular).
    ``eigenvalues`` are the squared canonical correlations, descending.
    """

    p: int
    r: int
    alpha: np.ndarray
    beta: np.ndarray
    short_run: np.ndarray
    intercept: np.ndarray
    residuals: np.ndarray = None
    sigma: np.ndarray = None
    eigenvalues: np.ndarray = None
    loglik: float = float("nan")
    labels: tuple = ()
    roles: tuple = ()
    endog: np.ndarray = field(default=None, repr=False)
    has_constant: bool = True
    normalization_rows: tuple = ()

    @property
    def n_series(self) -> int:
        return self.alpha.shape[0]

    @property
    def pi(self) -> np.ndarray:
        return self.alpha @ self.beta.T

    @property
    def n_obs_effective(self) -> int:
        return 0 if self.residuals is None else self.residuals.shape[0]

    def level_coefs(self) -> np.ndarray:
        """Coefficients ``B_1..B_p`` of the equivalent level VAR(p)."""
        n, p = self.n_series, self.p
        A = self.short_run
        B = np.zeros((p, n, n))
        B[0] = np.eye(n) + self.pi
        if p > 1:
            B[0] += A[0]
            for lag in range(2, p):
                B[lag - 1] = A[lag - 1] - A[lag - 2]
            B[p - 1] = -A[p - 2]
        return B

    @property
    def long_run_impact(self) -> np.ndarray:
        """``C`` from the Granger representation (raises if the rank condition fails)."""
        rep = granger_representation(self)
        if not rep.condition_ok:
            raise GrangerConditionViolated("alpha_perp' Psi beta_perp is singular")
        return rep.C

    @classmethod
    def from_params(cls, alpha, beta, short_run=None, intercept=None, sigma=None,
                    labels=(), roles=()):
        """Model with known parameters, for simulation and hand checks."""
        alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
        beta = np.atleast_2d(np.asarray(beta, dtype=float))
        if alpha.shape[0] == 1 and alpha.shape[1] > 1 and beta.shape[0] == 1:
            alpha, beta = alpha.T, beta.T
        n, r = alpha.shape
        short_run = np.zeros((0, n, n)) if short_run is None else np.asarray(short_run, float)
        if short_run.ndim == 2:
            short_run = short_run[None]
        intercept = np.zeros(n) if intercept is None else np.asarray(intercept, float)
        sigma = np.eye(n) if sigma is None else np.asarray(sigma, float)
        return cls(p=short_run.shape[0] + 1, r=r, alpha=alpha, beta=beta,
                   short_run=short_run, intercept=intercept, sigma=sigma,
                   labels=tuple(labels), roles=tuple(roles))


@dataclass(frozen=True)
class RankTestResult:
    trace_stats: tuple
    critical_values: tuple
    selected_rank: int
    eigenvalues: tuple
    level: float
    n_obs_effective: int

    def rows(self):
        for r, (stat, crit) in enumerate(zip(self.trace_stats, self.critical_values)):
            yield r, stat, crit, bool(stat > crit)


@dataclass(frozen=True, eq=False)
class GrangerRepresentation:
    C: np.ndarray
    psi: np.ndarray
    condition_ok: bool
    determinant: float


def _data_of(panel):
    if isinstance(panel, TimeSeriesPanel):
        return panel.observations, panel.labels, panel.roles
    data = np.asarray(panel, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    return data, (), ()


def _moments(data: np.ndarray, p: int, constant: bool):
    """Partial out short-run regressors and form the product moments."""
    T, n = data.shape
    if int(p) != p or p < 1:
        raise ValidationError(f"lag order must be a positive integer, got {p}")
    check_sample(T, n, p)
    dx = np.diff(data, axis=0)
    z0 = dx[p - 1:]
    z1 = data[p - 1:T - 1]
    blocks = [dx[p - 1 - lag:T - 1 - lag] for lag in range(1, p)]
    if constant:
        blocks.insert(0, np.ones((T - p, 1)))
    z2 = np.hstack(blocks) if blocks else np.zeros((T - p, 0))
    if z2.shape[1]:
        r0 = z0 - z2 @ ols(z0, z2)
        r1 = z1 - z2 @ ols(z1, z2)
    else:
        r0, r1 = z0, z1
    t_eff = T - p
    s00 = r0.T @ r0 / t_eff
    s11 = r1.T @ r1 / t_eff
    s01 = r0.T @ r1 / t_eff
    for name, s in (("S00", s00), ("S11", s11)):
        try:
            np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            raise SingularMomentMatrix(f"{name} is singular") from None
        if np.linalg.cond(s) > 1e14:
            raise SingularMomentMatrix(f"{name} is numerically singular")
    return z0, z1, z2, s00, s11, s01


def _eigen(s00, s11, s01):
    m = s01.T @ np.linalg.solve(s00, s01)
    m = 0.5 * (m + m.T)
    vals, vecs = scipy.linalg.eigh(m, s11)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, 1.0 - 1e-15)
    return vals, vecs[:, order]


def _normalize_beta(beta: np.ndarray):
    n, r = beta.shape
    if r == 0:
        return beta, ()
    rows = list(range(r))
    if np.linalg.cond(beta[:r]) > 1e8:
        _, _, piv = scipy.linalg.qr(beta.T, pivoting=True)
        rows = sorted(int(i) for i in piv[:r])
    return beta @ np.linalg.inv(beta[rows]), tuple(rows)


def eigenvalues(panel, p: int, constant: bool = True) -> np.ndarray:
    data, _, _ = _data_of(panel)
    _, _, _, s00, s11, s01 = _moments(data, p, constant)
    return _eigen(s00, s11, s01)[0]


def estimate_vecm(panel, p: int, r: int, constant: bool = True) -> VecmModel:
    """Johansen maximum-likelihood estimate at lag order ``p`` and rank ``r``."""
    data, labels, roles = _data_of(panel)
    T, n = data.shape
    if int(r) != r or not 0 <= r <= n:
        raise RankOutOfBounds(f"rank must lie in 0..{n}, got {r}")
    r = int(r)
    z0, z1, z2, s00, s11, s01 = _moments(data, p, constant)
    vals, vecs = _eigen(s00, s11, s01)

    beta, rows = _normalize_beta(vecs[:, :r])
    if r:
        alpha = s01 @ beta @ np.linalg.inv(beta.T @ s11 @ beta)
    else:
        alpha = np.zeros((n, 0))
    pi = alpha @ beta.T

    target = z0 - z1 @ pi.T
    if z2.shape[1]:
        coef = ols(target, z2)
        resid = target - z2 @ coef
    else:
        coef = np.zeros((0, n))
        resid = target
    if constant:
        intercept, gam = coef[0], coef[1:]
    else:
        intercept, gam = np.zeros(n), coef
    short_run = gam.reshape(p - 1, n, n).transpose(0, 2, 1) if p > 1 else np.zeros((0, n, n))
    sigma = resid.T @ resid / resid.shape[0]
    sigma = 0.5 * (sigma + sigma.T)
    return VecmModel(
        p=int(p), r=r, alpha=alpha, beta=beta, short_run=short_run, intercept=intercept,
        residuals=resid, sigma=sigma, eigenvalues=vals,
        loglik=gaussian_loglik(sigma, resid.shape[0]),
        labels=tuple(labels), roles=tuple(roles), endog=np.array(data),
        has_constant=constant, normalization_rows=rows,
    )


def _load_critical_table():
    table = {}
    with resources.files("cvarkit").joinpath("data/johansen_trace_cv.csv").open() as fh:
        lines = [line for line in fh if not line.startswith("#")]
    for row in csv.DictReader(lines):
        key = (row["case"], int(row["n_minus_r"]))
        table[key] = (float(row["cv90"]), float(row["cv95"]), float(row["cv99"]))
    return table


_CRITICAL = _load_critical_table()


def trace_critical_values(n: int, level: float = 0.95, constant: bool = True) -> tuple:
    """Critical values for null ranks ``r = 0..n-1``."""
    if level not in LEVELS:
        raise ValidationError(f"level must be one of {LEVELS}")
    col = LEVELS.index(level)
    case = "constant" if constant else "none"
    out = []
    for r in range(n):
        key = (case, n - r)
        if key not in _CRITICAL:
            raise ValidationError(f"no tabulated trace critical value for n - r = {n - r}")
        out.append(_CRITICAL[key][col])
    return tuple(out)


def trace_statistics(vals, n_obs: int) -> np.ndarray:
    """``-T sum_{i > r} ln(1 - lambda_i)`` for ``r = 0..n-1``."""
    logs = np.log1p(-np.asarray(vals, dtype=float))
    tails = np.cumsum(logs[::-1])[::-1]
    return -n_obs * tails


def johansen_trace_test(panel, p: int, level: float = 0.95, constant: bool = True,
                        critical_values=None) -> RankTestResult:
    """Sequential trace test: the selected rank is the first null not rejected.

    ``critical_values`` overrides the embedded table; pass ``"published"`` to use
    :data:`PUBLISHED_TRACE_CRITICAL` (six hypotheses only).
    """
    data, _, _ = _data_of(panel)
    T, n = data.shape
    if n < 2:
        raise ValidationError("rank testing needs at least two series")
    vals = eigenvalues(data, p, constant)
    stats = trace_statistics(vals, T - p)
    if critical_values is None:
        crit = trace_critical_values(n, level, constant)
    elif isinstance(critical_values, str) and critical_values == "published":
        if n != len(PUBLISHED_TRACE_CRITICAL):
            raise ValidationError("the published critical values cover exactly six hypotheses")
        crit = PUBLISHED_TRACE_CRITICAL
    else:
        crit = tuple(float(c) for c in critical_values)
        if len(crit) != n:
            raise ValidationError(f"need {n} critical values, got {len(crit)}")
    selected = n
    for r in range(n):
        if stats[r] <= crit[r]:
            selected = r
            break
    return RankTestResult(
        trace_stats=tuple(float(s) for s in stats),
        critical_values=tuple(float(c) for c in crit),
        selected_rank=selected,
        eigenvalues=tuple(float(v) for v in vals),
        level=level,
        n_obs_effective=T - p,
    )


def orthogonal_complement(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space of ``m'`` (trailing QR columns)."""
    n, r = m.shape
    if r == 0:
        return np.eye(n)
    q, _ = np.linalg.qr(m, mode="complete")
    return q[:, r:]


def granger_representation(model: VecmModel, tol: float = 1e-10) -> GrangerRepresentation:
    """Long-run impact ``C = beta_perp (alpha_perp' Psi beta_perp)^{-1} alpha_perp'``.

    ``Psi = I - sum_l A_l``. With ``r = n`` there are no common trends and ``C = 0``;
    with ``r = 0`` the complements are the identity and ``C = Psi^{-1}``.
    """
    n, r = model.n_series, model.r
    psi = np.eye(n) - model.short_run.sum(axis=0) if model.short_run.size else np.eye(n)
    if r == n:
        return GrangerRepresentation(np.zeros((n, n)), psi, True, float("nan"))
    a_perp = orthogonal_complement(model.alpha)
    b_perp = orthogonal_complement(model.beta)
    core = a_perp.T @ psi @ b_perp
    det = float(np.linalg.det(core))
    if abs(det) <= tol:
        return GrangerRepresentation(np.full((n, n), np.nan), psi, False, det)
    C = b_perp @ np.linalg.solve(core, a_perp.T)
    return GrangerRepresentation(C, psi, True, det)


def level_ma(model: VecmModel, horizons: int) -> np.ndarray:
    """Moving-average matrices of the levels; they converge to ``C``."""
    return kernels.ma_coefficients(model.level_coefs(), int(horizons))


def vecm_structural_irf(model: VecmModel, ident, horizons: int):
    """Level and difference responses to unit policy shocks.

    Returns
    -------
    level, difference : IrfBundle
    """
    phi = level_ma(model, horizons)
    level = phi @ ident.impact
    diff = np.empty_like(level)
    diff[0] = level[0]
    diff[1:] = np.diff(level, axis=0)
    shocks = ident.shock_labels
    labels = tuple(model.labels)
    return (IrfBundle(point=level, labels=labels, shock_labels=shocks, space="level"),
            IrfBundle(point=diff, labels=labels, shock_labels=shocks, space="difference"))


def simulate_levels(model: VecmModel, eps, init) -> np.ndarray:
    """Simulate levels from the VAR form; ``init`` holds the first ``p`` rows."""
    eps = np.asarray(eps, dtype=float)
    return kernels.simulate_var(model.intercept, model.level_coefs(), eps[None],
                                np.asarray(init, float))[0]
