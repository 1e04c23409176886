"""Reduced-form VAR estimation, lag selection and moving-average responses."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cvarkit import kernels
from cvarkit.errors import SingularRegressorMatrix, TooShort, ValidationError
from cvarkit.panel import TimeSeriesPanel


@dataclass(frozen=True, eq=False)
class VarModel:
    """Least-squares VAR(p) fit.

    Attributes
    ----------
    p : int
    coefs : (p, n, n) array
        ``coefs[l - 1]`` multiplies ``x_{t-l}``.
    intercept : (n,) array
        Zero when the model was fitted without a constant.
    residuals : (T - p, n) array
    sigma : (n, n) array
        Maximum-likelihood residual covariance ``E'E / (T - p)``.
    loglik : float
        Gaussian log-likelihood at the estimates.
    """

    p: int
    coefs: np.ndarray
    intercept: np.ndarray
    residuals: np.ndarray = None
    sigma: np.ndarray = None
    loglik: float = float("nan")
    labels: tuple = ()
    roles: tuple = ()
    endog: np.ndarray = field(default=None, repr=False)
    has_intercept: bool = True

    @property
    def n_series(self) -> int:
        return self.coefs.shape[1]

    @property
    def n_obs_effective(self) -> int:
        return 0 if self.residuals is None else self.residuals.shape[0]

    @property
    def n_params(self) -> int:
        """Freely estimated mean parameters, ``n * (n p + constant)``."""
        n = self.n_series
        return n * (n * self.p + int(self.has_intercept))

    @property
    def fitted(self) -> np.ndarray:
        return self.endog[self.p:] - self.residuals

    def companion(self) -> np.ndarray:
        return companion_matrix(self.coefs)

    def is_stable(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(np.linalg.eigvals(self.companion()))) < 1.0 - tol)

    @classmethod
    def from_coefficients(cls, coefs, intercept=None, sigma=None, labels=(), roles=()):
        """Model with known parameters and no data, for simulation and IRFs."""
        coefs = np.asarray(coefs, dtype=float)
        if coefs.ndim == 2:
            coefs = coefs[None]
        n = coefs.shape[1]
        has_intercept = intercept is not None
        intercept = np.zeros(n) if intercept is None else np.asarray(intercept, dtype=float)
        sigma = np.eye(n) if sigma is None else np.asarray(sigma, dtype=float)
        return cls(p=coefs.shape[0], coefs=coefs, intercept=intercept, sigma=sigma,
                   labels=tuple(labels), roles=tuple(roles),
                   has_intercept=has_intercept)


def companion_matrix(coefs) -> np.ndarray:
    coefs = np.asarray(coefs, dtype=float)
    p, n, _ = coefs.shape
    comp = np.zeros((n * p, n * p))
    comp[:n] = np.hstack(list(coefs))
    if p > 1:
        comp[n:, :-n] = np.eye(n * (p - 1))
    return comp


def lag_matrix(data: np.ndarray, p: int, intercept: bool = True) -> np.ndarray:
    """Regressors ``[1, x_{t-1}, ..., x_{t-p}]`` for rows ``t = p..T-1``."""
    T = data.shape[0]
    blocks = [data[p - lag:T - lag] for lag in range(1, p + 1)]
    if intercept:
        blocks.insert(0, np.ones((T - p, 1)))
    return np.hstack(blocks)


def gaussian_loglik(sigma: np.ndarray, n_obs: int) -> float:
    n = sigma.shape[0]
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        return float("-inf")
    return float(-0.5 * n_obs * (n * np.log(2.0 * np.pi) + logdet + n))


def ols(y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Least-squares coefficients of ``y`` on ``z``; raises on rank deficiency."""
    coef, _, rank, sv = np.linalg.lstsq(z, y, rcond=None)
    if rank < z.shape[1]:
        raise SingularRegressorMatrix(
            f"regressor matrix has rank {rank} < {z.shape[1]} (collinear lags or constant series)"
        )
    return coef


def _fit_arrays(data: np.ndarray, p: int, intercept: bool):
    z = lag_matrix(data, p, intercept)
    y = data[p:]
    coef = ols(y, z)
    resid = y - z @ coef
    n = data.shape[1]
    if intercept:
        const, slopes = coef[0], coef[1:]
    else:
        const, slopes = np.zeros(n), coef
    coefs = slopes.reshape(p, n, n).transpose(0, 2, 1)
    sigma = resid.T @ resid / resid.shape[0]
    sigma = 0.5 * (sigma + sigma.T)
    return coefs, const, resid, sigma


def check_sample(T: int, n: int, p: int) -> None:
    if T - p < n * p + 2:
        raise TooShort(f"need T - p >= n*p + 2 observations; have T={T}, n={n}, p={p}")


def estimate_var(panel, p: int, intercept: bool = True) -> VarModel:
    """Equation-by-equation least squares for ``x_t = c + sum_l A_l x_{t-l} + e_t``.

    ``panel`` may be a :class:`TimeSeriesPanel` or a ``T x n`` array.
    """
    if int(p) != p or p < 1:
        raise ValidationError(f"lag order must be a positive integer, got {p}")
    p = int(p)
    if isinstance(panel, TimeSeriesPanel):
        data, labels, roles = panel.observations, panel.labels, panel.roles
    else:
        data = np.asarray(panel, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        labels, roles = (), ()
    T, n = data.shape
    check_sample(T, n, p)
    coefs, const, resid, sigma = _fit_arrays(data, p, intercept)
    return VarModel(
        p=p,
        coefs=coefs,
        intercept=const,
        residuals=resid,
        sigma=sigma,
        loglik=gaussian_loglik(sigma, resid.shape[0]),
        labels=tuple(labels),
        roles=tuple(roles),
        endog=np.array(data),
        has_intercept=intercept,
    )


def bic(model: VarModel) -> float:
    return -2.0 * model.loglik + model.n_params * np.log(model.n_obs_effective)


def select_lag_bic(panel, p_max: int, intercept: bool = True):
    """Pick the lag order minimising BIC on a common estimation sample.

    Every candidate ``p <= p_max`` is fitted to rows ``p_max..T-1`` (its
    presample is taken from the rows just before), so the likelihoods are
    comparable. Ties go to the smaller ``p``.

    Returns
    -------
    p_star : int
    table : list of (p, bic)
    """
    if p_max < 1:
        raise ValidationError("p_max must be >= 1")
    data = panel.observations if isinstance(panel, TimeSeriesPanel) else np.asarray(panel, float)
    T, n = data.shape
    check_sample(T, n, p_max)
    table = []
    for p in range(1, p_max + 1):
        model = estimate_var(data[p_max - p:], p, intercept=intercept)
        table.append((p, float(bic(model))))
    p_star = table[0][0]
    best = table[0][1]
    for p, value in table[1:]:
        if value < best:
            p_star, best = p, value
    return p_star, table


def reduced_irf(model: VarModel, horizons: int) -> np.ndarray:
    """Moving-average matrices ``Phi_0..Phi_H``, shape ``(H + 1, n, n)``."""
    if horizons < 0:
        raise ValidationError("horizons must be >= 0")
    return kernels.ma_coefficients(model.coefs, int(horizons))


def simulate(model: VarModel, eps, init=None) -> np.ndarray:
    """Simulate one path from the fitted recursion with given innovations.

    Returns a ``(p + T, n)`` array that starts with ``init`` (zeros by default).
    """
    eps = np.asarray(eps, dtype=float)
    init = np.zeros((model.p, model.n_series)) if init is None else np.asarray(init, float)
    return kernels.simulate_var(model.intercept, model.coefs, eps[None], init)[0]
