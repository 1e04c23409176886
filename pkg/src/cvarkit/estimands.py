"""Causal weights and Monte Carlo oracles with known potential outcomes.

The Cholesky coefficient of an outcome on a serially independent policy is
``cov(m(W), W) / var(W)`` where ``m`` is the mean response. The functions
here express that ratio as weighted averages of causal effects
(:func:`acrt_weights`, :func:`nonneg_weights`) and check, by simulation,
that each estimation pipeline recovers the matching estimand
(:func:`verify_theorem`).
"""
from __future__ import annotations

import dataclasses
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats
from scipy.signal import lfilter

from cvarkit.errors import (
    DegenerateSample,
    InfiniteVariance,
    NoPositiveMass,
    SpecTheoremMismatch,
    ValidationError,
)
from cvarkit.panel import TimeSeriesPanel, control, from_columns, policy, treated

log = logging.getLogger(__name__)

GRID_SIZE = 2001
FD_STEP = 1e-4
TRUTH_DRAWS = 10**6
# fixed stream for population-level truths so they do not move with the sample seed
TRUTH_SEED = 97_531


# ---------------------------------------------------------------- weights

@dataclass(frozen=True, eq=False)
class CausalWeightProfile:
    """Weights turning a Cholesky coefficient into an average of effects.

    For :func:`acrt_weights`, ``q`` is defined on ``grid`` and ``q1``/``q0``
    are unset. For :func:`nonneg_weights`, ``q1`` lives on ``grid`` (which
    spans ``[d_L, d_U]``) and ``q0`` is the weight of the jump from 0 to
    ``d_L``. Integrals use the midpoint rule with cell width ``dw``.
    """

    grid: np.ndarray
    dw: float
    mean: float
    variance: float
    theta: np.ndarray
    q: np.ndarray = None
    q1: np.ndarray = None
    q0: float = None
    d_L: float = None
    d_U: float = None

    @property
    def total_mass(self) -> float:
        if self.q is not None:
            return float(self.q.sum() * self.dw)
        return float(self.q1.sum() * self.dw + self.q0)

    def integrate(self, fn: Callable) -> float:
        """``int q(w) fn(w) dw`` (or with ``q1`` for non-negative profiles)."""
        weights = self.q if self.q is not None else self.q1
        return float(np.sum(weights * fn(self.grid)) * self.dw)

    def mixture(self, response: Callable, step: float = FD_STEP) -> float:
        """``int q1 m'(w) dw + q0 (m(d_L) - m(0)) / d_L`` for a mean response ``m``."""
        if self.q1 is None:
            raise ValidationError("mixture needs a non-negative weight profile")
        slope = self.integrate(lambda w: central_difference(response, w, step))
        if self.q0 == 0.0:
            return slope
        jump = float(response(np.array([self.d_L]))[0] - response(np.array([0.0]))[0])
        return slope + self.q0 * jump / self.d_L


def _midpoints(lo: float, hi: float, size: int):
    if size < 1:
        raise ValidationError("grid_size must be >= 1")
    if hi <= lo:
        return np.array([lo]), 0.0
    edges = np.linspace(lo, hi, size + 1)
    return 0.5 * (edges[:-1] + edges[1:]), (hi - lo) / size


def _check_sample(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSample("need at least two observations")
    if not np.all(np.isfinite(x)):
        raise ValidationError("sample contains non-finite values")
    with np.errstate(over="ignore", invalid="ignore"):
        z = (x - x.mean()) / max(x.std(), np.finfo(float).tiny)
        fourth = np.mean(z**4)
        var = x.var()
    if not np.isfinite(var) or not np.isfinite(fourth):
        raise InfiniteVariance("sample moments overflow; variance treated as infinite")
    if var <= 1e-300 or np.ptp(x) == 0.0:
        raise DegenerateSample("sample has zero variance")
    return x


def _normal_profile(mu: float, sd: float, grid_size: int) -> CausalWeightProfile:
    grid, dw = _midpoints(mu - 8.0 * sd, mu + 8.0 * sd, grid_size)
    z = (grid - mu) / sd
    # E[X 1{X <= w}] for X ~ N(mu, sd^2)
    theta = mu * stats.norm.cdf(z) - sd * stats.norm.pdf(z)
    q = (mu * stats.norm.cdf(z) - theta) / sd**2
    return CausalWeightProfile(grid=grid, dw=dw, mean=mu, variance=sd**2, theta=theta, q=q)


def acrt_weights(sample_or_dist, grid_size: int = GRID_SIZE, **params) -> CausalWeightProfile:
    """Weights ``q(w) = (E[W] F(w) - theta(w)) / var(W)`` with ``theta(w) = E[W 1{W <= w}]``.

    Parameters
    ----------
    sample_or_dist : array_like, str or scipy frozen distribution
        An empirical sample, ``"normal"`` (with optional ``mean``/``sd``
        keywords) or a frozen continuous ``scipy.stats`` law.
    grid_size : int
        Number of midpoint-rule cells.

    Notes
    -----
    For a normal law ``q`` equals the normal density.
    """
    if isinstance(sample_or_dist, str):
        if sample_or_dist.lower() not in ("normal", "gaussian"):
            raise ValidationError(f"unknown named distribution {sample_or_dist!r}")
        sd = float(params.get("sd", params.get("sigma", 1.0)))
        if sd <= 0:
            raise DegenerateSample("standard deviation must be positive")
        return _normal_profile(float(params.get("mean", 0.0)), sd, grid_size)

    if hasattr(sample_or_dist, "ppf") and hasattr(sample_or_dist, "cdf"):
        dist = sample_or_dist
        mu, var = (float(v) for v in dist.stats(moments="mv"))
        if not np.isfinite(var):
            raise InfiniteVariance("distribution has infinite variance")
        if var <= 0:
            raise DegenerateSample("distribution has zero variance")
        if getattr(getattr(dist, "dist", None), "name", "") == "norm":
            return _normal_profile(mu, np.sqrt(var), grid_size)
        lo, hi = (float(v) for v in dist.ppf([1e-10, 1 - 1e-10]))
        grid, dw = _midpoints(lo, hi, grid_size)
        # theta by cumulative midpoint quadrature on a refined grid
        fine, dfine = _midpoints(lo, hi, grid_size * 16)
        cum = np.cumsum(fine * dist.pdf(fine)) * dfine
        theta = np.interp(grid, fine + 0.5 * dfine, cum)
        q = (mu * dist.cdf(grid) - theta) / var
        return CausalWeightProfile(grid=grid, dw=dw, mean=mu, variance=var, theta=theta, q=q)

    x = np.sort(_check_sample(sample_or_dist))
    n = x.size
    mu, var = float(x.mean()), float(x.var())
    grid, dw = _midpoints(float(x[0]), float(x[-1]), grid_size)
    count = np.searchsorted(x, grid, side="right")
    csum = np.concatenate(([0.0], np.cumsum(x)))
    theta = csum[count] / n
    q = (mu * count / n - theta) / var
    return CausalWeightProfile(grid=grid, dw=dw, mean=mu, variance=var, theta=theta, q=q)


def nonneg_weights(sample, grid_size: int = GRID_SIZE, d_L: float = None,
                   d_U: float = None) -> CausalWeightProfile:
    """Weights for a policy with a mass point at zero.

    ``q1(w) = E[(W - mu) 1{W >= w}] / var(W)`` on ``[d_L, d_U]`` and
    ``q0 = E[(W - mu) 1{W > 0}] d_L / var(W)``. By default ``d_L`` is the
    smallest positive observation and ``d_U`` the largest.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if np.any(x < 0):
        raise ValidationError("sample must be non-negative")
    if not np.any(x > 0):
        raise NoPositiveMass("sample has no positive values")
    x = np.sort(_check_sample(x))
    n = x.size
    mu, var = float(x.mean()), float(x.var())
    positive = x[x > 0]
    d_L = float(positive[0]) if d_L is None else float(d_L)
    d_U = float(positive[-1]) if d_U is None else float(d_U)
    grid, dw = _midpoints(d_L, d_U, grid_size)

    dev = x - mu
    tail = np.concatenate((np.cumsum(dev[::-1])[::-1], [0.0]))
    start = np.searchsorted(x, grid, side="left")
    q1 = tail[start] / n / var
    q0 = float(dev[x > 0].sum() / n * d_L / var)
    count = np.searchsorted(x, grid, side="right")
    csum = np.concatenate(([0.0], np.cumsum(x)))
    theta = csum[count] / n
    return CausalWeightProfile(grid=grid, dw=dw, mean=mu, variance=var, theta=theta,
                               q1=q1, q0=q0, d_L=d_L, d_U=d_U)


def central_difference(fn: Callable, w, step: float = FD_STEP) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return (fn(w + step) - fn(w - step)) / (2.0 * step)


def regress_residuals(model, policies) -> np.ndarray:
    """Slopes of each outcome residual on each policy, one regression per pair.

    Parameters
    ----------
    model : VarModel
        A VAR fitted on outcomes only.
    policies : (T, K) array
        Policy series on the same rows as the model's data; the first ``p``
        rows are dropped to align with the residuals.

    Returns
    -------
    gamma : (J, K) array
    """
    w = np.asarray(policies, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    resid = model.residuals
    if w.shape[0] == resid.shape[0] + model.p:
        w = w[model.p:]
    if w.shape[0] != resid.shape[0]:
        raise ValidationError("policies do not align with the model residuals")
    T = w.shape[0]
    gamma = np.empty((resid.shape[1], w.shape[1]))
    for k in range(w.shape[1]):
        wk = w[:, k] - w[:, k].mean()
        denom = wk @ wk
        if denom <= 0:
            raise DegenerateSample(f"policy {k} is constant")
        rho = (wk[1:] @ wk[:-1]) / denom
        if abs(rho) >= 2.0 / np.sqrt(T):
            log.warning("policy %d is autocorrelated (rho=%.3f); residual slopes may be biased", k, rho)
        gamma[:, k] = (resid - resid.mean(axis=0)).T @ wk / denom
    return gamma


# ---------------------------------------------------------------- DGPs

def _linear(effect):
    return lambda w: effect * np.asarray(w, dtype=float)


def _square(effect):
    return lambda w: effect * np.asarray(w, dtype=float) ** 2


def _cube(effect):
    return lambda w: effect * np.asarray(w, dtype=float) ** 3


def _step(effect):
    return lambda w: effect * (np.asarray(w, dtype=float) > 0.0)


RESPONSES = {"linear": _linear, "square": _square, "cube": _cube, "step": _step}


def response_function(name: str, effect: float = 1.0) -> Callable:
    """Named mean response ``m(w)``, scaled by ``effect``."""
    try:
        return RESPONSES[name](float(effect))
    except KeyError:
        raise ValidationError(f"unknown response {name!r}; choose from {sorted(RESPONSES)}") from None


@dataclass(frozen=True)
class PolicyLaw:
    """Marginal law of an iid policy.

    ``kind`` is ``"bernoulli"`` (parameter ``pi``), ``"gaussian"`` (``sigma``)
    or ``"nonnegative"``: zero with probability ``zero_prob``, otherwise
    ``d_L + Exponential(scale)`` or ``Uniform(d_L, d_U)``.
    """

    kind: str
    pi: float = 0.5
    sigma: float = 1.0
    zero_prob: float = 0.7
    positive: str = "exponential"
    d_L: float = 0.5
    d_U: float = float("inf")
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bernoulli", "gaussian", "nonnegative"):
            raise ValidationError(f"unknown policy law {self.kind!r}")
        if self.kind == "bernoulli" and not 0.0 < self.pi < 1.0:
            raise ValidationError("pi must lie in (0, 1)")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise ValidationError("sigma must be positive")
        if self.kind == "nonnegative":
            if not 0.0 <= self.zero_prob < 1.0:
                raise ValidationError("zero_prob must lie in [0, 1)")
            if self.positive not in ("exponential", "uniform"):
                raise ValidationError("positive part must be exponential or uniform")
            if self.positive == "uniform" and not np.isfinite(self.d_U):
                raise ValidationError("uniform positive part needs a finite d_U")
            if self.d_L < 0:
                raise ValidationError("d_L must be non-negative")

    @property
    def is_dummy(self) -> bool:
        return self.kind == "bernoulli"

    def from_latent(self, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Map standard-normal latent draws to the policy scale."""
        if self.kind == "bernoulli":
            return (z > stats.norm.ppf(1.0 - self.pi)).astype(float)
        if self.kind == "gaussian":
            return self.sigma * z
        active = z > stats.norm.ppf(self.zero_prob)
        u = rng.random(z.shape)
        if self.positive == "exponential":
            pos = self.d_L + rng.exponential(self.scale, z.shape)
        else:
            pos = self.d_L + (self.d_U - self.d_L) * u
        return np.where(active, pos, 0.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.from_latent(rng.standard_normal(size), rng)


def bernoulli(pi: float = 0.5) -> PolicyLaw:
    return PolicyLaw("bernoulli", pi=pi)


def gaussian(sigma: float = 1.0) -> PolicyLaw:
    return PolicyLaw("gaussian", sigma=sigma)


def nonnegative(zero_prob: float = 0.7, positive: str = "exponential", d_L: float = 0.5,
                d_U: float = float("inf"), scale: float = 1.0) -> PolicyLaw:
    return PolicyLaw("nonnegative", zero_prob=zero_prob, positive=positive, d_L=d_L, d_U=d_U,
                     scale=scale)


DESIGNS = ("plain", "control", "vecm")


@dataclass(frozen=True)
class DgpSpec:
    """Simulation design with known potential outcomes.

    Designs
    -------
    plain
        ``Y_t = ar Y_{t-1} + m(W_t) + u_t``.
    control
        ``Y0_t = c_t + u0_t`` and ``Y1_t = c_t + m(W_t) + u1_t`` with a common
        ``c_t = ar c_{t-1} + e_t``.
    vecm
        For each pair, ``Y0`` is a random walk and
        ``Y1_t = Y0_t + s_t + m(W_t)`` with a stationary gap
        ``s_t = ar s_{t-1} + u_t``. ``trend_sd`` scales the random-walk
        innovations.

    ``selection_bias`` correlates the policy with the treated unit's
    outcome shock through a Gaussian copula; any non-zero value breaks
    exogeneity.
    """

    policy: PolicyLaw
    response: str = "linear"
    effect: float = 1.0
    noise_sd: float = 1.0
    T: int = 10_000
    seed: int = 0
    ar: float = 0.0
    selection_bias: float = 0.0
    design: str = "plain"
    n_pairs: int = 1
    trend_sd: float = 1.0
    burn_in: int = 100

    def __post_init__(self):
        if self.T < 100:
            raise ValidationError("T must be at least 100")
        if self.design not in DESIGNS:
            raise ValidationError(f"design must be one of {DESIGNS}")
        if abs(self.ar) >= 1.0:
            raise ValidationError("ar must lie in (-1, 1)")
        if self.noise_sd < 0:
            raise ValidationError("noise_sd must be non-negative")
        if self.trend_sd < 0:
            raise ValidationError("trend_sd must be non-negative")
        if self.n_pairs < 1:
            raise ValidationError("n_pairs must be >= 1")
        response_function(self.response, self.effect)

    @property
    def m(self) -> Callable:
        return response_function(self.response, self.effect)


@dataclass(frozen=True, eq=False)
class DgpTruth:
    """Ground truth attached to a simulated panel.

    ``ate`` is ``m(1) - m(0)``; ``att`` averages ``Y_t(W_t) - Y_t(0)`` over
    treated periods of the treated outcome (for a continuous policy,
    periods with ``W_t > 0``); ``acr`` is ``E[m'(W)]`` by central
    differences over fresh policy draws; ``acrt`` integrates ``m'`` against
    :func:`acrt_weights`; ``mixture`` is the non-negative policy's weighted
    combination from :func:`nonneg_weights` (``None`` for other laws).
    """

    ate: float
    att: float
    acr: float
    acrt: float = None
    mixture: float = None
    q0: float = None
    q1_mass: float = None
    treated_count: int = 0
    potential_untreated: np.ndarray = field(default=None, repr=False)
    potential_treated: np.ndarray = field(default=None, repr=False)

    def as_dict(self) -> dict:
        keys = ("ate", "att", "acr", "acrt", "mixture", "q0", "q1_mass", "treated_count")
        return {k: getattr(self, k) for k in keys}


@dataclass(frozen=True, eq=False)
class PopulationTruth:
    ate: float
    acr: float
    acrt: float = None
    mixture: float = None
    q0: float = None
    q1_mass: float = None


def population_truth(spec: DgpSpec, draws: int = TRUTH_DRAWS) -> PopulationTruth:
    """Law-level estimands, from an RNG stream independent of ``spec.seed``."""
    m = spec.m
    rng = np.random.default_rng(TRUTH_SEED)
    law = spec.policy
    w = law.sample(rng, draws)
    ate = float(m(np.array([1.0]))[0] - m(np.array([0.0]))[0])
    acr = float(np.mean(central_difference(m, w)))
    acrt = mixture = q0 = q1_mass = None
    if law.kind == "gaussian":
        prof = acrt_weights("normal", sd=law.sigma)
        acrt = prof.integrate(lambda g: central_difference(m, g))
    elif law.kind == "nonnegative":
        prof = nonneg_weights(w, d_L=law.d_L if law.d_L > 0 else None)
        mixture = prof.mixture(m)
        q0, q1_mass = prof.q0, float(prof.q1.sum() * prof.dw)
        if np.ptp(w) > 0:
            acrt = acrt_weights(w).integrate(lambda g: central_difference(m, g))
    return PopulationTruth(ate, acr, acrt, mixture, q0, q1_mass)


def _policy_and_shock(spec: DgpSpec, rng: np.random.Generator, size: int):
    """Policy draws and the treated unit's outcome shock, possibly dependent."""
    xi = rng.standard_normal(size)
    u = rng.standard_normal(size)
    s = spec.selection_bias
    z = (xi + s * u) / np.sqrt(1.0 + s * s) if s else xi
    return spec.policy.from_latent(z, rng), u


def _ar_filter(x: np.ndarray, coef: float) -> np.ndarray:
    return lfilter([1.0], [1.0, -coef], x, axis=0)


def _simulate(spec: DgpSpec, rng: np.random.Generator):
    n_total = spec.T + spec.burn_in
    w, u = _policy_and_shock(spec, rng, n_total)
    m = spec.m
    mw, m0 = m(w), m(np.zeros_like(w))
    sd = spec.noise_sd
    cut = slice(spec.burn_in, None)

    if spec.design == "plain":
        # Y_t = ar Y_{t-1} + m(W_t) + u_t; potential outcomes vary only today's policy
        y = _ar_filter(mw + sd * u, spec.ar)
        lag = np.concatenate(([0.0], y[:-1]))
        y0 = spec.ar * lag + m0 + sd * u
        cols = {"W": w[cut], "Y": y[cut]}
        roles = {"W": policy(1), "Y": treated(1)}
        treated_obs, treated_pot0 = y[cut], y0[cut]
    elif spec.design == "control":
        common = _ar_filter(rng.standard_normal(n_total), spec.ar)
        u0 = rng.standard_normal(n_total)
        y1 = common + mw + sd * u
        y0 = common + sd * u0
        cols = {"W": w[cut], "Y1": y1[cut], "Y0": y0[cut]}
        roles = {"W": policy(1), "Y1": treated(1), "Y0": control(1)}
        treated_obs, treated_pot0 = y1[cut], (common + m0 + sd * u)[cut]
    else:
        cols, roles = {"W": w[cut]}, {"W": policy(1)}
        treated_obs = treated_pot0 = None
        for j in range(1, spec.n_pairs + 1):
            shock = u if j == 1 else rng.standard_normal(n_total)
            trend = np.cumsum(spec.trend_sd * rng.standard_normal(n_total))
            gap = _ar_filter(sd * shock, spec.ar)
            y1 = trend + gap + mw
            suffix = "" if spec.n_pairs == 1 else chr(ord("a") + j - 1)
            cols[f"Y1{suffix}"], roles[f"Y1{suffix}"] = y1[cut], treated(j)
            cols[f"Y0{suffix}"], roles[f"Y0{suffix}"] = trend[cut], control(j)
            if j == 1:
                treated_obs, treated_pot0 = y1[cut], (trend + gap + m0)[cut]
    return w[cut], cols, roles, treated_obs, treated_pot0


def simulate_dgp(spec: DgpSpec, truth_draws: int = TRUTH_DRAWS):
    """Simulate one sample and its ground truth.

    Returns
    -------
    panel : TimeSeriesPanel
        Observed outcomes: ``Y_t(W_t)`` for treated units, controls untouched.
    truth : DgpTruth
    """
    rng = np.random.default_rng(spec.seed)
    w, cols, roles, y_obs, y_pot0 = _simulate(spec, rng)
    panel = from_columns(cols, roles)
    pop = population_truth(spec, truth_draws)
    return panel, _sample_truth(spec, pop, w, y_obs, y_pot0)


def _sample_truth(spec, pop, w, y_obs, y_pot0) -> DgpTruth:
    active = (w == 1.0) if spec.policy.is_dummy else (w > 0.0)
    effect = y_obs - y_pot0
    att = float(effect[active].mean()) if active.any() else float("nan")
    if spec.policy.is_dummy:
        y_pot1 = y_pot0 + pop.ate
    else:
        y_pot1 = None
    return DgpTruth(ate=pop.ate, att=att, acr=pop.acr, acrt=pop.acrt, mixture=pop.mixture,
                    q0=pop.q0, q1_mass=pop.q1_mass, treated_count=int(active.sum()),
                    potential_untreated=y_pot0, potential_treated=y_pot1)


# ---------------------------------------------------------------- verification

THEOREMS = {
    # id: (allowed laws, estimand, pipeline)
    "T1": (("bernoulli",), "ATE", "var"),
    "T2": (("gaussian",), "ACRT", "var"),
    "T3": (("gaussian",), "ACR", "var"),
    "T4": (("nonnegative",), "MIXTURE", "var"),
    "T5": (("bernoulli", "gaussian"), "ATT", "cvar-diff"),
    "T8": (("bernoulli",), "ATT", "cvar-vecm"),
    "T9": (("gaussian",), "ACR", "cvar-vecm"),
}
_DESIGN = {"var": "plain", "cvar-diff": "control", "cvar-vecm": "vecm"}


@dataclass(frozen=True)
class ReplicationRecord:
    replication: int
    seed: int
    gamma: float
    truth: float

    @property
    def bias(self) -> float:
        return self.gamma - self.truth


@dataclass(frozen=True)
class VerificationReport:
    """Monte Carlo comparison of the estimated coefficient with its estimand.

    ``passed`` is ``|bias| < max(0.05 |truth|, 3 * mc_se)`` where ``mc_se``
    is the standard error of the replication mean.
    """

    theorem: str
    estimand: str
    pipeline: str
    truth: float
    mean_gamma: float
    bias: float
    mc_se: float
    tolerance: float
    passed: bool
    records: tuple
    spec: dict
    extras: dict = field(default_factory=dict)

    def to_jsonl(self) -> str:
        """One JSON object per replication, then a summary line."""
        lines = [json.dumps({"replication": r.replication, "seed": r.seed, "gamma": r.gamma,
                             "truth": r.truth, "bias": r.bias}, sort_keys=True)
                 for r in self.records]
        summary = {k: getattr(self, k) for k in ("theorem", "estimand", "pipeline", "truth",
                                                  "mean_gamma", "bias", "mc_se", "tolerance",
                                                  "passed")}
        summary.update(summary=True, replications=len(self.records), spec=self.spec,
                       extras=self.extras)
        lines.append(json.dumps(summary, sort_keys=True))
        return "\n".join(lines) + "\n"

    def summary_line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} {self.theorem} {self.estimand}: mean gamma={self.mean_gamma:.4f} "
                f"truth={self.truth:.4f} bias={self.bias:+.4f} tol={self.tolerance:.4f}")


def default_spec(theorem: str, **overrides) -> DgpSpec:
    """Reasonable simulation design for each theorem, with keyword overrides.

    ``policy`` may be a :class:`PolicyLaw` or a law name; ``pi``, ``sigma`` and
    ``zero_prob`` set the law's parameters.
    """
    theorem = theorem.upper()
    if theorem not in THEOREMS:
        raise ValidationError(f"unknown theorem {theorem!r}; choose from {sorted(THEOREMS)}")
    laws, _, pipeline = THEOREMS[theorem]
    law = overrides.pop("policy", None)
    law_params = {k: overrides.pop(k) for k in ("pi", "sigma", "zero_prob") if k in overrides}
    if law is None or isinstance(law, str):
        kind = laws[0] if law is None else law.lower()
        if kind == "bernoulli":
            law = bernoulli(law_params.get("pi", 0.5))
        elif kind == "gaussian":
            law = gaussian(law_params.get("sigma", 1.0))
        elif kind == "nonnegative":
            law = nonnegative(law_params.get("zero_prob", 0.7))
        else:
            raise ValidationError(f"unknown policy law {law!r}")
    defaults = {"T1": "linear", "T2": "cube", "T3": "cube", "T4": "square", "T5": "linear",
                "T8": "linear", "T9": "cube"}
    params = dict(response=defaults[theorem], design=_DESIGN[pipeline])
    if theorem in ("T8", "T9"):
        params["ar"] = 0.5
    params.update(overrides)
    return DgpSpec(policy=law, **params)


def _estimate_gamma(pipeline: str, panel: TimeSeriesPanel, spec: DgpSpec) -> float:
    from cvarkit.cvar import CvarMode, CvarSpec, simple_difference_cvar, vecm_cvar
    from cvarkit.ident import cholesky_identify
    from cvarkit.var import estimate_var

    if pipeline == "var":
        model = estimate_var(panel, 1)
        return float(cholesky_identify(model).gamma[0, 0])
    if pipeline == "cvar-diff":
        cspec = CvarSpec.from_panel(panel, CvarMode.SIMPLE_DIFFERENCE, p=1)
        _, ident, _ = simple_difference_cvar(panel, cspec)
        return float(ident.gamma[0, 0])
    cspec = CvarSpec.from_panel(panel, CvarMode.VECM, p=1, r=1 + spec.n_pairs)
    result = vecm_cvar(panel, cspec, horizons=0)
    return float(result.ident.gamma[0, 0])


def _threads(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("CVARKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def verify_theorem(theorem_id: str, spec: DgpSpec = None, replications: int = 50,
                   workers: int = None, truth_draws: int = TRUTH_DRAWS) -> VerificationReport:
    """Check that the theorem's pipeline recovers its estimand.

    The design (plain, control or VECM) follows from the theorem; the
    policy law in ``spec`` must match the theorem's assumption, otherwise
    :class:`SpecTheoremMismatch` is raised. T5 also accepts a Gaussian
    policy, in which case the target is the ACR.
    """
    theorem = str(theorem_id).upper()
    if theorem not in THEOREMS:
        raise ValidationError(f"unknown theorem {theorem_id!r}")
    laws, estimand, pipeline = THEOREMS[theorem]
    spec = default_spec(theorem) if spec is None else spec
    if spec.policy.kind not in laws:
        raise SpecTheoremMismatch(
            f"{theorem} needs a {' or '.join(laws)} policy, got {spec.policy.kind}")
    if replications < 2:
        raise ValidationError("need at least two replications")
    spec = dataclasses.replace(spec, design=_DESIGN[pipeline])
    if theorem == "T5" and spec.policy.kind == "gaussian":
        estimand = "ACR"

    pop = population_truth(spec, truth_draws)
    seeds = [int(s) for s in np.random.SeedSequence(spec.seed).generate_state(replications)]

    def one(i):
        rep = dataclasses.replace(spec, seed=seeds[i])
        rng = np.random.default_rng(rep.seed)
        w, cols, roles, y_obs, y_pot0 = _simulate(rep, rng)
        panel = from_columns(cols, roles)
        gamma = _estimate_gamma(pipeline, panel, rep)
        if estimand == "ATT":
            truth = _sample_truth(rep, pop, w, y_obs, y_pot0).att
        else:
            truth = {"ATE": pop.ate, "ACR": pop.acr, "ACRT": pop.acrt,
                     "MIXTURE": pop.mixture}[estimand]
        return ReplicationRecord(i, seeds[i], gamma, float(truth))

    with ThreadPoolExecutor(max_workers=min(_threads(workers), replications)) as pool:
        records = tuple(pool.map(one, range(replications)))

    gam = np.array([r.gamma for r in records])
    tru = np.array([r.truth for r in records])
    truth, mean_gamma = float(tru.mean()), float(gam.mean())
    bias = mean_gamma - truth
    mc_se = float(np.std(gam - tru, ddof=1) / np.sqrt(replications))
    tol = max(0.05 * abs(truth), 3.0 * mc_se)
    extras = {"ate": pop.ate, "acr": pop.acr}
    if pop.acrt is not None:
        extras["acrt"] = pop.acrt
    if pop.mixture is not None:
        extras.update(mixture=pop.mixture, q0=pop.q0, q1_mass=pop.q1_mass)
    if theorem == "T5" and spec.policy.kind == "gaussian":
        extras["continuous"] = True
    spec_dict = {k: (v if not isinstance(v, float) or np.isfinite(v) else str(v))
                 for k, v in dataclasses.asdict(spec).items()}
    spec_dict["policy"] = {k: (v if not isinstance(v, float) or np.isfinite(v) else str(v))
                           for k, v in spec_dict["policy"].items()}
    return VerificationReport(theorem=theorem, estimand=estimand, pipeline=pipeline,
                              truth=truth, mean_gamma=mean_gamma, bias=bias, mc_se=mc_se,
                              tolerance=tol, passed=bool(abs(bias) < tol), records=records,
                              spec=spec_dict, extras=extras)
