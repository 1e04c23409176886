"""Control-based VARs: outcome differencing against a control and VECM controls."""
from __future__ import annotations

import enum
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from cvarkit.errors import (
    ConstantPolicy,
    CvarkitError,
    InvalidRoles,
    NoTreatedPeriods,
    RankOutOfBounds,
    ValidationError,
)
from cvarkit.ident import StructuralIdentification, cholesky_identify
from cvarkit.irf import IrfBundle
from cvarkit.panel import RoleKind, TimeSeriesPanel, control, policy, treated
from cvarkit.var import VarModel, _fit_arrays, check_sample, estimate_var, gaussian_loglik
from cvarkit.vecm import VecmModel, estimate_vecm, johansen_trace_test, vecm_structural_irf

log = logging.getLogger(__name__)


class CvarMode(enum.Enum):
    SIMPLE_DIFFERENCE = "simple-difference"
    VECM = "vecm"


@dataclass(frozen=True)
class CvarSpec:
    """Which columns play which part and how the control enters.

    Column entries are labels. In simple-difference mode ``control_columns[j]``
    is the control for ``treated_columns[j]``.
    """

    mode: CvarMode
    policy_columns: tuple
    treated_columns: tuple
    control_columns: tuple
    p: int = 1
    r: int = None
    intercept: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", CvarMode(self.mode))
        for name in ("policy_columns", "treated_columns", "control_columns"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.policy_columns:
            raise InvalidRoles("at least one policy column is required")
        if self.p < 1:
            raise ValidationError("lag order must be >= 1")
        if self.mode is CvarMode.SIMPLE_DIFFERENCE:
            if len(self.control_columns) != len(self.treated_columns):
                raise InvalidRoles("simple-difference mode pairs exactly one control per treated series")
        else:
            if self.r is None or self.r < 1:
                raise RankOutOfBounds("VECM mode needs a cointegration rank r >= 1")

    @classmethod
    def from_panel(cls, panel: TimeSeriesPanel, mode, p: int = 1, r: int = None,
                   intercept: bool = True) -> "CvarSpec":
        """Read the column assignment off the panel's roles."""
        def labels_of(kind):
            pos = sorted(panel.positions(kind), key=lambda i: panel.roles[i].index)
            return tuple(panel.labels[i] for i in pos)

        treated_cols = labels_of(RoleKind.TREATED)
        controls = []
        mode = CvarMode(mode)
        for lab in treated_cols:
            j = panel.roles[panel.index_of(lab)].index
            try:
                controls.append(panel.labels[panel.position_of(control(j))])
            except CvarkitError:
                if mode is CvarMode.SIMPLE_DIFFERENCE:
                    raise InvalidRoles(f"treated:{j} has no control") from None
        return cls(mode, labels_of(RoleKind.POLICY), treated_cols, tuple(controls), p, r,
                   intercept)


@dataclass(frozen=True)
class CvarDiagnostics:
    """Interpretation aids reported next to the CVAR estimates.

    ``delta_ar_proxy[j]`` is the mean fitted value of differenced outcome ``j``
    in untreated periods minus its mean in treated periods. It is zero when
    the autoregressive predictions do not differ across treatment status.
    It is reported, never added to or removed from ``gamma``.
    """

    delta_ar_proxy: tuple
    treated_time_count: int
    dropped_constant: tuple = ()


@dataclass(frozen=True, eq=False)
class VecmCvarResult:
    model: VecmModel
    ident: StructuralIdentification
    irf_level: IrfBundle
    irf_difference: IrfBundle

    def __iter__(self):
        # allow ``model, ident, irf = vecm_cvar(...)``
        return iter((self.model, self.ident, self.irf_level))


def dummy_policy_transform(panel: TimeSeriesPanel, policy_k: int = 1, quantile: float = 0.95,
                           threshold: float = None) -> TimeSeriesPanel:
    """Replace policy ``k`` by the indicator ``value > q``.

    ``q`` is the empirical ``quantile`` (linear interpolation between order
    statistics) unless an absolute ``threshold`` is given.
    """
    if threshold is None and not 0.0 < quantile < 1.0:
        raise ValidationError(f"quantile must lie in (0, 1), got {quantile}")
    pos = panel.position_of(policy(policy_k))
    values = panel.observations[:, pos]
    if np.ptp(values) == 0.0:
        raise ConstantPolicy(f"policy {policy_k} is constant")
    cut = float(np.quantile(values, quantile)) if threshold is None else float(threshold)
    dummy = (values > cut).astype(float)
    return panel.with_column(panel.labels[pos], dummy)


def _treated_mask(w: np.ndarray) -> np.ndarray:
    vals = np.unique(w)
    if np.all(np.isin(vals, (0.0, 1.0))):
        return w == 1.0
    return w > 0.0


def simple_difference_cvar(panel: TimeSeriesPanel, spec: CvarSpec, p: int = None):
    """Fit a VAR on policies and treated-minus-control outcome differences.

    Difference columns that are identically constant carry no information;
    they are dropped from the regression, get ``gamma = 0`` and a logged
    warning, and stay in the returned model with zero dynamics.

    Returns
    -------
    model : VarModel
        Columns: policies, then one ``treated-control`` difference per pair.
    ident : StructuralIdentification
    diagnostics : CvarDiagnostics
    """
    if spec.mode is not CvarMode.SIMPLE_DIFFERENCE:
        raise ValidationError("spec.mode must be simple-difference")
    p = spec.p if p is None else int(p)
    pol = [panel.column(c) for c in spec.policy_columns]
    diffs = [panel.column(t) - panel.column(c)
             for t, c in zip(spec.treated_columns, spec.control_columns)]
    labels = list(spec.policy_columns) + [f"{t}-{c}" for t, c in
                                          zip(spec.treated_columns, spec.control_columns)]
    roles = [policy(k + 1) for k in range(len(pol))] + [treated(j + 1) for j in range(len(diffs))]
    data = np.column_stack(pol + diffs)
    T, n = data.shape
    K = len(pol)

    mask = _treated_mask(data[:, 0])
    if not mask.any():
        raise NoTreatedPeriods("the policy is never active")
    if mask.all():
        raise NoTreatedPeriods("the policy is active in every period")

    keep = [i for i in range(n) if i < K or np.ptp(data[:, i]) > 0.0]
    dropped = tuple(labels[i] for i in range(n) if i not in keep)
    for lab in dropped:
        log.warning("difference %s is constant; dropped from the VAR with gamma = 0", lab)

    sub = data[:, keep]
    check_sample(T, len(keep), p)
    coefs_s, const_s, resid_s, _ = _fit_arrays(sub, p, spec.intercept)

    coefs = np.zeros((p, n, n))
    coefs[np.ix_(range(p), keep, keep)] = coefs_s
    intercept = np.zeros(n)
    intercept[keep] = const_s
    resid = np.zeros((T - p, n))
    resid[:, keep] = resid_s
    sigma = resid.T @ resid / (T - p)
    sigma = 0.5 * (sigma + sigma.T)

    model = VarModel(p=p, coefs=coefs, intercept=intercept, residuals=resid, sigma=sigma,
                     loglik=gaussian_loglik(sigma[np.ix_(keep, keep)], T - p),
                     labels=tuple(labels), roles=tuple(roles), endog=data,
                     has_intercept=spec.intercept)
    sub_ident = cholesky_identify(sigma[np.ix_(keep, keep)], policies=list(range(K)))
    impact = np.zeros((n, K))
    impact[keep] = sub_ident.impact
    ordering = list(range(K)) + [i for i in range(K, n)]
    chol = np.zeros((n, n))
    chol[np.ix_(keep, keep)] = sub_ident.chol_factor
    outcomes = list(range(K, n))
    ident = StructuralIdentification(
        ordering=tuple(ordering), chol_factor=chol, impact=impact,
        gamma=impact[outcomes], policy_positions=tuple(range(K)),
        outcome_positions=tuple(outcomes), labels=tuple(labels),
    )

    fitted = model.fitted
    m = mask[p:]
    proxy = tuple(float(fitted[~m, i].mean() - fitted[m, i].mean()) if m.any() and (~m).any()
                  else float("nan") for i in outcomes)
    return model, ident, CvarDiagnostics(proxy, int(mask.sum()), dropped)


def vecm_cvar(panel: TimeSeriesPanel, spec: CvarSpec, horizons: int = 40) -> VecmCvarResult:
    """Johansen fit at ``(spec.p, spec.r)`` with the policy ordered first.

    Columns enter as policies, treated outcomes, controls. Any additional
    controls in the panel simply widen the system.
    """
    if spec.mode is not CvarMode.VECM:
        raise ValidationError("spec.mode must be vecm")
    cols = list(spec.policy_columns) + list(spec.treated_columns) + [
        c for c in spec.control_columns if c not in spec.treated_columns]
    extra = [lab for lab in panel.labels if lab not in cols]
    sub = panel.select(cols + extra)
    model = estimate_vecm(sub, spec.p, spec.r)
    ident = cholesky_identify(model, policies=list(range(len(spec.policy_columns))))
    level, diff = vecm_structural_irf(model, ident, horizons)
    return VecmCvarResult(model, ident, level, diff)


@dataclass(frozen=True)
class RankedControl:
    name: str
    trace_stat: float
    candidate: TimeSeriesPanel = field(repr=False, compare=False)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CVARKIT_THREADS", "0")) or (os.cpu_count() or 1))
    except ValueError:
        return os.cpu_count() or 1


def rank_controls(panel_base: TimeSeriesPanel, candidate_controls, p: int, target_rank: int,
                  names=None) -> list:
    """Order candidate control panels by the trace statistic at ``target_rank``.

    Each candidate's columns are appended to ``panel_base`` and the joint
    system is tested. A candidate whose test fails is skipped with a warning.
    Returns a list of :class:`RankedControl`, strongest rejection first.
    """
    candidates = list(candidate_controls)
    if names is None:
        names = ["+".join(c.labels) for c in candidates]

    def evaluate(item):
        name, cand = item
        if cand.n_obs != panel_base.n_obs:
            raise ValidationError(f"candidate {name} has {cand.n_obs} rows, base has {panel_base.n_obs}")
        data = np.column_stack([panel_base.observations, cand.observations])
        result = johansen_trace_test(data, p)
        if not 0 <= target_rank < len(result.trace_stats):
            raise RankOutOfBounds(f"target rank {target_rank} outside 0..{data.shape[1] - 1}")
        return result.trace_stats[target_rank]

    def safe(item):
        try:
            return evaluate(item)
        except (CvarkitError, np.linalg.LinAlgError) as exc:
            log.warning("control candidate %s skipped: %s", item[0], exc)
            return None

    items = list(zip(names, candidates))
    with ThreadPoolExecutor(max_workers=min(_threads(), max(1, len(items)))) as pool:
        stats = list(pool.map(safe, items))
    ranked = [RankedControl(name, float(s), cand)
              for (name, cand), s in zip(items, stats) if s is not None]
    ranked.sort(key=lambda rc: -rc.trace_stat)
    return ranked
