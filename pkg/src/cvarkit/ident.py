"""Recursive (Cholesky) identification with unit policy shocks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cvarkit.errors import NotPositiveDefinite, ValidationError
from cvarkit.irf import IrfBundle
from cvarkit.panel import RoleKind
from cvarkit.var import reduced_irf

PIVOT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StructuralIdentification:
    """Output of :func:`cholesky_identify`.

    Attributes
    ----------
    ordering : tuple of int
        ``ordering[i]`` is the original column placed at recursive position ``i``.
    chol_factor : (n, n) array
        Lower-triangular ``O`` with ``O O' = sigma[ordering][:, ordering]``.
    impact : (n, K) array
        Impact responses to a unit innovation in each policy, in the original
        column order. The policy's own entry is 1.
    gamma : (J, K) array
        Outcome rows of ``impact``: the contemporaneous coefficients.
    """

    ordering: tuple
    chol_factor: np.ndarray
    impact: np.ndarray
    gamma: np.ndarray
    policy_positions: tuple
    outcome_positions: tuple
    labels: tuple = ()

    @property
    def shock_labels(self) -> tuple:
        if not self.labels:
            return tuple(f"shock{k}" for k in range(len(self.policy_positions)))
        return tuple(self.labels[i] for i in self.policy_positions)


def cholesky_lower(matrix, tol: float = PIVOT_TOL) -> np.ndarray:
    """Cholesky factor with an explicit pivot check.

    A pivot at or below ``tol`` times the largest diagonal entry raises
    :class:`NotPositiveDefinite`.
    """
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValidationError("covariance must be square")
    scale = float(np.max(np.abs(np.diag(a)))) if n else 0.0
    if scale <= 0.0:
        raise NotPositiveDefinite("covariance has a zero diagonal")
    out = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - out[j, :j] @ out[j, :j]
        if pivot <= tol * scale:
            raise NotPositiveDefinite(f"non-positive pivot {pivot:.3e} at position {j}")
        out[j, j] = np.sqrt(pivot)
        out[j + 1:, j] = (a[j + 1:, j] - out[j + 1:, :j] @ out[j, :j]) / out[j, j]
    return out


def _policy_positions(model, n):
    roles = getattr(model, "roles", ())
    if roles:
        found = [i for i, r in enumerate(roles) if r.kind is RoleKind.POLICY]
        if found:
            return found
    return [0]


def cholesky_identify(model, ordering=None, policies=None) -> StructuralIdentification:
    """Identify unit policy shocks from a residual covariance.

    Parameters
    ----------
    model : VarModel, VecmModel or (n, n) array
        Anything with a ``sigma`` attribute, or the covariance itself.
    ordering : sequence of int, optional
        Recursive ordering of the columns. Default: policies first, then the
        remaining columns in their original order.
    policies : sequence of int, optional
        Positions of the policy columns; defaults to the model's roles, or
        column 0 when no roles are attached.
    """
    sigma = np.asarray(getattr(model, "sigma", model), dtype=float)
    n = sigma.shape[0]
    if not np.allclose(sigma, sigma.T, atol=1e-10, rtol=0):
        raise ValidationError("covariance is not symmetric")
    pol = list(policies) if policies is not None else _policy_positions(model, n)
    if ordering is None:
        ordering = pol + [i for i in range(n) if i not in pol]
    ordering = [int(i) for i in ordering]
    if sorted(ordering) != list(range(n)):
        raise ValidationError(f"ordering {ordering} is not a permutation of 0..{n - 1}")

    permuted = sigma[np.ix_(ordering, ordering)]
    chol = cholesky_lower(permuted)
    impact = np.zeros((n, len(pol)))
    for k, col in enumerate(pol):
        pos = ordering.index(col)
        normalised = chol[:, pos] / chol[pos, pos]
        impact[ordering, k] = normalised
    outcomes = [i for i in range(n) if i not in pol]
    return StructuralIdentification(
        ordering=tuple(ordering),
        chol_factor=chol,
        impact=impact,
        gamma=impact[outcomes, :],
        policy_positions=tuple(pol),
        outcome_positions=tuple(outcomes),
        labels=tuple(getattr(model, "labels", ()) or ()),
    )


def structural_irf(model, ident: StructuralIdentification, horizons: int,
                   space: str = "level") -> IrfBundle:
    """Responses ``Phi_h @ impact`` for ``h = 0..H``."""
    phi = reduced_irf(model, horizons)
    if phi.shape[1] != ident.impact.shape[0]:
        raise ValidationError("identification and model dimensions differ")
    point = phi @ ident.impact
    return IrfBundle(point=point, labels=tuple(model.labels), shock_labels=ident.shock_labels,
                     space=space)
