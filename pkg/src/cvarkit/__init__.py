"""Causal VAR and VECM toolkit with control-based identification.

Estimation (:mod:`cvarkit.var`, :mod:`cvarkit.vecm`), recursive
identification (:mod:`cvarkit.ident`), control-VAR constructions
(:mod:`cvarkit.cvar`), causal weights and simulation oracles
(:mod:`cvarkit.estimands`) and bootstrap inference (:mod:`cvarkit.inference`).
"""
__version__ = "0.1.0"

from cvarkit.errors import CvarkitError, NumericalError, ValidationError  # noqa: E402
from cvarkit.panel import TimeSeriesPanel, first_difference, load_panel  # noqa: E402
from cvarkit.var import VarModel, estimate_var, reduced_irf, select_lag_bic  # noqa: E402
from cvarkit.ident import StructuralIdentification, cholesky_identify, structural_irf  # noqa: E402
from cvarkit.irf import IrfBundle  # noqa: E402
from cvarkit.vecm import (  # noqa: E402
    VecmModel,
    estimate_vecm,
    granger_representation,
    johansen_trace_test,
    vecm_structural_irf,
)

__all__ = [
    "CvarkitError", "NumericalError", "ValidationError",
    "TimeSeriesPanel", "first_difference", "load_panel",
    "VarModel", "estimate_var", "reduced_irf", "select_lag_bic",
    "StructuralIdentification", "cholesky_identify", "structural_irf",
    "IrfBundle",
    "VecmModel", "estimate_vecm", "granger_representation", "johansen_trace_test",
    "vecm_structural_irf",
]
