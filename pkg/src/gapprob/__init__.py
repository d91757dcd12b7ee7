"""Gap probabilities of unitary random matrix ensembles.

Three independent routes are provided and cross-checked against each other:
exact finite-n determinants (:mod:`gapprob.orthopoly`), Fredholm determinants
of the limiting kernels (:mod:`gapprob.fredholm`) and large-gap expansions
with their Painleve equations (:mod:`gapprob.painleve`). Coulomb-fluid
approximations live in :mod:`gapprob.coulomb`.
"""

from .errors import (CapabilityError, ConsistencyError, ConvergenceError, DomainError, GapProbError,
                     PrecisionInsufficientError, SingularityError, StiffnessError, TransportError)
from .specfun import DOUBLE, PrecisionContext
from .orthopoly import WeightSpec, RecurrenceTable, finite_probability, hankel_log_det, stieltjes_recurrence
from .fredholm import KernelSpec, log_det, log_det_converged, scaled_sigma
from .painleve import AsymptoticSeries, ResidualReport, ode_transport, residual, series_eval
from .coulomb import FluidSupport, approx_pn, appendix_identity_check, jue_endpoint, lue_endpoint

__version__ = "0.1.0"

__all__ = [
    "GapProbError", "DomainError", "PrecisionInsufficientError", "ConvergenceError", "ConsistencyError",
    "SingularityError", "CapabilityError", "TransportError", "StiffnessError",
    "PrecisionContext", "DOUBLE",
    "WeightSpec", "RecurrenceTable", "finite_probability", "hankel_log_det", "stieltjes_recurrence",
    "KernelSpec", "log_det", "log_det_converged", "scaled_sigma",
    "AsymptoticSeries", "ResidualReport", "residual", "series_eval", "ode_transport",
    "FluidSupport", "approx_pn", "appendix_identity_check", "lue_endpoint", "jue_endpoint",
]
