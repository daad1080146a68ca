"""Conformally scaled Hamiltonians: evaluation, reductions, integrals, orbits and spectra."""

from .catalog import CATALOG_NAMES, ReductionEntry, instantiate_reduction
from .core import EnergyBreakdown, ModelParams, PhaseState, eval_breakdown, eval_hamiltonian, grad_hamiltonian
from .dynamics import Trajectory, integrate, integrate_reparam, reparametrize
from .errors import ConfhamError, DomainError, IntegrationAbort, NonConvergenceError, ParameterError
from .observables import Observable, angular_rosochatius_integral, independence_rank, poisson_bracket
from .probes import ClosureOptions, ClosureReport, closure_test, parameter_scan, rotation_number
from .quantum import GridSpec, SpectrumResult, build_weighted_operator, compute_spectrum, degeneracy_report

__all__ = [
    "CATALOG_NAMES",
    "ClosureOptions",
    "ClosureReport",
    "ConfhamError",
    "DomainError",
    "EnergyBreakdown",
    "GridSpec",
    "IntegrationAbort",
    "ModelParams",
    "NonConvergenceError",
    "Observable",
    "ParameterError",
    "PhaseState",
    "ReductionEntry",
    "SpectrumResult",
    "Trajectory",
    "angular_rosochatius_integral",
    "build_weighted_operator",
    "closure_test",
    "compute_spectrum",
    "degeneracy_report",
    "eval_breakdown",
    "eval_hamiltonian",
    "grad_hamiltonian",
    "independence_rank",
    "instantiate_reduction",
    "integrate",
    "integrate_reparam",
    "parameter_scan",
    "poisson_bracket",
    "reparametrize",
    "rotation_number",
]
