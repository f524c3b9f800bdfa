"""First hitting times of a one-dimensional diffusion through two boundaries.

The package computes the exit sub-densities of a strip ``a(t) < x < b(t)``
(image series for Brownian motion, an Euler solver for the first-kind
Volterra system, Laplace-domain formulas with numerical inversion),
assembles the joint density of the two hitting times and its copula, and
cross-checks everything against Euler-Maruyama simulation.
"""
from types import ModuleType as _ModuleType

from ._backend import available as available_backends, set_backend
from .boundaries import Boundary, Configuration, StripProblem, ValidationReport, validate_strip
from .closed_form import (SeriesControl, bm_exit_cdf, bm_fpt_cdf, bm_fpt_pdf,
                          bm_sub_density_lower, bm_sub_density_upper)
from .errors import (ConditioningError, ConfigError, DomainError, HittimesError,
                     InsufficientSamplesError, ReferenceUnavailableError, StepSizeError, StripError)
from .joint import (CopulaSurface, JointDensitySurface, MarginalTable, assemble, assemble_case_i,
                    assemble_case_ii, copula_density, marginal_cdf, marginal_table)
from .laplace import (InversionControl, LaplaceEvaluator, bm_fpt_laplace, invert, make_evaluator,
                      sub_density_laplace)
from .montecarlo import (HittingTimeSample, HittingTimeSamples, SimConfig, compare_joint,
                         compare_marginal, compare_sub_density, simulate_pair)
from .process import Kind, Process, transition_cdf, transition_pdf, transition_sf
from .volterra import (ConvergenceReport, SubDensityPair, TimeGrid, closed_form_pair,
                       convergence_study, restart_densities, solve_single_boundary,
                       solve_two_boundary)

__version__ = "0.1.0"


def backend() -> str:
    """Name of the kernel backend in use: ``"compiled"`` or ``"python"``."""
    from . import _backend

    return _backend.name


__all__ = sorted(name for name, obj in list(globals().items())
                 if not name.startswith("_") and not isinstance(obj, _ModuleType))
