"""Robust multivariate location and scatter from heavy-tailed elliptical likelihoods.

The scatter functional generalizes the covariance matrix to arbitrarily
heavy-tailed laws; for tail parameter nu > 1 a location vector comes along by
solving the pure scatter problem one dimension up. The package bundles the
existence-domain checks, the fixed-point solver, influence and asymptotic
covariance computations, the one-dimensional extended functional, a Monte
Carlo validation harness, and a CSV-driven CLI.
"""

from .asymptotics import (
    AsymptoticCov,
    HessianMap,
    asymptotic_cov_locscatter,
    asymptotic_cov_scatter,
    extract_jacobian,
    hessian,
    influence,
    score,
)
from .domain_check import (
    DomainReport,
    EmpiricalSample,
    check_locscat_domain,
    check_scatter_domain,
    lift,
    max_atom,
)
from .exceptions import (
    CsvParseError,
    DegeneracyError,
    DomainViolation,
    EnumerationBudgetError,
    NoPositiveSolution,
    NotSpdError,
    NuOutOfRange,
    NumericalBreakdown,
)
from .locscatter import LocScatEstimate, direct_em_step, objective_locscat, solve_locscatter
from .oned import (
    OneDEstimate,
    boundary_rate_probe,
    sigma_of_mu,
    solve_oned,
    two_point_closed_form,
)
from .scatter import ScatterConfig, ScatterResult, gradient, objective, solve_scatter, weight_u
from .simlab import (
    McReport,
    Sampler,
    check_class_constraint,
    contaminated_sampler,
    discrete_sampler,
    fit_loglog_slope,
    gaussian_sampler,
    run_clt_experiment,
    run_consistency_sweep,
    t_sampler,
)
from .symspace import (
    EmbeddedScatter,
    SpdMatrix,
    congruence_matrix,
    embed,
    extract,
    sym_basis,
    sym_dim,
    sym_to_vec,
    vec_to_sym,
)

__version__ = "0.1.0"
