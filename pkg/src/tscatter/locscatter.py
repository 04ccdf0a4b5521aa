"""Location-scatter functional for nu > 1 via dimension raising.

Appending a constant coordinate 1 to every observation turns the
location-scatter problem in R^d with tail parameter nu into a pure scatter
problem in R^{d+1} with parameter nu - 1. The solved (d+1)-matrix has
bottom-right entry exactly 1 and decomposes through the block embedding into
the location vector mu and scatter matrix Sigma. Two identities certify a
solution: the corner entry equals 1, and the fitted weights u((y-mu)'
Sigma^{-1} (y-mu)) average to 1 over the sample.

A direct reweighting step on (mu, Sigma) is provided as an independent
cross-check oracle; the lifted route is the primary path because uniqueness
and minimality are guaranteed there.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .domain_check import EmpiricalSample, check_locscat_domain, lift
from .exceptions import DegeneracyError, DomainViolation, NotSpdError, NuOutOfRange
from .scatter import ScatterConfig, ScatterResult, solve_scatter, weight_u
from .symspace import SpdMatrix, as_spd, extract

__all__ = [
    "LocScatEstimate",
    "solve_locscatter",
    "direct_em_step",
    "objective_locscat",
]

# |gamma - 1| and |mean fitted weight - 1| beyond this downgrade convergence.
IDENTITY_CHECK_TOL = 1e-6


@dataclass(frozen=True)
class LocScatEstimate:
    """Location vector and scatter matrix with certification diagnostics.

    ``gamma_check`` is the corner entry of the lifted scatter solution and
    ``weight_check`` the sample average of the fitted downweights; both equal
    1 at an exact solution. ``converged`` is False if either drifts beyond
    ``IDENTITY_CHECK_TOL`` or the inner solver did not converge.
    """

    mu: np.ndarray
    Sigma: SpdMatrix
    nu: float
    gamma_check: float
    weight_check: float
    scatter_diag: ScatterResult
    converged: bool


def solve_locscatter(
    sample: EmpiricalSample, nu: float, cfg: ScatterConfig | None = None
) -> LocScatEstimate:
    """Compute (mu, Sigma) for the sample at tail parameter nu > 1.

    ``cfg`` supplies solver tolerances only; its ``nu`` field is replaced by
    nu - 1 for the lifted solve. Raises :class:`NuOutOfRange` for nu <= 1 and
    :class:`DomainViolation` when the sample puts too much mass on an affine
    subspace.
    """
    nu = float(nu)
    if not nu > 1.0:
        raise NuOutOfRange(f"location-scatter requires nu > 1, got {nu}")
    d = sample.d
    report = check_locscat_domain(sample, nu + d)
    if not report.member:
        raise DomainViolation(report)

    if cfg is None:
        cfg = ScatterConfig(nu=nu - 1.0)
    else:
        cfg = dataclasses.replace(cfg, nu=nu - 1.0)
    # the affine check above already certifies the lifted linear condition
    diag = solve_scatter(lift(sample), cfg, check_domain=False)

    Sigma_arr, mu, gamma = extract(diag.A)
    Sigma = SpdMatrix(Sigma_arr)
    s = Sigma.quad_forms(sample.points - mu)
    weight_check = float(sample.weights @ weight_u(s, nu, d))
    converged = (
        diag.converged
        and abs(gamma - 1.0) <= IDENTITY_CHECK_TOL
        and abs(weight_check - 1.0) <= IDENTITY_CHECK_TOL
    )
    mu = mu.copy()
    mu.setflags(write=False)
    return LocScatEstimate(
        mu=mu,
        Sigma=Sigma,
        nu=nu,
        gamma_check=gamma,
        weight_check=weight_check,
        scatter_diag=diag,
        converged=converged,
    )


def direct_em_step(sample: EmpiricalSample, mu, Sigma, nu: float):
    """One reweighting step on (mu, Sigma) directly in R^d.

    Weights are u((x - mu)' Sigma^{-1} (x - mu)); the new location is the
    weighted mean and the new scatter the weighted sum of outer products
    around it (no renormalization: the weights average to 1 at the fixed
    point). Used as an independent oracle for :func:`solve_locscatter`.
    """
    Sigma = as_spd(Sigma)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    centered = sample.points - mu
    s = Sigma.quad_forms(centered)
    u = weight_u(s, nu, sample.d)
    pw = sample.weights * u
    total = pw.sum()
    if total <= 0.0:
        raise DegeneracyError("all points received zero weight")
    mu_next = (pw @ sample.points) / total
    centered_next = sample.points - mu_next
    Sigma_next = (centered_next * pw[:, None]).T @ centered_next
    try:
        SpdMatrix(Sigma_next)
    except NotSpdError as exc:
        raise DegeneracyError("updated scatter is singular") from exc
    return mu_next, (Sigma_next + Sigma_next.T) / 2.0


def objective_locscat(sample: EmpiricalSample, mu, Sigma, nu: float) -> float:
    """Adjusted objective Ph(mu, Sigma); zero at (0, I), minimized at the functional."""
    Sigma = as_spd(Sigma)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    d = sample.d
    s = Sigma.quad_forms(sample.points - mu)
    t = np.einsum("ij,ij->i", sample.points, sample.points)
    rho_diff = 0.5 * (nu + d) * (np.log(nu + s) - np.log(nu + t))
    return 0.5 * Sigma.logdet() + float(sample.weights @ rho_diff)
