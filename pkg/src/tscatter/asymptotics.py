"""Curvature, influence, and asymptotic covariance of the scatter functionals.

All second-order objects live on the space of symmetric matrices in the
coordinates of :func:`~tscatter.symspace.sym_to_vec`. Conventions:

* ``score(y, A)`` is the per-point gradient of the adjusted loss with respect
  to the concentration matrix C = A^{-1}; it integrates to zero at the
  functional.
* ``hessian`` returns the curvature operator normalized so that its quadratic
  form is ``|A^{1/2} D A^{1/2}|_F^2 - (nu+d) int (y'Dy)^2/(nu+y'Cy)^2 dQ``.
  This is twice the calculus Hessian of the objective in C; the analytic
  factor is reinserted wherever derivatives are chained (influence,
  covariance), so those outputs are the actual first-order contamination
  derivative and the actual asymptotic covariance of the estimates.
* Covariances are reported for the A-parametrization (and for (mu, Sigma)
  after the extraction Jacobian), obtained from the C-side sandwich by the
  congruence X -> A X A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .domain_check import EmpiricalSample, check_locscat_domain, lift
from .exceptions import DomainViolation, NuOutOfRange
from .scatter import ScatterConfig, ScatterResult, solve_scatter
from .symspace import (
    SpdMatrix,
    as_spd,
    congruence_matrix,
    sym_basis,
    sym_dim,
    sym_to_vec,
    symmetrize,
    vec_to_sym,
)

__all__ = [
    "HessianMap",
    "AsymptoticCov",
    "score",
    "hessian",
    "influence",
    "asymptotic_cov_scatter",
    "asymptotic_cov_locscatter",
    "extract_jacobian",
]

DEFAULT_RANK_TOL = 1e-8

SQRT2 = np.sqrt(2.0)


def _outer_vecs(points: np.ndarray) -> np.ndarray:
    """Rows sym_to_vec(y y') for every sample point, without a Python loop."""
    n, d = points.shape
    cols = [points[:, i] * points[:, i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            cols.append(SQRT2 * points[:, i] * points[:, j])
    return np.column_stack(cols)


@dataclass(frozen=True)
class HessianMap:
    """Curvature operator on sym_to_vec coordinates; positive definite at the functional."""

    dim: int
    matrix: np.ndarray
    min_eigenvalue: float


@dataclass(frozen=True)
class AsymptoticCov:
    """Covariance S of sqrt(n) (estimate - functional) on vectorized parameters.

    ``parametrization`` is ``"scatter_A"`` (coordinates sym_to_vec(A)) or
    ``"locscatter_muSigma"`` (mu stacked over sym_to_vec(Sigma)). ``rank`` is
    the numerical rank at ``rank_tol`` relative to the largest singular value.
    """

    S: np.ndarray
    rank: int
    parametrization: str
    rank_tol: float = DEFAULT_RANK_TOL


def score(y, A, nu: float) -> np.ndarray:
    """Per-point score -A/2 + (nu+d) y y' / (2 (nu + y'A^{-1}y)).

    The weighted sum of scores over the sample vanishes at the fitted scatter
    matrix.
    """
    A = as_spd(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    s = float(A.quad_forms(y[None, :])[0])
    d = A.dim
    return -A.mat / 2.0 + (nu + d) * np.outer(y, y) / (2.0 * (nu + s))


def hessian(sample: EmpiricalSample, A, nu: float) -> HessianMap:
    """Curvature operator of the scatter objective at A.

    Realized as a symmetric matrix H on sym_to_vec coordinates with

        vec(D)' H vec(D) = |A^{1/2} D A^{1/2}|_F^2
                           - (nu+d) sum_i w_i (y_i'Dy_i)^2 / (nu + y_i'Cy_i)^2.

    H is positive definite when A is the fitted scatter matrix of the sample.
    """
    A = as_spd(A)
    d = A.dim
    if sample.d != d:
        raise ValueError("sample dimension does not match matrix dimension")
    s = A.quad_forms(sample.points)
    # first term: T[a,b] = trace(A E_a A E_b), the congruence matrix of A
    T = congruence_matrix(A.mat)
    V = _outer_vecs(sample.points)
    coef = (nu + d) * sample.weights / (nu + s) ** 2
    H = symmetrize(T - (V * coef[:, None]).T @ V, rtol=1e-6)
    min_eig = float(np.linalg.eigvalsh(H)[0])
    return HessianMap(dim=d, matrix=H, min_eigenvalue=min_eig)


def _fit(sample: EmpiricalSample, nu: float, fit=None, check_domain=True) -> ScatterResult:
    if fit is not None:
        return fit
    return solve_scatter(sample, ScatterConfig(nu=nu), check_domain=check_domain)


def influence(y, sample: EmpiricalSample, nu: float, *, fit=None, hess=None) -> np.ndarray:
    """First-order contamination derivative of the scatter matrix at y.

    Returns IF(y) with A(( 1 - eps) Q + eps delta_y) = A(Q) + eps IF(y) + O(eps^2).
    Writing H for the curvature operator of :func:`hessian` at the fitted A,
    the concentration matrix moves by -2 H^{-1} score(y) per unit of
    contamination, and IF is the congruent image A (2 H^{-1} score(y)) A. The
    weighted sample average of IF vanishes.
    """
    result = _fit(sample, nu, fit)
    A = result.A
    hess = hess if hess is not None else hessian(sample, A, nu)
    factor = cho_factor(hess.matrix)
    g = sym_to_vec(score(y, A, nu))
    dC = vec_to_sym(2.0 * cho_solve(factor, g))
    return symmetrize(A.mat @ dC @ A.mat, rtol=1e-9)


def _numerical_rank(S: np.ndarray, rank_tol: float) -> int:
    sv = np.linalg.svd(S, compute_uv=False)
    if sv.size == 0 or sv[0] <= 0.0:
        return 0
    return int((sv > rank_tol * sv[0]).sum())


def asymptotic_cov_scatter(
    sample: EmpiricalSample,
    nu: float,
    *,
    rank_tol: float = DEFAULT_RANK_TOL,
    fit=None,
    check_domain: bool = True,
) -> AsymptoticCov:
    """Asymptotic covariance of sqrt(n)(A_n - A) on sym_to_vec coordinates.

    Sandwich form: with H the curvature operator at the fitted A and K the
    weighted covariance of the vectorized scores, the concentration-side
    covariance is (H/2)^{-1} K (H/2)^{-1}; it is pushed to the
    A-parametrization by the congruence X -> A X A. Rank follows the law's
    geometry: d(d+1)/2 when no quadratic polynomial annihilates the sample,
    never less than d-1 for d >= 2, and exactly 1 for d = 1.
    """
    result = _fit(sample, nu, fit, check_domain)
    A = result.A
    d = A.dim
    H = hessian(sample, A, nu)
    s = A.quad_forms(sample.points)
    coef = (nu + d) / (2.0 * (nu + s))
    Gv = coef[:, None] * _outer_vecs(sample.points) - 0.5 * sym_to_vec(A.mat)
    mean = sample.weights @ Gv
    Gc = Gv - mean
    K = (Gc * sample.weights[:, None]).T @ Gc

    factor = cho_factor(H.matrix)
    half = 2.0 * cho_solve(factor, K)          # (H/2)^{-1} K
    Sc = 2.0 * cho_solve(factor, half.T).T     # (H/2)^{-1} K (H/2)^{-1}
    J = congruence_matrix(A.mat)
    S = symmetrize(J @ Sc @ J.T, rtol=1e-6)
    return AsymptoticCov(
        S=S,
        rank=_numerical_rank(S, rank_tol),
        parametrization="scatter_A",
        rank_tol=rank_tol,
    )


def extract_jacobian(A) -> np.ndarray:
    """Jacobian of the block extraction A -> (mu, sym_to_vec(Sigma)).

    Rows are the d location coordinates followed by the sym_to_vec
    coordinates of Sigma; columns follow sym_to_vec on the (d+1)-space.
    Computed from exact directional derivatives of the block formulas
    mu = a/gamma, Sigma = M/gamma - mu mu' along each basis direction.
    """
    A = as_spd(A)
    dp1 = A.dim
    d = dp1 - 1
    m = A.mat
    gamma = m[d, d]
    a = m[:d, d]
    Mtop = m[:d, :d]
    mu = a / gamma
    cols = []
    for E in sym_basis(dp1):
        dgamma = E[d, d]
        da = E[:d, d]
        dM = E[:d, :d]
        dmu = da / gamma - a * dgamma / gamma**2
        dSigma = dM / gamma - Mtop * dgamma / gamma**2 - np.outer(dmu, mu) - np.outer(mu, dmu)
        cols.append(np.concatenate([dmu, sym_to_vec(dSigma)]))
    return np.column_stack(cols)


def asymptotic_cov_locscatter(
    sample: EmpiricalSample,
    nu: float,
    *,
    rank_tol: float = DEFAULT_RANK_TOL,
    check_domain: bool = True,
) -> AsymptoticCov:
    """Asymptotic covariance of sqrt(n)((mu_n, Sigma_n) - (mu, Sigma)).

    Pushes the lifted scatter covariance through the extraction Jacobian. The
    mu block has full rank d; the Sigma block inherits the rank behavior of
    the pure scatter case.
    """
    nu = float(nu)
    if not nu > 1.0:
        raise NuOutOfRange(f"location-scatter requires nu > 1, got {nu}")
    d = sample.d
    if check_domain:
        report = check_locscat_domain(sample, nu + d)
        if not report.member:
            raise DomainViolation(report)
    lifted = lift(sample)
    fit = solve_scatter(lifted, ScatterConfig(nu=nu - 1.0), check_domain=False)
    S_lift = asymptotic_cov_scatter(lifted, nu - 1.0, rank_tol=rank_tol, fit=fit)
    J = extract_jacobian(fit.A)
    S = symmetrize(J @ S_lift.S @ J.T, rtol=1e-6)
    return AsymptoticCov(
        S=S,
        rank=_numerical_rank(S, rank_tol),
        parametrization="locscatter_muSigma",
        rank_tol=rank_tol,
    )
