"""One-dimensional location-scale functional, including its boundary extension.

For nu > 1 and a law Q on the line, the pair (mu, sigma) minimizes

    Qh(mu, sigma) = log sigma
        + ((nu+1)/2) * int log[(1 + (x-mu)^2/(nu sigma^2)) / (1 + x^2/nu)] dQ(x)

whenever every atom of Q has mass below nu/(nu+1). If a (necessarily unique)
atom reaches that mass, the functional extends continuously to (atom, 0).
For fixed mu, the optimal sigma(mu) > 0 solves

    F(mu, sigma) = int (x-mu)^2 / (nu sigma^2 + (x-mu)^2) dQ(x) = 1/(nu+1),

which has a unique root because F decreases strictly in sigma. The outer
minimization runs on the C^1 profile mu -> Qh(mu, sigma(mu)).

Two-point laws admit closed forms, used as oracles and for the boundary-rate
probe: the scale is of order sqrt(eps/(nu-1)) when the big-atom mass is
approached from inside at distance eps, so sigma is continuous but not
Lipschitz across the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .domain_check import EmpiricalSample, max_atom
from .exceptions import NoPositiveSolution, NuOutOfRange

__all__ = [
    "OneDEstimate",
    "sigma_of_mu",
    "solve_oned",
    "two_point_closed_form",
    "boundary_rate_probe",
    "profile_objective",
]

# Atom mass within this distance of nu/(nu+1) counts as reaching the boundary.
EQ_TOL = 1e-12

SCALE_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class OneDEstimate:
    """Location and scale on the line; ``boundary`` marks the big-atom case.

    On the boundary, ``sigma == 0``, ``mu`` is the atom location, and ``atom``
    records (location, mass); otherwise (mu, sigma) is the unique critical
    point of the objective and ``atom`` is None.
    """

    mu: float
    sigma: float
    boundary: bool
    atom: tuple[float, float] | None = None


def _as_oned(sample: EmpiricalSample):
    if sample.d != 1:
        raise ValueError(f"expected a one-dimensional sample, got d={sample.d}")
    return sample.points[:, 0], sample.weights


def sigma_of_mu(sample: EmpiricalSample, mu: float, nu: float) -> float:
    """Unique sigma > 0 with F(mu, sigma) = 1/(nu+1), by bracketed root finding.

    Exists iff the mass off the point mu exceeds 1/(nu+1); otherwise raises
    :class:`NoPositiveSolution` (the scale profile is driven to 0 there).
    The returned root satisfies |F - 1/(nu+1)| <= 1e-12.
    """
    x, w = _as_oned(sample)
    mu = float(mu)
    target = 1.0 / (nu + 1.0)
    diff2 = (x - mu) ** 2
    off_mass = float(w[diff2 > 0.0].sum())
    if off_mass <= target:
        raise NoPositiveSolution(
            f"mass off the center is {off_mass:g} <= 1/(nu+1) = {target:g}"
        )

    def F(sigma):
        return float(w @ (diff2 / (nu * sigma**2 + diff2))) - target

    spread = np.sqrt(float(w @ diff2))
    scale = spread if spread > 0.0 else 1.0
    lo = 1e-12 * scale
    hi = 10.0 * scale
    while F(hi) > 0.0:
        hi *= 2.0
        if hi > 1e30 * scale:
            raise NoPositiveSolution("scale bracket expansion failed")
    root = brentq(F, lo, hi, xtol=1e-300, rtol=8.0 * np.finfo(float).eps, maxiter=300)
    if abs(F(root)) > SCALE_RESIDUAL_TOL:
        raise NoPositiveSolution(f"root residual {F(root):g} above tolerance")
    return float(root)


def profile_objective(sample: EmpiricalSample, mu: float, sigma: float, nu: float) -> float:
    """Objective Qh(mu, sigma); zero at (0, 1)."""
    x, w = _as_oned(sample)
    d2 = (x - mu) ** 2
    val = np.log(sigma) + 0.5 * (nu + 1.0) * float(
        w @ (np.log((nu * sigma**2 + d2) / (nu * sigma**2)) - np.log1p(x**2 / nu))
    )
    return val


def _profile_derivative(sample: EmpiricalSample, mu: float, nu: float) -> float:
    # d/dmu of Qh(mu, sigma(mu)); the sigma direction drops out at the inner optimum
    x, w = _as_oned(sample)
    sigma = sigma_of_mu(sample, mu, nu)
    D = nu * sigma**2 + (x - mu) ** 2
    return (nu + 1.0) * float(w @ ((mu - x) / D))


def solve_oned(sample: EmpiricalSample, nu: float) -> OneDEstimate:
    """Location-scale estimate on the line, total for every law when nu > 1.

    Returns the boundary value (atom, 0) when an atom reaches mass
    nu/(nu+1); otherwise localizes the profile minimum with a grid scan and
    golden-section, then polishes the root of the profile derivative.
    """
    nu = float(nu)
    if not nu > 1.0:
        raise NuOutOfRange(f"one-dimensional functional requires nu > 1, got {nu}")
    x, w = _as_oned(sample)
    loc, mass = max_atom(sample)
    if mass >= nu / (nu + 1.0) - EQ_TOL:
        return OneDEstimate(mu=float(loc[0]), sigma=0.0, boundary=True, atom=(float(loc[0]), mass))

    xmin, xmax = float(x.min()), float(x.max())
    span = max(xmax - xmin, 1e-12)
    lo, hi = xmin - span, xmax + span

    def g(mu):
        return profile_objective(sample, mu, sigma_of_mu(sample, mu, nu), nu)

    grid = np.linspace(lo, hi, 65)
    vals = [g(m) for m in grid]
    k = int(np.argmin(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c, dpt = b - invphi * (b - a), a + invphi * (b - a)
    gc, gd = g(c), g(dpt)
    while b - a > 1e-8 * max(span, 1.0):
        if gc < gd:
            b, dpt, gd = dpt, c, gc
            c = b - invphi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, dpt, gd
            dpt = a + invphi * (b - a)
            gd = g(dpt)

    da, db = _profile_derivative(sample, a, nu), _profile_derivative(sample, b, nu)
    if da < 0.0 < db:
        mu_star = brentq(
            lambda m: _profile_derivative(sample, m, nu), a, b, xtol=1e-14, maxiter=200
        )
    else:
        mu_star = (a + b) / 2.0
    sigma_star = sigma_of_mu(sample, mu_star, nu)
    return OneDEstimate(mu=float(mu_star), sigma=float(sigma_star), boundary=False, atom=None)


def two_point_closed_form(a: float, b: float, p: float, nu: float) -> OneDEstimate:
    """Exact functional of q delta_a + p delta_b with p the mass at b.

    On the unit interval the interior critical point is
    mu_p = (nu p - q)/(nu - 1) and
    sigma_p^2 = (nu^2 p q - nu (p^2 + q^2) + p q)/(nu - 1)^2,
    valid for 1/(nu+1) < p < nu/(nu+1); general endpoints follow by the affine
    map t -> a + (b-a) t. Outside that range the mass at one endpoint reaches
    nu/(nu+1) and the boundary value sits there with sigma = 0.
    """
    nu = float(nu)
    if not nu > 1.0:
        raise NuOutOfRange(f"requires nu > 1, got {nu}")
    a, b, p = float(a), float(b), float(p)
    if not a < b:
        raise ValueError("need a < b")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    q = 1.0 - p
    lo = 1.0 / (nu + 1.0)
    hi = nu / (nu + 1.0)
    if p <= lo + EQ_TOL:
        return OneDEstimate(mu=a, sigma=0.0, boundary=True, atom=(a, q))
    if p >= hi - EQ_TOL:
        return OneDEstimate(mu=b, sigma=0.0, boundary=True, atom=(b, p))
    mu_p = (nu * p - q) / (nu - 1.0)
    sig2 = (nu**2 * p * q - nu * (p**2 + q**2) + p * q) / (nu - 1.0) ** 2
    return OneDEstimate(
        mu=a + (b - a) * mu_p,
        sigma=(b - a) * float(np.sqrt(sig2)),
        boundary=False,
        atom=None,
    )


def boundary_rate_probe(nu: float, eps_list) -> list[tuple[float, float]]:
    """Scale of the two-point family approaching the big-atom boundary.

    For each eps, the law puts mass (nu - eps)/(nu + 1) at 1 and the rest at
    0; returns (eps, sigma) computed by the full solver. The ratio
    sigma / sqrt(eps/(nu-1)) tends to 1 as eps decreases to 0, exhibiting the
    square-root (non-Lipschitz) boundary rate.
    """
    nu = float(nu)
    if not nu > 1.0:
        raise NuOutOfRange(f"requires nu > 1, got {nu}")
    out = []
    for eps in eps_list:
        eps = float(eps)
        if not 0.0 < eps < nu:
            raise ValueError("eps values must lie in (0, nu)")
        p = (nu - eps) / (nu + 1.0)
        sample = EmpiricalSample(np.array([[0.0], [1.0]]), np.array([1.0 - p, p]))
        est = solve_oned(sample, nu)
        out.append((eps, est.sigma))
    return out
