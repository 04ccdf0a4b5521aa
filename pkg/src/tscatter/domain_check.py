"""Existence-domain checks for empirical laws.

The scatter functional with tail parameter ``a0 = nu + d`` exists for a law Q
on R^d exactly when every linear subspace H of dimension q <= d-1 carries mass
``Q(H) < 1 - (d - q)/a0``. The location-scatter version replaces linear
subspaces by affine ones; lifting each point y to (y, 1) reduces it to the
linear check one dimension up.

For a discrete law any violating subspace is spanned by sample points it
contains, so exact checking enumerates spans of small point subsets. A work
budget keeps that enumeration honest; past the budget a randomized projection
check is available, whose rejections are certified but whose acceptances are
not exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EnumerationBudgetError

__all__ = [
    "EmpiricalSample",
    "DomainReport",
    "check_scatter_domain",
    "check_locscat_domain",
    "check_locscat_domain_direct",
    "lift",
    "max_atom",
]

# Mass within this distance of a threshold counts as reaching it. The domain
# definitions require strict inequality, so exact-boundary constructions
# (e.g. an atom of exactly nu/(nu+1)) must be rejected despite rounding.
EQ_TOL = 1e-12

# Relative tolerance for rank and point-in-subspace decisions.
POINT_RTOL = 1e-9

# Subsets examined before exact enumeration refuses to run.
DEFAULT_BUDGET = 2_000_000


@dataclass(frozen=True)
class EmpiricalSample:
    """A weighted discrete law: n points in R^d with nonnegative weights summing to 1.

    One-dimensional point arrays are promoted to shape (n, 1). Weights default
    to uniform. Arrays are canonicalized (-0.0 becomes +0.0) and frozen.
    """

    points: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError(f"points must be an (n, d) array with n >= 1, got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        pts = pts + 0.0  # normalizes -0.0 so exact-equality merging is stable
        if self.weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.asarray(self.weights, dtype=float).reshape(-1)
            if w.shape[0] != pts.shape[0]:
                raise ValueError("weights length must match number of points")
            if not np.isfinite(w).all() or (w < 0.0).any():
                raise ValueError("weights must be finite and nonnegative")
            total = w.sum()
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"weights must sum to 1 within 1e-12, got {total!r}")
            w = w / total
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def merged(self):
        """Merge exactly coincident points.

        Returns ``(sample, rep_index)`` where ``rep_index[k]`` is the index in
        the original sample of a representative of merged point k. Points come
        back in lexicographic order.
        """
        uniq, first, inverse = np.unique(
            self.points, axis=0, return_index=True, return_inverse=True
        )
        w = np.bincount(inverse.reshape(-1), weights=self.weights, minlength=uniq.shape[0])
        return EmpiricalSample(uniq, w / w.sum()), first

    def drop_zero_weights(self) -> "EmpiricalSample":
        keep = self.weights > 0.0
        if keep.all():
            return self
        return EmpiricalSample(self.points[keep], self.weights[keep] / self.weights[keep].sum())


@dataclass(frozen=True)
class DomainReport:
    """Verdict of a domain check plus the closest-to-violating subspace found.

    ``member`` is False exactly when some recorded subspace reaches its mass
    threshold. ``worst_*`` describe the subspace with the largest
    mass - threshold margin; ``witness_points`` are indices into the checked
    sample spanning it. ``exact`` is False for randomized projection checks,
    whose acceptances are not certificates.
    """

    member: bool
    a0: float
    worst_subspace_dim: int | None
    worst_mass: float
    threshold: float
    witness_points: tuple[int, ...] = ()
    exact: bool = True


def lift(sample: EmpiricalSample) -> EmpiricalSample:
    """Append a constant coordinate 1 to every point, keeping weights."""
    ones = np.ones((sample.n, 1))
    return EmpiricalSample(np.hstack([sample.points, ones]), sample.weights)


def max_atom(sample: EmpiricalSample):
    """Heaviest atom after merging coincident points.

    Returns ``(location, mass)`` with ties broken by lexicographically
    smallest location.
    """
    merged, _ = sample.merged()
    k = int(np.argmax(merged.weights))
    return merged.points[k].copy(), float(merged.weights[k])


def _point_scale(points: np.ndarray) -> float:
    norms = np.linalg.norm(points, axis=1)
    top = float(norms.max()) if norms.size else 0.0
    return top if top > 0.0 else 1.0


def _subset_count(m: int, max_size: int) -> int:
    total = 0
    c = 1
    for s in range(1, max_size + 1):
        c = c * (m - s + 1) // s
        total += c
        if total > 10 * DEFAULT_BUDGET:
            break
    return total


def check_scatter_domain(
    sample: EmpiricalSample,
    a0: float,
    *,
    method: str = "exact",
    budget: int = DEFAULT_BUDGET,
    projections: int = 32,
    seed: int = 0,
) -> DomainReport:
    """Decide whether the law satisfies the linear-subspace mass conditions.

    Membership requires ``mass(H) < 1 - (d - q)/a0`` strictly for every linear
    subspace H of dimension q <= d-1 (including H = {0}). Equality within
    ``EQ_TOL`` counts as a violation. Requires ``a0 > d``.

    ``method="exact"`` enumerates subspaces spanned by subsets of at most d-1
    distinct sample points; it raises :class:`EnumerationBudgetError` when
    d > 4 or the subset count exceeds ``budget``. ``method="randomized"``
    instead tests random linear projections to at most 4 dimensions: any
    violation it finds certifies one in the original space (the preimage of a
    violating subspace has the same codimension and at least the same mass),
    but membership verdicts are only heuristic and the report is flagged
    ``exact=False``.
    """
    a0 = float(a0)
    d = sample.d
    if not a0 > d:
        raise ValueError(f"need a0 > d, got a0={a0} with d={d}")
    merged, rep = sample.merged()
    if method == "exact":
        if d > 4:
            raise EnumerationBudgetError(
                f"exact enumeration unsupported for d={d} > 4; use method='randomized'"
            )
        if _subset_count(merged.n, d - 1) > budget:
            raise EnumerationBudgetError(
                f"exact enumeration over {merged.n} distinct points in d={d} exceeds "
                f"budget={budget}; use method='randomized'"
            )
        return _check_exact(merged, rep, a0, d)
    if method == "randomized":
        return _check_randomized(merged, rep, a0, d, projections, seed, budget)
    raise ValueError(f"unknown method {method!r}")


def _best_candidate(cands):
    # candidates are (mass, threshold, dim, witnesses); worst margin first
    return max(cands, key=lambda c: (c[0] - c[1], c[0]))


def _check_exact(merged: EmpiricalSample, rep, a0: float, d: int) -> DomainReport:
    X = merged.points
    w = merged.weights
    m = merged.n
    scale = _point_scale(X)
    tol = POINT_RTOL * scale
    norms = np.linalg.norm(X, axis=1)

    cands = []
    at_origin = norms <= tol
    cands.append((float(w[at_origin].sum()), 1.0 - d / a0, 0, ()))

    if d >= 2:
        # lines through single points; for d <= 3 the distance to a unit
        # direction is a cross product, which vectorizes without cancellation
        threshold = 1.0 - (d - 1) / a0
        nz = np.nonzero(norms > tol)[0]
        if d in (2, 3) and nz.size:
            units = X[nz] / norms[nz, None]
            for start in range(0, nz.size, 512):
                blk = units[start : start + 512]
                if d == 2:
                    resid = np.abs(
                        np.outer(X[:, 0], blk[:, 1]) - np.outer(X[:, 1], blk[:, 0])
                    )
                else:
                    c0 = np.outer(X[:, 1], blk[:, 2]) - np.outer(X[:, 2], blk[:, 1])
                    c1 = np.outer(X[:, 2], blk[:, 0]) - np.outer(X[:, 0], blk[:, 2])
                    c2 = np.outer(X[:, 0], blk[:, 1]) - np.outer(X[:, 1], blk[:, 0])
                    resid = np.sqrt(c0**2 + c1**2 + c2**2)
                masses = w @ (resid <= tol)
                for pos in range(blk.shape[0]):
                    i = nz[start + pos]
                    cands.append((float(masses[pos]), threshold, 1, (int(rep[i]),)))
        else:
            for i in nz:
                u = X[i] / norms[i]
                resid = X - np.outer(X @ u, u)
                inside = np.linalg.norm(resid, axis=1) <= tol
                cands.append((float(w[inside].sum()), threshold, 1, (int(rep[i]),)))

    for size in range(2, d):
        threshold = 1.0 - (d - size) / a0
        for subset in itertools.combinations(range(m), size):
            sub = X[list(subset)]
            q, r = np.linalg.qr(sub.T)
            # dependent subsets span something a smaller subset already covered
            if np.abs(np.diag(r)).min() <= tol:
                continue
            resid = X - (X @ q) @ q.T
            inside = np.linalg.norm(resid, axis=1) <= tol
            mass = float(w[inside].sum())
            cands.append((mass, threshold, size, tuple(int(rep[i]) for i in subset)))

    mass, threshold, dim, witness = _best_candidate(cands)
    member = mass < threshold - EQ_TOL
    return DomainReport(
        member=member,
        a0=a0,
        worst_subspace_dim=dim,
        worst_mass=mass,
        threshold=threshold,
        witness_points=witness,
        exact=True,
    )


def _check_randomized(
    merged: EmpiricalSample, rep, a0: float, d: int, projections: int, seed: int, budget: int
) -> DomainReport:
    rng = np.random.default_rng(seed)
    k = min(d, 4)
    for _ in range(projections):
        basis, _ = np.linalg.qr(rng.standard_normal((d, k)))
        proj = EmpiricalSample(merged.points @ basis, merged.weights)
        # thresholds 1 - codim/a0 depend only on codimension, which the
        # preimage of a projected subspace preserves, so the projected check
        # runs with the same a0: any violation it finds is certified upstairs.
        sub = _check_exact(*proj.merged(), a0=a0, d=k)
        if not sub.member:
            updim = d - (k - (sub.worst_subspace_dim or 0))
            witness = tuple(int(rep[i]) for i in sub.witness_points)
            return DomainReport(
                member=False,
                a0=a0,
                worst_subspace_dim=updim,
                worst_mass=sub.worst_mass,
                threshold=1.0 - (d - updim) / a0,
                witness_points=witness,
                exact=False,
            )
    return DomainReport(
        member=True,
        a0=a0,
        worst_subspace_dim=None,
        worst_mass=0.0,
        threshold=1.0 - d / a0,
        witness_points=(),
        exact=False,
    )


def check_locscat_domain(sample: EmpiricalSample, a0: float, **kwargs) -> DomainReport:
    """Affine-hyperplane domain check, via the lift to one dimension up.

    Membership requires ``mass(J) < 1 - (d - q)/a0`` for every affine subspace
    J of dimension q <= d-1; equivalently the lifted sample passes the linear
    check in R^{d+1}. Requires ``a0 > d + 1``. The returned report translates
    subspace dimensions back to affine dimensions (lifted dim minus one).
    """
    a0 = float(a0)
    d = sample.d
    if not a0 > d + 1:
        raise ValueError(f"need a0 > d + 1, got a0={a0} with d={d}")
    rpt = check_scatter_domain(lift(sample), a0, **kwargs)
    dim = None if rpt.worst_subspace_dim is None else max(rpt.worst_subspace_dim - 1, 0)
    return DomainReport(
        member=rpt.member,
        a0=a0,
        worst_subspace_dim=dim,
        worst_mass=rpt.worst_mass,
        threshold=rpt.threshold,
        witness_points=rpt.witness_points,
        exact=rpt.exact,
    )


def check_locscat_domain_direct(sample: EmpiricalSample, a0: float) -> DomainReport:
    """Affine check by direct enumeration, for d <= 2 only.

    Cross-validates the lifted implementation: enumerates atoms (q = 0) and,
    for d = 2, lines through pairs of distinct points (q = 1).
    """
    a0 = float(a0)
    d = sample.d
    if d > 2:
        raise ValueError("direct affine enumeration is implemented for d <= 2 only")
    if not a0 > d + 1:
        raise ValueError(f"need a0 > d + 1, got a0={a0} with d={d}")
    merged, rep = sample.merged()
    X = merged.points
    w = merged.weights
    scale = _point_scale(X)
    tol = POINT_RTOL * max(scale, 1.0)

    cands = []
    for i in range(merged.n):
        cands.append((float(w[i]), 1.0 - d / a0, 0, (int(rep[i]),)))
    if d == 2:
        for i, j in itertools.combinations(range(merged.n), 2):
            direction = X[j] - X[i]
            nrm = np.linalg.norm(direction)
            if nrm <= tol:
                continue
            u = direction / nrm
            diff = X - X[i]
            resid = diff - np.outer(diff @ u, u)
            inside = np.linalg.norm(resid, axis=1) <= tol
            mass = float(w[inside].sum())
            cands.append((mass, 1.0 - (d - 1) / a0, 1, (int(rep[i]), int(rep[j]))))

    mass, threshold, dim, witness = _best_candidate(cands)
    member = mass < threshold - EQ_TOL
    return DomainReport(
        member=member,
        a0=a0,
        worst_subspace_dim=dim,
        worst_mass=mass,
        threshold=threshold,
        witness_points=witness,
        exact=True,
    )
