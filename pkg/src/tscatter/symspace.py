"""Symmetric-matrix algebra used throughout the package.

Provides an SPD wrapper with a cached Cholesky factor, the block embedding
between (d+1)-dimensional scatter matrices and (Sigma, mu, gamma) triples,
and an isometric half-vectorization of the space of symmetric matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exceptions import DegeneracyError, NotSpdError

__all__ = [
    "SpdMatrix",
    "EmbeddedScatter",
    "symmetrize",
    "embed",
    "extract",
    "sym_dim",
    "sym_to_vec",
    "vec_to_sym",
    "sym_basis",
    "congruence_matrix",
]

SQRT2 = np.sqrt(2.0)

# Relative asymmetry above which inputs are rejected instead of averaged.
ASYM_RTOL = 1e-12

# Cholesky pivots at or below this multiple of the trace fail the SPD check.
PIVOT_RTOL = 1e-12


def symmetrize(mat, rtol=ASYM_RTOL):
    """Return (M + M') / 2, rejecting visibly asymmetric input.

    Asymmetry up to ``rtol`` times the entry scale is treated as roundoff and
    averaged away; anything larger raises, since silently symmetrizing a
    genuinely asymmetric matrix would hide bugs upstream.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    gap = np.abs(mat - mat.T).max() if mat.size else 0.0
    scale = max(np.abs(mat).max() if mat.size else 0.0, 1.0)
    if gap > rtol * scale:
        raise ValueError(f"matrix asymmetry {gap:g} exceeds tolerance {rtol * scale:g}")
    return (mat + mat.T) / 2.0


class SpdMatrix:
    """Symmetric positive definite matrix with a cached Cholesky factor.

    Construction symmetrizes the input and fails with :class:`NotSpdError`
    unless every Cholesky pivot exceeds ``PIVOT_RTOL`` times the trace.
    Instances are immutable and safe to share across threads.
    """

    __slots__ = ("_mat", "_chol")

    def __init__(self, mat):
        m = symmetrize(mat)
        if m.shape[0] == 0:
            raise NotSpdError("empty matrix")
        if not np.isfinite(m).all():
            raise NotSpdError("matrix has non-finite entries")
        tr = float(np.trace(m))
        if tr <= 0.0:
            raise NotSpdError("matrix has non-positive trace")
        try:
            chol = np.linalg.cholesky(m)
        except np.linalg.LinAlgError as exc:
            raise NotSpdError("matrix is not positive definite") from exc
        pivots = np.diag(chol) ** 2
        if pivots.min() <= PIVOT_RTOL * tr:
            raise NotSpdError(
                f"smallest pivot {pivots.min():.3g} at or below {PIVOT_RTOL * tr:.3g}"
            )
        m.setflags(write=False)
        chol.setflags(write=False)
        self._mat = m
        self._chol = chol

    @property
    def mat(self) -> np.ndarray:
        return self._mat

    @property
    def chol(self) -> np.ndarray:
        """Lower-triangular Cholesky factor L with A = L L'."""
        return self._chol

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    def solve(self, b):
        """Solve A x = b using the cached factorization."""
        return cho_solve((self._chol, True), np.asarray(b, dtype=float))

    def inv(self) -> np.ndarray:
        return symmetrize(self.solve(np.eye(self.dim)), rtol=1e-9)

    def logdet(self) -> float:
        return 2.0 * float(np.log(np.diag(self._chol)).sum())

    def quad_forms(self, points) -> np.ndarray:
        """Row-wise quadratic forms y_i' A^{-1} y_i for an (n, d) array."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        z = solve_triangular(self._chol, pts.T, lower=True)
        return np.einsum("ij,ij->j", z, z)

    def __repr__(self):
        return f"SpdMatrix(dim={self.dim})"


def as_spd(a) -> SpdMatrix:
    """Coerce an array or SpdMatrix to SpdMatrix, validating positivity."""
    return a if isinstance(a, SpdMatrix) else SpdMatrix(a)


@dataclass(frozen=True)
class EmbeddedScatter:
    """A (d+1)-dimensional scatter matrix in block correspondence with (Sigma, mu, gamma).

    ``A = gamma * [[Sigma + mu mu', mu], [mu', 1]]``; the correspondence is a
    bijection between SPD matrices of size d+1 and triples with Sigma SPD and
    gamma > 0.
    """

    A: SpdMatrix
    Sigma: SpdMatrix
    mu: np.ndarray
    gamma: float


def embed(Sigma, mu, gamma=1.0) -> EmbeddedScatter:
    """Assemble the block scatter matrix for (Sigma, mu, gamma).

    Raises :class:`NotSpdError` if Sigma is not SPD and ValueError for
    gamma <= 0.
    """
    Sigma = as_spd(Sigma)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.shape[0] != Sigma.dim:
        raise ValueError(f"mu has length {mu.shape[0]}, expected {Sigma.dim}")
    gamma = float(gamma)
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    d = Sigma.dim
    block = np.empty((d + 1, d + 1))
    block[:d, :d] = Sigma.mat + np.outer(mu, mu)
    block[:d, d] = mu
    block[d, :d] = mu
    block[d, d] = 1.0
    A = SpdMatrix(gamma * block)
    mu = mu.copy()
    mu.setflags(write=False)
    return EmbeddedScatter(A=A, Sigma=Sigma, mu=mu, gamma=gamma)


def extract(A):
    """Invert the block embedding: recover (Sigma, mu, gamma) from A.

    ``gamma`` is the bottom-right entry, ``mu`` the rescaled last column,
    ``Sigma`` the rescaled top-left block minus ``mu mu'``. Raises
    :class:`DegeneracyError` when the recovered Sigma is not positive
    definite, which signals that A is outside the valid image of the
    embedding.
    """
    A = as_spd(A)
    if A.dim < 2:
        raise ValueError("extract needs a matrix of dimension at least 2")
    m = A.mat
    d = A.dim - 1
    gamma = float(m[d, d])
    if gamma <= 0.0:
        raise DegeneracyError("corner entry must be positive")
    mu = m[:d, d] / gamma
    Sigma = m[:d, :d] / gamma - np.outer(mu, mu)
    try:
        SpdMatrix(Sigma)
    except NotSpdError as exc:
        raise DegeneracyError("recovered scatter block is not positive definite") from exc
    return symmetrize(Sigma, rtol=1e-9), mu, gamma


def sym_dim(d: int) -> int:
    """Dimension d(d+1)/2 of the space of symmetric d x d matrices."""
    return d * (d + 1) // 2


def sym_to_vec(mat) -> np.ndarray:
    """Coordinates of a symmetric matrix in an orthonormal basis of S_d.

    Ordering: the d diagonal entries first, then the upper off-diagonal
    entries row by row, each scaled by sqrt(2). With this scaling the map is
    an isometry: <vec(M), vec(N)> = trace(M N).
    """
    m = symmetrize(mat, rtol=1e-9)
    d = m.shape[0]
    iu = np.triu_indices(d, k=1)
    return np.concatenate([np.diag(m), SQRT2 * m[iu]])


def vec_to_sym(vec) -> np.ndarray:
    """Inverse of :func:`sym_to_vec`."""
    vec = np.asarray(vec, dtype=float).reshape(-1)
    k = vec.size
    d = int(round((np.sqrt(8.0 * k + 1.0) - 1.0) / 2.0))
    if sym_dim(d) != k:
        raise ValueError(f"length {k} is not d(d+1)/2 for any integer d")
    m = np.zeros((d, d))
    m[np.diag_indices(d)] = vec[:d]
    iu = np.triu_indices(d, k=1)
    m[iu] = vec[d:] / SQRT2
    m[(iu[1], iu[0])] = m[iu]
    return m


def sym_basis(d: int) -> list[np.ndarray]:
    """Orthonormal basis of S_d in the :func:`sym_to_vec` coordinate order."""
    out = []
    for i in range(d):
        e = np.zeros((d, d))
        e[i, i] = 1.0
        out.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = 1.0 / SQRT2
            out.append(e)
    return out


def congruence_matrix(m) -> np.ndarray:
    """Matrix of the map X -> M X M' on sym_to_vec coordinates.

    For symmetric M the result is symmetric; it is the Jacobian of the
    congruence action used to push covariances through linear images.
    """
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    cols = [sym_to_vec(m @ e @ m.T) for e in sym_basis(d)]
    return np.column_stack(cols)
