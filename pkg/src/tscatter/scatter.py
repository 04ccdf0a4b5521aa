"""Pure scatter functional: objective, gradient, and fixed-point solver.

For a law Q on R^d and tail parameter nu > 0, the scatter matrix A minimizes

    Qh(A) = (1/2) log det A + sum_i w_i [rho(y_i' A^{-1} y_i) - rho(y_i' y_i)]

with rho(s) = ((nu + d)/2) log((nu + s)/nu). On the existence domain the
minimizer is the unique critical point, characterized by the fixed-point
equation A = sum_i w_i u(y_i' A^{-1} y_i) y_i y_i' with u(s) = (nu+d)/(nu+s).
The solver iterates that map; each step is a majorize-minimize update, so the
objective decreases monotonically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain_check import EmpiricalSample, check_scatter_domain
from .exceptions import DomainViolation, NotSpdError, NumericalBreakdown
from .symspace import SpdMatrix, as_spd, symmetrize

__all__ = ["ScatterConfig", "ScatterResult", "weight_u", "objective", "gradient", "solve_scatter"]

# Allowed per-step objective increase before declaring breakdown (roundoff slack).
MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class ScatterConfig:
    """Solver settings.

    ``init="second_moment"`` starts from the weighted second-moment matrix
    (regularized by 1e-8 times its trace), falling back to the identity if
    that matrix is singular.
    """

    nu: float
    tol_grad: float = 1e-10
    tol_step: float = 1e-12
    max_iter: int = 500
    init: str = "identity"

    def __post_init__(self):
        if not self.nu > 0.0:
            raise ValueError("nu must be positive")
        if not (self.tol_grad > 0.0 and self.tol_step > 0.0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.init not in ("identity", "second_moment"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class ScatterResult:
    A: SpdMatrix
    iterations: int
    objective: float
    grad_norm: float
    converged: bool
    objective_trace: tuple[float, ...]
    stop_reason: str
    fp_residual: float


def weight_u(s, nu: float, d: int):
    """Downweighting function u(s) = (nu + d)/(nu + s) for s >= 0.

    Decreasing in s, while s * u(s) increases strictly to the supremum
    nu + d as s grows.
    """
    s = np.asarray(s, dtype=float)
    if (s < 0).any():
        raise ValueError("u is defined for nonnegative arguments")
    out = (nu + d) / (nu + s)
    return float(out) if out.ndim == 0 else out


def _rho_diff(s, t, nu: float, d: int):
    # rho(s) - rho(t); the log(nu) normalizations cancel
    return 0.5 * (nu + d) * (np.log(nu + s) - np.log(nu + t))


def objective(sample: EmpiricalSample, A, nu: float) -> float:
    """Adjusted negative log-likelihood Qh(A); zero at the identity."""
    A = as_spd(A)
    s = A.quad_forms(sample.points)
    t = np.einsum("ij,ij->i", sample.points, sample.points)
    return 0.5 * A.logdet() + float(sample.weights @ _rho_diff(s, t, nu, sample.d))


def gradient(sample: EmpiricalSample, A, nu: float) -> np.ndarray:
    """Gradient of Qh with respect to A: (1/2)(A^{-1} - sum w u A^{-1} y y' A^{-1}).

    Vanishes exactly at the fixed point of the reweighting map.
    """
    A = as_spd(A)
    Ainv = A.inv()
    Z = sample.points @ Ainv
    s = np.einsum("ij,ij->i", Z, sample.points)
    u = weight_u(s, nu, sample.d)
    M = (Z * (sample.weights * u)[:, None]).T @ Z
    return symmetrize(0.5 * (Ainv - M), rtol=1e-6)


def _initial_matrix(sample: EmpiricalSample, cfg: ScatterConfig) -> SpdMatrix:
    d = sample.d
    if cfg.init == "second_moment":
        M = (sample.points * sample.weights[:, None]).T @ sample.points
        tr = np.trace(M)
        if tr > 0.0:
            try:
                return SpdMatrix(M + 1e-8 * tr * np.eye(d))
            except NotSpdError:
                pass
    return SpdMatrix(np.eye(d))


def solve_scatter(
    sample: EmpiricalSample, cfg: ScatterConfig, *, check_domain: bool = True
) -> ScatterResult:
    """Compute the scatter matrix by fixed-point iteration.

    Stops once the gradient norm and fixed-point residual meet ``tol_grad``
    (``converged=True``), or on step stagnation below ``tol_step`` or at
    ``max_iter`` (``converged`` reflects the gradient criterion; the best
    iterate is returned either way). Raises :class:`DomainViolation` when the
    law fails the existence check and :class:`NumericalBreakdown` if an
    iterate leaves the SPD cone or the objective increases beyond roundoff,
    neither of which can happen in exact arithmetic on the domain.
    """
    sample = sample.drop_zero_weights()
    d = sample.d
    nu = cfg.nu
    if check_domain:
        report = check_scatter_domain(sample, nu + d)
        if not report.member:
            raise DomainViolation(report)

    Y = sample.points
    w = sample.weights
    t = np.einsum("ij,ij->i", Y, Y)
    B = _initial_matrix(sample, cfg)

    trace: list[float] = []
    prev_obj = np.inf
    grad_norm = np.inf
    fp_residual = np.inf
    stop_reason = "max_iter"
    iterations = 0

    for k in range(cfg.max_iter):
        s = B.quad_forms(Y)
        obj = 0.5 * B.logdet() + float(w @ _rho_diff(s, t, nu, d))
        if obj > prev_obj + MONOTONE_SLACK * max(1.0, abs(prev_obj)):
            raise NumericalBreakdown(
                f"objective increased from {prev_obj!r} to {obj!r} at iteration {k}"
            )
        trace.append(obj)
        prev_obj = obj

        u = (nu + d) / (nu + s)
        B_next = symmetrize((Y * (w * u)[:, None]).T @ Y, rtol=1e-6)

        R = B.mat - B_next
        Binv = B.inv()
        grad_norm = float(np.linalg.norm(0.5 * Binv @ R @ Binv, ord="fro"))
        fp_residual = float(np.linalg.norm(R, ord="fro"))
        norm_B = float(np.linalg.norm(B.mat, ord="fro"))
        iterations = k

        if grad_norm <= cfg.tol_grad and fp_residual <= 10.0 * cfg.tol_grad * norm_B:
            stop_reason = "grad"
            break
        if fp_residual / norm_B <= cfg.tol_step:
            stop_reason = "step"
            break
        try:
            B = SpdMatrix(B_next)
        except NotSpdError as exc:
            raise NumericalBreakdown(f"iterate left the SPD cone at iteration {k}") from exc
        iterations = k + 1

    converged = grad_norm <= cfg.tol_grad
    return ScatterResult(
        A=B,
        iterations=iterations,
        objective=prev_obj,
        grad_norm=grad_norm,
        converged=converged,
        objective_trace=tuple(trace),
        stop_reason=stop_reason,
        fp_residual=fp_residual,
    )
