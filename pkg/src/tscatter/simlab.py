"""Monte Carlo validation of the asymptotic-normality predictions.

Replicates draw i.i.d. samples from a configured law, fit the scatter or
location-scatter functional, and compare the empirical covariance of
sqrt(n) * (vectorized estimate - functional) against the analytic asymptotic
covariance. Replicate RNG streams are keyed by (seed, replicate index), so
reports are bit-identical across runs and worker counts.

For discrete target laws the functional and its covariance are computed
exactly from the law itself; for continuous laws they are estimated from one
large surrogate sample and the report is flagged accordingly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .asymptotics import AsymptoticCov, asymptotic_cov_locscatter, asymptotic_cov_scatter
from .domain_check import EmpiricalSample, check_locscat_domain, check_scatter_domain, lift
from .exceptions import DomainViolation
from .locscatter import solve_locscatter
from .scatter import ScatterConfig, solve_scatter
from .symspace import SpdMatrix, as_spd, sym_to_vec, symmetrize

__all__ = [
    "Sampler",
    "gaussian_sampler",
    "t_sampler",
    "discrete_sampler",
    "contaminated_sampler",
    "McReport",
    "run_clt_experiment",
    "run_consistency_sweep",
    "fit_loglog_slope",
    "check_class_constraint",
]

SURROGATE_REPLICATE = 2**31  # reserved substream index for surrogate-truth draws


@dataclass(frozen=True)
class Sampler:
    """A law to draw replicates from, with deterministic per-replicate streams.

    ``kind`` is one of ``gaussian``, ``multivariate_t``, ``discrete``, or
    ``contaminated``. Streams are keyed by (seed, replicate), so identical
    seeds reproduce identical draws regardless of scheduling.
    """

    kind: str
    seed: int
    mu: np.ndarray | None = None
    Sigma: np.ndarray | None = None
    df: float | None = None
    points: np.ndarray | None = None
    weights: np.ndarray | None = None
    base: "Sampler | None" = None
    eps: float = 0.0
    point: np.ndarray | None = None

    @property
    def dim(self) -> int:
        if self.kind in ("gaussian", "multivariate_t"):
            return self.mu.shape[0]
        if self.kind == "discrete":
            return self.points.shape[1]
        return self.base.dim

    def rng_for(self, replicate: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, int(replicate)])

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "gaussian":
            L = np.linalg.cholesky(self.Sigma)
            return self.mu + rng.standard_normal((n, self.dim)) @ L.T
        if self.kind == "multivariate_t":
            # Gaussian scale mixture: chi-square divisor with df degrees of freedom
            L = np.linalg.cholesky(self.Sigma)
            z = rng.standard_normal((n, self.dim)) @ L.T
            g = rng.chisquare(self.df, size=n)
            return self.mu + z / np.sqrt(g / self.df)[:, None]
        if self.kind == "discrete":
            idx = rng.choice(self.points.shape[0], size=n, p=self.weights)
            return self.points[idx]
        if self.kind == "contaminated":
            pts = self.base.draw(n, rng)
            mask = rng.random(n) < self.eps
            pts[mask] = self.point
            return pts
        raise ValueError(f"unknown sampler kind {self.kind!r}")


def gaussian_sampler(mu, Sigma, seed: int) -> Sampler:
    mu = np.asarray(mu, dtype=float).reshape(-1)
    Sigma = as_spd(Sigma).mat
    return Sampler(kind="gaussian", seed=int(seed), mu=mu, Sigma=Sigma)


def t_sampler(df: float, mu, Sigma, seed: int) -> Sampler:
    if not df > 0:
        raise ValueError("df must be positive")
    mu = np.asarray(mu, dtype=float).reshape(-1)
    Sigma = as_spd(Sigma).mat
    return Sampler(kind="multivariate_t", seed=int(seed), mu=mu, Sigma=Sigma, df=float(df))


def discrete_sampler(points, weights, seed: int) -> Sampler:
    law = EmpiricalSample(points, weights)
    return Sampler(kind="discrete", seed=int(seed), points=law.points, weights=law.weights)


def contaminated_sampler(base: Sampler, eps: float, point, seed: int | None = None) -> Sampler:
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    point = np.asarray(point, dtype=float).reshape(-1)
    return Sampler(
        kind="contaminated",
        seed=int(base.seed if seed is None else seed),
        base=base,
        eps=float(eps),
        point=point,
    )


def as_discrete_law(sampler: Sampler) -> EmpiricalSample | None:
    """The sampler's law as a weighted sample, when it is exactly discrete."""
    if sampler.kind == "discrete":
        return EmpiricalSample(sampler.points, sampler.weights)
    if sampler.kind == "contaminated":
        base = as_discrete_law(sampler.base)
        if base is None:
            return None
        pts = np.vstack([base.points, sampler.point[None, :]])
        w = np.concatenate([(1.0 - sampler.eps) * base.weights, [sampler.eps]])
        return EmpiricalSample(pts, w).merged()[0]
    return None


@dataclass(frozen=True)
class McReport:
    """Outcome of a CLT experiment.

    ``empirical_cov`` is the covariance across replicates of
    sqrt(n) * (vectorized estimate - functional); ``max_rel_err`` compares it
    entrywise to ``target_cov.S`` over entries exceeding ``rel_threshold`` in
    magnitude. ``existence_rate`` is the fraction of replicates passing the
    domain check; only those contribute estimates.
    """

    n: int
    reps: int
    mode: str
    seed: int
    empirical_cov: np.ndarray
    target_cov: AsymptoticCov
    max_rel_err: float
    normality_stat: tuple[float, ...]
    existence_rate: float
    rel_threshold: float
    warnings: tuple[str, ...] = ()


def _theta_scatter(sample: EmpiricalSample, nu: float) -> np.ndarray:
    fit = solve_scatter(sample, ScatterConfig(nu=nu), check_domain=False)
    return sym_to_vec(fit.A.mat)


def _theta_locscatter(sample: EmpiricalSample, nu: float) -> np.ndarray:
    fit = solve_scatter(lift(sample), ScatterConfig(nu=nu - 1.0), check_domain=False)
    m = fit.A.mat
    d = sample.d
    gamma = m[d, d]
    mu = m[:d, d] / gamma
    Sigma = m[:d, :d] / gamma - np.outer(mu, mu)
    return np.concatenate([mu, sym_to_vec(symmetrize(Sigma, rtol=1e-9))])


def _target_objects(sampler: Sampler, nu: float, mode: str, surrogate_n: int):
    warnings = []
    law = as_discrete_law(sampler)
    if law is None:
        rng = sampler.rng_for(SURROGATE_REPLICATE)
        law = EmpiricalSample(sampler.draw(surrogate_n, rng)).merged()[0]
        warnings.append(f"surrogate truth from one n={surrogate_n} draw")
    # exhaustive subspace enumeration over a huge merged continuous sample is
    # quadratic; membership is generic there, so the gate runs on small laws only
    check = law.n <= 2000
    if mode == "scatter":
        target_cov = asymptotic_cov_scatter(law, nu, check_domain=check)
        theta0 = _theta_scatter(law, nu)
    else:
        target_cov = asymptotic_cov_locscatter(law, nu, check_domain=check)
        theta0 = _theta_locscatter(law, nu)
    return law, theta0, target_cov, warnings


def _replicate_theta(sampler: Sampler, nu: float, n: int, mode: str, rep: int):
    """Vectorized estimate for one replicate, or None when out of domain."""
    pts = sampler.draw(n, sampler.rng_for(rep))
    sample = EmpiricalSample(pts).merged()[0]
    d = sample.d
    if mode == "scatter":
        if not check_scatter_domain(sample, nu + d).member:
            return None
        return _theta_scatter(sample, nu)
    if not check_locscat_domain(sample, nu + d).member:
        return None
    return _theta_locscatter(sample, nu)


def run_clt_experiment(
    sampler: Sampler,
    nu: float,
    n: int,
    reps: int,
    *,
    mode: str = "scatter",
    rel_threshold: float = 0.05,
    surrogate_n: int = 1_000_000,
    workers: int = 1,
) -> McReport:
    """Compare replicate fluctuations against the asymptotic covariance.

    Requires ``reps >= 2``. Replicates failing the domain check are counted in
    ``existence_rate`` and skipped; a rate below 0.99 adds a near-boundary
    warning to the report.
    """
    if mode not in ("scatter", "locscatter"):
        raise ValueError(f"unknown mode {mode!r}")
    if reps < 2:
        raise ValueError("reps must be at least 2 for a covariance estimate")
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")

    law, theta0, target_cov, warnings = _target_objects(sampler, nu, mode, surrogate_n)

    def work(rep):
        return _replicate_theta(sampler, nu, n, mode, rep)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            thetas = list(pool.map(work, range(reps)))
    else:
        thetas = [work(rep) for rep in range(reps)]

    kept = [th for th in thetas if th is not None]
    existence_rate = len(kept) / reps
    if existence_rate < 0.99:
        warnings.append(f"existence rate {existence_rate:.4f} below 0.99: near-boundary law")
    if len(kept) < 2:
        raise DomainViolation(
            check_scatter_domain(law, nu + law.d) if mode == "scatter" else
            check_locscat_domain(law, nu + law.d),
            "too few replicates inside the existence domain",
        )

    errors = np.sqrt(n) * (np.stack(kept) - theta0)
    emp = np.cov(errors, rowvar=False, ddof=1)
    emp = np.atleast_2d(emp)
    emp = (emp + emp.T) / 2.0

    S = target_cov.S
    mask = np.abs(S) > rel_threshold
    if mask.any():
        max_rel_err = float(np.max(np.abs(emp[mask] - S[mask]) / np.abs(S[mask])))
    else:
        max_rel_err = float("nan")

    ks = []
    for j in range(errors.shape[1]):
        col = errors[:, j]
        sd = col.std(ddof=1)
        if sd > 1e-12 * (1.0 + np.abs(col).max()):
            ks.append(float(stats.kstest(col, "norm", args=(col.mean(), sd)).statistic))
        else:
            ks.append(float("nan"))

    return McReport(
        n=n,
        reps=reps,
        mode=mode,
        seed=sampler.seed,
        empirical_cov=emp,
        target_cov=target_cov,
        max_rel_err=max_rel_err,
        normality_stat=tuple(ks),
        existence_rate=existence_rate,
        rel_threshold=rel_threshold,
        warnings=tuple(warnings),
    )


def run_consistency_sweep(
    sampler: Sampler,
    nu: float,
    n_list,
    reps: int,
    *,
    mode: str = "locscatter",
    surrogate_n: int = 1_000_000,
) -> list[tuple[int, float]]:
    """Mean estimation error at each sample size; errors shrink like n^{-1/2}.

    Returns ``[(n, mean ||estimate - functional||), ...]``; fit the log-log
    slope with :func:`fit_loglog_slope`. Needs at least two sample sizes.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2:
        raise ValueError("need at least two sample sizes to measure a rate")
    _, theta0, _, _ = _target_objects(sampler, nu, mode, surrogate_n)
    out = []
    for pos, n in enumerate(n_list):
        errs = []
        for rep in range(reps):
            theta = _replicate_theta(sampler, nu, n, mode, pos * reps + rep)
            if theta is not None:
                errs.append(np.linalg.norm(theta - theta0))
        out.append((n, float(np.mean(errs))))
    return out


def fit_loglog_slope(pairs) -> float:
    """Least-squares slope of log(error) against log(n)."""
    ns = np.log([p[0] for p in pairs])
    es = np.log([p[1] for p in pairs])
    return float(np.polyfit(ns, es, 1)[0])


def check_class_constraint(sample: EmpiricalSample, M: float, delta: float, nu: float) -> bool:
    """Membership in the tail-and-conditioning class used for uniform asymptotics.

    True iff the mass outside radius M is at most (1 - delta)/(nu + d) and the
    fitted scatter matrix A satisfies max(||A||, ||A^{-1}||) < 1/delta in
    operator norm. Laws outside the existence domain are not in the class.
    """
    if not M > 0.0:
        raise ValueError("M must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    d = sample.d
    tail = float(sample.weights[np.linalg.norm(sample.points, axis=1) > M].sum())
    if tail > (1.0 - delta) / (nu + d):
        return False
    try:
        fit = solve_scatter(sample, ScatterConfig(nu=nu))
    except DomainViolation:
        return False
    eigs = np.linalg.eigvalsh(fit.A.mat)
    return max(eigs[-1], 1.0 / eigs[0]) < 1.0 / delta
