import numpy as np
import pytest

from tscatter import (
    EmpiricalSample,
    NoPositiveSolution,
    NuOutOfRange,
    ScatterConfig,
    boundary_rate_probe,
    sigma_of_mu,
    solve_locscatter,
    solve_oned,
    two_point_closed_form,
)
from tscatter.oned import _profile_derivative, profile_objective


def sample1d(values, weights=None):
    return EmpiricalSample(np.asarray(values, dtype=float).reshape(-1, 1), weights)


class TestSigmaOfMu:
    def test_symmetric_pair_algebra(self):
        # F(0, s) = 1/(2 s^2 + 1) = 1/3 gives s = 1
        q = sample1d([-1.0, 1.0])
        assert abs(sigma_of_mu(q, 0.0, 2.0) - 1.0) <= 1e-12

    def test_point_mass_off_center(self):
        q = sample1d([0.0])
        assert abs(sigma_of_mu(q, 1.0, 2.0) - 1.0) <= 1e-12

    def test_point_mass_at_center_fails(self):
        q = sample1d([0.0])
        with pytest.raises(NoPositiveSolution):
            sigma_of_mu(q, 0.0, 2.0)

    def test_residual_tolerance(self):
        rng = np.random.default_rng(3)
        nu = 2.0
        target = 1.0 / (nu + 1.0)
        for _ in range(20):
            x = rng.standard_normal(12)
            q = sample1d(x)
            mu = float(rng.uniform(x.min(), x.max()))
            s = sigma_of_mu(q, mu, nu)
            d2 = (x - mu) ** 2
            resid = np.mean(d2 / (nu * s**2 + d2)) - target
            assert abs(resid) <= 1e-12


class TestSolveOned:
    def test_big_atom_boundary(self):
        q = sample1d([0.0, 1.0], [0.7, 0.3])
        est = solve_oned(q, 2.0)
        assert est.boundary
        assert est.mu == 0.0 and est.sigma == 0.0
        assert est.atom == (0.0, pytest.approx(0.7))

    def test_balanced_two_point(self):
        est = solve_oned(sample1d([0.0, 1.0]), 2.0)
        assert abs(est.mu - 0.5) <= 1e-8
        assert abs(est.sigma - 0.5) <= 1e-8
        assert not est.boundary

    def test_small_p_boundary_nu3(self):
        # p = 0.2 <= 1/(nu+1) = 0.25: the heavy endpoint takes everything
        est = solve_oned(sample1d([0.0, 1.0], [0.8, 0.2]), 3.0)
        assert est.boundary
        assert est.mu == 0.0 and est.sigma == 0.0

    def test_exact_threshold_atom_is_boundary(self):
        q = sample1d([0.0, 1.0], [2.0 / 3.0, 1.0 / 3.0])
        est = solve_oned(q, 2.0)
        assert est.boundary and est.mu == 0.0

    def test_nu_out_of_range(self):
        with pytest.raises(NuOutOfRange):
            solve_oned(sample1d([0.0, 1.0]), 1.0)

    def test_matches_lifted_solver(self):
        rng = np.random.default_rng(7)
        for _ in range(15):
            x = rng.standard_normal(int(rng.integers(3, 15))) * rng.uniform(0.5, 3.0)
            q = sample1d(x)
            nu = float(rng.uniform(1.2, 5.0))
            od = solve_oned(q, nu)
            ls = solve_locscatter(q, nu, ScatterConfig(nu=nu, tol_grad=1e-13))
            assert abs(od.mu - ls.mu[0]) <= 1e-7
            assert abs(od.sigma - np.sqrt(ls.Sigma.mat[0, 0])) <= 1e-7

    def test_equivariance(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal(8)
        q = sample1d(x)
        base = solve_oned(q, 2.0)
        for alpha, beta in ((2.0, 3.0), (-1.5, 0.25), (0.1, -7.0)):
            mapped = sample1d(alpha * x + beta)
            est = solve_oned(mapped, 2.0)
            assert abs(est.mu - (alpha * base.mu + beta)) <= 1e-6 * max(1.0, abs(alpha))
            assert abs(est.sigma - abs(alpha) * base.sigma) <= 1e-6 * max(1.0, abs(alpha))

    def test_unique_big_atom(self):
        # masses above nu/(nu+1) > 1/2 cannot coexist; the checker finds the one
        q = sample1d([3.0, 1.0, 2.0], [0.8, 0.1, 0.1])
        est = solve_oned(q, 2.0)
        assert est.boundary and est.mu == 3.0

    def test_profile_derivative_sign_at_big_atom(self):
        # with a big atom at 0 the profile slopes away from it on both sides
        q = sample1d([0.0, 1.0, -2.0], [0.8, 0.1, 0.1])
        nu = 2.0
        scale = 2.0
        for frac in (0.1, 0.5, 1.0):
            mu = frac * scale
            assert _profile_derivative(q, mu, nu) > 0.0
            assert _profile_derivative(q, -mu, nu) < 0.0


class TestTwoPointClosedForm:
    def test_balanced(self):
        est = two_point_closed_form(0.0, 1.0, 0.5, 2.0)
        assert est.mu == pytest.approx(0.5)
        assert est.sigma**2 == pytest.approx(0.25)

    def test_p06(self):
        est = two_point_closed_form(0.0, 1.0, 0.6, 2.0)
        assert est.mu == pytest.approx(0.8)
        assert est.sigma**2 == pytest.approx(0.16)

    def test_affine_rescaling(self):
        est = two_point_closed_form(-1.0, 1.0, 0.5, 2.0)
        assert est.mu == pytest.approx(0.0)
        assert est.sigma == pytest.approx(1.0)

    def test_boundaries(self):
        lo = two_point_closed_form(0.0, 1.0, 0.2, 3.0)
        assert lo.boundary and lo.mu == 0.0 and lo.sigma == 0.0
        hi = two_point_closed_form(0.0, 1.0, 0.8, 3.0)
        assert hi.boundary and hi.mu == 1.0 and hi.sigma == 0.0

    def test_equivalent_variance_forms(self):
        # ((nu+1) q mu_p - mu_p^2)/nu equals the symmetric-polynomial form
        rng = np.random.default_rng(13)
        for _ in range(50):
            nu = float(rng.uniform(1.2, 6.0))
            lo, hi = 1.0 / (nu + 1.0), nu / (nu + 1.0)
            p = float(rng.uniform(lo + 0.02, hi - 0.02))
            q = 1.0 - p
            mu_p = (nu * p - q) / (nu - 1.0)
            v1 = ((nu + 1.0) * q * mu_p - mu_p**2) / nu
            v2 = (nu**2 * p * q - nu * (p**2 + q**2) + p * q) / (nu - 1.0) ** 2
            assert abs(v1 - v2) <= 1e-12

    def test_matches_full_solver(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            nu = float(rng.uniform(1.3, 5.0))
            lo, hi = 1.0 / (nu + 1.0), nu / (nu + 1.0)
            p = float(rng.uniform(lo + 0.03, hi - 0.03))
            a = float(rng.uniform(-3.0, 0.0))
            b = a + float(rng.uniform(0.5, 4.0))
            cf = two_point_closed_form(a, b, p, nu)
            est = solve_oned(sample1d([a, b], [1 - p, p]), nu)
            assert abs(cf.mu - est.mu) <= 1e-7
            assert abs(cf.sigma - est.sigma) <= 1e-7


class TestBoundaryRate:
    def test_square_root_rate(self):
        nu = 2.0
        out = dict(boundary_rate_probe(nu, [1e-2, 1e-4]))
        ratio_coarse = out[1e-2] / np.sqrt(1e-2 / (nu - 1.0))
        ratio_fine = out[1e-4] / np.sqrt(1e-4 / (nu - 1.0))
        assert abs(ratio_fine - 1.0) <= 0.01
        assert abs(ratio_fine - 1.0) <= abs(ratio_coarse - 1.0)

    def test_continuity_into_boundary(self):
        nu = 2.0
        sigmas = [s for _, s in boundary_rate_probe(nu, [1e-2, 1e-3, 1e-4, 1e-5])]
        assert all(a > b for a, b in zip(sigmas, sigmas[1:]))
        assert sigmas[-1] <= 5e-3

    def test_one_sided_quotients_of_variance(self):
        # right quotient tends to 1/(nu-1); the left side is frozen at 0
        nu = 2.0
        eps = 1e-5
        sigma = dict(boundary_rate_probe(nu, [eps]))[eps]
        right = sigma**2 / eps
        assert abs(right - 1.0 / (nu - 1.0)) <= 0.02 / (nu - 1.0)
        p_past = nu / (nu + 1.0) + eps / (nu + 1.0)  # beyond the boundary
        est = two_point_closed_form(0.0, 1.0, p_past, nu)
        assert est.sigma == 0.0


class TestProfileObjective:
    def test_reference_point(self):
        rng = np.random.default_rng(19)
        q = sample1d(rng.standard_normal(10))
        assert profile_objective(q, 0.0, 1.0, 2.0) == pytest.approx(0.0, abs=1e-14)
