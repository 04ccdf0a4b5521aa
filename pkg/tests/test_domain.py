import itertools

import numpy as np
import pytest

from tscatter import (
    EmpiricalSample,
    EnumerationBudgetError,
    check_locscat_domain,
    check_scatter_domain,
    lift,
    max_atom,
)
from tscatter.domain_check import check_locscat_domain_direct


def brute_force_scatter_member(sample, a0):
    """Independent oracle: enumerate every point-spanned subspace directly."""
    merged, _ = sample.merged()
    pts = merged.points
    w = merged.weights
    d = merged.d
    norms = np.linalg.norm(pts, axis=1)
    scale = max(norms.max(), 1.0)
    mass0 = w[norms <= 1e-9 * scale].sum()
    if mass0 >= 1.0 - d / a0 - 1e-12:
        return False
    for size in range(1, d):
        for subset in itertools.combinations(range(len(pts)), size):
            sub = pts[list(subset)]
            if np.linalg.matrix_rank(sub, tol=1e-9 * scale) < size:
                continue
            q, _ = np.linalg.qr(sub.T)
            resid = pts - (pts @ q) @ q.T
            mass = w[np.linalg.norm(resid, axis=1) <= 1e-9 * scale].sum()
            if mass >= 1.0 - (d - size) / a0 - 1e-12:
                return False
    return True


class TestEmpiricalSample:
    def test_uniform_weights_default(self):
        s = EmpiricalSample(np.array([[0.0], [1.0]]))
        assert np.allclose(s.weights, [0.5, 0.5])

    def test_one_dim_promotion(self):
        s = EmpiricalSample(np.array([1.0, 2.0, 3.0]))
        assert s.d == 1 and s.n == 3

    def test_rejects_bad_weights(self):
        pts = np.zeros((2, 1))
        with pytest.raises(ValueError):
            EmpiricalSample(pts, np.array([0.6, 0.6]))
        with pytest.raises(ValueError):
            EmpiricalSample(pts, np.array([-0.1, 1.1]))

    def test_rejects_nonfinite_points(self):
        with pytest.raises(ValueError):
            EmpiricalSample(np.array([[np.nan], [0.0]]))


class TestScatterDomain:
    def test_big_atom_on_line(self):
        # d=1, a0=3: atom of 0.7 at the origin meets the 2/3 threshold
        q = EmpiricalSample(np.array([[0.0], [1.0]]), np.array([0.7, 0.3]))
        rpt = check_scatter_domain(q, 3.0)
        assert not rpt.member
        assert rpt.worst_subspace_dim == 0
        assert rpt.worst_mass >= rpt.threshold
        assert np.isclose(rpt.threshold, 2.0 / 3.0)

    def test_generic_four_points(self):
        rng = np.random.default_rng(5)
        q = EmpiricalSample(rng.standard_normal((4, 2)))
        rpt = check_scatter_domain(q, 4.0)
        assert rpt.member
        assert brute_force_scatter_member(q, 4.0)

    def test_point_mass_at_origin(self):
        for d in (1, 2, 3):
            q = EmpiricalSample(np.zeros((1, d)))
            rpt = check_scatter_domain(q, d + 2.0)
            assert not rpt.member
            assert rpt.worst_subspace_dim == 0
            assert np.isclose(rpt.worst_mass, 1.0)

    def test_exact_boundary_mass_rejected(self):
        # strict inequality is required, so mass of exactly the threshold fails
        q = EmpiricalSample(np.array([[0.0], [1.0]]), np.array([2.0 / 3.0, 1.0 / 3.0]))
        assert not check_scatter_domain(q, 3.0).member

    def test_requires_a0_above_d(self):
        q = EmpiricalSample(np.zeros((1, 2)))
        with pytest.raises(ValueError):
            check_scatter_domain(q, 2.0)

    def test_matches_brute_force_on_random_laws(self):
        rng = np.random.default_rng(17)
        for _ in range(60):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(2, 9))
            pts = rng.integers(-1, 2, size=(n, d)).astype(float)  # collisions likely
            w = rng.dirichlet(np.ones(n))
            q = EmpiricalSample(pts, w)
            a0 = d + float(rng.uniform(0.2, 3.0))
            assert check_scatter_domain(q, a0).member == brute_force_scatter_member(q, a0)

    def test_monotone_in_a0(self):
        rng = np.random.default_rng(23)
        for _ in range(40):
            pts = rng.integers(-1, 2, size=(6, 2)).astype(float)
            q = EmpiricalSample(pts, rng.dirichlet(np.ones(6)))
            a0 = 2.0 + float(rng.uniform(0.1, 2.0))
            if check_scatter_domain(q, a0).member:
                assert check_scatter_domain(q, a0 + rng.uniform(0.1, 3.0)).member

    def test_linear_invariance(self):
        rng = np.random.default_rng(29)
        for _ in range(25):
            pts = rng.integers(-1, 2, size=(6, 2)).astype(float)
            q = EmpiricalSample(pts, rng.dirichlet(np.ones(6)))
            m = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
            mapped = EmpiricalSample(q.points @ m.T, q.weights)
            a0 = 2.0 + float(rng.uniform(0.2, 2.0))
            assert check_scatter_domain(q, a0).member == check_scatter_domain(mapped, a0).member

    def test_witnesses_span_violation(self):
        # 0.8 of the mass on the x-axis in d=2: q=1 subspace violation
        pts = np.array([[1.0, 0.0], [2.0, 0.0], [0.5, 1.0]])
        q = EmpiricalSample(pts, np.array([0.5, 0.3, 0.2]))
        rpt = check_scatter_domain(q, 4.0)
        assert not rpt.member
        assert rpt.worst_subspace_dim == 1
        assert np.isclose(rpt.worst_mass, 0.8)
        for idx in rpt.witness_points:
            assert pts[idx][1] == 0.0

    def test_budget_guard_and_randomized_fallback(self):
        rng = np.random.default_rng(31)
        pts = rng.standard_normal((40, 5))  # d=5 > 4 forces refusal
        q = EmpiricalSample(pts)
        with pytest.raises(EnumerationBudgetError):
            check_scatter_domain(q, 7.0)
        rpt = check_scatter_domain(q, 7.0, method="randomized", seed=3, projections=8)
        assert rpt.member
        assert not rpt.exact

    def test_randomized_certifies_violations(self):
        # mass 0.9 on a 2-dim subspace of R^5; threshold 1 - 3/7 < 0.9
        rng = np.random.default_rng(37)
        base = rng.standard_normal((30, 2))
        inplane = np.hstack([base, np.zeros((30, 3))])
        off = rng.standard_normal((4, 5))
        pts = np.vstack([inplane, off])
        w = np.concatenate([np.full(30, 0.9 / 30), np.full(4, 0.1 / 4)])
        q = EmpiricalSample(pts, w)
        rpt = check_scatter_domain(q, 7.0, method="randomized", seed=11)
        assert not rpt.member
        assert not rpt.exact
        assert rpt.worst_mass >= rpt.threshold - 1e-12


class TestLift:
    def test_single_point(self):
        s = EmpiricalSample(np.array([[0.0]]))
        lifted = lift(s)
        assert np.allclose(lifted.points, [[0.0, 1.0]])
        assert np.allclose(lifted.weights, [1.0])

    def test_two_points_land_on_unit_level(self):
        s = EmpiricalSample(np.array([[0.0], [1.0]]))
        lifted = lift(s)
        assert np.allclose(lifted.points[:, 1], 1.0)
        assert lifted.d == 2

    def test_affine_dependence_becomes_linear(self):
        rng = np.random.default_rng(43)
        for _ in range(30):
            d = int(rng.integers(1, 4))
            k = int(rng.integers(2, d + 2))
            pts = rng.standard_normal((k, d))
            lifted = lift(EmpiricalSample(pts)).points
            # affine rank = rank of differences; linear rank upstairs is that + 1
            aff_rank = np.linalg.matrix_rank(pts[1:] - pts[0], tol=1e-9) if k > 1 else 0
            assert np.linalg.matrix_rank(lifted, tol=1e-9) == aff_rank + 1


class TestMaxAtom:
    def test_two_point(self):
        s = EmpiricalSample(np.array([[0.0], [1.0]]), np.array([0.7, 0.3]))
        loc, mass = max_atom(s)
        assert loc[0] == 0.0 and np.isclose(mass, 0.7)

    def test_uniform_tie_takes_smallest(self):
        s = EmpiricalSample(np.arange(10.0).reshape(-1, 1)[::-1].copy())
        loc, mass = max_atom(s)
        assert loc[0] == 0.0 and np.isclose(mass, 0.1)

    def test_merges_duplicates(self):
        s = EmpiricalSample(
            np.array([[2.0], [2.0], [5.0]]), np.array([0.4, 0.35, 0.25])
        )
        loc, mass = max_atom(s)
        assert loc[0] == 2.0 and np.isclose(mass, 0.75)


class TestLocScatDomain:
    def test_mass_on_affine_line(self):
        # d=2, a0=4: 0.9 on a line beats the 0.75 affine threshold
        pts = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [0.0, 0.0]])
        w = np.array([0.3, 0.3, 0.3, 0.1])
        rpt = check_locscat_domain(EmpiricalSample(pts, w), 4.0)
        assert not rpt.member
        assert rpt.worst_subspace_dim == 1
        assert np.isclose(rpt.threshold, 0.75)

    def test_two_atoms_half_half(self):
        s = EmpiricalSample(np.array([[0.0], [1.0]]))
        rpt = check_locscat_domain(s, 3.0)
        assert rpt.member  # max atom 1/2 < 2/3

    def test_single_point_rejected(self):
        for d in (1, 2, 3):
            s = EmpiricalSample(np.full((1, d), 2.5))
            assert not check_locscat_domain(s, d + 1.5).member

    def test_requires_a0_above_d_plus_one(self):
        s = EmpiricalSample(np.zeros((1, 2)))
        with pytest.raises(ValueError):
            check_locscat_domain(s, 3.0)

    def test_lift_equivalence_random(self):
        # affine check agrees with the linear check of the lifted sample
        rng = np.random.default_rng(53)
        for _ in range(200):
            d = int(rng.integers(1, 3))
            n = int(rng.integers(2, 8))
            pts = rng.integers(-1, 2, size=(n, d)).astype(float)
            w = rng.dirichlet(np.ones(n))
            p = EmpiricalSample(pts, w)
            a0 = d + 1 + float(rng.uniform(0.1, 3.0))
            via_lift = check_locscat_domain(p, a0)
            direct = check_locscat_domain_direct(p, a0)
            linear = check_scatter_domain(lift(p), a0)
            assert via_lift.member == direct.member == linear.member

    def test_affine_invariance(self):
        rng = np.random.default_rng(59)
        for _ in range(25):
            pts = rng.integers(-1, 2, size=(6, 2)).astype(float)
            p = EmpiricalSample(pts, rng.dirichlet(np.ones(6)))
            m = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
            v = rng.standard_normal(2)
            mapped = EmpiricalSample(p.points @ m.T + v, p.weights)
            a0 = 3.0 + float(rng.uniform(0.2, 2.0))
            assert check_locscat_domain(p, a0).member == check_locscat_domain(mapped, a0).member
