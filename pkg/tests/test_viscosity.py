"""Phase extraction, discrete jets, and the directional flux conditions."""

import numpy as np
import pytest

from inflap.grid import GridCoverageError, ScalarField
from inflap.solver import cone_field, manufactured_solution
from inflap.viscosity import (
    PhaseMismatchError,
    check_fb_condition,
    check_interior,
    extract_phases,
    fit_jet,
    normal_derivative,
)


def random_smooth_field(rng, m=17, n=2, amplitude=1.0):
    """Low-order random polynomial field (smooth by construction)."""
    c = rng.standard_normal(10) * amplitude
    if n == 1:
        fn = lambda x: c[0] + c[1] * x[..., 0] + c[2] * x[..., 0] ** 2 + c[3] * x[..., 0] ** 3
    else:
        def fn(x):
            a, b = x[..., 0], x[..., 1]
            return (c[0] + c[1] * a + c[2] * b + c[3] * a * a + c[4] * a * b
                    + c[5] * b * b + c[6] * a**3 + c[7] * b**3 + c[8] * a * a * b)
    return ScalarField.from_function(fn, m, n)


class TestExtractPhases:
    def test_all_positive(self):
        u = ScalarField(n=2, m=9, values=np.ones((9, 9)))
        ph = extract_phases(u, tol_zero=1e-12)
        assert np.array_equal(ph.pos, u.interior_mask())
        assert not np.any(ph.neg) and not np.any(ph.fb)

    def test_manufactured_single_column_fb(self, manufactured_2d_33):
        u, _ = manufactured_2d_33
        ph = extract_phases(u)
        fb_idx = np.argwhere(ph.fb)
        mid = (u.m - 1) // 2
        assert np.all(fb_idx[:, 0] == mid)  # exactly the x1 = 0 column
        assert len(fb_idx) == int(np.sum(u.interior_mask()[mid, :]))

    def test_isolated_zero_is_boundary(self):
        vals = np.ones((9, 9))
        vals[4, 4] = 0.0
        ph = extract_phases(ScalarField(n=2, m=9, values=vals), tol_zero=1e-12)
        assert ph.fb[4, 4] and not ph.pos[4, 4]

    def test_positive_touching_point_not_boundary(self):
        # a strict local min with small positive value stays in the phase
        vals = np.ones((9, 9))
        vals[4, 4] = 0.2
        ph = extract_phases(ScalarField(n=2, m=9, values=vals), tol_zero=1e-3)
        assert ph.pos[4, 4] and not ph.fb[4, 4]

    def test_deep_zero_cells_belong_nowhere(self):
        vals = np.zeros((9, 9))
        vals[6:, :] = 1.0  # zero slab against a positive slab
        ph = extract_phases(ScalarField(n=2, m=9, values=vals), tol_zero=1e-12)
        assert ph.fb[5, 4]  # zero cell adjacent to the phase
        assert ph.phase_of((3, 4)) == "none"  # interior of the zero set
        assert not ph.fb[2, 4]

    def test_sign_jump_without_zero_cell(self):
        vals = np.where(np.arange(9)[:, None] >= 5, 1.0, -1.0) * np.ones((9, 9))
        ph = extract_phases(ScalarField(n=2, m=9, values=vals), tol_zero=1e-6)
        assert np.all(ph.fb[4, 1:8]) and np.all(ph.fb[5, 1:8])

    def test_partition_random_sign_patterns(self, rng):
        for _ in range(50):
            vals = rng.choice([-1.0, 0.0, 1.0], size=(9, 9)) * rng.uniform(0.5, 2.0, (9, 9))
            u = ScalarField(n=2, m=9, values=vals)
            ph = extract_phases(u, tol_zero=1e-9)
            assert not np.any(ph.pos & ph.neg)
            assert not np.any(ph.pos & ph.fb)
            assert not np.any(ph.neg & ph.fb)
            interior = u.interior_mask()
            near_zero = np.abs(vals) <= 1e-9
            covered = ph.pos | ph.neg | ph.fb | near_zero
            assert np.all(covered[interior])


class TestFitJet:
    def test_exact_recovery_on_quadratic(self, rng):
        A = rng.standard_normal((2, 2))
        Q = A + A.T
        p = rng.standard_normal(2)

        def fn(c):
            x = np.stack([c[..., 0], c[..., 1]], axis=-1)
            return 0.5 * np.einsum("...i,ij,...j->...", x, Q, x) + x @ p + 0.7

        u = ScalarField.from_function(fn, 17, 2)
        for side in ("super", "sub"):
            jet = fit_jet(u, (8, 8), side)
            assert jet is not None
            assert jet.touch_defect <= 1e-9
            assert np.allclose(jet.xi, p, atol=1e-9)
            assert np.allclose(jet.M, Q, atol=1e-9)

    def test_touching_holds_as_stored(self, rng):
        u = random_smooth_field(rng, m=17)
        jet = fit_jet(u, (8, 8), "super")
        half = int(round(jet.touch_radius / u.h))
        for di in range(-half, half + 1):
            for dj in range(-half, half + 1):
                if di == dj == 0:
                    continue
                dx = np.array([di * u.h, dj * u.h])
                quad = (u.values[8, 8] + jet.xi @ dx + 0.5 * dx @ jet.M @ dx
                        + jet.touch_defect * dx @ dx)
                assert u.values[8 + di, 8 + dj] <= quad + 1e-12

    def test_cone_vertex_jet_structure(self):
        # classical structure of |x|: no superjet (needs ~1/h curvature,
        # beyond the cap), subjets exist (zero touches from below)
        u = cone_field(1.0, (0.0, 0.0), 17, 2)
        assert fit_jet(u, (8, 8), "super") is None
        sub = fit_jet(u, (8, 8), "sub")
        assert sub is not None
        assert np.linalg.norm(sub.xi) <= 0.1
        uncapped = fit_jet(u, (8, 8), "super", defect_cap=1e9)
        assert uncapped.touch_defect > 0.5 / u.h  # the kink's price

    def test_duality_sub_of_negated_is_negated_super(self, rng):
        for _ in range(50):
            u = random_smooth_field(rng, m=13)
            neg = ScalarField(n=2, m=13, values=-u.values)
            sup = fit_jet(u, (6, 6), "super", defect_cap=np.inf)
            sub = fit_jet(neg, (6, 6), "sub", defect_cap=np.inf)
            assert sup is not None and sub is not None
            assert np.max(np.abs(sub.xi + sup.xi)) <= 1e-10
            assert np.max(np.abs(sub.M + sup.M)) <= 1e-10
            assert abs(sub.touch_defect - sup.touch_defect) <= 1e-12

    def test_bump_moves_gradient_linearly(self, manufactured_2d_33):
        u, _ = manufactured_2d_33
        idx = u.index_of((0.5, 0.0))
        base = fit_jet(u, idx, "super")
        shifts = []
        for eps in (1e-3, 2e-3):
            coords = u.coords()
            bump = eps * np.exp(
                -((coords[..., 0] - 0.45) ** 2 + (coords[..., 1] - 0.05) ** 2) / 0.05
            )
            v = ScalarField(n=2, m=u.m, values=u.values + bump)
            jet = fit_jet(v, idx, "super")
            shifts.append(float(np.linalg.norm(jet.xi - base.xi)))
        assert 0.0 < shifts[0] < 0.1e-1
        assert shifts[1] == pytest.approx(2.0 * shifts[0], rel=0.2)

    def test_window_must_fit(self):
        u = ScalarField.zeros(9, 2)
        with pytest.raises(GridCoverageError):
            fit_jet(u, (1, 4), "super")

    def test_bad_side_rejected(self):
        u = ScalarField.zeros(9, 2)
        with pytest.raises(ValueError):
            fit_jet(u, (4, 4), "above")


class TestCheckInterior:
    def test_manufactured_both_sides_hold(self, manufactured_2d_33):
        u, problem = manufactured_2d_33
        phases = extract_phases(u)
        idx = u.index_of((0.5, 0.0))
        for side in ("super", "sub"):
            jet = fit_jet(u, idx, side)
            res = check_interior(u, phases, problem, jet, tol=20.0 * u.h)
            assert res.ok and res.phase == "pos"

    def test_scaled_hessian_reports_signed_slack(self, manufactured_2d_33):
        u, problem = manufactured_2d_33
        phases = extract_phases(u)
        idx = u.index_of((0.5, 0.0))
        jet = fit_jet(u, idx, "super")
        jet.M = 2.0 * jet.M
        res = check_interior(u, phases, problem, jet, tol=1e-9)
        expected = -float(jet.xi @ jet.M @ jet.xi) - (-1.0)
        assert res.slack == pytest.approx(expected, rel=1e-12)

    def test_zero_xi_degenerate_form(self):
        u = ScalarField(n=2, m=9, values=np.full((9, 9), 2.0))
        zeros = ScalarField.zeros(9, 2)
        from inflap.solver import ProblemSpec

        problem = ProblemSpec(fplus=zeros.copy(), fminus=zeros.copy(),
                              dirichlet=zeros.copy(), Lambda=1.0)
        phases = extract_phases(u, tol_zero=1e-9)
        jet = fit_jet(u, (4, 4), "super")
        assert np.allclose(jet.xi, 0.0, atol=1e-12)
        res = check_interior(u, phases, problem, jet, tol=1e-9)
        assert res.ok and res.slack == pytest.approx(0.0, abs=1e-12)

    def test_fb_point_rejected(self, manufactured_2d_33):
        u, problem = manufactured_2d_33
        phases = extract_phases(u)
        mid = (u.m - 1) // 2
        jet = fit_jet(u, (mid, mid), "super")
        with pytest.raises(PhaseMismatchError):
            check_interior(u, phases, problem, jet, tol=1.0)


class TestFBCondition:
    def test_manufactured_flux_window(self, manufactured_2d_65):
        u, problem = manufactured_2d_65
        mid = (u.m - 1) // 2
        t_list = [u.h * k for k in (1, 2, 3, 4)]
        sup_jet = fit_jet(u, (mid, mid), "super")
        sub_jet = fit_jet(u, (mid, mid), "sub")
        r_sub = check_fb_condition(u, (mid, mid), sup_jet, 1.1, t_list)
        r_sup = check_fb_condition(u, (mid, mid), sub_jet, 1.1, t_list)
        assert r_sub.condition == "subsolution" and r_sub.passed
        assert r_sub.slope == pytest.approx(-1.0, abs=0.05)
        assert r_sup.condition == "supersolution" and r_sup.passed
        assert r_sup.slope == pytest.approx(1.0, abs=0.05)
        assert not check_fb_condition(u, (mid, mid), sup_jet, 0.5, t_list).passed
        assert not check_fb_condition(u, (mid, mid), sub_jet, 0.5, t_list).passed

    def test_flat_field_passes_any_lambda(self):
        u = ScalarField.zeros(17, 2)
        jet = fit_jet(u, (8, 8), "super")
        jet.xi = np.array([1.0, 0.0])
        r = check_fb_condition(u, (8, 8), jet, 1e-6, [u.h, 2 * u.h], tol_slope=1e-9)
        assert r.slope == 0.0 and r.passed

    def test_direction_scale_invariance(self, manufactured_2d_65):
        u, _ = manufactured_2d_65
        mid = (u.m - 1) // 2
        t_list = [u.h * k for k in (1, 2, 3, 4)]
        jet = fit_jet(u, (mid, mid), "super")
        r1 = check_fb_condition(u, (mid, mid), jet, 0.9, t_list)
        jet.xi = 3.0 * jet.xi
        r2 = check_fb_condition(u, (mid, mid), jet, 0.9, t_list)
        assert r1.passed == r2.passed and r1.slope == pytest.approx(r2.slope, rel=1e-12)

    def test_zero_xi_rejected(self):
        u = ScalarField.zeros(17, 2)
        jet = fit_jet(u, (8, 8), "super")
        with pytest.raises(ValueError):
            check_fb_condition(u, (8, 8), jet, 1.0, [u.h, 2 * u.h])

    def test_ray_leaving_grid_rejected(self, manufactured_2d_33):
        u, _ = manufactured_2d_33
        mid = (u.m - 1) // 2
        jet = fit_jet(u, (mid, mid), "super")
        with pytest.raises(GridCoverageError):
            check_fb_condition(u, (mid, mid), jet, 1.0, [0.5, 1.5])


class TestNormalDerivative:
    def test_linear_field_exact(self):
        p = np.array([0.6, 0.8])
        u = ScalarField.from_function(lambda c: c[..., 0] * p[0] + c[..., 1] * p[1], 17, 2)
        t_list = [u.h, 2 * u.h, 3 * u.h]
        nu = p / np.linalg.norm(p)
        mid = (8, 8)
        for side in ("plus", "minus"):
            val = normal_derivative(u, mid, nu, side, t_list)
            assert val == pytest.approx(1.0, abs=1e-10)

    def test_manufactured_c8_both_sides(self):
        u, _ = manufactured_solution(8.0, 2, 65)
        mid = (u.m - 1) // 2
        t_list = [u.h * k for k in (1, 2, 3, 4)]
        for side in ("plus", "minus"):
            val = normal_derivative(u, (mid, mid), (1.0, 0.0), side, t_list)
            assert val == pytest.approx(2.0, abs=0.1)

    def test_remark_consistency_with_fb_check(self, manufactured_2d_65):
        # if both one-sided flux checks pass, the normal derivative obeys
        # the same cap Lambda (up to the shared slope tolerance)
        u, problem = manufactured_2d_65
        mid = (u.m - 1) // 2
        t_list = [u.h * k for k in (1, 2, 3, 4)]
        sup_jet = fit_jet(u, (mid, mid), "super")
        sub_jet = fit_jet(u, (mid, mid), "sub")
        Lambda = 1.1
        r1 = check_fb_condition(u, (mid, mid), sup_jet, Lambda, t_list)
        r2 = check_fb_condition(u, (mid, mid), sub_jet, Lambda, t_list)
        assert r1.passed and r2.passed
        for side in ("plus", "minus"):
            nd = normal_derivative(u, (mid, mid), sup_jet.xi, side, t_list)
            assert nd <= Lambda + r1.tol_slope
