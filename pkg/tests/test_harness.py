"""Lipschitz quotients and the assembled certificate report."""

import numpy as np
import pytest

from inflap.barrier import BarrierParams
from inflap.grid import GridCoverageError, ScalarField
from inflap.harness import default_centers, lipschitz_quotient, theorem_report
from inflap.solver import cone_field, linear_problem, manufactured_solution
from inflap.solver import ProblemSpec


class TestLipschitzQuotient:
    def test_linear_axis_exact(self):
        u = ScalarField.from_function(lambda c: 2.5 * c[..., 0], 17, 2)
        q, pair = lipschitz_quotient(u, 0.5)
        assert q == pytest.approx(2.5, rel=1e-12)

    def test_cone_quotient_exact_on_axis_pairs(self):
        # vertex on the x1 axis outside the region: collinear axis pairs
        # realize the full slope exactly
        u = cone_field(3.0, (0.7, 0.0), 33, 2)
        q, pair = lipschitz_quotient(u, 0.5)
        assert q == pytest.approx(3.0, rel=1e-12)
        assert pair[0][1] == pair[1][1] == 0.0

    def test_manufactured_approaches_edge_slope(self, manufactured_2d_65):
        u, _ = manufactured_2d_65
        q, _ = lipschitz_quotient(u, 0.5)
        assert q == pytest.approx(2.5 ** (1.0 / 3.0), rel=0.05)
        assert q <= 2.5 ** (1.0 / 3.0) + 1e-12  # monotone profile: never above

    def test_invariances(self, rng):
        vals = rng.standard_normal((17, 17))
        u = ScalarField(n=2, m=17, values=vals)
        q0, _ = lipschitz_quotient(u, 0.5)
        q_shift, _ = lipschitz_quotient(ScalarField(n=2, m=17, values=vals + 5.0), 0.5)
        q_neg, _ = lipschitz_quotient(ScalarField(n=2, m=17, values=-vals), 0.5)
        assert q_neg == q0  # negation is exact in floats
        assert q_shift == pytest.approx(q0, rel=1e-12)  # shift is not

    def test_region_restriction_shrinks(self, manufactured_2d_33):
        u, _ = manufactured_2d_33
        q_big, _ = lipschitz_quotient(u, 0.5)
        q_small, _ = lipschitz_quotient(u, 0.25)
        assert q_small <= q_big

    def test_coverage_error(self):
        u = ScalarField.zeros(9, 2)
        with pytest.raises(GridCoverageError):
            lipschitz_quotient(u, 0.5, center=(0.8, 0.0))


class TestDefaultCenters:
    def test_2d_lattice_clipped_to_ball(self):
        cs = default_centers(2)
        assert len(cs) == 13  # 5x5 lattice clipped to the radius-1/2 ball
        assert all(np.linalg.norm(z) <= 0.5 + 1e-12 for z in cs)

    def test_1d_line(self):
        cs = default_centers(1)
        assert len(cs) == 5


class TestTheoremReport:
    def test_manufactured_passes(self, manufactured_2d_33, params):
        u, problem = manufactured_2d_33
        rep = theorem_report(u, problem, params)
        assert rep.passed and rep.certificate is None
        assert rep.case_report is None and rep.chain_trace is None
        assert len(rep.centers) == 13
        assert rep.bound_value == rep.ledger.L + rep.ledger.varrho
        assert rep.sup_quotient <= rep.bound_value
        assert rep.empirical_C == pytest.approx(
            rep.sup_quotient / (rep.ledger.L + rep.ledger.normU), rel=1e-12
        )
        assert all(rep.ledger.rules_satisfied().values())

    def test_per_phase_max_is_sup(self, manufactured_2d_33, params):
        u, problem = manufactured_2d_33
        rep = theorem_report(u, problem, params)
        assert rep.sup_quotient == pytest.approx(
            max(rep.per_phase.values()), rel=1e-12
        )
        assert rep.per_phase["cross"] >= 0.0

    def test_counterexample_produces_classified_witness(self, params):
        u, problem = linear_problem(50.0, 33, 2, Lambda=0.1)
        h = u.h
        centers = [np.array([k * h, 0.0]) for k in range(-4, 5)]
        rep = theorem_report(u, problem, params, centers=centers,
                             L_override=5.0, tau_w=1.0)
        assert not rep.passed
        assert rep.certificate is not None and rep.certificate.gap > 1.0
        tags = {c.case.tag for c in rep.centers if c.case is not None}
        assert "Case1" in tags and "Case2" in tags
        for c in rep.centers:
            if c.case is not None and c.case.tag in ("Case1", "Case2"):
                assert c.case.flux.lastone_holds
                assert c.case.flux.fbcond_violated

    def test_zero_field_passes_trivially(self, params):
        zeros = ScalarField.zeros(17, 2)
        problem = ProblemSpec(fplus=zeros.copy(), fminus=zeros.copy(),
                              dirichlet=zeros.copy(), Lambda=1.0)
        rep = theorem_report(zeros, problem, params)
        assert rep.passed and rep.sup_quotient == 0.0
        assert rep.ledger.varrho == 0.0

    def test_no_witness_gives_discrete_lipschitz_bound(self, params):
        # the comparison estimate at every surviving center caps all pair
        # quotients by L + varrho up to the witness allowance
        u, problem = manufactured_solution(1.0, 2, 17)
        centers = [u.point((i, j)) for i in (6, 8, 10) for j in (6, 8, 10)]
        rep = theorem_report(u, problem, params, centers=centers)
        assert rep.passed
        L, vr = rep.ledger.L, rep.ledger.varrho
        for z0 in centers:
            idx = u.ball_indices(z0, 0.5)
            pts = np.stack([u.point(tuple(i)) for i in idx])
            vals = np.array([u.values[tuple(i)] for i in idx])
            for a in range(0, len(pts), 7):
                for b in range(0, len(pts), 7):
                    d = float(np.linalg.norm(pts[a] - pts[b]))
                    if d == 0.0 or d >= 1.0:
                        continue
                    assert abs(vals[a] - vals[b]) <= (L + vr) * d + 2 * rep.tau_w

    def test_parallel_merge_matches_serial(self, manufactured_2d_33, params, monkeypatch):
        u, problem = manufactured_2d_33
        serial = theorem_report(u, problem, params)
        monkeypatch.setenv("INFLAP_WORKERS", "2")
        parallel = theorem_report(u, problem, params)
        assert serial.passed == parallel.passed
        assert serial.sup_quotient == parallel.sup_quotient
        assert [tuple(c.z0) for c in serial.centers] == [tuple(c.z0) for c in parallel.centers]
