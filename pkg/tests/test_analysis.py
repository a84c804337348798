import numpy as np
import pytest

from cutdg import analysis
from cutdg.mesh import BoundaryCut, InteriorCuts, NoCut, build_mesh
from cutdg.projection import l2_project
from cutdg.stabilization import StabilizationParams

PARAMS = StabilizationParams()


class TestErrorNorms:
    def test_exact_match_gives_zero(self):
        mesh = build_mesh((0.0, 2.0), 8, BoundaryCut(0.2))
        u = l2_project(lambda x: 0.5 * x, mesh, 1)
        l2, linf = analysis.error_norms(u, mesh, 1, lambda x: 0.5 * x)
        assert l2 < 1e-13 and linf < 1e-13

    def test_unit_mismatch_on_domain_of_length_two(self):
        mesh = build_mesh((0.0, 2.0), 8, NoCut())
        u = np.zeros(8)
        l2, linf = analysis.error_norms(u, mesh, 0, lambda x: np.ones_like(x))
        assert l2 == pytest.approx(np.sqrt(2.0), rel=1e-12)
        assert linf == pytest.approx(1.0, rel=1e-12)

    def test_refinement_drops_error_fourth_order_for_p1(self):
        errs = []
        for n in (40, 80):
            mesh = build_mesh((0.0, 2.0), n, NoCut())
            u = l2_project(lambda x: np.sin(np.pi * x), mesh, 1)
            errs.append(analysis.error_norms(u, mesh, 1, lambda x: np.sin(np.pi * x))[0])
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


class TestTotalVariation:
    def test_constant_is_zero(self):
        mesh = build_mesh((0.0, 2.0), 8, NoCut())
        u = np.full(8, 2.0)
        assert analysis.total_variation_means(u, mesh, 0) == 0.0

    def test_square_pulse_is_two(self):
        mesh = build_mesh((0.0, 2.0), 8, NoCut())
        u = np.zeros(8)
        u[3:5] = 1.0
        assert analysis.total_variation_means(u, mesh, 0) == pytest.approx(2.0)

    def test_matches_direct_loop_on_random_data(self):
        mesh = build_mesh((0.0, 2.0), 9, InteriorCuts(((4, 0.2),)))
        rng = np.random.default_rng(0)
        u = rng.standard_normal(mesh.n_cells)
        tv = analysis.total_variation_means(u, mesh, 0)
        ref = sum(abs(u[i + 1] - u[i]) for i in range(len(u) - 1))
        ref += abs(u[0] - u[-1])
        assert tv == pytest.approx(ref, rel=1e-14)

    def test_monotone_profile_tv_is_endpoint_difference(self):
        mesh = build_mesh((0.0, 2.0), 10, NoCut())
        u = np.linspace(0.0, 1.0, 10)
        assert analysis.total_variation_means(
            u, mesh, 0, periodic=False
        ) == pytest.approx(1.0)


class TestSpectrumReport:
    def test_uniform_reference_row_p1(self):
        mesh = build_mesh((0.0, 2.0), 7, NoCut())
        rep = analysis.spectrum_report(mesh, 1, 1.0, PARAMS, 0.3)
        assert rep.kappa == pytest.approx(3.00, rel=1e-3)
        assert rep.max_abs == pytest.approx(21.0, rel=5e-3)
        assert abs(rep.max_real) <= 1e-9 * rep.max_abs

    def test_stabilized_cut_row_p1(self):
        mesh = build_mesh((0.0, 2.0), 8, BoundaryCut(1e-2))
        rep = analysis.spectrum_report(mesh, 1, 1.0, PARAMS, 0.3)
        assert rep.kappa == pytest.approx(47.9, rel=5e-2)
        assert rep.max_abs == pytest.approx(22.2, rel=5e-2)
        assert abs(rep.max_real) <= 1e-10

    def test_uncut_equals_nocut_reduction(self):
        a = analysis.spectrum_report(
            build_mesh((0.0, 2.0), 7, BoundaryCut(1.0)), 2, 1.0, PARAMS, 0.2
        )
        b = analysis.spectrum_report(
            build_mesh((0.0, 2.0), 7, NoCut()), 2, 1.0, PARAMS, 0.2
        )
        assert a.kappa == b.kappa
        assert a.eigenvalues == b.eigenvalues

    def test_deterministic(self):
        mesh = build_mesh((0.0, 2.0), 8, BoundaryCut(1e-4))
        a = analysis.spectrum_report(mesh, 2, 1.0, PARAMS, 0.2)
        b = analysis.spectrum_report(mesh, 2, 1.0, PARAMS, 0.2)
        assert a.eigenvalues == b.eigenvalues
        assert a.kappa == b.kappa

    def test_rk4_region_flags(self):
        assert np.abs(analysis.rk4_amplification(0.0)) == 1.0
        assert np.abs(analysis.rk4_amplification(-1.0 + 1.0j)) < 1.0
        assert np.abs(analysis.rk4_amplification(0.5)) > 1.0


class TestBurgersExact:
    def test_initial_time(self):
        x = np.linspace(0, 2, 17)
        assert np.allclose(analysis.burgers_preshock_exact(x, 0.0), np.sin(np.pi * x))

    def test_origin_fixed_point(self):
        assert analysis.burgers_preshock_exact(np.array([0.0]), 0.2)[0] == pytest.approx(
            0.0, abs=1e-14
        )

    def test_against_bisection_oracle(self):
        x, t = 0.5, 0.2
        lo, hi = -1.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid - np.sin(np.pi * (x - mid * t)) > 0:
                hi = mid
            else:
                lo = mid
        ref = 0.5 * (lo + hi)
        val = analysis.burgers_preshock_exact(np.array([x]), t)[0]
        assert val == pytest.approx(ref, abs=1e-12)

    def test_rejects_post_shock_times(self):
        with pytest.raises(ValueError):
            analysis.burgers_preshock_exact(np.array([0.5]), 0.5)


class TestRiemannExact:
    def test_shock_speed_quarter(self):
        x = np.array([0.0999, 0.1001])
        u = analysis.riemann_shock_exact(x, 0.4)
        assert u[0] == 1.0 and u[1] == -0.5

    def test_rarefaction_fan(self):
        x = np.array([-0.8, -0.2, 0.0, 0.2, 0.8])
        u = analysis.riemann_rarefaction_exact(x, 0.5)
        assert np.allclose(u, [-1.0, -0.4, 0.0, 0.4, 1.0])


class TestConvergenceRates:
    def test_exact_second_order(self):
        rates, avg = analysis.convergence_rates([1.0, 0.25], [1.0, 0.5])
        assert rates == [pytest.approx(2.0)]
        assert avg == pytest.approx(2.0)

    def test_exact_cubic_sequence(self):
        hs = [0.1 / 2**k for k in range(4)]
        errs = [7.3 * h**3 for h in hs]
        rates, avg = analysis.convergence_rates(errs, hs)
        assert np.allclose(rates, 3.0)
        assert avg == pytest.approx(3.0)

    def test_zero_error_reports_infinity(self):
        rates, avg = analysis.convergence_rates([1.0, 0.0], [1.0, 0.5])
        assert rates[0] == float("inf")
        assert avg == float("inf")

    def test_input_validation(self):
        with pytest.raises(ValueError):
            analysis.convergence_rates([1.0], [1.0])
