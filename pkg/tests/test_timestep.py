import numpy as np
import pytest

from cutdg.flux import NumericalFlux, advection
from cutdg.mesh import BoundaryCut, NoCut, build_mesh
from cutdg.operator import BoundaryCondition, SpatialOperator
from cutdg.stabilization import StabilizationParams
from cutdg.timestep import (
    TimeScheme,
    advance,
    default_scheme_kind,
    step,
    tvd_timestep_bound,
)

PARAMS = StabilizationParams()


def upwind_op(mesh, degree):
    return SpatialOperator(
        mesh,
        degree,
        NumericalFlux("upwind", advection(1.0), beta=1.0),
        PARAMS,
        BoundaryCondition.periodic(),
    )


class TestBound:
    def test_theorem_value(self):
        assert tvd_timestep_bound(1e-2, 0.25) == pytest.approx(0.21)

    def test_large_gamma_limit(self):
        assert tvd_timestep_bound(0.3, 1e12) == pytest.approx(1.3, rel=1e-10)

    def test_uncut_case(self):
        assert tvd_timestep_bound(1.0, 0.25) == pytest.approx(1.2)


class TestSchemes:
    @pytest.mark.parametrize("kind", ["euler", "ssprk3", "rk4_5stage"])
    def test_constant_state_stays_constant(self, kind):
        mesh = build_mesh((0.0, 2.0), 8, BoundaryCut(1e-3))
        op = upwind_op(mesh, 1)
        u0 = np.zeros(16)
        u0.reshape(-1, 2)[:, 0] = 2.5
        u = advance(op, u0, TimeScheme(kind, 0.2, 0.5))
        assert np.abs(u - u0).max() < 1e-13

    def test_p0_euler_is_the_upwind_update(self):
        mesh = build_mesh((0.0, 2.0), 8, NoCut())
        op = upwind_op(mesh, 0)
        rng = np.random.default_rng(0)
        u = rng.standard_normal(8)
        lam = 0.4
        stepped = step(op, u, 0.0, lam * mesh.h, "euler")
        expected = u + lam * (np.roll(u, 1) - u)
        assert np.abs(stepped - expected).max() < 1e-13

    def test_ssprk3_equals_cubic_taylor_on_linear_system(self):
        mesh = build_mesh((0.0, 2.0), 6, NoCut())
        op = upwind_op(mesh, 1)
        mass = op.mass
        a = np.linalg.solve(mass, op.linear_matrix())
        rng = np.random.default_rng(1)
        u = rng.standard_normal(a.shape[0])
        dt = 0.3 * mesh.h
        z = dt * a
        taylor = np.eye(len(u)) + z + z @ z / 2.0 + z @ z @ z / 6.0
        stepped = step(op, u, 0.0, dt, "ssprk3")
        assert np.abs(stepped - taylor @ u).max() < 1e-13 * max(1, np.abs(u).max())

    def test_five_stage_scheme_is_fourth_order(self):
        # u' = A u with A skew-ish; global error should drop ~16x per halving
        rng = np.random.default_rng(2)
        a = rng.standard_normal((6, 6))
        a = a - a.T - 0.2 * np.eye(6)

        class Dummy:
            class mesh:
                h = 1.0

            degree = 0
            params = PARAMS

            class bc:
                is_periodic = True
                left = None
                right = None

            @staticmethod
            def rhs(u, t=0.0):
                return a @ u

        import scipy.linalg

        u0 = rng.standard_normal(6)
        t_final = 1.0
        exact = scipy.linalg.expm(a * t_final) @ u0
        errors = []
        for n_steps in (20, 40, 80):
            dt = t_final / n_steps
            u = u0.copy()
            for _ in range(n_steps):
                u = step(Dummy, u, 0.0, dt, "rk4_5stage")
            errors.append(np.linalg.norm(u - exact))
        rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert rates.min() > 3.7

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValueError):
            TimeScheme("rk9", 0.1, 1.0)
        with pytest.raises(ValueError):
            TimeScheme("euler", -0.1, 1.0)


class TestAdvance:
    def test_final_time_hit_exactly(self):
        mesh = build_mesh((0.0, 2.0), 8, NoCut())
        op = upwind_op(mesh, 0)
        times = []
        advance(
            op,
            np.zeros(8),
            TimeScheme("euler", 0.3, 0.4),
            observer=lambda k, t, u: times.append(t),
        )
        assert times[-1] == pytest.approx(0.4, abs=1e-14)
        # the nominal step 0.3*h=0.075 does not divide 0.4: last step shortened
        assert len(times) == 1 + int(np.ceil(0.4 / (0.3 * mesh.h)))

    def test_nan_aborts_with_step_index(self):
        mesh = build_mesh((0.0, 2.0), 8, NoCut())
        op = upwind_op(mesh, 0)
        # a wildly unstable Courant number overflows after enough steps
        with pytest.raises(FloatingPointError, match=r"step \d+"), np.errstate(
            over="ignore", invalid="ignore"
        ):
            advance(op, np.sin(np.arange(8.0)), TimeScheme("euler", 400.0, 4e4))

    def test_ssp_property_extends_p0_tvd_to_rk3(self):
        from cutdg.analysis import total_variation_means

        alpha = 1e-3
        mesh = build_mesh((0.0, 2.0), 8, BoundaryCut(alpha))
        op = upwind_op(mesh, 0)
        lam = tvd_timestep_bound(alpha, PARAMS.gamma_mass)
        rng = np.random.default_rng(3)
        for _ in range(5):
            u = rng.uniform(-1, 1, 8)
            tvs = []
            advance(
                op,
                u,
                TimeScheme("ssprk3", lam, 100 * lam * mesh.h),
                observer=lambda k, t, s: tvs.append(
                    total_variation_means(s, mesh, 0, True)
                ),
            )
            assert max(np.diff(tvs)) <= 1e-12

    def test_default_scheme_selection(self):
        assert default_scheme_kind(0) == "ssprk3"
        assert default_scheme_kind(2) == "ssprk3"
        assert default_scheme_kind(3) == "rk4_5stage"
