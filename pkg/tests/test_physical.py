import numpy as np
import pytest

from prandtl_lab import (MarchControls, ModelError, PhysState,
                         blasius_profile, blasius_reference,
                         initial_phys_state, make_outer_flow,
                         march_step_physical, run_physical)

FPP0 = 0.332057336  # frozen from this package's shooting run


class TestBlasiusReference:
    def test_wall_value(self, blasius_ref):
        assert blasius_ref.fpp0 == pytest.approx(FPP0, abs=5e-6)

    def test_far_field_enforced(self, blasius_ref):
        assert abs(blasius_ref.fp[-1] - 1.0) <= 1e-8

    def test_short_domain_rejected(self):
        with pytest.raises(ModelError):
            blasius_reference(eta_max=2.0)

    def test_profile_tables(self, blasius_ref):
        prof = blasius_profile(blasius_ref, x_a=1.0)
        assert prof.wall_slope == pytest.approx(blasius_ref.fpp0, rel=1e-10)
        assert prof.far_field == 1.0
        assert prof.taylor_a2 == 0.0
        # f''' = -f f''/2 <= 0: the profile is concave
        assert np.max(prof.d2u) <= 1e-12


class TestMarchStepPhysical:
    def test_one_step_similarity(self, blasius_ref):
        # from x_a = 1, tau ~ (x + 1)^{-1/2}: one small step matches to 0.1%
        flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
        prof = blasius_profile(blasius_ref, x_a=1.0)
        state = initial_phys_state(prof, n_y=2048)
        dx = 1e-3
        new = march_step_physical(state, flow, dx)
        expected = blasius_ref.fpp0 / np.sqrt(1.0 + dx)
        assert new.wall_shear() == pytest.approx(expected, rel=1e-3)
        assert new.wall_shear() < state.wall_shear()

    def test_slip_initial_handled_by_wall_row(self):
        # u = U for all y (invalid wall data): the Dirichlet row still pins
        # u(0) = 0 and the step completes
        flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
        y = np.linspace(0.0, 8.0, 513)
        state = PhysState(x=0.0, y=y, u=np.ones_like(y), v=np.zeros_like(y))
        new = march_step_physical(state, flow, 1e-3)
        assert new.u[0] == 0.0
        assert np.all(np.isfinite(new.u))

    def test_nonpositive_dx_rejected(self, blasius_ref):
        flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
        prof = blasius_profile(blasius_ref, x_a=1.0)
        state = initial_phys_state(prof, n_y=256)
        with pytest.raises(ModelError):
            march_step_physical(state, flow, 0.0)


class TestRunPhysical:
    def test_blasius_similarity_law(self, blasius_ref):
        flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
        prof = blasius_profile(blasius_ref, x_a=1.0)
        controls = MarchControls(dx0=2e-3, dx_min=1e-10, tau_stop_rel=1e-3,
                                 x_end=1.0)
        rec = run_physical(prof, flow, controls)
        assert rec.termination == "reached_x_end"
        sim = rec.tau * np.sqrt(rec.x + 1.0) / blasius_ref.fpp0
        assert np.max(np.abs(sim - 1.0)) < 0.01
        assert np.all(rec.tau > 0)

    def test_favorable_no_separation(self, blasius_ref):
        # p' = -1: wall shear trends up, run reaches x_end
        flow = make_outer_flow(dpdx=-1.0, u_ref=1.0)
        prof = blasius_profile(blasius_ref, x_a=1.0)
        controls = MarchControls(dx0=2e-3, dx_min=1e-10, tau_stop_rel=1e-3,
                                 x_end=0.5)
        rec = run_physical(prof, flow, controls)
        assert rec.termination == "reached_x_end"
        assert rec.tau[-1] > rec.tau[0]

    def test_continuity_residual_refines(self, blasius_ref):
        # max |du/dx + dv/dy| at interior nodes shrinks under refinement
        flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
        prof = blasius_profile(blasius_ref, x_a=1.0)

        def residual(n_y, dx):
            state = initial_phys_state(prof, n_y=n_y)
            new = march_step_physical(state, flow, dx, picard_kmax=12,
                                      picard_tol=1e-13)
            h = state.y[1] - state.y[0]
            dudx = (new.u - state.u) / dx
            dvdy = np.gradient(new.v, h)
            return float(np.max(np.abs(dudx + dvdy)[1:-1]))

        r_coarse = residual(512, 4e-3)
        r_fine = residual(2048, 1e-3)
        assert r_fine < r_coarse
