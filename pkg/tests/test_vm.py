import numpy as np
import pytest

from prandtl_lab import (InsufficientMassError, MarchControls, ModelError,
                         PsiGrid, StepRejected, VMState, WallProfile,
                         auto_psi_max, continuation_margin, curvature_field,
                         from_von_mises, make_outer_flow, march_step,
                         march_until_separation, read_snapshot, to_von_mises,
                         write_snapshot)
from prandtl_lab.records import read_record_csv, write_record_csv

from conftest import make_tanh_profile


# ---------------------------------------------------------------------------
# Grid and stencils
# ---------------------------------------------------------------------------

class TestPsiGrid:
    def test_nodes(self):
        g = PsiGrid(psi_max=2.0, n=4, grading=1.0)
        assert np.allclose(g.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])
        g = PsiGrid(psi_max=1.0, n=10, grading=2.0)
        assert g.nodes[0] == 0.0
        assert g.nodes[-1] == 1.0
        assert np.all(np.diff(g.nodes) > 0)

    def test_invalid(self):
        with pytest.raises(ModelError):
            PsiGrid(psi_max=-1.0, n=10)
        with pytest.raises(ModelError):
            PsiGrid(psi_max=1.0, n=10, grading=0.5)

    def test_wall_stencil_exact_on_linear(self):
        g = PsiGrid(psi_max=3.0, n=64, grading=3.0)
        st = VMState(x=0.0, w=2.0 * g.nodes, grid=g)
        assert st.wall_gradient() == pytest.approx(2.0, abs=1e-12)

    def test_wall_stencil_exact_on_quadratic(self):
        # graded grid, N=256, psi_max=1: exact up to rounding
        g = PsiGrid(psi_max=1.0, n=256, grading=2.0)
        st = VMState(x=0.0, w=2.0 * g.nodes + g.nodes**2, grid=g)
        assert st.wall_gradient() == pytest.approx(2.0, abs=1e-6)

    def test_wall_stencil_order_on_sine(self):
        # Richardson refinement: error on sin(psi) shrinks ~ 4x per doubling
        errs = []
        for n in (64, 128, 256):
            g = PsiGrid(psi_max=1.0, n=n, grading=1.0)
            st = VMState(x=0.0, w=np.sin(g.nodes), grid=g)
            errs.append(abs(st.wall_gradient() - 1.0))
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) > 1.8

    def test_d2_exact_on_quadratic(self):
        g = PsiGrid(psi_max=2.0, n=128, grading=2.5)
        d2 = g.second_difference(3.0 * g.nodes**2 - g.nodes + 1.0)
        assert np.allclose(d2, 6.0, atol=1e-7)


# ---------------------------------------------------------------------------
# Transform
# ---------------------------------------------------------------------------

def linear_profile(y_max=2.0, n=201):
    y = np.linspace(0.0, y_max, n)
    return WallProfile(y=y, u=y.copy(), wall_slope=1.0, far_field=y_max,
                       taylor_a2=0.0, taylor_a3=0.0,
                       du=np.ones_like(y), d2u=np.zeros_like(y))


class TestToVonMises:
    def test_linear_closed_form(self):
        # u = y: psi = y^2/2 so w = 2 psi; at psi = 0.5, w = 1
        prof = linear_profile()
        grid = PsiGrid(psi_max=1.5, n=128, grading=2.0)
        st = to_von_mises(prof, grid)
        assert np.allclose(st.w, 2.0 * grid.nodes, atol=1e-10)
        assert np.interp(0.5, grid.nodes, st.w) == pytest.approx(1.0, abs=1e-9)

    def test_tanh_oracle(self):
        # quadrature + interpolation oracle: psi(1) = log cosh 1, w = tanh(1)^2
        prof = make_tanh_profile()
        grid = PsiGrid(psi_max=3.0, n=1024, grading=2.0)
        st = to_von_mises(prof, grid)
        psi_1 = np.log(np.cosh(1.0))
        assert psi_1 == pytest.approx(0.433781, abs=1e-6)
        w_at = np.interp(psi_1, grid.nodes, st.w)
        assert w_at == pytest.approx(np.tanh(1.0) ** 2, abs=1e-6)
        assert np.tanh(1.0) ** 2 == pytest.approx(0.580026, abs=1e-6)

    def test_insufficient_mass(self):
        prof = linear_profile()  # mass = 2
        grid = PsiGrid(psi_max=10.0, n=64)
        with pytest.raises(InsufficientMassError):
            to_von_mises(prof, grid)


class TestFromVonMises:
    def test_linear_closed_form(self):
        grid = PsiGrid(psi_max=1.0, n=512, grading=2.0)
        st = VMState(x=0.0, w=2.0 * grid.nodes, grid=grid)
        y, u = from_von_mises(st, 1024)
        # w = 2 psi: y(psi) = sqrt(2 psi); at psi=0.5, y=1, u=1
        assert y[-1] == pytest.approx(np.sqrt(2.0), rel=1e-6)
        assert np.interp(1.0, y, u) == pytest.approx(1.0, rel=1e-6)

    def test_degenerate_quadratic_rejected(self):
        grid = PsiGrid(psi_max=1.0, n=256, grading=1.0)
        st = VMState(x=0.0, w=grid.nodes**2, grid=grid)
        with pytest.raises(ModelError):
            from_von_mises(st, 128)

    def test_nonpositive_interior_rejected(self):
        grid = PsiGrid(psi_max=1.0, n=64, grading=1.0)
        w = grid.nodes.copy()
        w[10] = 0.0
        st = VMState(x=0.0, w=w, grid=grid)
        with pytest.raises(ModelError):
            from_von_mises(st, 128)

    def test_tanh_roundtrip(self):
        prof = make_tanh_profile()
        grid = PsiGrid(psi_max=3.0, n=2048, grading=2.0)
        st = to_von_mises(prof, grid)
        y, u = from_von_mises(st, 4096)
        u_at_1 = np.interp(1.0, y, u)
        assert u_at_1 == pytest.approx(np.tanh(1.0), abs=1e-4)


# ---------------------------------------------------------------------------
# march_step
# ---------------------------------------------------------------------------

class TestMarchStep:
    def test_exact_stationarity(self, neutral_flow):
        # linear w with pinned top is a discrete steady state of p'=0
        flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
        grid = PsiGrid(psi_max=1.0, n=128, grading=2.0)
        st = VMState(x=0.0, w=grid.nodes.copy(), grid=grid)
        st2 = march_step(st, flow, 0.01, mode="semi_implicit")
        assert np.max(np.abs(st2.w - grid.nodes)) < 1e-13

    def test_manufactured_one_step(self):
        # forced problem reproducing W = (1 - x/4)(psi + psi^2/2)
        flow = make_outer_flow(dpdx=1.0, x0=1e6)
        grid = PsiGrid(psi_max=1.0, n=256, grading=1.0)

        def W(x, p):
            return (1.0 - x / 4.0) * (p + 0.5 * p * p)

        def source(x, p):
            return (-(p + 0.5 * p * p) / 4.0
                    - np.sqrt(W(x, p)) * (1.0 - x / 4.0) + 2.0)

        st = VMState(x=0.0, w=W(0.0, grid.nodes), grid=grid)
        dx = 1e-3
        st2 = march_step(st, flow, dx, mode="picard", picard_kmax=40,
                         picard_tol=1e-14, source=source,
                         top_override=lambda x: W(x, grid.nodes[-1]))
        err = np.max(np.abs(st2.w - W(dx, grid.nodes)))
        assert err < 1e-10  # scheme is exact for this W (linear in x)

    def test_negative_step_rejected(self):
        # tiny near-wall w with a large decelerating step drives w < 0
        flow = make_outer_flow(dpdx=1.0, x0=100.0)
        grid = PsiGrid(psi_max=1.0, n=64, grading=1.0)
        st = VMState(x=0.0, w=1e-6 * grid.nodes, grid=grid)
        with pytest.raises(StepRejected):
            march_step(st, flow, 0.5, mode="semi_implicit")

    def test_bad_inputs(self, neutral_flow):
        grid = PsiGrid(psi_max=1.0, n=16)
        st = VMState(x=0.0, w=grid.nodes.copy(), grid=grid)
        with pytest.raises(ModelError):
            march_step(st, neutral_flow, -1e-3)
        with pytest.raises(ModelError):
            march_step(st, neutral_flow, 1e-3, mode="bogus")


# ---------------------------------------------------------------------------
# Derived fields
# ---------------------------------------------------------------------------

class TestDerivedFields:
    def test_curvature_linear_w(self):
        grid = PsiGrid(psi_max=1.0, n=128, grading=1.0)
        st = VMState(x=0.0, w=2.0 * grid.nodes, grid=grid, pgrad=0.7)
        curv = curvature_field(st)
        assert np.allclose(curv[1:-1], 0.0, atol=1e-9)
        assert curv[0] == pytest.approx(0.7)  # wall trace = p'(x)

    def test_curvature_quadratic_w(self):
        # w = psi^2: 0.5 sqrt(w) * 2 = psi; at psi = 0.5 the value is 0.5
        grid = PsiGrid(psi_max=1.0, n=256, grading=1.0)
        st = VMState(x=0.0, w=grid.nodes**2, grid=grid)
        curv = curvature_field(st)
        val = np.interp(0.5, grid.nodes[1:-1], curv[1:-1])
        assert val == pytest.approx(0.5, abs=1e-6)

    def test_margin_linear(self):
        grid = PsiGrid(psi_max=2.0, n=128, grading=1.0)
        st = VMState(x=0.0, w=2.0 * grid.nodes, grid=grid)
        assert continuation_margin(st, 1.0) == pytest.approx(2.0, abs=1e-10)

    def test_margin_concave(self):
        # w = 2 psi - psi^2 on [0,1]: inf of dw/dpsi over [0,1] is ~ 0 at psi=1
        grid = PsiGrid(psi_max=1.0, n=512, grading=1.0)
        st = VMState(x=0.0, w=2.0 * grid.nodes - grid.nodes**2, grid=grid)
        margin = continuation_margin(st, 1.0)
        assert -1e-9 <= margin < 0.02

    def test_margin_k0_bound(self):
        grid = PsiGrid(psi_max=1.0, n=64)
        st = VMState(x=0.0, w=grid.nodes.copy(), grid=grid)
        with pytest.raises(ModelError):
            continuation_margin(st, 2.0)


# ---------------------------------------------------------------------------
# auto psi_max
# ---------------------------------------------------------------------------

class TestAutoPsiMax:
    def test_headroom_added(self, adverse_flow, blend_profile):
        base = auto_psi_max(blend_profile, adverse_flow, 0.0)
        extended = auto_psi_max(blend_profile, adverse_flow, 3.0)
        U0 = adverse_flow.U(0.0)
        assert extended == pytest.approx(base + 4.0 * np.sqrt(U0 * 3.0), rel=1e-12)

    def test_clipped_to_available(self, adverse_flow, blend_profile):
        val = auto_psi_max(blend_profile, adverse_flow, 1e6)
        assert val == pytest.approx(blend_profile.total_mass())


# ---------------------------------------------------------------------------
# march_until_separation
# ---------------------------------------------------------------------------

class TestMarch:
    def test_controls_must_be_positive(self):
        with pytest.raises(ModelError):
            MarchControls(dx0=1e-3, dx_min=0.0, tau_stop_rel=0.0, x_end=1.0)

    def test_neutral_run_reaches_x_end(self, blasius_ref):
        from prandtl_lab import blasius_profile
        flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
        prof = blasius_profile(blasius_ref, x_a=1.0)
        grid = PsiGrid(psi_max=auto_psi_max(prof, flow, 0.5), n=256, grading=2.0)
        st = to_von_mises(prof, grid, pgrad=0.0)
        controls = MarchControls(dx0=5e-3, dx_min=1e-10, tau_stop_rel=1e-3,
                                 x_end=0.5)
        rec = march_until_separation(st, flow, controls)
        assert rec.termination == "reached_x_end"
        assert np.all(rec.tau > 0)
        assert np.all(np.diff(rec.x) > 0)

    def test_adverse_run_separates(self, adverse_flow):
        from prandtl_lab import make_profile
        prof = make_profile(0.1, adverse_flow, 3.0, n_points=4097)
        grid = PsiGrid(psi_max=auto_psi_max(prof, adverse_flow, 3.0),
                       n=384, grading=3.0)
        st = to_von_mises(prof, grid, pgrad=1.0)
        controls = MarchControls(dx0=4e-3, dx_min=1e-11, tau_stop_rel=5e-3,
                                 x_end=6.0)
        rec = march_until_separation(st, adverse_flow, controls)
        assert rec.separated
        assert rec.x_last() < adverse_flow.x0
        assert len(rec.snapshots) > 10
        # wall shear stays non-negative at every accepted station
        assert np.all(rec.tau >= 0)


# ---------------------------------------------------------------------------
# Snapshot and record I/O
# ---------------------------------------------------------------------------

class TestIO:
    def test_snapshot_roundtrip(self, tmp_path):
        grid = PsiGrid(psi_max=1.0, n=64, grading=2.0)
        st = VMState(x=0.25, w=2.0 * grid.nodes, grid=grid, pgrad=1.0)
        path = tmp_path / "snap.txt"
        write_snapshot(st, path)
        assert path.read_text().startswith("# prandtl-vm-snapshot v1 x=0.25\n")
        back = read_snapshot(path)
        assert back.x == 0.25
        assert back.pgrad == 1.0
        assert np.array_equal(back.grid.nodes, grid.nodes)
        assert np.array_equal(back.w, st.w)

    def test_record_roundtrip(self, tmp_path):
        rows = np.array([[0.0, 1.0, -0.5, 0.5, 2.0, 0.0],
                         [0.1, 0.9, -0.6, 0.4, 1.8, 0.01]])
        from prandtl_lab import RunRecord
        rec = RunRecord(rows, "separated", solver="vm", label="t",
                        scenario_hash="abc", meta={"psi1": 1e-8, "n": 64})
        path = tmp_path / "run.csv"
        write_record_csv(rec, path)
        back = read_record_csv(path)
        assert back.termination == "separated"
        assert back.scenario_hash == "abc"
        assert back.meta["psi1"] == 1e-8
        assert back.meta["n"] == 64
        assert np.array_equal(back.stations, rows)

    def test_record_write_deterministic(self, tmp_path):
        rows = np.array([[0.0, 1 / 3, -0.5, 0.5, 2.0, 0.0],
                         [0.1, 2 / 7, -0.6, 0.4, 1.8, 0.01]])
        from prandtl_lab import RunRecord
        rec = RunRecord(rows, "separated")
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_record_csv(rec, p1)
        write_record_csv(rec, p2)
        assert p1.read_bytes() == p2.read_bytes()
