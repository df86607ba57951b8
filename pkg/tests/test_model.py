import numpy as np
import pytest

from prandtl_lab import (InsufficientMassError, ModelError, WallProfile,
                         check_separation_condition, load_profile,
                         make_bounded_curvature_profile, make_outer_flow,
                         make_profile, save_profile, validate_profile)

from conftest import make_tanh_profile


# ---------------------------------------------------------------------------
# Outer flow
# ---------------------------------------------------------------------------

class TestOuterFlow:
    def test_constant_adverse_u0(self):
        flow = make_outer_flow(dpdx=1.0, x0=1.0)
        assert flow.U(0.0) == pytest.approx(np.sqrt(2.0), abs=1e-12)
        assert flow.U(1.0) == pytest.approx(0.0, abs=1e-12)

    def test_neutral_constant(self):
        flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
        xs = np.linspace(0.0, 10.0, 11)
        assert np.allclose(flow.U(xs), 1.0)
        assert flow.x0 is None

    def test_polynomial_closed_form(self):
        # p = x + x^2/2 with x0 = 1: U(0)^2 = 2 * 1.5
        flow = make_outer_flow(p_coeffs=(0.0, 1.0, 0.5), x0=1.0)
        assert flow.U_squared(0.0) == pytest.approx(3.0, rel=1e-14)

    def test_bernoulli_vs_quadrature(self):
        flow = make_outer_flow(p_coeffs=(0.0, 1.0, 0.1), x0=8.0)
        xs = np.linspace(0.0, 8.0, 1000)
        fine = np.linspace(0.0, 8.0, 200001)
        pg = flow.pressure_gradient(fine)
        cumulative = np.concatenate(
            [[0.0], np.cumsum(0.5 * (pg[1:] + pg[:-1]) * np.diff(fine))])
        p_of = lambda x: np.interp(x, fine, cumulative)
        u2_quad = 2.0 * (p_of(8.0) - p_of(xs))
        err = np.max(np.abs(flow.U_squared(xs) - u2_quad))
        assert err < 1e-10 * flow.U_squared(0.0)

    def test_adverse_bracket_bound(self):
        # c <= p' <= C on [0, x0] forces 2c(x0-x) <= U^2 <= 2C(x0-x)
        flow = make_outer_flow(p_coeffs=(0.0, 1.0, 0.1), x0=8.0)
        xs = np.linspace(0.0, 8.0, 500)
        c, C = 1.0, 1.0 + 0.2 * 8.0
        u2 = flow.U_squared(xs)
        assert np.all(u2 >= 2 * c * (8.0 - xs) - 1e-12)
        assert np.all(u2 <= 2 * C * (8.0 - xs) + 1e-12)

    def test_rejects_bad_x0(self):
        with pytest.raises(ModelError):
            make_outer_flow(dpdx=1.0, x0=-1.0)

    def test_rejects_favorable_in_adverse_mode(self):
        with pytest.raises(ModelError):
            make_outer_flow(dpdx=-1.0, x0=1.0)
        with pytest.raises(ModelError):
            make_outer_flow(p_coeffs=(0.0, 1.0, -0.2), x0=4.0)  # p' < 0 before x0

    def test_neutral_needs_u_ref(self):
        with pytest.raises(ModelError):
            make_outer_flow(dpdx=0.0)


# ---------------------------------------------------------------------------
# Profile validation
# ---------------------------------------------------------------------------

class TestValidateProfile:
    def test_tanh_neutral_all_pass(self, neutral_flow):
        report = validate_profile(make_tanh_profile(), neutral_flow)
        assert report.passed, report.first_failure_detail()

    def test_tanh_adverse_compat_fails(self):
        flow = make_outer_flow(dpdx=1.0, x0=0.5)  # U(0)=1 matches tanh far field
        report = validate_profile(make_tanh_profile(), flow)
        assert not report["compat_curvature"].passed
        assert report["monotonicity"].passed

    def test_non_monotone_fails(self, neutral_flow):
        y = np.linspace(0.0, 12.0, 4001)
        prof = WallProfile.from_samples(y, y * np.exp(-y))
        report = validate_profile(prof, neutral_flow)
        assert not report["monotonicity"].passed
        # u' crosses zero at y = 1
        assert "y=" in report["monotonicity"].detail

    def test_report_never_raises(self, neutral_flow):
        y = np.linspace(0.0, 5.0, 512)
        prof = WallProfile.from_samples(y, np.zeros_like(y) + 1e-3 * y)
        report = validate_profile(prof, neutral_flow)   # far field way off
        assert not report.passed
        assert any(not c.passed for c in report.checks)


# ---------------------------------------------------------------------------
# make_profile
# ---------------------------------------------------------------------------

class TestMakeProfile:
    def test_spec_example_blend5(self):
        flow = make_outer_flow(dpdx=1.0, x0=16.0)
        prof = make_profile(0.1, flow, 5.0)
        assert prof.wall_slope == pytest.approx(0.1)
        assert prof.taylor_a2 == pytest.approx(1.0)
        assert prof.far_field == pytest.approx(np.sqrt(32.0))
        # the raw blend overshoots U(0); the repaired samples stay below it
        assert np.max(prof.u) <= prof.far_field + 1e-12
        assert validate_profile(prof, flow).passed

    def test_blend3_unrepaired_smooth(self, adverse_flow, blend_profile):
        assert "repaired" not in blend_profile.label
        assert validate_profile(blend_profile, adverse_flow).passed
        # analytic wall data survives
        assert blend_profile.taylor_a2 == pytest.approx(1.0)

    def test_near_linear_ramp_monotone(self):
        flow = make_outer_flow(dpdx=0.0, u_ref=2.0)
        prof = make_profile(2.0 / 5.0, flow, 5.0)
        assert np.min(prof.du) >= -1e-12
        assert "repaired" not in prof.label

    def test_zero_blend_scale_rejected(self, adverse_flow):
        with pytest.raises(ModelError):
            make_profile(0.1, adverse_flow, 0.0)

    def test_zero_slope_rejected(self, adverse_flow):
        with pytest.raises(ModelError):
            make_profile(0.0, adverse_flow, 3.0)


class TestBoundedCurvatureProfile:
    def test_hypothesis_holds(self, adverse_flow):
        prof = make_bounded_curvature_profile(0.1, adverse_flow)
        assert prof.wall_slope == pytest.approx(0.1)
        assert prof.taylor_a2 == pytest.approx(1.0)
        assert np.max(prof.d2u) <= 1.0 + 1e-6
        assert np.min(prof.du) >= -1e-10
        # far field attained exactly at finite height
        assert prof.u[-1] == pytest.approx(adverse_flow.U(0.0), rel=1e-12)

    def test_needs_adverse_gradient(self, neutral_flow):
        with pytest.raises(ModelError):
            make_bounded_curvature_profile(0.1, neutral_flow)


# ---------------------------------------------------------------------------
# Mass inversion
# ---------------------------------------------------------------------------

class TestMassInversion:
    def test_against_quadrature_oracle(self, blend_profile):
        # oracle: brentq on a dense trapezoid table, independent of y_at_mass
        from scipy.optimize import brentq
        y_fine = np.linspace(0.0, blend_profile.y[-1], 400001)
        u_fine = np.interp(y_fine, blend_profile.y, blend_profile.u)
        M_fine = np.concatenate(
            [[0.0], np.cumsum(0.5 * (u_fine[1:] + u_fine[:-1]) * np.diff(y_fine))])
        for psi in (1e-2, 1.0, 8.0, 30.0):
            y_ref = brentq(lambda yy: np.interp(yy, y_fine, M_fine) - psi,
                           0.0, y_fine[-1], xtol=1e-14)
            y_got = float(blend_profile.y_at_mass(np.array([psi]))[0])
            assert y_got == pytest.approx(y_ref, rel=5e-6, abs=1e-9)

    def test_wall_against_polynomial_root_oracle(self, blend_profile):
        # near the wall the mass is the quartic Taylor polynomial; its root
        # via np.roots is an independent oracle (agreement is limited by the
        # trapezoid mass table's own consistency, not the inversion)
        s, a2, a3 = (blend_profile.wall_slope, blend_profile.taylor_a2,
                     blend_profile.taylor_a3)
        for psi in (1e-8, 1e-6, 1e-5):
            roots = np.roots([a3 / 24.0, a2 / 6.0, s / 2.0, 0.0, -psi])
            real = roots[np.abs(roots.imag) < 1e-12].real
            y_ref = float(np.min(real[real > 0]))
            y_got = float(blend_profile.y_at_mass(np.array([psi]))[0])
            assert y_got == pytest.approx(y_ref, rel=2e-5)

    def test_wall_cell_against_taylor(self, blend_profile):
        # inside the first cell the inverted mass satisfies the quartic Taylor
        psi = 0.5 * blend_profile.mass()[1]
        y_got = float(blend_profile.y_at_mass(np.array([psi]))[0])
        s, a2, a3 = (blend_profile.wall_slope, blend_profile.taylor_a2,
                     blend_profile.taylor_a3)
        resid = s * y_got**2 / 2 + a2 * y_got**3 / 6 + a3 * y_got**4 / 24 - psi
        assert abs(resid) < 1e-12 * psi

    def test_out_of_range_raises(self, blend_profile):
        with pytest.raises(InsufficientMassError):
            blend_profile.y_at_mass(np.array([blend_profile.total_mass() * 2]))


# ---------------------------------------------------------------------------
# Separation criterion
# ---------------------------------------------------------------------------

def _low_slope_profile(slope, U0=np.sqrt(32.0), y_max=160.0, n=20001):
    """Monotone profile with slope_sup = slope: u = U0 (1 - exp(-s y / U0))."""
    y = np.linspace(0.0, y_max, n)
    u = U0 * (1.0 - np.exp(-slope * y / U0))
    du = slope * np.exp(-slope * y / U0)
    d2u = -(slope**2 / U0) * np.exp(-slope * y / U0)
    return WallProfile(y=y, u=u, wall_slope=slope, far_field=U0,
                       taylor_a2=-(slope**2 / U0), taylor_a3=slope**3 / U0**2,
                       du=du, d2u=d2u)


class TestSeparationCriterion:
    def test_satisfied_spec_arithmetic(self, adverse_flow):
        # x0=16, B=2: psi0 = 2 * 16^{3/4} = 16; threshold = 0.5*0.2*2 = 0.2
        prof = _low_slope_profile(0.1)
        rep = check_separation_condition(prof, adverse_flow, mu=0.9,
                                         b_const=2.0, epsilon0=0.2)
        assert rep.psi0 == pytest.approx(16.0)
        assert rep.threshold == pytest.approx(0.2)
        assert rep.slope_sup == pytest.approx(0.1, rel=1e-6)
        assert rep.satisfied

    def test_not_satisfied_above_threshold(self, adverse_flow):
        prof = _low_slope_profile(0.3)
        rep = check_separation_condition(prof, adverse_flow, mu=0.9,
                                         b_const=2.0, epsilon0=0.2)
        assert rep.slope_sup == pytest.approx(0.3, rel=1e-6)
        assert not rep.satisfied

    def test_insufficient_mass(self, adverse_flow):
        prof = _low_slope_profile(0.1, y_max=4.0, n=2001)  # mass ~ 10 < psi0
        assert prof.total_mass() < 16.0
        with pytest.raises(InsufficientMassError):
            check_separation_condition(prof, adverse_flow, mu=0.9,
                                       b_const=2.0, epsilon0=0.2)

    def test_default_epsilon0_scaling(self, adverse_flow):
        prof = _low_slope_profile(0.01)
        rep = check_separation_condition(prof, adverse_flow, mu=0.5, b_const=4.0)
        assert rep.epsilon0 == pytest.approx(0.5**2 / 8.0)

    def test_monotone_in_slope(self, adverse_flow):
        # shrinking the wall slope never un-satisfies the criterion
        slopes = (0.06, 0.10, 0.14)
        reps = [check_separation_condition(_low_slope_profile(s), adverse_flow,
                                           mu=0.9, b_const=2.0, epsilon0=0.11)
                for s in slopes]
        sats = [r.satisfied for r in reps]
        assert sats == [True, True, False]
        for small, big in zip(reps[:-1], reps[1:]):
            if big.satisfied:
                assert small.satisfied

    def test_needs_adverse_flow(self, neutral_flow):
        with pytest.raises(ModelError):
            check_separation_condition(_low_slope_profile(0.1), neutral_flow)


# ---------------------------------------------------------------------------
# Profile file I/O
# ---------------------------------------------------------------------------

class TestProfileIO:
    def test_roundtrip(self, blend_profile, tmp_path):
        path = tmp_path / "profile.txt"
        save_profile(blend_profile, path)
        back = load_profile(path)
        assert np.array_equal(back.y, blend_profile.y)
        assert np.array_equal(back.u, blend_profile.u)
        assert back.wall_slope == blend_profile.wall_slope
        assert back.taylor_a2 == blend_profile.taylor_a2

    def test_header_checked(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("0 0\n1 1\n")
        with pytest.raises(ModelError):
            load_profile(path)

    def test_header_line(self, blend_profile, tmp_path):
        path = tmp_path / "profile.txt"
        save_profile(blend_profile, path)
        assert path.read_text().startswith("# prandtl-profile v1\n")
