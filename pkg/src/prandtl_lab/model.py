"""Outer flows, inflow profiles, admissible-data checks, separation criterion.

The outer flow ties U and p through Bernoulli, U(x)^2 = 2(p(x0) - p(x)) in
the adverse mode.  Inflow profiles are positive, monotone, and carry the
wall compatibility u''(0) = p'(0) plus a vanishing third derivative (the
degenerate-parabolic existence class).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientMassError, ModelError
from .smoothstep import cutoff, cutoff_d1, cutoff_d2

PROFILE_HEADER = "# prandtl-profile v1"


# ---------------------------------------------------------------------------
# Outer flow
# ---------------------------------------------------------------------------

@dataclass
class OuterFlow:
    """Outer velocity U(x) and pressure gradient, tied by Bernoulli.

    Adverse mode (x0 finite): U(x)^2 = 2 (p(x0) - p(x)), U(x0) = 0.
    Neutral/favorable mode (x0 is None): U(x)^2 = u_ref^2 - 2 (p(x) - p(0)).
    """

    kind: str                      # "constant" | "polynomial"
    params: tuple                  # dpdx for constant, ascending p coeffs otherwise
    x0: float | None = None
    u_ref: float | None = None
    adverse: bool = False

    def pressure(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return self.params[0] * x
        return np.polynomial.polynomial.polyval(x, self.params)

    def pressure_gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.params[0])
        dp = np.polynomial.polynomial.polyder(self.params)
        return np.polynomial.polynomial.polyval(x, dp)

    def pressure_second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(x)
        d2p = np.polynomial.polynomial.polyder(self.params, 2)
        return np.polynomial.polynomial.polyval(x, d2p)

    def U_squared(self, x):
        if self.x0 is not None:
            return 2.0 * (self.pressure(self.x0) - self.pressure(x))
        return self.u_ref**2 - 2.0 * (self.pressure(x) - self.pressure(0.0))

    def U(self, x):
        u2 = self.U_squared(x)
        if np.any(np.asarray(u2) < -1e-14):
            raise ModelError("U(x)^2 negative: station beyond the vanishing point")
        return np.sqrt(np.maximum(u2, 0.0))

    def describe(self):
        """Stable textual identity, used for scenario hashing."""
        return (f"kind={self.kind} params={tuple(float(p) for p in self.params)} "
                f"x0={self.x0} u_ref={self.u_ref} adverse={self.adverse}")


def make_outer_flow(dpdx=None, p_coeffs=None, x0=None, u_ref=None, adverse=None):
    """Build an OuterFlow from a constant p' or a polynomial p.

    Exactly one of dpdx / p_coeffs must be given.  With x0 the flow is
    adverse and U(x)^2 = 2(p(x0)-p(x)); without it u_ref = U(0) is required.
    """
    if (dpdx is None) == (p_coeffs is None):
        raise ModelError("give exactly one of dpdx or p_coeffs")
    if dpdx is not None:
        kind, params = "constant", (float(dpdx),)
    else:
        kind, params = "polynomial", tuple(float(c) for c in p_coeffs)

    if adverse is None:
        adverse = x0 is not None

    if x0 is not None:
        if x0 <= 0:
            raise ModelError(f"x0 must be positive, got {x0}")
        flow = OuterFlow(kind, params, x0=float(x0), adverse=adverse)
        if adverse:
            xs = np.linspace(0.0, x0, 1001)
            pg = flow.pressure_gradient(xs)
            if np.min(pg) <= 0.0:
                raise ModelError(
                    f"adverse mode requires p' > 0 on [0, x0]; min p' = {np.min(pg):g}")
        u2 = flow.U_squared(np.linspace(0.0, x0, 1001)[:-1])
        if np.min(u2) <= 0.0:
            raise ModelError("U vanishes before x0; x0 is not the first zero of U")
        return flow

    if u_ref is None:
        raise ModelError("u_ref (= U(0)) is required when x0 is not given")
    if u_ref <= 0:
        raise ModelError(f"u_ref must be positive, got {u_ref}")
    if adverse:
        raise ModelError("adverse mode requires a finite x0")
    return OuterFlow(kind, params, u_ref=float(u_ref), adverse=False)


# ---------------------------------------------------------------------------
# Wall profile
# ---------------------------------------------------------------------------

@dataclass
class WallProfile:
    """Inflow profile u0(y) >= 0 on a monotone y grid with derivative tables.

    taylor_a2 and taylor_a3 are u0''(0) and u0'''(0) of the wall expansion
    u0 = slope*y + a2*y^2/2 + a3*y^3/6; they drive the compatibility checks
    and the near-wall mass inversion.
    """

    y: np.ndarray
    u: np.ndarray
    wall_slope: float
    far_field: float
    taylor_a2: float
    taylor_a3: float
    du: np.ndarray = field(default=None, repr=False)
    d2u: np.ndarray = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.y.ndim != 1 or self.y.shape != self.u.shape or len(self.y) < 4:
            raise ModelError("profile needs matching 1-d y/u arrays, >= 4 points")
        if np.any(np.diff(self.y) <= 0):
            raise ModelError("profile y grid must be strictly increasing")
        if self.du is None:
            self.du = _gradient_nonuniform(self.u, self.y)
        if self.d2u is None:
            self.d2u = _gradient_nonuniform(self.du, self.y)
        self._mass = None

    @classmethod
    def from_samples(cls, y, u, label=""):
        """Build a profile from raw samples.

        Wall Taylor data comes from a constrained cubic fit over the first
        grid cells; differencing twice and reading the boundary stencil is
        far too noisy for the third derivative.
        """
        y = np.asarray(y, dtype=float)
        u = np.asarray(u, dtype=float)
        du = _gradient_nonuniform(u, y)
        d2u = _gradient_nonuniform(du, y)
        slope, a2, a3 = _fit_wall_taylor(y, u)
        return cls(y=y, u=u, wall_slope=slope, far_field=float(u[-1]),
                   taylor_a2=a2, taylor_a3=a3, du=du, d2u=d2u, label=label)

    # -- mass -------------------------------------------------------------

    def mass(self):
        """Cumulative trapezoid of u0: the stream function psi(y)."""
        if self._mass is None:
            dy = np.diff(self.y)
            self._mass = np.concatenate(
                [[0.0], np.cumsum(0.5 * (self.u[1:] + self.u[:-1]) * dy)])
        return self._mass

    def total_mass(self):
        return float(self.mass()[-1])

    def y_at_mass(self, psi):
        """Invert psi(y) = integral of u0.

        The first cell (where u(0) = 0 degenerates the cell model) uses the
        wall Taylor expansion; all other cells use a cubic Hermite mass
        model.  Linear-interp inversion is far too crude for the graded
        solver grids.
        """
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        M = self.mass()
        if np.any(psi < 0) or np.any(psi > M[-1] * (1 + 1e-12)):
            raise InsufficientMassError(
                f"requested mass outside [0, {M[-1]:g}]")
        out = np.empty_like(psi)
        cell = np.clip(np.searchsorted(M, psi, side="right") - 1, 0, len(M) - 2)

        # wall cell: M(y) ~ s y^2/2 + a2 y^3/6 + a3 y^4/24, Newton
        s, a2, a3 = self.wall_slope, self.taylor_a2, self.taylor_a3
        wall = psi <= M[1]
        if np.any(wall):
            p = psi[wall]
            yy = np.sqrt(np.maximum(2.0 * p / max(s, 1e-300), 0.0))
            for _ in range(60):
                F = s * yy**2 / 2 + a2 * yy**3 / 6 + a3 * yy**4 / 24 - p
                Fp = s * yy + a2 * yy**2 / 2 + a3 * yy**3 / 6
                step = F / np.maximum(Fp, 1e-300)
                yy = yy - step
                if np.max(np.abs(step)) < 1e-15 * max(np.max(yy), 1e-30):
                    break
            out[wall] = yy

        gen = ~wall
        if np.any(gen):
            k = cell[gen]
            p = psi[gen]
            yk = self.y[k]
            uk = self.u[k]
            duk = self.du[k]
            d2k = self.d2u[k]
            c = p - M[k]
            # init from the quadratic model, polish on the cubic one
            disc = np.maximum(uk * uk + 2.0 * duk * c, 0.0)
            small = np.abs(duk) < 1e-14 * np.maximum(np.abs(uk), 1.0)
            d = np.where(small, c / np.maximum(uk, 1e-300),
                         (-uk + np.sqrt(disc)) / np.where(small, 1.0, duk))
            for _ in range(6):
                F = uk * d + duk * d * d / 2 + d2k * d**3 / 6 - c
                Fp = uk + duk * d + d2k * d * d / 2
                d = d - F / np.maximum(np.abs(Fp), 1e-300) * np.sign(Fp)
            out[gen] = yk + d
        return out

    def evaluate(self, yq):
        """Profile value at arbitrary y by per-cell quadratic Hermite."""
        yq = np.atleast_1d(np.asarray(yq, dtype=float))
        k = np.clip(np.searchsorted(self.y, yq, side="right") - 1, 0, len(self.y) - 2)
        d = yq - self.y[k]
        return self.u[k] + self.du[k] * d + self.d2u[k] * d * d / 2


def _gradient_nonuniform(f, x):
    return np.gradient(f, x, edge_order=2)


def _fit_wall_taylor(y, u):
    """Constrained cubic fit u ~ s y + a2 y^2/2 + a3 y^3/6 near the wall."""
    window = max(5.0 * y[4], 0.01 * y[-1])
    n = int(np.searchsorted(y, window))
    n = min(max(n, 5), 400, len(y))
    yy = y[1:n] - y[0]
    uu = u[1:n] - u[0]
    basis = np.column_stack([yy, yy**2 / 2.0, yy**3 / 6.0])
    coef, *_ = np.linalg.lstsq(basis, uu, rcond=None)
    return float(coef[0]), float(coef[1]), float(coef[2])


# ---------------------------------------------------------------------------
# Profile generators
# ---------------------------------------------------------------------------

def _graded_y_grid(y_max, n_points, grading=2.0):
    k = np.arange(n_points, dtype=float)
    return y_max * (k / (n_points - 1)) ** grading


def make_profile(slope, flow, blend_scale, n_points=8193, y_max=None):
    """Blend a near-wall ramp into the outer velocity with a quintic cutoff.

    u0(y) = [slope*y + (p'(0)/2) y^2] * chi(y/b) + U(0) (1 - chi(y/b)).
    If the raw blend is non-monotone it is repaired (running max, clipped
    at U(0) so the transformed state satisfies w <= U^2, then smoothed) and
    re-validated.
    """
    if slope <= 0:
        raise ModelError(f"slope must be positive, got {slope}")
    if blend_scale <= 0:
        raise ModelError(f"blend_scale must be positive, got {blend_scale}")
    U0 = float(flow.U(0.0))
    a2 = float(flow.pressure_gradient(0.0))
    if y_max is None:
        y_max = 4.0 * blend_scale
    y = _graded_y_grid(y_max, n_points)

    t = y / blend_scale
    c = cutoff(t)
    c1 = cutoff_d1(t) / blend_scale
    c2 = cutoff_d2(t) / blend_scale**2
    ramp = slope * y + 0.5 * a2 * y * y
    dramp = slope + a2 * y
    u = ramp * c + U0 * (1.0 - c)
    du = dramp * c + (ramp - U0) * c1
    d2u = a2 * c + 2.0 * dramp * c1 + (ramp - U0) * c2

    # cubic term of the blend at the wall: u0 = s y + a2 y^2/2 + (10 U0/b^3) y^3 + ...
    a3 = 60.0 * U0 / blend_scale**3

    label = f"blend slope={slope:g} b={blend_scale:g}"
    if np.min(du) < -1e-12 * U0:
        u = _repair_monotone(u, U0)
        du = _gradient_nonuniform(u, y)
        d2u = _gradient_nonuniform(du, y)
        label += " repaired"

    prof = WallProfile(y=y, u=u, wall_slope=float(slope), far_field=U0,
                       taylor_a2=a2, taylor_a3=a3, du=du, d2u=d2u, label=label)

    report = validate_profile(prof, flow)
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        detail = report.first_failure_detail()
        raise ModelError(
            f"generated profile failed validation ({', '.join(failed)}); {detail}")
    return prof


def _repair_monotone(u, ceiling):
    """Running max, ceiling clip, then two pinned 3-point smoothing passes."""
    v = np.maximum.accumulate(u)
    v = np.minimum(v, ceiling)
    for _ in range(2):
        s = v.copy()
        s[1:-1] = (v[:-2] + v[1:-1] + v[2:]) / 3.0
        v = s
    v = np.minimum(np.maximum.accumulate(v), ceiling)
    v[0] = 0.0
    return v


def make_bounded_curvature_profile(slope, flow, core_scale=2.0, cap_start=None,
                                   cap_width=3.0, n_points=8193):
    """Inflow with u0''(0) = p'(0) and u0'' <= p'(0) everywhere.

    u0'(y) = slope*sech(y/core_scale) + p'(0)*y*exp(-y^4/(4 sigma^4)) with
    sigma fixed by the far-field mass, then blended exactly onto U(0) over
    [cap_start, cap_start+cap_width] so the far field is attained at finite
    height.  This is the constructive hypothesis for the curvature upper
    bound (and its general-pressure variant with p'' >= 0).
    """
    if slope <= 0:
        raise ModelError(f"slope must be positive, got {slope}")
    U0 = float(flow.U(0.0))
    pg0 = float(flow.pressure_gradient(0.0))
    if pg0 <= 0:
        raise ModelError("bounded-curvature construction needs p'(0) > 0")
    bump_mass_unit = np.sqrt(np.pi) / 2.0
    sigma2 = (U0 - slope * core_scale * np.pi / 2.0) / (pg0 * bump_mass_unit)
    if sigma2 <= 0:
        raise ModelError("slope*core_scale too large for the requested far field")
    sigma = np.sqrt(sigma2)
    if cap_start is None:
        cap_start = max(2.0 * sigma, 2.5 * core_scale)
    cap_end = cap_start + cap_width
    y = _graded_y_grid(cap_end + 1.0, n_points)

    q = y**4 / (4.0 * sigma**4)
    sech = 1.0 / np.cosh(y / core_scale)
    tanh = np.tanh(y / core_scale)
    dubase = slope * sech + pg0 * y * np.exp(-q)
    d2base = (-(slope / core_scale) * sech * tanh
              + pg0 * np.exp(-q) * (1.0 - y**4 / sigma**4))
    dy = np.diff(y)
    ubase = np.concatenate([[0.0], np.cumsum(0.5 * (dubase[1:] + dubase[:-1]) * dy)])

    t = (y - cap_start) / cap_width
    fac = cutoff(t)
    fac1 = cutoff_d1(t) / cap_width
    fac2 = cutoff_d2(t) / cap_width**2
    deficit = U0 - ubase
    u = U0 - deficit * fac
    du = dubase * fac - deficit * fac1
    d2u = d2base * fac + 2.0 * dubase * fac1 - deficit * fac2
    a3 = -slope / core_scale**2
    prof = WallProfile(y=y, u=u, wall_slope=float(slope), far_field=U0,
                       taylor_a2=pg0, taylor_a3=a3, du=du, d2u=d2u,
                       label=f"bounded-curvature slope={slope:g}")
    report = validate_profile(prof, flow)
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise ModelError(f"bounded-curvature profile failed validation ({failed})")
    return prof


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def first_failure_detail(self):
        for c in self.checks:
            if not c.passed:
                return f"{c.name}: residual {c.residual:.3g} > tol {c.tolerance:.3g} {c.detail}"
        return ""

    def lines(self):
        out = []
        for c in self.checks:
            mark = "pass" if c.passed else "FAIL"
            out.append(f"{c.name:<18s} {mark}  residual={c.residual:.3e} tol={c.tolerance:.3e} {c.detail}")
        return out


def validate_profile(profile, flow, far_field_rtol=1e-3, compat_tol=5e-2,
                     third_deriv_tol=None):
    """Run the admissibility checks; failures are reported, never raised."""
    checks = []
    U0 = float(flow.U(0.0))
    pg0 = float(flow.pressure_gradient(0.0))
    u, y, du = profile.u, profile.y, profile.du

    scale = max(U0, 1e-300)
    r = abs(float(u[0]))
    checks.append(CheckResult("wall_value", r <= 1e-10 * scale, r, 1e-10 * scale))

    slope = profile.wall_slope
    checks.append(CheckResult("wall_slope", slope > 0.0, -min(slope, 0.0), 0.0,
                              f"u0'(0)={slope:g}"))

    dmin = float(np.min(du))
    imin = int(np.argmin(du))
    checks.append(CheckResult("monotonicity", dmin >= -1e-8 * scale, max(-dmin, 0.0),
                              1e-8 * scale,
                              f"first violation near y={y[imin]:g}" if dmin < 0 else ""))

    r = abs(float(u[-1]) - U0)
    checks.append(CheckResult("far_field", r <= far_field_rtol * scale, r,
                              far_field_rtol * scale,
                              f"u(y_max)={u[-1]:g} U(0)={U0:g}"))

    r = abs(profile.taylor_a2 - pg0)
    tol = compat_tol * max(1.0, abs(pg0))
    checks.append(CheckResult("compat_curvature", r <= tol, r, tol,
                              f"u0''(0)={profile.taylor_a2:g} p'(0)={pg0:g}"))

    # coarse sanity bound only: the admissible class wants u0'''(0) = 0 but
    # common analytic profiles carry an O(1) third derivative
    if third_deriv_tol is None:
        third_deriv_tol = 8.0 * max(1.0, U0)
    r = abs(profile.taylor_a3)
    checks.append(CheckResult("third_derivative", r <= third_deriv_tol, r,
                              third_deriv_tol, f"u0'''(0)={profile.taylor_a3:g}"))

    n_wall = int(np.sum(y <= 0.01 * y[-1]))
    checks.append(CheckResult("wall_resolution", n_wall >= 3, float(3 - n_wall),
                              0.0, f"{n_wall} points in [0, 0.01 y_max]"))

    return ValidationReport(checks)


# ---------------------------------------------------------------------------
# Separation criterion
# ---------------------------------------------------------------------------

@dataclass
class SeparationCriterionReport:
    b_const: float
    epsilon0: float
    mu: float
    psi0: float
    y0: float
    slope_sup: float
    threshold: float
    satisfied: bool


def default_epsilon0(mu, b_const):
    """Smallness parameter tied to mu by the proof's two requirements."""
    return mu * mu / (2.0 * b_const)


def check_separation_condition(profile, flow, mu=0.5, b_const=4.0, epsilon0=None):
    """Evaluate the small-slope separation criterion.

    psi0 = B x0^{3/4}; y0 solves the cumulative mass equation
    integral_0^{y0} u0 = psi0; the criterion compares the slope supremum on
    [0, y0] against 0.5 * epsilon0 * x0^{1/4}.
    """
    if flow.x0 is None:
        raise ModelError("separation criterion needs an adverse flow with finite x0")
    if not (0.0 < mu < 1.0):
        raise ModelError(f"mu must lie in (0,1), got {mu}")
    if b_const <= 0:
        raise ModelError(f"B must be positive, got {b_const}")
    if epsilon0 is None:
        epsilon0 = default_epsilon0(mu, b_const)
    if epsilon0 <= 0:
        raise ModelError(f"epsilon0 must be positive, got {epsilon0}")

    psi0 = b_const * flow.x0 ** 0.75
    total = profile.total_mass()
    if psi0 > total:
        raise InsufficientMassError(
            f"insufficient mass: psi0={psi0:g} exceeds available {total:g}")
    y0 = float(profile.y_at_mass(psi0)[0])

    m = profile.y <= y0
    slope_sup = float(np.max(profile.du[m])) if np.any(m) else profile.wall_slope
    # include the interpolated interval endpoint
    du_end = float(np.interp(y0, profile.y, profile.du))
    slope_sup = max(slope_sup, du_end)

    threshold = 0.5 * epsilon0 * flow.x0 ** 0.25
    return SeparationCriterionReport(
        b_const=b_const, epsilon0=epsilon0, mu=mu, psi0=psi0, y0=y0,
        slope_sup=slope_sup, threshold=threshold,
        satisfied=bool(slope_sup <= threshold))


# ---------------------------------------------------------------------------
# Profile text I/O
# ---------------------------------------------------------------------------

def save_profile(profile, path):
    with open(path, "w") as fh:
        fh.write(PROFILE_HEADER + "\n")
        if profile.label:
            fh.write(f"# label: {profile.label}\n")
        fh.write(f"# wall_slope: {float(profile.wall_slope)!r}\n")
        fh.write(f"# far_field: {float(profile.far_field)!r}\n")
        fh.write(f"# taylor_a2: {float(profile.taylor_a2)!r}\n")
        fh.write(f"# taylor_a3: {float(profile.taylor_a3)!r}\n")
        for yy, uu in zip(profile.y, profile.u):
            fh.write(f"{float(yy)!r} {float(uu)!r}\n")


def load_profile(path):
    meta = {}
    rows = []
    with open(path) as fh:
        first = fh.readline().strip()
        if first != PROFILE_HEADER:
            raise ModelError(f"not a profile file (header {first!r})")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if ":" in line:
                    key, val = line[1:].split(":", 1)
                    meta[key.strip()] = val.strip()
                continue
            parts = line.split()
            rows.append((float(parts[0]), float(parts[1])))
    arr = np.asarray(rows)
    prof = WallProfile.from_samples(arr[:, 0], arr[:, 1],
                                    label=meta.get("label", ""))
    for name in ("wall_slope", "far_field", "taylor_a2", "taylor_a3"):
        if name in meta:
            setattr(prof, name, float(meta[name]))
    return prof
