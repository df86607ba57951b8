"""Quantitative post-processing: singularity location and rate fits, the
near-wall scaling scan, curvature bounds, the weighted-mass inequality,
singular-expansion fits, self-similar collapse, and cross-solver checks.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, ModelError
from .smoothstep import cutoff, cutoff_d2
from .vm import from_von_mises

# wall-shear readings below c * (p' * sqrt(psi1))^(2/3) are dominated by the
# one-sided stencil's error on the near-wall w ~ psi^(4/3) layer
TAU_FLOOR_COEFF = 2.0


def tau_reliability_floor(record):
    """Smallest wall shear the record's grid can resolve at the wall."""
    psi1 = record.meta.get("psi1")
    if psi1 is None:
        return 0.0
    pg = abs(record.meta.get("pgrad0", 1.0))
    return (TAU_FLOOR_COEFF * pg * math.sqrt(psi1)) ** (2.0 / 3.0)


# ---------------------------------------------------------------------------
# Rate fits
# ---------------------------------------------------------------------------

@dataclass
class RateFit:
    amplitude: float
    alpha: float
    xstar: float
    window: tuple
    residual: float
    method: str
    n_points: int
    tau_floor: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.residual)):
            raise FitError(f"degenerate fit: alpha={self.alpha}, residual={self.residual}")


def _decaying_tail(record):
    """Stations from the wall-shear peak onward (the decaying branch)."""
    x, tau = record.x, record.tau
    ipk = int(np.argmax(tau))
    return x[ipk:], tau[ipk:]


def estimate_xstar(record, tail_fraction=0.5, alpha_init=0.5, tau_reliable=None):
    """Free (A, alpha, X*) fit of tau = A (X* - x)^alpha in log space.

    Fits the trailing tail_fraction of the decaying branch, discarding
    stations below the grid's wall-shear reliability floor.  Initial X*
    comes from extrapolating tau^2 (and tau^4) linearly to zero.
    """
    if not record.separated:
        raise ModelError("xstar estimation needs a record terminated by separation")
    if not (0.0 < tail_fraction < 1.0):
        raise ModelError(f"tail_fraction must lie in (0,1), got {tail_fraction}")
    x, tau = _decaying_tail(record)
    n0 = int(len(x) * (1.0 - tail_fraction))
    x, tau = x[n0:], tau[n0:]
    floor = tau_reliability_floor(record) if tau_reliable is None else tau_reliable
    keep = tau > floor
    x, tau = x[keep], tau[keep]
    if len(x) < 20:
        raise FitError(f"insufficient tail data: {len(x)} stations after filtering")

    x_last = x[-1]
    guesses = []
    for power in (2.0, 4.0):
        k = max(len(x) - 20, 0)
        coef = np.polyfit(x[k:], tau[k:] ** power, 1)
        if coef[0] < 0:
            guesses.append(-coef[1] / coef[0])
    xstar0 = max([g for g in guesses if g > x_last] or [x_last + 1e-6])
    span = x[-1] - x[0]

    def resid(q):
        log_a, alpha, xstar = q
        return np.log(tau) - (log_a + alpha * np.log(np.maximum(xstar - x, 1e-300)))

    sol = least_squares(
        resid, [math.log(tau[0]), alpha_init, xstar0],
        bounds=([-40.0, 0.05, x_last + 1e-12], [40.0, 2.0, x_last + 10.0 * span]),
        method="trf")
    if not sol.success:
        raise FitError(f"xstar fit did not converge: {sol.message}; "
                       f"best iterate {sol.x}")
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    return RateFit(amplitude=float(np.exp(sol.x[0])), alpha=float(sol.x[1]),
                   xstar=float(sol.x[2]), window=(float(x[0]), float(x[-1])),
                   residual=rms, method="free_alpha", n_points=len(x),
                   tau_floor=floor)


def fit_rate_exponent(record, xstar, window):
    """Fixed-X* exponent: slope of log tau against log(X* - x), plus the
    constant estimate sup tau / (X* - x)^{1/4} over the window."""
    x_lo, x_hi = window
    if not x_hi < xstar:
        raise ModelError(f"window must lie strictly below xstar ({x_hi} vs {xstar})")
    x, tau = record.x, record.tau
    m = (x >= x_lo) & (x <= x_hi) & (tau > 0)
    if int(np.sum(m)) == 0:
        raise FitError("empty window")
    if int(np.sum(m)) < 10:
        raise FitError(f"window holds {int(np.sum(m))} stations, need >= 10")
    s = xstar - x[m]
    coef, res = np.polyfit(np.log(s), np.log(tau[m]), 1, full=True)[:2]
    n = int(np.sum(m))
    rms = float(np.sqrt(res[0] / n)) if len(res) else 0.0
    c_est = float(np.max(tau[m] / s ** 0.25))
    fit = RateFit(amplitude=float(np.exp(coef[1])), alpha=float(coef[0]),
                  xstar=float(xstar), window=(float(x_lo), float(x_hi)),
                  residual=rms, method="fixed_xstar", n_points=n)
    return fit, c_est


# ---------------------------------------------------------------------------
# Near-wall similarity scale mu(x)
# ---------------------------------------------------------------------------

def mu_of_x(y, dudy, tol=1e-12):
    """Largest fixed point of v = min_{0 <= y <= v^{1/4}} (du/dy)^4.

    The map is non-increasing in v, so h(v) = v - g(v) is increasing;
    bisection on [0, (du/dy)(0)^4] brackets the unique root.  The endpoint
    y = v^{1/4} enters through linear interpolation on the native grid.
    """
    y = np.asarray(y, dtype=float)
    dudy = np.asarray(dudy, dtype=float)
    s0 = float(dudy[0])
    if s0 <= 0.0:
        raise ModelError("du/dy(0) must be positive (at/past separation?)")
    v_hi = s0 ** 4
    if y[-1] < min(1.0, v_hi ** 0.25):
        raise ModelError(
            f"profile resolves y only to {y[-1]:g}; need min(1, du/dy(0)) = "
            f"{min(1.0, s0):g}")

    def g(v):
        edge = v ** 0.25
        m = y <= edge
        vals = dudy[m] ** 4
        best = float(np.min(vals)) if np.any(m) else s0 ** 4
        edge_val = float(np.interp(edge, y, dudy)) ** 4
        return min(best, edge_val)

    lo, hi = 0.0, v_hi
    if hi - g(hi) < 0:
        return hi  # constant-slope degenerate case: fixed point at the top
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid - g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Quarter-rate scan
# ---------------------------------------------------------------------------

@dataclass
class CurveScanReport:
    """Per-station strip statistics and their dyadic-window summary.

    Each row holds (x, strip bound (X*-x)^{3/4}, min and max of the
    discrete dw/dpsi over the strip, and both ratios against
    (X*-x)^{1/4}).  The window statistic gates on the strip maximum: the
    comparability claim is existential, and the attained maximum is its
    discrete witness, while the strip minimum tracks the (faster) wall
    rate.  windows rows: (k, count, max_ratio, max_ratio_min).
    """

    xstar: float
    rows: np.ndarray
    windows: list

    def band(self):
        vals = [w[2] for w in self.windows]
        return (min(vals), max(vals))

    def band_spread(self):
        lo, hi = self.band()
        return hi / lo if lo > 0 else float("inf")

    def loglog_slope(self):
        if len(self.windows) < 2:
            raise FitError("need >= 2 windows for a slope")
        ks = np.array([w[0] for w in self.windows], dtype=float)
        vals = np.array([w[2] for w in self.windows], dtype=float)
        coef = np.polyfit(np.log(2.0 ** -ks), np.log(vals), 1)
        return float(coef[0])


def _gradient_samples(state):
    """Discrete dw/dpsi: wall stencil at 0, centered differences inside."""
    grid = state.grid
    psi = grid.nodes
    grad = np.empty_like(psi)
    grad[0] = state.wall_gradient()
    grad[1:-1] = grid.centered_gradient(state.w)
    grad[-1] = (state.w[-1] - state.w[-2]) / (psi[-1] - psi[-2])
    return psi, grad


def scan_quarter_rate(snapshots, xstar, min_windows=2):
    """Scan stored states for the near-wall comparability statistic.

    For each snapshot at station x the strip is psi in [0, (X*-x)^{3/4}];
    stations are grouped into dyadic windows 2^{-k-1} <= X*-x < 2^{-k}.
    """
    rows = []
    for state in snapshots:
        s = xstar - state.x
        if s <= 0:
            continue
        bound = s ** 0.75
        psi, grad = _gradient_samples(state)
        if bound > psi[-1]:
            raise ModelError(
                f"search bound {bound:g} exceeds psi_max {psi[-1]:g} at x={state.x:g}")
        m = psi <= bound
        if int(np.sum(m)) < 3:
            continue
        vals = grad[m]
        edge_val = float(np.interp(bound, psi, grad))
        s_min = min(float(np.min(vals)), edge_val)
        s_max = max(float(np.max(vals)), edge_val)
        rate = s ** 0.25
        rows.append((state.x, bound, s_min, s_max, s_min / rate, s_max / rate))
    if not rows:
        raise ModelError("no usable snapshots below xstar")
    rows = np.asarray(rows)

    s_vals = xstar - rows[:, 0]
    ks = np.floor(-np.log2(s_vals)).astype(int)
    windows = []
    for k in sorted(set(ks)):
        m = ks == k
        windows.append((int(k), int(np.sum(m)),
                        float(np.max(rows[m, 5])), float(np.max(rows[m, 4]))))
    if len(windows) < min_windows:
        raise ModelError(
            f"snapshots span {len(windows)} dyadic windows, need >= {min_windows}")
    return CurveScanReport(xstar=float(xstar), rows=rows, windows=windows)


# ---------------------------------------------------------------------------
# Curvature bounds
# ---------------------------------------------------------------------------

@dataclass
class CurvatureBounds:
    min_uyy: float
    max_uyy: float
    per_station: np.ndarray        # columns x, min_uyy, max_uyy
    hypothesis_constant: bool | None = None   # inflow u0'' <= 1
    hypothesis_general: bool | None = None    # inflow u0'' <= p'(0), p'' >= 0


def check_second_derivative_bounds(record, profile=None, flow=None,
                                   tau_reliable=None):
    """Global curvature extrema over the run, plus the upper-bound
    hypothesis flags when the inflow and flow are supplied.

    Stations whose wall shear sits below the grid reliability floor are
    excluded: their near-wall stencils no longer resolve the layer.
    """
    floor = tau_reliability_floor(record) if tau_reliable is None else tau_reliable
    keep = record.tau > floor
    if not np.any(keep):
        keep = np.ones(len(record.tau), dtype=bool)
    per = np.column_stack([record.x[keep], record.min_uyy[keep],
                           record.max_uyy[keep]])
    out = CurvatureBounds(min_uyy=float(np.min(per[:, 1])),
                          max_uyy=float(np.max(per[:, 2])),
                          per_station=per)
    if profile is not None and flow is not None:
        pg0 = float(flow.pressure_gradient(0.0))
        inflow_max = float(np.max(profile.d2u))
        out.hypothesis_constant = bool(inflow_max <= 1.0 + 1e-9)
        xs = np.linspace(0.0, record.x_last(), 201)
        convex = bool(np.min(flow.pressure_second_derivative(xs)) >= -1e-12)
        out.hypothesis_general = bool(inflow_max <= pg0 + 1e-9 and convex)
    return out


def wall_curvature_extrapolated(state):
    """Near-wall limit of 0.5 sqrt(w) D2 w measured from interior nodes.

    Linear extrapolation to psi=0 from the first two interior nodes; the
    equation trace says this should equal p'(x).
    """
    from .vm import curvature_field
    curv = curvature_field(state)
    psi = state.grid.nodes
    p1, p2 = psi[1], psi[2]
    return float(curv[1] + (curv[1] - curv[2]) * p1 / (p2 - p1))


# ---------------------------------------------------------------------------
# Weighted-mass inequality
# ---------------------------------------------------------------------------

def weighted_mass_inequality(snapshots, flow, delta):
    """Discrete check of d/dx int w phi <= -2 p' int phi + (2/3) int w^{3/2} phi''.

    phi is the fixed quintic cutoff supported on [0, delta], identically 1
    on [0, delta/2].  Returns rows (x_mid, residual, scale); negative
    residuals satisfy the inequality.
    """
    if len(snapshots) < 2:
        raise ModelError("need at least two snapshots")
    grid = snapshots[0].grid
    psi = grid.nodes
    if delta > grid.psi_max:
        raise ModelError(f"delta={delta:g} exceeds psi_max={grid.psi_max:g}")
    t = (psi - delta / 2.0) / (delta / 2.0)
    phi = cutoff(t)
    phi_dd = cutoff_d2(t) * (2.0 / delta) ** 2

    int_phi = np.trapezoid(phi, psi)
    rows = []
    for a, b in zip(snapshots[:-1], snapshots[1:]):
        dxs = b.x - a.x
        if dxs <= 0:
            continue
        if dxs > delta * delta / 10.0:
            raise ModelError(
                f"snapshot spacing {dxs:g} too coarse for delta={delta:g} "
                f"(need < delta^2/10)")
        lhs = (np.trapezoid(b.w * phi, psi) - np.trapezoid(a.w * phi, psi)) / dxs
        x_mid = 0.5 * (a.x + b.x)
        w_mid = 0.5 * (a.w + b.w)
        pg = float(flow.pressure_gradient(x_mid))
        rhs = (-2.0 * pg * int_phi
               + (2.0 / 3.0) * np.trapezoid(np.maximum(w_mid, 0.0) ** 1.5 * phi_dd, psi))
        rows.append((x_mid, float(lhs - rhs), float(flow.U_squared(0.0)) * delta))
    if not rows:
        raise ModelError("no ordered snapshot pairs")
    return np.asarray(rows)


# ---------------------------------------------------------------------------
# Singular-expansion fit
# ---------------------------------------------------------------------------

@dataclass
class ExpansionFit:
    coefficients: tuple
    residual: float
    n_terms: int
    n_points: int


def goldstein_fit(record, xstar, n_terms=2, tau_reliable=None):
    """Linear least squares of tau against {s^{1/2}} or {s^{1/2}, s^{3/4}}
    with s = X* - x on the decaying branch."""
    if n_terms not in (1, 2):
        raise ModelError(f"n_terms must be 1 or 2, got {n_terms}")
    x, tau = _decaying_tail(record)
    floor = tau_reliability_floor(record) if tau_reliable is None else tau_reliable
    keep = (tau > floor) & (x < xstar)
    x, tau = x[keep], tau[keep]
    if len(x) < 20:
        raise FitError(f"need >= 20 usable stations, have {len(x)}")
    s = xstar - x
    if np.max(s) / np.min(s) < 10.0:
        raise FitError("stations span less than a decade in X* - x")
    cols = [s ** 0.5]
    if n_terms == 2:
        cols.append(s ** 0.75)
    basis = np.column_stack(cols)
    coef, res, rank, _ = np.linalg.lstsq(basis, tau, rcond=None)
    if rank < n_terms:
        raise FitError("rank-deficient basis: window too narrow")
    fitted = basis @ coef
    rms = float(np.sqrt(np.mean((fitted - tau) ** 2)))
    return ExpansionFit(coefficients=tuple(float(c) for c in coef),
                        residual=rms, n_terms=n_terms, n_points=len(x))


# ---------------------------------------------------------------------------
# Self-similar collapse
# ---------------------------------------------------------------------------

def selfsimilar_collapse(snapshots, xstar, lambdas, n_eta=201):
    """Rescale u_lambda(eta) = lambda^{-1/2} u(x* - lambda, lambda^{1/4} eta)
    and report max-norm differences between successive lambdas.

    Snapshots are matched to x* - lambda by nearest station.  Diagnostic
    only; a decreasing sequence indicates approach to a blow-up profile.
    """
    lambdas = sorted(float(l) for l in lambdas)
    if any(l <= 0 for l in lambdas):
        raise ModelError("lambdas must be positive")
    if xstar - max(lambdas) < 0:
        raise ModelError("lambda too large: x* - lambda < 0")
    xs = np.array([s.x for s in snapshots])
    curves = []
    for lam in lambdas:
        target = xstar - lam
        idx = int(np.argmin(np.abs(xs - target)))
        y, u = from_von_mises(snapshots[idx], 4097)
        curves.append((lam, y, u))
    eta_cap = min(y[-1] / lam ** 0.25 for lam, y, _ in curves)
    eta = np.linspace(0.0, eta_cap, int(n_eta))
    sampled = [lam ** -0.5 * np.interp(lam ** 0.25 * eta, y, u)
               for lam, y, u in curves]
    out = []
    for i in range(len(lambdas) - 1):
        diff = float(np.max(np.abs(sampled[i] - sampled[i + 1])))
        out.append(((lambdas[i], lambdas[i + 1]), diff))
    return out


# ---------------------------------------------------------------------------
# Cross-solver comparison
# ---------------------------------------------------------------------------

@dataclass
class SolverComparison:
    max_tau_rel_diff: float
    mean_tau_rel_diff: float
    xstar_vm: float | None
    xstar_phys: float | None
    xstar_rel_diff: float | None
    x_cut: float


def compare_solvers(record_vm, record_phys, tail_fraction=0.5):
    """Interpolate both wall-shear series to common stations and compare."""
    if record_vm.scenario_hash != record_phys.scenario_hash:
        raise ModelError(
            f"mismatched scenarios: {record_vm.scenario_hash!r} vs "
            f"{record_phys.scenario_hash!r}")
    xstar_vm = xstar_ph = None
    if record_vm.separated and record_phys.separated:
        xstar_vm = estimate_xstar(record_vm, tail_fraction).xstar
        xstar_ph = estimate_xstar(record_phys, tail_fraction).xstar
        x_cut = 0.9 * min(xstar_vm, xstar_ph)
    else:
        x_cut = min(record_vm.x_last(), record_phys.x_last())
    x_lo = max(record_vm.x[0], record_phys.x[0])
    xs = np.linspace(x_lo, x_cut, 400)
    tv = np.interp(xs, record_vm.x, record_vm.tau)
    tp = np.interp(xs, record_phys.x, record_phys.tau)
    denom = np.maximum(np.abs(tp), 1e-300)
    rel = np.abs(tv - tp) / denom
    xdiff = (abs(xstar_vm - xstar_ph) / xstar_vm
             if xstar_vm is not None else None)
    return SolverComparison(max_tau_rel_diff=float(np.max(rel)),
                            mean_tau_rel_diff=float(np.mean(rel)),
                            xstar_vm=xstar_vm, xstar_phys=xstar_ph,
                            xstar_rel_diff=xdiff, x_cut=float(x_cut))
