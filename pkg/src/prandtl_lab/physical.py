"""Physical-variable (x, y) marching solver and the Blasius reference.

Serves as the independent cross-validation oracle for the transformed
solver: implicit momentum step with lagged/Picard coefficients, normal
velocity recovered from continuity by trapezoid.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ModelError, SolverBreakdown, StepRejected
from .records import (INVARIANT_VIOLATION, REACHED_X_END, RunRecord,
                      SEPARATED, STEP_UNDERFLOW)


# ---------------------------------------------------------------------------
# Blasius similarity reference
# ---------------------------------------------------------------------------

@dataclass
class BlasiusReference:
    """Tables of the flat-plate similarity solution f''' + f f''/2 = 0."""

    fpp0: float
    eta: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray


def _integrate_blasius(fpp0, eta_max, n_steps):
    """Fixed-step RK4 for (f, f', f'') from the wall out to eta_max."""
    h = eta_max / n_steps
    out = np.empty((n_steps + 1, 3))
    f, fp, fpp = 0.0, 0.0, float(fpp0)
    out[0] = (f, fp, fpp)
    for i in range(n_steps):
        k1a, k1b, k1c = fp, fpp, -0.5 * f * fpp
        f2, p2, q2 = f + 0.5 * h * k1a, fp + 0.5 * h * k1b, fpp + 0.5 * h * k1c
        k2a, k2b, k2c = p2, q2, -0.5 * f2 * q2
        f3, p3, q3 = f + 0.5 * h * k2a, fp + 0.5 * h * k2b, fpp + 0.5 * h * k2c
        k3a, k3b, k3c = p3, q3, -0.5 * f3 * q3
        f4, p4, q4 = f + h * k3a, fp + h * k3b, fpp + h * k3c
        k4a, k4b, k4c = p4, q4, -0.5 * f4 * q4
        f += (h / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
        fp += (h / 6.0) * (k1b + 2 * k2b + 2 * k3b + k4b)
        fpp += (h / 6.0) * (k1c + 2 * k2c + 2 * k3c + k4c)
        out[i + 1] = (f, fp, fpp)
    return out


def blasius_reference(eta_max=10.0, tol=1e-12, n_steps=None):
    """Shooting solution: bisection on f''(0) against f'(eta_max) = 1."""
    if eta_max < 8.0:
        raise ModelError(f"eta_max must be >= 8 to reach the far field, got {eta_max}")
    if n_steps is None:
        n_steps = max(int(eta_max * 2000), 4000)

    lo, hi = 0.2, 0.5
    r_lo = _integrate_blasius(lo, eta_max, n_steps)[-1, 1] - 1.0
    r_hi = _integrate_blasius(hi, eta_max, n_steps)[-1, 1] - 1.0
    if r_lo * r_hi > 0:
        raise ModelError(
            f"shooting bracket failure: residuals {r_lo:g}, {r_hi:g} at [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        r_mid = _integrate_blasius(mid, eta_max, n_steps)[-1, 1] - 1.0
        if r_lo * r_mid <= 0:
            hi = mid
        else:
            lo, r_lo = mid, r_mid
    fpp0 = 0.5 * (lo + hi)

    table = _integrate_blasius(fpp0, eta_max, n_steps)
    eta = np.linspace(0.0, eta_max, n_steps + 1)
    ref = BlasiusReference(fpp0=fpp0, eta=eta, f=table[:, 0], fp=table[:, 1],
                           fpp=table[:, 2])
    if abs(ref.fp[-1] - 1.0) > 1e-8:
        raise ModelError(
            f"far-field check failed: f'(eta_max) = {ref.fp[-1]!r}")
    return ref


def blasius_profile(ref, x_a=1.0, n_points=8193):
    """Inflow WallProfile u0(y) = f'(y / sqrt(x_a)) for a unit outer flow."""
    from .model import WallProfile

    root = np.sqrt(x_a)
    k = np.arange(n_points, dtype=float)
    y = ref.eta[-1] * root * (k / (n_points - 1)) ** 2
    eta = y / root
    u = np.interp(eta, ref.eta, ref.fp)
    du = np.interp(eta, ref.eta, ref.fpp) / root
    # f''' = -f f''/2
    d2u = -0.5 * np.interp(eta, ref.eta, ref.f) * np.interp(eta, ref.eta, ref.fpp) / x_a
    return WallProfile(y=y, u=u, wall_slope=ref.fpp0 / root, far_field=1.0,
                       taylor_a2=0.0, taylor_a3=0.0, du=du, d2u=d2u,
                       label=f"blasius x_a={x_a:g}")


# ---------------------------------------------------------------------------
# Physical march
# ---------------------------------------------------------------------------

@dataclass
class PhysState:
    """Velocity samples on a uniform y grid at station x."""

    x: float
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    dx_last: float | None = None

    def wall_shear(self):
        h = self.y[1] - self.y[0]
        return float((-3.0 * self.u[0] + 4.0 * self.u[1] - self.u[2]) / (2.0 * h))


def march_step_physical(state, flow, dx, picard_kmax=8, picard_tol=1e-10):
    """One implicit momentum step; v recovered from continuity.

    Rejects (StepRejected) when interior positivity of u is lost, which
    signals proximity to separation.
    """
    if dx <= 0:
        raise ModelError(f"dx must be positive, got {dx}")
    y = state.y
    h = float(y[1] - y[0])
    x_new = state.x + dx
    top = float(flow.U(x_new))
    pg = float(flow.pressure_gradient(x_new))

    u_old = state.u
    u_k = u_old
    v_k = state.v
    for _ in range(max(int(picard_kmax), 1)):
        u_new = kernels.phys_step_solve(u_old, u_k, v_k, h, dx, pg, top)
        dudx = (u_new - u_old) / dx
        v_new = -np.concatenate(
            [[0.0], np.cumsum(0.5 * (dudx[1:] + dudx[:-1]) * h)])
        delta = float(np.max(np.abs(u_new - u_k)))
        u_k, v_k = u_new, v_new
        if delta < picard_tol:
            break

    if not np.all(np.isfinite(u_k)):
        raise SolverBreakdown("physical step produced non-finite state")
    if float(np.min(u_k[1:-1])) <= 0.0:
        j = int(np.argmin(u_k[1:-1])) + 1
        raise StepRejected(f"positivity lost at y={y[j]:g}")
    return PhysState(x=x_new, y=y, u=u_k, v=v_k, dx_last=dx)


def initial_phys_state(profile, y_max=None, n_y=2048):
    """Sample the inflow profile on the solver's uniform grid."""
    if y_max is None:
        u99 = 0.99 * profile.far_field
        idx = int(np.argmax(profile.u >= u99))
        if profile.u[idx] < u99:
            raise ModelError("profile never reaches 99% of the far field")
        y_max = 3.0 * float(profile.y[idx])
    y = np.linspace(0.0, y_max, int(n_y) + 1)
    u = profile.evaluate(y)
    u[0] = 0.0
    return PhysState(x=0.0, y=y, u=u, v=np.zeros_like(y))


def _phys_station_row(state, flow, k0, dx):
    y, u = state.y, state.u
    h = float(y[1] - y[0])
    tau = state.wall_shear()
    uyy = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
    # wall trace of the momentum equation pins d2u/dy2(0) = p'(x)
    pg = float(flow.pressure_gradient(state.x))
    min_uyy = min(float(np.min(uyy)), pg)
    max_uyy = max(float(np.max(uyy)), pg)
    mass = np.concatenate([[0.0], np.cumsum(0.5 * (u[1:] + u[:-1]) * h)])
    du = np.gradient(u, h)
    sel = mass <= k0
    margin = float(np.min(2.0 * du[sel])) if np.any(sel) else 2.0 * tau
    return (state.x, tau, min_uyy, max_uyy, margin, dx)


def run_physical(profile, flow, controls, y_max=None, n_y=2048):
    """Mirror of the transformed-solver march in physical variables."""
    state = initial_phys_state(profile, y_max=y_max, n_y=n_y)
    k0 = controls.margin_k0 or profile.total_mass() / 8.0

    rows = [_phys_station_row(state, flow, k0, 0.0)]
    tau0 = rows[0][1]
    snapshots = [state]
    last_snap_tau = tau0
    pending_xs = list(controls.snapshot_xs)

    dx = controls.dx0
    streak = 0
    recent = [tau0]
    termination = None

    for _ in range(controls.max_steps):
        if state.x >= controls.x_end - 1e-15:
            termination = REACHED_X_END
            break
        step = min(dx, controls.x_end - state.x)
        try:
            new_state = march_step_physical(state, flow, step,
                                            picard_kmax=controls.picard_kmax,
                                            picard_tol=controls.picard_tol)
            tau_new = new_state.wall_shear()
            tau_old = rows[-1][1]
            if abs(tau_new - tau_old) > controls.tau_jump_rel * abs(tau_old) + 1e-15:
                raise StepRejected("wall-shear jump")
        except StepRejected:
            dx *= 0.5
            streak = 0
            if dx < controls.dx_min:
                decreasing = len(recent) >= 2 and recent[-1] < recent[0]
                termination = SEPARATED if decreasing else STEP_UNDERFLOW
                break
            continue
        except SolverBreakdown:
            termination = INVARIANT_VIOLATION
            break

        state = new_state
        rows.append(_phys_station_row(state, flow, k0, step))
        recent.append(rows[-1][1])
        if len(recent) > 5:
            recent.pop(0)
        streak += 1
        if streak >= controls.grow_after:
            dx = min(dx * controls.grow_factor, controls.dx0)
            streak = 0

        tau_new = rows[-1][1]
        while pending_xs and state.x >= pending_xs[0]:
            if snapshots[-1] is not state:
                snapshots.append(state)
            last_snap_tau = tau_new
            pending_xs.pop(0)
        if controls.snapshot_tau_ratio is not None:
            r = controls.snapshot_tau_ratio
            moved = (tau_new <= r * last_snap_tau
                     or abs(tau_new) * r >= abs(last_snap_tau) > 0)
            if moved and snapshots[-1] is not state:
                snapshots.append(state)
                last_snap_tau = tau_new

        if tau_new < controls.tau_stop_rel * tau0:
            termination = SEPARATED
            break
    else:
        termination = INVARIANT_VIOLATION

    meta = {
        "y_max": float(state.y[-1]),
        "n_y": int(len(state.y) - 1),
        "pgrad0": float(flow.pressure_gradient(0.0)),
        "u0_squared": float(flow.U_squared(0.0)),
    }
    return RunRecord(np.asarray(rows), termination, solver="physical",
                     snapshots=snapshots, meta=meta)
