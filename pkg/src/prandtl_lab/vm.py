"""Von Mises march: dw/dx = sqrt(w) d2w/dpsi2 - 2 p'(x) on a graded psi grid.

w = u^2 as a function of the stream function psi; the wall shear is
tau = 0.5 * dw/dpsi at psi = 0.  The march is implicit in x with the
degenerate coefficient sqrt(max(w,0)) frozen (semi_implicit) or
Picard-updated (picard), one tridiagonal solve per iteration.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import (InsufficientMassError, ModelError, SolverBreakdown,
                     StepRejected)
from .grids import PsiGrid
from .records import (INVARIANT_VIOLATION, REACHED_X_END, RunRecord,
                      SEPARATED, STEP_UNDERFLOW)

SNAPSHOT_HEADER = "# prandtl-vm-snapshot v1"

# state contract tolerances
NEGATIVITY_TOL = -1e-8             # absolute floor for w
MONOTONICITY_TOL_REL = -1e-10      # times U(0)^2
CEILING_TOL = 1e-8                 # w <= U(x)^2 + this


@dataclass
class VMState:
    """Transformed unknown w on a PsiGrid at station x.

    pgrad is p'(x) at the station; it supplies the exact wall limit of the
    curvature field (the wall trace of the equation).
    """

    x: float
    w: np.ndarray
    grid: PsiGrid
    pgrad: float = 0.0
    dx_last: float | None = None

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.shape != self.grid.nodes.shape:
            raise ModelError("w and grid shapes differ")

    def wall_gradient(self):
        """dw/dpsi at the wall: one-sided second-order stencil."""
        c0, c1, c2 = self.grid.wall_stencil()
        return float(c0 * self.w[0] + c1 * self.w[1] + c2 * self.w[2])

    def tau_wall(self):
        return 0.5 * self.wall_gradient()


def wall_gradient(state):
    return state.wall_gradient()


def check_state_invariants(state, u0_squared):
    """Return None if state satisfies the contract, else a reason string."""
    w = state.w
    if not np.all(np.isfinite(w)):
        return "non-finite values"
    if w[0] != 0.0:
        return f"wall value {w[0]!r} != 0"
    wmin = float(np.min(w))
    if wmin < NEGATIVITY_TOL:
        return f"negativity {wmin:.3e}"
    dmin = float(np.min(np.diff(w)))
    if dmin < MONOTONICITY_TOL_REL * u0_squared:
        return f"monotonicity {dmin:.3e}"
    return None


# ---------------------------------------------------------------------------
# Transform
# ---------------------------------------------------------------------------

def to_von_mises(profile, grid, pgrad=None):
    """Initial VMState at x=0: w(psi_j) = u0(y(psi_j))^2.

    y(psi) inverts the cumulative mass of the profile (wall-Taylor plus
    per-cell cubic inversion).
    """
    if grid.psi_max > profile.total_mass() * (1 + 1e-12):
        raise InsufficientMassError(
            f"insufficient mass: psi_max={grid.psi_max:g} exceeds "
            f"profile mass {profile.total_mass():g}")
    if np.any(np.diff(profile.mass()) < 0):
        raise ModelError("profile cumulative mass is not monotone")
    y = profile.y_at_mass(grid.nodes)
    u = profile.evaluate(y)
    w = u * u
    w[0] = 0.0
    if pgrad is None:
        pgrad = profile.taylor_a2
    return VMState(x=0.0, w=w, grid=grid, pgrad=float(pgrad))


def from_von_mises(state, n_y):
    """Invert back to physical variables: sampled u on a uniform y grid.

    y(psi) integrates dpsi/sqrt(w) with w piecewise linear per cell, which
    handles the integrable sqrt singularity at the wall in closed form.
    """
    w = state.w
    psi = state.grid.nodes
    if np.any(w[1:] <= 0.0):
        j = int(np.argmax(w[1:] <= 0.0)) + 1
        raise ModelError(f"w <= 0 at interior node {j}; inversion refused")
    g = state.wall_gradient()
    if g <= 1e-12 * max(w[-1] / max(psi[-1], 1e-300), 1e-300):
        raise ModelError("wall gradient ~ 0: y(psi) integral diverges")
    sw = np.sqrt(w)
    dy = 2.0 * np.diff(psi) / (sw[1:] + sw[:-1])
    y_nodes = np.concatenate([[0.0], np.cumsum(dy)])
    y_out = np.linspace(0.0, y_nodes[-1], int(n_y))
    u_out = np.interp(y_out, y_nodes, sw)
    return y_out, u_out


def auto_psi_max(profile, flow, x_horizon, deficit_rel=1e-3, margin_factor=4.0):
    """Domain height in psi: initial-deficit edge plus diffusive headroom.

    The edge is where w0 reaches (1 - deficit_rel) U(0)^2; the headroom
    margin_factor * sqrt(U(0) * x_horizon) keeps the pinned Dirichlet top
    clear of the deficit spreading upward during the march.
    """
    U0 = float(flow.U(0.0))
    target = U0 * np.sqrt(1.0 - deficit_rel)
    idx = np.argmax(profile.u >= target)
    if profile.u[idx] < target:
        raise InsufficientMassError("profile never reaches the far-field band")
    M = profile.mass()
    edge = float(M[idx])
    psi_max = edge + margin_factor * np.sqrt(U0 * max(x_horizon, 0.0))
    available = profile.total_mass()
    if psi_max > available:
        if edge > available:
            raise InsufficientMassError("profile too short for auto psi_max")
        psi_max = available
    return psi_max


# ---------------------------------------------------------------------------
# Marching
# ---------------------------------------------------------------------------

def march_step(state, flow, dx, mode="semi_implicit", picard_kmax=8,
               picard_tol=1e-10, source=None, top_override=None):
    """Advance one station; raises StepRejected if the result violates the
    state contract (caller halves dx), SolverBreakdown on solver failure.

    source(x, psi) -> array adds a forcing term (manufactured problems);
    top_override (float or callable of x) replaces the U(x)^2 top boundary.
    """
    if dx <= 0:
        raise ModelError(f"dx must be positive, got {dx}")
    if mode not in ("semi_implicit", "picard"):
        raise ModelError(f"unknown mode {mode!r}")
    x_new = state.x + dx
    grid = state.grid
    lo_c, mid_c, hi_c = grid.d2_coeffs()
    psi_int = grid.nodes[1:-1]

    if top_override is None:
        top = float(flow.U_squared(x_new))
    elif callable(top_override):
        top = float(top_override(x_new))
    else:
        top = float(top_override)

    pg_new = float(flow.pressure_gradient(x_new))
    rhs = np.full(grid.n - 1, -2.0 * pg_new)
    if source is not None:
        rhs = rhs + source(x_new, psi_int)

    w_old = state.w
    w_iter = w_old
    n_sweeps = 1 if mode == "semi_implicit" else max(int(picard_kmax), 1)
    for _ in range(n_sweeps):
        a = np.sqrt(np.maximum(w_iter[1:-1], 0.0))
        w_new = kernels.vm_step_solve(w_old, a, lo_c, mid_c, hi_c, dx, rhs, top)
        if mode == "semi_implicit":
            w_iter = w_new
            break
        delta = float(np.max(np.abs(w_new - w_iter)))
        w_iter = w_new
        if delta < picard_tol:
            break

    u0_sq = float(flow.U_squared(0.0))
    reason = _step_violation(w_iter, u0_sq, top)
    if reason is not None:
        raise StepRejected(reason)
    return VMState(x=x_new, w=w_iter, grid=grid, pgrad=pg_new, dx_last=dx)


def _step_violation(w, u0_sq, top):
    if not np.all(np.isfinite(w)):
        raise SolverBreakdown("step produced non-finite state")
    wmin = float(np.min(w))
    if wmin < NEGATIVITY_TOL:
        return f"negativity: min w = {wmin:.3e}"
    dmin = float(np.min(np.diff(w)))
    if dmin < MONOTONICITY_TOL_REL * u0_sq:
        return f"monotonicity: min dw = {dmin:.3e}"
    if float(np.max(w)) > max(u0_sq, top) + CEILING_TOL:
        return f"ceiling: max w = {np.max(w):.6e} > U^2"
    return None


def curvature_field(state):
    """Sampled d2u/dy2 = 0.5 sqrt(w) d2w/dpsi2 along the grid.

    At the wall the equation trace pins the limit to p'(x); the top node
    copies its interior neighbour (the Dirichlet row carries no stencil).
    """
    w = state.w
    grid = state.grid
    interior = 0.5 * np.sqrt(np.maximum(w[1:-1], 0.0)) * grid.second_difference(w)
    out = np.empty_like(w)
    out[0] = state.pgrad
    out[1:-1] = interior
    out[-1] = interior[-1]
    return out


def continuation_margin(state, k0):
    """Discrete inf of dw/dpsi over psi in [0, k0] (extension criterion)."""
    grid = state.grid
    if k0 > grid.psi_max:
        raise ModelError(f"k0={k0:g} exceeds psi_max={grid.psi_max:g}")
    grads = [state.wall_gradient()]
    cg = grid.centered_gradient(state.w)
    m = grid.nodes[1:-1] <= k0
    if np.any(m):
        grads.append(float(np.min(cg[m])))
    return float(min(grads))


@dataclass
class MarchControls:
    """Adaptive-step controls for march_until_separation / run_physical."""

    dx0: float
    dx_min: float
    tau_stop_rel: float
    x_end: float
    snapshot_xs: tuple = ()
    mode: str = "picard"
    picard_kmax: int = 8
    picard_tol: float = 1e-10
    tau_jump_rel: float = 0.04     # max relative wall-shear change per step
    grow_after: int = 10
    grow_factor: float = 1.2
    margin_k0: float | None = None
    snapshot_tau_ratio: float | None = 0.97
    max_steps: int = 2_000_000

    def __post_init__(self):
        for name in ("dx0", "dx_min", "tau_stop_rel"):
            val = getattr(self, name)
            if val is None or val <= 0:
                raise ModelError(f"controls must be positive: {name}={val}")
        if self.x_end <= 0:
            raise ModelError(f"x_end must be positive, got {self.x_end}")
        self.snapshot_xs = tuple(sorted(float(v) for v in self.snapshot_xs))


def march_until_separation(initial, flow, controls):
    """Adaptive march: halve dx on rejection, grow after sustained
    acceptance, stop on wall-shear collapse, dx underflow, or x_end.

    Returns a RunRecord whose stations carry (x, tau, min/max d2u/dy2,
    continuation margin, dx) and whose snapshots hold stored VMStates.
    """
    state = initial
    k0 = controls.margin_k0 or state.grid.psi_max / 8.0
    u0sq = float(flow.U_squared(0.0))

    def station_row(st, dx):
        curv = curvature_field(st)
        return (st.x, st.tau_wall(), float(np.min(curv)), float(np.max(curv)),
                continuation_margin(st, k0), dx)

    rows = [station_row(state, 0.0)]
    tau0 = rows[0][1]
    snapshots = [state]
    last_snap_tau = tau0
    pending_xs = list(controls.snapshot_xs)

    dx = controls.dx0
    streak = 0
    termination = None
    recent = [tau0]

    for _ in range(controls.max_steps):
        if state.x >= controls.x_end - 1e-15:
            termination = REACHED_X_END
            break
        step = min(dx, controls.x_end - state.x)
        try:
            new_state = march_step(state, flow, step, mode=controls.mode,
                                   picard_kmax=controls.picard_kmax,
                                   picard_tol=controls.picard_tol)
            tau_new = new_state.tau_wall()
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

        reason = check_state_invariants(new_state, u0sq)
        if reason is not None:
            termination = INVARIANT_VIOLATION
            break

        state = new_state
        rows.append(station_row(state, step))
        recent.append(state.tau_wall())
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
        termination = INVARIANT_VIOLATION  # ran out of steps: treat as a bug

    grid = initial.grid
    meta = {
        "psi1": float(grid.nodes[1]),
        "psi_max": float(grid.psi_max),
        "n": int(grid.n),
        "grading": float(grid.grading),
        "pgrad0": float(flow.pressure_gradient(0.0)),
        "u0_squared": u0sq,
    }
    return RunRecord(np.asarray(rows), termination, solver="vm",
                     snapshots=snapshots, meta=meta)


# ---------------------------------------------------------------------------
# Snapshot I/O
# ---------------------------------------------------------------------------

def write_snapshot(state, path):
    psi = state.grid.nodes
    grad = np.empty_like(psi)
    grad[0] = state.wall_gradient()
    grad[1:-1] = state.grid.centered_gradient(state.w)
    grad[-1] = (state.w[-1] - state.w[-2]) / (psi[-1] - psi[-2])
    with open(path, "w") as fh:
        fh.write(f"{SNAPSHOT_HEADER} x={float(state.x)!r}\n")
        fh.write(f"# pgrad={float(state.pgrad)!r}\n")
        for p, w, g in zip(psi, state.w, grad):
            fh.write(f"{float(p)!r} {float(w)!r} {float(g)!r}\n")


def read_snapshot(path):
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith(SNAPSHOT_HEADER):
            raise ModelError(f"not a snapshot file (header {first!r})")
        x = float(first.split("x=", 1)[1])
        pgrad = 0.0
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "pgrad=" in line:
                    pgrad = float(line.split("pgrad=", 1)[1])
                continue
            rows.append([float(tok) for tok in line.split()])
    arr = np.asarray(rows)
    grid = PsiGrid.from_nodes(arr[:, 0])
    return VMState(x=x, w=arr[:, 1], grid=grid, pgrad=pgrad)
