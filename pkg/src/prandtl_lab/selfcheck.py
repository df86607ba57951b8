"""Built-in validation battery behind `prandtl-lab validate`.

Each check is cheap (< seconds) and targets one load-bearing piece:
linear algebra, stencils, the transform roundtrip, exact stationarity,
manufactured convergence orders, and the similarity benchmark.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grids import PsiGrid
from .model import make_outer_flow
from .physical import blasius_profile, blasius_reference
from .vm import VMState, from_von_mises, march_step, to_von_mises

# regression constant frozen from this package's own shooting run
BLASIUS_FPP0 = 0.332057336

# test hook: `validate --inject-stencil-bug` sets this to a nonzero value
WALL_STENCIL_PERTURBATION = 0.0


@dataclass
class BatteryCheck:
    name: str
    passed: bool
    measured: float
    threshold: float
    note: str = ""


def _check_tridiag():
    rng = np.random.default_rng(7)
    n = 200
    lower = np.concatenate([[0.0], rng.uniform(0.1, 0.5, n - 1)])
    upper = np.concatenate([rng.uniform(0.1, 0.5, n - 1), [0.0]])
    diag = 2.0 + rng.uniform(0.0, 1.0, n)
    rhs = rng.standard_normal(n)
    x = kernels.tridiag_solve(lower, diag, upper, rhs)
    A = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
    err = float(np.max(np.abs(A @ x - rhs)))
    return BatteryCheck("tridiagonal_solve", err < 1e-10, err, 1e-10,
                        f"backend={kernels.BACKEND}")


def _check_wall_stencil():
    grid = PsiGrid(psi_max=1.0, n=256, grading=2.0)
    w = 2.0 * grid.nodes + grid.nodes ** 2
    state = VMState(x=0.0, w=w, grid=grid)
    got = state.wall_gradient() + WALL_STENCIL_PERTURBATION
    err = abs(got - 2.0)
    return BatteryCheck("wall_stencil_quadratic", err < 1e-8, err, 1e-8)


def _check_stationarity():
    grid = PsiGrid(psi_max=1.0, n=128, grading=2.0)
    flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
    state = VMState(x=0.0, w=grid.nodes.copy(), grid=grid)
    drift = 0.0
    w_ref = grid.nodes
    for _ in range(1000):
        state = march_step(state, flow, 1e-2, mode="semi_implicit")
        drift = max(drift, float(np.max(np.abs(state.w - w_ref))))
    return BatteryCheck("stationarity_linear", drift < 1e-12, drift, 1e-12)


def _manufactured_error(n, dx, grading, shape, picard):
    """Forced march against W(x, psi) = (1 - x/4) G(psi) up to x = 0.25."""
    if shape == "quadratic":
        G = lambda p: p + 0.5 * p * p
        d2G = lambda p: np.ones_like(p)
    else:
        G = lambda p: p + p ** 4 / 12.0
        d2G = lambda p: p * p
    flow = make_outer_flow(dpdx=1.0, x0=1e9)  # placeholder; top overridden
    grid = PsiGrid(psi_max=1.0, n=n, grading=grading)
    x_end = 0.25

    def W(x, p):
        return (1.0 - x / 4.0) * G(p)

    def source(x, p):
        return (-G(p) / 4.0
                - np.sqrt(W(x, p)) * (1.0 - x / 4.0) * d2G(p)
                + 2.0 * flow.pressure_gradient(x))

    state = VMState(x=0.0, w=W(0.0, grid.nodes), grid=grid)
    mode = "picard" if picard else "semi_implicit"
    while state.x < x_end - 1e-12:
        step = min(dx, x_end - state.x)
        state = march_step(state, flow, step, mode=mode, picard_kmax=30,
                           picard_tol=1e-13, source=source,
                           top_override=lambda x: W(x, grid.nodes[-1]))
    return float(np.max(np.abs(state.w - W(x_end, grid.nodes))))


def _check_x_order():
    errs = [_manufactured_error(128, dx, 1.0, "quadratic", picard=False)
            for dx in (0.025, 0.0125)]
    order = float(np.log2(errs[0] / errs[1]))
    return BatteryCheck("manufactured_x_order", order >= 0.9, order, 0.9)


def _check_psi_order():
    errs = [_manufactured_error(n, 1e-3, 1.0, "quartic", picard=True)
            for n in (32, 64)]
    order = float(np.log2(errs[0] / errs[1]))
    return BatteryCheck("manufactured_psi_order", order >= 1.8, order, 1.8)


def _check_blasius():
    ref = blasius_reference(eta_max=10.0, tol=1e-10)
    err = abs(ref.fpp0 - BLASIUS_FPP0)
    return BatteryCheck("blasius_shooting", err < 5e-6, err, 5e-6,
                        f"fpp0={ref.fpp0:.8f}")


def _check_roundtrip():
    ref = blasius_reference(eta_max=10.0, tol=1e-10)
    profile = blasius_profile(ref, x_a=1.0)
    flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
    grid = PsiGrid(psi_max=0.8 * profile.total_mass(), n=512, grading=2.0)
    state = to_von_mises(profile, grid, pgrad=0.0)
    y, u = from_von_mises(state, 2048)
    err = float(np.max(np.abs(u - profile.evaluate(y))))
    return BatteryCheck("transform_roundtrip", err < 1e-4, err, 1e-4)


def _check_similarity_march():
    ref = blasius_reference(eta_max=10.0, tol=1e-10)
    profile = blasius_profile(ref, x_a=1.0)
    flow = make_outer_flow(dpdx=0.0, u_ref=1.0)
    from .vm import auto_psi_max
    grid = PsiGrid(psi_max=auto_psi_max(profile, flow, 0.5), n=512, grading=2.0)
    state = to_von_mises(profile, grid, pgrad=0.0)
    drift = 0.0
    while state.x < 0.5 - 1e-12:
        state = march_step(state, flow, 2e-3, mode="picard")
        sim = state.tau_wall() * np.sqrt(state.x + 1.0) / ref.fpp0
        drift = max(drift, abs(sim - 1.0))
    return BatteryCheck("similarity_march", drift < 5e-3, drift, 5e-3)


def run_validation_battery(inject_stencil_bug=False):
    global WALL_STENCIL_PERTURBATION
    if inject_stencil_bug:
        WALL_STENCIL_PERTURBATION = 1e-3
    try:
        checks = [
            _check_tridiag(),
            _check_wall_stencil(),
            _check_stationarity(),
            _check_x_order(),
            _check_psi_order(),
            _check_blasius(),
            _check_roundtrip(),
            _check_similarity_march(),
        ]
    finally:
        WALL_STENCIL_PERTURBATION = 0.0
    return checks


def format_battery(checks):
    lines = [f"{'check':<26s} {'status':<6s} {'measured':>12s} {'threshold':>12s}  note"]
    for c in checks:
        status = "pass" if c.passed else "FAIL"
        lines.append(f"{c.name:<26s} {status:<6s} {c.measured:>12.4e} "
                     f"{c.threshold:>12.4e}  {c.note}")
    return "\n".join(lines)
