"""Pure numpy/scipy implementations of the hot marching kernels.

Same call signatures as the compiled module `_kernels`; selected at import
time by `kernels` when the extension is unavailable (or forced via
PRANDTL_LAB_PURE_PYTHON=1).
"""

import numpy as np
from scipy.linalg import solve_banded

from .errors import SolverBreakdown

BACKEND_NAME = "python"


def _solve(lower, diag, upper, rhs):
    n = len(diag)
    ab = np.empty((3, n))
    ab[0, 0] = 0.0
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    ab[2, -1] = 0.0
    try:
        x = solve_banded((1, 1), ab, rhs, overwrite_ab=True, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise SolverBreakdown(f"tridiagonal solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverBreakdown("tridiagonal solve produced non-finite values")
    return x


def tridiag_solve(lower, diag, upper, rhs):
    """Solve the tridiagonal system; lower[i] multiplies x[i-1] in row i."""
    return _solve(np.asarray(lower, float), np.asarray(diag, float),
                  np.asarray(upper, float), np.asarray(rhs, float))


def vm_step_solve(w, a, lo_c, mid_c, hi_c, dx, source, top):
    """One implicit step of dw/dx = a * D2 w + source with w(0)=0, w(N)=top.

    `a` holds the (frozen or Picard-updated) diffusion coefficient at
    interior nodes; lo_c/mid_c/hi_c are the grid's second-difference weights.
    """
    n1 = len(w)
    lower = np.zeros(n1)
    diag = np.ones(n1)
    upper = np.zeros(n1)
    rhs = np.zeros(n1)
    diag[1:-1] = 1.0 / dx - a * mid_c
    lower[1:-1] = -a * lo_c
    upper[1:-1] = -a * hi_c
    rhs[1:-1] = w[1:-1] / dx + source
    rhs[0] = 0.0
    rhs[-1] = top
    out = _solve(lower, diag, upper, rhs)
    # the boundary rows are identities; pin them exactly
    out[0] = 0.0
    out[-1] = top
    return out


def phys_step_solve(u_old, u_coef, v_coef, hy, dx, pgrad, top):
    """One implicit step of the physical-variable momentum equation.

    u_coef*(u' - u_old)/dx + v_coef * Dy u' - Dyy u' + pgrad = 0 on a
    uniform grid with u'(0)=0 and u'(ymax)=top.
    """
    n1 = len(u_old)
    lower = np.zeros(n1)
    diag = np.ones(n1)
    upper = np.zeros(n1)
    rhs = np.zeros(n1)
    inv_h2 = 1.0 / (hy * hy)
    inv_2h = 0.5 / hy
    diag[1:-1] = u_coef[1:-1] / dx + 2.0 * inv_h2
    lower[1:-1] = -v_coef[1:-1] * inv_2h - inv_h2
    upper[1:-1] = v_coef[1:-1] * inv_2h - inv_h2
    rhs[1:-1] = u_coef[1:-1] * u_old[1:-1] / dx - pgrad
    rhs[0] = 0.0
    rhs[-1] = top
    out = _solve(lower, diag, upper, rhs)
    out[0] = 0.0
    out[-1] = top
    return out
