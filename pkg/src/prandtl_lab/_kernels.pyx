# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled marching kernels: tridiagonal assembly + Thomas solves.

Mirrors `_kernels_py`; one of the two is selected at import time by
`kernels`.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


class _Breakdown(Exception):
    pass


cdef int _thomas(double[::1] lower, double[::1] diag, double[::1] upper,
                 double[::1] rhs, double[::1] out, double[::1] cp,
                 double[::1] dp) except -1:
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double piv, m
    piv = diag[0]
    if piv == 0.0:
        raise _Breakdown("zero pivot at row 0")
    cp[0] = upper[0] / piv
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i] * cp[i - 1]
        if piv == 0.0:
            raise _Breakdown("zero pivot")
        m = 1.0 / piv
        cp[i] = upper[i] * m
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) * m
    out[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
    return 0


def tridiag_solve(lower, diag, upper, rhs):
    """Solve the tridiagonal system; lower[i] multiplies x[i-1] in row i."""
    from .errors import SolverBreakdown
    cdef cnp.ndarray[double, ndim=1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] di = np.ascontiguousarray(diag, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] rh = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = di.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] cp = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] dp = np.empty(n)
    try:
        _thomas(lo, di, up, rh, out, cp, dp)
    except _Breakdown as exc:
        raise SolverBreakdown(str(exc)) from exc
    if not np.all(np.isfinite(out)):
        raise SolverBreakdown("tridiagonal solve produced non-finite values")
    return out


def vm_step_solve(w, a, lo_c, mid_c, hi_c, double dx, source, double top):
    """One implicit step of dw/dx = a * D2 w + source; w(0)=0, w(N)=top."""
    from .errors import SolverBreakdown
    cdef cnp.ndarray[double, ndim=1] w_ = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] a_ = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] lo_ = np.ascontiguousarray(lo_c, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] mid_ = np.ascontiguousarray(mid_c, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] hi_ = np.ascontiguousarray(hi_c, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] src_ = np.ascontiguousarray(source, dtype=np.float64)
    cdef Py_ssize_t n1 = w_.shape[0]
    cdef cnp.ndarray[double, ndim=1] lower = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] diag = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] upper = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] rhs = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] cp = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] dp = np.empty(n1)
    cdef Py_ssize_t j
    cdef double inv_dx = 1.0 / dx
    lower[0] = 0.0
    diag[0] = 1.0
    upper[0] = 0.0
    rhs[0] = 0.0
    for j in range(1, n1 - 1):
        diag[j] = inv_dx - a_[j - 1] * mid_[j - 1]
        lower[j] = -a_[j - 1] * lo_[j - 1]
        upper[j] = -a_[j - 1] * hi_[j - 1]
        rhs[j] = w_[j] * inv_dx + src_[j - 1]
    lower[n1 - 1] = 0.0
    diag[n1 - 1] = 1.0
    upper[n1 - 1] = 0.0
    rhs[n1 - 1] = top
    try:
        _thomas(lower, diag, upper, rhs, out, cp, dp)
    except _Breakdown as exc:
        raise SolverBreakdown(str(exc)) from exc
    if not np.all(np.isfinite(out)):
        raise SolverBreakdown("vm step produced non-finite values")
    out[0] = 0.0
    out[n1 - 1] = top
    return out


def phys_step_solve(u_old, u_coef, v_coef, double hy, double dx, double pgrad,
                    double top):
    """One implicit step of the physical-variable momentum equation."""
    from .errors import SolverBreakdown
    cdef cnp.ndarray[double, ndim=1] u_ = np.ascontiguousarray(u_old, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] uc = np.ascontiguousarray(u_coef, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] vc = np.ascontiguousarray(v_coef, dtype=np.float64)
    cdef Py_ssize_t n1 = u_.shape[0]
    cdef cnp.ndarray[double, ndim=1] lower = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] diag = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] upper = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] rhs = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] cp = np.empty(n1)
    cdef cnp.ndarray[double, ndim=1] dp = np.empty(n1)
    cdef Py_ssize_t j
    cdef double inv_dx = 1.0 / dx
    cdef double inv_h2 = 1.0 / (hy * hy)
    cdef double inv_2h = 0.5 / hy
    lower[0] = 0.0
    diag[0] = 1.0
    upper[0] = 0.0
    rhs[0] = 0.0
    for j in range(1, n1 - 1):
        diag[j] = uc[j] * inv_dx + 2.0 * inv_h2
        lower[j] = -vc[j] * inv_2h - inv_h2
        upper[j] = vc[j] * inv_2h - inv_h2
        rhs[j] = uc[j] * u_[j] * inv_dx - pgrad
    lower[n1 - 1] = 0.0
    diag[n1 - 1] = 1.0
    upper[n1 - 1] = 0.0
    rhs[n1 - 1] = top
    try:
        _thomas(lower, diag, upper, rhs, out, cp, dp)
    except _Breakdown as exc:
        raise SolverBreakdown(str(exc)) from exc
    if not np.all(np.isfinite(out)):
        raise SolverBreakdown("physical step produced non-finite values")
    out[0] = 0.0
    out[n1 - 1] = top
    return out
