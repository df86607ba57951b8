"""Backend selection for the hot marching kernels.

Prefers the compiled extension `_kernels` (Cython); falls back to the
numpy/scipy twin `_kernels_py`.  Set PRANDTL_LAB_PURE_PYTHON=1 to force
the fallback (used by the benchmark and the parity tests).
"""

import os

if os.environ.get("PRANDTL_LAB_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND_NAME
tridiag_solve = _impl.tridiag_solve
vm_step_solve = _impl.vm_step_solve
phys_step_solve = _impl.phys_step_solve
