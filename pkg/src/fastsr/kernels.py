"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``FSR_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

IMPLEMENTATIONS = {"python": _kernels_py}
if _compiled is not None:
    IMPLEMENTATIONS["cython"] = _compiled

if _compiled is not None and os.environ.get("FSR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    BACKEND = "cython"
else:
    BACKEND = "python"
_impl = IMPLEMENTATIONS[BACKEND]

__all__ = [
    "BACKEND",
    "IMPLEMENTATIONS",
    "alias_solve",
    "alias_solve_identity",
    "vector_shrink",
    "soft_threshold",
]


def _c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def alias_solve(otf, psi, rhs, ml, nl, dr, dc, two_tau, impl=None):
    impl = impl or _impl
    return impl.alias_solve(_c128(otf), psi, _c128(rhs), ml, nl, dr, dc, float(two_tau))


def alias_solve_identity(otf, rhs, ml, nl, dr, dc, two_tau, impl=None):
    impl = impl or _impl
    return impl.alias_solve_identity(_c128(otf), _c128(rhs), ml, nl, dr, dc, float(two_tau))


def vector_shrink(nu_h, nu_v, threshold, impl=None):
    return (impl or _impl).vector_shrink(nu_h, nu_v, float(threshold))


def soft_threshold(nu, threshold, impl=None):
    return (impl or _impl).soft_threshold(nu, float(threshold))
