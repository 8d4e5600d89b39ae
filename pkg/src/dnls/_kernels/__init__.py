"""Hot loops, compiled when available.

The Cython extension is preferred; set ``DNLS_PURE_PYTHON=1`` to force the
pure-Python fallback. ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

if os.environ.get("DNLS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"
    else:
        BACKEND = "cython"


def get_backend(name: str | None = None):
    """Return a kernel module by name (``"cython"``/``"python"``) or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def tridiag_solve(a, b, c, d, backend=None):
    k = get_backend(backend)
    f = lambda v: np.ascontiguousarray(v, dtype=np.float64)  # noqa: E731
    x, piv = k.tridiag_solve(f(a), f(b), f(c), f(d))
    return np.asarray(x, dtype=np.float64), float(piv)


def iterate_map(z0, psi0, c, E, steps, bound, backend=None):
    k = get_backend(backend)
    return k.iterate_map(float(z0), float(psi0), float(c), float(E), int(steps), float(bound))


def transfer_trace(psi, c, E, backend=None):
    k = get_backend(backend)
    m, e = k.transfer_trace(np.ascontiguousarray(psi, dtype=np.float64), float(c), float(E))
    return float(m), int(e)


def greedy_cluster(points, tol, backend=None):
    k = get_backend(backend)
    return k.greedy_cluster(np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2), float(tol))


__all__ = ["BACKEND", "get_backend", "tridiag_solve", "iterate_map", "transfer_trace", "greedy_cluster"]
