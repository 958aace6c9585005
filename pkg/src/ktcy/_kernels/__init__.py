"""Pointwise solver kernels with a compiled core and a numpy fallback.

The Cython extension is preferred when it imported cleanly; set the
environment variable KTCY_PURE_PYTHON=1 (before import) or call
``use_backend("numpy")`` to force the fallback. Both implementations are
kept semantically identical and are compared in the test suite and in
benchmarks/bench_kernels.py.
"""

import os

from . import _numpy

_BACKENDS = {"numpy": _numpy}

if not os.environ.get("KTCY_PURE_PYTHON"):
    try:
        from . import _core

        _BACKENDS["cython"] = _core
    except ImportError:
        pass

_impl = _BACKENDS.get("cython", _numpy)


def available_backends():
    return sorted(_BACKENDS)


def backend_name():
    return "cython" if _impl is _BACKENDS.get("cython") else "numpy"


def use_backend(name):
    global _impl
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}, available: {available_backends()}")
    _impl = _BACKENDS[name]


def residual_values(fxx, fyy, fxy, target):
    """(1 + fxx)(1 + fyy) - fxy^2 - target."""
    return _impl.residual_values(fxx, fyy, fxy, target)


def linear_apply(a, b, d, vxx, vyy, vxy):
    """b*vxx + a*vyy - 2*d*vxy, the Monge-Ampere linearization."""
    return _impl.linear_apply(a, b, d, vxx, vyy, vxy)


def trial_mins(fxx, fyy, fxy, dxx, dyy, dxy, s):
    """min(A), min(B), min(nu) of the trial metric at step length s."""
    return _impl.trial_mins(fxx, fyy, fxy, dxx, dyy, dxy, s)


def trial_residual_sup(fxx, fyy, fxy, dxx, dyy, dxy, target, s):
    """sup-norm residual of the trial potential at step length s."""
    return _impl.trial_residual_sup(fxx, fyy, fxy, dxx, dyy, dxy, target, s)


def sup_abs(values):
    return _impl.sup_abs(values)
