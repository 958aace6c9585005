"""Vectorized reference implementations of the pointwise solver kernels."""

import numpy as np


def residual_values(fxx, fyy, fxy, target):
    return (1.0 + fxx) * (1.0 + fyy) - fxy * fxy - target


def linear_apply(a, b, d, vxx, vyy, vxy):
    return b * vxx + a * vyy - 2.0 * d * vxy


def trial_mins(fxx, fyy, fxy, dxx, dyy, dxy, s):
    a = 1.0 + fxx + s * dxx
    b = 1.0 + fyy + s * dyy
    d = fxy + s * dxy
    nu = a * b - d * d
    return float(a.min()), float(b.min()), float(nu.min())


def trial_residual_sup(fxx, fyy, fxy, dxx, dyy, dxy, target, s):
    a = 1.0 + fxx + s * dxx
    b = 1.0 + fyy + s * dyy
    d = fxy + s * dxy
    return float(np.abs(a * b - d * d - target).max())


def sup_abs(values):
    return float(np.abs(values).max())
