"""Reduction of the invariant Calabi-Yau equation to scalar Monge-Ampere form.

A single zero-mean potential phi generates the compatible pair
(f2, f4) = (phi_x, phi_y); the reduced metric data are

    A = 1 + phi_xx,  B = 1 + phi_yy,  D = phi_xy,  nu = AB - D^2,

and the equation to solve is nu = e^(F + c). This module holds the
pointwise algebra around that reduction: residual, trace u = A + B, the
flat and metric Laplacians, the interior identity

    lap~ u = lap log nu + (1/nu) (nu_x^2/nu + nu_y^2/nu
             + 2(-f2_xx f2_yy + f2_yx^2 - f4_yy f4_xx + f4_yx^2)),

whose discrete defect is a sharp aliasing diagnostic, the minimum-principle
margin min(lap~ u) - min(lap F), and reconstruction of the full invariant
1-form and 4x4 metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateMetric, NotPositiveDefinite
from .frame_calculus import (
    InvariantOneForm,
    InvariantTwoForm,
    cohomology_coeffs,
)
from .torus_grid import (
    Grid,
    TorusField,
    _wavenumbers,
    derivative,
    deriv_values,
    integrate,
    second_deriv_values,
)


@dataclass(frozen=True)
class Potential:
    """Zero-mean scalar generating the solution via (f2, f4) = (phi_x, phi_y)."""

    phi: TorusField

    def __post_init__(self):
        m = integrate(self.phi)
        if abs(m) > 1e-12:
            raise ValueError(f"potential mean {m:.3e} exceeds 1e-12")

    @classmethod
    def from_field(cls, f: TorusField) -> "Potential":
        return cls(TorusField._own(f.grid, f.values - f.values.mean()))

    @classmethod
    def zero(cls, grid: Grid) -> "Potential":
        return cls(TorusField._own(grid, np.zeros((grid.n, grid.n))))

    @property
    def grid(self) -> Grid:
        return self.phi.grid


@dataclass(frozen=True)
class ReducedMetric:
    A: TorusField
    B: TorusField
    D: TorusField
    nu: TorusField

    def __post_init__(self):
        recomputed = self.A.values * self.B.values - self.D.values**2
        if np.abs(self.nu.values - recomputed).max() > 1e-14:
            raise ValueError("nu is inconsistent with A, B, D")

    @classmethod
    def from_abd(cls, A: TorusField, B: TorusField, D: TorusField) -> "ReducedMetric":
        nu = TorusField._own(A.grid, A.values * B.values - D.values**2)
        return cls(A, B, D, nu)

    @property
    def grid(self) -> Grid:
        return self.A.grid


@dataclass(frozen=True)
class DensityData:
    """Log-density F and the constant c making e^(F+c) a probability density."""

    F: TorusField
    c: float

    def __post_init__(self):
        mass = float(np.mean(np.exp(self.F.values + self.c)))
        if abs(mass - 1.0) > 1e-12:
            raise ValueError(f"integral of exp(F + c) is {mass!r}, expected 1")

    @classmethod
    def normalized(cls, F: TorusField) -> "DensityData":
        c = -float(np.log(np.mean(np.exp(F.values))))
        return cls(F, c)

    def target(self) -> np.ndarray:
        return np.exp(self.F.values + self.c)


def reduced_metric(p: Potential) -> ReducedMetric:
    fxx, fyy, fxy = second_deriv_values(p.phi.values)
    g = p.grid
    return ReducedMetric.from_abd(
        TorusField._own(g, 1.0 + fxx),
        TorusField._own(g, 1.0 + fyy),
        TorusField._own(g, fxy),
    )


def is_admissible(m: ReducedMetric, delta: float) -> bool:
    """Pointwise A > delta, B > delta, nu > delta."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return (
        m.A.values.min() > delta
        and m.B.values.min() > delta
        and m.nu.values.min() > delta
    )


def residual(p: Potential, d: DensityData) -> TorusField:
    """nu - e^(F+c); identically zero on solutions."""
    fxx, fyy, fxy = second_deriv_values(p.phi.values)
    return TorusField._own(
        p.grid, _kernels.residual_values(fxx, fyy, fxy, d.target())
    )


def trace_u(p: Potential) -> TorusField:
    """u = (tr_g g~)/2 = 2 + phi_xx + phi_yy; integrates to exactly 2."""
    fxx, fyy, _ = second_deriv_values(p.phi.values)
    return TorusField._own(p.grid, 2.0 + fxx + fyy)


def laplace_flat(psi: TorusField) -> TorusField:
    return derivative(psi, "xx") + derivative(psi, "yy")


def laplace_tilde(psi: TorusField, m: ReducedMetric) -> TorusField:
    """(A psi_yy + B psi_xx - 2 D psi_xy)/nu, the Laplacian of the solved metric."""
    if m.nu.values.min() <= 0.0:
        raise DegenerateMetric(f"min nu = {m.nu.values.min():.3e} is not positive")
    pxx, pyy, pxy = second_deriv_values(psi.values)
    num = _kernels.linear_apply(m.A.values, m.B.values, m.D.values, pxx, pyy, pxy)
    return TorusField._own(psi.grid, num / m.nu.values)


def key_identity_gap(p: Potential) -> TorusField:
    """Discrete defect of the lap~ u identity; vanishes at the spectral rate.

    Third derivatives of phi enter as first spectral derivatives of A, B, D,
    matching the identity's own grouping (f2_xx = A_x, f2_yy = D_y,
    f2_yx = D_x, f4_xx = D_x, f4_yy = B_y, f4_yx = D_y).
    """
    fxx, fyy, fxy = second_deriv_values(p.phi.values)
    a = 1.0 + fxx
    b = 1.0 + fyy
    d = fxy
    nu = a * b - d * d
    if nu.min() <= 0.0:
        raise DegenerateMetric(f"min nu = {nu.min():.3e} is not positive")

    u = a + b
    uxx, uyy, uxy = second_deriv_values(u)
    lhs = _kernels.linear_apply(a, b, d, uxx, uyy, uxy) / nu

    log_nu = np.log(nu)
    lap_log_nu = deriv_values(log_nu, "xx") + deriv_values(log_nu, "yy")
    nu_x = deriv_values(nu, "x")
    nu_y = deriv_values(nu, "y")
    a_x = deriv_values(a, "x")
    b_y = deriv_values(b, "y")
    d_x = deriv_values(d, "x")
    d_y = deriv_values(d, "y")
    cross = 2.0 * (-a_x * d_y + d_x * d_x - b_y * d_x + d_y * d_y)
    rhs = lap_log_nu + (nu_x * nu_x / nu + nu_y * nu_y / nu + cross) / nu
    return TorusField._own(p.grid, lhs - rhs)


def lemma22_margin(p: Potential, d: DensityData) -> float:
    """min(lap~ u) - min(lap(F + c)); nonnegative in the continuum on solutions."""
    m = reduced_metric(p)
    lt = laplace_tilde(trace_u(p), m)
    lf = laplace_flat(d.F + d.c)
    return float(lt.values.min() - lf.values.min())


def la_inequality(P: np.ndarray, Q: np.ndarray) -> float:
    """(tr PQ)^2 - 2 det(PQ) for P positive definite, Q symmetric; always >= 0."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != (2, 2) or Q.shape != (2, 2):
        raise ValueError("expected 2x2 matrices")
    if not (P[0, 0] > 0.0 and P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0] > 0.0):
        raise NotPositiveDefinite("P fails the leading-minor test")
    M = P @ Q
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return float(tr * tr - 2.0 * det)


def reconstruct_one_form(p: Potential) -> InvariantOneForm:
    """Invariant 1-form a with J(da) = da and Omega + da = omega-tilde.

    f2 = phi_x and f4 = phi_y by definition. The remaining compatibility
    equation f3_x - f1_y = f4 is solved mode by mode: modes with k != 0 go
    to f3, the k = 0 column goes to f1. The x-Nyquist column also goes to
    f1, since no f3 can reproduce it through an odd-order x-derivative.
    Free (0,0) modes of f1, f3 are gauged to zero.
    """
    grid = p.grid
    n = grid.n
    f2 = deriv_values(p.phi.values, "x")
    f4 = deriv_values(p.phi.values, "y")

    f4_hat = np.fft.rfft2(f4)
    kx, ky = _wavenumbers(n)
    to_f3 = (kx != 0) & (kx != -n // 2) & np.ones_like(ky, dtype=bool)
    denom_x = np.where(to_f3, 2j * np.pi * kx * np.ones_like(ky), 1.0)
    f3_hat = np.where(to_f3, f4_hat / denom_x, 0.0)
    to_f1 = ~to_f3 & (ky != 0)
    denom_y = np.where(to_f1, 2j * np.pi * np.ones_like(kx) * ky, 1.0)
    f1_hat = np.where(to_f1, -f4_hat / denom_y, 0.0)

    shape = (n, n)
    return InvariantOneForm(
        TorusField._own(grid, np.fft.irfft2(f1_hat, s=shape)),
        TorusField._own(grid, f2),
        TorusField._own(grid, np.fft.irfft2(f3_hat, s=shape)),
        TorusField._own(grid, f4),
    )


def assemble_omega_tilde(p: Potential) -> InvariantTwoForm:
    """omega-tilde = A e1 + D e3 - D e4 + B e6; J-invariant by construction."""
    m = reduced_metric(p)
    zero = TorusField._own(p.grid, np.zeros((p.grid.n, p.grid.n)))
    return InvariantTwoForm(m.A, zero, m.D, -m.D, zero, m.B)


def metric_matrix(p: Potential) -> list[list[TorusField]]:
    """4x4 matrix of g~ in the frame {d/dx, d/dt, d/dy + x d/dz, d/dz}."""
    m = reduced_metric(p)
    zero = TorusField._own(p.grid, np.zeros((p.grid.n, p.grid.n)))
    return [
        [m.A, zero, m.D, zero],
        [zero, m.A, zero, m.D],
        [m.D, zero, m.B, zero],
        [zero, m.D, zero, m.B],
    ]


def diagnostics(p: Potential, d: DensityData) -> dict:
    """Report fragment consumed by the CLI; all values finite floats."""
    m = reduced_metric(p)
    r = residual(p, d)
    u = trace_u(p)
    alpha, beta = cohomology_coeffs(assemble_omega_tilde(p))
    return {
        "residual_sup": float(np.abs(r.values).max()),
        "residual_l2": float(np.sqrt(np.mean(r.values**2))),
        "min_nu": float(m.nu.values.min()),
        "min_A": float(m.A.values.min()),
        "sup_u": float(u.values.max()),
        "lemma22_margin": lemma22_margin(p, d),
        "key_identity_sup": float(np.abs(key_identity_gap(p).values).max()),
        "alpha": alpha,
        "beta": beta,
    }
