"""Exterior algebra of T2-invariant forms on the Kodaira-Thurston manifold.

Everything is expanded over the left-invariant coframe {dx, dt, dy, w},
w = dz - x dy, whose only structure relation is dw = -dx^dy. Invariant
1-forms carry four coefficient fields, 2-forms six, over the ordered basis

    e1 = dx^dt, e2 = dx^dy, e3 = dx^w, e4 = dt^dy, e5 = dt^w, e6 = dy^w.

The almost complex structure acts by J(dx) = dt, J(dt) = -dx, J(dy) = w,
J(w) = -dy. Top-degree products are measured against vol = dx^dt^dy^w, so
the reference symplectic form Omega = e1 + e6 has wedge_top(Omega, Omega)
identically 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .torus_grid import Grid, TorusField, derivative, integrate, save_ktcy

COFRAME_LABELS = ("dx", "dt", "dy", "dz-x*dy")
_BASIS_PAIRS = tuple(combinations(range(4), 2))
BASIS_LABELS = tuple(
    f"{COFRAME_LABELS[i]}^{COFRAME_LABELS[j]}" for i, j in _BASIS_PAIRS
)


def _permutation_sign(perm):
    sign = 1
    for a, b in combinations(range(len(perm)), 2):
        if perm[a] > perm[b]:
            sign = -sign
    return sign


def _build_wedge_signs():
    table = np.zeros((6, 6), dtype=np.int64)
    for i, pi in enumerate(_BASIS_PAIRS):
        for j, pj in enumerate(_BASIS_PAIRS):
            perm = pi + pj
            if sorted(perm) == [0, 1, 2, 3]:
                table[i, j] = _permutation_sign(perm)
    return table


WEDGE_SIGNS = _build_wedge_signs()
# pin the orientation convention against two hand-checked entries
assert WEDGE_SIGNS[0, 5] == 1, "dx^dt ^ dy^w must equal +vol"
assert WEDGE_SIGNS[1, 4] == -1, "dx^dy ^ dt^w must equal -vol"


def _check_shared_grid(fields):
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError("form coefficients live on different grids")
    return grid


@dataclass(frozen=True)
class InvariantOneForm:
    """a = f1 dx + f2 dt + f3 dy + f4 (dz - x dy), coefficients functions of (x, y)."""

    f1: TorusField
    f2: TorusField
    f3: TorusField
    f4: TorusField

    def __post_init__(self):
        _check_shared_grid(self.coeffs())

    @property
    def grid(self) -> Grid:
        return self.f1.grid

    def coeffs(self) -> tuple[TorusField, ...]:
        return (self.f1, self.f2, self.f3, self.f4)


@dataclass(frozen=True)
class InvariantTwoForm:
    """w = sum c_i e_i over the ordered 2-form basis."""

    c1: TorusField
    c2: TorusField
    c3: TorusField
    c4: TorusField
    c5: TorusField
    c6: TorusField

    def __post_init__(self):
        _check_shared_grid(self.coeffs())

    @property
    def grid(self) -> Grid:
        return self.c1.grid

    def coeffs(self) -> tuple[TorusField, ...]:
        return (self.c1, self.c2, self.c3, self.c4, self.c5, self.c6)


def _const(grid: Grid, value: float) -> TorusField:
    return TorusField._own(grid, np.full((grid.n, grid.n), value))


def omega(grid: Grid) -> InvariantTwoForm:
    """The reference symplectic form Omega = dx^dt + dy^w."""
    zero = _const(grid, 0.0)
    one = _const(grid, 1.0)
    return InvariantTwoForm(one, zero, zero, zero, zero, one)


def omega_one(grid: Grid) -> InvariantTwoForm:
    """The self-dual harmonic form Omega_1 = dx^w + dt^dy; J(Omega_1) = -Omega_1."""
    zero = _const(grid, 0.0)
    one = _const(grid, 1.0)
    return InvariantTwoForm(zero, zero, one, one, zero, zero)


def j_one_form(a: InvariantOneForm) -> InvariantOneForm:
    return InvariantOneForm(-a.f2, a.f1, -a.f4, a.f3)


def j_two_form(w: InvariantTwoForm) -> InvariantTwoForm:
    # basis action: e1 -> e1, e2 -> e5, e5 -> e2, e3 -> -e4, e4 -> -e3, e6 -> e6
    return InvariantTwoForm(w.c1, w.c5, -w.c4, -w.c3, w.c2, w.c6)


def ext_d(a: InvariantOneForm) -> InvariantTwoForm:
    """Exterior derivative; the -f4 term in e2 comes from dw = -dx^dy."""
    zero = _const(a.grid, 0.0)
    return InvariantTwoForm(
        derivative(a.f2, "x"),
        derivative(a.f3, "x") - derivative(a.f1, "y") - a.f4,
        derivative(a.f4, "x"),
        -derivative(a.f2, "y"),
        zero,
        derivative(a.f4, "y"),
    )


def wedge_top(w1: InvariantTwoForm, w2: InvariantTwoForm) -> TorusField:
    """Coefficient of w1 ^ w2 relative to vol = dx^dt^dy^w (so Omega^2 -> 2)."""
    grid = _check_shared_grid((w1.c1, w2.c1))
    a = [f.values for f in w1.coeffs()]
    b = [f.values for f in w2.coeffs()]
    total = np.zeros((grid.n, grid.n))
    for i in range(6):
        for j in range(6):
            s = WEDGE_SIGNS[i, j]
            if s:
                total += s * (a[i] * b[j])
    return TorusField._own(grid, total)


def cohomology_coeffs(w: InvariantTwoForm) -> tuple[float, float]:
    """(alpha, beta) of [w] = alpha [Omega] + beta [Omega_1]."""
    om = omega(w.grid)
    om1 = omega_one(w.grid)
    alpha = integrate(wedge_top(w, om)) / integrate(wedge_top(om, om))
    beta = integrate(wedge_top(w, om1)) / integrate(wedge_top(om1, om1))
    return alpha, beta


def export_two_form(w: InvariantTwoForm, out_dir, prefix: str) -> Path:
    """Six KTCY dumps plus a manifest naming the basis element of each file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"grid_n": w.grid.n, "fields": {}}
    for idx, (field, label) in enumerate(zip(w.coeffs(), BASIS_LABELS), start=1):
        name = f"{prefix}_e{idx}.ktcy"
        save_ktcy(field, out_dir / name)
        manifest["fields"][name] = label
    manifest_path = out_dir / f"{prefix}_manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest_path
