"""Canonical connection of (g, J) computed exactly in the unitary coframe.

The coframe theta^1 = (dx + i dt)/sqrt2, theta^2 = (dy + i (dz - x dy))/sqrt2
is left-invariant, so connection, torsion, and curvature have constant
coefficients in the field Q(sqrt2, i). All of that algebra is done exactly
with Fraction components; floating point enters only through ricci_tilde,
where the solved density F does.

Structure data: d theta^1 = 0 and

    d theta^2 = -(i/(2 sqrt2)) (theta^1^tbar^2 - theta^2^tbar^1
                                + theta^1^theta^2 + tbar^1^tbar^2).

Degree-2 forms are stored over the six ordered products of
(theta^1, theta^2, tbar^1, tbar^2); antisymmetry is built into the storage.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .frame_calculus import InvariantOneForm, InvariantTwoForm, ext_d, j_one_form
from .torus_grid import Grid, TorusField, derivative

_F0 = Fraction(0)


@dataclass(frozen=True)
class ExactScalar:
    """(a + b sqrt2) + (c + d sqrt2) i with rational a, b, c, d."""

    a: Fraction = _F0
    b: Fraction = _F0
    c: Fraction = _F0
    d: Fraction = _F0

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    def __add__(self, other):
        return ExactScalar(self.a + other.a, self.b + other.b,
                           self.c + other.c, self.d + other.d)

    def __sub__(self, other):
        return ExactScalar(self.a - other.a, self.b - other.b,
                           self.c - other.c, self.d - other.d)

    def __neg__(self):
        return ExactScalar(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, other):
        # (R1 + I1 i)(R2 + I2 i) with R, I in Q(sqrt2) as (rational, sqrt2) pairs
        def q2_mul(p, q):
            return (p[0] * q[0] + 2 * p[1] * q[1], p[0] * q[1] + p[1] * q[0])

        r1, i1 = (self.a, self.b), (self.c, self.d)
        r2, i2 = (other.a, other.b), (other.c, other.d)
        rr = q2_mul(r1, r2)
        ii = q2_mul(i1, i2)
        ri = q2_mul(r1, i2)
        ir = q2_mul(i1, r2)
        return ExactScalar(rr[0] - ii[0], rr[1] - ii[1], ri[0] + ir[0], ri[1] + ir[1])

    def conjugate(self):
        return ExactScalar(self.a, self.b, -self.c, -self.d)

    def is_zero(self):
        return self.a == 0 and self.b == 0 and self.c == 0 and self.d == 0

    def to_complex(self) -> complex:
        s = 2.0**0.5
        return complex(float(self.a) + float(self.b) * s,
                       float(self.c) + float(self.d) * s)

    def __str__(self):
        def q2_str(r, s):
            parts = []
            if r:
                parts.append(str(r))
            if s:
                parts.append(f"{s}*sqrt2" if abs(s) != 1 else ("sqrt2" if s > 0 else "-sqrt2"))
            return " + ".join(parts).replace("+ -", "- ") if parts else ""

        real = q2_str(self.a, self.b)
        imag = q2_str(self.c, self.d)
        if not real and not imag:
            return "0"
        out = []
        if real:
            out.append(real)
        if imag:
            needs_paren = " " in imag or "+" in imag or (imag.count("-") > 0 and not imag.startswith("-"))
            out.append(f"({imag})*i" if needs_paren else f"{imag}*i")
        return " + ".join(out).replace("+ -", "- ")


ZERO = ExactScalar()
ONE = ExactScalar(a=1)
I_UNIT = ExactScalar(c=1)
# 1/(2 sqrt2) = sqrt2/4
I_OVER_2SQRT2 = ExactScalar(d=Fraction(1, 4))

DEG1_LABELS = ("theta1", "theta2", "theta1bar", "theta2bar")
_PAIRS = tuple(combinations(range(4), 2))
_PAIR_INDEX = {p: k for k, p in enumerate(_PAIRS)}
DEG2_LABELS = tuple(f"{DEG1_LABELS[i]}^{DEG1_LABELS[j]}" for i, j in _PAIRS)
# conjugation swaps theta <-> tbar slots: 0<->2, 1<->3 on 1-form indices
_CONJ_SLOT = (2, 3, 0, 1)


@dataclass(frozen=True)
class ComplexInvariantForm:
    degree: int
    coeffs: tuple

    def __post_init__(self):
        want = 4 if self.degree == 1 else 6
        if self.degree not in (1, 2) or len(self.coeffs) != want:
            raise ValueError("degree must be 1 (4 coeffs) or 2 (6 coeffs)")

    @classmethod
    def zero(cls, degree: int) -> "ComplexInvariantForm":
        return cls(degree, (ZERO,) * (4 if degree == 1 else 6))

    @classmethod
    def basis1(cls, idx: int, scale: ExactScalar = ONE) -> "ComplexInvariantForm":
        coeffs = [ZERO] * 4
        coeffs[idx] = scale
        return cls(1, tuple(coeffs))

    def __add__(self, other):
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return ComplexInvariantForm(
            self.degree, tuple(a + b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return ComplexInvariantForm(self.degree, tuple(-c for c in self.coeffs))

    def scaled(self, s: ExactScalar) -> "ComplexInvariantForm":
        return ComplexInvariantForm(self.degree, tuple(s * c for c in self.coeffs))

    def wedge(self, other: "ComplexInvariantForm") -> "ComplexInvariantForm":
        if self.degree != 1 or other.degree != 1:
            raise ValueError("wedge implemented for 1-forms only")
        out = [ZERO] * 6
        for i, ci in enumerate(self.coeffs):
            if ci.is_zero():
                continue
            for j, cj in enumerate(other.coeffs):
                if cj.is_zero() or i == j:
                    continue
                if i < j:
                    out[_PAIR_INDEX[(i, j)]] = out[_PAIR_INDEX[(i, j)]] + ci * cj
                else:
                    out[_PAIR_INDEX[(j, i)]] = out[_PAIR_INDEX[(j, i)]] - ci * cj
        return ComplexInvariantForm(2, tuple(out))

    def conjugate(self) -> "ComplexInvariantForm":
        if self.degree == 1:
            out = [ZERO] * 4
            for i, c in enumerate(self.coeffs):
                out[_CONJ_SLOT[i]] = c.conjugate()
            return ComplexInvariantForm(1, tuple(out))
        out = [ZERO] * 6
        for k, (i, j) in enumerate(_PAIRS):
            ci, cj = _CONJ_SLOT[i], _CONJ_SLOT[j]
            sign = 1
            if ci > cj:
                ci, cj, sign = cj, ci, -1
            target = _PAIR_INDEX[(ci, cj)]
            out[target] = out[target] + (
                self.coeffs[k].conjugate() if sign == 1 else -self.coeffs[k].conjugate()
            )
        return ComplexInvariantForm(2, tuple(out))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def part_11(self) -> "ComplexInvariantForm":
        """Components on theta^i ^ tbar^j (the mixed products)."""
        mixed = {_PAIR_INDEX[p] for p in ((0, 2), (0, 3), (1, 2), (1, 3))}
        return ComplexInvariantForm(
            2, tuple(c if k in mixed else ZERO for k, c in enumerate(self.coeffs))
        )


THETA1 = ComplexInvariantForm.basis1(0)
THETA2 = ComplexInvariantForm.basis1(1)
THETA1_BAR = ComplexInvariantForm.basis1(2)
THETA2_BAR = ComplexInvariantForm.basis1(3)

_D_THETA2 = (
    THETA1.wedge(THETA2_BAR)
    - THETA2.wedge(THETA1_BAR)
    + THETA1.wedge(THETA2)
    + THETA1_BAR.wedge(THETA2_BAR)
).scaled(-I_OVER_2SQRT2)


def structure_d(form: ComplexInvariantForm) -> ComplexInvariantForm:
    """Exterior derivative of a constant-coefficient invariant 1-form."""
    if form.degree != 1:
        raise ValueError("structure_d expects a 1-form")
    out = ComplexInvariantForm.zero(2)
    out = out + _D_THETA2.scaled(form.coeffs[1])
    out = out + _D_THETA2.conjugate().scaled(form.coeffs[3])
    return out


@dataclass(frozen=True)
class ConnectionMatrix:
    theta: tuple  # theta[i][j], 0-based

    def __post_init__(self):
        for i in range(2):
            for j in range(2):
                skew = self.theta[j][i] + self.theta[i][j].conjugate()
                if not skew.is_zero():
                    raise ValueError("connection matrix is not skew-Hermitian")


@dataclass(frozen=True)
class CurvatureMatrix:
    psi: tuple  # psi[i][j], 0-based

    def __post_init__(self):
        for i in range(2):
            for j in range(2):
                skew = self.psi[j][i] + self.psi[i][j].conjugate()
                if not skew.is_zero():
                    raise ValueError("curvature matrix is not skew-Hermitian")


def canonical_connection_forms() -> ConnectionMatrix:
    """theta^1_1 = 0, theta^1_2 = -(i/(2 sqrt2)) theta^2,
    theta^2_1 = -(i/(2 sqrt2)) tbar^2, theta^2_2 = (i/(2 sqrt2))(theta^1 + tbar^1)."""
    t12 = THETA2.scaled(-I_OVER_2SQRT2)
    t21 = THETA2_BAR.scaled(-I_OVER_2SQRT2)
    t22 = (THETA1 + THETA1_BAR).scaled(I_OVER_2SQRT2)
    return ConnectionMatrix(((ComplexInvariantForm.zero(1), t12), (t21, t22)))


_BASIS_1FORMS = (THETA1, THETA2)


def torsion() -> tuple[ComplexInvariantForm, ComplexInvariantForm]:
    """Theta^i = d theta^i + theta^i_j ^ theta^j from the first structure equation."""
    conn = canonical_connection_forms().theta
    out = []
    for i in range(2):
        total = structure_d(_BASIS_1FORMS[i])
        for j in range(2):
            total = total + conn[i][j].wedge(_BASIS_1FORMS[j])
        out.append(total)
    return tuple(out)


def curvature() -> CurvatureMatrix:
    """Psi^i_j = d theta^i_j + theta^i_k ^ theta^k_j from the second structure equation."""
    conn = canonical_connection_forms().theta
    psi = [[None, None], [None, None]]
    for i in range(2):
        for j in range(2):
            total = structure_d(conn[i][j])
            for k in range(2):
                total = total + conn[i][k].wedge(conn[k][j])
            psi[i][j] = total
    return CurvatureMatrix((tuple(psi[0]), tuple(psi[1])))


# exact change of basis: theta-products expanded over e1..e6 (columns) with
# w = dz - x dy, theta^1 = (dx + i dt)/sqrt2, theta^2 = (dy + i w)/sqrt2
_HALF = Fraction(1, 2)
_THETA_TO_REAL = (
    # theta1^theta2 = (e2 + i e3 + i e4 - e5)/2
    (ZERO, ExactScalar(a=_HALF), ExactScalar(c=_HALF), ExactScalar(c=_HALF), ExactScalar(a=-_HALF), ZERO),
    # theta1^tbar1 = -i e1
    (ExactScalar(c=-1), ZERO, ZERO, ZERO, ZERO, ZERO),
    # theta1^tbar2 = (e2 - i e3 + i e4 + e5)/2
    (ZERO, ExactScalar(a=_HALF), ExactScalar(c=-_HALF), ExactScalar(c=_HALF), ExactScalar(a=_HALF), ZERO),
    # theta2^tbar1 = (-e2 - i e3 + i e4 - e5)/2
    (ZERO, ExactScalar(a=-_HALF), ExactScalar(c=-_HALF), ExactScalar(c=_HALF), ExactScalar(a=-_HALF), ZERO),
    # theta2^tbar2 = -i e6
    (ZERO, ZERO, ZERO, ZERO, ZERO, ExactScalar(c=-1)),
    # tbar1^tbar2 = (e2 - i e3 - i e4 - e5)/2
    (ZERO, ExactScalar(a=_HALF), ExactScalar(c=-_HALF), ExactScalar(c=-_HALF), ExactScalar(a=-_HALF), ZERO),
)

# inverse table: e_i expanded over theta-products
_REAL_TO_THETA = (
    # e1 = i theta1^tbar1
    (ZERO, I_UNIT, ZERO, ZERO, ZERO, ZERO),
    # e2 = (theta1^theta2 + theta1^tbar2 - theta2^tbar1 + tbar1^tbar2)/2
    (ExactScalar(a=_HALF), ZERO, ExactScalar(a=_HALF), ExactScalar(a=-_HALF), ZERO, ExactScalar(a=_HALF)),
    # e3 = (-i theta1^theta2 + i theta1^tbar2 + i theta2^tbar1 + i tbar1^tbar2)/2
    (ExactScalar(c=-_HALF), ZERO, ExactScalar(c=_HALF), ExactScalar(c=_HALF), ZERO, ExactScalar(c=_HALF)),
    # e4 = (-i theta1^theta2 - i theta1^tbar2 - i theta2^tbar1 + i tbar1^tbar2)/2
    (ExactScalar(c=-_HALF), ZERO, ExactScalar(c=-_HALF), ExactScalar(c=-_HALF), ZERO, ExactScalar(c=_HALF)),
    # e5 = (-theta1^theta2 + theta1^tbar2 - theta2^tbar1 - tbar1^tbar2)/2
    (ExactScalar(a=-_HALF), ZERO, ExactScalar(a=_HALF), ExactScalar(a=-_HALF), ZERO, ExactScalar(a=-_HALF)),
    # e6 = i theta2^tbar2
    (ZERO, ZERO, ZERO, ZERO, I_UNIT, ZERO),
)


def _tables_are_inverse():
    for r in range(6):
        for c in range(6):
            acc = ZERO
            for k in range(6):
                acc = acc + _REAL_TO_THETA[r][k] * _THETA_TO_REAL[k][c]
            want = ONE if r == c else ZERO
            if not (acc - want).is_zero():
                return False
    return True


assert _tables_are_inverse(), "theta/real basis conversion tables are inconsistent"


def theta_to_real_exact(form: ComplexInvariantForm) -> tuple:
    """e-basis coefficients (exact complex scalars) of a degree-2 theta form."""
    if form.degree != 2:
        raise ValueError("expected a degree-2 form")
    out = [ZERO] * 6
    for k, c in enumerate(form.coeffs):
        if c.is_zero():
            continue
        for e_idx in range(6):
            out[e_idx] = out[e_idx] + c * _THETA_TO_REAL[k][e_idx]
    return tuple(out)


def real_to_theta_exact(e_coeffs) -> ComplexInvariantForm:
    out = [ZERO] * 6
    for e_idx, c in enumerate(e_coeffs):
        if c.is_zero():
            continue
        for k in range(6):
            out[k] = out[k] + c * _REAL_TO_THETA[e_idx][k]
    return ComplexInvariantForm(2, tuple(out))


def to_real_two_form(
    form: ComplexInvariantForm, grid: Grid, scale: float = 1.0
) -> InvariantTwoForm:
    """Float conversion of a theta-basis 2-form; requires real e-coefficients."""
    exact = theta_to_real_exact(form)
    fields = []
    for c in exact:
        z = c.to_complex() * scale
        if abs(z.imag) > 1e-15 * max(1.0, abs(z.real)):
            raise ValueError("form is not real in the e-basis")
        fields.append(TorusField._own(grid, np.full((grid.n, grid.n), z.real)))
    return InvariantTwoForm(*fields)


def ricci_flat(grid: Grid | None = None) -> InvariantTwoForm:
    """Ric(Omega, J) = (i/2pi)(Psi^1_1 + Psi^2_2); the trace vanishes exactly."""
    if grid is None:
        grid = Grid(4)
    psi = curvature().psi
    trace = psi[0][0] + psi[1][1]
    exact = theta_to_real_exact(trace.scaled(I_UNIT))
    assert all(c.is_zero() for c in exact)  # exact cancellation, before any float
    zero = TorusField._own(grid, np.zeros((grid.n, grid.n)))
    return InvariantTwoForm(zero, zero, zero, zero, zero, zero)


def ricci_tilde(F: TorusField, c: float = 0.0) -> InvariantTwoForm:
    """Ric(omega~, J) = -(1/2) d(J dF); the constant c never enters."""
    zero = TorusField._own(F.grid, np.zeros((F.grid.n, F.grid.n)))
    dF = InvariantOneForm(derivative(F, "x"), zero, derivative(F, "y"), zero)
    dd = ext_d(j_one_form(dF))
    return InvariantTwoForm(*[-0.5 * f for f in dd.coeffs()])


def connection_report() -> str:
    """Exact rational-coefficient listing of theta^i_j, Theta^i, Psi^i_j."""

    def fmt(form: ComplexInvariantForm) -> str:
        labels = DEG1_LABELS if form.degree == 1 else DEG2_LABELS
        terms = [
            f"({coeff}) {label}"
            for coeff, label in zip(form.coeffs, labels)
            if not coeff.is_zero()
        ]
        return " + ".join(terms) if terms else "0"

    conn = canonical_connection_forms().theta
    tors = torsion()
    psi = curvature().psi
    lines = ["canonical connection in the unitary coframe (exact coefficients)", ""]
    for i in range(2):
        for j in range(2):
            lines.append(f"theta^{i + 1}_{j + 1} = {fmt(conn[i][j])}")
    lines.append("")
    for i in range(2):
        lines.append(f"Theta^{i + 1} = {fmt(tors[i])}")
    lines.append("")
    for i in range(2):
        for j in range(2):
            lines.append(f"Psi^{i + 1}_{j + 1} = {fmt(psi[i][j])}")
    lines.append("")
    lines.append("trace Psi^1_1 + Psi^2_2 = " + fmt(psi[0][0] + psi[1][1]))
    return "\n".join(lines)
