"""Periodic scalar fields on the unit 2-torus with pseudo-spectral calculus.

Fields are sampled on an n x n uniform grid, ``values[i, j]`` living at
(x, y) = (i/n, j/n). Derivatives act in Fourier space with integer
wavenumbers: multiply by (2 pi i k)^a (2 pi i l)^b and transform back. The
Nyquist mode of any odd-order derivative is zeroed (it has no well-defined
sign); even orders keep it. With this convention summation by parts,
integrate(f * dg/dx) = -integrate(df/dx * g), is exact to round-off, which
the downstream integral identities rely on.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonZeroMeanInput

_ORDERS = {"x": (1, 0), "y": (0, 1), "xx": (2, 0), "yy": (0, 2), "xy": (1, 1)}

KTCY_MAGIC = b"KTCY"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid, n samples per axis, spacing h = 1/n."""

    n: int

    def __post_init__(self):
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 4, got n={self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (x, y) with x varying along axis 0."""
        s = np.arange(self.n) / self.n
        return s[:, None] * np.ones(self.n), np.ones(self.n)[:, None] * s


@dataclass(frozen=True)
class TorusField:
    """Immutable real scalar field on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"expected shape {(self.grid.n,) * 2}, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("field contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def _own(cls, grid: Grid, arr: np.ndarray) -> "TorusField":
        # internal fast path: take ownership of a freshly computed array
        self = object.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)
        return self

    def __add__(self, other):
        return TorusField._own(self.grid, self.values + _raw(other, self.grid))

    __radd__ = __add__

    def __sub__(self, other):
        return TorusField._own(self.grid, self.values - _raw(other, self.grid))

    def __rsub__(self, other):
        return TorusField._own(self.grid, _raw(other, self.grid) - self.values)

    def __mul__(self, other):
        return TorusField._own(self.grid, self.values * _raw(other, self.grid))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return TorusField._own(self.grid, self.values / _raw(other, self.grid))

    def __neg__(self):
        return TorusField._own(self.grid, -self.values)


def _raw(x, grid: Grid):
    if isinstance(x, TorusField):
        if x.grid != grid:
            raise ValueError("fields live on different grids")
        return x.values
    return x


@lru_cache(maxsize=None)
def _wavenumbers(n: int) -> tuple[np.ndarray, np.ndarray]:
    kx = np.fft.fftfreq(n, 1.0 / n)[:, None]
    ky = np.fft.rfftfreq(n, 1.0 / n)[None, :]
    return kx, ky


@lru_cache(maxsize=None)
def _deriv_multiplier(n: int, which: str) -> np.ndarray:
    a, b = _ORDERS[which]
    kx, ky = _wavenumbers(n)
    mult = (2j * np.pi * kx) ** a * (2j * np.pi * ky) ** b
    if a % 2 == 1:
        mult[kx[:, 0] == -n // 2, :] = 0.0
    if b % 2 == 1:
        mult[:, ky[0, :] == n // 2] = 0.0
    mult.flags.writeable = False
    return mult


@lru_cache(maxsize=None)
def _poisson_multiplier(n: int) -> np.ndarray:
    kx, ky = _wavenumbers(n)
    denom = -4.0 * np.pi**2 * (kx**2 + ky**2)
    denom[0, 0] = 1.0  # zero mode handled by the caller
    inv = 1.0 / denom
    inv[0, 0] = 0.0
    inv.flags.writeable = False
    return inv


def deriv_values(values: np.ndarray, which: str) -> np.ndarray:
    """Array-level spectral derivative (hot path, no wrapping)."""
    n = values.shape[0]
    hat = np.fft.rfft2(values)
    hat *= _deriv_multiplier(n, which)
    return np.fft.irfft2(hat, s=values.shape)


def second_deriv_values(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(f_xx, f_yy, f_xy) from a single forward transform."""
    n = values.shape[0]
    hat = np.fft.rfft2(values)
    out = []
    for which in ("xx", "yy", "xy"):
        out.append(np.fft.irfft2(hat * _deriv_multiplier(n, which), s=values.shape))
    return tuple(out)


def invert_laplacian_values(values: np.ndarray) -> np.ndarray:
    """Zero-mean solution of lap(g) = f - mean(f); no mean check (hot path)."""
    n = values.shape[0]
    hat = np.fft.rfft2(values)
    hat *= _poisson_multiplier(n)
    return np.fft.irfft2(hat, s=values.shape)


def derivative(f: TorusField, which: str) -> TorusField:
    if which not in _ORDERS:
        raise ValueError(f"unknown derivative {which!r}, expected one of {sorted(_ORDERS)}")
    return TorusField._own(f.grid, deriv_values(f.values, which))


def integrate(f: TorusField) -> float:
    """Integral over the unit torus; the uniform-grid average is spectrally exact."""
    return float(np.mean(f.values))


def invert_laplacian(f: TorusField, mean_tol: float = 1e-10) -> TorusField:
    m = integrate(f)
    if abs(m) > mean_tol:
        raise NonZeroMeanInput(
            f"right-hand side mean {m:.3e} exceeds tolerance {mean_tol:.1e}"
        )
    return TorusField._own(f.grid, invert_laplacian_values(f.values))


def resample(f: TorusField, n_new: int) -> TorusField:
    """Spectral interpolation onto an n_new grid.

    Exact for content below both Nyquist frequencies; Nyquist rows of the
    coarser grid are dropped (they have no unambiguous fine-grid image).
    """
    n = f.grid.n
    grid_new = Grid(n_new)
    if n_new == n:
        return f
    hat = np.fft.fft2(f.values) / (n * n)
    out = np.zeros((n_new, n_new), dtype=complex)
    kmax = min(n, n_new) // 2
    ks = np.arange(-(kmax - 1), kmax)
    out[np.ix_(ks % n_new, ks % n_new)] = hat[np.ix_(ks % n, ks % n)]
    values = np.fft.ifft2(out).real * (n_new * n_new)
    return TorusField._own(grid_new, values)


def save_ktcy(f: TorusField, path) -> None:
    """Binary dump: magic 'KTCY', uint32 LE n, n*n float64 LE, x-index outermost."""
    with open(path, "wb") as fh:
        fh.write(KTCY_MAGIC)
        fh.write(struct.pack("<I", f.grid.n))
        fh.write(f.values.astype("<f8").tobytes(order="C"))


def load_ktcy(path) -> TorusField:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != KTCY_MAGIC:
        raise ValueError(f"{path}: not a KTCY v1 dump (bad magic)")
    if len(blob) < 8:
        raise ValueError(f"{path}: truncated header")
    (n,) = struct.unpack("<I", blob[4:8])
    expected = 8 + 8 * n * n
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for n={n}, got {len(blob)}")
    values = np.frombuffer(blob[8:], dtype="<f8").reshape(n, n)
    return TorusField(Grid(n), values)


def save_csv(f: TorusField, path) -> None:
    """n rows of n comma-separated decimals, one row per x index."""
    np.savetxt(path, f.values, delimiter=",", fmt="%.17g")
