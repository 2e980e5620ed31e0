"""Periodic-box spectral discretization: grids, complex fields, Fourier ops.

The box is [-L, L)^d with N uniform points per axis, spacing h = 2L/N and
wavenumbers k_j = (pi/L) m_j for m_j in [-N/2, N/2).  Quadrature is the
uniform trapezoid/rectangle rule with weight h^d, which is spectrally
accurate for periodic integrands.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft

MAGIC = b"DNLSFLD1"


def _require_finite(values: np.ndarray, what: str) -> None:
    """Reject NaN/Inf input, naming the first offending flat index."""
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise ValueError(f"non-finite sample in {what} at flat index {idx}")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L, L)^d.

    Attributes:
        d: spatial dimension, 1, 2 or 3.
        N: points per axis; even, at least 8.
        L: half box length.
    """

    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.N < 8 or self.N % 2 != 0:
            raise ValueError(f"N must be even and >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @cached_property
    def x1(self) -> np.ndarray:
        """1D coordinate axis, identical along each dimension."""
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def k1(self) -> np.ndarray:
        """1D wavenumber axis in FFT order: (pi/L) * [0..N/2-1, -N/2..-1]."""
        return 2.0 * np.pi * sfft.fftfreq(self.N, d=self.h)

    @cached_property
    def k1_grad(self) -> np.ndarray:
        """Wavenumbers for first derivatives; Nyquist mode zeroed (the odd
        mode has no well-defined sign on an even grid)."""
        k = self.k1.copy()
        k[self.N // 2] = 0.0
        return k

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per dimension."""
        out = []
        for axis in range(self.d):
            shape = [1] * self.d
            shape[axis] = self.N
            out.append(self.x1.reshape(shape))
        return out

    @cached_property
    def r2(self) -> np.ndarray:
        """|x|^2 on the full grid."""
        total = np.zeros(self.shape)
        for c in self.coords():
            total = total + c**2
        return total

    @cached_property
    def ksq(self) -> np.ndarray:
        """|k|^2 on the full grid, FFT order."""
        total = np.zeros(self.shape)
        for axis in range(self.d):
            shape = [1] * self.d
            shape[axis] = self.N
            total = total + self.k1.reshape(shape) ** 2
        return total

    def k_grad(self, axis: int) -> np.ndarray:
        shape = [1] * self.d
        shape[axis] = self.N
        return self.k1_grad.reshape(shape)


@dataclass
class ComplexField:
    """Complex scalar samples on a Grid; the state u(t, .).

    Values are row-major with shape (N,)*d.  Fields are treated as immutable:
    every operation returns a new field.
    """

    grid: Grid
    values: np.ndarray
    space: str = "physical"

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"sample shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if self.values.dtype != np.complex128:
            self.values = self.values.astype(np.complex128)

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy(), self.space)


def field_from_function(grid: Grid, fn) -> ComplexField:
    """Sample fn(*coords) on the grid; fn receives broadcastable coordinates."""
    vals = np.asarray(fn(*grid.coords()), dtype=np.complex128)
    vals = np.broadcast_to(vals, grid.shape).copy()
    return ComplexField(grid, vals)


_FFT_WORKERS = int(os.environ.get("DNLS_THREADS", "0")) or -1


def set_threads(n: int) -> None:
    """Set the FFT worker count (overrides the DNLS_THREADS environment
    variable); n <= 0 means all available cores."""
    global _FFT_WORKERS
    _FFT_WORKERS = n if n > 0 else -1


def _fftn(values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, workers=_FFT_WORKERS)


def _ifftn(values: np.ndarray) -> np.ndarray:
    return sfft.ifftn(values, workers=_FFT_WORKERS)


def gradient(f: ComplexField) -> list[ComplexField]:
    """Spectral gradient; exact on band-limited fields."""
    _require_finite(f.values, "gradient input")
    fhat = _fftn(f.values)
    out = []
    for axis in range(f.grid.d):
        comp = _ifftn(1j * f.grid.k_grad(axis) * fhat)
        out.append(ComplexField(f.grid, comp))
    return out


def laplacian(f: ComplexField) -> ComplexField:
    """Spectral Laplacian: multiplication by -|k|^2 in frequency space."""
    _require_finite(f.values, "laplacian input")
    fhat = _fftn(f.values)
    return ComplexField(f.grid, _ifftn(-f.grid.ksq * fhat))


def free_propagate(f: ComplexField, t: float) -> ComplexField:
    """Exact free Schrodinger flow e^{i t Lap}: each Fourier coefficient is
    multiplied by exp(-i |k|^2 t).  Unitary on L^2 for any real t."""
    _require_finite(f.values, "free_propagate input")
    if t == 0.0:
        return f.copy()
    fhat = _fftn(f.values)
    return ComplexField(f.grid, _ifftn(np.exp(-1j * f.grid.ksq * t) * fhat))


def lp_norm(f: ComplexField, p: float) -> float:
    """L^p norm by box quadrature; p = inf gives the max modulus."""
    _require_finite(f.values, "lp_norm input")
    mod = np.abs(f.values)
    if p == np.inf:
        return float(mod.max())
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    return float((np.sum(mod**p) * f.grid.cell_volume) ** (1.0 / p))


def l2_sq(f: ComplexField) -> float:
    """Squared L^2 norm (quadrature of |f|^2)."""
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.cell_volume)


def h1_norm(f: ComplexField) -> float:
    """H^1 norm via the frequency sum of (1 + |k|^2) |fhat|^2."""
    _require_finite(f.values, "h1_norm input")
    g = f.grid
    fhat = _fftn(f.values)
    weight = g.cell_volume / g.N**g.d
    return float(np.sqrt(np.sum((1.0 + g.ksq) * np.abs(fhat) ** 2) * weight))


def h1_sq_freq(f: ComplexField) -> float:
    return h1_norm(f) ** 2


def dealias_filter(f: ComplexField) -> ComplexField:
    """Zero the upper third of the spectrum (2/3-rule aliasing control)."""
    g = f.grid
    cutoff = g.N // 3
    keep1 = np.abs(sfft.fftfreq(g.N) * g.N) <= cutoff
    mask = np.ones(g.shape, dtype=bool)
    for axis in range(g.d):
        shape = [1] * g.d
        shape[axis] = g.N
        mask = mask & keep1.reshape(shape)
    fhat = _fftn(f.values)
    fhat[~mask] = 0.0
    return ComplexField(g, _ifftn(fhat))


def save_field(f: ComplexField, path) -> None:
    """Write the DNLSFLD1 binary snapshot: little-endian header
    {magic "DNLSFLD1", uint32 d, uint32 N, float64 L} followed by N^d
    complex samples as interleaved float64 pairs, row-major."""
    header = MAGIC + struct.pack("<IId", f.grid.d, f.grid.N, f.grid.L)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes())


def load_field(path) -> ComplexField:
    """Read a DNLSFLD1 snapshot back into a ComplexField."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
        d, N, L = struct.unpack("<IId", fh.read(16))
        grid = Grid(d=int(d), N=int(N), L=float(L))
        raw = np.frombuffer(fh.read(), dtype="<c16")
    if raw.size != N**d:
        raise ValueError(f"expected {N**d} samples, got {raw.size}")
    return ComplexField(grid, raw.reshape(grid.shape).astype(np.complex128))
