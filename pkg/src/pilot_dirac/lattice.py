"""Periodic 1D grid, spectral derivatives, interpolation and the regularized
particle rest density."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Periodic grid with sites x_i = (i - nx/2) dx, so x = 0 is a site."""

    nx: int = 1024
    dx: float = 0.1

    def __post_init__(self):
        if self.nx < 8 or self.nx & (self.nx - 1):
            raise ValueError(f"nx must be a power of two >= 8, got {self.nx}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")

    @property
    def length(self) -> float:
        return self.nx * self.dx

    @cached_property
    def x(self) -> np.ndarray:
        x = (np.arange(self.nx) - self.nx // 2) * self.dx
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        k = 2 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)
        k.setflags(write=False)
        return k

    @property
    def x_min(self) -> float:
        return float(self.x[0])

    def wrap(self, x):
        """Map positions into [x_min, x_min + L)."""
        return self.x_min + np.mod(np.asarray(x, dtype=float) - self.x_min, self.length)

    def displacement(self, x, x0):
        """Minimum-image displacement x - x0 in [-L/2, L/2)."""
        L = self.length
        return np.mod(np.asarray(x, dtype=float) - x0 + L / 2, L) - L / 2

    def integrate(self, f, axis=-1):
        return np.sum(f, axis=axis) * self.dx

    def nearest_wavenumber(self, p: float) -> float:
        dk = 2 * np.pi / self.length
        return float(np.round(p / dk) * dk)

    def site_index(self, x: float) -> int:
        return int(np.round((self.wrap(x) - self.x_min) / self.dx)) % self.nx


def spectral_derivative(f, grid: Grid, order: int = 1):
    """d^n f / dx^n along the last axis by FFT.

    The Nyquist mode is zeroed for odd orders so real input stays real.
    """
    f = np.asarray(f)
    ik = 1j * grid.k
    if order % 2 == 1:
        ik = ik.copy()
        ik[grid.nx // 2] = 0.0
    fk = np.fft.fft(f, axis=-1) * ik**order
    out = np.fft.ifft(fk, axis=-1)
    if not np.iscomplexobj(f):
        return out.real
    return out


def periodic_antiderivative(f, grid: Grid, basepoint: float = 0.0):
    """F with F' = f and F(basepoint) = 0.

    The mean of f contributes a linear (non-periodic) ramp; the returned
    tuple is (F, slope) where slope is that mean.
    """
    f = np.asarray(f, dtype=float)
    fk = np.fft.fft(f)
    slope = fk[0].real / grid.nx
    k = grid.k.copy()
    k[0] = 1.0
    gk = fk / (1j * k)
    gk[0] = 0.0
    gk[grid.nx // 2] = 0.0
    periodic = np.fft.ifft(gk).real
    i0 = grid.site_index(basepoint)
    F = periodic - periodic[i0] + slope * (grid.x - grid.x[i0])
    return F, slope


def central_difference4(f, grid: Grid):
    """Fourth-order periodic central difference; independent of the FFT path."""
    f = np.asarray(f)
    return (
        -np.roll(f, -2, axis=-1) + 8 * np.roll(f, -1, axis=-1)
        - 8 * np.roll(f, 1, axis=-1) + np.roll(f, 2, axis=-1)
    ) / (12 * grid.dx)


def interpolate(f, grid: Grid, x):
    """Periodic cubic (Catmull-Rom) interpolation along the last axis.

    Exact on grid sites and for linear data; C1 between sites. ``x`` may be a
    scalar or an array; the result has shape f.shape[:-1] + x.shape.
    """
    f = np.asarray(f)
    xs = np.asarray(x, dtype=float)
    s = (grid.wrap(xs) - grid.x_min) / grid.dx
    i1 = np.floor(s).astype(np.int64)
    t = s - i1
    n = grid.nx
    i0 = (i1 - 1) % n
    i2 = (i1 + 1) % n
    i3 = (i1 + 2) % n
    i1 = i1 % n
    p0, p1, p2, p3 = f[..., i0], f[..., i1], f[..., i2], f[..., i3]
    t2 = t * t
    t3 = t2 * t
    return 0.5 * (
        2 * p1
        + (p2 - p0) * t
        + (2 * p0 - 5 * p1 + 4 * p2 - p3) * t2
        + (3 * p1 - p0 - 3 * p2 + p3) * t3
    )


def gaussian_kernel(x_p: float, eps: float, grid: Grid) -> np.ndarray:
    """Periodic Gaussian of width eps centred at x_p, normalized on the lattice."""
    if eps < 2 * grid.dx * (1 - 1e-12):
        raise ValueError(f"eps={eps} is below 2*dx={2 * grid.dx}; the delta cannot be resolved")
    if eps > grid.length / 8:
        raise ValueError(f"eps={eps} is too wide for a box of length {grid.length}")
    d = grid.displacement(grid.x, x_p)
    w = np.exp(-0.5 * (d / eps) ** 2)
    return w / (np.sum(w) * grid.dx)


def regularized_sigma0(x_p: float, u0: float, eps: float, grid: Grid) -> np.ndarray:
    """Rest density delta(x - x_p)/u^0 with the delta smeared to a Gaussian."""
    if u0 < 1 - 1e-12:
        raise ValueError(f"u0 must be >= 1, got {u0}")
    return gaussian_kernel(x_p, eps, grid) / u0


def smear(f, kernel, grid: Grid):
    """Kernel-weighted average sum(N f) dx along the last axis."""
    return np.sum(np.asarray(f) * kernel, axis=-1) * grid.dx
