"""Free 1+1D Dirac kinematics on the periodic lattice.

Spinor fields are complex arrays of shape (2, nx). In Hamiltonian form the
free equation is i d_t psi = H psi with H(k) = [[m, i k], [-i k, -m]].
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .lattice import Grid


def dispersion(k, m: float):
    return np.sqrt(np.asarray(k, dtype=float) ** 2 + m * m)


def positive_energy_spinor(k, m: float) -> np.ndarray:
    """Unit eigenvector of H(k) with eigenvalue +sqrt(k^2 + m^2).

    Returns shape (2,) for scalar k or (2, n) for arrays.
    """
    k = np.asarray(k, dtype=float)
    E = dispersion(k, m)
    a = (E + m).astype(complex)
    b = -1j * k
    norm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
    # m = 0, k = 0: both entries vanish; any spinor is an eigenvector
    degenerate = norm == 0
    norm = np.where(degenerate, 1.0, norm)
    a = np.where(degenerate, 1.0, a / norm)
    b = np.where(degenerate, 0.0, b / norm)
    return np.array([a, b])


def negative_energy_spinor(k, m: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    E = dispersion(k, m)
    a = -1j * k
    b = (E + m).astype(complex)
    norm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
    degenerate = norm == 0
    norm = np.where(degenerate, 1.0, norm)
    a = np.where(degenerate, 0.0, a / norm)
    b = np.where(degenerate, 1.0, b / norm)
    return np.array([a, b])


@lru_cache(maxsize=32)
def _free_propagator(nx: int, dx: float, m: float, dt: float):
    grid = Grid(nx, dx)
    k = grid.k
    E = dispersion(k, m)
    c = np.cos(E * dt)
    # sin(E dt)/E, finite at E = 0
    s = dt * np.sinc(E * dt / np.pi)
    u00 = c - 1j * s * m
    u11 = c + 1j * s * m
    u01 = -1j * s * (1j * k)
    u10 = -1j * s * (-1j * k)
    out = np.array([[u00, u01], [u10, u11]])
    out.setflags(write=False)
    return out


def free_propagate(psi, grid: Grid, m: float, dt: float) -> np.ndarray:
    """Exact evolution exp(-i H dt) applied mode by mode."""
    U = _free_propagator(grid.nx, grid.dx, float(m), float(dt))
    pk = np.fft.fft(psi, axis=-1)
    out = np.einsum("abk,bk->ak", U, pk)
    return np.fft.ifft(out, axis=-1)


def hamiltonian_apply(psi, grid: Grid, m: float) -> np.ndarray:
    """H psi for the free Hamiltonian, derivative taken spectrally."""
    pk = np.fft.fft(psi, axis=-1)
    k = grid.k
    hk = np.array([m * pk[0] + 1j * k * pk[1], -1j * k * pk[0] - m * pk[1]])
    return np.fft.ifft(hk, axis=-1)


def local_propagate(psi, v0, v1, tau: float) -> np.ndarray:
    """exp(-i tau (v0 + v1 alpha)) per site, alpha = gamma^0 gamma^1.

    With alpha = -sigma_y the matrix part is a real rotation by tau*v1, so
    the step is unitary and leaves the local current untouched.
    """
    theta = tau * np.asarray(v1, dtype=float)
    phase = np.exp(-1j * tau * np.asarray(v0, dtype=float))
    c, s = np.cos(theta), np.sin(theta)
    a, b = psi
    return np.array([phase * (c * a + s * b), phase * (-s * a + c * b)])


def local_apply(psi, v0, v1) -> np.ndarray:
    """(v0 + v1 alpha) psi."""
    a, b = psi
    return np.array([v0 * a + 1j * v1 * b, v0 * b - 1j * v1 * a])


def kinetic_energy(psi, grid: Grid, m: float) -> float:
    """<psi|H|psi> for the free Hamiltonian."""
    hpsi = hamiltonian_apply(psi, grid, m)
    return float(np.real(np.sum(np.conj(psi) * hpsi)) * grid.dx)


def norm(psi, grid: Grid) -> float:
    return float(np.sum(np.abs(psi) ** 2) * grid.dx)
