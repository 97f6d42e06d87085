"""Currents, densities and continuity diagnostics of spinor fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import bilinear_current
from .errors import SpacelikeCurrentError
from .lattice import Grid, spectral_derivative
from .solver import G2, NODE_FRACTION, check_uniform, time_derivative

#: j.j may dip this far below zero (relative to P^2) from round-off
SPACELIKE_TOL = 1e-12


@dataclass(frozen=True)
class CurrentSnapshot:
    t: float
    j: np.ndarray
    rho0: np.ndarray
    P: np.ndarray
    node_mask: np.ndarray


def current_field(psi, t: float = 0.0) -> CurrentSnapshot:
    """Per-site current, magnitude rho0, density P = j^0 and node mask."""
    psi = np.asarray(psi, dtype=complex)
    j = bilinear_current(psi, G2)
    P = j[0]
    jj = j[0] ** 2 - j[1] ** 2
    scale = np.maximum(P**2, np.finfo(float).tiny)
    if np.any(jj < -SPACELIKE_TOL * scale):
        i = int(np.argmin(jj / scale))
        raise SpacelikeCurrentError(f"spacelike current at site {i}: j.j = {jj[i]:.3e}")
    rho0 = np.sqrt(np.maximum(jj, 0.0))
    node_mask = rho0 < NODE_FRACTION * float(np.max(P))
    for arr in (j, rho0, P, node_mask):
        arr.setflags(write=False)
    return CurrentSnapshot(t=float(t), j=j, rho0=rho0, P=P, node_mask=node_mask)


def continuity_residual_series(times, fields, grid: Grid, order: int | None = 2):
    """Per-snapshot L2 norm of d_t j^0 + d_x j^1 (interior snapshots only)."""
    times = np.asarray(times, dtype=float)
    dt = check_uniform(times)
    j = np.array([bilinear_current(f, G2) for f in fields])
    jt, sl = time_derivative(j[:, 0], dt, order)
    div = jt + spectral_derivative(j[sl, 1], grid)
    return times[sl], np.sqrt(np.sum(div**2, axis=-1) * grid.dx)


def continuity_residual(times, fields, grid: Grid, order: int | None = 2) -> float:
    _, r = continuity_residual_series(times, fields, grid, order)
    return float(np.max(r))


def born_weight_check(snapshot: CurrentSnapshot, grid: Grid) -> tuple[float, float]:
    """(integral of P, min of P): normalization and positivity witnesses."""
    return float(np.sum(snapshot.P) * grid.dx), float(np.min(snapshot.P))
