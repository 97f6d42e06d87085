"""Particle mechanics: the Lagrangian, generalized momentum, guidance flow and
the field-coupled equation of motion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dirac
from .algebra import bilinear_current, lower, minkowski_dot
from .errors import ModelError, NodeError
from .lattice import Grid, gaussian_kernel, interpolate, smear, spectral_derivative
from .solver import G2, NODE_FRACTION, SolverConfig

SHELL_TOL = 1e-8
#: mass-shell violation before renormalization that signals blow-up
SHELL_ABORT = 1e-4
#: implicit-midpoint fixed-point sweeps; fixed so results are partition independent
MIDPOINT_SWEEPS = 8


@dataclass(frozen=True)
class ParticleState:
    t: float
    x: float
    u: tuple
    tau: float = 0.0
    S: float = 0.0
    p: tuple = (0.0, 0.0)
    shell_residual: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u[0] < 1 - 1e-12:
            raise ValueError(f"u^0 must be >= 1, got {u[0]}")
        if abs(minkowski_dot(u, u) - 1) > SHELL_TOL:
            raise ValueError(f"u is off the mass shell: u.u = {minkowski_dot(u, u)!r}")


def _check_rho(rho0):
    if not np.all(np.asarray(rho0) > 0):
        raise ValueError("rho0 must be positive")


def lagrangian_L(u, j, rho0, k) -> float:
    """L = -k [rho0 (u.u)^(1/2) + u.j]."""
    _check_rho(rho0)
    u = np.asarray(u, dtype=float)
    return float(-k * (rho0 * np.sqrt(minkowski_dot(u, u)) + minkowski_dot(u, j)))


def lagrangian_from_current(u, j, k) -> float:
    """L with rho0 = (j.j)^(1/2) and (u.u)^(1/2) = 1 substituted."""
    return float(-k * (np.sqrt(minkowski_dot(j, j)) + minkowski_dot(u, j)))


def generalized_momentum(u, j, rho0, k) -> np.ndarray:
    """p^a = k (rho0 u^a + j^a)."""
    _check_rho(rho0)
    return k * (rho0 * np.asarray(u, dtype=float) + np.asarray(j, dtype=float))


def dL_dj(u, j, rho0, k) -> np.ndarray:
    """Covariant derivative dL/dj^a = -k (u_a + j_a / rho0)."""
    _check_rho(rho0)
    return -k * (lower(u) + lower(j) / rho0)


def unit_velocity(j) -> np.ndarray:
    """j / |j|, the guidance-aligned four-velocity."""
    j = np.asarray(j, dtype=float)
    jj = minkowski_dot(j, j)
    return j / np.sqrt(jj)


# ---------------------------------------------------------------- guidance

def _current_and_threshold(snapshot):
    j = np.asarray(snapshot.j)
    return j, NODE_FRACTION * float(np.max(snapshot.P))


def guidance_velocity(snapshot, x, grid: Grid) -> np.ndarray:
    """u = j(x) / rho0(x) from an interpolated current; exactly on shell."""
    j, tol = _current_and_threshold(snapshot)
    jx = interpolate(j, grid, x)
    jj = jx[0] ** 2 - jx[1] ** 2
    rho = np.sqrt(np.maximum(jj, 0.0))
    if np.any(rho < tol):
        raise NodeError(f"guidance undefined at x={x}: node (rho0={np.min(rho):.3e})",
                        position=x, rho0=float(np.min(rho)))
    return jx / rho


def guidance_flow(xs, j_start, j_end, dt: float, grid: Grid, tol: float):
    """Implicit-midpoint step of dx/dt = j^1/j^0 for many positions at once.

    The current at mid-step is the average of the bracketing snapshots, so
    the map is time-symmetric. Returns (new_x, j_mid_at_midpoint, node_mask).
    """
    xs = np.asarray(xs, dtype=float)
    j_mid = 0.5 * (np.asarray(j_start) + np.asarray(j_end))
    x_new = xs.copy()
    for _ in range(MIDPOINT_SWEEPS):
        jm = interpolate(j_mid, grid, 0.5 * (xs + x_new))
        x_new = xs + dt * jm[1] / jm[0]
    jm = interpolate(j_mid, grid, 0.5 * (xs + x_new))
    rho = np.sqrt(np.maximum(jm[0] ** 2 - jm[1] ** 2, 0.0))
    return x_new, jm, rho < tol


def advance_trajectory(state: ParticleState, snapshots, dt: float, k: float,
                       grid: Grid) -> ParticleState:
    """Advance a guided particle across a pair of bracketing snapshots.

    Position by implicit midpoint, tau += dt/u^0 and S += L dtau with L
    evaluated at the midpoint for the guidance-aligned velocity.
    """
    before, after = snapshots
    tol = NODE_FRACTION * float(max(np.max(before.P), np.max(after.P)))
    x_new, jm, node = guidance_flow(np.array([state.x]), before.j, after.j, dt, grid, tol)
    if node[0]:
        raise NodeError(f"trajectory crosses a node near x={state.x:.6g}", position=state.x)
    jm = jm[:, 0]
    rho = float(np.sqrt(jm[0] ** 2 - jm[1] ** 2))
    u_mid = jm / rho
    dtau = dt / u_mid[0]
    L = lagrangian_L(u_mid, jm, rho, k)
    u_new = guidance_velocity(after, x_new[0], grid)
    j_new = interpolate(after.j, grid, x_new[0])
    rho_new = float(np.sqrt(j_new[0] ** 2 - j_new[1] ** 2))
    p_new = generalized_momentum(u_new, j_new, rho_new, k)
    return ParticleState(t=state.t + dt, x=float(x_new[0]), u=tuple(u_new),
                         tau=state.tau + dtau, S=state.S + L * dtau, p=tuple(p_new))


def guided_state(snapshot, x: float, k: float, grid: Grid, t: float = 0.0) -> ParticleState:
    u = guidance_velocity(snapshot, x, grid)
    jx = interpolate(snapshot.j, grid, x)
    rho = float(np.sqrt(jx[0] ** 2 - jx[1] ** 2))
    return ParticleState(t=t, x=float(x), u=tuple(u),
                         p=tuple(generalized_momentum(u, jx, rho, k)))


# ---------------------------------------------------------------- coupled EOM

@dataclass(frozen=True)
class FieldGradients:
    """Current, its magnitude and space/time gradients on the lattice."""

    j: np.ndarray
    rho0: np.ndarray
    dj: np.ndarray      # dj[a] = d^a j  (contravariant derivative), shape (2, 2, nx)
    drho: np.ndarray    # d^a rho0, shape (2, nx)
    tol: float


def field_gradients(phi, grid: Grid, m: float) -> FieldGradients:
    """Gradients of j for the instantaneous field.

    The time derivative uses only the free Hamiltonian: the local source
    term commutes with alpha per site and so never changes j.
    """
    j = bilinear_current(phi, G2)
    P = j[0]
    tol = NODE_FRACTION * float(np.max(P))
    phi_t = -1j * dirac.hamiltonian_apply(phi, grid, m)
    mats = [G2.gammas[0] @ ga for ga in G2.gammas]
    jt = np.array([2 * np.real(np.einsum("ik,ij,jk->k", phi.conj(), M, phi_t)) for M in mats])
    jx = spectral_derivative(j, grid)
    rho0 = np.sqrt(np.maximum(j[0] ** 2 - j[1] ** 2, 0.0))
    rho_safe = np.maximum(rho0, tol)
    # d^0 = d_t, d^1 = -d_x
    dj = np.array([jt, -jx])
    drho = np.array([(j[0] * dj[a][0] - j[1] * dj[a][1]) / rho_safe for a in range(2)])
    return FieldGradients(j=j, rho0=rho0, dj=dj, drho=drho, tol=tol)


def _smeared(grads: FieldGradients, x, eps, grid):
    N = gaussian_kernel(x, eps, grid)
    jbar = smear(grads.j, N, grid)
    rhobar = float(smear(grads.rho0, N, grid))
    djbar = smear(grads.dj, N, grid)       # (2, 2)
    drhobar = smear(grads.drho, N, grid)   # (2,)
    return jbar, rhobar, djbar, drhobar


def _velocity_from_momentum(p, jbar, rhobar, k):
    return (np.asarray(p) / k - jbar) / rhobar


def _rhs(y, grads, cfg, grid, u=None):
    """Lab-time derivatives of (x, p0, p1, tau, S) in a frozen field.

    Without ``u`` the velocity is recovered from p^1 in the same field.
    """
    x, p1 = y[0], y[2]
    k = cfg.k
    jbar, rhobar, djbar, drhobar = _smeared(grads, x, cfg.width(grid), grid)
    if rhobar < grads.tol:
        raise NodeError(f"particle at x={x:.6g} sits on a current node", position=x, rho0=rhobar)
    if u is None:
        u1 = (p1 / k - jbar[1]) / rhobar
        u0 = np.sqrt(1 + u1 * u1)
    else:
        u0, u1 = u
    u_low = np.array([u0, -u1])
    # dp^a/dtau = k (u_l <d^a j^l> + <d^a rho0>)
    force = k * (djbar @ u_low + drhobar)
    L = -k * (rhobar + u0 * jbar[0] - u1 * jbar[1])
    return np.array([u1 / u0, force[0] / u0, force[1] / u0, 1 / u0, L / u0])


def eom_step(state: ParticleState, fields, cfg: SolverConfig, grid: Grid) -> ParticleState:
    """RK2 (midpoint) step of the coupled particle.

    ``fields`` is (phi_mid, phi_end): forces are taken from the mid-step
    field, and the end-of-step field (or any field with the same current)
    is used to recover u from the integrated momentum. Both momentum
    components are integrated; the mass-shell residual of the recovered u is
    recorded, then u is put back on shell keeping u^1 and p is re-derived
    from the momentum relation.
    """
    phi_mid, phi_end = fields
    grads = field_gradients(phi_mid, grid, cfg.m)
    dt = cfg.dt
    y = np.array([state.x, state.p[0], state.p[1], state.tau, state.S])
    y_half = y + 0.5 * dt * _rhs(y, grads, cfg, grid, u=state.u)
    y_new = y + dt * _rhs(y_half, grads, cfg, grid)
    j_end = bilinear_current(phi_end, G2)
    rho_end = np.sqrt(np.maximum(j_end[0] ** 2 - j_end[1] ** 2, 0.0))
    N = gaussian_kernel(y_new[0], cfg.width(grid), grid)
    jbar = smear(j_end, N, grid)
    rhobar = float(smear(rho_end, N, grid))
    if rhobar < grads.tol:
        raise NodeError(f"particle at x={y_new[0]:.6g} sits on a current node",
                        position=float(y_new[0]), rho0=rhobar)
    u_raw = _velocity_from_momentum(y_new[1:3], jbar, rhobar, cfg.k)
    resid = abs(minkowski_dot(u_raw, u_raw) - 1)
    if not np.isfinite(resid) or resid > SHELL_ABORT:
        raise ModelError(f"particle integration blew up: |u.u - 1| = {resid:.3e} at t={state.t + dt:.6g}")
    u = np.array([np.sqrt(1 + u_raw[1] ** 2), u_raw[1]])
    p = cfg.k * (rhobar * u + jbar)
    return ParticleState(t=state.t + dt, x=float(y_new[0]), u=tuple(u), tau=float(y_new[3]),
                         S=float(y_new[4]), p=tuple(p), shell_residual=float(resid))


def coupled_initial_state(phi, x: float, cfg: SolverConfig, grid: Grid, t: float = 0.0) -> ParticleState:
    """Particle at x moving along the smeared current, with p from the momentum relation."""
    j = bilinear_current(phi, G2)
    rho0 = np.sqrt(np.maximum(j[0] ** 2 - j[1] ** 2, 0.0))
    N = gaussian_kernel(x, cfg.width(grid), grid)
    jbar = smear(j, N, grid)
    rhobar = float(smear(rho0, N, grid))
    if rhobar < NODE_FRACTION * float(np.max(j[0])):
        raise NodeError(f"cannot place a particle on a current node at x={x:.6g}", position=x, rho0=rhobar)
    u = unit_velocity(jbar)
    return ParticleState(t=t, x=float(x), u=tuple(u), p=tuple(cfg.k * (rhobar * u + jbar)))


def alignment(state: ParticleState, phi, cfg: SolverConfig, grid: Grid) -> float:
    """|u - jbar/|jbar|| for a coupled particle (guidance misalignment)."""
    j = bilinear_current(phi, G2)
    jbar = smear(j, gaussian_kernel(state.x, cfg.width(grid), grid), grid)
    return float(np.linalg.norm(np.asarray(state.u) - unit_velocity(jbar)))
