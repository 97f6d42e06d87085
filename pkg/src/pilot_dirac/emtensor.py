"""Canonical energy-momentum tensor of the field/particle system and the
divergence identities relating its parts.

Tensors are arrays T[a, b, x] with both indices contravariant. The
interaction part vanishes identically because the particle Lagrangian does
not depend on field derivatives, so only FIELD, PARTICLE and TOTAL exist.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .algebra import bilinear_current
from .errors import NodeError
from .lattice import Grid, regularized_sigma0, spectral_derivative
from .solver import G2, CoupledRun, check_uniform, coupled_time_derivative, time_derivative

METRIC = np.diag([1.0, -1.0])
#: imaginary residue tolerated (relative) before discarding it
IMAG_TOL = 1e-10


class Part(enum.Enum):
    FIELD = "field"
    PARTICLE = "particle"
    TOTAL = "total"


@dataclass(frozen=True)
class EMTensorField:
    T: np.ndarray
    part: Part


def _contravariant_derivatives(phi, phi_t, grid):
    """[d^0 phi, d^1 phi] = [d_t phi, -d_x phi]."""
    phi_x = np.fft.ifft(1j * grid.k * np.fft.fft(phi, axis=-1), axis=-1)
    return np.array([phi_t, -phi_x])


def t_field(phi, phi_t, dS, sigma0, rho0, grid: Grid, node_tol: float = 0.0) -> EMTensorField:
    """Field part: 1/2 i [phibar g^b d^a phi - (d^a phibar) g^b phi]
    + g^ab (sigma0/rho0) (d_l S) phibar g^l phi.

    ``dS`` is the covariant gradient (2, nx); ``phi_t`` the time derivative
    of the field at this instant.
    """
    phi = np.asarray(phi, dtype=complex)
    dphi = _contravariant_derivatives(phi, np.asarray(phi_t, dtype=complex), grid)
    mats = [G2.gammas[0] @ gb for gb in G2.gammas]
    T = np.empty((2, 2, grid.nx), dtype=complex)
    for a in range(2):
        for b in range(2):
            first = np.einsum("ik,ij,jk->k", phi.conj(), mats[b], dphi[a])
            second = np.einsum("ik,ij,jk->k", dphi[a].conj(), mats[b], phi)
            T[a, b] = 0.5j * (first - second)
    scale = max(float(np.max(np.abs(T))), np.finfo(float).tiny)
    resid = float(np.max(np.abs(T.imag)))
    if resid > IMAG_TOL * scale:
        raise ArithmeticError(f"field tensor has imaginary residue {resid:.3e}")
    T = T.real
    sigma0 = np.asarray(sigma0, dtype=float)
    if np.any(sigma0 != 0):
        rho0 = np.asarray(rho0, dtype=float)
        active = sigma0 > 1e-300
        if np.any(active & (rho0 <= node_tol)):
            raise NodeError("node inside the particle density support")
        j = bilinear_current(phi, G2)
        coupling = np.where(active, sigma0 / np.where(active, rho0, 1.0), 0.0)
        trace = coupling * (dS[0] * j[0] + dS[1] * j[1])
        T = T + METRIC[:, :, None] * trace[None, None, :]
    return EMTensorField(T=T, part=Part.FIELD)


def t_particle(sigma0, p, u) -> EMTensorField:
    """sigma0 p^a u^b; ``p`` may be a constant 4-vector or a per-site field."""
    sigma0 = np.asarray(sigma0, dtype=float)
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        p = p[:, None] * np.ones_like(sigma0)[None, :]
    u = np.asarray(u, dtype=float)
    T = sigma0[None, None, :] * p[:, None, :] * u[None, :, None]
    return EMTensorField(T=T, part=Part.PARTICLE)


def divergence(times, tensors, grid: Grid, order: int | None = None):
    """d_b T^{ab}: centered time differences plus spectral space derivative.

    Returns (t_interior, div) with div of shape (n_interior, 2, nx).
    """
    times = np.asarray(times, dtype=float)
    T = np.asarray([t.T if isinstance(t, EMTensorField) else t for t in tensors])
    dt = check_uniform(times)
    dT0, sl = time_derivative(T[:, :, 0], dt, order)
    dT1 = spectral_derivative(T[sl][:, :, 1], grid)
    return times[sl], dT0 + dT1


# ---------------------------------------------------------------- coupled runs

@dataclass
class CoupledTensors:
    """Per-snapshot tensors and identity right-hand sides of a coupled run."""

    times: np.ndarray
    field: np.ndarray        # (n, 2, 2, nx)
    particle: np.ndarray     # (n, 2, 2, nx)
    exchange: np.ndarray     # (n, 2, nx): (sigma0/rho0)(d_l S) d^a j^l
    sigma0: np.ndarray       # (n, nx)


def coupled_dS(j, rho0, u, k):
    """d_l S = -k (rho0 u_l + j_l) with the particle u and local current."""
    u_low = np.array([u[0], -u[1]])
    j_low = np.array([j[0], -j[1]])
    return -k * (rho0[None, :] * u_low[:, None] + j_low)


def coupled_tensors(run: CoupledRun) -> CoupledTensors:
    grid, cfg = run.grid, run.cfg
    n = len(run.times)
    TF = np.empty((n, 2, 2, grid.nx))
    TP = np.empty((n, 2, 2, grid.nx))
    EX = np.empty((n, 2, grid.nx))
    S0 = np.empty((n, grid.nx))
    mats = [G2.gammas[0] @ gl for gl in G2.gammas]
    for i, (phi, part) in enumerate(zip(run.phi, run.particles)):
        u = np.asarray(part.u)
        j = bilinear_current(phi, G2)
        rho0 = np.sqrt(np.maximum(j[0] ** 2 - j[1] ** 2, 0.0))
        sigma0 = regularized_sigma0(part.x, u[0], cfg.width(grid), grid)
        dS = coupled_dS(j, rho0, u, cfg.k)
        phi_t = coupled_time_derivative(phi, part, cfg, grid)
        TF[i] = t_field(phi, phi_t, dS, sigma0, rho0, grid).T
        p_local = cfg.k * (rho0[None, :] * u[:, None] + j)
        TP[i] = t_particle(sigma0, p_local, u).T
        jt = np.array([2 * np.real(np.einsum("ik,ij,jk->k", phi.conj(), M, phi_t)) for M in mats])
        dj = np.array([jt, -spectral_derivative(j, grid)])      # d^a j^l
        # (sigma0/rho0) d_l S = -sigma0 k (u_l + j_l/rho0); the 1/rho0 cancels
        # against dS except where sigma0 is negligible
        active = sigma0 > 1e-300
        coef = np.where(active, sigma0 / np.where(active, np.maximum(rho0, 1e-300), 1.0), 0.0)
        EX[i] = coef[None, :] * np.einsum("lk,alk->ak", dS, dj)
        S0[i] = sigma0
    return CoupledTensors(times=np.asarray(run.times), field=TF, particle=TP, exchange=EX, sigma0=S0)


def _l2(a, dx):
    return float(np.sqrt(np.sum(np.asarray(a) ** 2) * dx))


@dataclass
class IdentityReport:
    field_lhs: np.ndarray
    field_rhs: np.ndarray
    field_residual: float            # pointwise, relative to |rhs|
    particle_rate: np.ndarray        # d/dt of tube-integrated T_particle^{a0}
    particle_rhs: np.ndarray         # tube integral of -(sigma0/rho0) dS d^a j
    particle_residual: float         # relative
    field_integrated: np.ndarray     # tube integral of field-side rhs
    balance_residual: float          # |field + particle| / |particle|, integrated
    particle_pointwise_residual: float

    def as_dict(self) -> dict:
        return {
            "field_residual": self.field_residual,
            "particle_residual": self.particle_residual,
            "balance_residual": self.balance_residual,
            "particle_pointwise_residual": self.particle_pointwise_residual,
        }


def field_divergence_identity_check(run: CoupledRun, tensors: CoupledTensors | None = None,
                                    order: int | None = None) -> IdentityReport:
    """Compare both sides of the field- and particle-side divergence identities.

    The field side is compared pointwise. The particle tensor is a rigid tube
    carrying one velocity, so its divergence matches the exchange density
    only in the point-particle limit; it is compared in integrated form
    (total four-momentum exchange rate), with the pointwise mismatch kept as
    a diagnostic.
    """
    tens = coupled_tensors(run) if tensors is None else tensors
    dx = run.grid.dx
    t_in, div_f = divergence(tens.times, tens.field, run.grid, order)
    _, div_p = divergence(tens.times, tens.particle, run.grid, order)
    sl = slice(int(np.searchsorted(tens.times, t_in[0])), int(np.searchsorted(tens.times, t_in[0])) + len(t_in))
    rhs_f = tens.exchange[sl]
    field_residual = _l2(div_f - rhs_f, dx) / _l2(rhs_f, dx)
    rhs_p = -rhs_f
    particle_pointwise = _l2(div_p - rhs_p, dx) / _l2(rhs_p, dx)
    # integrated: d/dt of the tube momentum vs integrated exchange
    momentum = np.sum(tens.particle[:, :, 0], axis=-1) * dx
    rate, _ = time_derivative(momentum, check_uniform(tens.times), order)
    p_rhs = np.sum(rhs_p, axis=-1) * dx
    particle_residual = float(np.linalg.norm(rate - p_rhs) / np.linalg.norm(p_rhs))
    f_int = np.sum(rhs_f, axis=-1) * dx
    balance = float(np.linalg.norm(f_int + rate) / np.linalg.norm(rate))
    return IdentityReport(field_lhs=div_f, field_rhs=rhs_f, field_residual=field_residual,
                          particle_rate=rate, particle_rhs=p_rhs, particle_residual=particle_residual,
                          field_integrated=f_int, balance_residual=balance,
                          particle_pointwise_residual=particle_pointwise)


@dataclass
class EnergyReport:
    times: np.ndarray
    E_field: np.ndarray
    E_particle: np.ndarray
    E_total: np.ndarray
    exchange: float
    drift: float
    total_divergence_residual: float
    sigma0_mass: np.ndarray          # integral of sigma0 u^0 (should stay 1)
    symmetry_defect: float

    def as_dict(self) -> dict:
        return {
            "exchange": self.exchange,
            "drift": self.drift,
            "drift_over_exchange": self.drift / self.exchange if self.exchange > 0 else float("inf"),
            "total_divergence_residual": self.total_divergence_residual,
            "symmetry_defect": self.symmetry_defect,
        }


def energy_series(tens: CoupledTensors, grid: Grid):
    E_f = np.sum(tens.field[:, 0, 0], axis=-1) * grid.dx
    E_p = np.sum(tens.particle[:, 0, 0], axis=-1) * grid.dx
    return E_f, E_p, E_f + E_p


def total_conservation_check(run: CoupledRun, tensors: CoupledTensors | None = None) -> EnergyReport:
    """Energy bookkeeping of a coupled run.

    Reports the exchange X = max |E_field(t) - E_field(0)|, the total drift
    max |E_total(t) - E_total(0)|, and the pointwise residual of the total
    divergence after integrating over the particle tube.
    """
    tens = coupled_tensors(run) if tensors is None else tensors
    grid = run.grid
    E_f, E_p, E_t = energy_series(tens, grid)
    t_in, div_f = divergence(tens.times, tens.field, grid)
    _, div_p = divergence(tens.times, tens.particle, grid)
    total = np.sum(div_f + div_p, axis=-1) * grid.dx
    scale = np.max(np.abs(np.sum(div_f, axis=-1) * grid.dx))
    mass = np.array([np.sum(s * p.u[0]) * grid.dx for s, p in zip(tens.sigma0, run.particles)])
    sym = float(np.max(np.abs(tens.field[:, 0, 1] - tens.field[:, 1, 0])))
    return EnergyReport(
        times=tens.times, E_field=E_f, E_particle=E_p, E_total=E_t,
        exchange=float(np.max(np.abs(E_f - E_f[0]))),
        drift=float(np.max(np.abs(E_t - E_t[0]))),
        total_divergence_residual=float(np.max(np.abs(total)) / scale) if scale > 0 else 0.0,
        sigma0_mass=mass, symmetry_defect=sym,
    )


def free_tensor_series(times, fields, grid: Grid, m: float):
    """Field tensor of a free evolution (no particle)."""
    from . import dirac

    zeros = np.zeros(grid.nx)
    out = []
    for phi in fields:
        phi_t = -1j * dirac.hamiltonian_apply(phi, grid, m)
        out.append(t_field(phi, phi_t, np.zeros((2, grid.nx)), zeros, zeros, grid).T)
    return np.array(out)
