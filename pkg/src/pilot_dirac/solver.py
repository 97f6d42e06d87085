"""Time evolution of the spinor field.

Four modes share one split-step structure: an exact free step in Fourier
space, wrapped by exact per-site exponentials of a local matrix term
v0 + v1 alpha (alpha = gamma^0 gamma^1).

=================== ===================================================
mode                 field equation
=================== ===================================================
FREE                 i g^a d_a psi - m psi = 0
PHASE_SOURCED        i g^a d_a psi - m psi = -(d_a S) g^a psi
EXTERNAL_POTENTIAL   i g^a d_a psi - m psi = A_a g^a psi
COUPLED              i g^a d_a phi - m phi = sigma0 k (u_a + j_a/rho0) g^a phi
=================== ===================================================
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import dirac
from .algebra import make_gamma_set, bilinear_current
from .errors import NodeError
from .lattice import Grid, interpolate, regularized_sigma0

log = logging.getLogger(__name__)

#: rho0 below this fraction of max P marks a node
NODE_FRACTION = 1e-10

G2 = make_gamma_set(2)


class Mode(enum.Enum):
    FREE = "free"
    PHASE_SOURCED = "phase_sourced"
    COUPLED = "coupled"
    EXTERNAL_POTENTIAL = "external_potential"


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 0.01
    m: float = 1.0
    k: float = 1.0
    eps: float | None = None
    steps: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.m < 0:
            raise ValueError(f"m must be non-negative, got {self.m}")
        if self.steps < 0:
            raise ValueError(f"steps must be non-negative, got {self.steps}")

    def width(self, grid: Grid) -> float:
        """Regularization width of the particle density; 4 dx unless set."""
        return 4 * grid.dx if self.eps is None else self.eps

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


# ---------------------------------------------------------------- scenarios

def _normalize(psi, grid):
    n = dirac.norm(psi, grid)
    return psi / np.sqrt(n)


def plane_wave(p: float, grid: Grid, m: float, amplitude: float | None = None) -> np.ndarray:
    """Positive-energy plane wave; p is snapped to the nearest lattice momentum."""
    pl = grid.nearest_wavenumber(p)
    if abs(pl - p) > 1e-12 * max(1.0, abs(p)):
        log.warning("plane-wave momentum %.6g snapped to lattice value %.6g", p, pl)
    spinor = dirac.positive_energy_spinor(pl, m)
    psi = spinor[:, None] * np.exp(1j * pl * grid.x)[None, :]
    if amplitude is None:
        return _normalize(psi, grid)
    return amplitude * psi


def gaussian_packet(x0: float, width: float, p: float, grid: Grid, m: float) -> np.ndarray:
    """Positive-energy packet with |psi|^2 of standard deviation ~ width.

    A scalar Gaussian envelope is built in k-space and each mode is dressed
    with its positive-energy eigenspinor, so there is no Zitterbewegung.
    """
    if width < 2 * grid.dx:
        raise ValueError(f"packet width {width} unresolvable on dx={grid.dx}")
    if width > grid.length / 8:
        raise ValueError(f"packet width {width} too wide for box length {grid.length}")
    d = grid.displacement(grid.x, x0)
    envelope = np.exp(-(d**2) / (4 * width**2) + 1j * p * d)
    ek = np.fft.fft(envelope)
    spinors = dirac.positive_energy_spinor(grid.k, m)
    psi = np.fft.ifft(spinors * ek[None, :], axis=-1)
    return _normalize(psi, grid)


def superposition(p1: float, p2: float, weights, grid: Grid, m: float) -> np.ndarray:
    w1, w2 = weights
    psi = w1 * plane_wave(p1, grid, m, amplitude=1.0) + w2 * plane_wave(p2, grid, m, amplitude=1.0)
    return _normalize(psi, grid)


SCENARIOS = ("plane_wave", "gaussian_packet", "superposition")


def init_scenario(name: str, params: dict, grid: Grid, m: float = 1.0) -> np.ndarray:
    """Initial spinor field normalized to unit probability."""
    params = dict(params)
    if name == "plane_wave":
        return plane_wave(params.get("p", 0.0), grid, m)
    if name == "gaussian_packet":
        return gaussian_packet(params.get("x0", 0.0), params.get("width", 5.0),
                               params.get("p", 0.0), grid, m)
    if name == "superposition":
        weights = params.get("weights", (params.get("w1", 1.0), params.get("w2", 1.0)))
        return superposition(params.get("p1", 1.0), params.get("p2", -1.0), weights, grid, m)
    raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")


# ---------------------------------------------------------------- steppers

def step_free(psi, cfg: SolverConfig, grid: Grid) -> np.ndarray:
    return dirac.free_propagate(psi, grid, cfg.m, cfg.dt)


def _as_field_fn(dS) -> Callable[[float], np.ndarray]:
    if callable(dS):
        return dS
    arr = np.asarray(dS)
    if np.iscomplexobj(arr):
        if np.max(np.abs(arr.imag), initial=0.0) > 0:
            raise ValueError("phase gradient must be real")
        arr = arr.real
    arr = np.asarray(arr, dtype=float)
    return lambda t: arr


def _strang(psi, v_fn, cfg: SolverConfig, grid: Grid, t: float):
    v0, v1 = v_fn(t + 0.5 * cfg.dt)
    half = 0.5 * cfg.dt
    psi = dirac.local_propagate(psi, v0, v1, half)
    psi = dirac.free_propagate(psi, grid, cfg.m, cfg.dt)
    return dirac.local_propagate(psi, v0, v1, half)


def phase_potential(dS_lower) -> tuple[np.ndarray, np.ndarray]:
    """Local matrix term of the phase-sourced equation in Hamiltonian form."""
    dS_lower = np.asarray(dS_lower, dtype=float)
    return -dS_lower[0], -dS_lower[1]


def step_phase_sourced(psi, dS, cfg: SolverConfig, grid: Grid, t: float = 0.0) -> np.ndarray:
    """One Strang step of the phase-sourced equation.

    ``dS`` holds the covariant gradient (d_t S, d_x S) as a (2, nx) real array
    or a callable of time returning one; it is sampled at mid-step.
    """
    fn = _as_field_fn(dS)

    def v_fn(tt):
        arr = np.asarray(fn(tt))
        if np.iscomplexobj(arr):
            raise ValueError("phase gradient must be real")
        return phase_potential(arr)

    return _strang(psi, v_fn, cfg, grid, t)


def step_external(psi, A, cfg: SolverConfig, grid: Grid, t: float = 0.0) -> np.ndarray:
    """One Strang step with an external covariant potential A_a."""
    fn = _as_field_fn(A)

    def v_fn(tt):
        a = np.asarray(fn(tt), dtype=float)
        return a[0], a[1]

    return _strang(psi, v_fn, cfg, grid, t)


# ---------------------------------------------------------------- coupled mode

@dataclass(frozen=True)
class CoupledSource:
    """Quantities entering the particle source term at one instant."""

    sigma0: np.ndarray
    j: np.ndarray
    rho0: np.ndarray
    v0: np.ndarray
    v1: np.ndarray


def node_threshold(psi) -> float:
    P = np.sum(np.abs(psi) ** 2, axis=0)
    return NODE_FRACTION * float(np.max(P))


def coupled_source(phi, particle, cfg: SolverConfig, grid: Grid) -> CoupledSource:
    """sigma0 k (u_a + j_a / rho0) in Hamiltonian form.

    Raises :class:`NodeError` when the particle sits on a current node.
    """
    j = bilinear_current(phi, G2)
    tol = node_threshold(phi)
    j_here = interpolate(j, grid, particle.x)
    rho_here = float(np.sqrt(max(j_here[0] ** 2 - j_here[1] ** 2, 0.0)))
    if rho_here < tol:
        raise NodeError(
            f"particle at x={particle.x:.6g} sits on a current node (rho0={rho_here:.3e})",
            position=particle.x, rho0=rho_here,
        )
    u = np.asarray(particle.u, dtype=float)
    sigma0 = regularized_sigma0(particle.x, u[0], cfg.width(grid), grid)
    jj = np.maximum(j[0] ** 2 - j[1] ** 2, 0.0)
    rho0 = np.sqrt(jj)
    rho_safe = np.maximum(rho0, tol)
    w0 = u[0] + j[0] / rho_safe
    w1 = -u[1] - j[1] / rho_safe
    return CoupledSource(sigma0=sigma0, j=j, rho0=rho0,
                         v0=cfg.k * sigma0 * w0, v1=cfg.k * sigma0 * w1)


def step_coupled(phi, particle, cfg: SolverConfig, grid: Grid):
    """Field/particle leapfrog for the particle-coupled equation.

    Half field step (local source from the current particle, then half a
    free step), a full particle step driven by the mid-step field, then the
    mirror half field step with the updated particle. Returns
    (phi', particle').
    """
    from .particle import eom_step

    if cfg.k == 0:
        raise ValueError("coupled mode needs a non-zero coupling k")
    half = 0.5 * cfg.dt
    src = coupled_source(phi, particle, cfg, grid)
    phi = dirac.local_propagate(phi, src.v0, src.v1, half)
    phi_mid = dirac.free_propagate(phi, grid, cfg.m, half)
    phi = dirac.free_propagate(phi_mid, grid, cfg.m, half)
    # the final local half-step leaves j unchanged, so phi already carries j(t + dt)
    particle = eom_step(particle, (phi_mid, phi), cfg, grid)
    src = coupled_source(phi, particle, cfg, grid)
    phi = dirac.local_propagate(phi, src.v0, src.v1, half)
    return phi, particle


def coupled_time_derivative(phi, particle, cfg: SolverConfig, grid: Grid) -> np.ndarray:
    """d_t phi from the coupled field equation at one instant."""
    src = coupled_source(phi, particle, cfg, grid)
    hphi = dirac.hamiltonian_apply(phi, grid, cfg.m) + dirac.local_apply(phi, src.v0, src.v1)
    return -1j * hphi


@dataclass
class CoupledRun:
    """Recorded coupled evolution: fields and particle states at ``times``."""

    grid: Grid
    cfg: SolverConfig
    times: np.ndarray
    phi: np.ndarray
    particles: list = field(default_factory=list)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def run_coupled(phi0, particle0, cfg: SolverConfig, grid: Grid, steps: int | None = None,
                record_every: int = 1) -> CoupledRun:
    steps = cfg.steps if steps is None else steps
    phi, particle = np.asarray(phi0, dtype=complex), particle0
    times, fields, parts = [particle.t], [phi], [particle]
    for n in range(1, steps + 1):
        phi, particle = step_coupled(phi, particle, cfg, grid)
        if n % record_every == 0:
            times.append(particle.t)
            fields.append(phi)
            parts.append(particle)
    return CoupledRun(grid=grid, cfg=cfg, times=np.array(times), phi=np.array(fields),
                      particles=parts)


def evolve(psi0, cfg: SolverConfig, grid: Grid, mode: Mode = Mode.FREE, source=None,
           steps: int | None = None, t0: float = 0.0, record_every: int = 1):
    """Run a linear mode and return (times, fields) sampled every ``record_every``.

    ``source`` is the phase gradient for PHASE_SOURCED or the potential A_a
    for EXTERNAL_POTENTIAL (array or callable of time).
    """
    steps = cfg.steps if steps is None else steps
    psi = np.asarray(psi0, dtype=complex)
    times, fields = [t0], [psi]
    t = t0
    for n in range(1, steps + 1):
        if mode is Mode.FREE:
            psi = step_free(psi, cfg, grid)
        elif mode is Mode.PHASE_SOURCED:
            psi = step_phase_sourced(psi, source, cfg, grid, t)
        elif mode is Mode.EXTERNAL_POTENTIAL:
            psi = step_external(psi, source, cfg, grid, t)
        else:
            raise ValueError(f"use run_coupled for {mode}")
        t = t0 + n * cfg.dt
        if n % record_every == 0:
            times.append(t)
            fields.append(psi)
    return np.array(times), np.array(fields)


# ---------------------------------------------------------------- residuals

def time_derivative(series, dt: float, order: int | None = None):
    """Centered time derivative along axis 0, on interior samples.

    order 2 uses three points, order 4 five. With ``order=None`` the highest
    order the series length allows is used. Returns (derivative, slice) where
    the slice selects the matching samples of the input.
    """
    series = np.asarray(series)
    n = series.shape[0]
    if n < 3:
        raise ValueError("need at least 3 snapshots for a centered time derivative")
    if order is None:
        order = 4 if n >= 5 else 2
    if order == 2:
        return (series[2:] - series[:-2]) / (2 * dt), slice(1, n - 1)
    if order == 4:
        if n < 5:
            raise ValueError("order 4 needs at least 5 snapshots")
        d = (-series[4:] + 8 * series[3:-1] - 8 * series[1:-3] + series[:-4]) / (12 * dt)
        return d, slice(2, n - 2)
    raise ValueError(f"unsupported stencil order {order}")


def check_uniform(times, rtol: float = 1e-9) -> float:
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    if steps.size == 0 or np.any(np.abs(steps - steps[0]) > rtol * abs(steps[0])):
        raise ValueError("snapshot times are not uniformly spaced")
    return float(steps[0])


def field_operator(psi, psi_t, grid: Grid, m: float) -> np.ndarray:
    """i gamma^a d_a psi - m psi with supplied time derivative."""
    g0, g1 = G2.gammas
    psi_x = np.fft.ifft(1j * grid.k * np.fft.fft(psi, axis=-1), axis=-1)
    return (1j * np.einsum("ab,...bk->...ak", g0, psi_t)
            + 1j * np.einsum("ab,...bk->...ak", g1, psi_x) - m * psi)


def dirac_residual_series(times, fields, cfg: SolverConfig, grid: Grid, mode: Mode = Mode.FREE,
                          source=None, particles=None, order: int | None = None):
    """Per-snapshot L2 norm of LHS - RHS of the active field equation.

    Time derivatives are centered finite differences over the snapshots;
    space derivatives are spectral. Returns (t_interior, residual).
    """
    times = np.asarray(times, dtype=float)
    fields = np.asarray(fields)
    if fields.shape[0] < 3:
        raise ValueError("need at least 3 snapshots for a residual")
    dt = check_uniform(times)
    psi_t, sl = time_derivative(fields, dt, order)
    psi = fields[sl]
    tt = times[sl]
    lhs = field_operator(psi, psi_t, grid, cfg.m)
    g0, g1 = G2.gammas
    out = np.empty(len(tt))
    for i, (t, p, l) in enumerate(zip(tt, psi, lhs)):
        if mode is Mode.FREE:
            rhs = 0.0
        elif mode in (Mode.PHASE_SOURCED, Mode.EXTERNAL_POTENTIAL):
            arr = np.asarray(_as_field_fn(source)(t), dtype=float)
            c = -arr if mode is Mode.PHASE_SOURCED else arr
            rhs = c[0] * (g0 @ p) + c[1] * (g1 @ p)
        elif mode is Mode.COUPLED:
            part = particles[sl][i]
            src = coupled_source(p, part, cfg, grid)
            # back from Hamiltonian form: R = gamma^0 (v0 + v1 alpha) = v0 g0 + v1 g1
            rhs = src.v0 * (g0 @ p) + src.v1 * (g1 @ p)
        else:
            raise ValueError(f"unknown mode {mode}")
        r = l - rhs
        out[i] = np.sqrt(np.sum(np.abs(r) ** 2) * grid.dx)
    return tt, out


def dirac_residual(times, fields, cfg: SolverConfig, grid: Grid, mode: Mode = Mode.FREE,
                   source=None, particles=None, order: int | None = None) -> float:
    """Largest per-snapshot residual of the active field equation."""
    _, r = dirac_residual_series(times, fields, cfg, grid, mode, source, particles, order)
    return float(np.max(r))
