"""The action field S, the phase transform Psi = psi exp(-iS), and checks that
the phase-sourced and free equations describe the same evolution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import Grid, interpolate, periodic_antiderivative, spectral_derivative
from .solver import SolverConfig, check_uniform, step_free, step_phase_sourced, time_derivative

#: curl relative to |dj| above which S is declared path dependent
CURL_THRESHOLD = 1e-8


@dataclass(frozen=True)
class ActionField:
    """S(t, x) on snapshot times; S = 0 at (times[0], basepoint).

    ``slope`` is the mean spatial gradient, i.e. the non-periodic ramp that
    S carries across the box.
    """

    times: np.ndarray
    S: np.ndarray
    basepoint: float
    slope: float
    curl_norm: float
    path_dependent: bool

    def at(self, i_t: int, x, grid: Grid):
        """S at snapshot i_t and arbitrary positions (ramp handled exactly)."""
        ramp = self.slope * (grid.x - self.basepoint)
        periodic = self.S[i_t] - ramp
        x = np.asarray(x, dtype=float)
        return interpolate(periodic, grid, x) + self.slope * (x - self.basepoint)


def curl_norm(times, j_series, grid: Grid) -> tuple[float, float]:
    """L2 norm of d_0 j_1 - d_1 j_0 over the run, and a scale to judge it by:
    the norm of dj, or of j itself when the current is uniform.

    With lowered indices j_0 = j^0, j_1 = -j^1.
    """
    j_series = np.asarray(j_series, dtype=float)
    if j_series.shape[0] < 3:
        return float("nan"), float("nan")
    dt = check_uniform(times)
    jt, sl = time_derivative(j_series, dt, 2)
    jx = spectral_derivative(j_series[sl], grid)
    c = -jt[:, 1] - jx[:, 0]
    scale = np.sqrt(np.sum(jt**2 + jx**2, axis=(1, 2)) * grid.dx)
    jnorm = np.sqrt(np.sum(j_series**2, axis=(1, 2)) * grid.dx)
    cn = np.sqrt(np.sum(c**2, axis=-1) * grid.dx)
    return float(np.max(cn)), float(max(np.max(scale), np.max(jnorm)))


def build_action_field(snapshots, k: float, grid: Grid, basepoint: float = 0.0) -> ActionField:
    """Integrate d_a S = -2k j_a: across space at the first snapshot, then in
    time at every site (trapezoid rule)."""
    snapshots = list(snapshots)
    times = np.array([s.t for s in snapshots])
    j = np.array([s.j for s in snapshots])
    if any(np.any(s.node_mask) for s in snapshots):
        raise ValueError("current has nodes on the integration path")
    # d_x S = -2k j_1 = 2k j^1
    S0, slope = periodic_antiderivative(2 * k * j[0, 1], grid, basepoint)
    S = np.empty((len(times), grid.nx))
    S[0] = S0
    for n in range(1, len(times)):
        dt = times[n] - times[n - 1]
        # d_t S = -2k j^0
        S[n] = S[n - 1] - k * dt * (j[n, 0] + j[n - 1, 0])
    cn, scale = curl_norm(times, j, grid)
    # a bare NaN (too few snapshots) never flags
    flagged = cn > CURL_THRESHOLD * scale and cn > 1e-14
    return ActionField(times=times, S=S, basepoint=basepoint, slope=float(slope),
                       curl_norm=cn, path_dependent=bool(flagged))


def gauge_transform(psi, S, direction: str = "forward") -> np.ndarray:
    """forward: Psi = psi e^{-iS}; backward: psi = Psi e^{+iS}."""
    S = np.asarray(S, dtype=float)
    if not np.all(np.isfinite(S)):
        raise ValueError("S must be finite")
    if direction == "forward":
        return np.asarray(psi) * np.exp(-1j * S)
    if direction == "backward":
        return np.asarray(psi) * np.exp(1j * S)
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


@dataclass(frozen=True)
class PhaseFunction:
    """An analytic real S(t, x) with its covariant gradient (d_t S, d_x S)."""

    value: Callable[[float, np.ndarray], np.ndarray]
    gradient: Callable[[float, np.ndarray], np.ndarray]
    name: str = ""

    @classmethod
    def zero(cls):
        return cls(lambda t, x: np.zeros_like(x),
                   lambda t, x: np.zeros((2,) + np.shape(x)), "zero")

    @classmethod
    def constant_rate(cls, c: float):
        return cls(lambda t, x: np.full_like(x, c * t),
                   lambda t, x: np.array([np.full_like(x, c), np.zeros_like(x)]),
                   f"rate({c})")

    @classmethod
    def oscillatory(cls, a: float, omega: float, length: float):
        q = 2 * np.pi / length
        return cls(
            lambda t, x: a * np.sin(q * x) * np.cos(omega * t),
            lambda t, x: np.array([-a * omega * np.sin(q * x) * np.sin(omega * t),
                                   a * q * np.cos(q * x) * np.cos(omega * t)]),
            f"osc({a},{omega})",
        )

    def source(self, grid: Grid):
        return lambda t: self.gradient(t, grid.x)


def equivalence_check(psi0, phase: PhaseFunction, cfg: SolverConfig, grid: Grid,
                      steps: int | None = None, t0: float = 0.0) -> float:
    """max |psi(t) - Psi(t) e^{iS(t)}| over the run.

    psi is evolved under the phase-sourced equation from Psi0 e^{iS(t0)};
    Psi independently under the free equation.
    """
    steps = cfg.steps if steps is None else steps
    Psi = np.asarray(psi0, dtype=complex)
    psi = gauge_transform(Psi, phase.value(t0, grid.x), "backward")
    src = phase.source(grid)
    worst = 0.0
    for n in range(1, steps + 1):
        t = t0 + (n - 1) * cfg.dt
        psi = step_phase_sourced(psi, src, cfg, grid, t)
        Psi = step_free(Psi, cfg, grid)
        expected = gauge_transform(Psi, phase.value(t + cfg.dt, grid.x), "backward")
        worst = max(worst, float(np.max(np.abs(psi - expected))))
    return worst


def absorb_into_potential(dS):
    """A_a = -d_a S, the external potential with the same local term.

    Accepts a gradient array or a callable of time returning one.
    """
    if callable(dS):
        return lambda t: -np.asarray(dS(t), dtype=float)
    return -np.asarray(dS, dtype=float)
