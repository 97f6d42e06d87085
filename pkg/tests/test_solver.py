import logging

import numpy as np
import pytest

from pilot_dirac import dirac
from pilot_dirac.errors import NodeError
from pilot_dirac.lattice import Grid
from pilot_dirac.particle import ParticleState, coupled_initial_state
from pilot_dirac.solver import (Mode, SolverConfig, check_uniform, dirac_residual, evolve,
                                gaussian_packet, init_scenario, plane_wave, run_coupled,
                                step_coupled, step_external, step_free, step_phase_sourced,
                                superposition, time_derivative)


def test_config_validation(grid):
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)
    with pytest.raises(ValueError):
        SolverConfig(m=-1)
    assert SolverConfig().width(grid) == pytest.approx(4 * grid.dx)
    assert SolverConfig(eps=1.0).width(grid) == 1.0
    assert SolverConfig().with_(dt=0.5).dt == 0.5


def test_plane_wave_snaps_and_warns(grid, caplog):
    with caplog.at_level(logging.WARNING):
        psi = plane_wave(1.0, grid, 1.0)
    assert "snapped" in caplog.text
    assert dirac.norm(psi, grid) == pytest.approx(1.0)


def test_lattice_plane_wave_is_silent(grid, caplog):
    with caplog.at_level(logging.WARNING):
        plane_wave(grid.k[4], grid, 1.0)
    assert caplog.text == ""


def test_packet_normalized_and_centered(grid):
    psi = gaussian_packet(2.0, 2.0, 0.0, grid, 1.0)
    P = np.sum(np.abs(psi) ** 2, axis=0)
    assert np.sum(P) * grid.dx == pytest.approx(1.0)
    assert np.sum(grid.x * P) * grid.dx == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("width", [0.1, 100.0])
def test_packet_width_limits(grid, width):
    with pytest.raises(ValueError):
        gaussian_packet(0.0, width, 0.0, grid, 1.0)


def test_unknown_scenario(grid):
    with pytest.raises(ValueError):
        init_scenario("nope", {}, grid)


def test_superposition_is_node_free(grid):
    from pilot_dirac.algebra import bilinear_current
    from pilot_dirac.solver import G2

    p = grid.k[3]
    psi = superposition(p, -p, (1.0, 1.0), grid, 1.0)
    j = bilinear_current(psi, G2)
    # the two spinors overlap by m/E, so the fringes never reach zero
    c = 1.0 / np.sqrt(p * p + 1.0)
    assert np.allclose(j[1], 0, atol=1e-15)
    assert j[0].min() / j[0].max() == pytest.approx((1 - c) / (1 + c), rel=1e-9)


def test_free_step_preserves_norm(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0, "p": 1.0}, grid)
    cfg = SolverConfig(dt=0.05)
    for _ in range(20):
        psi = step_free(psi, cfg, grid)
    assert dirac.norm(psi, grid) == pytest.approx(1.0, abs=1e-12)


def test_constant_phase_rate_multiplies_by_phase(grid):
    psi0 = init_scenario("gaussian_packet", {"width": 2.0, "p": 1.0}, grid)
    c, cfg = 0.8, SolverConfig(dt=0.01)
    dS = np.array([np.full(grid.nx, c), np.zeros(grid.nx)])
    psi, free = psi0, psi0
    for _ in range(50):
        psi = step_phase_sourced(psi, dS, cfg, grid)
        free = step_free(free, cfg, grid)
    assert np.allclose(psi, free * np.exp(1j * c * 0.5), atol=1e-12)


def test_complex_gradient_rejected(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0}, grid)
    with pytest.raises(ValueError):
        step_phase_sourced(psi, np.ones((2, grid.nx)) * 1j, SolverConfig(), grid)


def test_external_potential_shifts_momentum(grid):
    psi0 = init_scenario("gaussian_packet", {"width": 2.0, "p": 0.0}, grid)
    A = np.array([np.zeros(grid.nx), np.full(grid.nx, 0.5)])
    cfg = SolverConfig(dt=0.01)
    psi = psi0
    for _ in range(100):
        psi = step_external(psi, A, cfg, grid)
    P = np.sum(np.abs(psi) ** 2, axis=0)
    assert abs(np.sum(grid.x * P) * grid.dx) > 0.1


def test_time_derivative_orders():
    t = np.arange(9) * 0.1
    f = np.sin(t)
    d2, s2 = time_derivative(f, 0.1, 2)
    d4, s4 = time_derivative(f, 0.1, 4)
    assert np.max(np.abs(d2 - np.cos(t[s2]))) < 2e-3
    assert np.max(np.abs(d4 - np.cos(t[s4]))) < 1e-5
    _, auto = time_derivative(f, 0.1)
    assert auto == s4
    with pytest.raises(ValueError):
        time_derivative(f[:2], 0.1)
    with pytest.raises(ValueError):
        time_derivative(f, 0.1, 3)


def test_check_uniform():
    assert check_uniform([0, 0.5, 1.0]) == 0.5
    with pytest.raises(ValueError):
        check_uniform([0, 0.5, 1.2])


def test_free_plane_wave_residual():
    g = Grid(nx=1024, dx=0.1)
    psi = plane_wave(g.k[10], g, 1.0)
    cfg = SolverConfig(dt=0.01)
    t, f = evolve(psi, cfg, g, steps=20)
    assert dirac_residual(t, f, cfg, g) < 1e-8


def test_evolve_records_every(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0}, grid)
    t, f = evolve(psi, SolverConfig(dt=0.1), grid, steps=10, record_every=5)
    assert np.allclose(t, [0, 0.5, 1.0])
    assert f.shape == (3, 2, grid.nx)
    with pytest.raises(ValueError):
        evolve(psi, SolverConfig(), grid, Mode.COUPLED, steps=1)


def test_coupled_needs_coupling(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0, "p": 1.0}, grid)
    cfg = SolverConfig(k=0.0)
    state = ParticleState(t=0, x=0.0, u=(1.0, 0.0))
    with pytest.raises(ValueError):
        step_coupled(psi, state, cfg, grid)


def test_coupled_step_preserves_norm(grid):
    psi = init_scenario("gaussian_packet", {"width": 3.0, "p": 1.0}, grid)
    cfg = SolverConfig(dt=0.005, k=1.0)
    run = run_coupled(psi, coupled_initial_state(psi, 0.5, cfg, grid), cfg, grid, steps=40)
    assert dirac.norm(run.phi[-1], grid) == pytest.approx(1.0, abs=1e-12)
    assert run.dt == pytest.approx(0.005)
    assert len(run.particles) == 41


def test_particle_on_node_aborts(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0, "p": 1.0}, grid)
    cfg = SolverConfig(dt=0.005, k=1.0)
    state = ParticleState(t=0, x=20.0, u=(1.0, 0.0))
    with pytest.raises(NodeError) as exc:
        step_coupled(psi, state, cfg, grid)
    assert exc.value.position == 20.0


def test_superposition_fringe_wavelength(grid):
    p = grid.k[4]
    psi = superposition(p, -p, (1.0, 1.0), grid, 1.0)
    P = np.sum(np.abs(psi) ** 2, axis=0)
    shift = int(round(np.pi / p / grid.dx))
    assert np.allclose(np.roll(P, shift), P, atol=1e-14)
    assert not np.allclose(np.roll(P, shift // 2), P)
