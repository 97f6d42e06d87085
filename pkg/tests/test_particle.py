import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pilot_dirac.algebra import minkowski_dot
from pilot_dirac.emtensor import total_conservation_check
from pilot_dirac.errors import NodeError
from pilot_dirac.observables import current_field
from pilot_dirac.particle import (ParticleState, advance_trajectory, alignment, coupled_initial_state,
                                  dL_dj, generalized_momentum, guidance_velocity, guided_state,
                                  lagrangian_L, unit_velocity)
from pilot_dirac.solver import SolverConfig, evolve, init_scenario, plane_wave, run_coupled
from pilot_dirac.verify import current_oracle_error, momentum_oracle_error


def test_state_validation():
    with pytest.raises(ValueError):
        ParticleState(t=0, x=0, u=(1.0, 0.5))
    with pytest.raises(ValueError):
        ParticleState(t=0, x=0, u=(-1.0, 0.0))
    ParticleState(t=0, x=0, u=(np.cosh(0.3), np.sinh(0.3)))


def test_lagrangian_at_rest():
    # -k (rho0 + u.j) with j = (1, 0)
    assert lagrangian_L([1, 0], [1, 0], 1.0, 2.0) == pytest.approx(-4.0)
    with pytest.raises(ValueError):
        lagrangian_L([1, 0], [1, 0], 0.0, 1.0)


@given(st.floats(-3, 3), st.floats(0.1, 5), st.floats(0.1, 4))
def test_momentum_is_2kj_along_guidance(eta, rho0, k):
    j = rho0 * np.array([np.cosh(eta), np.sinh(eta)])
    p = generalized_momentum(unit_velocity(j), j, rho0, k)
    assert np.allclose(p, 2 * k * j, rtol=1e-12)


def test_momentum_oracle():
    assert momentum_oracle_error(100, seed=5) < 1e-6


def test_current_oracle():
    assert current_oracle_error(100, seed=6) < 1e-6


def test_dL_dj_is_covariant():
    d = dL_dj([1.0, 0.0], [2.0, 1.0], np.sqrt(3.0), 1.0)
    assert d == pytest.approx([-(1 + 2 / np.sqrt(3)), 1 / np.sqrt(3)])


def test_guidance_velocity_plane_wave(grid):
    psi = plane_wave(grid.k[7], grid, 1.0)
    u = guidance_velocity(current_field(psi), 0.77, grid)
    E = np.hypot(grid.k[7], 1.0)
    assert u == pytest.approx([E, grid.k[7]], abs=1e-12)
    assert minkowski_dot(u, u) == pytest.approx(1.0)


def test_guidance_fails_at_node(grid):
    q = 4 * 2 * np.pi / grid.length
    psi = np.array([np.cos(q * grid.x), np.zeros(grid.nx)], dtype=complex)
    node = np.pi / (2 * q)
    with pytest.raises(NodeError):
        guidance_velocity(current_field(psi), node, grid)


def test_plane_wave_trajectory_is_straight(grid):
    k, m, dt = grid.k[5], 1.0, 0.05
    psi = plane_wave(k, grid, m)
    cfg = SolverConfig(dt=dt, k=1.5)
    t, f = evolve(psi, cfg, grid, steps=20)
    snaps = [current_field(ff, tt) for tt, ff in zip(t, f)]
    state = guided_state(snaps[0], -1.0, cfg.k, grid)
    for a, b in zip(snaps[:-1], snaps[1:]):
        state = advance_trajectory(state, (a, b), dt, cfg.k, grid)
    E = np.hypot(k, m)
    assert state.x == pytest.approx(-1.0 + k / E * 1.0, abs=1e-10)
    assert state.tau == pytest.approx(m / E, abs=1e-12)
    # S accumulates L dtau with L = -2k rho0 along guidance
    rho0 = snaps[0].rho0[0]
    assert state.S == pytest.approx(-2 * cfg.k * rho0 * state.tau, rel=1e-9)
    assert state.p == pytest.approx(tuple(2 * cfg.k * snaps[0].j[:, 0]), rel=1e-9)


@pytest.fixture(scope="module")
def coupled_run():
    from pilot_dirac.lattice import Grid

    g = Grid(nx=256, dx=0.2)
    psi = init_scenario("gaussian_packet", {"width": 3.0, "p": 1.0}, g)
    cfg = SolverConfig(dt=0.005, k=1.0)
    return run_coupled(psi, coupled_initial_state(psi, 0.5, cfg, g), cfg, g, steps=200)


def test_coupled_particle_stays_on_shell(coupled_run):
    assert max(p.shell_residual for p in coupled_run.particles) < 1e-5
    for p in coupled_run.particles:
        assert minkowski_dot(p.u, p.u) == pytest.approx(1.0, abs=1e-12)


def test_coupled_particle_starts_aligned(coupled_run):
    p0 = coupled_run.particles[0]
    assert alignment(p0, coupled_run.phi[0], coupled_run.cfg, coupled_run.grid) < 1e-12


def test_particle_gains_what_field_loses(coupled_run):
    e = total_conservation_check(coupled_run)
    dp0 = coupled_run.particles[-1].p[0] - coupled_run.particles[0].p[0]
    dEf = e.E_field[-1] - e.E_field[0]
    assert abs(dEf) > 1e-3
    assert abs(dp0 + dEf) < 0.05 * abs(dEf)


def test_interference_field_momentum_transfer(grid):
    psi = init_scenario("superposition", {"p1": grid.k[5], "p2": -grid.k[5], "w1": 1.0, "w2": 0.6}, grid)
    cfg = SolverConfig(dt=0.005, k=1.0)
    run = run_coupled(psi, coupled_initial_state(psi, 0.3, cfg, grid), cfg, grid, steps=200)
    e = total_conservation_check(run)
    dp0 = run.particles[-1].p[0] - run.particles[0].p[0]
    dEf = e.E_field[-1] - e.E_field[0]
    assert abs(dp0 + dEf) < 0.05 * abs(dEf)


def test_cannot_start_on_node(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0, "p": 1.0}, grid)
    with pytest.raises(NodeError):
        coupled_initial_state(psi, 20.0, SolverConfig(), grid)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3))
def test_unit_velocity_on_shell(eta):
    u = unit_velocity(3.0 * np.array([np.cosh(eta), np.sinh(eta)]))
    assert minkowski_dot(u, u) == pytest.approx(1.0)
