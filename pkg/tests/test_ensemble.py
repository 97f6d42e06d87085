import numpy as np
import pytest
from scipy import stats

from pilot_dirac.ensemble import (Ensemble, equivariance_test, evolve_ensemble, order_violations,
                                  sample_positions)
from pilot_dirac.errors import ModelError
from pilot_dirac.observables import current_field
from pilot_dirac.particle import advance_trajectory, guided_state
from pilot_dirac.solver import SolverConfig, evolve, init_scenario, plane_wave


def test_uniform_density_ks(grid):
    n = 10_000
    P = np.full(grid.nx, 1 / grid.length)
    ens = sample_positions(P, n, 3, grid)
    lo = grid.x_min - grid.dx / 2
    stat = stats.kstest(ens.positions, "uniform", args=(lo, grid.length)).statistic
    assert stat < 1.63 / np.sqrt(n)


def test_single_cell_density(grid):
    P = np.zeros(grid.nx)
    P[40] = 1 / grid.dx
    x = sample_positions(P, 500, 1, grid).positions
    assert np.all(np.abs(x - grid.x[40]) <= grid.dx / 2)


def test_sampling_is_deterministic(grid):
    P = np.full(grid.nx, 1 / grid.length)
    a = sample_positions(P, 100, 9, grid).positions
    b = sample_positions(P, 100, 9, grid).positions
    c = sample_positions(P, 100, 10, grid).positions
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_unnormalized_density_rejected(grid):
    with pytest.raises(ValueError):
        sample_positions(np.ones(grid.nx), 10, 0, grid)
    with pytest.raises(ValueError):
        Ensemble(n=0, seed=0, positions=np.empty(0))


def _snapshots(psi, grid, steps, dt=0.02):
    t, f = evolve(psi, SolverConfig(dt=dt), grid, steps=steps)
    return [current_field(ff, tt) for tt, ff in zip(t, f)]


def test_plane_wave_ensemble_moves_rigidly(grid):
    k = grid.k[4]
    snaps = _snapshots(plane_wave(k, grid, 1.0), grid, 25)
    ens = evolve_ensemble(sample_positions(snaps[0].P, 200, 0, grid), snaps, grid)
    shift = ens.trajectories[-1] - ens.trajectories[0]
    assert np.allclose(shift, k / np.hypot(k, 1.0) * 0.5, atol=1e-10)
    stat = equivariance_test(ens, snaps[-1].P, grid, min_survivors=100)
    assert stat.passed


def test_single_sample_matches_trajectory(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0, "p": 0.5}, grid)
    snaps = _snapshots(psi, grid, 20)
    x0 = 0.4
    ens = evolve_ensemble(Ensemble(n=1, seed=0, positions=np.array([x0])), snaps, grid)
    state = guided_state(snaps[0], x0, 1.0, grid)
    for a, b in zip(snaps[:-1], snaps[1:]):
        state = advance_trajectory(state, (a, b), b.t - a.t, 1.0, grid)
    assert ens.positions[0] == state.x


def test_threading_does_not_change_results(grid, monkeypatch):
    psi = init_scenario("gaussian_packet", {"width": 2.0, "p": 0.5}, grid)
    snaps = _snapshots(psi, grid, 20)
    ens = sample_positions(snaps[0].P, 1001, 4, grid)
    serial = evolve_ensemble(ens, snaps, grid, threads=1)
    parallel = evolve_ensemble(ens, snaps, grid, threads=4)
    assert np.array_equal(serial.trajectories, parallel.trajectories)
    monkeypatch.setenv("PILOT_DIRAC_THREADS", "2")
    assert np.array_equal(evolve_ensemble(ens, snaps, grid).positions, serial.positions)
    monkeypatch.setenv("PILOT_DIRAC_THREADS", "many")
    with pytest.raises(ValueError):
        evolve_ensemble(ens, snaps, grid)


def test_trajectories_keep_their_order(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0, "p": 0.0}, grid)
    snaps = _snapshots(psi, grid, 50)
    ens = evolve_ensemble(sample_positions(snaps[0].P, 2000, 2, grid), snaps, grid)
    assert ens.order_violations == 0


def test_order_violation_counter():
    path = np.array([[0.0, 1.0, 2.0], [0.0, 3.0, 2.5]])
    assert order_violations(path) == 1


def test_node_crossers_excluded_and_capped(grid):
    q = 4 * 2 * np.pi / grid.length
    psi = np.array([np.cos(q * grid.x), np.zeros(grid.nx)], dtype=complex)
    snaps = [current_field(psi, 0.0), current_field(psi, 0.1)]
    nodes = np.pi / (2 * q) + np.arange(4) * np.pi / q
    far = np.zeros(96)
    ens = evolve_ensemble(Ensemble(n=100, seed=0, positions=np.concatenate([nodes, far])), snaps, grid)
    assert ens.excluded == 4
    assert not ens.alive[:4].any() and ens.alive[4:].all()
    crowd = np.concatenate([np.repeat(nodes, 5), far[:50]])
    with pytest.raises(ModelError):
        evolve_ensemble(Ensemble(n=70, seed=0, positions=crowd), snaps, grid)


def test_evolve_needs_two_snapshots(grid):
    snap = current_field(plane_wave(grid.k[1], grid, 1.0))
    with pytest.raises(ValueError):
        evolve_ensemble(Ensemble(n=1, seed=0, positions=np.zeros(1)), [snap], grid)


def test_too_few_survivors(grid):
    P = np.full(grid.nx, 1 / grid.length)
    with pytest.raises(ValueError):
        equivariance_test(sample_positions(P, 500, 0, grid), P, grid)


def test_equivariance_and_wrong_field(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0, "p": 0.5}, grid)
    cfg = SolverConfig(dt=0.02)
    t, f = evolve(psi, cfg, grid, steps=100)
    free = [current_field(ff, tt) for tt, ff in zip(t, f)]
    ens = sample_positions(free[0].P, 3000, 11, grid)
    good = equivariance_test(evolve_ensemble(ens, free, grid), free[-1].P, grid)
    assert good.passed
    from pilot_dirac.solver import Mode

    A = np.array([np.zeros(grid.nx), np.full(grid.nx, 0.5)])
    t, f = evolve(psi, cfg, grid, Mode.EXTERNAL_POTENTIAL, A, steps=100)
    wrong = [current_field(ff, tt) for tt, ff in zip(t, f)]
    bad = equivariance_test(evolve_ensemble(ens, wrong, grid), free[-1].P, grid)
    assert not bad.passed
    assert bad.as_dict()["verdict"] == "FAIL"
