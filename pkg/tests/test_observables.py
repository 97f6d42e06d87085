import numpy as np
import pytest

from pilot_dirac.observables import born_weight_check, continuity_residual, current_field
from pilot_dirac.solver import Mode, SolverConfig, evolve, init_scenario


def test_snapshot_is_read_only(grid):
    snap = current_field(init_scenario("gaussian_packet", {"width": 2.0}, grid), 1.5)
    assert snap.t == 1.5
    with pytest.raises(ValueError):
        snap.P[0] = 1.0


def test_standing_wave_nodes(grid):
    q = 4 * 2 * np.pi / grid.length
    psi = np.array([np.cos(q * grid.x), np.zeros(grid.nx)], dtype=complex)
    snap = current_field(psi)
    assert np.allclose(snap.j[1], 0)
    nodes = np.abs(np.cos(q * grid.x)) < 1e-5
    assert np.array_equal(snap.node_mask, nodes)


def test_rho0_equals_P_at_rest(grid):
    psi = np.array([np.ones(grid.nx), np.zeros(grid.nx)], dtype=complex)
    snap = current_field(psi)
    assert np.allclose(snap.rho0, snap.P)
    assert not snap.node_mask.any()


def test_born_weight(grid):
    psi = init_scenario("gaussian_packet", {"width": 2.0}, grid)
    total, low = born_weight_check(current_field(psi), grid)
    assert total == pytest.approx(1.0)
    assert low >= 0


@pytest.mark.parametrize("mode", [Mode.FREE, Mode.PHASE_SOURCED])
def test_continuity_second_order(grid, mode):
    from pilot_dirac.gauge import PhaseFunction

    psi = init_scenario("gaussian_packet", {"width": 3.0, "p": 1.0}, grid)
    src = PhaseFunction.oscillatory(1.0, 1.0, grid.length).source(grid) if mode is Mode.PHASE_SOURCED else None
    res = []
    for dt in (0.02, 0.01):
        t, f = evolve(psi, SolverConfig(dt=dt), grid, mode, src, steps=int(round(0.5 / dt)))
        res.append(continuity_residual(t, f, grid))
    assert res[1] < 1e-6
    assert 3.0 < res[0] / res[1] < 5.0
