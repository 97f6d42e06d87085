"""Execute one configured scenario and write its output tree."""

from __future__ import annotations

import logging

import numpy as np

from . import dirac, emtensor
from .config import RunConfig
from .ensemble import equivariance_test, evolve_ensemble, sample_positions
from .gauge import PhaseFunction
from .io import OutputTree
from .lattice import Grid
from .observables import continuity_residual, current_field
from .particle import coupled_initial_state
from .solver import (Mode, SolverConfig, dirac_residual, init_scenario, run_coupled,
                     step_external, step_free, step_phase_sourced)

log = logging.getLogger(__name__)

#: snapshots held in memory at once while guiding an ensemble
ENSEMBLE_CHUNK = 256


def build(cfg: RunConfig):
    grid = Grid(nx=cfg["grid.nx"], dx=cfg["grid.dx"])
    scfg = SolverConfig(dt=cfg["solver.dt"], m=cfg["solver.m"], k=cfg["solver.k"],
                        eps=cfg["solver.eps"], steps=cfg["solver.steps"])
    psi0 = init_scenario(cfg["scenario"], cfg.scenario_params, grid, scfg.m)
    return grid, scfg, psi0


def linear_source(cfg: RunConfig, grid: Grid):
    if cfg.mode is Mode.PHASE_SOURCED:
        kind = cfg["phase.kind"]
        if kind == "zero":
            phase = PhaseFunction.zero()
        elif kind == "rate":
            phase = PhaseFunction.constant_rate(cfg["phase.c"])
        else:
            phase = PhaseFunction.oscillatory(cfg["phase.a"], cfg["phase.omega"], grid.length)
        return phase.source(grid)
    if cfg.mode is Mode.EXTERNAL_POTENTIAL:
        return np.array([np.full(grid.nx, cfg["potential.a0"]), np.full(grid.nx, cfg["potential.a1"])])
    return None


def _field_rows(t, psi, grid):
    snap = current_field(psi, t)
    for i in range(grid.nx):
        yield (t, grid.x[i], psi[0, i].real, psi[0, i].imag, psi[1, i].real, psi[1, i].imag,
               snap.P[i], snap.j[1, i], snap.rho0[i])


FIELD_HEADER = ("t", "x", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "P", "j1", "rho0")


def run_linear(cfg: RunConfig, tree: OutputTree) -> dict:
    grid, scfg, psi = build(cfg)
    mode, source = cfg.mode, linear_source(cfg, grid)
    every = cfg["solver.record_every"]
    n_ens = cfg["ensemble.n"]
    times, fields = [0.0], [psi]
    ens = None
    if n_ens:
        snap0 = current_field(psi, 0.0)
        ens = sample_positions(snap0.P, n_ens, cfg["ensemble.seed"], grid)
        ens_start = ens.positions.copy()
        pending = [snap0]
        keep = min(cfg["ensemble.trajectories"], n_ens)
        traj_t, traj_x = [0.0], [ens.positions[:keep].copy()]
    t = 0.0
    for n in range(1, scfg.steps + 1):
        if mode is Mode.FREE:
            psi = step_free(psi, scfg, grid)
        elif mode is Mode.PHASE_SOURCED:
            psi = step_phase_sourced(psi, source, scfg, grid, t)
        else:
            psi = step_external(psi, source, scfg, grid, t)
        t = n * scfg.dt
        if n % every == 0:
            times.append(t)
            fields.append(psi)
        if ens is not None:
            pending.append(current_field(psi, t))
            if len(pending) > ENSEMBLE_CHUNK or n == scfg.steps:
                ens = evolve_ensemble(ens, pending, grid)
                traj_t.extend(ens.times[1:])
                traj_x.extend(ens.trajectories[1:, :keep])
                pending = [pending[-1]]
    times = np.array(times)
    fields = np.array(fields)
    summary = {
        "mode": mode.value,
        "scenario": cfg["scenario"],
        "t_final": t,
        "norm_final": dirac.norm(psi, grid),
    }
    # finite-difference residuals only mean something on every-step snapshots
    if len(times) >= 3 and every == 1:
        summary["continuity_residual"] = continuity_residual(times, fields, grid)
        summary["dirac_residual"] = dirac_residual(times, fields, scfg, grid, mode, source)
    if cfg["emit.fields"]:
        tree.write_csv("fields.csv", FIELD_HEADER,
                       (row for tt, f in zip(times, fields) for row in _field_rows(tt, f, grid)))
    if ens is not None:
        verdict = {"n": ens.n, "seed": ens.seed, "excluded": ens.excluded,
                   "order_violations": ens.order_violations, "t_final": t}
        if int(np.sum(ens.alive)) >= 1000:
            verdict.update(equivariance_test(ens, current_field(psi, t).P, grid).as_dict())
        else:
            verdict["verdict"] = "SKIPPED (fewer than 1000 surviving samples)"
        tree.write_csv("ensemble_positions.csv", ("sample", "x0", "x_final", "alive"),
                       zip(range(ens.n), ens_start, ens.positions, ens.alive))
        tree.write_json("ensemble.json", verdict)
        if cfg["emit.trajectories"] and keep:
            tree.write_csv("trajectories.csv", ("t",) + tuple(f"x{i}" for i in range(keep)),
                           (np.concatenate([[tt], xx]) for tt, xx in zip(traj_t, traj_x)))
        summary["equivariance"] = verdict.get("verdict")
    return summary


def run_coupled_scenario(cfg: RunConfig, tree: OutputTree) -> dict:
    grid, scfg, psi = build(cfg)
    particle = coupled_initial_state(psi, cfg["particle.x0"], scfg, grid)
    run = run_coupled(psi, particle, scfg, grid, record_every=cfg["solver.record_every"])
    summary = {"mode": "coupled", "scenario": cfg["scenario"], "t_final": float(run.times[-1]),
               "norm_final": dirac.norm(run.phi[-1], grid),
               "max_shell_residual": max(p.shell_residual for p in run.particles)}
    if cfg["emit.fields"]:
        tree.write_csv("fields.csv", FIELD_HEADER,
                       (row for tt, f in zip(run.times, run.phi) for row in _field_rows(tt, f, grid)))
    if cfg["emit.trajectories"]:
        tree.write_csv("particle.csv", ("t", "x", "u0", "u1", "p0", "p1", "tau", "S", "shell_residual"),
                       ((p.t, p.x, *p.u, *p.p, p.tau, p.S, p.shell_residual) for p in run.particles))
    if cfg["emit.energy"] and len(run.times) >= 3:
        tens = emtensor.coupled_tensors(run)
        energy = emtensor.total_conservation_check(run, tens)
        ident = emtensor.field_divergence_identity_check(run, tens)
        tree.write_csv("energy.csv", ("t", "E_field", "E_particle", "E_total"),
                       zip(energy.times, energy.E_field, energy.E_particle, energy.E_total))
        tree.write_json("identity.json", {"divergence_identities": ident.as_dict(),
                                          "energy": energy.as_dict()})
        summary.update(energy.as_dict())
    return summary


def execute(cfg: RunConfig, tree: OutputTree) -> dict:
    if cfg.mode is Mode.COUPLED:
        summary = run_coupled_scenario(cfg, tree)
    else:
        summary = run_linear(cfg, tree)
    tree.write_json("summary.json", summary)
    return summary
