"""Born-rule sampling of particle positions, ensemble guidance and the
equivariance test."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ModelError
from .lattice import Grid
from .particle import guidance_flow
from .solver import NODE_FRACTION

#: two-sided KS critical coefficient at 1% significance
KS_COEFF_1PCT = 1.63
KS_SAFETY = 1.5
MAX_EXCLUDED = 0.10
MIN_SURVIVORS = 1000
NORM_TOL = 1e-6


@dataclass
class Ensemble:
    n: int
    seed: int
    positions: np.ndarray
    trajectories: np.ndarray | None = None     # (n_t, n), unwrapped
    times: np.ndarray | None = None
    alive: np.ndarray | None = None
    excluded: int = 0
    order_violations: int = 0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("ensemble needs at least one sample")
        if self.alive is None:
            self.alive = np.ones(self.n, dtype=bool)

    @property
    def survivors(self) -> np.ndarray:
        return self.positions[self.alive]


def _cell_cdf(P, grid: Grid):
    """Cumulative weights at cell edges x_i - dx/2, normalized to end at 1."""
    w = np.asarray(P, dtype=float) * grid.dx
    edges = np.concatenate([[0.0], np.cumsum(w)])
    return edges / edges[-1]


def _lower_edge(grid: Grid) -> float:
    return grid.x_min - 0.5 * grid.dx


def sample_positions(P, n: int, seed: int, grid: Grid) -> Ensemble:
    """Inverse-CDF sampling of P over centered cells, linear within a cell."""
    P = np.asarray(P, dtype=float)
    if np.any(P < 0):
        raise ValueError("probability density has negative values")
    total = float(np.sum(P) * grid.dx)
    if abs(total - 1) > NORM_TOL:
        raise ValueError(f"probability density integrates to {total!r}, not 1")
    rng = np.random.default_rng(seed)
    r = rng.random(n)
    cdf = _cell_cdf(P, grid)
    i = np.searchsorted(cdf, r, side="right") - 1
    i = np.clip(i, 0, grid.nx - 1)
    # skip empty cells that searchsorted may land on at their upper edge
    width = cdf[i + 1] - cdf[i]
    frac = np.where(width > 0, (r - cdf[i]) / np.where(width > 0, width, 1.0), 0.5)
    x = _lower_edge(grid) + (i + np.clip(frac, 0.0, 1.0)) * grid.dx
    return Ensemble(n=n, seed=seed, positions=x)


def _thread_count() -> int:
    """Worker threads: CPU count, capped by PILOT_DIRAC_THREADS when set."""
    n = os.cpu_count() or 1
    raw = os.environ.get("PILOT_DIRAC_THREADS", "").strip()
    if raw:
        try:
            n = min(n, int(raw))
        except ValueError:
            raise ValueError(f"PILOT_DIRAC_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def _flow_chunk(xs, snapshots, times, grid, tol, alive):
    """Advance one chunk of samples through every snapshot interval."""
    xs = xs.copy()
    alive = alive.copy()
    path = np.empty((len(snapshots), xs.size))
    path[0] = xs
    for n in range(1, len(snapshots)):
        dt = times[n] - times[n - 1]
        idx = np.flatnonzero(alive)
        if idx.size:
            x_new, _, node = guidance_flow(xs[idx], snapshots[n - 1].j, snapshots[n].j, dt, grid, tol)
            x_new = np.where(node, xs[idx], x_new)
            alive[idx[node]] = False
            xs[idx] = x_new
        path[n] = xs
    return path, alive


def evolve_ensemble(ens: Ensemble, snapshots, grid: Grid, threads: int | None = None) -> Ensemble:
    """Move every sample along the guidance flow of a snapshot series.

    Samples that hit a node are frozen and excluded; more than 10% excluded
    raises :class:`ModelError`. Chunks run on up to PILOT_DIRAC_THREADS
    threads and give results identical to a serial run.
    """
    snapshots = list(snapshots)
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots to evolve an ensemble")
    times = np.array([s.t for s in snapshots])
    if np.any(np.diff(times) <= 0):
        raise ValueError("snapshot times must increase")
    tol = NODE_FRACTION * max(float(np.max(s.P)) for s in snapshots)
    threads = _thread_count() if threads is None else max(1, threads)
    chunks = np.array_split(np.arange(ens.n), min(threads, ens.n))
    alive0 = ens.alive.copy()

    def work(ix):
        return _flow_chunk(ens.positions[ix], snapshots, times, grid, tol, alive0[ix])

    if len(chunks) == 1:
        results = [work(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(work, chunks))
    path = np.concatenate([r[0] for r in results], axis=1)
    alive = np.concatenate([r[1] for r in results])
    excluded = ens.excluded + int(np.sum(alive0 & ~alive))
    if excluded > MAX_EXCLUDED * ens.n:
        raise ModelError(f"{excluded} of {ens.n} samples hit nodes (cap {MAX_EXCLUDED:.0%})")
    violations = ens.order_violations + order_violations(path[:, alive])
    return Ensemble(n=ens.n, seed=ens.seed, positions=path[-1], trajectories=path, times=times,
                    alive=alive, excluded=excluded, order_violations=violations,
                    info=dict(ens.info))


def order_violations(path) -> int:
    """Number of adjacent sample pairs whose initial ordering flips during the run."""
    path = np.asarray(path)
    if path.shape[1] < 2:
        return 0
    order = np.argsort(path[0], kind="stable")
    gaps = np.diff(path[:, order], axis=1)
    return int(np.sum(np.any(gaps < 0, axis=0)))


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical: float
    n: int
    passed: bool

    def as_dict(self) -> dict:
        return {"ks": self.statistic, "critical": self.critical, "n": self.n,
                "verdict": "PASS" if self.passed else "FAIL"}


def born_cdf(P, grid: Grid):
    """CDF of P as a callable on [lower edge, lower edge + L)."""
    cdf = _cell_cdf(P, grid)
    edges = _lower_edge(grid) + grid.dx * np.arange(grid.nx + 1)
    return lambda x: np.interp(x, edges, cdf)


def equivariance_test(ens: Ensemble, P, grid: Grid, safety: float = KS_SAFETY,
                      min_survivors: int = MIN_SURVIVORS) -> KSResult:
    """Two-sided KS test of surviving positions against the CDF of P."""
    alive = ens.alive
    survivors = int(np.sum(alive))
    if survivors < (1 - MAX_EXCLUDED) * ens.n or survivors < min_survivors:
        raise ValueError(f"too few surviving samples: {survivors} of {ens.n}")
    lo = _lower_edge(grid)
    x = lo + np.mod(ens.positions[alive] - lo, grid.length)
    stat = float(stats.kstest(x, born_cdf(P, grid)).statistic)
    crit = safety * KS_COEFF_1PCT / np.sqrt(survivors)
    return KSResult(statistic=stat, critical=float(crit), n=survivors, passed=stat < crit)
