"""Gamma matrices, Minkowski metric helpers and spinor bilinears.

Signature is (+, -, -, -). In two spacetime dimensions the canonical set is
gamma^0 = sigma_z and gamma^1 = i sigma_x, which makes the Dirac Hamiltonian
H(k) = alpha k + beta m with alpha = gamma^0 gamma^1 = -sigma_y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpacelikeCurrentError

#: relative imaginary residue tolerated on quantities that must be real
REAL_RESIDUE_TOL = 1e-12
#: |j.j| below this (times the scale) counts as a node
NODE_TOL = 1e-12

_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class GammaSet:
    dim: int
    gammas: tuple
    metric: np.ndarray

    @property
    def size(self) -> int:
        return self.gammas[0].shape[0]

    @property
    def alpha(self) -> list[np.ndarray]:
        """gamma^0 gamma^i for the spatial directions."""
        return [self.gammas[0] @ g for g in self.gammas[1:]]

    @property
    def beta(self) -> np.ndarray:
        return self.gammas[0]


def make_gamma_set(dim: int = 2) -> GammaSet:
    """Dirac matrices for 1+1 (dim=2) or 3+1 (dim=4) dimensions."""
    if dim == 2:
        gammas = (_SIGMA_Z.copy(), 1j * _SIGMA_X)
    elif dim == 4:
        eye2 = np.eye(2, dtype=complex)
        zero = np.zeros((2, 2), dtype=complex)
        g0 = np.block([[eye2, zero], [zero, -eye2]])
        gi = [np.block([[zero, s], [-s, zero]]) for s in (_SIGMA_X, _SIGMA_Y, _SIGMA_Z)]
        gammas = (g0, *gi)
    else:
        raise ValueError(f"unsupported spacetime dimension {dim}; expected 2 or 4")
    for g in gammas:
        g.setflags(write=False)
    metric = np.diag([1.0] + [-1.0] * (dim - 1))
    metric.setflags(write=False)
    return GammaSet(dim=dim, gammas=gammas, metric=metric)


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def adjoint(psi, g: GammaSet) -> np.ndarray:
    """Dirac adjoint psi^dagger gamma^0 as a row vector."""
    psi = np.asarray(psi, dtype=complex)
    return psi.conj() @ g.gammas[0]


def _strip_imaginary(values: np.ndarray, scale: float, what: str) -> np.ndarray:
    resid = np.max(np.abs(values.imag), initial=0.0)
    if resid > REAL_RESIDUE_TOL * max(scale, np.finfo(float).tiny):
        raise ArithmeticError(
            f"{what} has imaginary residue {resid:.3e} (scale {scale:.3e}); gamma set is inconsistent"
        )
    return values.real.copy()


def bilinear_current(psi, g: GammaSet) -> np.ndarray:
    """The current j^alpha = psi-bar gamma^alpha psi.

    ``psi`` may be a single spinor of shape (n,) or a lattice field of shape
    (n, nx); the result has shape (dim,) or (dim, nx) accordingly.
    """
    psi = np.asarray(psi, dtype=complex)
    if not np.all(np.isfinite(psi)):
        raise ValueError("spinor has non-finite components")
    bar = psi.conj()
    # psi-bar gamma^a psi = psi^dagger (gamma^0 gamma^a) psi
    mats = [g.gammas[0] @ ga for ga in g.gammas]
    j = np.array([np.einsum("i...,ij,j...->...", bar, mat, psi) for mat in mats])
    scale = float(np.max(np.abs(psi)) ** 2) if psi.size else 0.0
    return _strip_imaginary(j, scale, "bilinear current")


def scalar_density(psi, g: GammaSet) -> np.ndarray:
    """psi-bar psi."""
    psi = np.asarray(psi, dtype=complex)
    val = np.einsum("i...,ij,j...->...", psi.conj(), g.gammas[0], psi)
    scale = float(np.max(np.abs(psi)) ** 2) if psi.size else 0.0
    return _strip_imaginary(np.asarray(val), scale, "scalar density")


def lower(v, g: GammaSet | None = None) -> np.ndarray:
    """Lower the first index of a vector (or vector field) with the metric."""
    v = np.asarray(v, dtype=float)
    sig = np.ones(v.shape[0])
    sig[1:] = -1.0
    return sig.reshape((-1,) + (1,) * (v.ndim - 1)) * v


def minkowski_dot(a, b, g: GammaSet | None = None) -> np.ndarray:
    """a_alpha b^alpha; works on single vectors and on fields along axis 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] != b.shape[0]:
        raise ValueError("four-vectors of different length")
    return a[0] * b[0] - np.sum(a[1:] * b[1:], axis=0)


def current_magnitude(j, tol: float = NODE_TOL, return_node: bool = False):
    """rho0 = sqrt(j.j) for a timelike (or null) current.

    Values with |j.j| below ``tol * (j^0)^2`` are nodes and map to 0. A
    spacelike current beyond tolerance raises :class:`SpacelikeCurrentError`.
    """
    j = np.asarray(j, dtype=float)
    jj = minkowski_dot(j, j)
    scale = np.maximum(j[0] ** 2, np.finfo(float).tiny)
    node = np.abs(jj) <= tol * scale
    if np.any((jj < 0) & ~node):
        worst = float(np.min(jj / scale))
        raise SpacelikeCurrentError(f"spacelike current, j.j/(j^0)^2 = {worst:.3e}")
    rho0 = np.where(node, 0.0, np.sqrt(np.abs(jj)))
    if np.ndim(rho0) == 0:
        rho0 = float(rho0)
        node = bool(node)
    if return_node:
        return rho0, node
    return rho0
