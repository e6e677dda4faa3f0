"""Exact cell moments and discrete polynomial projection on dyadic cubes.

Monomials are centered at the cube center and scaled by the side length,
``((x - c) / l)**beta``, which keeps the Gram matrices well conditioned.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .dyadic import DyadicCube, StepFunction

__all__ = [
    "SingularProjection",
    "multi_indices",
    "cell_moments",
    "moments",
    "moment_residual",
    "projection_levels",
    "project_dense",
]


class SingularProjection(ValueError):
    """The projection Gram matrix is numerically singular on a cube."""


@lru_cache(maxsize=None)
def multi_indices(dim: int, K: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices with ``|beta| <= K``, graded then lexicographic."""
    if K < 0:
        return ()
    out = []
    for deg in range(K + 1):
        for beta in itertools.product(range(deg + 1), repeat=dim):
            if sum(beta) == deg:
                out.append(beta)
    return tuple(out)


def _axis_moment(a: np.ndarray, b: np.ndarray, j: int, scale: float) -> np.ndarray:
    # integral of ((x - c)/l)**j over [a, b) with a, b already centered and scaled
    return scale / (j + 1) * (b ** (j + 1) - a ** (j + 1))


def cell_moments(indices: np.ndarray, level: int, cube: DyadicCube, K: int) -> np.ndarray:
    """``M[i, m] = integral over cell i of ((x - c)/l)**beta_m``."""
    dim = cube.dim
    h = 2.0 ** (-level)
    ell = cube.side
    c = cube.center
    lo = (indices * h - c) / ell
    hi = ((indices + 1) * h - c) / ell
    betas = multi_indices(dim, K)
    out = np.ones((len(indices), len(betas)))
    for m, beta in enumerate(betas):
        for ax, j in enumerate(beta):
            out[:, m] *= _axis_moment(lo[:, ax], hi[:, ax], j, ell)
    return out


def moments(f: StepFunction, cube: DyadicCube, K: int) -> np.ndarray:
    if K < 0 or f.is_zero():
        return np.zeros(len(multi_indices(f.dim, K)))
    level = max(f.level, cube.level)
    g = f.refine(level)
    return g.values @ cell_moments(g.indices, level, cube, K)


def moment_residual(f: StepFunction, cube: DyadicCube, K: int) -> float:
    """Largest scaled moment relative to ``||f||_inf |Q|`` (0 for ``K < 0``)."""
    if K < 0 or f.is_zero():
        return 0.0
    m = moments(f, cube, K)
    return float(np.max(np.abs(m)) / (f.sup_norm() * cube.volume()))


def projection_levels(dim: int, K: int) -> int:
    """Extra refinement so every cube has at least ``K + 1`` cells per axis."""
    return max(0, int(np.ceil(np.log2(K + 1)))) if K >= 1 else 0


def _solve(G: np.ndarray, b: np.ndarray, cube: DyadicCube, pivot_tol: float = 1e-12) -> np.ndarray:
    """Gaussian elimination with partial pivoting on a small system."""
    A = np.array(G, dtype=float)
    x = np.array(b, dtype=float)
    n = len(x)
    scale = np.max(np.abs(A)) if n else 1.0
    for col in range(n):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[piv, col]) <= pivot_tol * scale:
            raise SingularProjection(
                f"projection Gram matrix singular on cube level={cube.level} index={list(cube.index)}"
            )
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            x[[col, piv]] = x[[piv, col]]
        for row in range(col + 1, n):
            m = A[row, col] / A[col, col]
            A[row, col:] -= m * A[col, col:]
            x[row] -= m * x[col]
    for col in range(n - 1, -1, -1):
        x[col] = (x[col] - A[col, col + 1:] @ x[col + 1:]) / A[col, col]
    return x


def project_dense(block: np.ndarray, cube: DyadicCube, level: int, K: int) -> np.ndarray:
    """Project the step function ``block`` (dense cells of ``cube`` at ``level``) onto
    cell averages of polynomials of degree ``<= K``, preserving all moments up to ``K``.
    """
    if K < 0:
        return np.zeros_like(block)
    dim = cube.dim
    lo, hi = cube.cell_range(level)
    grids = np.meshgrid(*[np.arange(a, b) for a, b in zip(lo, hi)], indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    M = cell_moments(idx, level, cube, K)
    w = 2.0 ** (-level * dim)
    G = M.T @ M / w
    rhs = block.reshape(-1) @ M
    coef = _solve(G, rhs, cube)
    return ((M / w) @ coef).reshape(block.shape)
