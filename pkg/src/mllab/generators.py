"""Seeded random instances: step functions and atom families."""

from __future__ import annotations

import hashlib

import numpy as np

from .atoms import Atom, AtomFamily, atom_size
from .dyadic import DyadicCube, StepFunction
from .polynomials import project_dense, projection_levels

__all__ = ["trial_seed", "as_rng", "gen_step_function", "gen_atom_family", "gen_atom"]

VALUE_DISTS = ("uniform", "heavy-tail", "indicator-mix")
CUBE_LAWS = ("nested", "disjoint", "random")


def trial_seed(root: int, i: int) -> int:
    """Per-trial seed ``hash(root, i)``; independent of execution order."""
    digest = hashlib.sha256(f"{int(root)}:{int(i)}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _values(rng: np.random.Generator, n: int, dist: str, beta: float) -> np.ndarray:
    if dist == "uniform":
        v = rng.uniform(-1.0, 1.0, n)
        v[v == 0.0] = 0.5
        return v
    if dist == "heavy-tail":
        u = 1.0 - rng.random(n)  # in (0, 1]
        return rng.choice([-1.0, 1.0], n) * np.minimum(u ** (-1.0 / beta), 1e3)
    if dist == "indicator-mix":
        return rng.choice([0.5, 1.0, 2.0], n) * rng.choice([-1.0, 1.0], n)
    raise ValueError(f"unknown value distribution {dist!r}; expected one of {VALUE_DISTS}")


def gen_step_function(seed, dim: int = 1, level: int = 4, support_cells: int = 8,
                      value_dist: str = "uniform", extent_cells: int | None = None,
                      beta: float = 2.0, origin=None) -> StepFunction:
    """Random step function with ``support_cells`` nonzero cells at ``level``.

    Cells are drawn from the box ``origin + [0, extent_cells)**dim`` (default:
    the unit cube's cells, enlarged to the next power of two if too few).
    """
    if support_cells < 1:
        raise ValueError("support_cells must be >= 1")
    rng = as_rng(seed)
    if extent_cells is None:
        extent_cells = 1 << max(level, 0)
        while extent_cells**dim < support_cells:
            extent_cells *= 2
    total = extent_cells**dim
    if support_cells > total:
        raise ValueError("more support cells than available cells")
    flat = rng.choice(total, support_cells, replace=False)
    idx = np.stack(np.unravel_index(flat, (extent_cells,) * dim), axis=1).astype(np.int64)
    if origin is not None:
        idx = idx + np.asarray(origin, dtype=np.int64)
    return StepFunction(dim, level, idx, _values(rng, support_cells, value_dist, beta))


def gen_atom(rng: np.random.Generator, cube: DyadicCube, s: float, t: float, kind: str = "weak-morrey",
             K: int = -1, depth: int | None = None) -> Atom:
    """Bounded random function on ``cube``, moment-corrected to degree ``K`` and
    rescaled to between half and all of the size bound ``|Q|**(1/s)``."""
    if depth is None:
        depth = max(2, projection_levels(cube.dim, K) + 1)
    level = cube.level + depth
    n = 1 << depth
    while True:
        block = rng.uniform(-1.0, 1.0, (n,) * cube.dim)
        block[rng.random(block.shape) < 0.25] = 0.0
        if K >= 0:
            block = block - project_dense(block, cube, level, K)
        if np.max(np.abs(block)) > 1e-8:
            break
    lo, _ = cube.cell_range(level)
    data = StepFunction.from_dense(block, level, lo)
    atom = Atom(cube, data, K)
    ratio = atom_size(atom, s, t, kind) / cube.volume() ** (1.0 / s)
    target = rng.uniform(0.5, 1.0)
    return Atom(cube, data.scale(target / ratio), K)


def _cubes(rng: np.random.Generator, count: int, law: str, dim: int, base_level: int) -> list[DyadicCube]:
    if law == "nested":
        start = DyadicCube(base_level, tuple(int(k) for k in rng.integers(0, 4, dim)))
        return [start.ancestor(base_level - j) for j in range(count)]
    if law == "disjoint":
        span = 1
        while span**dim < count:
            span *= 2
        span *= 2
        flat = rng.choice(span**dim, count, replace=False)
        idx = np.stack(np.unravel_index(flat, (span,) * dim), axis=1)
        return [DyadicCube(base_level, tuple(int(k) for k in row)) for row in idx]
    if law == "random":
        out = []
        for _ in range(count):
            lev = base_level - int(rng.integers(0, 3))
            out.append(DyadicCube(lev, tuple(int(k) for k in rng.integers(0, 4, dim))))
        return out
    raise ValueError(f"unknown cube law {law!r}; expected one of {CUBE_LAWS}")


def gen_atom_family(seed, count: int = 4, cube_law: str = "nested",
                    normalization: tuple[float, float, str] = (4.0, 3.0, "weak-morrey"),
                    K: int = -1, v: float = 1.0, dim: int = 1, base_level: int = 2) -> AtomFamily:
    """Random atom family whose atoms satisfy the size and cancellation hypotheses by construction."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = as_rng(seed)
    s, t, kind = normalization
    cubes = _cubes(rng, count, cube_law, dim, base_level)
    atoms = tuple(gen_atom(rng, q, s, t, kind, K) for q in cubes)
    lams = tuple(float(x) for x in rng.uniform(0.2, 2.0, count))
    return AtomFamily(atoms, lams, v)
