"""Dyadic cubes and exactly represented step functions.

A :class:`StepFunction` is a finite map from grid cells at one dyadic level to
real values.  Everything downstream (norms, operators, atoms) consumes these.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

__all__ = [
    "DyadicCube",
    "StepFunction",
    "GridIndexSet",
    "refine",
    "enumerate_cubes",
    "ParseError",
]


class ParseError(ValueError):
    """Raised for malformed step-function or atom-family JSON."""


@dataclass(frozen=True, order=True)
class DyadicCube:
    """The cube ``2**-level * ([k1, k1+1) x ... x [kn, kn+1))``."""

    level: int
    index: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.index) not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {len(self.index)}")
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "index", tuple(int(k) for k in self.index))

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    def volume(self) -> float:
        return 2.0 ** (-self.level * self.dim)

    @property
    def lower(self) -> np.ndarray:
        return np.array(self.index, dtype=float) * self.side

    @property
    def upper(self) -> np.ndarray:
        return (np.array(self.index, dtype=float) + 1.0) * self.side

    @property
    def center(self) -> np.ndarray:
        return (np.array(self.index, dtype=float) + 0.5) * self.side

    def parent(self) -> DyadicCube:
        return DyadicCube(self.level - 1, tuple(k >> 1 for k in self.index))

    def ancestor(self, level: int) -> DyadicCube:
        shift = self.level - level
        if shift < 0:
            raise ValueError("ancestor level must not be finer than the cube")
        return DyadicCube(level, tuple(k >> shift for k in self.index))

    def children(self) -> list[DyadicCube]:
        offsets = np.stack(np.meshgrid(*([[0, 1]] * self.dim), indexing="ij"), -1)
        return [
            DyadicCube(self.level + 1, tuple(2 * k + int(o) for k, o in zip(self.index, off)))
            for off in offsets.reshape(-1, self.dim)
        ]

    def contains(self, other: DyadicCube) -> bool:
        if other.dim != self.dim or other.level < self.level:
            return False
        shift = other.level - self.level
        return tuple(k >> shift for k in other.index) == self.index

    def intersects(self, other: DyadicCube) -> bool:
        return self.contains(other) or other.contains(self)

    def cell_range(self, level: int) -> tuple[np.ndarray, np.ndarray]:
        """Half-open index range ``[lo, hi)`` per axis of this cube's cells at ``level``."""
        shift = level - self.level
        if shift < 0:
            raise ValueError("cells must be at least as fine as the cube")
        lo = np.array(self.index, dtype=np.int64) << shift
        return lo, lo + (1 << shift)

    def indicator(self, level: int | None = None, value: float = 1.0) -> StepFunction:
        level = self.level if level is None else level
        lo, hi = self.cell_range(level)
        grids = np.meshgrid(*[np.arange(a, b) for a, b in zip(lo, hi)], indexing="ij")
        idx = np.stack([g.ravel() for g in grids], axis=1)
        return StepFunction(self.dim, level, idx, np.full(len(idx), float(value)))

    def to_json(self) -> dict:
        return {"level": self.level, "index": list(self.index)}

    @classmethod
    def from_json(cls, obj: Mapping) -> DyadicCube:
        try:
            return cls(int(obj["level"]), tuple(int(k) for k in obj["index"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad cube record: {exc}") from exc


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class StepFunction:
    """Finite-support step function on the level-``level`` dyadic grid.

    Cells with value zero are dropped; ``indices`` is lexicographically sorted
    and ``values`` is aligned with it.  Instances are immutable.
    """

    __slots__ = ("dim", "level", "indices", "values")

    def __init__(self, dim: int, level: int, indices, values, *, _trusted: bool = False):
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim}")
        idx = np.asarray(indices, dtype=np.int64).reshape(-1, dim)
        val = np.asarray(values, dtype=float).reshape(-1)
        if len(idx) != len(val):
            raise ValueError("indices and values differ in length")
        if not _trusted:
            if not np.all(np.isfinite(val)):
                raise ValueError("step function values must be finite")
            keep = val != 0.0
            idx, val = idx[keep], val[keep]
            order = np.lexsort(idx.T[::-1]) if len(idx) else np.zeros(0, dtype=np.int64)
            idx, val = idx[order], val[order]
            if len(idx) > 1 and np.any(np.all(idx[1:] == idx[:-1], axis=1)):
                raise ValueError("duplicate cell index")
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "level", int(level))
        object.__setattr__(self, "indices", _freeze(np.ascontiguousarray(idx)))
        object.__setattr__(self, "values", _freeze(np.ascontiguousarray(val)))

    def __setattr__(self, name, value):
        raise AttributeError("StepFunction is immutable")

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, dim: int = 1, level: int = 0) -> StepFunction:
        return cls(dim, level, np.zeros((0, dim), dtype=np.int64), np.zeros(0))

    @classmethod
    def from_cells(cls, dim: int, level: int, cells: Mapping[tuple[int, ...], float]) -> StepFunction:
        if not cells:
            return cls.zero(dim, level)
        idx = np.array([tuple(k) for k in cells.keys()], dtype=np.int64).reshape(-1, dim)
        return cls(dim, level, idx, np.array(list(cells.values()), dtype=float))

    @classmethod
    def from_dense(cls, array: np.ndarray, level: int, lo) -> StepFunction:
        """Build from a dense array whose element ``[0, ...]`` is cell ``lo``."""
        array = np.asarray(array, dtype=float)
        dim = array.ndim
        nz = np.nonzero(array)
        idx = np.stack(nz, axis=1).astype(np.int64) + np.asarray(lo, dtype=np.int64).reshape(1, dim)
        return cls(dim, level, idx, array[nz])

    # -- basic accessors --------------------------------------------------

    @property
    def cells(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(k) for k in i): float(v) for i, v in zip(self.indices, self.values)}

    @property
    def cell_measure(self) -> float:
        return 2.0 ** (-self.level * self.dim)

    @property
    def cell_side(self) -> float:
        return 2.0 ** (-self.level)

    def __len__(self) -> int:
        return len(self.values)

    def is_zero(self) -> bool:
        return len(self.values) == 0

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self) else 0.0

    def integral(self) -> float:
        return float(np.sum(self.values)) * self.cell_measure

    def support_measure(self) -> float:
        return len(self) * self.cell_measure

    def cell_centers(self) -> np.ndarray:
        return (self.indices + 0.5) * self.cell_side

    def cube_of_cell(self, i: int) -> DyadicCube:
        return DyadicCube(self.level, tuple(self.indices[i]))

    def orthant_count(self) -> int:
        """Number of coordinate orthants met by the support (dyadic cubes never straddle them)."""
        if self.is_zero():
            return 0
        return len(np.unique(self.indices < 0, axis=0))

    def domain_box(self) -> DyadicCube:
        """Smallest dyadic cube containing the support.

        Raises ``ValueError`` when the support meets more than one coordinate
        orthant, since no dyadic cube crosses a coordinate hyperplane.
        """
        if self.is_zero():
            raise ValueError("zero function has no domain box")
        if self.orthant_count() > 1:
            raise ValueError("support straddles a coordinate hyperplane; no dyadic cube contains it")
        idx = self.indices
        shift = 0
        while True:
            anc = idx >> shift
            if np.all(anc == anc[0]):
                return DyadicCube(self.level - shift, tuple(int(k) for k in anc[0]))
            shift += 1

    # -- transformations --------------------------------------------------

    def refine(self, target_level: int) -> StepFunction:
        return refine(self, target_level)

    def with_values(self, values: np.ndarray) -> StepFunction:
        return StepFunction(self.dim, self.level, self.indices, values)

    def abs(self) -> StepFunction:
        return StepFunction(self.dim, self.level, self.indices, np.abs(self.values), _trusted=True)

    def scale(self, c: float) -> StepFunction:
        if c == 0:
            return StepFunction.zero(self.dim, self.level)
        return StepFunction(self.dim, self.level, self.indices, self.values * c, _trusted=True)

    def power(self, e: float) -> StepFunction:
        return StepFunction(self.dim, self.level, self.indices, np.abs(self.values) ** e, _trusted=True)

    def dilate(self, m: int) -> StepFunction:
        """Return ``x -> f(2**m x)`` by relabeling the level."""
        return StepFunction(self.dim, self.level + m, self.indices, self.values, _trusted=True)

    def restrict(self, cube: DyadicCube) -> StepFunction:
        """``f * chi_cube``; ``cube`` must be at most as fine as the grid."""
        lo, hi = cube.cell_range(self.level)
        mask = np.all((self.indices >= lo) & (self.indices < hi), axis=1)
        return StepFunction(self.dim, self.level, self.indices[mask], self.values[mask], _trusted=True)

    def map_values(self, fn) -> StepFunction:
        return StepFunction(self.dim, self.level, self.indices, fn(self.values))

    def to_dense(self, lo, hi, level: int | None = None) -> np.ndarray:
        """Dense array of values over cells ``[lo, hi)`` at ``level`` (refining if needed)."""
        f = self if level is None or level == self.level else self.refine(level)
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        out = np.zeros(tuple(int(n) for n in hi - lo))
        if len(f):
            mask = np.all((f.indices >= lo) & (f.indices < hi), axis=1)
            if not np.all(mask):
                raise ValueError("support not contained in the requested window")
            local = f.indices - lo
            out[tuple(local.T)] = f.values
        return out

    def sample(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape ``(N, dim)``."""
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        cells = np.floor(points / self.cell_side).astype(np.int64)
        lookup = self.cells
        return np.array([lookup.get(tuple(int(k) for k in c), 0.0) for c in cells])

    # -- arithmetic --------------------------------------------------------

    def _aligned(self, other: StepFunction) -> tuple[StepFunction, StepFunction]:
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        level = max(self.level, other.level)
        return self.refine(level), other.refine(level)

    def __add__(self, other: StepFunction) -> StepFunction:
        a, b = self._aligned(other)
        idx = np.concatenate([a.indices, b.indices])
        val = np.concatenate([a.values, b.values])
        return _accumulate(a.dim, a.level, idx, val)

    def __sub__(self, other: StepFunction) -> StepFunction:
        return self + other.scale(-1.0)

    def __neg__(self) -> StepFunction:
        return self.scale(-1.0)

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            a, b = self._aligned(other)
            bv = b.cells
            vals = np.array([bv.get(tuple(int(k) for k in i), 0.0) for i in a.indices])
            return StepFunction(a.dim, a.level, a.indices, a.values * vals)
        return self.scale(float(other))

    __rmul__ = __mul__

    def allclose(self, other: StepFunction, atol: float = 0.0) -> bool:
        return (self - other).sup_norm() <= atol

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"StepFunction(dim={self.dim}, level={self.level}, ncells={len(self)})"

    # -- JSON ----------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "level": self.level,
            "cells": [
                {"index": [int(k) for k in i], "value": float(v)}
                for i, v in zip(self.indices, self.values)
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> StepFunction:
        try:
            dim = int(obj["dim"])
            level = int(obj["level"])
            cells = obj["cells"]
            seen: dict[tuple[int, ...], float] = {}
            for rec in cells:
                key = tuple(int(k) for k in rec["index"])
                if len(key) != dim:
                    raise ParseError(f"cell index {list(key)} does not match dim={dim}")
                if key in seen:
                    raise ParseError(f"duplicate cell index {list(key)}")
                seen[key] = float(rec["value"])
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad step-function record: {exc!r}") from exc
        if dim not in (1, 2):
            raise ParseError(f"dim must be 1 or 2, got {dim}")
        return cls.from_cells(dim, level, seen)

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> StepFunction:
        return cls.from_json(json.loads(text))


def _accumulate(dim: int, level: int, idx: np.ndarray, val: np.ndarray) -> StepFunction:
    """Sum values of repeated indices, in a fixed order."""
    if len(idx) == 0:
        return StepFunction.zero(dim, level)
    uniq, inverse = np.unique(idx, axis=0, return_inverse=True)
    out = np.zeros(len(uniq))
    np.add.at(out, inverse.reshape(-1), val)
    return StepFunction(dim, level, uniq, out)


def accumulate(functions: Iterable[StepFunction], weights: Iterable[float] | None = None,
               dim: int | None = None) -> StepFunction:
    """Cellwise ``sum_j w_j f_j`` on the finest common level."""
    fs = list(functions)
    ws = [1.0] * len(fs) if weights is None else [float(w) for w in weights]
    if not fs:
        return StepFunction.zero(dim or 1, 0)
    level = max(f.level for f in fs)
    parts = [f.refine(level) for f in fs]
    idx = np.concatenate([p.indices for p in parts])
    val = np.concatenate([p.values * w for p, w in zip(parts, ws)])
    return _accumulate(fs[0].dim, level, idx, val)


@dataclass(frozen=True)
class GridIndexSet:
    """A set of cells at one level, e.g. a level set ``{|f| > alpha}``."""

    dim: int
    level: int
    cells: frozenset

    def measure(self) -> float:
        return len(self.cells) * 2.0 ** (-self.level * self.dim)

    @classmethod
    def level_set(cls, f: StepFunction, alpha: float) -> GridIndexSet:
        mask = np.abs(f.values) > alpha
        return cls(f.dim, f.level, frozenset(tuple(int(k) for k in i) for i in f.indices[mask]))


def refine(f: StepFunction, target_level: int) -> StepFunction:
    """Split every cell of ``f`` into ``2**(dim * (target_level - f.level))`` children."""
    if target_level < f.level:
        raise ValueError("coarsening is lossy")
    d = target_level - f.level
    if d == 0 or f.is_zero():
        return StepFunction(f.dim, target_level, f.indices, f.values, _trusted=True)
    n = 1 << d
    offs = np.stack(np.meshgrid(*([np.arange(n)] * f.dim), indexing="ij"), -1).reshape(-1, f.dim)
    idx = ((f.indices << d)[:, None, :] + offs[None, :, :]).reshape(-1, f.dim)
    val = np.repeat(f.values, len(offs))
    # children of a sorted parent list stay lexicographically sorted only in 1D
    trusted = f.dim == 1
    return StepFunction(f.dim, target_level, idx, val, _trusted=trusted)


def sup_levels(f: StepFunction) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(level, ancestor_indices)`` from ``f.level`` up to one level above the top.

    The top is the first level where the support occupies one cube per orthant,
    i.e. where every ancestor cube already contains all the support it ever will.
    """
    target = f.orthant_count()
    shift = 0
    extra = 0
    while True:
        anc = f.indices >> shift
        yield f.level - shift, anc
        if extra:
            return
        if len(np.unique(anc, axis=0)) == target:
            extra = 1
        shift += 1


def enumerate_cubes(f: StepFunction) -> list[DyadicCube]:
    """Finite family of dyadic cubes realizing every dyadic sup taken in :mod:`mllab.morrey`.

    Cubes strictly inside a cell are dominated by the cell itself: on a cell with
    value ``v`` the summand is ``c * |v| * |Q|**(1/p)``, increasing in ``|Q|``.
    Cubes that already contain all of the support in their orthant are dominated
    by the smallest such cube because ``|Q|**(1/p - 1/q)`` is non-increasing for
    ``p >= q`` while ``f * chi_Q`` no longer changes.  What remains is the cells,
    their ancestors up to the first level where the support is captured, and one
    level above that.
    """
    if f.is_zero():
        return []
    out: list[DyadicCube] = []
    for level, anc in sup_levels(f):
        for k in np.unique(anc, axis=0):
            out.append(DyadicCube(level, tuple(int(x) for x in k)))
    return out
