"""Atoms, atomic synthesis, and a constructive Calderon-Zygmund decomposition.

``decompose`` realizes ``f = sum_j lambda_j a_j + residual`` on a finite grid by
telescoping polynomial-corrected good parts along the level sets of the dyadic
maximal function at thresholds ``2**k``.  The residual is what a finite grid
cannot push off to infinity; it is always returned, never dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .dyadic import DyadicCube, ParseError, StepFunction, accumulate
from .lorentz import INF, DomainError, RatioReport
from .morrey import MorreyLorentzParams, morrey_lorentz_norm, weak_morrey_norm
from .operators import dyadic_averages, dyadic_maximal
from .polynomials import moment_residual, project_dense, projection_levels

__all__ = [
    "Atom",
    "AtomFamily",
    "AtomValidation",
    "DecompositionResult",
    "validate_atom",
    "synthesize",
    "aggregate_function",
    "aggregate_norm",
    "check_synthesis",
    "synthesis_constraints",
    "decompose",
    "decomposition_guarantees",
    "check_decomposition_norm",
    "check_atom_pairing",
]


@dataclass(frozen=True)
class Atom:
    support_cube: DyadicCube
    data: StepFunction
    cancellation_degree: int = -1

    def __post_init__(self) -> None:
        if self.cancellation_degree < -1:
            raise DomainError("cancellation degree must be >= -1")
        if self.data.dim != self.support_cube.dim:
            raise DomainError("atom data and cube differ in dimension")

    @property
    def K(self) -> int:
        return self.cancellation_degree

    def support_ok(self) -> bool:
        if self.data.is_zero():
            return True
        g = self.data.refine(max(self.data.level, self.support_cube.level))
        lo, hi = self.support_cube.cell_range(g.level)
        return bool(np.all((g.indices >= lo) & (g.indices < hi)))


@dataclass(frozen=True)
class AtomFamily:
    atoms: tuple[Atom, ...]
    coefficients: tuple[float, ...]
    aggregation_v: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if len(self.atoms) != len(self.coefficients):
            raise DomainError("atoms and coefficients differ in length")
        if any(c < 0 for c in self.coefficients):
            raise DomainError("coefficients must be nonnegative")
        if not (0 < self.aggregation_v <= 1):
            raise DomainError(f"aggregation v must lie in (0, 1], got {self.aggregation_v}")

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def dim(self) -> int:
        return self.atoms[0].support_cube.dim if self.atoms else 1

    def to_json(self) -> dict:
        return {
            "v": self.aggregation_v,
            "atoms": [
                {
                    "cube": a.support_cube.to_json(),
                    "lambda": lam,
                    "K": a.cancellation_degree,
                    "data": a.data.to_json(),
                }
                for a, lam in zip(self.atoms, self.coefficients)
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> AtomFamily:
        try:
            v = float(obj.get("v", 1.0))
            atoms, lams = [], []
            for rec in obj["atoms"]:
                atoms.append(Atom(DyadicCube.from_json(rec["cube"]), StepFunction.from_json(rec["data"]),
                                  int(rec.get("K", -1))))
                lams.append(float(rec["lambda"]))
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad atom-family record: {exc!r}") from exc
        return cls(tuple(atoms), tuple(lams), v)


@dataclass(frozen=True)
class AtomValidation:
    valid: bool
    norm_ratio: float
    support_ok: bool
    moment_residual: float
    reasons: tuple[str, ...] = ()


def atom_size(a: Atom, s: float, t: float, norm_kind: str = "weak-morrey") -> float:
    if norm_kind == "weak-morrey":
        return weak_morrey_norm(a.data, s, t)
    if norm_kind == "morrey-L1":
        return morrey_lorentz_norm(a.data, MorreyLorentzParams(s, 1.0, 1.0))
    raise DomainError(f"unknown norm kind {norm_kind!r}")


def validate_atom(a: Atom, s: float, t: float, norm_kind: str = "weak-morrey",
                  moment_tol: float = 1e-10, norm_tol: float = 1e-12) -> AtomValidation:
    """Support, size ``||a|| <= |Q|**(1/s)`` in ``WM^s_t`` or ``M^s_1``, and vanishing moments."""
    if norm_kind == "weak-morrey" and not (0 < t <= s < INF):
        raise DomainError(f"need 0 < t <= s < inf, got s={s}, t={t}")
    ratio = atom_size(a, s, t, norm_kind) / a.support_cube.volume() ** (1.0 / s)
    supp = a.support_ok()
    res = moment_residual(a.data, a.support_cube, a.cancellation_degree)
    reasons = []
    if not supp:
        reasons.append("support not contained in cube")
    if ratio > 1.0 + norm_tol:
        reasons.append(f"size ratio {ratio:.6g} exceeds 1")
    if res > moment_tol:
        reasons.append(f"moment residual {res:.3e} exceeds {moment_tol:g}")
    return AtomValidation(not reasons, ratio, supp, res, tuple(reasons))


def synthesize(family: AtomFamily, dim: int | None = None) -> StepFunction:
    """Exact cellwise ``sum_j lambda_j a_j`` on the finest atom level."""
    if not family.atoms:
        return StepFunction.zero(dim or 1, 0)
    return accumulate([a.data for a in family.atoms], family.coefficients)


def aggregate_function(family: AtomFamily, v: float | None = None,
                       weights: Sequence[float] | None = None) -> StepFunction:
    """``(sum_j (lambda_j chi_{Q_j})**v)**(1/v)`` on the common refinement."""
    v = family.aggregation_v if v is None else v
    if not family.atoms:
        return StepFunction.zero(family.dim, 0)
    lams = np.asarray(family.coefficients if weights is None else weights, dtype=float)
    level = max(max(a.support_cube.level for a in family.atoms), max(a.data.level for a in family.atoms))
    parts = [a.support_cube.indicator(level, lam**v) for a, lam in zip(family.atoms, lams) if lam > 0]
    if not parts:
        return StepFunction.zero(family.dim, level)
    total = accumulate(parts)
    return total.with_values(total.values ** (1.0 / v))


def aggregate_norm(family: AtomFamily, mp: MorreyLorentzParams, v: float | None = None) -> float:
    return morrey_lorentz_norm(aggregate_function(family, v), mp)


def synthesis_constraints(mp: MorreyLorentzParams, s: float, t: float, v: float) -> list[str]:
    """Violated inequalities among ``0<t<=s<inf, 0<v<=1, q<t, p<s, v<min(q,r)``."""
    bad = []
    if not (0 < t <= s < INF):
        bad.append("0 < t <= s < inf")
    if not (0 < v <= 1):
        bad.append("0 < v <= 1")
    if not mp.q < t:
        bad.append("q < t")
    if not mp.p < s:
        bad.append("p < s")
    if not v < min(mp.q, mp.r):
        bad.append("v < min(q, r)")
    return bad


def check_synthesis(family: AtomFamily, mp: MorreyLorentzParams, atom_space: tuple[float, float],
                    norm_kind: str = "weak-morrey") -> RatioReport:
    """``||sum lambda_j a_j||_{M^p_{q,r}} / ||(sum (lambda_j chi_{Q_j})**v)**(1/v)||_{M^p_{q,r}}``."""
    s, t = atom_space
    bad = synthesis_constraints(mp, s, t, family.aggregation_v)
    if bad:
        raise DomainError("synthesis constraint violated: " + ", ".join(bad))
    for i, a in enumerate(family.atoms):
        val = validate_atom(a, s, t, norm_kind)
        if not val.valid:
            raise DomainError(f"atom {i} invalid: {'; '.join(val.reasons)}")
    lhs = morrey_lorentz_norm(synthesize(family), mp)
    rhs = aggregate_norm(family, mp)
    return RatioReport.of(lhs, rhs)


# -- Calderon-Zygmund decomposition --------------------------------------------


@dataclass(frozen=True)
class DecompositionResult:
    family: AtomFamily
    residual: StepFunction
    level_range: tuple[int, int]
    thresholds: tuple[int, ...] = ()  # threshold exponent k of each atom
    top: DyadicCube | None = None


def _block(cube: DyadicCube, top: DyadicCube, level: int) -> tuple[slice, ...]:
    lo, hi = cube.cell_range(level)
    base, _ = top.cell_range(level)
    return tuple(slice(int(a - b), int(c - b)) for a, b, c in zip(lo, base, hi))


def _maximal_cubes(f: StepFunction, top: DyadicCube) -> list[tuple[DyadicCube, float, float]]:
    """Every dyadic cube ``Q`` in ``top`` with ``avg_Q |f| > 0``, with ``avg_Q`` and the
    max average over its strict ancestors up to ``top`` (``-inf`` for ``top``).

    ``Q`` is a maximal cube of ``{M_d f > 2**k}`` exactly when ``anc_max <= 2**k < avg``.
    """
    levels = dyadic_averages(f, top)  # fine to coarse
    base = top.cell_range
    out = []
    anc = np.full((1,) * f.dim, -np.inf)
    for level, avg in reversed(levels):
        if anc.shape != avg.shape:
            anc = _broadcast2(anc)
        lo, _ = base(level)
        for pos in zip(*np.nonzero(avg > 0)):
            idx = tuple(int(lo[i] + pos[i]) for i in range(f.dim))
            out.append((DyadicCube(level, idx), float(avg[pos]), float(anc[pos])))
        anc = np.maximum(anc, avg)
    return out


def _broadcast2(a: np.ndarray) -> np.ndarray:
    for ax in range(a.ndim):
        a = np.repeat(a, 2, axis=ax)
    return a


def decompose(f: StepFunction, K: int = 0, v: float = 1.0) -> DecompositionResult:
    """Decompose ``f`` into ``K``-cancelling atoms plus a residual.

    With ``Omega_k = {M_d f > 2**k}`` and ``Q_{k,i}`` its maximal dyadic cubes,
    ``g_k`` equals ``f`` off ``Omega_k`` and the degree-``K`` projection of ``f``
    on each ``Q_{k,i}``.  Atoms are ``A_{k,i} = (g_{k+1} - g_k) chi_{Q_{k,i}}``
    normalized by their sup norm; the residual is ``g_{k_min}``.  The grid is
    refined internally so every cube has at least ``K + 1`` cells per axis.
    """
    if f.is_zero():
        raise DomainError("cannot decompose the zero function")
    if K < 0:
        raise DomainError("K must be >= 0")
    if not v > 0:
        raise DomainError("v must be positive")
    top = f.domain_box().parent()
    work = f.refine(f.level + projection_levels(f.dim, K))
    level = work.level
    lo, hi = top.cell_range(level)
    F = work.to_dense(lo, hi)

    cubes = [c for c in _maximal_cubes(f, top)]
    top_avg = next(avg for cube, avg, anc in cubes if cube == top)
    peak = max(avg for _, avg, _ in cubes)
    k_max = math.ceil(math.log2(peak))
    k_min = math.ceil(math.log2(top_avg)) - 1

    def maximal_at(k: int) -> list[DyadicCube]:
        thr = math.ldexp(1.0, k)
        return [cube for cube, avg, anc in cubes if anc <= thr < avg]

    proj_cache: dict[DyadicCube, np.ndarray] = {}

    def projection(cube: DyadicCube) -> np.ndarray:
        if cube not in proj_cache:
            proj_cache[cube] = project_dense(F[_block(cube, top, level)], cube, level, K)
        return proj_cache[cube]

    def good_part(k: int) -> tuple[np.ndarray, list[DyadicCube]]:
        g = F.copy()
        qs = maximal_at(k)
        for cube in qs:
            g[_block(cube, top, level)] = projection(cube)
        return g, qs

    # differences at roundoff scale are projection noise, not atoms; they stay in the residual
    noise_floor = 1e-12 * float(np.max(np.abs(F)))
    noise = np.zeros_like(F)
    atoms, lams, ks = [], [], []
    g_next, _ = good_part(k_max)
    for k in range(k_max - 1, k_min - 1, -1):
        g_k, qs = good_part(k)
        diff = g_next - g_k
        for cube in qs:
            blk = _block(cube, top, level)
            A = diff[blk]
            lam = float(np.max(np.abs(A))) if A.size else 0.0
            if lam <= noise_floor:
                noise[blk] += A
                continue
            base, _ = cube.cell_range(level)
            data = StepFunction.from_dense(A / lam, level, base)
            atoms.append(Atom(cube, data, K))
            lams.append(lam)
            ks.append(k)
        g_next = g_k
    residual = StepFunction.from_dense(g_next + noise, level, lo)
    family = AtomFamily(tuple(atoms), tuple(lams), min(v, 1.0))
    return DecompositionResult(family, residual, (k_min, k_max), tuple(ks), top)


@dataclass(frozen=True)
class Guarantees:
    reconstruction_error: float
    max_atom_excess: float
    max_moment_residual: float
    pointwise_bound_constant: float
    coefficient_constant: float

    def violations(self, rec_tol: float = 1e-10, atom_tol: float = 1e-12, mom_tol: float = 1e-10) -> list[str]:
        bad = []
        if self.reconstruction_error > rec_tol:
            bad.append("reconstruction")
        if self.max_atom_excess > atom_tol:
            bad.append("atom_bound")
        if self.max_moment_residual > mom_tol:
            bad.append("moment_cancellation")
        return bad

    def to_json(self) -> dict:
        return {
            "reconstruction_error": self.reconstruction_error,
            "max_atom_excess": self.max_atom_excess,
            "max_moment_residual": self.max_moment_residual,
            "pointwise_bound_constant": self.pointwise_bound_constant,
            "coefficient_constant": self.coefficient_constant,
        }


def decomposition_guarantees(f: StepFunction, result: DecompositionResult, v: float = 1.0) -> Guarantees:
    """Measure reconstruction, atom size, cancellation, and the pointwise ``M_d`` bound.

    Reconstruction error is relative to ``||f||_inf``; the pointwise constant is
    ``max (sum (lambda chi_Q)**v)**(1/v) / M_d f`` over the cells of the top cube.
    """
    fam = result.family
    recon = accumulate([synthesize(fam, f.dim), result.residual])
    err = (recon - f).sup_norm() / f.sup_norm()
    excess = max((a.data.sup_norm() - 1.0 for a in fam.atoms), default=0.0)
    mom = max((moment_residual(a.data, a.support_cube, a.K) for a in fam.atoms), default=0.0)
    Md = dyadic_maximal(f, result.top)
    if fam.atoms:
        agg = aggregate_function(fam, v=v)
        lo, hi = result.top.cell_range(agg.level)
        num = agg.to_dense(lo, hi)
        den = Md.to_dense(lo, hi, level=agg.level)
        const = float(np.max(num / den))
        coef = max(lam / math.ldexp(1.0, k) for lam, k in zip(fam.coefficients, result.thresholds))
    else:
        const = coef = 0.0
    return Guarantees(float(err), float(max(excess, 0.0)), float(mom), const, float(coef))


def check_decomposition_norm(f: StepFunction, result: DecompositionResult, mp: MorreyLorentzParams,
                             v: float | None = None) -> RatioReport:
    """``||(sum (lambda chi_Q)**v)**(1/v)||_{M^p_{q,r}} / ||f||_{M^p_{q,r}}``."""
    v = result.family.aggregation_v if v is None else v
    return RatioReport.of(morrey_lorentz_norm(aggregate_function(result.family, v), mp),
                          morrey_lorentz_norm(f, mp))


# -- pairing with test functions ----------------------------------------------------


def _cell_quadrature(f: StepFunction, phi: Callable[[np.ndarray], np.ndarray], order: int) -> np.ndarray:
    """``integral_cell phi`` for every cell of ``f`` by tensor Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    h = f.cell_side
    grids = np.meshgrid(*([x] * f.dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.prod(np.stack(np.meshgrid(*([w] * f.dim), indexing="ij"), -1).reshape(-1, f.dim), axis=1)
    pts = (f.indices[:, None, :] + nodes[None, :, :]) * h
    vals = phi(pts.reshape(-1, f.dim)).reshape(len(f), -1)
    return vals @ wts * h**f.dim


@dataclass(frozen=True)
class PairingReport:
    pairing: float
    bound: float
    ratio: float


def check_atom_pairing(a: Atom, phi: Callable[[np.ndarray], np.ndarray], N: float,
                       order: int = 8) -> PairingReport:
    """``|integral a phi| / (l(Q)**(n+K+1) sup_{y in Q} (1 + |y|)**-N)``.

    ``phi`` maps points of shape ``(m, dim)`` to values; cell integrals use
    Gauss-Legendre of ``order`` nodes per axis, exact for polynomials of degree
    ``2 * order - 1``.
    """
    Q = a.support_cube
    pair = float(a.data.values @ _cell_quadrature(a.data, phi, order)) if not a.data.is_zero() else 0.0
    nearest = np.clip(0.0, Q.lower, Q.upper)
    dist = float(np.linalg.norm(nearest))
    bound = Q.side ** (Q.dim + a.K + 1) * (1.0 + dist) ** (-N)
    return PairingReport(pair, bound, abs(pair) / bound)
