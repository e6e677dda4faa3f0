"""Maximal operators, the fractional integral, and the heat semigroup on step functions.

Operators that produce functions with unbounded support (``M f``, ``I_alpha f``,
``e^{t Delta} f``) are sampled at cell centers of a finite evaluation window and
returned as step functions on that window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage, special

from .dyadic import DyadicCube, StepFunction
from .lorentz import INF, DomainError, RatioReport
from .morrey import MorreyLorentzParams, morrey_lorentz_norm
from .polynomials import moment_residual

__all__ = [
    "MaximalParams",
    "FracIntegralParams",
    "HeatParams",
    "Window",
    "default_window",
    "maximal",
    "dyadic_maximal",
    "dyadic_averages",
    "frac_integral",
    "frac_integral_at",
    "check_frac_lower_bound",
    "check_atom_decay",
    "heat_extension",
    "heat_extension_at",
    "heat_maximal",
    "heat_maximal_norm",
    "check_fefferman_stein",
]


@dataclass(frozen=True)
class MaximalParams:
    eta: float = 1.0
    theta: float = 1.0

    def __post_init__(self) -> None:
        if not (0 < self.eta < INF):
            raise DomainError(f"eta must lie in (0, inf), got {self.eta}")
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")


@dataclass(frozen=True)
class FracIntegralParams:
    alpha: float
    dim: int = 1

    def __post_init__(self) -> None:
        if not (0 < self.alpha < self.dim):
            raise DomainError(f"alpha must lie in (0, {self.dim}), got {self.alpha}")


DEFAULT_T_GRID = tuple(4.0 ** (-j) for j in range(12, -3, -1))


@dataclass(frozen=True)
class HeatParams:
    """``t_grid`` of sampled times; ``quadrature_level`` is the evaluation-grid refinement."""

    t_grid: tuple[float, ...] = DEFAULT_T_GRID
    quadrature_level: int = 2

    def __post_init__(self) -> None:
        t = tuple(float(x) for x in self.t_grid)
        if not t:
            raise DomainError("t_grid must be nonempty")
        if any(x <= 0 for x in t) or any(b <= a for a, b in zip(t, t[1:])):
            raise DomainError("t_grid must be positive and strictly increasing")
        object.__setattr__(self, "t_grid", t)


@dataclass(frozen=True)
class Window:
    """Cells ``[lo, hi)`` per axis at ``level``."""

    level: int
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def axis_centers(self) -> list[np.ndarray]:
        h = 2.0 ** (-self.level)
        return [(np.arange(a, b) + 0.5) * h for a, b in zip(self.lo, self.hi)]

    def centers(self) -> np.ndarray:
        grids = np.meshgrid(*self.axis_centers(), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def at_level(self, level: int) -> Window:
        d = level - self.level
        if d < 0:
            raise ValueError("window can only be refined")
        return Window(level, tuple(a << d for a in self.lo), tuple(b << d for b in self.hi))

    def union(self, other: Window) -> Window:
        level = max(self.level, other.level)
        a, b = self.at_level(level), other.at_level(level)
        return Window(level, tuple(map(min, a.lo, b.lo)), tuple(map(max, a.hi, b.hi)))


def _support_box(f: StepFunction) -> tuple[np.ndarray, np.ndarray]:
    return f.indices.min(axis=0), f.indices.max(axis=0) + 1


def _scale_cells(f: StepFunction) -> int:
    """Side, in ``f.level`` cells, of the domain box (or the power-of-two cover of the support)."""
    if f.orthant_count() == 1:
        return 1 << (f.level - f.domain_box().level)
    lo, hi = _support_box(f)
    return 1 << int(math.ceil(math.log2(int(np.max(hi - lo)))))


def default_window(f: StepFunction, level: int, pad: int = 1) -> Window:
    """Support bounding box grown by ``pad`` domain-box sides on every side, at ``level``."""
    if f.is_zero():
        raise ValueError("zero function has no window")
    if level < f.level:
        raise ValueError("evaluation level must be at least f.level")
    lo, hi = _support_box(f)
    s = _scale_cells(f)
    w = Window(f.level, tuple(int(x) - pad * s for x in lo), tuple(int(x) + pad * s for x in hi))
    return w.at_level(level)


def _window_step(values: np.ndarray, window: Window) -> StepFunction:
    return StepFunction.from_dense(values.reshape(window.shape), window.level, window.lo)


# -- Hardy-Littlewood type maximal operators ---------------------------------


def _sorted_window_norm(blocks: np.ndarray, cell_measure: float, eta: float, theta: float) -> np.ndarray:
    """``L^{eta,theta}`` norm of each row of equal-measure cell values."""
    a = -np.sort(-np.abs(blocks), axis=-1)
    c = np.arange(1, a.shape[-1] + 1, dtype=float)
    if theta == INF:
        return np.max(a * (c * cell_measure) ** (1.0 / eta), axis=-1)
    e = theta / eta
    inc = c**e - (c - 1.0) ** e
    terms = a**theta * (eta / theta) * cell_measure**e * inc
    return np.sum(terms, axis=-1) ** (1.0 / theta)


def _cube_values(dense: np.ndarray, k: int, h: float, params: MaximalParams) -> np.ndarray:
    """Averages ``||f chi_Q|| / ||chi_Q||`` for every side-``k`` cube, indexed by lower corner.

    Positions whose cube would leave the array are ``-inf``.
    """
    dim = dense.ndim
    eta, theta = params.eta, params.theta
    out = np.full(dense.shape, -np.inf)
    valid = tuple(slice(0, n - k + 1) for n in dense.shape)
    if any(n - k + 1 <= 0 for n in dense.shape):
        return out
    if eta == theta:
        P = np.abs(dense) ** eta
        C = np.pad(P, [(1, 0)] * dim).cumsum(axis=0)
        if dim == 2:
            C = C.cumsum(axis=1)
            S = C[k:, k:] - C[:-k, k:] - C[k:, :-k] + C[:-k, :-k]
        else:
            S = C[k:] - C[:-k]
        out[valid] = (np.maximum(S, 0.0) / k**dim) ** (1.0 / eta)
        return out
    cell = h**dim
    denom = (1.0 if theta == INF else (eta / theta) ** (1.0 / theta)) * (k**dim * cell) ** (1.0 / eta)
    win = np.lib.stride_tricks.sliding_window_view(np.abs(dense), (k,) * dim)
    flat = win.reshape(win.shape[:dim] + (-1,))
    if dim == 1:
        out[valid] = _sorted_window_norm(flat, cell, eta, theta) / denom
    else:
        rows = np.empty(flat.shape[:2])
        for i in range(flat.shape[0]):
            rows[i] = _sorted_window_norm(flat[i], cell, eta, theta)
        out[valid] = rows / denom
    return out


def maximal(f: StepFunction, params: MaximalParams = MaximalParams(), eval_level: int | None = None,
            window: Window | None = None, cap_cells: int | None = None) -> StepFunction:
    """``M^{(eta,theta)} f`` at cell centers of ``window``.

    The sup runs over cubes whose corners lie on the ``eval_level`` grid and whose
    side is a multiple of the grid step, capped at ``4 * side(domain_box)``
    (``cap_cells`` overrides the cap, in ``eval_level`` cells).  This is a
    lower approximation of the sup over all cubes, exact up to one grid step.
    """
    eval_level = f.level if eval_level is None else eval_level
    if eval_level < f.level:
        raise DomainError("eval_level must be at least f.level")
    if f.is_zero():
        return StepFunction.zero(f.dim, eval_level)
    window = default_window(f, eval_level) if window is None else window.at_level(eval_level)
    if cap_cells is None:
        cap_cells = 4 * (_scale_cells(f) << (eval_level - f.level))
    dim = f.dim
    ext_lo = tuple(a - cap_cells + 1 for a in window.lo)
    ext_hi = tuple(b + cap_cells - 1 for b in window.hi)
    dense = f.to_dense(ext_lo, ext_hi, level=eval_level)
    h = 2.0 ** (-eval_level)
    inner = tuple(slice(cap_cells - 1, cap_cells - 1 + n) for n in window.shape)
    # the single-cell cube gives |f| exactly; cumulative sums could round below it
    best = np.abs(dense[inner])
    for k in range(2, cap_cells + 1):
        vals = _cube_values(dense, k, h, params)
        origin = (k - 1) // 2
        for ax in range(dim):
            vals = ndimage.maximum_filter1d(vals, k, axis=ax, mode="constant", cval=-np.inf, origin=origin)
        np.maximum(best, vals[inner], out=best)
    return _window_step(best, window)


def dyadic_averages(f: StepFunction, top: DyadicCube) -> list[tuple[int, np.ndarray]]:
    """Averages of ``|f|`` over every dyadic cube inside ``top`` at levels ``f.level .. top.level``.

    Returns ``[(level, averages)]`` with ``averages`` dense over ``top``'s cells at that level.
    """
    lo, hi = top.cell_range(f.level)
    a = np.abs(f.to_dense(lo, hi))
    out = [(f.level, a)]
    cur = a
    for level in range(f.level - 1, top.level - 1, -1):
        if f.dim == 1:
            cur = cur.reshape(-1, 2).mean(axis=1)
        else:
            n = cur.shape[0] // 2
            cur = cur.reshape(n, 2, n, 2).mean(axis=(1, 3))
        out.append((level, cur))
    return out


def _broadcast_up(arr: np.ndarray, times: int) -> np.ndarray:
    for ax in range(arr.ndim):
        arr = np.repeat(arr, times, axis=ax)
    return arr


def dyadic_maximal(f: StepFunction, top: DyadicCube | None = None) -> StepFunction:
    """``M_d f``: max over dyadic ancestors, up to ``top`` (default: parent of the domain box), of ``avg |f|``."""
    if f.is_zero():
        return StepFunction.zero(f.dim, f.level)
    top = f.domain_box().parent() if top is None else top
    best = None
    for level, avg in dyadic_averages(f, top):
        up = _broadcast_up(avg, 1 << (f.level - level))
        best = up if best is None else np.maximum(best, up)
    lo, _ = top.cell_range(f.level)
    return StepFunction.from_dense(best, f.level, lo)


# -- fractional integral -------------------------------------------------------


def _riesz_primitive_1d(u: np.ndarray, alpha: float) -> np.ndarray:
    # d/du of this is |u|**(alpha - 1)
    return np.sign(u) * np.abs(u) ** alpha / alpha


def _riesz_corner_2d(u: np.ndarray, v: np.ndarray, alpha: float) -> np.ndarray:
    """``integral_0^u integral_0^v (s**2 + t**2)**((alpha - 2)/2) dt ds`` (odd in each argument).

    Polar coordinates split the rectangle into two triangles; each reduces to
    ``integral_0^z (1 + w**2)**(alpha/2 - 1) dw = z 2F1(1/2, 1 - alpha/2; 3/2; -z**2)``.
    """
    a = np.abs(u)
    b = np.abs(v)
    out = np.zeros(np.broadcast(a, b).shape)
    a, b = np.broadcast_to(a, out.shape), np.broadcast_to(b, out.shape)
    ok = (a > 0) & (b > 0)
    aa, bb = a[ok], b[ok]
    c = 1.0 - alpha / 2.0

    def tri(x, y):
        z = y / x
        return x**alpha * z * special.hyp2f1(0.5, c, 1.5, -z * z)

    out[ok] = (tri(aa, bb) + tri(bb, aa)) / alpha
    return np.sign(u) * np.sign(v) * out


def frac_integral_at(f: StepFunction, alpha: float, points, chunk: int = 1 << 20) -> np.ndarray:
    """``I_alpha f(x) = integral f(y) |x - y|**(alpha - n) dy`` at ``points``, cell by cell in closed form."""
    FracIntegralParams(alpha, f.dim)
    pts = np.asarray(points, dtype=float).reshape(-1, f.dim)
    out = np.zeros(len(pts))
    if f.is_zero():
        return out
    h = f.cell_side
    lo = f.indices * h
    hi = (f.indices + 1) * h
    step = max(1, chunk // max(1, len(f)))
    for s in range(0, len(pts), step):
        x = pts[s:s + step, None, :]
        if f.dim == 1:
            w = _riesz_primitive_1d(hi[None, :, 0] - x[..., 0], alpha) - _riesz_primitive_1d(lo[None, :, 0] - x[..., 0], alpha)
        else:
            u0, u1 = lo[None, :, 0] - x[..., 0], hi[None, :, 0] - x[..., 0]
            v0, v1 = lo[None, :, 1] - x[..., 1], hi[None, :, 1] - x[..., 1]
            w = (_riesz_corner_2d(u1, v1, alpha) - _riesz_corner_2d(u0, v1, alpha)
                 - _riesz_corner_2d(u1, v0, alpha) + _riesz_corner_2d(u0, v0, alpha))
        out[s:s + step] = w @ f.values
    return out


def frac_integral(f: StepFunction, params: FracIntegralParams | float, eval_level: int | None = None,
                  window: Window | None = None, pad: int = 2) -> StepFunction:
    """``I_alpha f`` sampled at cell centers of ``window`` (default: support box grown by ``pad`` sides)."""
    alpha = params.alpha if isinstance(params, FracIntegralParams) else float(params)
    FracIntegralParams(alpha, f.dim)
    eval_level = f.level if eval_level is None else eval_level
    if eval_level < f.level:
        raise DomainError("eval_level must be at least f.level")
    if f.is_zero():
        return StepFunction.zero(f.dim, eval_level)
    window = default_window(f, eval_level, pad) if window is None else window.at_level(eval_level)
    return _window_step(frac_integral_at(f, alpha, window.centers()), window)


@dataclass(frozen=True)
class LowerBoundReport:
    constant: float
    argmin: tuple[float, ...]


def check_frac_lower_bound(Q: DyadicCube, alpha: float, resolution: int = 4) -> LowerBoundReport:
    """``min_{x in closure(Q)} I_alpha chi_Q(x) / l(Q)**alpha`` over grid vertices of ``Q``.

    The minimum sits at the corners; the vertex grid includes them.
    """
    FracIntegralParams(alpha, Q.dim)
    n = 1 << resolution
    axes = [Q.lower[i] + Q.side * np.arange(n + 1) / n for i in range(Q.dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    vals = frac_integral_at(Q.indicator(), alpha, pts) / Q.side**alpha
    i = int(np.argmin(vals))
    return LowerBoundReport(float(vals[i]), tuple(float(x) for x in pts[i]))


@dataclass(frozen=True)
class DecayProfile:
    ratios: tuple[float, ...]
    K: int
    alpha: float

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0


def _annulus_points(Q: DyadicCube, k: int, samples: int) -> np.ndarray:
    """Grid points of the closed cube ``2**k Q`` outside the open cube ``2**(k-1) Q``."""
    c = Q.center
    half = Q.side * 2.0 ** (k - 1)
    inner = Q.side * 2.0 ** (k - 2)
    n = 4 * samples
    axis = np.linspace(-half, half, n + 1)
    grids = np.meshgrid(*([axis] * Q.dim), indexing="ij")
    rel = np.stack([g.ravel() for g in grids], axis=1)
    keep = np.max(np.abs(rel), axis=1) >= inner * (1 - 1e-12)
    return c + rel[keep]


def check_atom_decay(A: StepFunction, Q: DyadicCube, K: int, alpha: float, k_max: int = 6,
                     samples: int = 16, tol: float = 1e-10) -> DecayProfile:
    """Normalized decay of ``|I_alpha A|`` on the dyadic annuli ``2**k Q \\ 2**(k-1) Q``.

    Entry ``k-1`` of the profile is
    ``max |I_alpha A| / (||A||_inf l(Q)**alpha 2**(-k (n + K + 1 - alpha)))``.
    """
    FracIntegralParams(alpha, Q.dim)
    if A.is_zero():
        return DecayProfile((0.0,) * k_max, K, alpha)
    B = A.refine(max(A.level, Q.level))
    lo, hi = Q.cell_range(B.level)
    if not np.all((B.indices >= lo) & (B.indices < hi)):
        raise DomainError("atom support is not contained in its cube")
    res = moment_residual(A, Q, K)
    if res > tol:
        raise DomainError(f"moments up to degree {K} do not vanish (relative residual {res:.3e})")
    sup = A.sup_norm()
    n = Q.dim
    ratios = []
    for k in range(1, k_max + 1):
        vals = np.abs(frac_integral_at(A, alpha, _annulus_points(Q, k, samples)))
        scale = sup * Q.side**alpha * 2.0 ** (-k * (n + K + 1 - alpha))
        ratios.append(float(np.max(vals) / scale))
    return DecayProfile(tuple(ratios), K, alpha)


# -- heat semigroup ---------------------------------------------------------------


def _gauss_cell(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """``(erf(hi) - erf(lo)) / 2`` using erfc on each tail to avoid cancellation."""
    right = lo >= 0
    left = hi <= 0
    out = 0.5 * (special.erf(hi) - special.erf(lo))
    out = np.where(right, 0.5 * (special.erfc(lo) - special.erfc(hi)), out)
    out = np.where(left, 0.5 * (special.erfc(-hi) - special.erfc(-lo)), out)
    return out


def _heat_axis_matrix(x: np.ndarray, cells: np.ndarray, h: float, t: float) -> np.ndarray:
    s = math.sqrt(4.0 * t)
    return _gauss_cell((cells[None, :] * h - x[:, None]) / s, ((cells[None, :] + 1) * h - x[:, None]) / s)


def heat_extension_at(f: StepFunction, t: float, points) -> np.ndarray:
    """``e^{t Delta} f`` at arbitrary points; cell integrals are exact erf differences."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    pts = np.asarray(points, dtype=float).reshape(-1, f.dim)
    if f.is_zero():
        return np.zeros(len(pts))
    h = f.cell_side
    w = np.ones((len(pts), len(f)))
    for ax in range(f.dim):
        s = math.sqrt(4.0 * t)
        w *= _gauss_cell((f.indices[None, :, ax] * h - pts[:, ax, None]) / s,
                         ((f.indices[None, :, ax] + 1) * h - pts[:, ax, None]) / s)
    return w @ f.values


def heat_extension(f: StepFunction, t: float, eval_level: int | None = None,
                   window: Window | None = None, pad: int = 1) -> StepFunction:
    """``(4 pi t)**(-n/2) integral exp(-|x-y|**2 / 4t) f(y) dy`` at cell centers of ``window``."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    eval_level = f.level if eval_level is None else eval_level
    if f.is_zero():
        return StepFunction.zero(f.dim, eval_level)
    window = default_window(f, eval_level, pad) if window is None else window.at_level(eval_level)
    return _window_step(_heat_dense(f, t, window), window)


def _heat_dense(f: StepFunction, t: float, window: Window) -> np.ndarray:
    lo, hi = _support_box(f)
    F = f.to_dense(lo, hi)
    h = f.cell_side
    mats = [
        _heat_axis_matrix(xc, np.arange(lo[ax], hi[ax]), h, t)
        for ax, xc in enumerate(window.axis_centers())
    ]
    if f.dim == 1:
        return mats[0] @ F
    return mats[0] @ F @ mats[1].T


def heat_maximal(f: StepFunction, hp: HeatParams = HeatParams(), window: Window | None = None) -> StepFunction:
    """Cellwise ``max_{t in t_grid} |e^{t Delta} f|`` on the evaluation grid."""
    eval_level = f.level + hp.quadrature_level
    if f.is_zero():
        return StepFunction.zero(f.dim, eval_level)
    window = default_window(f, eval_level) if window is None else window.at_level(eval_level)
    best = np.zeros(window.shape)
    for t in hp.t_grid:
        np.maximum(best, np.abs(_heat_dense(f, t, window)), out=best)
    return _window_step(best, window)


def heat_maximal_norm(f: StepFunction, hp: HeatParams, mp: MorreyLorentzParams,
                      window: Window | None = None) -> float:
    """Finite-``t`` and finite-window lower approximation of the heat-maximal Hardy quasi-norm."""
    return morrey_lorentz_norm(heat_maximal(f, hp, window), mp)


# -- vector-valued maximal inequality ------------------------------------------------


def check_fefferman_stein(family: Sequence[StepFunction], u: float, mp: MorreyLorentzParams,
                          eval_level: int | None = None, pad: int = 1) -> RatioReport:
    """``||(sum (M f_j)**u)**(1/u)|| / ||(sum |f_j|**u)**(1/u)||`` in ``M^p_{q,r}``; ``u = inf`` takes sups."""
    if not family:
        raise DomainError("empty family")
    if not (1 < mp.q):
        raise DomainError("Fefferman-Stein needs 1 < q <= p")
    if u != INF and not (1 < u < INF and 1 < mp.r):
        raise DomainError("finite u needs 1 < u < inf and 1 < r <= inf (or take u = inf)")
    nz = [f for f in family if not f.is_zero()]
    if not nz:
        return RatioReport.of(0.0, 0.0)
    level = max(f.level for f in family) if eval_level is None else eval_level
    window = default_window(nz[0], level, pad)
    cap = 4 * (_scale_cells(nz[0]) << (level - nz[0].level))
    for f in nz[1:]:
        window = window.union(default_window(f, level, pad))
        cap = max(cap, 4 * (_scale_cells(f) << (level - f.level)))
    num = np.zeros(window.shape)
    den = np.zeros(window.shape)
    for f in nz:
        Mf = maximal(f, MaximalParams(1.0, 1.0), level, window, cap).to_dense(window.lo, window.hi)
        af = np.abs(f.to_dense(window.lo, window.hi, level=level))
        if u == INF:
            np.maximum(num, Mf, out=num)
            np.maximum(den, af, out=den)
        else:
            num += Mf**u
            den += af**u
    if u != INF:
        num, den = num ** (1.0 / u), den ** (1.0 / u)
    lhs = morrey_lorentz_norm(_window_step(num, window), mp)
    rhs = morrey_lorentz_norm(_window_step(den, window), mp)
    return RatioReport.of(lhs, rhs)
