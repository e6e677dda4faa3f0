"""Distribution function, decreasing rearrangement and Lorentz quasi-norms.

For a step function the rearrangement ``f*`` is itself a step function of
``t``, so every Lorentz quasi-norm reduces to a finite sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import StepFunction

__all__ = [
    "DomainError",
    "LorentzParams",
    "RearrangementProfile",
    "RatioReport",
    "distribution",
    "rearrangement",
    "profile_from_arrays",
    "lorentz_norm",
    "lorentz_norm_arrays",
    "grouped_lorentz",
    "weak_norm",
    "weak_norm_thresholds",
    "check_holder",
]

INF = math.inf


class DomainError(ValueError):
    """An exponent or argument outside the admissible range."""


@dataclass(frozen=True)
class LorentzParams:
    p: float
    q: float

    def __post_init__(self) -> None:
        p, q = float(self.p), float(self.q)
        if not (p > 0 and q > 0):
            raise DomainError(f"Lorentz exponents must be positive, got p={p}, q={q}")
        if p == INF and q != INF:
            raise DomainError("p = inf is only allowed together with q = inf")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class RearrangementProfile:
    """``f*(t) = values[i]`` on ``[cumulative[i], cumulative[i+1])``, zero beyond."""

    values: np.ndarray
    cumulative: np.ndarray

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        pos = np.searchsorted(self.cumulative[1:], t, side="right")
        vals = np.append(self.values, 0.0)
        return vals[pos]

    def distribution(self, alpha: float) -> float:
        """Measure of ``{f* > alpha}`` read off the profile."""
        k = int(np.sum(self.values > alpha))
        return float(self.cumulative[k])

    @property
    def is_empty(self) -> bool:
        return len(self.values) == 0


@dataclass(frozen=True)
class RatioReport:
    lhs: float
    rhs: float
    ratio: float
    notes: str = ""

    @classmethod
    def of(cls, lhs: float, rhs: float, notes: str = "") -> RatioReport:
        if lhs == 0.0:
            ratio = 0.0
        elif rhs == 0.0:
            ratio = INF
        else:
            ratio = lhs / rhs
        return cls(float(lhs), float(rhs), float(ratio), notes)


def distribution(f: StepFunction, alpha: float) -> float:
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return int(np.sum(np.abs(f.values) > alpha)) * f.cell_measure


def profile_from_arrays(absvals: np.ndarray, measures) -> RearrangementProfile:
    """Profile of a function taking value ``absvals[i]`` on a set of measure ``measures[i]``.

    Equal values are merged into one step.
    """
    a = np.abs(np.asarray(absvals, dtype=float))
    w = np.broadcast_to(np.asarray(measures, dtype=float), a.shape)
    keep = a > 0
    a, w = a[keep], w[keep]
    if len(a) == 0:
        return RearrangementProfile(np.zeros(0), np.zeros(1))
    uniq, inverse = np.unique(-a, return_inverse=True)
    mass = np.zeros(len(uniq))
    np.add.at(mass, inverse.reshape(-1), w)
    cumulative = np.concatenate([[0.0], np.cumsum(mass)])
    return RearrangementProfile(-uniq, cumulative)


def rearrangement(f: StepFunction) -> RearrangementProfile:
    return profile_from_arrays(f.values, f.cell_measure)


def _power_increment(lo: np.ndarray, width: np.ndarray, e: float) -> np.ndarray:
    """``(lo + width)**e - lo**e`` without cancellation when ``width << lo``."""
    hi = lo + width
    out = hi**e - lo**e
    close = (lo > 0) & (width < 0.01 * lo)
    if np.any(close):
        l = lo[close]
        out[close] = l**e * np.expm1(e * np.log1p(width[close] / l))
    return out


def _profile_norm(values: np.ndarray, cumulative: np.ndarray, p: float, q: float) -> float:
    if len(values) == 0:
        return 0.0
    if q == INF:
        if p == INF:
            return float(values[0])
        return float(np.max(values * cumulative[1:] ** (1.0 / p)))
    e = q / p
    widths = np.diff(cumulative)
    terms = values**q * (p / q) * _power_increment(cumulative[:-1], widths, e)
    return float(np.sum(terms) ** (1.0 / q))


def lorentz_norm(f: StepFunction, params: LorentzParams) -> float:
    """Exact ``||f||_{L^{p,q}}`` of a step function."""
    prof = rearrangement(f)
    return _profile_norm(prof.values, prof.cumulative, params.p, params.q)


def lorentz_norm_arrays(values, measures, params: LorentzParams) -> float:
    prof = profile_from_arrays(values, measures)
    return _profile_norm(prof.values, prof.cumulative, params.p, params.q)


def _count_increment(c: np.ndarray, e: float) -> np.ndarray:
    """``c**e - (c-1)**e`` for integer counts ``c >= 1``."""
    c = c.astype(float)
    prev = c - 1.0
    out = np.ones_like(c)
    big = prev > 0
    pb = prev[big]
    out[big] = pb**e * np.expm1(e * np.log1p(1.0 / pb))
    return out


def grouped_lorentz(absvals: np.ndarray, groups: np.ndarray, cell_measure: float,
                    p: float, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Lorentz quasi-norm of every group of equal-measure cells at once.

    Returns ``(group_ids, norms)``.  Ties inside a group need no merging here:
    the telescoping sum is unchanged when a step is split.
    """
    a = np.abs(np.asarray(absvals, dtype=float))
    g = np.asarray(groups, dtype=np.int64)
    order = np.lexsort((-a, g))
    a, g = a[order], g[order]
    starts = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
    gid = g[starts]
    pos = np.arange(len(a)) - np.repeat(starts, np.diff(np.r_[starts, len(a)]))
    count = pos + 1
    if q == INF:
        if p == INF:
            return gid, np.maximum.reduceat(a, starts)
        t = (count * cell_measure) ** (1.0 / p)
        return gid, np.maximum.reduceat(a * t, starts)
    e = q / p
    terms = a**q * (p / q) * cell_measure**e * _count_increment(count, e)
    return gid, np.add.reduceat(terms, starts) ** (1.0 / q)


def weak_norm(f: StepFunction, p: float) -> float:
    """``sup_t t**(1/p) f*(t)``, attained at a breakpoint."""
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    return lorentz_norm(f, LorentzParams(p, INF))


def weak_norm_thresholds(f: StepFunction, p: float) -> float:
    """``sup_lambda lambda * lambda_f(lambda)**(1/p)`` over the value thresholds.

    For ``lambda`` just below a value ``v`` the distribution function equals the
    measure of ``{|f| >= v}``, so the sup is a max over the distinct values.
    """
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    a = np.abs(f.values)
    best = 0.0
    for v in np.unique(a):
        mass = np.sum(a >= v) * f.cell_measure
        best = max(best, float(v) * mass ** (1.0 / p))
    return best


def check_holder(f: StepFunction, g: StepFunction,
                 split: tuple[float, float, float, float],
                 target: tuple[float, float] | None = None) -> RatioReport:
    """Evaluate both sides of the Lorentz Holder inequality.

    ``split = (p1, q1, p2, q2)``.  ``target = (p, q)`` defaults to the
    harmonic combination; when given it must satisfy it to 1e-12.
    """
    p1, q1, p2, q2 = (float(x) for x in split)
    inv_p = 1.0 / p1 + 1.0 / p2
    inv_q = 1.0 / q1 + 1.0 / q2
    if target is None:
        p, q = 1.0 / inv_p, (INF if inv_q == 0 else 1.0 / inv_q)
    else:
        p, q = (float(x) for x in target)
        if abs(1.0 / p - inv_p) > 1e-12:
            raise DomainError("1/p = 1/p1 + 1/p2 violated")
        if abs(1.0 / q - inv_q) > 1e-12:
            raise DomainError("1/q = 1/q1 + 1/q2 violated")
    lhs = lorentz_norm(f * g, LorentzParams(p, q))
    rhs = lorentz_norm(f, LorentzParams(p1, q1)) * lorentz_norm(g, LorentzParams(p2, q2))
    return RatioReport.of(lhs, rhs)
