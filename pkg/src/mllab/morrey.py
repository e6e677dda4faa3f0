"""Morrey-Lorentz, weak Morrey and classical Morrey quasi-norms.

All norms here are the *dyadic* sup ``sup_Q |Q|**(1/p - 1/q) ||f chi_Q||_{L^{q,r}}``
over ``Q`` dyadic.  It is equivalent to the sup over all axis-parallel cubes with
an unquantified constant; only the dyadic form is computed.  For step functions
the sup is a max over the finite family from :func:`mllab.dyadic.enumerate_cubes`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dyadic import StepFunction, sup_levels
from .lorentz import INF, DomainError, RatioReport, grouped_lorentz

__all__ = [
    "MorreyLorentzParams",
    "FatouReport",
    "morrey_lorentz_norm",
    "morrey_norm",
    "weak_morrey_norm",
    "weak_morrey_thresholds",
    "indicator_norm",
    "check_embedding",
    "check_fatou",
]


@dataclass(frozen=True)
class MorreyLorentzParams:
    """Exponents of ``M^p_{q,r}``: ``0 < q <= p < inf`` and ``0 < r <= inf``."""

    p: float
    q: float
    r: float

    def __post_init__(self) -> None:
        p, q, r = float(self.p), float(self.q), float(self.r)
        if not (0 < q <= p < INF):
            raise DomainError(f"need 0 < q <= p < inf, got p={p}, q={q}")
        if not r > 0:
            raise DomainError(f"need r > 0, got r={r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)

    @property
    def weak(self) -> bool:
        return self.r == INF


def indicator_norm(volume: float, params: MorreyLorentzParams) -> float:
    """Closed form ``(q/r)**(1/r) |Q|**(1/p)`` for the indicator of a cube."""
    c = 1.0 if params.r == INF else (params.q / params.r) ** (1.0 / params.r)
    return c * volume ** (1.0 / params.p)


def _level_maxima(f: StepFunction, params: MorreyLorentzParams) -> list[tuple[int, float]]:
    """Per enumerated level, the max of the Morrey summand over that level's cubes."""
    p, q, r = params.p, params.q, params.r
    a = np.abs(f.values)
    out = []
    for level, anc in sup_levels(f):
        if f.dim == 1:
            keys = anc[:, 0]
        else:
            # rank-encode 2D ancestor indices; order is irrelevant for a max
            _, keys = np.unique(anc, axis=0, return_inverse=True)
            keys = keys.reshape(-1)
        _, norms = grouped_lorentz(a, keys, f.cell_measure, q, r)
        vol = 2.0 ** (-level * f.dim)
        out.append((level, float(np.max(norms)) * vol ** (1.0 / p - 1.0 / q)))
    return out


def morrey_lorentz_norm(f: StepFunction, params: MorreyLorentzParams) -> float:
    if f.is_zero():
        return 0.0
    # ordered max keeps the result independent of any parallel split of the family
    return max(v for _, v in _level_maxima(f, params))


def morrey_norm(f: StepFunction, p: float, q: float) -> float:
    """Classical Morrey norm ``M^p_q = M^p_{q,q}``."""
    return morrey_lorentz_norm(f, MorreyLorentzParams(p, q, q))


def weak_morrey_norm(f: StepFunction, p: float, q: float) -> float:
    if not (0 < q <= p < INF):
        raise DomainError(f"weak Morrey needs 0 < q <= p < inf, got p={p}, q={q}")
    return morrey_lorentz_norm(f, MorreyLorentzParams(p, q, INF))


def weak_morrey_thresholds(f: StepFunction, p: float, q: float) -> float:
    """``sup_lambda lambda ||chi_{|f| > lambda}||_{M^p_q}`` over the value thresholds."""
    if not (0 < q <= p < INF):
        raise DomainError(f"weak Morrey needs 0 < q <= p < inf, got p={p}, q={q}")
    a = np.abs(f.values)
    best = 0.0
    for v in np.unique(a):
        mask = a >= v
        ind = StepFunction(f.dim, f.level, f.indices[mask], np.ones(int(mask.sum())), _trusted=True)
        best = max(best, float(v) * morrey_norm(ind, p, q))
    return best


def check_embedding(f: StepFunction, a: MorreyLorentzParams, b: MorreyLorentzParams) -> RatioReport:
    """``||f||_b / ||f||_a`` for an admissible embedding ``M_a -> M_b``.

    Admissible: same ``(p, q)`` with ``r_a <= r_b``, or same ``p`` with ``q_b < q_a``.
    """
    same_pq = a.p == b.p and a.q == b.q and a.r <= b.r
    lower_q = a.p == b.p and b.q < a.q
    if not (same_pq or lower_q):
        raise DomainError("parameter pair fits neither embedding case")
    return RatioReport.of(morrey_lorentz_norm(f, b), morrey_lorentz_norm(f, a))


@dataclass(frozen=True)
class FatouReport:
    limit_norm: float
    liminf: float
    holds: bool
    tail_norms: tuple[float, ...]


def check_fatou(sequence: Sequence[StepFunction], limit: StepFunction,
                params: MorreyLorentzParams, tail: int = 5) -> FatouReport:
    """``||limit|| <= liminf ||f_j||`` with the liminf taken as the min over the last ``tail`` terms."""
    if len(sequence) == 0:
        raise DomainError("empty sequence")
    if tail < 5:
        raise DomainError("tail length must be at least 5")
    if len(sequence) < tail:
        raise DomainError(f"sequence shorter than the tail length {tail}")
    norms = tuple(morrey_lorentz_norm(f, params) for f in sequence[-tail:])
    lim = morrey_lorentz_norm(limit, params)
    low = min(norms)
    return FatouReport(lim, low, lim <= low + 1e-12 * max(1.0, low), norms)


def monotone_truncations(f: StepFunction, pad: int = 5) -> list[StepFunction]:
    """``f chi_{first j cells}`` for ``j = 1..N``, then ``pad`` copies of ``f``."""
    seq = [
        StepFunction(f.dim, f.level, f.indices[:j], f.values[:j], _trusted=True)
        for j in range(1, len(f) + 1)
    ]
    return seq + [f] * pad


def scalar_approach(f: StepFunction, steps: int = 60) -> list[StepFunction]:
    """``(1 - 2**-j) f`` for ``j = 1..steps``."""
    return [f.scale(1.0 - math.ldexp(1.0, -j)) for j in range(1, steps + 1)]
