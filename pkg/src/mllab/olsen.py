"""Fractional-integral inequalities in Morrey-Lorentz spaces.

Covers the Olsen product inequality, the Adams-type bound, the classical
Hardy-Littlewood-Sobolev bound, and the Fefferman-Phong form (report only in
``dim <= 2``, where its ``n >= 3`` hypothesis fails).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import StepFunction
from .lorentz import INF, DomainError, LorentzParams, RatioReport, lorentz_norm
from .morrey import MorreyLorentzParams, morrey_lorentz_norm, weak_morrey_norm
from .operators import FracIntegralParams, frac_integral, frac_integral_at

__all__ = [
    "OlsenParams",
    "AdamsParams",
    "check_olsen",
    "olsen_product",
    "check_adams",
    "check_hls",
    "hls_exponent",
    "check_fefferman_phong",
]

_REL = 1e-12


def _close(a: float, b: float) -> bool:
    if a == INF or b == INF:
        return a == b
    return abs(a - b) <= _REL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class OlsenParams:
    """Exponents of ``||g I_alpha f||_{M^{r0}_{r1,r2}} <~ ||g||_{WM^{q0}_{q1}} ||f||_{M^{p0}_{p1,p2}}``."""

    alpha: float
    p0: float
    p1: float
    p2: float
    q0: float
    q1: float
    r0: float
    r1: float
    r2: float
    dim: int = 1

    def __post_init__(self) -> None:
        bad = self.violations()
        if bad:
            raise DomainError("Olsen constraint violated: " + "; ".join(bad))

    @classmethod
    def derived(cls, alpha: float, p0: float, p1: float, p2: float, q0: float, q1: float,
                dim: int = 1) -> OlsenParams:
        """Fill in ``r0, r1, r2`` from the scaling relations."""
        r0 = 1.0 / (1.0 / q0 + 1.0 / p0 - alpha / dim)
        r1 = r0 * p1 / p0
        r2 = INF if p2 == INF else r0 * p2 / p0
        return cls(alpha, p0, p1, p2, q0, q1, r0, r1, r2, dim)

    @property
    def case(self) -> int:
        return 2 if self.p2 == INF else 1

    def violations(self) -> list[str]:
        a, n = self.alpha, self.dim
        p0, p1, p2, q0, q1, r0, r1, r2 = (self.p0, self.p1, self.p2, self.q0, self.q1,
                                          self.r0, self.r1, self.r2)
        bad = []
        if not 0 < a < n:
            bad.append("0 < alpha < n")
        if not 1 < p1 <= p0 < INF:
            bad.append("1 < p1 <= p0 < inf")
        if not 0 < p2:
            bad.append("0 < p2 <= inf")
        if not 1 < q1 <= q0 < INF:
            bad.append("1 < q1 <= q0 < inf")
        if not 1 < r1 <= r0 < INF:
            bad.append("1 < r1 <= r0 < inf")
        if not 1 < r2:
            bad.append("1 < r2 <= inf")
        if not r1 < q1:
            bad.append("r1 < q1")
        if not (1.0 / q0 <= a / n + _REL and a / n < 1.0 / p0):
            bad.append("1/q0 <= alpha/n < 1/p0")
        if not _close(1.0 / r0, 1.0 / q0 + 1.0 / p0 - a / n):
            bad.append("1/r0 = 1/q0 + 1/p0 - alpha/n")
        if p2 == INF or r2 == INF:
            if not (p2 == INF and r2 == INF):
                bad.append("p2 = inf needs r2 = inf (and conversely)")
            elif not _close(r0 / p0, r1 / p1):
                bad.append("r0/p0 = r1/p1")
        elif not (_close(r0 / p0, r1 / p1) and _close(r1 / p1, r2 / p2)):
            bad.append("r0/p0 = r1/p1 = r2/p2")
        return bad


def olsen_product(f: StepFunction, g: StepFunction, alpha: float, eval_level: int) -> StepFunction:
    """``g * I_alpha f`` on the support of ``g`` refined to ``eval_level``; ``I_alpha f`` at cell centers."""
    gr = g.refine(max(eval_level, g.level))
    if gr.is_zero() or f.is_zero():
        return StepFunction.zero(g.dim, gr.level)
    vals = frac_integral_at(f, alpha, gr.cell_centers())
    return gr.with_values(gr.values * vals)


def check_olsen(f: StepFunction, g: StepFunction, params: OlsenParams,
                eval_level: int | None = None, delta_levels: int = 1) -> RatioReport:
    """Ratio of ``||g I_alpha f||_{M^{r0}_{r1,r2}}`` to the product of the two norms.

    ``notes`` carries the evaluation level and the relative change of the ratio
    when the evaluation grid is refined ``delta_levels`` more times.
    """
    if eval_level is None:
        eval_level = max(f.level, g.level) + 2
    target = MorreyLorentzParams(params.r0, params.r1, params.r2)
    rhs = weak_morrey_norm(g, params.q0, params.q1) * morrey_lorentz_norm(
        f, MorreyLorentzParams(params.p0, params.p1, params.p2))
    lhs = morrey_lorentz_norm(olsen_product(f, g, params.alpha, eval_level), target)
    rep = RatioReport.of(lhs, rhs)
    if delta_levels and lhs > 0:
        fine = morrey_lorentz_norm(olsen_product(f, g, params.alpha, eval_level + delta_levels), target)
        delta = abs(fine - lhs) / lhs
        return RatioReport(rep.lhs, rep.rhs, rep.ratio, f"eval_level={eval_level};refine_delta={delta!r}")
    return RatioReport(rep.lhs, rep.rhs, rep.ratio, f"eval_level={eval_level}")


@dataclass(frozen=True)
class AdamsParams:
    """``||I_alpha f||_{M^s_{t,u}} <~ ||f||_{M^p_{q,r}}``."""

    alpha: float
    p: float
    q: float
    r: float
    s: float
    t: float
    u: float
    dim: int = 1

    def __post_init__(self) -> None:
        bad = self.violations()
        if bad:
            raise DomainError("Adams constraint violated: " + "; ".join(bad))

    @classmethod
    def derived(cls, alpha: float, p: float, q: float, r: float, dim: int = 1) -> AdamsParams:
        s = 1.0 / (1.0 / p - alpha / dim)
        t = q * s / p
        u = INF if r == INF else r * s / p
        return cls(alpha, p, q, r, s, t, u, dim)

    def violations(self) -> list[str]:
        a, n = self.alpha, self.dim
        bad = []
        if not 0 < a < n:
            bad.append("0 < alpha < n")
        if not 1 < self.q <= self.p < INF:
            bad.append("1 < q <= p < inf")
        if not 1 < self.t <= self.s < INF:
            bad.append("1 < t <= s < inf")
        if not (self.r > 0 and self.u > 0):
            bad.append("0 < r, u <= inf")
        if self.p != INF and not _close(1.0 / self.s, 1.0 / self.p - a / n):
            bad.append("1/s = 1/p - alpha/n")
        if self.r == INF or self.u == INF:
            if not (self.r == INF and self.u == INF):
                bad.append("r = inf needs u = inf (and conversely)")
            elif not _close(self.s / self.p, self.t / self.q):
                bad.append("s/p = t/q")
        elif not (_close(self.s / self.p, self.t / self.q) and _close(self.t / self.q, self.u / self.r)):
            bad.append("s/p = t/q = u/r")
        return bad


def check_adams(f: StepFunction, params: AdamsParams, eval_level: int | None = None,
                pad: int = 2) -> RatioReport:
    """``||I_alpha f||_{M^s_{t,u}} / ||f||_{M^p_{q,r}}`` with ``I_alpha f`` sampled on a window
    ``pad`` domain sides around the support (a lower approximation of the numerator)."""
    eval_level = f.level + 2 if eval_level is None else eval_level
    If = frac_integral(f, FracIntegralParams(params.alpha, f.dim), eval_level, pad=pad)
    lhs = morrey_lorentz_norm(If, MorreyLorentzParams(params.s, params.t, params.u))
    rhs = morrey_lorentz_norm(f, MorreyLorentzParams(params.p, params.q, params.r))
    return RatioReport.of(lhs, rhs, f"eval_level={eval_level}")


def hls_exponent(alpha: float, p: float, dim: int) -> float:
    inv = 1.0 / p - alpha / dim
    if not (0 < alpha < dim and 1 < p and inv > 0):
        raise DomainError("need 0 < alpha < n and 1 < p < s < inf with 1/s = 1/p - alpha/n")
    return 1.0 / inv


def check_hls(f: StepFunction, alpha: float, p: float, eval_level: int | None = None,
              pad: int = 4) -> RatioReport:
    """``||I_alpha f||_{L^s} / ||f||_{L^p}`` with ``I_alpha f`` truncated to a window."""
    s = hls_exponent(alpha, p, f.dim)
    eval_level = f.level + 2 if eval_level is None else eval_level
    If = frac_integral(f, FracIntegralParams(alpha, f.dim), eval_level, pad=pad)
    lhs = lorentz_norm(If, LorentzParams(s, s))
    rhs = lorentz_norm(f, LorentzParams(p, p))
    return RatioReport.of(lhs, rhs, f"eval_level={eval_level};s={s!r}")


def _dirichlet_energy(u: StepFunction) -> float:
    """``sum |D u|**2 h**n`` with forward differences between neighbouring cells."""
    lo = u.indices.min(axis=0) - 1
    hi = u.indices.max(axis=0) + 2
    U = u.to_dense(lo, hi)
    h = u.cell_side
    energy = 0.0
    for ax in range(u.dim):
        d = np.diff(U, axis=ax) / h
        energy += float(np.sum(d * d))
    return energy * h**u.dim


def check_fefferman_phong(u: StepFunction, V: StepFunction, q: float) -> RatioReport:
    """``integral |u|**2 V / (||V||_{WM^{n/2}_q} integral |grad u|**2)``, report only.

    The inequality is proved for ``n >= 3``; here ``n = dim <= 2``, so the ratio
    is recorded and never asserted.
    """
    if np.any(V.values < 0):
        raise DomainError("V must be nonnegative")
    n = V.dim
    if not 0 < q <= n / 2:
        raise DomainError(f"need 0 < q <= n/2 = {n / 2}")
    if V.is_zero() or u.is_zero():
        return RatioReport(0.0, 0.0, 0.0, "outside n>=3 hypothesis")
    lhs = ((u * u) * V).integral()
    grad = _dirichlet_energy(u)
    rhs = weak_morrey_norm(V, n / 2, q) * grad
    note = "outside n>=3 hypothesis"
    if grad == 0.0:
        note += ";degenerate denominator"
    return RatioReport.of(lhs, rhs, note)
