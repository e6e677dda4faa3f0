"""Suite orchestration: seeded trials, calibration fixtures, and CSV reports.

Every suite is a list of parameter sets.  A trial draws a random instance from
its own seed ``trial_seed(root, i)``, evaluates one inequality, and returns a
row.  Rows may carry an exact per-row check (for statements that hold with a
known constant).  Calibrated parameter sets additionally compare the extreme
ratio over all trials with a stored fixture constant.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .atoms import check_synthesis, decompose, decomposition_guarantees
from .dyadic import DyadicCube, StepFunction
from .generators import CUBE_LAWS, as_rng, gen_atom, gen_atom_family, gen_step_function, trial_seed
from .lorentz import INF, LorentzParams, check_holder, lorentz_norm
from .morrey import (
    MorreyLorentzParams,
    check_embedding,
    check_fatou,
    indicator_norm,
    monotone_truncations,
    morrey_lorentz_norm,
    scalar_approach,
)
from .olsen import AdamsParams, OlsenParams, check_adams, check_fefferman_phong, check_hls, check_olsen
from .operators import (
    HeatParams,
    MaximalParams,
    check_atom_decay,
    check_fefferman_stein,
    check_frac_lower_bound,
    default_window,
    heat_maximal,
    maximal,
)

__all__ = [
    "CSV_HEADER",
    "ParamSet",
    "Suite",
    "SUITES",
    "TrialSpec",
    "Row",
    "VerifyReport",
    "Fixture",
    "FixtureError",
    "UnknownSuite",
    "fixture_path",
    "load_fixtures",
    "save_fixtures",
    "input_hash",
    "run_suite",
    "run_verify",
    "write_csv",
    "csv_text",
]

CSV_HEADER = ("suite", "trial", "seed", "dim", "params", "lhs", "rhs", "ratio", "eval_level", "notes")
FIXTURE_ENV = "MLLAB_FIXTURES"


class UnknownSuite(KeyError):
    pass


class FixtureError(RuntimeError):
    """Fixture missing, or its input hash does not match the suite definition."""


# -- rows and reports -----------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    """What a trial function returns; ``ok`` is the exact per-row check."""

    dim: int
    lhs: float
    rhs: float
    ratio: float
    eval_level: int | None = None
    notes: str = ""
    ok: bool = True


@dataclass(frozen=True)
class Row:
    suite: str
    trial: int
    seed: int
    dim: int
    params: str
    lhs: float
    rhs: float
    ratio: float
    eval_level: int | None
    notes: str
    ok: bool

    def cells(self) -> list[str]:
        return [
            self.suite,
            str(self.trial),
            str(self.seed),
            str(self.dim),
            self.params,
            _fmt(self.lhs),
            _fmt(self.rhs),
            _fmt(self.ratio),
            "" if self.eval_level is None else str(self.eval_level),
            self.notes,
        ]


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (tuple, list)):
        return "/".join(_fmt(v) for v in x)
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if x == INF:
        return "inf"
    return repr(x)


def format_params(tag: str, params: Mapping) -> str:
    return ";".join([f"set={tag}"] + [f"{k}={_fmt(v)}" for k, v in params.items()])


# -- trial functions ---------------------------------------------------------------
# Each takes (seed, params, eval_level) and returns an Outcome.  They live at
# module level so worker processes can pickle them.


def _mp(params: Mapping, key: str = "mp") -> MorreyLorentzParams:
    return MorreyLorentzParams(*params[key])


def _rand_fn(rng, dim: int = 1, level: int = 3, max_cells: int = 6, dist: str = "uniform") -> StepFunction:
    n = int(rng.integers(1, max_cells + 1))
    return gen_step_function(rng, dim=dim, level=level, support_cells=n, value_dist=dist)


def _trial_indicator(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    dim = int(rng.integers(1, 3))
    level = int(rng.integers(-3, 4))
    cube = DyadicCube(level, tuple(int(k) for k in rng.integers(-4, 4, dim)))
    q = float(rng.uniform(0.3, 4.0))
    p = q * float(rng.uniform(1.0, 3.0))
    r = INF if rng.random() < 0.25 else float(rng.uniform(0.3, 6.0))
    mp = MorreyLorentzParams(p, q, r)
    f = cube.indicator(level + int(rng.integers(0, 3)))
    lhs = morrey_lorentz_norm(f, mp)
    rhs = indicator_norm(cube.volume(), mp)
    ratio = lhs / rhs
    notes = f"p={p!r};q={q!r};r={_fmt(r)};cube={level}:{list(cube.index)}"
    return Outcome(dim, lhs, rhs, ratio, None, notes, abs(ratio - 1.0) <= 1e-12)


def _trial_holder(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    f = _rand_fn(rng, level=4, max_cells=10)
    g = _rand_fn(rng, level=4, max_cells=10, dist="heavy-tail")
    rep = check_holder(f, g, params["split"])
    ok = rep.ratio <= 1.0 + 1e-12 if params.get("bound") == 1.0 else np.isfinite(rep.ratio)
    return Outcome(1, rep.lhs, rep.rhs, rep.ratio, None, rep.notes, bool(ok))


def _trial_embedding(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    f = _rand_fn(rng, level=4, max_cells=10, dist=str(rng.choice(["uniform", "heavy-tail", "indicator-mix"])))
    rep = check_embedding(f, _mp(params, "a"), _mp(params, "b"))
    if "bound" in params:
        ok = rep.ratio <= params["bound"] + 1e-10
    else:
        ok = bool(np.isfinite(rep.ratio))
    return Outcome(1, rep.lhs, rep.rhs, rep.ratio, None, rep.notes, ok)


def _trial_fatou(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    f = _rand_fn(rng, level=3, max_cells=8)
    seq = monotone_truncations(f) if params["sequence"] == "truncations" else scalar_approach(f)
    rep = check_fatou(seq, f, _mp(params))
    ratio = rep.limit_norm / rep.liminf if rep.liminf > 0 else INF
    return Outcome(1, rep.limit_norm, rep.liminf, ratio, None, "", rep.holds)


def _dominates(M: StepFunction, f: StepFunction) -> bool:
    """``M >= |f|`` on every support cell of ``f``, exactly."""
    fr = f.refine(M.level)
    return bool(np.all(M.sample(fr.cell_centers()) >= np.abs(fr.values)))


def _trial_maximal_lpq(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    f = _rand_fn(rng, level=3, max_cells=6)
    level = f.level + 1 if eval_level is None else eval_level
    M = maximal(f, MaximalParams(params["eta"], params["theta"]), level)
    lp = LorentzParams(*params["lorentz"])
    lhs, rhs = lorentz_norm(M, lp), lorentz_norm(f, lp)
    return Outcome(1, lhs, rhs, lhs / rhs, level, "", _dominates(M, f))


def _trial_maximal_mpqr(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    f = _rand_fn(rng, level=3, max_cells=6)
    level = f.level + 1 if eval_level is None else eval_level
    M = maximal(f, MaximalParams(), level)
    mp = _mp(params)
    lhs, rhs = morrey_lorentz_norm(M, mp), morrey_lorentz_norm(f, mp)
    return Outcome(1, lhs, rhs, lhs / rhs, level, "", _dominates(M, f))


def _trial_fefferman_stein(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    family = [_rand_fn(rng, level=3, max_cells=4) for _ in range(int(params["family"]))]
    level = 3 if eval_level is None else eval_level
    rep = check_fefferman_stein(family, params["u"], _mp(params), level)
    return Outcome(1, rep.lhs, rep.rhs, rep.ratio, level, rep.notes, bool(np.isfinite(rep.ratio)))


def _trial_synthesis(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    s, t = params["atom_space"]
    law = str(rng.choice(CUBE_LAWS))
    count = int(rng.integers(1, 7))
    K = int(rng.integers(-1, 2))
    fam = gen_atom_family(rng, count, law, (s, t, "weak-morrey"), K=K, v=params["v"])
    rep = check_synthesis(fam, _mp(params), (s, t), "weak-morrey")
    notes = f"law={law};count={count};K={K}"
    return Outcome(1, rep.lhs, rep.rhs, rep.ratio, None, notes, bool(np.isfinite(rep.ratio)))


def _trial_decomposition(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    n = int(rng.integers(1, 257))
    f = gen_step_function(rng, dim=1, level=6, support_cells=n, extent_cells=256)
    K, v = int(params["K"]), float(params["v"])
    res = decompose(f, K, v)
    g = decomposition_guarantees(f, res, v)
    bad = g.violations()
    notes = (f"atoms={len(res.family.atoms)};recon={g.reconstruction_error!r};"
             f"excess={g.max_atom_excess!r};moment={g.max_moment_residual!r}")
    if bad:
        notes += ";violated=" + ",".join(bad)
    c = g.pointwise_bound_constant
    return Outcome(1, c, 1.0, c, None, notes, not bad)


def _trial_atom_decay(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    K = int(params["K"])
    cube = DyadicCube(int(rng.integers(-2, 3)), (int(rng.integers(-4, 4)),))
    atom = gen_atom(rng, cube, 4.0, 3.0, "weak-morrey", K)
    prof = check_atom_decay(atom.data, cube, K, params["alpha"])
    m = prof.max_ratio
    return Outcome(1, m, 1.0, m, None, "profile=" + ",".join(repr(x) for x in prof.ratios), True)


def _trial_frac_lower(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    dim = int(params["dim"])
    cube = DyadicCube(int(rng.integers(-3, 4)), tuple(int(k) for k in rng.integers(-4, 4, dim)))
    rep = check_frac_lower_bound(cube, params["alpha"])
    parent = check_frac_lower_bound(cube.parent(), params["alpha"])
    drift = abs(parent.constant - rep.constant) / rep.constant
    ok = rep.constant > 0 and drift <= 1e-10
    return Outcome(dim, rep.constant, 1.0, rep.constant, None, f"dilation_drift={drift!r}", ok)


def _trial_adams(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    f = _rand_fn(rng, level=3, max_cells=4)
    if rng.random() < 0.5:
        f = f.abs()
    ap = AdamsParams.derived(*params["apq"])
    rep = check_adams(f, ap, eval_level)
    ok = rep.lhs > 0 if np.all(f.values > 0) else bool(np.isfinite(rep.ratio))
    level = f.level + 2 if eval_level is None else eval_level
    return Outcome(1, rep.lhs, rep.rhs, rep.ratio, level, "", ok)


def _trial_hls(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    f = _rand_fn(rng, level=3, max_cells=4)
    rep = check_hls(f, params["alpha"], params["p"], eval_level)
    level = f.level + 2 if eval_level is None else eval_level
    return Outcome(1, rep.lhs, rep.rhs, rep.ratio, level, "", bool(np.isfinite(rep.ratio)))


def _note_value(notes: str, key: str) -> float:
    for part in notes.split(";"):
        k, _, v = part.partition("=")
        if k == key:
            return float(v)
    raise KeyError(key)


def _trial_olsen(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    f = _rand_fn(rng, level=3, max_cells=4)
    g = _rand_fn(rng, level=3, max_cells=6).abs()
    op = OlsenParams.derived(*params["apq"])
    level = 6 if eval_level is None else eval_level
    rep = check_olsen(f, g, op, level)
    try:
        ok = _note_value(rep.notes, "refine_delta") <= 0.10
    except KeyError:
        ok = True
    return Outcome(1, rep.lhs, rep.rhs, rep.ratio, level, rep.notes.split(";", 1)[-1], ok)


def _trial_fefferman_phong(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    level = 3 if eval_level is None else eval_level
    n = 1 << level
    center = rng.uniform(0.0, 1.0, 2)
    axis = (np.arange(-2 * n, 3 * n) + 0.5) / n
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    U = np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2))
    u = StepFunction.from_dense(U, level, (-2 * n, -2 * n))
    Q = DyadicCube(int(rng.integers(0, 3)), (0, 0))
    V = Q.indicator().scale(float(rng.uniform(0.5, 2.0)))
    rep = check_fefferman_phong(u, V, params["q"])
    return Outcome(2, rep.lhs, rep.rhs, rep.ratio, level, rep.notes, True)


def _trial_heat_domination(seed: int, params: Mapping, eval_level) -> Outcome:
    rng = as_rng(seed)
    f = _rand_fn(rng, level=3, max_cells=4)
    hp = HeatParams(quadrature_level=int(params["quadrature_level"]))
    level = f.level + hp.quadrature_level
    window = default_window(f, level)
    H = heat_maximal(f, hp, window).to_dense(window.lo, window.hi)
    M = maximal(f, MaximalParams(), level, window).to_dense(window.lo, window.hi)
    mask = M > 0
    ratio = float(np.max(H[mask] / M[mask]))
    return Outcome(1, ratio, 1.0, ratio, level, "", bool(np.all(H[~mask] == 0.0)))


# -- registry ----------------------------------------------------------------------


@dataclass(frozen=True)
class ParamSet:
    """One parameter tuple of a suite.

    ``calibrated``: compare the extreme ratio with a fixture.
    ``direction``: ``"upper"`` (max ratio must not exceed ``factor * fixture``)
    or ``"lower"`` (min ratio must not fall below ``factor * fixture``).
    """

    tag: str
    params: Mapping
    calibrated: bool = True
    direction: str = "upper"
    factor: float = 1.05


@dataclass(frozen=True)
class Suite:
    name: str
    description: str
    trial: Callable[[int, Mapping, int | None], Outcome]
    sets: tuple[ParamSet, ...]
    trials: int = 200
    report_only: bool = False


_LOWER = 1.0 - 1e-9
_I = INF

SUITES: dict[str, Suite] = {
    s.name: s
    for s in [
        Suite("indicator", "closed-form Morrey-Lorentz norm of a cube indicator (exact)", _trial_indicator,
              (ParamSet("random", {}, calibrated=False),), trials=50),
        Suite("holder", "Holder inequality in Lorentz spaces", _trial_holder,
              (ParamSet("cauchy-schwarz", {"split": (2.0, 2.0, 2.0, 2.0), "bound": 1.0}, calibrated=False),
               ParamSet("mixed", {"split": (2.0, 1.0, 4.0, 2.0)}))),
        Suite("embedding", "embeddings between Morrey-Lorentz spaces", _trial_embedding,
              (ParamSet("r-to-weak", {"a": (2.0, 1.0, 1.0), "b": (2.0, 1.0, _I), "bound": 1.0}, calibrated=False),
               ParamSet("q-drop", {"a": (3.0, 2.0, 2.0), "b": (3.0, 1.0, 1.0)}))),
        Suite("fatou", "Fatou property of the Morrey-Lorentz quasi-norm", _trial_fatou,
              (ParamSet("truncations", {"sequence": "truncations", "mp": (3.0, 2.0, 1.5)}, calibrated=False),
               ParamSet("scalar", {"sequence": "scalar", "mp": (3.0, 2.0, _I)}, calibrated=False))),
        Suite("maximal-lpq", "boundedness of the Lorentz-average maximal operator on Lorentz spaces",
              _trial_maximal_lpq,
              (ParamSet("eta1-theta2", {"eta": 1.0, "theta": 2.0, "lorentz": (2.0, 1.0)}),)),
        Suite("maximal-mpqr", "boundedness of the Hardy-Littlewood maximal operator on Morrey-Lorentz spaces",
              _trial_maximal_mpqr, (ParamSet("p2-q1.5-r1", {"mp": (2.0, 1.5, 1.0)}),)),
        Suite("fefferman-stein", "Fefferman-Stein vector-valued maximal inequality", _trial_fefferman_stein,
              (ParamSet("u2", {"u": 2.0, "family": 8, "mp": (2.0, 1.5, 2.0)}),
               ParamSet("sup", {"u": _I, "family": 8, "mp": (2.0, 1.5, 1.0)}))),
        Suite("synthesis", "atomic synthesis with weak-Morrey normalized atoms", _trial_synthesis,
              (ParamSet("r1", {"mp": (2.0, 1.5, 1.0), "atom_space": (4.0, 3.0), "v": 0.5}),
               ParamSet("rinf", {"mp": (2.0, 1.5, _I), "atom_space": (4.0, 3.0), "v": 0.5}))),
        Suite("decomposition", "constructive Calderon-Zygmund atomic decomposition", _trial_decomposition,
              (ParamSet("K0", {"K": 0, "v": 1.0}), ParamSet("K1", {"K": 1, "v": 1.0})), trials=100),
        Suite("atom-decay", "off-support decay of the fractional integral of an atom", _trial_atom_decay,
              (ParamSet("K0", {"K": 0, "alpha": 0.5}), ParamSet("K1", {"K": 1, "alpha": 0.5})), trials=100),
        Suite("frac-lower", "lower bound for the fractional integral of a cube indicator", _trial_frac_lower,
              (ParamSet("d1", {"dim": 1, "alpha": 0.5}, direction="lower", factor=_LOWER),
               ParamSet("d2", {"dim": 2, "alpha": 0.5}, direction="lower", factor=_LOWER)), trials=50),
        Suite("adams", "Adams-type fractional integral bound on Morrey-Lorentz spaces", _trial_adams,
              (ParamSet("case1", {"apq": (0.5, 1.5, 1.25, 1.25)}),
               ParamSet("case2", {"apq": (0.5, 1.5, 1.25, _I)}))),
        Suite("hls", "Hardy-Littlewood-Sobolev inequality", _trial_hls,
              (ParamSet("a0.5-p1.5", {"alpha": 0.5, "p": 1.5}),)),
        Suite("olsen", "Olsen inequality for the product with a fractional integral", _trial_olsen,
              (ParamSet("case1", {"apq": (0.5, 1.5, 1.25, 1.25, 2.0, 1.5)}, factor=1.1),
               ParamSet("case2", {"apq": (0.5, 1.5, 1.25, _I, 2.0, 1.5)}, factor=1.1))),
        Suite("fefferman-phong", "Fefferman-Phong inequality (report only: dimension below its hypothesis)",
              _trial_fefferman_phong, (ParamSet("q1", {"q": 1.0}, calibrated=False),), trials=20,
              report_only=True),
        Suite("heat-domination", "pointwise domination of the heat semigroup by the maximal operator",
              _trial_heat_domination, (ParamSet("default", {"quadrature_level": 2}),), trials=100),
    ]
}


def get_suite(name: str) -> Suite:
    try:
        return SUITES[name]
    except KeyError:
        raise UnknownSuite(f"unknown suite {name!r}; known: {', '.join(SUITES)}") from None


def get_param_set(suite: Suite, tag: str | None) -> ParamSet:
    if tag is None:
        return suite.sets[0]
    for ps in suite.sets:
        if ps.tag == tag:
            return ps
    raise UnknownSuite(f"suite {suite.name!r} has no parameter set {tag!r}")


# -- fixtures ---------------------------------------------------------------------


@dataclass(frozen=True)
class Fixture:
    id: str
    value: float
    command: str
    input_hash: str

    def to_json(self) -> dict:
        return {"id": self.id, "value": self.value, "command": self.command, "input_hash": self.input_hash}

    @classmethod
    def from_json(cls, obj: Mapping) -> Fixture:
        return cls(str(obj["id"]), float(obj["value"]), str(obj["command"]), str(obj["input_hash"]))


def fixture_path() -> Path:
    env = os.environ.get(FIXTURE_ENV)
    if env:
        return Path(env)
    return Path(__file__).with_name("fixtures.json")


def load_fixtures(path: Path | str | None = None) -> dict[str, Fixture]:
    path = fixture_path() if path is None else Path(path)
    if not path.exists():
        return {}
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return {d["id"]: Fixture.from_json(d) for d in data}


def save_fixtures(fixtures: Mapping[str, Fixture], path: Path | str | None = None) -> None:
    path = fixture_path() if path is None else Path(path)
    items = [fixtures[k].to_json() for k in sorted(fixtures)]
    path.write_text(json.dumps(items, indent=2) + "\n", encoding="utf-8")


def _canonical(obj):
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, Mapping):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return obj


def input_hash(suite: str, ps: ParamSet, eval_level: int | None) -> str:
    """Git blob hash of the canonical JSON of what the fixture constant depends on."""
    body = json.dumps(
        {"suite": suite, "set": ps.tag, "params": _canonical(ps.params), "eval_level": eval_level,
         "direction": ps.direction},
        sort_keys=True,
    ).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


# -- running ----------------------------------------------------------------------


@dataclass(frozen=True)
class TrialSpec:
    suite: str
    params: str | None = None  # parameter-set tag; None means the first set
    trials: int | None = None  # None means the suite default
    seed: int = 0
    eval_level: int | None = None
    fixture_id: str | None = None

    def resolve(self) -> tuple[Suite, ParamSet, int, str]:
        suite = get_suite(self.suite)
        ps = get_param_set(suite, self.params)
        n = suite.trials if self.trials is None else int(self.trials)
        if n < 1:
            raise ValueError("trial count must be >= 1")
        fid = self.fixture_id or f"{suite.name}[{ps.tag}]"
        return suite, ps, n, fid


@dataclass
class VerifyReport:
    suite: str
    tag: str
    rows: list[Row]
    statistic: float  # max ratio (upper) or min ratio (lower)
    median: float
    fixture: Fixture | None = None
    failures: list[str] = field(default_factory=list)
    recorded: Fixture | None = None

    @property
    def passed(self) -> bool:
        return not self.failures


def _one(args) -> Outcome:
    fn, seed, params, eval_level = args
    return fn(seed, params, eval_level)


def record_command(suite: str, trials: int, seed: int, eval_level: int | None) -> str:
    cmd = f"mllab verify --suite {suite} --trials {trials} --seed {seed} --mode record"
    if eval_level is not None:
        cmd += f" --eval-level {eval_level}"
    return cmd


def run_suite(spec: TrialSpec, mode: str = "assert", fixtures: Mapping[str, Fixture] | None = None,
              workers: int = 1) -> VerifyReport:
    """Run one parameter set; rows are ordered by trial index regardless of ``workers``."""
    if mode not in ("assert", "record"):
        raise ValueError(f"mode must be 'assert' or 'record', got {mode!r}")
    suite, ps, n, fid = spec.resolve()
    seeds = [trial_seed(spec.seed, i) for i in range(n)]
    jobs = [(suite.trial, s, ps.params, spec.eval_level) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            outcomes = list(ex.map(_one, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        outcomes = [_one(j) for j in jobs]
    pstr = format_params(ps.tag, ps.params)
    rows = [
        Row(suite.name, i, seeds[i], o.dim, pstr, o.lhs, o.rhs, o.ratio, o.eval_level, o.notes, o.ok)
        for i, o in enumerate(outcomes)
    ]
    ratios = [r.ratio for r in rows]
    stat = min(ratios) if ps.direction == "lower" else max(ratios)
    report = VerifyReport(suite.name, ps.tag, rows, stat, statistics.median(ratios))
    if suite.report_only:
        return report
    for r in rows:
        if not r.ok:
            report.failures.append(f"{fid} trial {r.trial}: per-row check failed ({r.notes})")
    if not ps.calibrated:
        return report
    h = input_hash(suite.name, ps, spec.eval_level)
    if mode == "record":
        report.recorded = Fixture(fid, stat, record_command(suite.name, n, spec.seed, spec.eval_level), h)
        return report
    fixtures = load_fixtures() if fixtures is None else fixtures
    fx = fixtures.get(fid)
    if fx is None:
        raise FixtureError(f"fixture {fid!r} missing; run: {record_command(suite.name, n, spec.seed, spec.eval_level)}")
    if fx.input_hash != h:
        raise FixtureError(f"fixture {fid!r} input hash {fx.input_hash} does not match current inputs {h}")
    report.fixture = fx
    bound = ps.factor * fx.value
    if ps.direction == "lower":
        if stat < bound:
            report.failures.append(f"{fid}: min ratio {stat!r} below {ps.factor!r} x fixture {fx.value!r}")
    elif stat > bound:
        report.failures.append(f"{fid}: max ratio {stat!r} exceeds {ps.factor!r} x fixture {fx.value!r}")
    return report


def run_verify(suite: str, trials: int | None = None, seed: int = 0, mode: str = "assert",
               eval_level: int | None = None, fixtures_file: Path | str | None = None,
               workers: int = 1) -> list[VerifyReport]:
    """Run every parameter set of ``suite``; in record mode, write the new fixtures."""
    s = get_suite(suite)
    fixtures = load_fixtures(fixtures_file)
    reports = [
        run_suite(TrialSpec(suite, ps.tag, trials, seed, eval_level), mode, fixtures, workers)
        for ps in s.sets
    ]
    if mode == "record":
        updated = dict(fixtures)
        for rep in reports:
            if rep.recorded is not None:
                updated[rep.recorded.id] = rep.recorded
        save_fixtures(updated, fixtures_file)
    return reports


def csv_text(reports: list[VerifyReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rep in reports:
        for row in rep.rows:
            w.writerow(row.cells())
    return buf.getvalue()


def write_csv(reports: list[VerifyReport], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(reports))
