from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import step_functions
from mllab.dyadic import DyadicCube, StepFunction
from mllab.lorentz import INF, DomainError, LorentzParams, lorentz_norm
from mllab.morrey import (
    MorreyLorentzParams,
    check_embedding,
    check_fatou,
    indicator_norm,
    monotone_truncations,
    morrey_lorentz_norm,
    morrey_norm,
    scalar_approach,
    weak_morrey_norm,
    weak_morrey_thresholds,
)

F = StepFunction(1, 0, [[0], [1]], [2.0, 1.0])


def test_indicator_value():
    chi = DyadicCube(-1, (0,)).indicator()  # [0, 2)
    assert morrey_lorentz_norm(chi, MorreyLorentzParams(4, 2, 2)) == pytest.approx(2**0.25, rel=1e-15)
    assert weak_morrey_norm(chi, 4, 2) == pytest.approx(2**0.25, rel=1e-15)


def test_params_validation():
    with pytest.raises(DomainError):
        MorreyLorentzParams(1, 2, 2)
    with pytest.raises(DomainError):
        MorreyLorentzParams(2, 1, 0)
    with pytest.raises(DomainError):
        weak_morrey_norm(F, 1, 2)


def test_zero_function():
    assert morrey_lorentz_norm(StepFunction.zero(), MorreyLorentzParams(2, 1, 1)) == 0.0


@given(st.integers(-4, 4), st.integers(-6, 6), st.integers(-6, 6), st.floats(0.3, 4), st.floats(1, 3),
       st.one_of(st.floats(0.3, 6), st.just(INF)), st.integers(0, 2), st.booleans())
def test_indicator_formula(level, i, j, q, ratio, r, d, two_d):
    cube = DyadicCube(level, (i, j) if two_d else (i,))
    mp = MorreyLorentzParams(q * ratio, q, r)
    got = morrey_lorentz_norm(cube.indicator(level + d), mp)
    assert got == pytest.approx(indicator_norm(cube.volume(), mp), rel=1e-12)


@given(step_functions(max_cells=6, span=12), st.floats(1, 4), st.floats(0.5, 1), st.floats(0.5, 4))
def test_matches_bruteforce_enumeration(f, p, qfrac, r):
    mp = MorreyLorentzParams(p, p * qfrac, r)
    want = oracles.morrey_bruteforce(f, mp.p, mp.q, mp.r)
    assert morrey_lorentz_norm(f, mp) == pytest.approx(want, rel=1e-12)


@given(step_functions(dim=2, max_cells=5, span=6), st.floats(1, 4), st.floats(0.5, 1), st.floats(0.5, 4))
def test_matches_bruteforce_enumeration_2d(f, p, qfrac, r):
    mp = MorreyLorentzParams(p, p * qfrac, r)
    want = oracles.morrey_bruteforce(f, mp.p, mp.q, mp.r)
    assert morrey_lorentz_norm(f, mp) == pytest.approx(want, rel=1e-12)


def test_small_explicit_family():
    # 2 chi_[0,1) + chi_[1,2), (p,q,r) = (2,1,1): cells give 2 and 1, [0,2) gives 3 / sqrt(2),
    # [0,4) gives 3 / 2
    assert morrey_lorentz_norm(F, MorreyLorentzParams(2, 1, 1)) == pytest.approx(max(2, 3 / math.sqrt(2)))


@given(step_functions(max_cells=6), st.floats(0.5, 4), st.floats(0.5, 4), st.integers(0, 3))
def test_refinement_invariance(f, q, r, d):
    mp = MorreyLorentzParams(2 * q, q, r)
    a = morrey_lorentz_norm(f, mp)
    assert morrey_lorentz_norm(f.refine(f.level + d), mp) == pytest.approx(a, rel=1e-13)


@given(step_functions(max_cells=6, signed=False), st.floats(0.5, 4), st.floats(0.5, 4))
def test_specialization_to_lorentz(f, p, r):
    # |Q|^{1/p - 1/q} = 1 when q = p, and f chi_Q grows with Q
    assert morrey_lorentz_norm(f, MorreyLorentzParams(p, p, r)) == pytest.approx(
        lorentz_norm(f, LorentzParams(p, r)), rel=1e-13)


@given(step_functions(max_cells=8), st.floats(1, 4), st.floats(0.3, 1))
def test_weak_morrey_dual_formula(f, p, qfrac):
    q = p * qfrac
    assert weak_morrey_norm(f, p, q) == pytest.approx(weak_morrey_thresholds(f, p, q), rel=1e-12)


def test_weak_morrey_explicit():
    assert weak_morrey_norm(F, 2, 1) == pytest.approx(weak_morrey_thresholds(F, 2, 1), rel=1e-15)


@given(step_functions(max_cells=6), st.floats(-3, 3))
def test_homogeneity(f, log_c):
    c = 2.0**log_c
    mp = MorreyLorentzParams(3, 1.5, 2)
    assert morrey_lorentz_norm(f.scale(c), mp) == pytest.approx(c * morrey_lorentz_norm(f, mp), rel=1e-12)


@given(step_functions(max_cells=6))
def test_embedding_to_weak_bounded_by_one(f):
    rep = check_embedding(f, MorreyLorentzParams(2, 1, 1), MorreyLorentzParams(2, 1, INF))
    assert rep.ratio <= 1 + 1e-10


def test_embedding_identity_and_indicator():
    mp = MorreyLorentzParams(3, 2, 1.5)
    assert check_embedding(F, mp, mp).ratio == 1.0
    chi = DyadicCube(0, (3,)).indicator()
    a, b = MorreyLorentzParams(3, 2, 1), MorreyLorentzParams(3, 2, 4)
    want = (2 / 4) ** (1 / 4) / (2 / 1) ** (1 / 1)
    assert check_embedding(chi, a, b).ratio == pytest.approx(want, rel=1e-13)
    with pytest.raises(DomainError):
        check_embedding(chi, b, a)


def test_morrey_norm_is_classical():
    assert morrey_norm(F, 2, 1) == morrey_lorentz_norm(F, MorreyLorentzParams(2, 1, 1))


@given(step_functions(max_cells=6))
def test_fatou_on_generated_sequences(f):
    for mp in (MorreyLorentzParams(3, 2, 1.5), MorreyLorentzParams(2, 1, INF)):
        assert check_fatou(monotone_truncations(f), f, mp).holds
        rep = check_fatou(scalar_approach(f), f, mp)
        assert rep.holds
        assert rep.liminf == pytest.approx(rep.limit_norm, rel=1e-12)


def test_fatou_constant_sequence_and_errors():
    mp = MorreyLorentzParams(2, 1, 1)
    rep = check_fatou([F] * 5, F, mp)
    assert rep.holds and rep.liminf == rep.limit_norm
    with pytest.raises(DomainError):
        check_fatou([], F, mp)
    with pytest.raises(DomainError):
        check_fatou([F] * 5, F, mp, tail=3)
