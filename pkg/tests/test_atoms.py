from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import step_functions
from mllab.atoms import (
    Atom,
    AtomFamily,
    aggregate_function,
    aggregate_norm,
    check_atom_pairing,
    check_decomposition_norm,
    check_synthesis,
    decompose,
    decomposition_guarantees,
    synthesis_constraints,
    synthesize,
    validate_atom,
)
from mllab.dyadic import DyadicCube, StepFunction
from mllab.generators import gen_atom, gen_atom_family, gen_step_function
from mllab.lorentz import DomainError
from mllab.morrey import MorreyLorentzParams
from mllab.operators import dyadic_maximal

Q0 = DyadicCube(0, (0,))
HAAR = StepFunction(1, 1, [[0], [1]], [1.0, -1.0])
MP = MorreyLorentzParams(2, 1.5, 1)


# -- validation ---------------------------------------------------------------------


def test_validate_indicator_and_haar():
    chi = Atom(Q0, Q0.indicator(), -1)
    assert validate_atom(chi, 4, 3).valid
    assert validate_atom(chi, 4, 3).norm_ratio == pytest.approx(1.0, rel=1e-14)
    assert validate_atom(Atom(Q0, HAAR, 0), 4, 3).valid
    assert validate_atom(Atom(Q0, HAAR, 0), 2, 1, "morrey-L1").valid


def test_validate_rejects_each_failure():
    big = validate_atom(Atom(Q0, Q0.indicator(value=2.0), -1), 4, 3)
    assert not big.valid and any("size" in r for r in big.reasons)
    moments = validate_atom(Atom(Q0, Q0.indicator(), 0), 4, 3)
    assert not moments.valid and any("moment" in r for r in moments.reasons)
    outside = validate_atom(Atom(Q0, StepFunction(1, 0, [[1]], [0.5]), -1), 4, 3)
    assert not outside.valid and not outside.support_ok
    with pytest.raises(DomainError):
        validate_atom(Atom(Q0, HAAR, 0), 2, 3)
    with pytest.raises(DomainError):
        Atom(Q0, HAAR, -2)
    with pytest.raises(DomainError):
        Atom(DyadicCube(0, (0, 0)), HAAR, 0)


def test_generated_atoms_validate():
    rng = np.random.default_rng(3)
    for K in (-1, 0, 1, 2):
        for cube in (Q0, DyadicCube(2, (5,)), DyadicCube(1, (1, -2))):
            a = gen_atom(rng, cube, 4, 3, "weak-morrey", K)
            val = validate_atom(a, 4, 3)
            assert val.valid, val.reasons
            assert 0.5 - 1e-12 <= val.norm_ratio <= 1 + 1e-12


# -- synthesis --------------------------------------------------------------------


def test_synthesize_matches_per_cell_accumulation():
    for seed in range(100):
        fam = gen_atom_family(seed, count=4, cube_law=("nested", "disjoint", "random")[seed % 3], K=seed % 2,
                              v=0.5)
        got = synthesize(fam)
        level = max(a.data.level for a in fam.atoms)
        want: dict = {}
        for a, lam in zip(fam.atoms, fam.coefficients):
            for k, v in a.data.refine(level).cells.items():
                want[k] = want.get(k, 0.0) + lam * v
        for k, v in want.items():
            assert got.cells.get(k, 0.0) == pytest.approx(v, rel=1e-13, abs=1e-15)
        assert set(got.cells) <= set(want)


def test_aggregate_single_atom_and_monotone_in_v():
    fam1 = AtomFamily((Atom(Q0, HAAR, 0),), (3.0,), 1.0)
    assert aggregate_function(fam1).cells == {(0,): 3.0, (1,): 3.0}
    fam = gen_atom_family(7, count=5, cube_law="nested", v=1.0)
    # the v-aggregate decreases in v (the l^v quasi-norm decreases as v grows)
    norms = [aggregate_norm(fam, MP, v) for v in (0.25, 0.5, 0.75, 1.0)]
    assert all(a >= b * (1 - 1e-12) for a, b in zip(norms, norms[1:]))
    assert aggregate_function(AtomFamily((), (), 1.0)).is_zero()


@given(st.integers(-3, 3), st.integers(-8, 8), st.floats(0.1, 10))
def test_single_indicator_ratio_is_one(level, i, lam):
    # chi_Q has weak Morrey size exactly |Q|**(1/s), so it is an atom and both sides agree
    cube = DyadicCube(level, (i,))
    fam = AtomFamily((Atom(cube, cube.indicator(), -1),), (lam,), 0.5)
    assert abs(check_synthesis(fam, MP, (4, 3)).ratio - 1.0) <= 1e-12


def test_single_full_indicator_ratio_one():
    fam = AtomFamily((Atom(Q0, Q0.indicator(), -1),), (2.5,), 0.5)
    assert abs(check_synthesis(fam, MP, (4, 3)).ratio - 1.0) <= 1e-12


def test_disjoint_indicators_ratio_at_most_one():
    rng = np.random.default_rng(0)
    for _ in range(20):
        idx = rng.choice(32, size=5, replace=False)
        atoms = tuple(Atom(DyadicCube(2, (int(k),)), DyadicCube(2, (int(k),)).indicator(), -1) for k in idx)
        fam = AtomFamily(atoms, tuple(rng.uniform(0.2, 2, 5)), 0.5)
        assert check_synthesis(fam, MP, (4, 3)).ratio <= 1 + 1e-12


def test_synthesis_constraints_named():
    assert synthesis_constraints(MP, 4, 3, 0.5) == []
    bad = synthesis_constraints(MorreyLorentzParams(5, 3, 1), 4, 3, 1.0)
    assert bad == ["q < t", "p < s", "v < min(q, r)"]
    fam = AtomFamily((Atom(Q0, Q0.indicator(), -1),), (1.0,), 1.0)
    with pytest.raises(DomainError, match="v < min"):
        check_synthesis(fam, MP, (4, 3))
    bad_atom = AtomFamily((Atom(Q0, Q0.indicator(value=3.0), -1),), (1.0,), 0.5)
    with pytest.raises(DomainError, match="atom 0 invalid"):
        check_synthesis(bad_atom, MP, (4, 3))


def test_family_validation():
    with pytest.raises(DomainError):
        AtomFamily((Atom(Q0, HAAR, 0),), (-1.0,))
    with pytest.raises(DomainError):
        AtomFamily((Atom(Q0, HAAR, 0),), (1.0, 2.0))
    with pytest.raises(DomainError):
        AtomFamily((), (), 1.5)


def test_family_json_round_trip():
    fam = gen_atom_family(11, count=3, K=1, v=0.5)
    text = json.dumps(fam.to_json())
    back = AtomFamily.from_json(json.loads(text))
    assert back == fam
    assert json.dumps(back.to_json()) == text


# -- decomposition ----------------------------------------------------------------


def _check_guarantees(f, K):
    res = decompose(f, K)
    g = decomposition_guarantees(f, res)
    assert g.violations() == [], g
    for a in res.family.atoms:
        assert a.support_ok()
        assert a.data.sup_norm() <= 1 + 1e-12
    return res, g


def test_decompose_haar_and_indicator():
    res, g = _check_guarantees(HAAR, 0)
    assert g.reconstruction_error == 0.0
    res, g = _check_guarantees(Q0.indicator(), 0)
    # chi_[0,1) has average 1/2 on the top cube [0, 2); its projection there is the residual
    assert res.residual.sup_norm() == pytest.approx(0.5)
    with pytest.raises(DomainError):
        decompose(StepFunction.zero(), 0)
    with pytest.raises(DomainError):
        decompose(HAAR, -1)


@given(step_functions(max_cells=8, level=st.integers(0, 4), span=16), st.integers(0, 2))
def test_decompose_guarantees_random(f, K):
    res, g = _check_guarantees(f, K)
    assert res.level_range[0] <= res.level_range[1]
    # every atom sits in a cube where the dyadic maximal function exceeds its threshold
    Md = dyadic_maximal(f, res.top)
    for a, k in zip(res.family.atoms, res.thresholds):
        c = a.support_cube.lower + a.support_cube.side / 2
        assert Md.sample([c])[0] > 2.0**k


def test_decompose_2d_with_linear_cancellation():
    for seed in range(5):
        f = gen_step_function(seed, dim=2, level=2, support_cells=10)
        _check_guarantees(f, 1)


@given(st.integers(-3, 3))
def test_decomposition_norm_dilation_and_scaling(m):
    f = gen_step_function(4, level=3, support_cells=6)
    mp = MorreyLorentzParams(2, 1.5, 1)
    base = check_decomposition_norm(f, decompose(f, 0), mp).ratio
    # dilating by 2**m and scaling by 2**m maps dyadic structure onto itself
    g = f.dilate(m).scale(2.0**m)
    assert check_decomposition_norm(g, decompose(g, 0), mp).ratio == pytest.approx(base, rel=1e-10)


# -- pairing ----------------------------------------------------------------------


def test_pairing_polynomials_and_haar():
    assert check_atom_pairing(Atom(Q0, HAAR, 0), lambda x: 3.0 + 0 * x[:, 0], 2).pairing == pytest.approx(0, abs=1e-15)
    rep = check_atom_pairing(Atom(Q0, HAAR, 0), lambda x: x[:, 0] ** 2, 2)
    assert rep.pairing == pytest.approx(-0.25, rel=1e-13)
    rng = np.random.default_rng(1)
    a = gen_atom(rng, Q0, 4, 3, "weak-morrey", 2)
    cubic_free = check_atom_pairing(a, lambda x: 1 - 2 * x[:, 0] + 5 * x[:, 0] ** 2, 2)
    assert abs(cubic_free.pairing) < 1e-10


def test_pairing_decay_bounded_under_shrinking():
    def phi(x):
        return np.exp(-np.sum(x**2, axis=1))

    for K, data in ((0, HAAR), (1, StepFunction(1, 2, [[0], [1], [2], [3]], [1.0, -1.0, -1.0, 1.0]))):
        ratios = []
        for j in range(0, 9):
            cube = DyadicCube(j, (3,))
            a = Atom(cube, _place(data, cube), K)
            ratios.append(check_atom_pairing(a, phi, 2).ratio)
        assert max(ratios) < 10
        assert min(ratios) > 0


def _place(data: StepFunction, cube: DyadicCube) -> StepFunction:
    # x -> data((x - corner) / side) for data living on [0, 1)
    shift = np.array(cube.index) << data.level
    return StepFunction(data.dim, data.level + cube.level, data.indices + shift, data.values)
