from __future__ import annotations

import json
import math

import pytest

from mllab import cli
from mllab.dyadic import DyadicCube, StepFunction


def _write(path, obj) -> str:
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


@pytest.fixture
def chi_q2(tmp_path):
    return _write(tmp_path / "chi.json", DyadicCube(-1, (0,)).indicator().to_json())


@pytest.fixture
def two_step(tmp_path):
    return _write(tmp_path / "f.json", StepFunction(1, 0, [[0], [1]], [2.0, 1.0]).to_json())


@pytest.fixture
def haar(tmp_path):
    return _write(tmp_path / "haar.json", StepFunction(1, 1, [[0], [1]], [1.0, -1.0]).to_json())


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_norm_examples(capsys, chi_q2, two_step):
    code, out, _ = run(capsys, "norm", "--space", "morrey-lorentz", "--p", "4", "--q", "2", "--r", "2",
                       "--input", chi_q2)
    assert code == 0
    assert float(out) == pytest.approx(2**0.25, rel=1e-14)
    assert out.strip() == "1.18920711500272"
    code, out, _ = run(capsys, "norm", "--space", "lorentz", "--p", "2", "--q", "2", "--input", two_step)
    assert code == 0 and out.strip() == "2.23606797749979"
    code, out, _ = run(capsys, "norm", "--space", "weak-morrey", "--p", "2", "--q", "1", "--input", two_step)
    assert code == 0 and float(out) > 0


def test_norm_errors(capsys, tmp_path, two_step):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 1,\n "level": 0 "cells": []}')
    code, _, err = run(capsys, "norm", "--space", "lorentz", "--p", "2", "--q", "2", "--input", str(bad))
    assert code == 2 and "line 2 column 13" in err
    code, _, err = run(capsys, "norm", "--space", "lorentz", "--p", "-1", "--q", "2", "--input", two_step)
    assert code == 3 and "--p" in err
    code, _, err = run(capsys, "norm", "--space", "morrey-lorentz", "--p", "2", "--q", "1", "--input", two_step)
    assert code == 3 and "--r" in err
    code, _, _ = run(capsys, "norm", "--space", "lorentz", "--p", "x", "--q", "2", "--input", two_step)
    assert code == 3
    code, _, err = run(capsys, "norm", "--space", "lorentz", "--p", "2", "--q", "2", "--input",
                       str(tmp_path / "missing.json"))
    assert code == 2 and "cannot read" in err
    dup = _write(tmp_path / "dup.json", {"dim": 1, "level": 0, "cells": [{"index": [0], "value": 1.0},
                                                                          {"index": [0], "value": 2.0}]})
    code, _, err = run(capsys, "norm", "--space", "lorentz", "--p", "2", "--q", "2", "--input", dup)
    assert code == 2 and "duplicate" in err


def test_maximal_fracint_heat_at_points(capsys, tmp_path):
    chi = _write(tmp_path / "chi01.json", DyadicCube(0, (0,)).indicator().to_json())
    code, out, _ = run(capsys, "maximal", "--input", chi, "--eval-level", "1", "--at", "1.75")
    assert code == 0 and out.split() == ["1.75", "0.5"]
    code, out, _ = run(capsys, "fracint", "--alpha", "0.5", "--input", chi, "--at", "0", "--at", "2")
    vals = [float(line.split()[1]) for line in out.splitlines()]
    assert code == 0
    assert vals[0] == pytest.approx(2.0, abs=1e-10)
    assert vals[1] == pytest.approx(2 * (math.sqrt(2) - 1), abs=1e-10)
    code, out, _ = run(capsys, "heat", "--t", "1e-8", "--input", chi, "--at", "0.5")
    assert code == 0 and float(out.split()[1]) == pytest.approx(1.0, abs=1e-12)
    code, _, err = run(capsys, "heat", "--t", "0", "--input", chi)
    assert code == 3 and "--t" in err
    code, _, err = run(capsys, "fracint", "--alpha", "1.5", "--input", chi)
    assert code == 3 and "--alpha" in err
    code, _, err = run(capsys, "maximal", "--input", chi, "--at", "1,2")
    assert code == 3 and "--at" in err


def test_operator_outputs_are_step_functions(capsys, tmp_path):
    chi = _write(tmp_path / "chi01.json", DyadicCube(0, (0,)).indicator().to_json())
    for argv in (("maximal", "--eval-level", "2"), ("fracint", "--alpha", "0.5"), ("heat", "--t", "0.1")):
        out_path = tmp_path / f"{argv[0]}.json"
        code, _, _ = run(capsys, *argv, "--input", chi, "--output", str(out_path))
        assert code == 0
        g = StepFunction.loads(out_path.read_text())
        assert not g.is_zero()
    code, _, err = run(capsys, "maximal", "--input", chi, "--eval-level", "-1")
    assert code == 3 and "--eval-level" in err


def test_decompose_and_round_trip(capsys, tmp_path, haar):
    atoms = tmp_path / "atoms.json"
    report = tmp_path / "report.json"
    code, out, _ = run(capsys, "decompose", "--K", "0", "--input", haar, "--output", str(atoms),
                       "--report", str(report))
    assert code == 0
    rep = json.loads(report.read_text())
    assert set(rep) == {"residual", "guarantees", "level_range", "atoms"}
    g = rep["guarantees"]
    assert g["reconstruction_error"] <= 1e-10
    assert {"max_atom_excess", "max_moment_residual", "pointwise_bound_constant"} <= set(g)
    code, out, _ = run(capsys, "synthesize", "--input", str(atoms), "--residual", str(report), "--compare", haar)
    assert code == 0
    diff = float(out.split()[1])
    assert diff <= 1e-10


def test_decompose_random_round_trip(capsys, tmp_path):
    from mllab.generators import gen_step_function

    f = gen_step_function(17, level=4, support_cells=12)
    src = _write(tmp_path / "f.json", f.to_json())
    atoms, report, back = tmp_path / "a.json", tmp_path / "r.json", tmp_path / "b.json"
    assert run(capsys, "decompose", "--K", "1", "--input", src, "--output", str(atoms), "--report", str(report))[0] == 0
    code, _, _ = run(capsys, "synthesize", "--input", str(atoms), "--residual", str(report), "--output", str(back))
    assert code == 0
    g = StepFunction.loads(back.read_text())
    assert (g - f).sup_norm() <= 1e-10 * f.sup_norm()


def test_decompose_errors(capsys, tmp_path, haar):
    zero = _write(tmp_path / "zero.json", {"dim": 1, "level": 0, "cells": []})
    code, _, err = run(capsys, "decompose", "--input", zero)
    assert code == 3 and "zero" in err
    assert run(capsys, "decompose", "--K", "-1", "--input", haar)[0] == 3
    assert run(capsys, "decompose", "--v", "2", "--input", haar)[0] == 3
    bad = _write(tmp_path / "fam.json", {"atoms": [{"cube": 3}]})
    assert run(capsys, "synthesize", "--input", bad)[0] == 2


def test_verify_indicator_example(capsys, tmp_path):
    out_csv = tmp_path / "r.csv"
    code, _, err = run(capsys, "verify", "--suite", "indicator", "--trials", "50", "--seed", "7", "--mode", "assert",
                       "--report", str(out_csv))
    assert code == 0 and "PASS indicator[random]" in err
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "suite,trial,seed,dim,params,lhs,rhs,ratio,eval_level,notes"
    assert len(lines) == 51


def test_verify_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(capsys, "verify", "--suite", "olsen", "--trials", "4", "--report", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_errors_and_fixture_env(capsys, tmp_path, monkeypatch):
    code, _, err = run(capsys, "verify", "--suite", "nope")
    assert code == 3 and "unknown suite" in err
    assert run(capsys, "verify", "--suite", "hls", "--trials", "0")[0] == 3
    monkeypatch.setenv("MLLAB_FIXTURES", str(tmp_path / "none.json"))
    code, _, err = run(capsys, "verify", "--suite", "hls", "--trials", "2")
    assert code == 5 and "missing" in err
    code, _, _ = run(capsys, "verify", "--suite", "hls", "--trials", "2", "--mode", "record")
    assert code == 0 and (tmp_path / "none.json").exists()
    assert run(capsys, "verify", "--suite", "hls", "--trials", "2")[0] == 0


def test_verify_assert_failure_exit_one(capsys, tmp_path, monkeypatch):
    from mllab.harness import Fixture, get_suite, input_hash, save_fixtures

    ps = get_suite("hls").sets[0]
    fid = f"hls[{ps.tag}]"
    path = tmp_path / "tight.json"
    save_fixtures({fid: Fixture(fid, 1e-6, "cmd", input_hash("hls", ps, None))}, path)
    code, _, err = run(capsys, "verify", "--suite", "hls", "--trials", "2", "--fixtures", str(path))
    assert code == 1 and "FAIL" in err


def test_estimate_writes_nothing(capsys, tmp_path, monkeypatch):
    path = tmp_path / "fx.json"
    monkeypatch.setenv("MLLAB_FIXTURES", str(path))
    code, out, _ = run(capsys, "estimate", "--suite", "adams", "--trials", "3")
    assert code == 0 and not path.exists()
    assert out.splitlines()[0].startswith("adams[case1] max ")


def test_help(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0 and "Exit codes" in out
    code, out, _ = run(capsys, "verify", "--help")
    assert code == 0
    for name in ("indicator", "olsen", "fefferman-phong", "heat-domination"):
        assert name in out
    for cmd in ("norm", "maximal", "fracint", "heat", "decompose", "synthesize", "estimate"):
        assert run(capsys, cmd, "--help")[0] == 0
    assert run(capsys)[0] == 3
