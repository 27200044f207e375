import json
import math

import numpy as np
import pytest

from lichnerowicz import fieldio
from lichnerowicz.cli import apply_override, main, run
from lichnerowicz.errors import ConfigurationError
from lichnerowicz.expressions import constant, field_from_expression
from lichnerowicz.grid import make_grid


def write_config(tmp_path, coefficients, grid=None, **extra):
    doc = {"grid": grid or {"d": 1, "n": [64], "L": ["2*pi"]},
           "coefficients": coefficients, "output": {"directory": "out"}}
    doc.update(extra)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    return path


BENCH = {"mode": "direct", "N": 3, "a": 1, "b": 2, "csq": 0, "dsq": 1, "cd": 0, "h": 0}


def read_report(tmp_path, name):
    return json.loads((tmp_path / "out" / name).read_text())["report"]


def test_solve_constant_instance(tmp_path):
    cfg = write_config(tmp_path, BENCH)
    assert main(["solve", "--config", str(cfg)]) == 0
    rows = (tmp_path / "out" / "trace.csv").read_text().splitlines()
    assert float(rows[-1].split(",")[2]) < 1e-8
    u = fieldio.load_field(tmp_path / "out" / "u")
    assert np.allclose(u.values, 1.0, atol=1e-8)
    assert read_report(tmp_path, "solve_report.json")["converged"]


def test_check_reports_a2(tmp_path):
    cfg = write_config(tmp_path, dict(BENCH, a=0))
    assert run("check", cfg) == 2
    rep = read_report(tmp_path, "assumptions.json")
    assert not rep["a2"] and not rep["all_pass"]
    assert not rep["validation"]["A2_essinf_A_positive"]["passed"]


def test_solve_with_failed_assumptions_exits_2(tmp_path):
    cfg = write_config(tmp_path, dict(BENCH, h=-0.5))
    assert run("solve", cfg) == 2


def test_solve_budget_exhaustion_exits_3(tmp_path):
    cfg = write_config(tmp_path, BENCH)
    assert run("solve", cfg, ["solver.max_outer=2"]) == 3


def test_nonexist_ne1_example(tmp_path):
    cfg = write_config(tmp_path, dict(BENCH, b=0, h=1))
    assert run("nonexist", cfg) == 0
    rep = read_report(tmp_path, "nonexistence.json")
    assert rep["conditions"]["NE1"]["satisfied"] and rep["oracle_certified"]


def test_nonexist_inconsistent_verdict_exits_1(tmp_path):
    cfg = write_config(tmp_path, dict(BENCH, a=0.5, b=-1, h=2.1))
    assert run("nonexist", cfg) == 1
    assert not read_report(tmp_path, "nonexistence.json")["consistency"]


@pytest.mark.parametrize("override", ["coefficients.mode=bogus", "grid.n=5",
                                      "solver.tol_outer=-1", "solver.nonsense=1",
                                      "coefficients.a=__import__('os')",
                                      "coefficients.h={\"file\": \"missing\"}"])
def test_configuration_errors_exit_4(tmp_path, override):
    cfg = write_config(tmp_path, BENCH)
    assert run("solve", cfg, [override]) == 4


def test_missing_config_exits_4(tmp_path):
    assert run("check", tmp_path / "nope.json") == 4


def test_assemble_then_check_from_directory(tmp_path):
    geo = {"mode": "geometric", "N": 3, "tau": "0.5*sin(x1)", "pi": "2 + cos(x2)", "nu": 0.1,
           "W": ["0.1*sin(x2)", 0, 0], "sigma": {}, "R": 1}
    grid = {"d": 3, "n": 8, "L": "2*pi"}
    cfg = write_config(tmp_path, geo, grid=grid)
    assert run("assemble", cfg) == 0
    meta = json.loads((tmp_path / "out" / "coefficients" / "meta.json").read_text())
    assert meta["mode"] == "geometric" and "non-geometric h" in meta["tags"]
    cfg2 = write_config(tmp_path, {"mode": "direct", "directory": "out/coefficients"}, grid=grid)
    assert run("check", cfg2) in (0, 2)
    assert (tmp_path / "out" / "assumptions.json").exists()


def test_manufacture_and_solve(tmp_path):
    man = {"mode": "manufactured", "N": 3, "u_star": "1.5 + 0.5*sin(x1)", "a": 0.01, "b": -1,
           "csq": 0, "dsq": 1, "cd": 0}
    cfg = write_config(tmp_path, man)
    assert run("manufacture", cfg) == 0
    assert (tmp_path / "out" / "u_star.f64").exists()
    assert run("solve", cfg) == 0
    cfg2 = write_config(tmp_path, BENCH)
    assert run("manufacture", cfg2) == 4


def test_field_files_in_config(tmp_path):
    g = make_grid(1, 64, 2 * math.pi)
    fieldio.save_field(tmp_path / "a", field_from_expression(g, "0.9 + 0.1*cos(x1)"))
    cfg = write_config(tmp_path, dict(BENCH, a={"file": "a"}))
    assert run("check", cfg) == 0


def test_apply_override():
    doc = {"solver": {"tol_outer": 1e-10}}
    apply_override(doc, "solver.tol_outer=1e-9")
    apply_override(doc, "output.directory=res")
    assert doc == {"solver": {"tol_outer": 1e-9}, "output": {"directory": "res"}}
    with pytest.raises(ConfigurationError):
        apply_override(doc, "no_equals_sign")


def test_expressions_match_direct_construction():
    g = make_grid(2, 16, [2.0, 3.0])
    x1, x2 = g.coordinates
    expr = "1.5 + 0.5*sin(2*pi*x1/2) * cos(x2) - exp(-x1**2) / (2 + e)"
    direct = 1.5 + 0.5 * np.sin(2 * np.pi * x1 / 2) * np.cos(x2) - np.exp(-x1 ** 2) / (2 + np.e)
    assert np.max(np.abs(field_from_expression(g, expr).values - direct)) <= 1e-15
    assert constant("2*pi") == 2 * math.pi
    assert np.all(field_from_expression(g, 3).values == 3.0)


@pytest.mark.parametrize("bad", ["x3", "foo(1)", "x1.real", "[1, 2]", "lambda: 1", "1 if 1 else 2",
                                 "sin(x1, x2)", "True"])
def test_expressions_reject_unsupported(bad):
    g = make_grid(2, 4, 1.0)
    with pytest.raises(ConfigurationError):
        field_from_expression(g, bad)
