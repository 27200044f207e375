import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lichnerowicz.analysis import compute_bracket
from lichnerowicz.errors import DomainError, PreconditionError
from lichnerowicz.grid import ScalarField, make_grid, random_smooth_field
from lichnerowicz.solver import (SolverConfig, TRACE_COLUMNS, a_form, apply_A, h1_norm_sq,
                                 inner_coercivity, inner_solve, outer_solve, residual,
                                 verify_solution, write_trace_csv)
from lichnerowicz.truncation import TruncationContext

from helpers import benchmark, manufactured, random_admissible


def test_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(tol_outer=0.0)
    with pytest.raises(DomainError):
        SolverConfig(inner_method="jacobi")


def test_residual_of_constant_solution():
    g = make_grid(1, 16, 2 * math.pi)
    cs = benchmark(g)
    r, r_inf, r_l2 = residual(ScalarField.constant(g, 1.0), cs)
    assert r_inf == 0.0 and r_l2 == 0.0
    with pytest.raises(DomainError):
        residual(ScalarField.constant(g, 0.0), cs)


def test_a_form_matches_apply_A(rng):
    g = make_grid(2, 16, 2 * math.pi)
    cs = random_admissible(g, rng)
    u, v = random_smooth_field(g, rng), random_smooth_field(g, rng)
    lhs = a_form(u, v, cs)
    rhs = float(np.mean(apply_A(u, cs).values * v.values)) * g.volume
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
    assert a_form(u, v, cs) == pytest.approx(a_form(v, u, cs), rel=1e-12)


@pytest.mark.parametrize("method", ["newton", "contraction"])
def test_inner_solve_residual(method, rng):
    g = make_grid(1, 32, 2 * math.pi)
    cs = benchmark(g).replace(b=2.0 + (random_smooth_field(g, rng, modes=2) ** 2) * 0.3)
    ctx = TruncationContext(compute_bracket(cs), cs)
    assert inner_coercivity(cs, ctx) > 0
    rhs = ScalarField(g, ctx.f1(np.full(g.shape, ctx.bracket.theta_low)))
    cfg = SolverConfig(inner_method=method, max_inner=20000)
    u = inner_solve(rhs, cs, ctx, cfg)
    F = (apply_A(u, cs).values + ctx.f2(u.values) - rhs.values)
    assert np.max(np.abs(F)) < 1e-10 * (1 + np.max(np.abs(rhs.values)))


def test_benchmark_converges_to_one():
    g = make_grid(1, 64, 2 * math.pi)
    rep = outer_solve(benchmark(g))
    assert rep.converged and rep.monotone and rep.bracket_ok
    assert rep.residual_inf < 1e-8
    assert np.allclose(rep.u.values, 1.0, atol=1e-8)
    assert rep.truncation_gap < 1e-10


def test_contraction_and_newton_agree():
    g = make_grid(1, 32, 2 * math.pi)
    cs = benchmark(g)
    a = outer_solve(cs, cfg=SolverConfig(inner_method="newton"))
    b = outer_solve(cs, cfg=SolverConfig(inner_method="contraction", max_inner=50000))
    assert a.converged and b.converged
    assert np.max(np.abs(a.u.values - b.u.values)) < 1e-8
    assert b.inner["contraction_factor"] <= b.inner["contraction_bound"] + 1e-9


def test_outer_solve_refuses_failed_assumptions():
    g = make_grid(1, 16, 2 * math.pi)
    with pytest.raises(PreconditionError):
        outer_solve(benchmark(g).replace(h=ScalarField.constant(g, -0.5)))


def test_outer_solve_reports_nonconvergence_on_budget():
    g = make_grid(1, 16, 2 * math.pi)
    rep = outer_solve(benchmark(g), cfg=SolverConfig(max_outer=3))
    assert not rep.converged and rep.outer_iters == 3 and len(rep.trace) == 3


def test_manufactured_solve_2d(rng):
    g = make_grid(2, 16, 2 * math.pi)
    u_star, cs = manufactured(g, rng)
    rep = outer_solve(cs)
    assert rep.converged
    # collocation has no discrete maximum principle: tiny negative increments are allowed
    steps = [r.delta_inf for r in rep.trace]
    assert rep.min_increment > -1e-3 * max(steps)
    v = verify_solution(rep.u, cs, rep.bracket)
    assert v.passed and v.in_bracket


def test_trace_csv(tmp_path):
    g = make_grid(1, 16, 2 * math.pi)
    rep = outer_solve(benchmark(g))
    path = write_trace_csv(tmp_path / "t.csv", rep.trace)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert len(lines) == rep.outer_iters + 1
    assert float(lines[-1].split(",")[2]) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_coercivity_of_a_form(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(1, 32, 2 * math.pi)
    cs = random_admissible(g, rng)
    kappa = min(1.0, float(np.min(cs.q)))
    u = random_smooth_field(g, rng, modes=6, mean=rng.normal())
    assert a_form(u, u, cs) >= kappa * h1_norm_sq(u) - 1e-12
