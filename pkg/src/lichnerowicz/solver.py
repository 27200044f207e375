"""Monotone iteration ``u_{k+1} = (A + F2)^{-1} F1(u_k)`` from the constant subsolution.

The inner problem ``-Lap u + (h - csq) u + f2(u) = g`` is solved either by a
shifted spectral contraction or by inexact Newton with preconditioned CG.
Every returned iterate is checked against the untruncated equation.
"""
from dataclasses import dataclass, field
import csv
import logging
import math
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .analysis import Bracket, check_assumptions, compute_bracket
from .coefficients import CoefficientSet
from .errors import DomainError, NonConvergenceError, PreconditionError
from .grid import ScalarField, gradient_arrays, helmholtz_solve_array, laplacian_array
from .truncation import TruncationContext
from ._util import power

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps


@dataclass
class SolverConfig:
    tol_outer: float = 1e-10
    tol_inner: float = 1e-12
    tol_residual: float = 1e-8
    max_outer: int = 500
    max_inner: int = 10000
    inner_method: str = "newton"
    monotonicity_tolerance: float = 1e-12

    def __post_init__(self):
        for name in ("tol_outer", "tol_inner", "tol_residual", "monotonicity_tolerance"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise DomainError("iteration budgets must be >= 1")
        if self.inner_method not in ("contraction", "newton"):
            raise DomainError(f"unknown inner_method {self.inner_method!r}")


# --- the linear part ------------------------------------------------------

def apply_A(u: ScalarField, cs: CoefficientSet) -> ScalarField:
    """Strong form ``-Lap u + (h - csq) u``."""
    return ScalarField(u.grid, -laplacian_array(u.grid, u.values) + cs.q * u.values)


def a_form(u: ScalarField, v: ScalarField, cs: CoefficientSet) -> float:
    """``int grad u . grad v + (h - csq) u v`` by trapezoidal quadrature."""
    grid = u.grid
    gu = gradient_arrays(grid, u.values)
    gv = gradient_arrays(grid, v.values)
    integrand = sum(a * b for a, b in zip(gu, gv)) + cs.q * u.values * v.values
    return float(np.mean(integrand) * grid.volume)


def h1_norm_sq(u: ScalarField) -> float:
    """Discrete ``||grad u||^2 + ||u||^2`` with the same gradient as :func:`a_form`."""
    grid = u.grid
    integrand = sum(g * g for g in gradient_arrays(grid, u.values)) + u.values ** 2
    return float(np.mean(integrand) * grid.volume)


# --- residuals --------------------------------------------------------------

def _nonlinearity(u, cs):
    p = cs.twostar
    return (cs.dsq.values * power(u, 2 * p + 1) + 2.0 * cs.cd.values * power(u, p + 1)
            - cs.b.values * power(u, p - 1) + cs.a.values * power(u, -(p + 1)))


def residual_array(u: np.ndarray, cs: CoefficientSet) -> np.ndarray:
    if np.any(u <= 0):
        raise DomainError("residual needs u > 0 at every grid point")
    return -laplacian_array(cs.grid, u) + cs.q * u - _nonlinearity(u, cs)


def residual(u: ScalarField, cs: CoefficientSet):
    """Untruncated residual field with its sup and L2 norms."""
    r = residual_array(u.values, cs)
    l2 = math.sqrt(float(np.mean(r * r)) * u.grid.volume)
    return ScalarField(u.grid, r), float(np.max(np.abs(r))), l2


@dataclass
class VerifyReport:
    residual_inf: float
    residual_l2: float
    u_min: float
    u_max: float
    in_bracket: bool | None
    passed: bool
    tolerance: float

    def to_dict(self):
        return dict(vars(self))


def verify_solution(u: ScalarField, cs: CoefficientSet, bracket: Bracket | None = None,
                    tol: float = 1e-8, bracket_tol: float = 1e-12) -> VerifyReport:
    _, r_inf, r_l2 = residual(u, cs)
    umin, umax = float(u.values.min()), float(u.values.max())
    in_bracket = None
    if bracket is not None:
        slack = bracket_tol * max(1.0, bracket.theta_high)
        in_bracket = bool(umin >= bracket.theta_low - slack and umax <= bracket.theta_high + slack)
    passed = r_inf < tol and umin > 0 and in_bracket is not False
    return VerifyReport(r_inf, r_l2, umin, umax, in_bracket, passed, tol)


# --- inner solve ------------------------------------------------------------

@dataclass
class InnerStats:
    method: str
    iterations: int = 0
    residual_inf: float = math.nan
    roundoff_limited: bool = False
    contraction_factor: float = 0.0
    contraction_bound: float = math.nan
    cg_iterations: int = 0


def inner_coercivity(cs: CoefficientSet, ctx: TruncationContext) -> float:
    """``essinf (h - csq + min slope of f2 on the bracket)``; the inner map needs it > 0."""
    return float(np.min(cs.q + ctx.f2_slope_floor))


def _inner_residual(u, g, q, ctx, grid):
    return -laplacian_array(grid, u) + q * u + ctx.f2(u) - g


def _roundoff_floor(u, g, q, ctx, grid):
    scale = (np.max(np.abs(laplacian_array(grid, u))) + np.max(np.abs(q * u))
             + np.max(np.abs(ctx.f2(u))) + np.max(np.abs(g)))
    return 256.0 * EPS * scale


def _contraction(g, u, cs, ctx, cfg, target):
    grid = cs.grid
    q = cs.q
    c = float(np.max(q)) + ctx.lipschitz + 1.0
    stats = InnerStats("contraction")
    stats.contraction_bound = (c - float(np.min(q))) / c
    prev_step = None
    for m in range(cfg.max_inner + 1):
        F = _inner_residual(u, g, q, ctx, grid)
        stats.residual_inf = float(np.max(np.abs(F)))
        stats.iterations = m
        if stats.residual_inf < target:
            return u, stats
        u_new = helmholtz_solve_array(grid, g - (q - c) * u - ctx.f2(u), c)
        step = float(np.sqrt(np.mean((u_new - u) ** 2)))
        if prev_step and prev_step > 1e3 * EPS * (1.0 + float(np.max(np.abs(u)))):
            stats.contraction_factor = max(stats.contraction_factor, step / prev_step)
        if step == 0.0:
            break
        prev_step = step
        u = u_new
    floor = _roundoff_floor(u, g, q, ctx, grid)
    if stats.residual_inf <= floor:
        stats.roundoff_limited = True
        return u, stats
    raise NonConvergenceError(
        f"contraction inner solve stopped at residual {stats.residual_inf:.3e} "
        f"(target {target:.3e}) after {stats.iterations} iterations")


def _linear_solve(w, rhs, grid, rtol, maxiter):
    """Solve ``(-Lap + w) s = rhs`` for a positive weight ``w``."""
    wbar = float(np.mean(w))
    if np.ptp(w) <= 1e-14 * abs(wbar):
        return helmholtz_solve_array(grid, rhs, wbar), 1
    shape = grid.shape
    n = grid.size

    def matvec(v):
        v = v.reshape(shape)
        return (-laplacian_array(grid, v) + w * v).ravel()

    def precond(v):
        return helmholtz_solve_array(grid, v.reshape(shape), wbar).ravel()

    count = [0]

    def callback(_):
        count[0] += 1

    A = LinearOperator((n, n), matvec=matvec, dtype=float)
    M = LinearOperator((n, n), matvec=precond, dtype=float)
    x, _ = cg(A, rhs.ravel(), rtol=rtol, atol=0.0, maxiter=maxiter, M=M, callback=callback)
    return x.reshape(shape), count[0]


def _newton(g, u, cs, ctx, cfg, target):
    grid = cs.grid
    q = cs.q
    stats = InnerStats("newton")
    F = _inner_residual(u, g, q, ctx, grid)
    fnorm2 = float(np.sqrt(np.mean(F * F)))
    for m in range(cfg.max_inner + 1):
        stats.iterations = m
        stats.residual_inf = float(np.max(np.abs(F)))
        if stats.residual_inf < target:
            return u, stats
        w = q + ctx.f2_prime(u)
        forcing = min(1e-2, max(1e-13, 0.1 * target / stats.residual_inf))
        s, its = _linear_solve(w, -F, grid, forcing, 200)
        stats.cg_iterations += its
        alpha = 1.0
        while True:
            trial = u + alpha * s
            F_trial = _inner_residual(trial, g, q, ctx, grid)
            n_trial = float(np.sqrt(np.mean(F_trial * F_trial)))
            if n_trial <= (1.0 - 1e-4 * alpha) * fnorm2:
                break
            alpha *= 0.5
            if alpha < 1e-10:
                floor = _roundoff_floor(u, g, q, ctx, grid)
                if stats.residual_inf <= floor:
                    stats.roundoff_limited = True
                    return u, stats
                raise NonConvergenceError(
                    f"Newton line search failed at residual {stats.residual_inf:.3e} "
                    f"(target {target:.3e})")
        u, F, fnorm2 = trial, F_trial, n_trial
    raise NonConvergenceError(
        f"Newton inner solve did not reach {target:.3e} in {cfg.max_inner} iterations")


def _inner_solve_array(g, cs, ctx, cfg, u0=None):
    if inner_coercivity(cs, ctx) <= 0:
        raise PreconditionError(
            "inner problem is not coercive: essinf(h - csq + f2 slope) <= 0")
    u = np.full(cs.grid.shape, ctx.bracket.theta_low) if u0 is None else np.array(u0, float)
    target = cfg.tol_inner * (1.0 + float(np.max(np.abs(g))))
    if cfg.inner_method == "newton":
        return _newton(g, u, cs, ctx, cfg, target)
    return _contraction(g, u, cs, ctx, cfg, target)


def inner_solve(g: ScalarField, cs: CoefficientSet, ctx: TruncationContext,
                cfg: SolverConfig | None = None, u0: ScalarField | None = None) -> ScalarField:
    """Realise ``(A + F2)^{-1} g``."""
    cfg = cfg or SolverConfig()
    u, _ = _inner_solve_array(g.values, cs, ctx, cfg, None if u0 is None else u0.values)
    return ScalarField(g.grid, u)


# --- outer iteration --------------------------------------------------------

@dataclass
class TraceRow:
    iter: int
    delta_inf: float
    res_inf: float
    res_l2: float
    u_min: float
    u_max: float


TRACE_COLUMNS = ("iter", "delta_inf", "res_inf", "res_l2", "u_min", "u_max")


@dataclass
class SolveReport:
    u: ScalarField
    outer_iters: int
    trace: list
    converged: bool
    monotone: bool
    bracket_ok: bool
    bracket: Bracket
    residual_inf: float
    residual_l2: float
    truncation_gap: float = math.nan
    min_increment: float = math.nan
    inner: dict = field(default_factory=dict)
    kappa: float = math.nan

    def to_dict(self):
        d = {k: v for k, v in vars(self).items() if k not in ("u", "trace", "bracket")}
        d["bracket"] = self.bracket.to_dict()
        d["trace"] = [vars(r) for r in self.trace]
        d["u_min"] = float(self.u.values.min())
        d["u_max"] = float(self.u.values.max())
        return d


def outer_solve(cs: CoefficientSet, ctx: TruncationContext | None = None,
                cfg: SolverConfig | None = None) -> SolveReport:
    """Monotone fixed-point iteration from the constant subsolution."""
    cfg = cfg or SolverConfig()
    report = check_assumptions(cs)
    if not report.all_pass:
        raise PreconditionError(f"assumptions fail: {report.failures()}")
    if ctx is None:
        ctx = TruncationContext(compute_bracket(cs, report), cs)
    grid = cs.grid
    br = ctx.bracket
    slack = 1e-12 * max(1.0, br.theta_high)
    u = np.full(grid.shape, br.theta_low)
    trace = []
    monotone = bracket_ok = True
    converged = False
    min_inc = math.inf
    inner = {"method": cfg.inner_method, "max_iterations": 0, "cg_iterations": 0,
             "roundoff_limited": 0, "contraction_factor": 0.0, "contraction_bound": math.nan}
    r_inf = r_l2 = math.nan
    k = 0
    for k in range(1, cfg.max_outer + 1):
        u_new, st = _inner_solve_array(ctx.f1(u), cs, ctx, cfg, u0=u)
        inner["max_iterations"] = max(inner["max_iterations"], st.iterations)
        inner["cg_iterations"] += st.cg_iterations
        inner["roundoff_limited"] += int(st.roundoff_limited)
        inner["contraction_factor"] = max(inner["contraction_factor"], st.contraction_factor)
        inner["contraction_bound"] = st.contraction_bound
        inc = u_new - u
        delta = float(np.max(np.abs(inc)))
        min_inc = min(min_inc, float(inc.min()))
        if inc.min() < -cfg.monotonicity_tolerance:
            monotone = False
        if u_new.min() < br.theta_low - slack or u_new.max() > br.theta_high + slack:
            if bracket_ok:
                log.warning("iterate %d leaves the bracket [%g, %g]", k, br.theta_low,
                            br.theta_high)
            bracket_ok = False
        u = u_new
        try:
            r = residual_array(u, cs)
            r_inf = float(np.max(np.abs(r)))
            r_l2 = math.sqrt(float(np.mean(r * r)) * grid.volume)
        except DomainError:
            r_inf = r_l2 = math.nan
        trace.append(TraceRow(k, delta, r_inf, r_l2, float(u.min()), float(u.max())))
        log.debug("outer %d: delta=%.3e res=%.3e", k, delta, r_inf)
        if delta < cfg.tol_outer and r_inf < cfg.tol_residual:
            converged = bracket_ok
            break
        if delta == 0.0:
            break

    field_u = ScalarField(grid, u)
    truncated = -laplacian_array(grid, u) + cs.q * u + ctx.f2(u) - ctx.f1(u)
    gap = float(np.max(np.abs(truncated - residual_array(u, cs)))) if u.min() > 0 else math.nan
    return SolveReport(field_u, k, trace, converged, monotone, bracket_ok, br, r_inf, r_l2,
                       truncation_gap=gap, min_increment=min_inc, inner=inner,
                       kappa=report.kappa)


def write_trace_csv(path, trace):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in trace:
            writer.writerow([row.iter] + [repr(float(getattr(row, c))) for c in TRACE_COLUMNS[1:]])
    return path
