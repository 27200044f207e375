"""Assumption checks (A1)-(A4), the scalar function r(t) and constant sub/supersolutions."""
from dataclasses import dataclass, field
import math

import numpy as np

from .coefficients import CoefficientSet, validate_coefficients
from .errors import (DomainError, InternalInconsistencyError, NoSupersolutionError,
                     PreconditionError)
from .grid import lambda1 as grid_lambda1
from ._util import power, twostar

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
S_LIMIT = 50.0  # |log t| cap for bracketing searches


@dataclass(frozen=True)
class RParams:
    """Grid norms entering r(t): ``C_inf``, ``D_inf``, ``essinf B``, ``A_inf`` and N."""

    C_inf: float
    D_inf: float
    B_min: float
    A_inf: float
    N: int

    @classmethod
    def from_coefficients(cls, cs: CoefficientSet):
        return cls(float(np.sqrt(np.max(cs.csq.values))), float(np.sqrt(np.max(cs.dsq.values))),
                   float(np.min(cs.b.values)), float(np.max(cs.a.values)), cs.N)

    def __call__(self, t):
        p = twostar(self.N)
        with np.errstate(over="ignore"):
            return ((self.C_inf + self.D_inf * power(t, p)) ** 2
                    - self.B_min * power(t, p - 2) + self.A_inf * power(t, -(p + 2)))


def r_of_t(t, cs):
    """Evaluate r(t) for a :class:`CoefficientSet` (or precomputed :class:`RParams`)."""
    if np.any(np.asarray(t) <= 0):
        raise DomainError(f"r(t) needs t > 0, got {t}")
    params = cs if isinstance(cs, RParams) else RParams.from_coefficients(cs)
    return params(t)


@dataclass
class MinimizeResult:
    t_star: float | None
    r_star: float
    attained: bool
    unbounded_below: bool = False
    bracket: tuple = ()
    evaluations: int = 0


def golden_section(f, lo, hi, xtol, max_iter=500):
    """Minimise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x), evaluations)``."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    evals = 2
    while hi - lo > xtol and evals < max_iter:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
        evals += 1
    return (x1, f1, evals) if f1 <= f2 else (x2, f2, evals)


def _bracket_by_doubling(g, s0=0.0, step=0.5):
    """Find ``lo < mid < hi`` with ``g(mid) <= g(lo), g(hi)`` by doubling steps in s."""
    g0 = g(s0)
    gp, gm = g(s0 + step), g(s0 - step)
    if gp >= g0 and gm >= g0:
        return s0 - step, s0 + step, 3
    direction = 1.0 if gp < gm else -1.0
    prev, cur, gcur = s0, s0 + direction * step, min(gp, gm)
    evals = 3
    while abs(cur) < S_LIMIT:
        step *= 2.0
        nxt = max(-S_LIMIT, min(S_LIMIT, cur + direction * step))
        gn = g(nxt)
        evals += 1
        if gn >= gcur:
            return min(prev, nxt), max(prev, nxt), evals
        prev, cur, gcur = cur, nxt, gn
    return None, cur, evals


def minimize_r(cs, tol=1e-12) -> MinimizeResult:
    """Global minimum of r over t > 0 via golden section on ``s = log t``.

    r is unimodal in t: after multiplying r' by ``t^(p+3)`` and dividing by
    ``t^(2p)`` the remaining expression is strictly increasing.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    P = cs if isinstance(cs, RParams) else RParams.from_coefficients(cs)
    p = twostar(P.N)
    if P.D_inf == 0.0:
        if P.B_min > 0.0:
            return MinimizeResult(None, -math.inf, False, unbounded_below=True)
        if P.B_min == 0.0 or P.A_inf == 0.0:
            # r decreases to C_inf^2 (B_min = 0) or increases from C_inf^2 (A_inf = 0)
            return MinimizeResult(None, P.C_inf ** 2, False)
        # r = C^2 + |B| t^(p-2) + A t^-(p+2): closed-form critical point
        t = (P.A_inf * (p + 2) / (-P.B_min * (p - 2))) ** (1.0 / (2 * p))
        return MinimizeResult(t, float(P(t)), True, evaluations=1)

    def g(s):
        return float(P(math.exp(s)))

    lo, hi, evals = _bracket_by_doubling(g)
    if lo is None:
        # monotone on the whole search range: infimum approached at the boundary
        return MinimizeResult(None, g(hi), False, evaluations=evals)
    xtol = max(1e-3 * math.sqrt(tol), 1e-11) * (1.0 + abs(lo) + abs(hi))
    s, val, n = golden_section(g, lo, hi, xtol)
    return MinimizeResult(math.exp(s), val, True, bracket=(math.exp(lo), math.exp(hi)),
                          evaluations=evals + n)


def scan_r(cs, s_min=-10.0, s_max=10.0, points=1_000_000):
    """Brute-force oracle: minimum of r on a log-spaced grid of ``points`` values."""
    P = cs if isinstance(cs, RParams) else RParams.from_coefficients(cs)
    t = np.exp(np.linspace(s_min, s_max, points))
    vals = P(t)
    i = int(np.argmin(vals))
    return float(t[i]), float(vals[i])


@dataclass
class AssumptionReport:
    a1: bool
    a2: bool
    a3: bool
    a4: bool
    margins: dict
    lambda1: float
    kappa: float
    rmin: float
    rargmin: float | None
    h_minus_csq_positive: bool
    validation: dict = field(default_factory=dict)

    @property
    def all_pass(self):
        return self.a1 and self.a2 and self.a3 and self.a4

    def failures(self):
        return [name for name in ("a1", "a2", "a3", "a4") if not getattr(self, name)]

    def to_dict(self):
        d = dict(vars(self))
        d["all_pass"] = self.all_pass
        d["note"] = "essinf/esssup are discrete (grid min/max)"
        return d


def check_assumptions(cs: CoefficientSet, grid=None) -> AssumptionReport:
    grid = grid or cs.grid
    val = validate_coefficients(cs)
    conds = val.conditions
    a1 = conds["A1_bounded"].passed
    a2 = conds["A2_essinf_A_positive"].passed and conds["A2_CD_nonnegative"].passed
    lam = grid_lambda1(grid)
    q_min = float(np.min(cs.q))
    a3 = q_min > -lam
    mr = minimize_r(cs)
    h_min = float(np.min(cs.h.values))
    a4 = h_min > mr.r_star
    margins = {
        "A2_essinf_A": conds["A2_essinf_A_positive"].margin,
        "A2_min_CD": conds["A2_CD_nonnegative"].margin,
        "A3": q_min + lam,
        "A4": h_min - mr.r_star,
        "essinf_h_minus_csq": q_min,
        "essinf_h": h_min,
    }
    return AssumptionReport(
        a1=a1, a2=a2, a3=a3, a4=a4, margins=margins, lambda1=lam,
        kappa=min(1.0, q_min), rmin=mr.r_star, rargmin=mr.t_star,
        h_minus_csq_positive=q_min > 0, validation=val.to_dict())


@dataclass
class Bracket:
    theta_low: float
    theta_high: float
    delta0: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return dict(vars(self))


def subsolution_psi(cs):
    p = cs.twostar
    a_min = float(np.min(cs.a.values))
    b_sup = float(np.max(np.abs(cs.b.values)))
    const = float(np.max(np.abs(cs.h.values))) - float(np.min(cs.csq.values))

    def psi(theta):
        return a_min * theta ** (-(p + 2)) - b_sup * theta ** (p - 2) - const

    return psi


def subsolution_threshold(cs, rtol=1e-12):
    """delta0: root of the strictly decreasing psi (inf if psi stays positive)."""
    if float(np.min(cs.a.values)) <= 0.0:
        raise DomainError("delta0 needs essinf A > 0")
    psi = subsolution_psi(cs)
    lo, hi = 1.0, 1.0
    while psi(lo) <= 0.0:
        lo *= 0.5
    while psi(hi) > 0.0:
        hi *= 2.0
        if hi > 1e60:
            return math.inf
    while hi - lo > rtol * hi:
        mid = math.sqrt(lo * hi) if hi / lo > 4.0 else 0.5 * (lo + hi)
        if psi(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def nonlinearity_over_u(cs, c):
    """Right side of the equation divided by u, at the constant ``u = c`` (array)."""
    p = cs.twostar
    return (cs.dsq.values * power(c, 2 * p) + 2.0 * cs.cd.values * power(c, p)
            - cs.b.values * power(c, p - 2) + cs.a.values * power(c, -(p + 2)))


def subsolution_margin(cs, c):
    """Pointwise ``RHS(c)/c - (h - csq)``; a constant c is a subsolution iff this is >= 0."""
    return nonlinearity_over_u(cs, c) - cs.q


def supersolution_margin(cs, c):
    """Pointwise ``(h - csq) - RHS(c)/c``; a constant c is a supersolution iff this is >= 0."""
    return cs.q - nonlinearity_over_u(cs, c)


def _supersolution_level(cs, report, mr):
    h_min = float(np.min(cs.h.values))
    if mr.attained and mr.r_star < h_min:
        return mr.t_star, None
    P = RParams.from_coefficients(cs)
    K = 1.0
    while K <= 64.0:
        t = np.exp(np.linspace(-K, K, int(128 * K) + 1))
        hits = np.nonzero(P(t) < h_min)[0]
        if hits.size:
            return float(t[hits[0]]), K
        K *= 2.0
    raise NoSupersolutionError("no t with r(t) < essinf h found on the log grid")


def compute_bracket(cs: CoefficientSet, report: AssumptionReport | None = None) -> Bracket:
    """Constant subsolution theta_low and supersolution theta_high with delta0."""
    report = report or check_assumptions(cs)
    if not (report.a1 and report.a2 and report.a3):
        raise PreconditionError(f"assumptions fail: {report.failures()}")
    if not report.a4:
        raise NoSupersolutionError(
            f"(A4) fails: essinf h = {report.margins['essinf_h']:.6g} "
            f"<= min r = {report.rmin:.6g}")
    mr = minimize_r(cs)
    theta_high, grid_K = _supersolution_level(cs, report, mr)
    delta0 = subsolution_threshold(cs)
    theta_low = 0.5 * min(delta0, theta_high)

    sub = subsolution_margin(cs, theta_low)
    sup = supersolution_margin(cs, theta_high)
    scale_sub = 1e-12 * (1.0 + np.abs(nonlinearity_over_u(cs, theta_low)) + np.abs(cs.q))
    scale_sup = 1e-12 * (1.0 + np.abs(nonlinearity_over_u(cs, theta_high)) + np.abs(cs.q))
    if np.any(sub < -scale_sub):
        raise InternalInconsistencyError(
            f"theta_low={theta_low:.6g} fails the pointwise subsolution check "
            f"(min margin {sub.min():.3e})")
    if np.any(sup < -scale_sup):
        raise InternalInconsistencyError(
            f"theta_high={theta_high:.6g} fails the pointwise supersolution check "
            f"(min margin {sup.min():.3e})")
    details = {
        "r_theta_high": float(r_of_t(theta_high, cs)),
        "essinf_h": float(np.min(cs.h.values)),
        "theta_high_is_minimizer": grid_K is None,
        "log_grid_half_width": grid_K,
        "min_subsolution_margin": float(sub.min()),
        "min_supersolution_margin": float(sup.min()),
    }
    return Bracket(theta_low, theta_high, delta0, details)
