"""Grid certificates that the equation has no positive C^2 solution.

At the minimum point of a positive solution the equation forces

    h - |C|^2 >= f(z) = d z^N - b z + a z^(1-N),   z = u^(2^*-2),

with a = A, b = B, d = |D|^2 sampled there.  ``f`` is strictly convex with a
unique minimiser, so ``h - |C|^2 < min f`` at every grid point rules out
solutions (the oracle).  The closed-form conditions NE0..NE5 are global
sufficient conditions for the same conclusion.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .coefficients import CoefficientSet
from .errors import DomainError

BISECTION_STEPS = 120


def f_value(z, a, b, d, N):
    return d * z ** N - b * z + a * z ** (1 - N)


def _derf(z, a, b, d, N):
    return N * d * z ** (2 * N - 1) - b * z ** N - (N - 1) * a


@dataclass
class PointwiseOracleResult:
    z_bar: np.ndarray | float
    f_min: np.ndarray | float
    margin: np.ndarray | float
    derf_residual: float
    formula_gap: float


def pointwise_min_f(a, b, d, N, h_minus_c=None) -> PointwiseOracleResult:
    """Minimiser and minimum of ``f(z) = d z^N - b z + a z^(1-N)`` (vectorised).

    The root of ``N d z^(2N-1) - b z^N - (N-1) a`` is bracketed analytically,
    bisected in ``log z`` and polished by Newton.
    """
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0 and np.ndim(d) == 0
    a, b, d = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, d)))
    N = int(N)
    if N < 3:
        raise DomainError(f"N must be >= 3, got {N}")
    if np.any(d <= 0):
        raise DomainError("pointwise minimum needs |D|^2 > 0")
    if np.any(a <= 0):
        raise DomainError("pointwise minimum needs A > 0")

    k = N - 1.0
    lo_pos = (k * a / (N * d)) ** (1.0 / (2 * N - 1))
    with np.errstate(divide="ignore", over="ignore"):
        lo_neg = np.minimum((k * a / (2 * N * d)) ** (1.0 / (2 * N - 1)),
                            (k * a / (2 * np.abs(b))) ** (1.0 / N))
    lo = np.where(b >= 0, lo_pos, lo_neg)
    hi = np.maximum((2 * np.maximum(b, 0.0) / (N * d)) ** (1.0 / (N - 1)),
                    (2 * k * a / (N * d)) ** (1.0 / (2 * N - 1)))
    lo, hi = np.log(lo), np.log(hi)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        neg = _derf(np.exp(mid), a, b, d, N) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
        if np.all(hi - lo < 1e-15):
            break
    z = np.exp(0.5 * (lo + hi))
    zlo, zhi = np.exp(lo), np.exp(hi)
    for _ in range(3):
        g = _derf(z, a, b, d, N)
        dg = N * (2 * N - 1) * d * z ** (2 * N - 2) - N * b * z ** (N - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dg > 0, g / dg, 0.0)
        z = np.clip(z - step, zlo, zhi)

    fmin = f_value(z, a, b, d, N)
    scale_derf = N * d * z ** (2 * N - 1) + np.abs(b) * z ** N + k * a
    derf_res = float(np.max(np.abs(_derf(z, a, b, d, N)) / scale_derf))
    via_formula = ((2 * N - 1) * a - k * b * z ** N) / (N * z ** (N - 1))
    scale_f = d * z ** N + np.abs(b) * z + a * z ** (1 - N)
    gap = float(np.max(np.abs(via_formula - fmin) / scale_f))
    margin = np.full(fmin.shape, np.nan) if h_minus_c is None else fmin - np.asarray(h_minus_c)
    if scalar:
        return PointwiseOracleResult(float(z), float(fmin), float(margin), derf_res, gap)
    return PointwiseOracleResult(z, fmin, margin, derf_res, gap)


def ne1_lower_bound(a, b, d, N):
    """The closed-form bound behind condition NE1.

    Exact at b = 0.  For b < 0 it can exceed ``min f`` (e.g. a = 0.5, b = -1,
    d = 1, N = 3 gives 2.1237 against 2.0573), so an NE1 verdict is only
    trusted when the pointwise oracle agrees; see ``consistency``.
    """
    e = 2.0 * N - 1.0
    num = (e * N ** (1 / e) * a ** ((2 * N - 2) / e) * d ** (1 / e)
           - (N - 1.0) ** (2 * N / e) * b)
    return d ** ((N - 2) / e) * num / (N ** ((N + 1) / e) * (N - 1.0) ** ((N - 1) / e)
                                       * a ** ((N - 2) / e))


@dataclass
class OracleCheck:
    certified: bool
    worst_margin: float
    worst_point: tuple
    derf_residual: float
    formula_gap: float

    def to_dict(self):
        return dict(vars(self))


def oracle_check(cs: CoefficientSet) -> OracleCheck:
    """Certify nonexistence iff ``min f(p) > h(p) - |C(p)|^2`` at every grid point."""
    if np.any(cs.dsq.values <= 0):
        raise DomainError("oracle needs |D|^2 > 0 at every grid point")
    res = pointwise_min_f(cs.a.values, cs.b.values, cs.dsq.values, cs.N, h_minus_c=cs.q)
    i = np.unravel_index(int(np.argmin(res.margin)), res.margin.shape)
    worst = float(res.margin[i])
    return OracleCheck(worst > 0.0, worst, tuple(int(v) for v in i), res.derf_residual,
                       res.formula_gap)


@dataclass
class ConditionOutcome:
    applicable: bool
    satisfied: bool
    lhs: float
    rhs: float
    strict: bool
    worst_point: tuple | None = None

    def to_dict(self):
        return dict(vars(self))


@dataclass
class NonexistenceReport:
    standing_hypotheses: bool
    oracle_certified: bool | None
    oracle_margin: float | None
    oracle_worst_point: tuple | None
    conditions: dict
    consistency: bool
    note: str = "grid certificate: sampled values stand in for continuous extrema"
    details: dict = field(default_factory=dict)

    @property
    def any_satisfied(self):
        return any(c.satisfied for c in self.conditions.values())

    def to_dict(self):
        d = {k: v for k, v in vars(self).items() if k != "conditions"}
        d["conditions"] = {k: c.to_dict() for k, c in self.conditions.items()}
        d["any_satisfied"] = self.any_satisfied
        return d


def ne_thresholds(N):
    """Right-hand constants of NE1..NE5 (NE0 compares against 0)."""
    e = 2.0 * N - 1.0
    young = (2 * N - 1.0) / (2 * (N - 1.0) ** ((N - 1) / e) * N ** (N / e))
    return {
        "NE1": 1.0 / (N ** ((N + 1) / e) * (N - 1.0) ** ((N - 1) / e)),
        "NE2": -((N + 1.0) ** ((N + 1) / e) * (N - 2.0) ** ((N - 2) / e)) / (4 * e),
        "NE3": -(N - 1.0) / N ** (N / (N - 1.0)),
        "NE4": young,
        "NE5": young,
    }


def _outcome(pre, ratio, mask, rhs, strict):
    """Evaluate ``max_{mask} ratio (<|<=) rhs`` provided the precondition holds."""
    if mask is None:
        mask = np.ones(ratio.shape, dtype=bool)
    if mask.any():
        masked = np.where(mask, ratio, -np.inf)
        i = np.unravel_index(int(np.argmax(masked)), masked.shape)
        lhs = float(masked[i])
        where = tuple(int(v) for v in i)
    else:
        lhs, where = -math.inf, None
    holds = lhs < rhs if strict else lhs <= rhs
    return ConditionOutcome(bool(pre), bool(pre and holds), lhs, float(rhs), strict, where)


def _inapplicable(N):
    out = {"NE0": ConditionOutcome(False, False, math.nan, 0.0, False)}
    for name, rhs in ne_thresholds(N).items():
        out[name] = ConditionOutcome(False, False, math.nan, rhs, name in ("NE1", "NE2"))
    return out


def ne_conditions(cs: CoefficientSet) -> NonexistenceReport:
    """Evaluate NE0..NE5 and the pointwise oracle on the grid samples."""
    N = cs.N
    a, b, d, cd = cs.a.values, cs.b.values, cs.dsq.values, cs.cd.values
    hc = cs.q
    standing = bool(np.all(a > 0) and np.all(cd >= 0) and np.all(d > 0))
    if not standing:
        return NonexistenceReport(False, None, None, None, _inapplicable(N), True)

    e = 2.0 * N - 1.0
    th = ne_thresholds(N)
    nonzero_b = np.abs(b) > 1e-14 * (1.0 + float(np.max(np.abs(b))))
    conds = {}
    conds["NE0"] = _outcome(np.all(hc <= 0), b, None, 0.0, strict=False)

    x1 = (e * N ** (1 / e) * a ** ((2 * N - 2) / e) * d ** (1 / e)
          - (N - 1.0) ** (2 * N / e) * b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio1 = hc * a ** ((N - 2) / e) / (d ** ((N - 2) / e) * x1)
    conds["NE1"] = _outcome(np.all(b <= 0), ratio1, None, th["NE1"], strict=True)

    with np.errstate(divide="ignore", invalid="ignore"):  # b = 0 entries are masked out
        ratio2 = hc * d ** ((N + 1) / e) * a ** ((N - 2) / e) / b ** 2
        ratio3 = hc * d ** (1.0 / (N - 1)) / np.abs(b) ** (N / (N - 1.0))
    conds["NE2"] = _outcome(np.all(hc < 0), ratio2, nonzero_b, th["NE2"], strict=True)
    conds["NE3"] = _outcome(np.all(hc < 0), ratio3, nonzero_b, th["NE3"], strict=False)

    y4 = d ** (2 * N / e) * a ** ((2 * N - 2) / e) - b ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio4 = hc * d ** ((N + 1) / e) * a ** ((N - 2) / e) / y4
    conds["NE4"] = _outcome(np.all(y4 > 0), ratio4, None, th["NE4"], strict=False)

    with np.errstate(divide="ignore", invalid="ignore"):
        y5 = (d ** ((N - 1) / e + 1.0 / (N - 1)) * a ** (N / e)
              - np.maximum(b, 0.0) ** (N / (N - 1.0)))
        ratio5 = hc * d ** (1.0 / (N - 1)) / y5
    conds["NE5"] = _outcome(np.all(b > 0) and np.all(y5 > 0), ratio5, None, th["NE5"],
                            strict=False)

    oc = oracle_check(cs)
    consistency = all(oc.certified for c in conds.values() if c.satisfied)
    return NonexistenceReport(True, oc.certified, oc.worst_margin, oc.worst_point, conds,
                              consistency,
                              details={"derf_residual": oc.derf_residual,
                                       "formula_gap": oc.formula_gap})
