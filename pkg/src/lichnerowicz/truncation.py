"""Truncated nonlinearities f1, f2 and their Nemytskii (pointwise) operators.

With B = B+ - B-, the right side splits into the nondecreasing parts

    f1(xi) = |D|^2 xi^(2*2^*+1) + 2<C,D> xi^(2^*+1) + B- xi^(2^*-1)
    f2(xi) = B+ xi^(2^*-1) - A xi^-(2^*+1)

each frozen at theta_low below the bracket and at theta_high above it.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .analysis import Bracket
from .coefficients import CoefficientSet
from .errors import DomainError
from .grid import ScalarField
from ._util import power, twostar


def _clamp(xi, bracket):
    return np.clip(xi, bracket.theta_low, bracket.theta_high)


def f1_eval(dsq, cd, b_minus, xi, bracket: Bracket, N):
    p = twostar(N)
    x = _clamp(xi, bracket)
    return dsq * power(x, 2 * p + 1) + 2.0 * cd * power(x, p + 1) + b_minus * power(x, p - 1)


def f2_eval(b_plus, a, xi, bracket: Bracket, N):
    p = twostar(N)
    x = _clamp(xi, bracket)
    return b_plus * power(x, p - 1) - a * power(x, -(p + 1))


def f2_slope(b_plus, a, xi, bracket: Bracket, N):
    """d f2/d xi evaluated at the clamped point (the inner Newton Jacobian weight)."""
    p = twostar(N)
    x = _clamp(xi, bracket)
    return (p - 1) * b_plus * power(x, p - 2) + (p + 1) * a * power(x, -(p + 2))


@dataclass(frozen=True, eq=False)
class TruncationContext:
    bracket: Bracket
    cs: CoefficientSet

    def __post_init__(self):
        if not 0 < self.bracket.theta_low < self.bracket.theta_high:
            raise DomainError("bracket must satisfy 0 < theta_low < theta_high")

    @cached_property
    def b_plus(self):
        return np.maximum(self.cs.b.values, 0.0)

    @cached_property
    def b_minus(self):
        return -np.minimum(self.cs.b.values, 0.0)

    @cached_property
    def lipschitz(self):
        """Sup over the grid of the f2 slope bound on the bracket."""
        p = self.cs.twostar
        lo, hi = self.bracket.theta_low, self.bracket.theta_high
        return float(np.max((p - 1) * self.b_plus * hi ** (p - 2)
                            + (p + 1) * self.cs.a.values * lo ** (-(p + 2))))

    @cached_property
    def f2_slope_floor(self):
        """Pointwise lower bound of the f2 slope on the bracket (array)."""
        p = self.cs.twostar
        lo, hi = self.bracket.theta_low, self.bracket.theta_high
        return (p - 1) * self.b_plus * lo ** (p - 2) + (p + 1) * self.cs.a.values * hi ** (-(p + 2))

    def f1(self, u: np.ndarray) -> np.ndarray:
        cs = self.cs
        return f1_eval(cs.dsq.values, cs.cd.values, self.b_minus, u, self.bracket, cs.N)

    def f2(self, u: np.ndarray) -> np.ndarray:
        return f2_eval(self.b_plus, self.cs.a.values, u, self.bracket, self.cs.N)

    def f2_prime(self, u: np.ndarray) -> np.ndarray:
        return f2_slope(self.b_plus, self.cs.a.values, u, self.bracket, self.cs.N)


def nemytskii_apply(u: ScalarField, which: str, ctx: TruncationContext) -> ScalarField:
    """Pointwise composition ``p -> f_which(p, u(p))``."""
    if which == "f1":
        return ScalarField(u.grid, ctx.f1(u.values))
    if which == "f2":
        return ScalarField(u.grid, ctx.f2(u.values))
    raise ValueError(f"which must be 'f1' or 'f2', got {which!r}")
