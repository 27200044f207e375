"""Coefficient fields of the Lichnerowicz equation

    -Lap u + (h - |C|^2) u = |D|^2 u^(2*2^*+1) + 2<C,D> u^(2^*+1) - B u^(2^*-1) + A u^-(2^*+1)

either supplied directly, assembled from conformal data (tau, pi, nu, W,
sigma, R) or manufactured so that a prescribed positive field solves it.
"""
from dataclasses import dataclass, field
import math
from pathlib import Path

import numpy as np

from . import fieldio
from .errors import ConfigurationError, DomainError, SingularDataError
from .grid import (Grid, ScalarField, SymTensorField, VectorField, gradient_arrays,
                   laplacian_array, partial, sym_index_pairs)
from ._util import power, twostar

COEFFICIENT_NAMES = ("a", "b", "csq", "dsq", "cd", "h")


def kappa_N(N):
    """The conformal constant (N-2)/(4(N-1))."""
    return (N - 2.0) / (4.0 * (N - 1.0))


def _as_field(grid, value, name):
    if isinstance(value, ScalarField):
        if value.grid != grid:
            raise ConfigurationError(f"coefficient {name!r} lives on a different grid")
        return value
    return ScalarField(grid, np.broadcast_to(np.asarray(value, dtype=float), grid.shape))


def _check_N(N):
    if int(N) != N or N < 3:
        raise DomainError(f"exponent dimension N must be an integer >= 3, got {N}")
    return int(N)


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """A=a, B=b, |C|^2=csq, |D|^2=dsq, <C,D>=cd and h on one grid."""

    N: int
    a: ScalarField
    b: ScalarField
    csq: ScalarField
    dsq: ScalarField
    cd: ScalarField
    h: ScalarField
    tags: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "N", _check_N(self.N))
        grid = self.a.grid
        for name in COEFFICIENT_NAMES:
            object.__setattr__(self, name, _as_field(grid, getattr(self, name), name))
        object.__setattr__(self, "tags", tuple(self.tags))

    @classmethod
    def from_values(cls, grid, N, a, b, csq, dsq, cd, h, tags=()):
        """Build from scalars, arrays or fields (broadcast to ``grid``)."""
        vals = dict(a=a, b=b, csq=csq, dsq=dsq, cd=cd, h=h)
        return cls(N, **{k: _as_field(grid, v, k) for k, v in vals.items()}, tags=tags)

    @property
    def grid(self) -> Grid:
        return self.a.grid

    @property
    def twostar(self):
        return twostar(self.N)

    @property
    def kappaN(self):
        return kappa_N(self.N)

    @property
    def q(self) -> np.ndarray:
        """``h - |C|^2`` as a raw array."""
        return self.h.values - self.csq.values

    def replace(self, **changes):
        vals = {k: getattr(self, k) for k in ("N",) + COEFFICIENT_NAMES + ("tags", "diagnostics")}
        vals.update(changes)
        return CoefficientSet(**vals)


@dataclass(frozen=True, eq=False)
class GeometricData:
    """Conformal data with constant potential ``V = nu``."""

    tau: ScalarField
    pi: ScalarField
    nu: float
    W: VectorField
    sigma: SymTensorField
    R: ScalarField | None = None

    @property
    def grid(self):
        return self.tau.grid

    @property
    def non_geometric_h(self):
        return self.R is not None and bool(np.any(self.R.values != 0.0))


@dataclass
class ConditionResult:
    passed: bool
    margin: float
    offending: list
    count: int = 0


@dataclass
class ValidationReport:
    conditions: dict

    @property
    def ok(self):
        return all(c.passed for c in self.conditions.values())

    def to_dict(self):
        return {name: vars(c) for name, c in self.conditions.items()}


def conformal_killing(W: VectorField) -> SymTensorField:
    """Flat conformal Killing operator ``d_i W_j + d_j W_i - (2/d) delta_ij div W``."""
    grid = W.grid
    d = grid.d
    grads = [gradient_arrays(grid, c.values) for c in W.components]  # grads[j][i] = d_i W_j
    div = sum(grads[i][i] for i in range(d))
    comps = {}
    for i, j in sym_index_pairs(d):
        v = grads[j][i] + grads[i][j]
        if i == j:
            v = v - (2.0 / d) * div
        comps[(i, j)] = v
    return SymTensorField(grid, comps)


def tensor_divergence(t: SymTensorField) -> VectorField:
    """``(div t)_i = sum_j d_j t_ij``."""
    grid = t.grid
    comps = []
    for i in range(grid.d):
        comps.append(sum(partial(t[i, j], j).values for j in range(grid.d)))
    return VectorField(grid, tuple(comps))


def assemble_geometric(gd: GeometricData, N=None, trace_tol=1e-10) -> CoefficientSet:
    """Coefficients from conformal data on a flat torus (grid dimension must equal N)."""
    grid = gd.grid
    N = _check_N(grid.d if N is None else N)
    if grid.d != N:
        raise ConfigurationError(
            f"geometric assembly needs grid dimension d == N, got d={grid.d}, N={N}")
    pi = gd.pi.values
    if np.any(pi == 0.0):
        bad = [tuple(int(i) for i in ix) for ix in np.argwhere(pi == 0.0)[:10]]
        raise SingularDataError(f"pi vanishes at grid indices {bad}")
    tr = np.max(np.abs(gd.sigma.trace().values))
    scale = 1.0 + max(np.max(np.abs(c.values)) for c in gd.sigma.components.values())
    if tr > trace_tol * scale:
        raise DomainError(f"sigma is not trace-free: max |tr sigma| = {tr:.3e}")

    k = kappa_N(N)
    DW = conformal_killing(gd.W)
    A = k * ((gd.sigma + DW).frobenius_sq().values + pi ** 2)
    B = k * ((N - 1.0) / N * gd.tau.values ** 2 - 4.0 * gd.nu)
    divDW = tensor_divergence(DW)
    C = [-math.sqrt(k) * c.values / pi for c in divDW.components]
    grad_tau = gradient_arrays(grid, gd.tau.values)
    D = [math.sqrt(k) * (N - 1.0) / N * g / pi for g in grad_tau]
    R = np.zeros(grid.shape) if gd.R is None else gd.R.values
    csq = sum(c * c for c in C)
    dsq = sum(v * v for v in D)
    cd = sum(c * v for c, v in zip(C, D))

    tags = ["geometric"]
    if gd.non_geometric_h:
        tags.append("non-geometric h")
    sigma_div = tensor_divergence(gd.sigma)
    diagnostics = {
        "sigma_trace_max": float(tr),
        "sigma_divergence_max": float(np.max(np.sqrt(sigma_div.norm_sq().values))),
        "nu": float(gd.nu),
    }
    return CoefficientSet(N, ScalarField(grid, A), ScalarField(grid, B), ScalarField(grid, csq),
                          ScalarField(grid, dsq), ScalarField(grid, cd), ScalarField(grid, k * R),
                          tags=tuple(tags), diagnostics=diagnostics)


def _indices(mask, limit=20):
    return [tuple(int(i) for i in ix) for ix in np.argwhere(mask)[:limit]]


def validate_coefficients(cs: CoefficientSet, cs_rtol=1e-12) -> ValidationReport:
    """Check (A1)/(A2) and structural sign conditions on the grid samples."""
    conds = {}
    a, cd, csq, dsq = cs.a.values, cs.cd.values, cs.csq.values, cs.dsq.values

    finite = np.ones(cs.grid.shape, dtype=bool)
    for name in COEFFICIENT_NAMES:
        finite &= np.isfinite(getattr(cs, name).values)
    conds["A1_bounded"] = ConditionResult(bool(finite.all()), 0.0, _indices(~finite),
                                          int((~finite).sum()))

    def sign_condition(values, strict):
        bad = values <= 0 if strict else values < 0
        return ConditionResult(not bad.any(), float(values.min()), _indices(bad), int(bad.sum()))

    conds["A2_essinf_A_positive"] = sign_condition(a, strict=True)
    conds["A2_CD_nonnegative"] = sign_condition(cd, strict=False)
    conds["csq_nonnegative"] = sign_condition(csq, strict=False)
    conds["dsq_nonnegative"] = sign_condition(dsq, strict=False)
    slack = csq * dsq - cd * cd
    tol = cs_rtol * (np.abs(csq * dsq) + cd * cd)
    bad = slack < -tol
    conds["cauchy_schwarz"] = ConditionResult(not bad.any(), float(slack.min()), _indices(bad),
                                              int(bad.sum()))
    return ValidationReport(conds)


def manufacture_h(u_star: ScalarField, a, b, csq, dsq, cd, N) -> CoefficientSet:
    """Choose ``h`` so that ``u_star`` is an exact discrete solution."""
    N = _check_N(N)
    grid = u_star.grid
    u = u_star.values
    if np.any(u <= 0):
        raise DomainError("manufactured solution must be positive at every grid point")
    p = twostar(N)
    a, b, csq, dsq, cd = (_as_field(grid, v, name) for v, name in
                          zip((a, b, csq, dsq, cd), ("a", "b", "csq", "dsq", "cd")))
    rhs = (laplacian_array(grid, u)
           + dsq.values * power(u, 2 * p + 1)
           + 2.0 * cd.values * power(u, p + 1)
           - b.values * power(u, p - 1)
           + a.values * power(u, -(p + 1)))
    h = csq.values + rhs / u
    return CoefficientSet(N, a, b, csq, dsq, cd, ScalarField(grid, h), tags=("manufactured",))


# --- persistence -----------------------------------------------------------

def save_coefficients(directory, cs: CoefficientSet, mode="direct", extra_meta=None):
    directory = Path(directory)
    for name in COEFFICIENT_NAMES:
        fieldio.save_field(directory / name, getattr(cs, name))
    meta = {"N": cs.N, "mode": mode, "tags": list(cs.tags), "diagnostics": cs.diagnostics}
    meta.update(extra_meta or {})
    fieldio.write_json(directory / "meta.json", meta)
    return directory


def load_coefficients(directory) -> CoefficientSet:
    directory = Path(directory)
    meta = fieldio.read_json(directory / "meta.json")
    fields = {name: fieldio.load_field(directory / name) for name in COEFFICIENT_NAMES}
    return CoefficientSet(meta["N"], **fields, tags=tuple(meta.get("tags", ())),
                          diagnostics=dict(meta.get("diagnostics", {})))


def save_geometric(directory, gd: GeometricData):
    directory = Path(directory)
    fieldio.save_field(directory / "tau", gd.tau)
    fieldio.save_field(directory / "pi", gd.pi)
    fieldio.save_vector(directory, "W", gd.W)
    fieldio.save_tensor(directory, "sigma", gd.sigma)
    if gd.R is not None:
        fieldio.save_field(directory / "R", gd.R)
    fieldio.write_json(directory / "meta.json",
                       {"nu": gd.nu, "d": gd.grid.d, "has_R": gd.R is not None,
                        "mode": "geometric"})
    return directory


def load_geometric(directory) -> GeometricData:
    directory = Path(directory)
    meta = fieldio.read_json(directory / "meta.json")
    d = int(meta["d"])
    R = fieldio.load_field(directory / "R") if meta.get("has_R") else None
    return GeometricData(fieldio.load_field(directory / "tau"), fieldio.load_field(directory / "pi"),
                         float(meta["nu"]), fieldio.load_vector(directory, "W", d),
                         fieldio.load_tensor(directory, "sigma", d), R)

