"""Flat periodic tori with Fourier spectral calculus.

All transforms are real-to-real (``rfftn``/``irfftn``).  First derivatives
zero the Nyquist mode so that they stay real; the Laplacian keeps it.
"""
from dataclasses import dataclass
from functools import cached_property
import math
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the torus ``prod_i [0, L_i)``."""

    d: int
    n: tuple
    L: tuple

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or not 1 <= self.d <= 3:
            raise ConfigurationError(f"grid dimension must be 1, 2 or 3, got {self.d!r}")
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        L = tuple(float(v) for v in np.atleast_1d(self.L))
        if len(n) != self.d or len(L) != self.d:
            raise ConfigurationError(f"need {self.d} sizes and periods, got n={n}, L={L}")
        for ni in n:
            if ni < 4 or ni % 2:
                raise ConfigurationError(f"axis sizes must be even and >= 4, got {n}")
        for Li in L:
            if not (math.isfinite(Li) and Li > 0):
                raise ConfigurationError(f"periods must be positive, got {L}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", L)

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return int(np.prod(self.n))

    @property
    def spacing(self):
        return tuple(Li / ni for Li, ni in zip(self.L, self.n))

    @property
    def volume(self):
        return float(np.prod(self.L))

    @cached_property
    def wavenumbers(self):
        """Per-axis angular wavenumbers ``2*pi*k/L`` in rfftn layout."""
        ks = []
        for axis, (ni, Li) in enumerate(zip(self.n, self.L)):
            if axis == self.d - 1:
                k = np.fft.rfftfreq(ni, d=Li / ni) * 2.0 * np.pi
            else:
                k = np.fft.fftfreq(ni, d=Li / ni) * 2.0 * np.pi
            ks.append(k)
        return tuple(ks)

    @cached_property
    def _kmesh(self):
        return np.meshgrid(*self.wavenumbers, indexing="ij")

    @cached_property
    def ksq(self):
        """``|k|^2`` on the rfftn half-spectrum."""
        out = np.zeros(self._kmesh[0].shape)
        for k in self._kmesh:
            out = out + k * k
        return out

    @cached_property
    def _deriv_symbols(self):
        # i*k_j with the Nyquist row of axis j zeroed
        symbols = []
        for axis, k in enumerate(self._kmesh):
            s = 1j * k.copy()
            nyq = self.n[axis] // 2
            idx = [slice(None)] * self.d
            idx[axis] = nyq
            s[tuple(idx)] = 0.0
            symbols.append(s)
        return tuple(symbols)

    @cached_property
    def coordinates(self):
        """Coordinate arrays ``x_1..x_d`` (``indexing='ij'``)."""
        axes = [np.arange(ni) * (Li / ni) for ni, Li in zip(self.n, self.L)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def fft(self, values):
        return np.fft.rfftn(values, s=self.n, axes=tuple(range(self.d)))

    def ifft(self, coeffs):
        return np.fft.irfftn(coeffs, s=self.n, axes=tuple(range(self.d)))


def make_grid(d, n, L):
    """Build a :class:`Grid`; scalars for ``n``/``L`` are broadcast to all axes."""
    n = np.atleast_1d(n)
    L = np.atleast_1d(L)
    if n.size == 1 and d > 1:
        n = np.repeat(n, d)
    if L.size == 1 and d > 1:
        L = np.repeat(L, d)
    if np.any(n != np.round(n)):
        raise ConfigurationError(f"axis sizes must be integers, got {n}")
    return Grid(d, tuple(int(v) for v in n), tuple(float(v) for v in L))


class _FieldArithmetic:
    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            _same_grid(self, other)
            other = other.values
        return ScalarField(self.grid, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __pow__(self, e):
        return ScalarField(self.grid, self.values ** e)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class ScalarField(_FieldArithmetic):
    """Real samples of a periodic function, stored with shape ``grid.shape``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.size == 1 and self.grid.size != 1:
            v = np.full(self.grid.shape, float(v.reshape(())))
        if v.size != self.grid.size:
            raise ConfigurationError(
                f"field has {v.size} values, grid has {self.grid.size} points")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid, fn: Callable):
        return cls(grid, np.broadcast_to(fn(*grid.coordinates), grid.shape))

    def min(self):
        return field_min(self)

    def max(self):
        return field_max(self)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    components: tuple

    def __post_init__(self):
        comps = tuple(c if isinstance(c, ScalarField) else ScalarField(self.grid, c)
                      for c in self.components)
        if len(comps) != self.grid.d:
            raise ConfigurationError(
                f"vector field needs {self.grid.d} components, got {len(comps)}")
        for c in comps:
            _same_grid_pair(c.grid, self.grid)
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, tuple(ScalarField.constant(grid, 0.0) for _ in range(grid.d)))

    def __getitem__(self, i):
        return self.components[i]

    def norm_sq(self):
        return ScalarField(self.grid, sum(c.values ** 2 for c in self.components))

    def dot(self, other):
        return ScalarField(self.grid, sum(a.values * b.values
                                          for a, b in zip(self.components, other.components)))

    def scale(self, s):
        s = s.values if isinstance(s, ScalarField) else s
        return VectorField(self.grid, tuple(c.values * s for c in self.components))


def sym_index_pairs(d):
    return [(i, j) for i in range(d) for j in range(i, d)]


@dataclass(frozen=True, eq=False)
class SymTensorField:
    """Symmetric 2-tensor field; only entries ``(i, j)`` with ``i <= j`` are stored."""

    grid: Grid
    components: dict

    def __post_init__(self):
        pairs = sym_index_pairs(self.grid.d)
        comps = {}
        for (i, j), v in self.components.items():
            key = (min(i, j), max(i, j))
            comps[key] = v if isinstance(v, ScalarField) else ScalarField(self.grid, v)
        if set(comps) != set(pairs):
            raise ConfigurationError(f"symmetric tensor needs entries {pairs}, got {sorted(comps)}")
        for c in comps.values():
            _same_grid_pair(c.grid, self.grid)
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, {p: ScalarField.constant(grid, 0.0) for p in sym_index_pairs(grid.d)})

    def __getitem__(self, ij):
        i, j = ij
        return self.components[(min(i, j), max(i, j))]

    def trace(self):
        return ScalarField(self.grid, sum(self[i, i].values for i in range(self.grid.d)))

    def frobenius_sq(self):
        total = np.zeros(self.grid.shape)
        for (i, j), c in self.components.items():
            total = total + (1.0 if i == j else 2.0) * c.values ** 2
        return ScalarField(self.grid, total)

    def __add__(self, other):
        _same_grid_pair(self.grid, other.grid)
        return SymTensorField(self.grid, {p: self.components[p].values + other.components[p].values
                                          for p in self.components})


def _same_grid_pair(g1, g2):
    if g1 != g2:
        raise ConfigurationError("fields live on different grids")


def _same_grid(*fields):
    for f in fields[1:]:
        _same_grid_pair(fields[0].grid, f.grid)


# --- spectral calculus on raw arrays (used by the solver hot loops) ---------

def laplacian_array(grid, values):
    return grid.ifft(-grid.ksq * grid.fft(values))


def gradient_arrays(grid, values):
    coeffs = grid.fft(values)
    return [grid.ifft(s * coeffs) for s in grid._deriv_symbols]


def helmholtz_solve_array(grid, values, c):
    return grid.ifft(grid.fft(values) / (grid.ksq + c))


# --- public operations -----------------------------------------------------

def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, laplacian_array(f.grid, f.values))


def gradient(f: ScalarField) -> VectorField:
    return VectorField(f.grid, tuple(gradient_arrays(f.grid, f.values)))


def divergence(v: VectorField) -> ScalarField:
    grid = v.grid
    total = np.zeros(grid.shape)
    for s, comp in zip(grid._deriv_symbols, v.components):
        total = total + grid.ifft(s * grid.fft(comp.values))
    return ScalarField(grid, total)


def partial(f: ScalarField, axis: int) -> ScalarField:
    grid = f.grid
    return ScalarField(grid, grid.ifft(grid._deriv_symbols[axis] * grid.fft(f.values)))


def inv_helmholtz(f: ScalarField, c: float) -> ScalarField:
    """Solve ``(-Laplacian + c) u = f`` exactly in the discrete spectral sense."""
    if not c > 0:
        raise DomainError(f"Helmholtz shift must be positive, got {c}")
    return ScalarField(f.grid, helmholtz_solve_array(f.grid, f.values, float(c)))


def integrate(f: ScalarField) -> float:
    """Trapezoidal (spectrally exact) integral over the torus."""
    return float(np.mean(f.values) * f.grid.volume)


def norm_inf(f: ScalarField) -> float:
    return float(np.max(np.abs(f.values)))


def norm_L2(f: ScalarField) -> float:
    return math.sqrt(float(np.mean(f.values ** 2) * f.grid.volume))


def field_min(f: ScalarField) -> float:
    """Discrete essinf: the smallest grid sample."""
    return float(np.min(f.values))


def field_max(f: ScalarField) -> float:
    """Discrete esssup: the largest grid sample."""
    return float(np.max(f.values))


def lambda1(grid: Grid) -> float:
    """First nonzero eigenvalue of ``-Laplacian`` on the torus: ``min_i (2 pi / L_i)^2``."""
    return min((2.0 * np.pi / Li) ** 2 for Li in grid.L)


def random_smooth_field(grid: Grid, rng: np.random.Generator, modes: int = 3,
                        amplitude: float = 1.0, mean: float = 0.0) -> ScalarField:
    """Random trigonometric polynomial with wavenumbers ``|k_i| <= modes``."""
    coords = grid.coordinates
    out = np.full(grid.shape, float(mean))
    ranges = [range(-modes, modes + 1)] * grid.d
    for ks in np.array(np.meshgrid(*ranges, indexing="ij")).reshape(grid.d, -1).T:
        if not np.any(ks):
            continue
        phase = sum(2.0 * np.pi * k * x / Li for k, x, Li in zip(ks, coords, grid.L))
        weight = amplitude / (1.0 + float(np.dot(ks, ks)))
        out = out + weight * (rng.standard_normal() * np.cos(phase)
                              + rng.standard_normal() * np.sin(phase))
    return ScalarField(grid, out)

