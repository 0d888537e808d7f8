"""Periodic grids, sampled fields and Fourier-multiplier calculus.

The whole space R^d is stood in for by the periodic box [-L, L)^d sampled on
N points per axis.  Transforms use the real FFT layout (last axis halved).

Normalization.  ``spectrum`` holds the raw ``rfftn`` coefficients.  The
continuous Fourier transform is approximated by ``spectrum * dx**d`` and the
inverse carries the weight ``1 / (2L)**d``, so that

    sum |f|^2 dx^d  ==  (2L)^-d * sum_xi |f_hat(xi)|^2

holds exactly up to rounding (see :func:`parseval_sides`).
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.fft as sfft

from ._env import thread_cap


def _workers() -> int:
    return thread_cap()


@dataclass(frozen=True)
class Grid:
    dim: int
    L: float
    N: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 16 and (self.N & (self.N - 1)) == 0):
            raise ValueError(f"N must be a power of two >= 16, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def nyquist(self) -> float:
        return (self.N / 2) * (np.pi / self.L)

    @property
    def fundamental(self) -> float:
        """Smallest nonzero wavenumber on the box."""
        return np.pi / self.L

    def axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    def coords(self) -> tuple[np.ndarray, ...]:
        return _coords(self)

    def radius(self) -> np.ndarray:
        return _radius(self)

    def wavevector(self, odd_safe: bool = False) -> tuple[np.ndarray, ...]:
        """Broadcastable wavevector components in rfft layout.

        With ``odd_safe`` the Nyquist entries are zeroed, which is what odd
        order multipliers need to keep real fields real.
        """
        return _wavevector(self, odd_safe)

    def kmag(self) -> np.ndarray:
        return _kmag(self)

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.N,) * (self.dim - 1) + (self.N // 2 + 1,)

    def origin_index(self) -> tuple[int, ...]:
        return (self.N // 2,) * self.dim


def make_grid(dim: int, L: float, N: int) -> Grid:
    return Grid(int(dim), float(L), int(N))


@functools.lru_cache(maxsize=32)
def _coords(grid: Grid) -> tuple[np.ndarray, ...]:
    ax = grid.axis()
    out = np.meshgrid(*([ax] * grid.dim), indexing="ij")
    for a in out:
        a.setflags(write=False)
    return tuple(out)


@functools.lru_cache(maxsize=32)
def _radius(grid: Grid) -> np.ndarray:
    r = np.sqrt(sum(c**2 for c in _coords(grid)))
    r.setflags(write=False)
    return r


@functools.lru_cache(maxsize=64)
def _wavevector(grid: Grid, odd_safe: bool) -> tuple[np.ndarray, ...]:
    N, d = grid.N, grid.dim
    scale = np.pi / grid.L  # 2*pi / (2L)
    out = []
    for a in range(d):
        if a == d - 1:
            m = np.arange(N // 2 + 1, dtype=float)
        else:
            m = np.fft.fftfreq(N, 1.0 / N)
        if odd_safe:
            m = m.copy()
            m[np.abs(m) == N // 2] = 0.0
        shape = [1] * d
        shape[a] = m.size
        k = (scale * m).reshape(shape)
        k.setflags(write=False)
        out.append(k)
    return tuple(out)


@functools.lru_cache(maxsize=32)
def _kmag(grid: Grid) -> np.ndarray:
    k = np.sqrt(sum(c**2 for c in _wavevector(grid, False)))
    k.setflags(write=False)
    return k


def forward(values: np.ndarray) -> np.ndarray:
    return sfft.rfftn(values, workers=_workers())


def inverse(coeffs: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    return sfft.irfftn(coeffs, s=shape, workers=_workers())


class ScalarField:
    """Real samples on a grid, immutable, with a lazily cached spectrum."""

    def __init__(self, grid: Grid, values, *, spectrum: np.ndarray | None = None):
        arr = np.array(values, dtype=float)
        if arr.shape != grid.shape:
            raise ValueError(f"values shape {arr.shape} does not match grid {grid.shape}")
        if not np.isfinite(arr).all():
            raise FloatingPointError("field contains NaN or Inf")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr
        if spectrum is not None:
            spectrum = np.asarray(spectrum)
            spectrum.setflags(write=False)
            self.__dict__["spectrum"] = spectrum

    @cached_property
    def spectrum(self) -> np.ndarray:
        s = forward(self.values)
        s.setflags(write=False)
        return s

    @classmethod
    def from_spectrum(cls, grid: Grid, coeffs: np.ndarray) -> "ScalarField":
        values = inverse(coeffs, grid.shape)
        return cls(grid, values)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, fn(*grid.coords()))

    @classmethod
    def constant(cls, grid: Grid, c: float = 0.0) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    def _check(self, other: "ScalarField"):
        if other.grid != self.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - float(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values * other.values)
        return ScalarField(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def osc(self) -> float:
        return float(self.values.max() - self.values.min())

    def __repr__(self):
        return f"ScalarField(N={self.grid.N}, dim={self.grid.dim}, sup={self.sup():.3g})"


class VectorField:
    """A tuple of ``dim`` scalar components on one grid."""

    def __init__(self, components: Iterable[ScalarField]):
        comps = tuple(components)
        if not comps:
            raise ValueError("empty vector field")
        g = comps[0].grid
        if any(c.grid != g for c in comps):
            raise ValueError("components live on different grids")
        self.grid = g
        self.components = comps

    @classmethod
    def from_arrays(cls, grid: Grid, arrays) -> "VectorField":
        return cls(ScalarField(grid, a) for a in arrays)

    @classmethod
    def zeros(cls, grid: Grid, ncomp: int | None = None) -> "VectorField":
        n = grid.dim if ncomp is None else ncomp
        return cls(ScalarField.constant(grid, 0.0) for _ in range(n))

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i) -> ScalarField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def as_array(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])

    def _zip(self, other, op):
        if isinstance(other, VectorField):
            if len(other) != len(self):
                raise ValueError("component count mismatch")
            return VectorField(op(a, b) for a, b in zip(self, other))
        return VectorField(op(a, other) for a in self)

    def __add__(self, other):
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zip(other, lambda a, b: a - b)

    def __mul__(self, other):
        if isinstance(other, VectorField):
            raise TypeError("use dot() for vector products")
        return self._zip(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(-c for c in self)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(sum(c.values**2 for c in self))

    def sup(self) -> float:
        """Sup of the pointwise Euclidean norm."""
        return float(self.magnitude().max())

    def dot(self, other: "VectorField") -> ScalarField:
        return ScalarField(self.grid, sum(a.values * b.values for a, b in zip(self, other)))

    def mean(self) -> np.ndarray:
        return np.array([c.mean() for c in self])

    def __repr__(self):
        return f"VectorField(ncomp={len(self)}, N={self.grid.N}, sup={self.sup():.3g})"


Field = ScalarField | VectorField


# ---------------------------------------------------------------- multipliers


def apply_multiplier(f: ScalarField, m: np.ndarray) -> ScalarField:
    return ScalarField.from_spectrum(f.grid, f.spectrum * m)


def derivative_multiplier(grid: Grid, alpha: Sequence[int]) -> np.ndarray:
    if len(alpha) != grid.dim:
        raise ValueError("multi-index length must equal grid dimension")
    if any(a < 0 for a in alpha) or sum(alpha) > 8:
        raise ValueError(f"multi-index {tuple(alpha)} outside 0 <= |alpha| <= 8")
    m = np.ones(grid.spectral_shape, dtype=complex)
    for axis, a in enumerate(alpha):
        if a == 0:
            continue
        k = grid.wavevector(odd_safe=(a % 2 == 1))[axis]
        m = m * (1j * k) ** a
    return m


def spectral_derivative(f: ScalarField, alpha: Sequence[int]) -> ScalarField:
    if sum(alpha) == 0:
        return f
    return apply_multiplier(f, derivative_multiplier(f.grid, alpha))


def _unit(dim, axis, order=1):
    a = [0] * dim
    a[axis] = order
    return tuple(a)


def partial(f: ScalarField, axis: int, order: int = 1) -> ScalarField:
    return spectral_derivative(f, _unit(f.grid.dim, axis, order))


def grad(f: ScalarField) -> VectorField:
    return VectorField(partial(f, a) for a in range(f.grid.dim))


def perp_grad(f: ScalarField) -> VectorField:
    """(-d2 f, d1 f) in 2D."""
    if f.grid.dim != 2:
        raise ValueError("perp_grad is two-dimensional")
    return VectorField([-partial(f, 1), partial(f, 0)])


def div(v: VectorField) -> ScalarField:
    if len(v) != v.grid.dim:
        raise ValueError("div needs dim components")
    coeff = sum(1j * k * c.spectrum for k, c in zip(v.grid.wavevector(odd_safe=True), v))
    return ScalarField.from_spectrum(v.grid, coeff)


def curl(v: VectorField) -> ScalarField | VectorField:
    """Scalar curl d1 v2 - d2 v1 in 2D, vector curl in 3D."""
    g = v.grid
    k = g.wavevector(odd_safe=True)
    s = [c.spectrum for c in v]
    if g.dim == 2:
        return ScalarField.from_spectrum(g, 1j * (k[0] * s[1] - k[1] * s[0]))
    out = [
        1j * (k[1] * s[2] - k[2] * s[1]),
        1j * (k[2] * s[0] - k[0] * s[2]),
        1j * (k[0] * s[1] - k[1] * s[0]),
    ]
    return VectorField(ScalarField.from_spectrum(g, c) for c in out)


def laplacian(f: ScalarField) -> ScalarField:
    return apply_multiplier(f, -(f.grid.kmag() ** 2))


def dft_roundtrip(f: ScalarField) -> ScalarField:
    return ScalarField.from_spectrum(f.grid, forward(f.values))


def parseval_sides(f: ScalarField) -> tuple[float, float]:
    """(sum |f|^2 dx^d, (2L)^-d sum |f_hat|^2) with f_hat = rfft * dx^d."""
    g = f.grid
    phys = float(np.sum(f.values**2) * g.cell_volume)
    fh = f.spectrum * g.cell_volume
    w = np.full(g.N // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    spec = float(np.sum(np.abs(fh) ** 2 * w) / (2 * g.L) ** g.dim)
    return phys, spec


def shift(f: ScalarField, h: Sequence[int]) -> ScalarField:
    """Lattice translate: (f(. - h dx))."""
    return ScalarField(f.grid, np.roll(f.values, tuple(h), axis=tuple(range(f.grid.dim))))


def cross(a: VectorField, b: VectorField) -> VectorField:
    x, y = a.as_array(), b.as_array()
    return VectorField.from_arrays(a.grid, np.cross(x, y, axis=0))


def leray_project(v: VectorField) -> VectorField:
    """Remove the gradient part spectrally (mean kept)."""
    g = v.grid
    k = g.wavevector(odd_safe=True)
    k2 = sum(c**2 for c in k)
    k2 = np.where(k2 == 0, 1.0, k2)
    s = [c.spectrum for c in v]
    kd = sum(kk * ss for kk, ss in zip(k, s)) / k2
    return VectorField(ScalarField.from_spectrum(g, ss - kk * kd) for kk, ss in zip(k, s))


# ---------------------------------------------------------------- random data


def band_modes(grid: Grid, kmax: float, kmin: float = 0.0) -> np.ndarray:
    """Integer mode vectors m (half space) with kmin <= |m| pi/L <= kmax.

    The list depends on L, kmax, kmin only, not on N, so the same seed gives
    the same continuous field on every resolution that resolves it.
    """
    scale = np.pi / grid.L
    M = int(np.floor(kmax / scale))
    if M >= grid.N // 2:
        raise ValueError("band limit at or above Nyquist")
    modes = []
    for m in itertools.product(range(-M, M + 1), repeat=grid.dim):
        nz = [c for c in m if c != 0]
        if not nz or nz[0] < 0:
            continue
        kk = scale * np.sqrt(sum(c * c for c in m))
        if kmin <= kk <= kmax:
            modes.append(m)
    return np.array(modes, dtype=int).reshape(-1, grid.dim)


def field_from_modes(grid: Grid, modes: np.ndarray, coeffs: np.ndarray, mean: float = 0.0) -> ScalarField:
    """Real field sum_m Re(c_m exp(i k_m.(x+L))) * 2, plus mean."""
    full = np.zeros(grid.shape, dtype=complex)
    N = grid.N
    modes = np.asarray(modes, dtype=int).reshape(-1, grid.dim)
    coeffs = np.asarray(coeffs, dtype=complex)
    np.add.at(full, tuple((modes % N).T), coeffs)
    np.add.at(full, tuple((-modes % N).T), np.conj(coeffs))
    vals = np.fft.ifftn(full).real * full.size + mean
    return ScalarField(grid, vals)


def random_band_limited(
    grid: Grid,
    kmax: float,
    rng: np.random.Generator,
    *,
    kmin: float = 0.0,
    rms: float = 1.0,
    mean: float = 0.0,
    spectral_slope: float = 0.0,
) -> ScalarField:
    """Random real field with spectrum in the annulus kmin <= |xi| <= kmax.

    Normalized by RMS (not sup) so that the result is resolution independent.
    ``spectral_slope`` damps amplitudes like |xi|^-slope.
    """
    modes = band_modes(grid, kmax, kmin)
    if len(modes) == 0:
        raise ValueError("no modes in requested band")
    c = rng.standard_normal(len(modes)) + 1j * rng.standard_normal(len(modes))
    if spectral_slope:
        kk = np.sqrt((modes**2).sum(1)) * (np.pi / grid.L)
        c = c * kk ** (-spectral_slope)
    c *= rms / np.sqrt(2.0 * np.sum(np.abs(c) ** 2))
    return field_from_modes(grid, modes, c, mean)
