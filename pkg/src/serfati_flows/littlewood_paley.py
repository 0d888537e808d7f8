"""Dyadic Fourier partition and the norms built on it.

Block j >= 0 has multiplier phi(2^-j xi) with phi(xi) = chi(xi/2) - chi(xi);
the low-frequency block (j = -1) is chi itself.  Because of the telescoping
definition, chi + sum_{0<=j<=n} phi_j = chi(2^-(n+1) .) holds identically.

``low_pass`` accepts any n; once 3/5 * 2^(n+1) exceeds the largest grid
frequency the multiplier is identically one and S_n is the identity on the
grid.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cutoffs import CHI_INNER, CHI_OUTER, chi_profile
from .fields import (
    Grid,
    ScalarField,
    VectorField,
    apply_multiplier,
    spectral_derivative,
)

PHI_INNER = CHI_INNER  # 3/5
PHI_OUTER = 2 * CHI_OUTER  # 5/3


def chi_hat(r):
    return chi_profile(r)


def phi_hat(r):
    r = np.asarray(r, dtype=float)
    return chi_profile(r / 2.0) - chi_profile(r)


@dataclass(frozen=True)
class DyadicFamily:
    grid: Grid
    j_max: int
    j_min: int = -1

    def chi_hat(self) -> np.ndarray:
        return _block_multiplier(self.grid, -1, False)

    def multiplier(self, j: int, homogeneous: bool = False) -> np.ndarray:
        self._check_block(j, homogeneous)
        return _block_multiplier(self.grid, j, homogeneous)

    def low_pass_multiplier(self, n: int) -> np.ndarray:
        return _low_pass_multiplier(self.grid, n)

    def blocks(self, homogeneous: bool = False) -> range:
        lo = -self.j_max if homogeneous else self.j_min
        return range(lo, self.j_max + 1)

    def _check_block(self, j: int, homogeneous: bool):
        if j > self.j_max:
            raise ValueError(f"block {j} above j_max={self.j_max}")
        if homogeneous and j < -self.j_max:
            raise ValueError(f"homogeneous block {j} below -j_max={-self.j_max}")


def compute_j_max(grid: Grid) -> int:
    j = -1
    while PHI_OUTER * 2.0 ** (j + 1) < grid.nyquist:
        j += 1
    return j


def build_dyadic_family(grid: Grid) -> DyadicFamily:
    if grid.nyquist < PHI_OUTER * 2:
        raise ValueError(
            f"grid too coarse: Nyquist {grid.nyquist:.3g} < {PHI_OUTER * 2:.3g}"
        )
    return DyadicFamily(grid, compute_j_max(grid))


@functools.lru_cache(maxsize=256)
def _block_multiplier(grid: Grid, j: int, homogeneous: bool) -> np.ndarray:
    k = grid.kmag()
    if not homogeneous and j < -1:
        m = np.zeros_like(k)
    elif not homogeneous and j == -1:
        m = chi_hat(k)
    else:
        m = phi_hat(k * 2.0 ** (-j))
    m.setflags(write=False)
    return m


@functools.lru_cache(maxsize=64)
def _low_pass_multiplier(grid: Grid, n: int) -> np.ndarray:
    if n < -1:
        m = np.zeros(grid.spectral_shape)
    else:
        m = chi_hat(grid.kmag() * 2.0 ** (-(n + 1)))
    m.setflags(write=False)
    return m


def _map(f, fn):
    if isinstance(f, VectorField):
        return VectorField(fn(c) for c in f)
    return fn(f)


def lp_block(f, j: int, family: DyadicFamily, homogeneous: bool = False):
    m = family.multiplier(j, homogeneous)
    return _map(f, lambda c: apply_multiplier(c, m))


def low_pass(f, n: int, family: DyadicFamily):
    m = family.low_pass_multiplier(n)
    return _map(f, lambda c: apply_multiplier(c, m))


def partition_error(family: DyadicFamily) -> float:
    """max |chi + sum_j phi_j - 1| over grid frequencies |xi| <= 5/6 2^j_max."""
    k = family.grid.kmag()
    total = family.chi_hat().copy()
    for j in range(0, family.j_max + 1):
        total = total + family.multiplier(j)
    sel = k <= CHI_OUTER * 2.0**family.j_max
    return float(np.max(np.abs(total[sel] - 1.0)))


# ------------------------------------------------------------------ norms


@dataclass
class NormReport:
    name: str
    exponent: float
    value: float
    contributions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "norm": self.name,
            "exponent": self.exponent,
            "value": self.value,
            "contributions": {str(k): v for k, v in self.contributions.items()},
        }


def _sup(f) -> float:
    return f.sup()


def holder_norm(f, r: float, family: DyadicFamily, variant: str = "inhomogeneous") -> NormReport:
    """sup_j 2^{jr} ||Delta_j f||_inf over the blocks the grid resolves."""
    if variant not in ("inhomogeneous", "homogeneous"):
        raise ValueError(f"unknown variant {variant!r}")
    hom = variant == "homogeneous"
    contrib = {}
    for j in family.blocks(hom):
        contrib[j] = 2.0 ** (j * r) * _sup(lp_block(f, j, family, hom))
    name = "crdot" if hom else "cr"
    return NormReport(name, float(r), max(contrib.values()), contrib)


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    return [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) == order]


def multi_indices_upto(dim: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for k in range(order + 1):
        out.extend(multi_indices(dim, k))
    return out


def _components(f) -> list[ScalarField]:
    return list(f) if isinstance(f, VectorField) else [f]


def c_tilde_norm(f, k: int) -> float:
    """sum_{|alpha|<=k} ||D^alpha f||_inf (components summed)."""
    total = 0.0
    for c in _components(f):
        for a in multi_indices_upto(c.grid.dim, k):
            total += spectral_derivative(c, a).sup()
    return total


@functools.lru_cache(maxsize=16)
def _holder_offsets(grid: Grid, radius: float) -> tuple[tuple[tuple[int, ...], float], ...]:
    m = int(np.floor(radius / grid.dx))
    out = []
    for h in itertools.product(range(-m, m + 1), repeat=grid.dim):
        nz = [c for c in h if c != 0]
        if not nz or nz[0] < 0:
            continue
        dist = grid.dx * float(np.sqrt(sum(c * c for c in h)))
        if dist <= radius:
            out.append((h, dist))
    return tuple(out)


def holder_seminorm(g: ScalarField, sigma: float, radius: float = 2.0) -> float:
    """Lattice Hölder seminorm of exponent sigma, localized to |x-y| <= radius.

    Separations beyond ``radius`` are covered by the bound osc(g) / radius^sigma,
    which is sharper than 2 ||g|| and vanishes on constants.
    """
    v = g.values
    axes = tuple(range(g.grid.dim))
    local = 0.0
    for h, dist in _holder_offsets(g.grid, radius):
        diff = np.abs(np.roll(v, h, axis=axes) - v).max()
        local = max(local, diff / dist**sigma)
    far = g.osc() / radius**sigma
    return max(local, far)


def classical_holder_norm(f, r: float, detail: bool = False):
    if not 0 < r < 4 or float(r).is_integer():
        raise ValueError("r must be a positive non-integer below 4")
    k = int(np.floor(r))
    sigma = r - k
    deriv = c_tilde_norm(f, k)
    semi = 0.0
    for c in _components(f):
        for a in multi_indices(c.grid.dim, k):
            semi += holder_seminorm(spectral_derivative(c, a), sigma)
    value = deriv + semi
    if detail:
        return {"value": value, "derivatives": deriv, "seminorm": semi}
    return value


# ------------------------------------------------------------ Bernstein, Riesz


@dataclass
class BernsteinReport:
    j: int
    k: int
    lower: float
    measured: float
    upper: float

    @property
    def holds(self) -> bool:
        tol = 1e-12 * max(1.0, self.upper)
        return self.lower - tol <= self.measured <= self.upper + tol


def _spectral_energy(grid: Grid, spec: np.ndarray) -> np.ndarray:
    w = np.full(grid.N // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return np.abs(spec) ** 2 * w


def bernstein_bracket(f: ScalarField, j: int, k: int, tol: float = 1e-12) -> BernsteinReport:
    g = f.grid
    kk = g.kmag()
    e = _spectral_energy(g, f.spectrum)
    lo, hi = PHI_INNER * 2.0**j, PHI_OUTER * 2.0**j
    total = e.sum()
    if total == 0:
        raise ValueError("zero field has no spectrum")
    outside = e[(kk < lo * (1 - 1e-12)) | (kk > hi * (1 + 1e-12))].sum()
    if outside > tol * total:
        raise ValueError(f"spectrum leaks outside annulus 2^{j}[3/5,5/3]: {outside / total:.3e}")
    measured = float(np.sqrt((e * kk ** (2 * k)).sum() / total))
    return BernsteinReport(j, k, lo**k, measured, hi**k)


def riesz_multiplier(grid: Grid, k: int) -> np.ndarray:
    kv = grid.wavevector(odd_safe=True)[k]
    mag = grid.kmag()
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(mag > 0, 1j * kv / mag, 0.0)
    return m


def riesz_block(f: ScalarField, k: int, j: int, family: DyadicFamily) -> ScalarField:
    return apply_multiplier(f, family.multiplier(j, True) * riesz_multiplier(f.grid, k))


def riesz_lp(f: ScalarField, k: int, family: DyadicFamily) -> ScalarField:
    """Sum over the homogeneous blocks of phi_j * (i xi_k/|xi|) f_hat."""
    total = np.zeros(f.grid.spectral_shape)
    for j in family.blocks(homogeneous=True):
        total = total + family.multiplier(j, True)
    return apply_multiplier(f, total * riesz_multiplier(f.grid, k))


def riesz_direct(f: ScalarField, k: int) -> ScalarField:
    return apply_multiplier(f, riesz_multiplier(f.grid, k))
