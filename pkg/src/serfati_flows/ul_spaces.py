"""Uniformly local L^p and H^s norms.

Both are sups over translated localized integrals.  The localized integrals
are evaluated at every lattice node by one periodic FFT convolution with a
weight stencil, then sampled on the probe lattice (every ``stride``-th node).
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from .cutoffs import bump
from .fields import Grid, ScalarField, VectorField, forward, inverse, spectral_derivative
from .littlewood_paley import c_tilde_norm, multi_indices_upto

PROBE_STRIDE = 4
SUBSAMPLE = 4


@dataclass
class UlNormReport:
    name: str
    exponent: float
    lam: float
    value: float
    argmax: tuple
    breakdown: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "norm": self.name,
            "exponent": self.exponent,
            "lambda": self.lam,
            "value": self.value,
            "argmax": list(self.argmax),
            "breakdown": {str(k): v for k, v in self.breakdown.items()},
        }


def _periodic_stencil(grid: Grid, weights_fn, reach: float) -> np.ndarray:
    """Place w(offset) on the periodic lattice for |offset| <= reach."""
    m = int(np.ceil(reach / grid.dx)) + 1
    if 2 * m + 1 > grid.N:
        raise ValueError("stencil does not fit in the box")
    ker = np.zeros(grid.shape)
    rng = range(-m, m + 1)
    offs = np.array(list(itertools.product(rng, repeat=grid.dim)), dtype=float)
    w = weights_fn(offs * grid.dx)
    idx = tuple((offs[:, a].astype(int)) % grid.N for a in range(grid.dim))
    ker[idx] = w
    return ker


def _ball_coverage(points: np.ndarray, dx: float, dim: int, radius: float = 1.0) -> np.ndarray:
    """Fraction of each cell (centered at points) inside the ball, 4^d subsamples."""
    sub = (np.arange(SUBSAMPLE) + 0.5) / SUBSAMPLE - 0.5
    shifts = np.array(list(itertools.product(sub, repeat=dim))) * dx
    frac = np.zeros(len(points))
    for s in shifts:
        frac += (np.sum((points + s) ** 2, axis=1) < radius**2)
    frac /= len(shifts)
    # cells entirely inside or outside are exact; refine nothing further
    return frac


@functools.lru_cache(maxsize=16)
def _ball_stencil_hat(grid: Grid) -> np.ndarray:
    ker = _periodic_stencil(
        grid, lambda p: _ball_coverage(p, grid.dx, grid.dim) * grid.cell_volume, 1.0 + grid.dx
    )
    s = forward(ker)
    s.setflags(write=False)
    return s


@functools.lru_cache(maxsize=32)
def _bump_sq_stencil_hat(grid: Grid, lam: float) -> np.ndarray:
    def w(p):
        return bump(np.sqrt((p**2).sum(1)), lam) ** 2 * grid.cell_volume

    ker = _periodic_stencil(grid, w, 2.0 * lam)
    s = forward(ker)
    s.setflags(write=False)
    return s


def _probe(values: np.ndarray, grid: Grid, stride: int):
    sl = (slice(None, None, stride),) * grid.dim
    sub = values[sl]
    flat = int(np.argmax(sub))
    idx = np.unravel_index(flat, sub.shape)
    center = tuple(float(grid.axis()[i * stride]) for i in idx)
    return float(sub[idx]), center


def _local_integrals(density: np.ndarray, grid: Grid, stencil_hat: np.ndarray) -> np.ndarray:
    out = inverse(forward(density) * stencil_hat, grid.shape)
    return np.maximum(out, 0.0)


def _components(f):
    return list(f) if isinstance(f, VectorField) else [f]


def lp_ul_norm(f, p: float = 2.0, stride: int = PROBE_STRIDE) -> UlNormReport:
    if not 1 <= p < np.inf:
        raise ValueError("p must lie in [1, inf)")
    comps = _components(f)
    grid = comps[0].grid
    dens = sum(c.values**2 for c in comps) ** (p / 2)
    integ = _local_integrals(dens, grid, _ball_stencil_hat(grid))
    val, center = _probe(integ, grid, stride)
    return UlNormReport("l%gul" % p, float(p), 1.0, val ** (1.0 / p), center)


def localized_l2(g, lam: float, stride: int = PROBE_STRIDE):
    """sup_x || phi_{x,lam} g ||_{L^2} and the maximizing center."""
    comps = _components(g)
    grid = comps[0].grid
    dens = sum(c.values**2 for c in comps)
    integ = _local_integrals(dens, grid, _bump_sq_stencil_hat(grid, float(lam)))
    val, center = _probe(integ, grid, stride)
    return np.sqrt(val), center


def hs_ul_norm(f, s: int, lam: float = 1.0, stride: int = PROBE_STRIDE) -> UlNormReport:
    """sum_{|alpha|<=s} sup_x || phi_{x,lam} D^alpha f ||_{L^2}."""
    if not (0 <= s <= 6 and int(s) == s):
        raise ValueError("s must be an integer in [0, 6]")
    if not 0.5 <= lam <= 4:
        raise ValueError("lambda must lie in [1/2, 4]")
    comps = _components(f)
    grid = comps[0].grid
    if 2 * lam >= grid.L:
        raise ValueError("bump of radius 2*lambda does not fit in the box")
    breakdown = {}
    total = 0.0
    best = (-1.0, None)
    for a in multi_indices_upto(grid.dim, int(s)):
        d = VectorField(spectral_derivative(c, a) for c in comps)
        v, center = localized_l2(d, lam, stride)
        breakdown[a] = v
        total += v
        if v > best[0]:
            best = (v, center)
    return UlNormReport("hsul", float(s), float(lam), total, best[1], breakdown)


def l2_ul(f) -> float:
    return lp_ul_norm(f, 2).value


def hs_ul(f, s: int, lam: float = 1.0) -> float:
    return hs_ul_norm(f, s, lam).value


# ----------------------------------------------------------- inequality suites

SUITES = ("product", "commutator", "embedding", "conv_bound")


@dataclass
class InequalityReport:
    suite: str
    ratios: list
    max_ratio: float
    frozen: float | None = None

    @property
    def within(self) -> bool:
        if self.frozen is None:
            return True
        return self.max_ratio <= 1.05 * self.frozen

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "max_ratio": self.max_ratio,
            "frozen": self.frozen,
            "within": self.within,
            "n": len(self.ratios),
        }


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0.0:
        return 0.0
    if rhs == 0.0:
        raise FloatingPointError("ratio explosion: nonzero lhs against zero rhs")
    return lhs / rhs


def product_ratio(f: ScalarField, g: ScalarField, s: int) -> float:
    fg = f * g
    lhs = max(l2_ul(spectral_derivative(fg, a)) for a in multi_indices_upto(f.grid.dim, s))
    rhs = f.sup() * hs_ul(g, s) + g.sup() * hs_ul(f, s)
    return _ratio(lhs, rhs)


def commutator_ratio(f: ScalarField, g: ScalarField, s: int) -> float:
    fg = f * g
    lhs = 0.0
    for a in multi_indices_upto(f.grid.dim, s):
        c = spectral_derivative(fg, a) - f * spectral_derivative(g, a)
        lhs = max(lhs, l2_ul(c))
    rhs = c_tilde_norm(f, 1) * hs_ul(g, s - 1) + g.sup() * hs_ul(f, s)
    return _ratio(lhs, rhs)


def embedding_ratio(f: ScalarField, j: int = 1) -> float:
    m = f.grid.dim // 2 + 1
    return _ratio(c_tilde_norm(f, j), hs_ul(f, j + m))


def conv_bound_ratio(f: ScalarField, lam: float, r: int = 2) -> float:
    from .fields import grad
    from .kernels import near_multiplier_2d

    grid = f.grid
    if grid.dim != 2:
        raise ValueError("conv_bound monitor is two-dimensional")
    m = near_multiplier_2d(grid, lam)
    conv = ScalarField.from_spectrum(grid, f.spectrum * m)
    lhs = hs_ul(grad(conv), r)
    return _ratio(lhs, lam * hs_ul(f, r))


def inequality_monitor(suite: str, pairs, s: int = 3, lam: float = 1.0, frozen: float | None = None) -> InequalityReport:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    ratios = []
    for f, g in pairs:
        if suite == "product":
            ratios.append(product_ratio(f, g, s))
        elif suite == "commutator":
            ratios.append(commutator_ratio(f, g, s))
        elif suite == "embedding":
            ratios.append(embedding_ratio(f))
        else:
            ratios.append(conv_bound_ratio(f, lam))
    return InequalityReport(suite, ratios, max(ratios) if ratios else 0.0, frozen)
