"""Cut-off fundamental solutions and the near/far convolution split.

2D:  Phi(x) = 1/(2 pi |x|), so that (-Delta)^{1/2} Phi = delta.
3D:  G_N(x) = -1/(4 pi |x|) with Delta G_N = delta, and
     K(x) = grad G_N = x / (4 pi |x|^3).

A cutoff a_lam (1 on B_lam, 0 off B_2lam) splits each kernel into a compactly
supported near piece and a smooth far piece.

How convolutions are evaluated
------------------------------
For band-limited periodic data, convolving with a kernel equals multiplying
by the kernel's continuous Fourier transform at the lattice frequencies.  The
transforms of the cut-off pieces are radial integrals over [0, 2 lam] done by
composite Gauss-Legendre quadrature:

    2D near   m2(rho) = int_0^{2lam} a(r) J0(rho r) dr
    2D far    l2(rho) = int_0^{2lam} (1-a(r)) J0(rho r) dr + (1 - Int J0(2 lam rho)) / rho
    3D near   m3(rho) = int_0^{2lam} a(r) j1(rho r) dr
    3D far    l3(rho) = int_0^{2lam} (1-a(r)) j1(rho r) dr + j0(2 lam rho) / rho

The far tails use closed forms (Struve form of int J0, spherical j0), so the sum
near + far reproduces 1/rho only if the quadrature and the special-function
tails agree; that is what the reassembly check measures.

Sampled spatial tables (cell-averaged near kernel, analytic far derivatives)
are kept for L1 norms, support and symmetry checks, file dumps, and a second
evaluation route via FFT of the periodized samples.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .cutoffs import cutoff, cutoff_derivatives
from .fields import Grid, ScalarField, VectorField, forward

PHI_CONST = 1.0 / (2.0 * np.pi)
IMAGE_SHELLS = 3


# ------------------------------------------------------------ radial quadrature


@functools.lru_cache(maxsize=32)
def radial_nodes(lam: float, panels: int = 24, order: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on [0, 2 lam]; panel edge at lam."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.concatenate(
        [np.linspace(0.0, lam, panels // 4 + 1)[:-1], np.linspace(lam, 2 * lam, panels - panels // 4 + 1)]
    )
    rs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        rs.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(rs), np.concatenate(ws)


def _unique_rho(grid: Grid):
    k = grid.kmag()
    uniq, inv = np.unique(np.round(k * k / grid.fundamental**2).astype(np.int64), return_inverse=True)
    return np.sqrt(uniq.astype(float)) * grid.fundamental, inv.reshape(k.shape)


def _radial_transform(grid: Grid, lam: float, weight_fn, bessel, chunk: int = 2048, **quad):
    rho, inv = _unique_rho(grid)
    r, w = radial_nodes(float(lam), **quad)
    ww = w * weight_fn(r)
    out = np.empty_like(rho)
    for s in range(0, rho.size, chunk):
        rr = rho[s : s + chunk, None] * r[None, :]
        out[s : s + chunk] = bessel(rr) @ ww
    return out, rho, inv


def _sph_j0(x):
    return np.sinc(np.asarray(x) / np.pi)


def _sph_j1(x):
    return special.spherical_jn(1, x)


def integral_j0(x):
    """int_0^x J0 via Struve functions (scipy's itj0y0 is unreliable past x ~ 17)."""
    x = np.asarray(x, dtype=float)
    return x * special.j0(x) + 0.5 * np.pi * x * (
        special.j1(x) * special.struve(0, x) - special.j0(x) * special.struve(1, x)
    )


def _j0_tail(rho, lam):
    itj0 = integral_j0(2 * lam * rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rho > 0, (1.0 - itj0) / rho, 0.0)


def _j1_tail(rho, lam):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rho > 0, _sph_j0(2 * lam * rho) / rho, 0.0)


@functools.lru_cache(maxsize=32)
def _profiles_2d(grid: Grid, lam: float):
    near, rho, inv = _radial_transform(grid, lam, lambda r: cutoff(r, lam), special.j0)
    farq, _, _ = _radial_transform(grid, lam, lambda r: 1.0 - cutoff(r, lam), special.j0)
    far = farq + _j0_tail(rho, lam)
    return near[inv], far[inv]


@functools.lru_cache(maxsize=32)
def _profiles_3d(grid: Grid, lam: float):
    near, rho, inv = _radial_transform(grid, lam, lambda r: cutoff(r, lam), _sph_j1)
    farq, _, _ = _radial_transform(grid, lam, lambda r: 1.0 - cutoff(r, lam), _sph_j1)
    far = farq + _j1_tail(rho, lam)
    return near[inv], far[inv]


def near_multiplier_2d(grid: Grid, lam: float) -> np.ndarray:
    """Fourier transform of a_lam Phi at the lattice frequencies."""
    return _profiles_2d(grid, float(lam))[0]


def far_profile_2d(grid: Grid, lam: float) -> np.ndarray:
    """Fourier transform of (1 - a_lam) Phi (zero at xi = 0 by convention)."""
    return _profiles_2d(grid, float(lam))[1]


def near_profile_3d(grid: Grid, lam: float) -> np.ndarray:
    return _profiles_3d(grid, float(lam))[0]


def far_profile_3d(grid: Grid, lam: float) -> np.ndarray:
    return _profiles_3d(grid, float(lam))[1]


def _unit_wavevector(grid: Grid):
    k = grid.wavevector(odd_safe=True)
    mag = grid.kmag()
    safe = np.where(mag > 0, mag, 1.0)
    return tuple(np.where(mag > 0, c / safe, 0.0) for c in k)


# -------------------------------------------------------------- spatial tables


def _singular_cell_average_2d(dx: float) -> float:
    """(1/dx^2) int_{[-dx/2,dx/2]^2} dx / (2 pi |x|) = 4 asinh(1) / (2 pi dx)."""
    return PHI_CONST * 4.0 * np.arcsinh(1.0) / dx


def radial_far_derivs_2d(r, lam):
    """g = (1-a)Phi and its first two radial derivatives."""
    a, a1, a2 = cutoff_derivatives(r, lam)
    r = np.asarray(r, dtype=float)
    rs = np.where(r > 0, r, 1.0)
    P, P1, P2 = PHI_CONST / rs, -PHI_CONST / rs**2, 2 * PHI_CONST / rs**3
    g = (1 - a) * P
    g1 = -a1 * P + (1 - a) * P1
    g2 = -a2 * P - 2 * a1 * P1 + (1 - a) * P2
    zero = r <= 0
    return np.where(zero, 0, g), np.where(zero, 0, g1), np.where(zero, 0, g2)


def far_kernel_2d_at(points: np.ndarray, lam: float) -> np.ndarray:
    """Matrix d_i (grad^perp g)_j at points (shape (..., 2)) -> (..., 2, 2)."""
    x = np.asarray(points, dtype=float)
    r = np.sqrt((x**2).sum(-1))
    g, g1, g2 = radial_far_derivs_2d(r, lam)
    rs = np.where(r > 0, r, 1.0)
    A = np.where(r > 0, g1 / rs, 0.0)
    B = np.where(r > 0, (g2 - g1 / rs) / rs**2, 0.0)
    H = np.empty(x.shape[:-1] + (2, 2))
    for i in range(2):
        for k in range(2):
            H[..., i, k] = (A if i == k else 0.0) + x[..., i] * x[..., k] * B
    out = np.empty_like(H)
    out[..., :, 0] = -H[..., :, 1]
    out[..., :, 1] = H[..., :, 0]
    return out


def radial_far_derivs_3d(r, lam):
    """L = x g(r), g = (1-a)/(4 pi r^3): returns g, g', g''."""
    a, a1, a2 = cutoff_derivatives(r, lam)
    r = np.asarray(r, dtype=float)
    rs = np.where(r > 0, r, 1.0)
    c = 1.0 / (4 * np.pi)
    g = c * (1 - a) / rs**3
    g1 = c * (-a1 / rs**3 - 3 * (1 - a) / rs**4)
    g2 = c * (-a2 / rs**3 + 6 * a1 / rs**4 + 12 * (1 - a) / rs**5)
    zero = r <= 0
    return np.where(zero, 0, g), np.where(zero, 0, g1), np.where(zero, 0, g2)


def far_fields_3d_at(points: np.ndarray, lam: float):
    """(L, T, V) at points: L^k, T[i,j,k] = d_i d_j L^k, V[j] = d_j div L."""
    x = np.asarray(points, dtype=float)
    r = np.sqrt((x**2).sum(-1))
    g, g1, g2 = radial_far_derivs_3d(r, lam)
    rs = np.where(r > 0, r, 1.0)
    gp = np.where(r > 0, g1 / rs, 0.0)
    h = np.where(r > 0, (g2 - g1 / rs) / rs**2, 0.0)
    Lv = x * g[..., None]
    T = np.zeros(x.shape[:-1] + (3, 3, 3))
    eye = np.eye(3)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                T[..., i, j, k] = (
                    (eye[i, k] * x[..., j] + eye[j, k] * x[..., i] + eye[i, j] * x[..., k]) * gp
                    + x[..., i] * x[..., j] * x[..., k] * h
                )
    V = x * np.where(r > 0, 4 * g1 / rs + g2, 0.0)[..., None]
    return Lv, T, V


def _cell_average(fn, centers: np.ndarray, dx: float, sub: int = 6) -> np.ndarray:
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    d = centers.shape[-1]
    acc = 0.0
    grids = np.meshgrid(*([offs] * d), indexing="ij")
    shifts = np.stack([gg.ravel() for gg in grids], -1) * dx
    for s in shifts:
        acc = acc + fn(centers + s)
    return acc / len(shifts)


# ------------------------------------------------------------------ KernelSet


@dataclass
class KernelSet:
    grid: Grid
    lam: float
    kind: str
    near_table: np.ndarray  # 2D: (N,N); 3D: (3,N,N,N)
    far_table: np.ndarray  # 2D: (2,2,N,N); 3D: T (3,3,3,N,N,N)
    far_aux: np.ndarray | None  # 3D: V (3,N,N,N)
    l1: dict = field(default_factory=dict)

    def near_hat(self) -> np.ndarray:
        if self.kind == "sqg2d":
            return near_multiplier_2d(self.grid, self.lam)
        return near_profile_3d(self.grid, self.lam)

    def far_hat(self) -> np.ndarray:
        if self.kind == "sqg2d":
            return far_profile_2d(self.grid, self.lam)
        return far_profile_3d(self.grid, self.lam)


def _centered_points(grid: Grid) -> np.ndarray:
    return np.stack(grid.coords(), -1)


def build_kernel_set(grid: Grid, lam: float, kind: str | None = None) -> KernelSet:
    kind = kind or ("sqg2d" if grid.dim == 2 else "euler3d")
    if kind not in ("sqg2d", "euler3d"):
        raise ValueError(f"unknown kernel kind {kind!r}")
    if (kind == "sqg2d") != (grid.dim == 2):
        raise ValueError("kernel kind does not match grid dimension")
    if not lam > 0 or 2 * lam > grid.L / 4:
        raise ValueError(f"lambda={lam} too large for box L={grid.L} (need 2*lambda <= L/4)")
    lam = float(lam)
    pts = _centered_points(grid)
    r = grid.radius()
    dx = grid.dx
    vol = grid.cell_volume
    if kind == "sqg2d":
        near = _cell_average(lambda p: cutoff(np.sqrt((p**2).sum(-1)), lam) * PHI_CONST / np.maximum(np.sqrt((p**2).sum(-1)), 1e-300), pts, dx)
        near = np.where(r <= 2 * lam + dx, near, 0.0)
        near[grid.origin_index()] = _singular_cell_average_2d(dx)
        far = np.moveaxis(far_kernel_2d_at(pts, lam), (-2, -1), (0, 1))
        frob = np.sqrt((far**2).sum((0, 1)))
        tail = np.sqrt(5.0) * PHI_CONST * 4 * np.sqrt(2.0) / grid.L
        l1 = {
            "near": float(np.abs(near).sum() * vol),
            "far_box": float(frob.sum() * vol),
            "far_tail": float(tail),
        }
        l1["far"] = l1["far_box"] + l1["far_tail"]
        return KernelSet(grid, lam, kind, near, far, None, l1)

    def aK(p):
        rr = np.sqrt((p**2).sum(-1))
        rs = np.maximum(rr, 1e-300)
        return (cutoff(rr, lam) / (4 * np.pi * rs**3))[..., None] * p

    near = np.moveaxis(_cell_average(aK, pts, dx), -1, 0)
    near = np.where(r <= 2 * lam + dx, near, 0.0)
    near[(slice(None),) + grid.origin_index()] = 0.0  # odd kernel: cell average vanishes
    _, T, V = far_fields_3d_at(pts, lam)
    T = np.moveaxis(T, (-3, -2, -1), (0, 1, 2))
    V = np.moveaxis(V, -1, 0)
    l1 = {
        "near": float(np.sqrt((near**2).sum(0)).sum() * vol),
        "far_box": float(np.sqrt((T**2).sum((0, 1, 2))).sum() * vol),
    }
    l1["far"] = l1["far_box"]
    return KernelSet(grid, lam, kind, near, T, V, l1)


def _check(ks: KernelSet, f):
    if f.grid != ks.grid:
        raise ValueError("grid mismatch between field and kernel set")


# ------------------------------------------------------------- 2D convolutions


def near_conv(f: ScalarField, ks: KernelSet) -> ScalarField:
    """(a_lam Phi) * f."""
    _check(ks, f)
    return ScalarField.from_spectrum(f.grid, f.spectrum * ks.near_hat())


def far_conv(f: ScalarField, ks: KernelSet) -> ScalarField:
    """((1-a_lam) Phi) * f for mean-zero f (zero mode dropped)."""
    _check(ks, f)
    return ScalarField.from_spectrum(f.grid, f.spectrum * ks.far_hat())


def near_conv_perp(f: ScalarField, ks: KernelSet) -> VectorField:
    """(a_lam Phi) * grad^perp f, derivative carried by f."""
    _check(ks, f)
    k1, k2 = f.grid.wavevector(odd_safe=True)
    s = f.spectrum * ks.near_hat()
    return VectorField(
        [ScalarField.from_spectrum(f.grid, -1j * k2 * s), ScalarField.from_spectrum(f.grid, 1j * k1 * s)]
    )


def far_perp(f: ScalarField, ks: KernelSet) -> VectorField:
    """grad^perp((1-a_lam) Phi) * f."""
    k1, k2 = f.grid.wavevector(odd_safe=True)
    s = f.spectrum * ks.far_hat()
    return VectorField(
        [ScalarField.from_spectrum(f.grid, -1j * k2 * s), ScalarField.from_spectrum(f.grid, 1j * k1 * s)]
    )


def far_conv_contract(F: VectorField, ks: KernelSet) -> VectorField:
    """out^k = sum_i (d_i (grad^perp (1-a)Phi)^k) * F^i."""
    _check(ks, F)
    k = F.grid.wavevector(odd_safe=True)
    perp = (-k[1], k[0])
    ell = ks.far_hat()
    kdotF = sum(kk * c.spectrum for kk, c in zip(k, F))
    return VectorField(ScalarField.from_spectrum(F.grid, -p * ell * kdotF) for p in perp)


def constitutive_split(theta: ScalarField, ks: KernelSet) -> VectorField:
    """Near plus far pieces of grad^perp (-Delta)^{-1/2} theta."""
    return near_conv_perp(theta, ks) + far_perp(theta, ks)


# ------------------------------------------------------------- 3D convolutions


def near_cross_3d(omega: VectorField, ks: KernelSet) -> VectorField:
    """-(a_lam K) *x omega, the near part of the Biot-Savart velocity."""
    _check(ks, omega)
    xh = _unit_wavevector(ks.grid)
    m = ks.near_hat()
    w = [c.spectrum for c in omega]
    # FT(a K) = -i xhat m  =>  -(FT(aK) x w) = i m (xhat x w)
    cr = (
        xh[1] * w[2] - xh[2] * w[1],
        xh[2] * w[0] - xh[0] * w[2],
        xh[0] * w[1] - xh[1] * w[0],
    )
    return VectorField(ScalarField.from_spectrum(ks.grid, 1j * m * c) for c in cr)


def near_grad_potential_3d(q: ScalarField, ks: KernelSet) -> VectorField:
    """(a_lam K) * q  with K = grad G_N."""
    _check(ks, q)
    xh = _unit_wavevector(ks.grid)
    m = ks.near_hat()
    return VectorField(ScalarField.from_spectrum(ks.grid, -1j * c * m * q.spectrum) for c in xh)


def far_T_contract(M, ks: KernelSet) -> VectorField:
    """out^k = sum_ij (d_i d_j L^k) * M^{ij}, L = (1-a_lam) K.

    ``M`` is a 3x3 nested sequence of ScalarFields (symmetric not required).
    """
    k = ks.grid.wavevector(odd_safe=True)
    xh = _unit_wavevector(ks.grid)
    ell = ks.far_hat()
    q = sum(k[i] * k[j] * M[i][j].spectrum for i in range(3) for j in range(3))
    return VectorField(ScalarField.from_spectrum(ks.grid, 1j * xh[c] * ell * q) for c in range(3))


def far_V_contract(W: VectorField, ks: KernelSet) -> ScalarField:
    """sum_j (d_j div L) * W^j."""
    k = ks.grid.wavevector(odd_safe=True)
    rho = ks.grid.kmag()
    ell = ks.far_hat()
    q = sum(k[j] * W[j].spectrum for j in range(3))
    return ScalarField.from_spectrum(ks.grid, 1j * rho * ell * q)


def far_grad_L(f: ScalarField, ks: KernelSet, i: int, k: int) -> ScalarField:
    """(d_i L^k) * f."""
    kv = ks.grid.wavevector(odd_safe=True)
    xh = _unit_wavevector(ks.grid)
    return ScalarField.from_spectrum(ks.grid, kv[i] * xh[k] * ks.far_hat() * f.spectrum)


def far_div_L(f: ScalarField, ks: KernelSet) -> ScalarField:
    """(div L) * f."""
    return ScalarField.from_spectrum(ks.grid, ks.grid.kmag() * ks.far_hat() * f.spectrum)


# ------------------------------------------------------------- table routes


def periodize(table: np.ndarray, grid: Grid, fn=None, shells: int = IMAGE_SHELLS) -> np.ndarray:
    """Periodic image sum of a sampled kernel.

    ``fn(points)`` evaluates the kernel at arbitrary points (trailing axes
    match ``table``'s leading component axes); the base cell uses ``table``.
    """
    if fn is None or shells == 0:
        return table
    pts = _centered_points(grid)
    out = table.copy()
    rngs = [range(-shells, shells + 1)] * grid.dim
    import itertools

    for n in itertools.product(*rngs):
        if not any(n):
            continue
        shift = 2 * grid.L * np.array(n, dtype=float)
        out = out + fn(pts + shift)
    return out


def table_multiplier(table: np.ndarray, grid: Grid) -> np.ndarray:
    """FFT of a centered sampled kernel, as a Fourier multiplier."""
    axes = tuple(range(-grid.dim, 0))
    shifted = np.fft.ifftshift(table, axes=axes)
    return forward(shifted) * grid.cell_volume if table.ndim == grid.dim else np.stack(
        [forward(s) for s in shifted.reshape((-1,) + grid.shape)]
    ).reshape(table.shape[: -grid.dim] + grid.spectral_shape) * grid.cell_volume


def far_table_check_2d(ks: KernelSet, f_hat_band: float | None = None) -> dict:
    """Compare the spectral far multiplier against the FFT of periodized samples.

    Returns the max relative discrepancy over nonzero frequencies below
    ``f_hat_band`` (default: half Nyquist).
    """
    grid = ks.grid
    fn = lambda p: np.moveaxis(far_kernel_2d_at(p, ks.lam), (-2, -1), (0, 1))
    per = periodize(ks.far_table, grid, fn)
    mt = table_multiplier(per, grid)
    k = grid.wavevector(odd_safe=True)
    kk = (k[0], k[1])
    perp = (-k[1], k[0])
    ell = ks.far_hat()
    band = f_hat_band or grid.nyquist / 2
    sel = (grid.kmag() > 0) & (grid.kmag() <= band)
    worst = 0.0
    scale = 0.0
    for i in range(2):
        for j in range(2):
            spec = -kk[i] * perp[j] * ell
            worst = max(worst, float(np.abs(mt[i, j] - spec)[sel].max()))
            scale = max(scale, float(np.abs(spec)[sel].max()))
    return {"max_abs": worst, "scale": scale, "relative": worst / scale}


def near_table_check_2d(ks: KernelSet, band: float = 2.0) -> dict:
    grid = ks.grid
    mt = table_multiplier(ks.near_table, grid)
    m = ks.near_hat()
    sel = grid.kmag() <= band
    err = float(np.abs(mt - m)[sel].max())
    return {"max_abs": err, "scale": float(np.abs(m)[sel].max()), "relative": err / float(np.abs(m)[sel].max())}


def kernel_symmetry_error(ks: KernelSet) -> float:
    """max |K(x) - K(-x)| over the lattice, for even kernels (2D near, 2D far)."""
    def flip(a):
        # lattice point -x of index i is index (N - i) mod N about the center
        out = a
        for ax in range(-ks.grid.dim, 0):
            out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
        return out

    inner = (Ellipsis,) + (slice(1, None),) * ks.grid.dim  # x = -L has no mirror image
    sign = 1.0 if ks.kind == "sqg2d" else -1.0  # 3D near kernel and T are odd
    errs = [
        np.abs(t - sign * flip(t))[inner].max() for t in (ks.near_table, ks.far_table)
    ]
    return float(max(errs))


def dump_tables(ks: KernelSet, outdir) -> list:
    from pathlib import Path

    from .fieldio import write_field

    outdir = Path(outdir)
    g = ks.grid
    written = []
    prov = f"kernel tables kind={ks.kind} lambda={ks.lam}"
    if ks.kind == "sqg2d":
        written.append(write_field(outdir / "near.sfld", ScalarField(g, ks.near_table), prov))
        written.append(
            write_field(outdir / "far.sfld", VectorField.from_arrays(g, ks.far_table.reshape((4,) + g.shape)), prov)
        )
    else:
        written.append(write_field(outdir / "near.sfld", VectorField.from_arrays(g, ks.near_table), prov))
        written.append(write_field(outdir / "far_div.sfld", VectorField.from_arrays(g, ks.far_aux), prov))
    return written
