"""Three-dimensional Euler pieces.

Biot-Savart inversion (spectral and kernel-split), the radial-dilation stream
function, cutoff-and-truncate preparation of initial data, the pressure
gradient in near/far form, a pseudo-spectral vorticity stepper on small grids,
and the time-integrated velocity identity checked along its trajectories.

Sign conventions used throughout: G(x) = -1/(4 pi |x|) is the fundamental
solution of the Laplacian, K = grad G = x / (4 pi |x|^3), and
L = (1 - a_lam) K is the far part of K.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import frozen
from ._env import thread_cap
from .cutoffs import cutoff, cutoff_derivatives
from .fields import (
    Grid,
    ScalarField,
    VectorField,
    cross,
    curl,
    div,
    leray_project,
    partial,
)
from .kernels import (
    KernelSet,
    far_div_L,
    far_grad_L,
    far_T_contract,
    far_V_contract,
    near_cross_3d,
    near_grad_potential_3d,
)
from .littlewood_paley import DyadicFamily, c_tilde_norm, low_pass
from .ul_spaces import hs_ul

QUAD_ORDER = 64


class NonzeroMeanError(ValueError):
    pass


class InstabilityError(RuntimeError):
    pass


def _require_3d(grid: Grid):
    if grid.dim != 3:
        raise ValueError("three-dimensional grid required")


# ------------------------------------------------------------- Biot-Savart


def biot_savart(omega: VectorField, tol: float = 1e-10) -> VectorField:
    """u = curl (-Delta)^{-1} omega; the mean of u is zero."""
    g = omega.grid
    _require_3d(g)
    scale = max(omega.sup(), 1e-300)
    if np.max(np.abs(omega.mean())) > tol * scale:
        raise NonzeroMeanError("vorticity has nonzero mean")
    k = g.wavevector(odd_safe=True)
    k2 = sum(c**2 for c in k)
    inv = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    w = [c.spectrum for c in omega]
    u_hat = (
        1j * (k[1] * w[2] - k[2] * w[1]) * inv,
        1j * (k[2] * w[0] - k[0] * w[2]) * inv,
        1j * (k[0] * w[1] - k[1] * w[0]) * inv,
    )
    return VectorField(ScalarField.from_spectrum(g, h) for h in u_hat)


def biot_savart_split(omega: VectorField, ks: KernelSet, u: VectorField | None = None) -> VectorField:
    """Near cross-product term plus the two integrated-by-parts far terms.

    u^i = -(a K) x omega + (div L) * u^i - sum_k (d_i L^k) * u^k.
    The far terms need u itself; by default the spectral inversion is used.
    """
    if u is None:
        u = biot_savart(omega)
    near = near_cross_3d(omega, ks)
    out = []
    for i in range(3):
        far = far_div_L(u[i], ks)
        for k in range(3):
            far = far - far_grad_L(u[k], ks, i, k)
        out.append(near[i] + far)
    return VectorField(out)


# ---------------------------------------------------------- stream function


def _full_spectrum(f: ScalarField) -> np.ndarray:
    """Complex FFT with the Nyquist planes removed (they have no real interpolant)."""
    s = sfft.fftn(f.values, workers=thread_cap())
    h = f.grid.N // 2
    for ax in range(f.grid.dim):
        idx = [slice(None)] * f.grid.dim
        idx[ax] = h
        s[tuple(idx)] = 0.0
    return s


def _freqs(grid: Grid) -> np.ndarray:
    return np.fft.fftfreq(grid.N, d=1.0 / grid.N) * (np.pi / grid.L)


def _eval_matrix(grid: Grid, pts_1d: np.ndarray) -> np.ndarray:
    xi = _freqs(grid)
    return np.exp(1j * np.outer(pts_1d + grid.L, xi)) / grid.N


def _eval_separable(spec: np.ndarray, E: np.ndarray) -> np.ndarray:
    out = np.tensordot(E, spec, axes=(1, 0))  # (a, n, p)
    out = np.tensordot(E, out, axes=(1, 1))  # (b, a, p)
    out = np.tensordot(E, out, axes=(1, 2))  # (c, b, a)
    return out.transpose(2, 1, 0).real


@dataclass
class StreamResult:
    axis: np.ndarray  # 1D coordinates of the evaluation lattice
    index: np.ndarray  # their indices on the parent grid
    psi: np.ndarray  # (3, M, M, M)
    jacobian: np.ndarray  # (3, 3, M, M, M), jacobian[j, k] = d_j psi_k
    target: np.ndarray  # u on the same lattice

    @property
    def curl(self) -> np.ndarray:
        J = self.jacobian
        return np.stack([J[1, 2] - J[2, 1], J[2, 0] - J[0, 2], J[0, 1] - J[1, 0]])

    @property
    def divergence(self) -> np.ndarray:
        return self.jacobian[0, 0] + self.jacobian[1, 1] + self.jacobian[2, 2]

    def curl_error(self) -> float:
        scale = max(np.sqrt((self.target**2).sum(0)).max(), 1e-300)
        return float(np.sqrt(((self.curl - self.target) ** 2).sum(0)).max() / scale)

    def at_origin(self) -> np.ndarray:
        i = int(np.flatnonzero(self.axis == 0.0)[0])
        return self.psi[:, i, i, i]


def _levi(v, w):
    return np.stack(
        [v[1] * w[2] - v[2] * w[1], v[2] * w[0] - v[0] * w[2], v[0] * w[1] - v[1] * w[0]]
    )


def stream_function(u: VectorField, region: str = "subbox", order: int = QUAD_ORDER) -> StreamResult:
    """psi(x) = -int_0^1 tau x cross u(tau x) dtau on a lattice region.

    ``region`` is "subbox" (|x_i| <= L/2) or "box".  Samples u(tau x) come from
    exact trigonometric interpolation; the Jacobian of psi is integrated from
    the interpolated derivatives of u, so curl psi needs no differencing.
    """
    g = u.grid
    _require_3d(g)
    ax = g.axis()
    if region == "subbox":
        index = np.flatnonzero(np.abs(ax) <= g.L / 2 + 1e-12)
    elif region == "box":
        index = np.arange(g.N)
    else:
        raise ValueError(f"unknown region {region!r}")
    x1 = ax[index]
    X = np.stack(np.meshgrid(x1, x1, x1, indexing="ij"))
    xi = _freqs(g)
    xi[g.N // 2] = 0.0
    specs = [_full_spectrum(c) for c in u]
    dspecs = []
    for j in range(3):
        shape = [1, 1, 1]
        shape[j] = g.N
        kj = xi.reshape(shape)
        dspecs.append([1j * kj * s for s in specs])
    nodes, weights = np.polynomial.legendre.leggauss(order)
    taus = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    M = len(x1)
    psi = np.zeros((3, M, M, M))
    jac = np.zeros((3, 3, M, M, M))
    for tau, w in zip(taus, weights):
        E = _eval_matrix(g, tau * x1)
        uu = np.stack([_eval_separable(s, E) for s in specs])
        psi -= w * tau * _levi(X, uu)
        for j in range(3):
            du = np.stack([_eval_separable(s, E) for s in dspecs[j]])
            ej = np.zeros(3)
            ej[j] = 1.0
            ej_cross = np.stack([ej[1] * uu[2] - ej[2] * uu[1], ej[2] * uu[0] - ej[0] * uu[2], ej[0] * uu[1] - ej[1] * uu[0]])
            jac[j] -= w * (tau * ej_cross + tau**2 * _levi(X, du))
    target = np.stack([c.values[np.ix_(index, index, index)] for c in u])
    return StreamResult(x1, index, psi, jac, target)


def _point_eval(specs, grid: Grid, pts: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of several spectra at arbitrary points."""
    xi = _freqs(grid)
    xi[grid.N // 2] = 0.0
    out = np.zeros((len(specs), len(pts)))
    for n, p in enumerate(pts):
        e = [np.exp(1j * xi * (p[a] + grid.L)) / grid.N for a in range(3)]
        for c, s in enumerate(specs):
            out[c, n] = np.einsum("i,j,k,ijk->", e[0], e[1], e[2], s).real
    return out


def stream_at(u: VectorField, points: np.ndarray, order: int = QUAD_ORDER) -> np.ndarray:
    """psi at arbitrary points, shape (npts, 3)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    specs = [_full_spectrum(c) for c in u]
    nodes, weights = np.polynomial.legendre.leggauss(order)
    out = np.zeros((len(points), 3))
    for t, w in zip(0.5 * (nodes + 1), 0.5 * weights):
        vals = _point_eval(specs, u.grid, t * points).T  # (npts, 3)
        out -= w * t * np.cross(points, vals)
    return out


def div_stream_formula(u: VectorField, points: np.ndarray, order: int = QUAD_ORDER) -> np.ndarray:
    """int_0^1 tau^2 x . (curl u)(tau x) dtau at the given points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    w_curl = curl(u)
    specs = [_full_spectrum(c) for c in w_curl]
    nodes, weights = np.polynomial.legendre.leggauss(order)
    out = np.zeros(len(points))
    for t, w in zip(0.5 * (nodes + 1), 0.5 * weights):
        vals = _point_eval(specs, u.grid, t * points).T
        out += w * t**2 * np.einsum("ni,ni->n", points, vals)
    return out


@dataclass
class DivStreamReport:
    points: np.ndarray
    finite_difference: np.ndarray
    formula: np.ndarray
    max_abs: float
    relative: float

    @property
    def passed(self) -> bool:
        return self.relative <= 1e-4


def div_stream_check(u: VectorField, points: np.ndarray | None = None, h: float = 1e-3, seed: int = 0) -> DivStreamReport:
    """Central-difference divergence of psi against the quadrature formula."""
    g = u.grid
    if points is None:
        rng = np.random.default_rng(seed)
        points = rng.uniform(-g.L / 2, g.L / 2, size=(6, 3))
    points = np.atleast_2d(np.asarray(points, dtype=float))
    fd = np.zeros(len(points))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd += (stream_at(u, points + e)[:, j] - stream_at(u, points - e)[:, j]) / (2 * h)
    formula = div_stream_formula(u, points)
    err = float(np.abs(fd - formula).max())
    scale = max(float(np.abs(formula).max()), u.sup())
    return DivStreamReport(points, fd, formula, err, err / scale if scale > 0 else err)


# ---------------------------------------------------------- initial data


def box_sobolev_norm(f, s: int) -> float:
    """(sum_{|alpha| <= s} ||D^alpha f||_{L^2(box)}^2)^{1/2}, via Parseval."""
    comps = list(f) if isinstance(f, VectorField) else [f]
    g = comps[0].grid
    k = g.wavevector(odd_safe=False)
    from .littlewood_paley import multi_indices_upto

    weight = np.zeros(g.spectral_shape)
    for a in multi_indices_upto(g.dim, s):
        term = np.ones(g.spectral_shape)
        for kk, p in zip(k, a):
            term = term * kk ** (2 * p)
        weight = weight + term
    mult = np.full(g.N // 2 + 1, 2.0)
    mult[0] = 1.0
    if g.N % 2 == 0:
        mult[-1] = 1.0
    total = 0.0
    for c in comps:
        total += float((weight * mult * np.abs(c.spectrum) ** 2).sum())
    return float(np.sqrt(total * g.cell_volume / g.N**g.dim))


@dataclass
class PreparedData:
    n: int
    m_n: int
    u: VectorField
    forms_gap: float  # sup |form_1 - form_2| / sup |form_2|
    divergence: float  # sup |div u| / sup |grad u| after projection
    spectral_curl_gap: float  # against S_m curl(phi psi) by spectral differentiation
    hs_ul: float
    hs_ul_input: float

    @property
    def ratio(self) -> float:
        return self.hs_ul / self.hs_ul_input if self.hs_ul_input > 0 else 0.0


def _cutoff_field(grid: Grid, n: float):
    r = grid.radius()
    phi = cutoff(r, n)
    dphi = cutoff_derivatives(r, n)[1]
    rs = np.where(r > 0, r, 1.0)
    grad_phi = [np.where(r > 0, dphi * c / rs, 0.0) for c in grid.coords()]
    return ScalarField(grid, phi), VectorField.from_arrays(grid, grad_phi)


def low_pass_identity_level(family: DyadicFamily) -> int:
    """Smallest m with S_m equal to the identity on the grid."""
    m = 0
    while not np.all(family.low_pass_multiplier(m) == 1.0):
        m += 1
    return m


def choose_m_n(phi_psi: VectorField, n: int, family: DyadicFamily, s: int) -> int:
    """Smallest m with ||curl(S_k(phi psi) - phi psi)||_{H^s} <= 1/n for all k >= m."""
    top = low_pass_identity_level(family)
    c = curl(phi_psi)
    m = top
    for k in range(top, -1, -1):
        err = box_sobolev_norm(low_pass(c, k, family) - c, s)
        if err > 1.0 / n:
            break
        m = k
    return m


def prepare_initial_data(
    u0: VectorField,
    n: int,
    family: DyadicFamily,
    m_n: int | None = None,
    s: int = 3,
    lam: float = 1.0,
) -> PreparedData:
    """u0_n = S_m(curl(phi_n psi)), computed in both product-rule forms."""
    if n < 1:
        raise ValueError("n must be at least 1")
    g = u0.grid
    _require_3d(g)
    sr = stream_function(u0, region="box")
    psi = VectorField.from_arrays(g, sr.psi)
    curl_psi = VectorField.from_arrays(g, sr.curl)
    phi, grad_phi = _cutoff_field(g, float(n))
    phi_psi = VectorField(phi * c for c in psi)
    if m_n is None:
        m_n = choose_m_n(phi_psi, n, family, s)
    top = low_pass_identity_level(family)
    if m_n > top:
        # beyond the identity level S_m cannot change anything; the grid does not resolve m_n
        raise ValueError(f"m_n={m_n} exceeds the resolvable level {top}")
    gxp = cross(grad_phi, psi)
    form1 = low_pass(VectorField(phi * c for c in curl_psi) + gxp, m_n, family)
    form2 = low_pass(VectorField(phi * c for c in u0), m_n, family) + low_pass(gxp, m_n, family)
    scale = max(form2.sup(), 1e-300)
    gap = (form1 - form2).sup() / scale
    spectral = low_pass(curl(phi_psi), m_n, family)
    out = leray_project(form2)
    grad_scale = max(max(partial(c, a).sup() for c in out for a in range(3)), 1e-300)
    divergence = div(out).sup() / grad_scale
    return PreparedData(
        n,
        m_n,
        out,
        float(gap),
        float(divergence),
        float((spectral - form2).sup() / scale),
        hs_ul(out, s, lam),
        hs_ul(u0, s, lam),
    )


# ---------------------------------------------------------------- pressure


def _tensor(u: VectorField):
    return [[u[i] * u[j] for j in range(3)] for i in range(3)]


def divdiv(M) -> ScalarField:
    g = M[0][0].grid
    k = g.wavevector(odd_safe=False)
    s = sum(-k[i] * k[j] * M[i][j].spectrum for i in range(3) for j in range(3))
    return ScalarField.from_spectrum(g, s)


def pressure_gradient(u: VectorField, ks: KernelSet) -> VectorField:
    """grad p = -(a K) * divdiv(u u) - sum_ij (d_i d_j L) * (u_i u_j)."""
    M = _tensor(u)
    near = near_grad_potential_3d(divdiv(M), ks)
    far = far_T_contract(M, ks)
    return -1.0 * (near + far)


def pressure_spectral(u: VectorField) -> ScalarField:
    """p with -Delta p = divdiv(u u), zero mean."""
    g = u.grid
    M = _tensor(u)
    k = g.wavevector(odd_safe=False)
    k2 = sum(c**2 for c in k)
    inv = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    q = sum(k[i] * k[j] * M[i][j].spectrum for i in range(3) for j in range(3))
    return ScalarField.from_spectrum(g, -q * inv)


def pressure_gradient_spectral(u: VectorField) -> VectorField:
    p = pressure_spectral(u)
    return VectorField(partial(p, a) for a in range(3))


@dataclass
class PressureReport:
    oracle_gap: float
    lambda_gap: float
    curl_ratio: float
    sup: float
    c1_ratio: float


def pressure_report(u: VectorField, ks: KernelSet, ks2: KernelSet) -> PressureReport:
    gp = pressure_gradient(u, ks)
    gp2 = pressure_gradient(u, ks2)
    ref = pressure_gradient_spectral(u)
    scale = max(ref.sup(), 1e-300)
    c = curl(gp)
    hess = max(partial(gp[i], a).sup() for i in range(3) for a in range(3))
    c1 = c_tilde_norm(u, 1)
    return PressureReport(
        (gp - ref).sup() / scale,
        (gp - gp2).sup() / scale,
        c.sup() / hess if hess > 0 else c.sup(),
        gp.sup(),
        gp.sup() / c1**2 if c1 > 0 else 0.0,
    )


# ------------------------------------------------------------------ stepper


def dealias_mask(grid: Grid) -> np.ndarray:
    k = grid.wavevector()
    cut = (2.0 / 3.0) * grid.nyquist
    m = np.ones(grid.spectral_shape, dtype=bool)
    for c in k:
        m &= np.abs(c) < cut
    return m


@dataclass
class EulerState:
    t: float
    u: VectorField
    omega: VectorField
    p: ScalarField
    acc_T: VectorField  # int_0^t  sum_ij (d_i d_j L^k) * (u_i u_j)
    acc_V: VectorField  # int_0^t  sum_j (d_j div L) * (u^k u_j)


def _state_from_omega(t, omega_hat, mean_u, grid, acc_T, acc_V) -> EulerState:
    om = VectorField(ScalarField.from_spectrum(grid, s) for s in omega_hat)
    u = biot_savart(om, tol=np.inf)
    u = VectorField(c + float(m) for c, m in zip(u, mean_u))
    return EulerState(t, u, om, pressure_spectral(u), acc_T, acc_V)


def _vort_rhs(omega_hat, mean_u, grid, mask):
    om = VectorField(ScalarField.from_spectrum(grid, s) for s in omega_hat)
    u = biot_savart(om, tol=np.inf)
    u = VectorField(c + float(m) for c, m in zip(u, mean_u))
    prod = cross(u, om)  # u x omega
    ph = [c.spectrum * mask for c in prod]
    k = grid.wavevector(odd_safe=True)
    return [
        1j * (k[1] * ph[2] - k[2] * ph[1]),
        1j * (k[2] * ph[0] - k[0] * ph[2]),
        1j * (k[0] * ph[1] - k[1] * ph[0]),
    ]


def far_integrand(u: VectorField, ks: KernelSet):
    T = far_T_contract(_tensor(u), ks)
    V = VectorField(far_V_contract(VectorField(u[k] * c for c in u), ks) for k in range(3))
    return T, V


def energy(u: VectorField) -> float:
    return float(sum((c.values**2).sum() for c in u) * u.grid.cell_volume)


def initial_state(u0: VectorField) -> EulerState:
    g = u0.grid
    z = VectorField.zeros(g, 3)
    return EulerState(0.0, u0, curl(u0), pressure_spectral(u0), z, z)


def step_euler3d(state: EulerState, dt: float, ks: KernelSet | None = None) -> EulerState:
    """One RK4 step of d/dt omega = curl(u x omega), 2/3 dealiased."""
    g = state.u.grid
    if g.N > 32:
        raise ValueError("the vorticity stepper is meant for N <= 32")
    mask = dealias_mask(g)
    mean_u = state.u.mean()
    w0 = [c.spectrum for c in state.omega]
    k1 = _vort_rhs(w0, mean_u, g, mask)
    k2 = _vort_rhs([a + 0.5 * dt * b for a, b in zip(w0, k1)], mean_u, g, mask)
    k3 = _vort_rhs([a + 0.5 * dt * b for a, b in zip(w0, k2)], mean_u, g, mask)
    k4 = _vort_rhs([a + dt * b for a, b in zip(w0, k3)], mean_u, g, mask)
    w1 = [a + dt / 6.0 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(w0, k1, k2, k3, k4)]
    acc_T, acc_V = state.acc_T, state.acc_V
    new = _state_from_omega(state.t + dt, w1, mean_u, g, acc_T, acc_V)
    if ks is not None:
        T0, V0 = far_integrand(state.u, ks)
        T1, V1 = far_integrand(new.u, ks)
        new.acc_T = acc_T + 0.5 * dt * (T0 + T1)
        new.acc_V = acc_V + 0.5 * dt * (V0 + V1)
    e0, e1 = energy(state.u), energy(new.u)
    if e0 > 0 and (e1 - e0) / e0 > 0.01 * dt:
        raise InstabilityError(f"energy grew by {(e1 - e0) / e0:.3e} in one step")
    return new


@dataclass
class EulerTrajectory:
    dt: float
    states: list = field(default_factory=list)
    steps: list = field(default_factory=list)  # (t, ||u||_C1, ||u||_inf)

    @property
    def times(self):
        return [s.t for s in self.states]


def run_euler3d(u0: VectorField, T: float, dt: float, ks: KernelSet | None = None, output_every: int = 1) -> EulerTrajectory:
    if T > 0.25 + 1e-12:
        raise ValueError("T must not exceed 0.25 for the vorticity stepper")
    nsteps = int(round(T / dt))
    state = initial_state(u0)
    traj = EulerTrajectory(dt, [state], [(0.0, c_tilde_norm(u0, 1), u0.sup())])
    for n in range(nsteps):
        state = step_euler3d(state, dt, ks)
        traj.steps.append((state.t, c_tilde_norm(state.u, 1), state.u.sup()))
        if (n + 1) % output_every == 0 or n + 1 == nsteps:
            traj.states.append(state)
    return traj


def serfati3d_velocity(state: EulerState, u0: VectorField, omega0: VectorField, ks: KernelSet) -> VectorField:
    """u0 + [n(t) - n(0)] + acc_T - acc_V with n = -(a K) x omega."""
    dn = near_cross_3d(state.omega - omega0, ks)
    return u0 + dn + state.acc_T - state.acc_V


def serfati3d_residual(traj: EulerTrajectory, ks: KernelSet) -> list:
    """(t, relative sup residual) at each stored time."""
    s0 = traj.states[0]
    out = []
    for st in traj.states:
        rebuilt = serfati3d_velocity(st, s0.u, s0.omega, ks)
        scale = max(st.u.sup(), 1e-300)
        out.append((st.t, float((rebuilt - st.u).sup() / scale)))
    return out


# ---------------------------------------------------------- IBP identities


@dataclass
class IbpReport:
    curl_identity: float  # relative gap of the u x curl v identity
    transport_identity: float  # relative gap of the (u . grad u) . V identity


def _integral(f: ScalarField) -> float:
    return float(f.values.sum() * f.grid.cell_volume)


def _rel(a: np.ndarray, b: np.ndarray, scale: float) -> float:
    gap = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    return gap / scale if scale > 0 else gap


def ibp_identity_suite(u: VectorField, v: VectorField, V: VectorField | None = None) -> IbpReport:
    """Both sides of two integration-by-parts identities by lattice quadrature.

    int u x curl v = int ( -(grad u) . v + (div u) v ), with (grad u . v)_i = sum_j d_i u_j v_j;
    int (u . grad u) . V = -int (u . grad V) . u for divergence-free u.
    """
    if V is None:
        V = v
    cv = curl(v)
    lhs1 = np.array([_integral(c) for c in cross(u, cv)])
    du = div(u)
    rhs_terms = [
        sum((partial(u[j], i) * v[j] for j in range(3)), ScalarField.constant(u.grid)) * -1.0 + du * v[i]
        for i in range(3)
    ]
    rhs1 = np.array([_integral(t) for t in rhs_terms])
    # scale by the integrands, not the integrals: both sides may vanish
    absint = sum(np.abs(c.values).sum() for c in cross(u, cv)) * u.grid.cell_volume
    absint_rhs = sum(np.abs(t.values).sum() for t in rhs_terms) * u.grid.cell_volume
    scale1 = max(absint, absint_rhs, np.abs(rhs1).max(), np.abs(lhs1).max())

    ug = [sum((u[j] * partial(u[i], j) for j in range(3)), ScalarField.constant(u.grid)) for i in range(3)]
    lhs2 = _integral(sum((ug[i] * V[i] for i in range(3)), ScalarField.constant(u.grid)))
    uV = [sum((u[j] * partial(V[i], j) for j in range(3)), ScalarField.constant(u.grid)) for i in range(3)]
    rhs2 = -_integral(sum((uV[i] * u[i] for i in range(3)), ScalarField.constant(u.grid)))
    scale2 = max(
        sum(np.abs((ug[i] * V[i]).values).sum() for i in range(3)) * u.grid.cell_volume, abs(lhs2), abs(rhs2)
    )
    return IbpReport(_rel(lhs1, rhs1, scale1), _rel(lhs2, rhs2, scale2))


# ---------------------------------------------------------------- monitors


def euler_norm_series(traj: EulerTrajectory, s: int = 3, lam: float = 1.0) -> dict:
    out = {"t": [], "u_hs": [], "omega_hs": [], "u_sup": []}
    for st in traj.states:
        out["t"].append(st.t)
        out["u_hs"].append(hs_ul(st.u, s, lam))
        out["omega_hs"].append(hs_ul(st.omega, s - 1, lam))
        out["u_sup"].append(st.u.sup())
    ts = np.array([a for a, _, _ in traj.steps])
    integrand = np.array([c1 * (us**2 + 1.0) for _, c1, us in traj.steps])
    cum = np.zeros_like(ts)
    if len(ts) > 1:
        cum[1:] = np.cumsum(0.5 * np.diff(ts) * (integrand[1:] + integrand[:-1]))
    out["integral"] = [float(np.interp(t, ts, cum)) for t in out["t"]]
    return out


def calibrate_euler(series: dict) -> dict:
    w = np.asarray(series["omega_hs"]) ** 2
    I = np.asarray(series["integral"])
    base = 1.0 + w[0]
    c_gr = 0.0
    for wi, ii in zip(w[1:], I[1:]):
        if ii > 0 and wi > base:
            c_gr = max(c_gr, float(np.log(wi / base) / ii))
    den = np.asarray(series["omega_hs"]) + np.asarray(series["u_sup"])
    c_uo = float(np.max(np.asarray(series["u_hs"]) / np.where(den > 0, den, np.inf)))
    return {"euler_gronwall": c_gr, "euler_uomega": c_uo}


@dataclass
class BoundReport:
    rows: list  # (t, name, lhs, rhs, ratio)
    max_ratio: dict

    def worst(self) -> float:
        return max(self.max_ratio.values()) if self.max_ratio else 0.0


def uomega_bound_check(traj: EulerTrajectory, s: int = 3, lam: float = 1.0, constants: dict | None = None) -> BoundReport:
    series = euler_norm_series(traj, s, lam)
    if constants is None:
        constants = {k: frozen.get(k) for k in ("euler_gronwall", "euler_uomega")}
    rows = []
    base = 1.0 + series["omega_hs"][0] ** 2
    for t, w, i in zip(series["t"], series["omega_hs"], series["integral"]):
        rhs = base * np.exp(constants["euler_gronwall"] * i)
        rows.append((t, "vorticity_gronwall", w * w, float(rhs), float(w * w / rhs)))
    for t, uh, w, us in zip(series["t"], series["u_hs"], series["omega_hs"], series["u_sup"]):
        rhs = constants["euler_uomega"] * (w + us)
        rows.append((t, "velocity_from_vorticity", uh, rhs, uh / rhs if rhs > 0 else 0.0))
    worst = {}
    for r in rows:
        worst[r[1]] = max(worst.get(r[1], 0.0), r[4])
    return BoundReport(rows, worst)


# ---------------------------------------------------------------- data


def shear_flow(grid: Grid) -> VectorField:
    x = grid.coords()
    return VectorField.from_arrays(grid, [np.sin(x[1]), np.zeros(grid.shape), np.zeros(grid.shape)])


def taylor_green(grid: Grid) -> VectorField:
    x = grid.coords()
    return VectorField.from_arrays(
        grid,
        [np.cos(x[0]) * np.sin(x[1]), -np.sin(x[0]) * np.cos(x[1]), np.zeros(grid.shape)],
    )


def random_solenoidal(grid: Grid, seed: int, kmax: float = 2.0, rms: float = 0.3, mean=(0.0, 0.0, 0.0)) -> VectorField:
    """Random divergence-free band-limited field, zero mean unless ``mean`` is given."""
    from .fields import random_band_limited

    rng = np.random.default_rng(seed)
    raw = VectorField(random_band_limited(grid, kmax, rng, rms=1.0) for _ in range(3))
    v = leray_project(raw)
    s = np.sqrt(np.mean(sum(c.values**2 for c in v)) / 3.0)
    return VectorField(c * (rms / s) + float(m) for c, m in zip(v, mean))
