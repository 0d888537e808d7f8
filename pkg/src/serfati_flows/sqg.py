"""Surface quasi-geostrophic flow: transport, constitutive laws, Picard scheme.

Two velocity routes are available along a run:

* ``spectral``  u = grad^perp (-Delta)^{-1/2} theta by Fourier multiplier;
* ``serfati``   u(t) = u0 + (a Phi) * grad^perp(theta(t) - theta0)
                       - int_0^t far-kernel contraction of (theta u),

with the time integral accumulated by the trapezoid rule.  Transport is
semi-Lagrangian: midpoint backward characteristics and periodic cubic-spline
interpolation, followed by clipping to the previous range (discrete maximum
principle) and a constant shift that restores the mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import frozen
from .fields import Grid, ScalarField, VectorField, apply_multiplier, grad, partial
from .kernels import KernelSet, far_conv_contract, near_conv_perp
from .littlewood_paley import (
    DyadicFamily,
    c_tilde_norm,
    holder_norm,
    low_pass,
    lp_block,
)
from .ul_spaces import hs_ul


class BlowUpHalt(RuntimeError):
    """Raised when the short-time denominator falls to 0.1 or below."""


class StaleAccumulator(RuntimeError):
    pass


# ------------------------------------------------------------ constitutive law


def constitutive_multipliers(grid: Grid):
    k1, k2 = grid.wavevector(odd_safe=True)
    mag = grid.kmag()
    inv = np.where(mag > 0, 1.0 / np.where(mag > 0, mag, 1.0), 0.0)
    return -1j * k2 * inv, 1j * k1 * inv


def constitutive_spectral(theta: ScalarField) -> VectorField:
    m1, m2 = constitutive_multipliers(theta.grid)
    return VectorField([apply_multiplier(theta, m1), apply_multiplier(theta, m2)])


# ------------------------------------------------------------------ transport


class PeriodicSpline:
    """Cubic-spline interpolant of a periodic lattice function."""

    def __init__(self, values: np.ndarray, grid: Grid):
        self.grid = grid
        self.coef = ndimage.spline_filter(values, order=3, mode="grid-wrap")

    def __call__(self, index_coords: np.ndarray) -> np.ndarray:
        out = ndimage.map_coordinates(self.coef, index_coords, order=3, mode="grid-wrap", prefilter=False)
        return out.reshape(index_coords.shape[1:])


def _index_grid(grid: Grid) -> np.ndarray:
    return np.stack(np.meshgrid(*([np.arange(grid.N, dtype=float)] * grid.dim), indexing="ij"))


def departure_points(u_mid: VectorField, dt: float, iterations: int = 3) -> np.ndarray:
    """Index coordinates of X(-dt; x) by the implicit midpoint rule."""
    grid = u_mid.grid
    base = _index_grid(grid)
    splines = [PeriodicSpline(c.values, grid) for c in u_mid]
    disp = np.stack([c.values for c in u_mid]) * (dt / grid.dx)
    for _ in range(iterations):
        mid = base - 0.5 * disp
        disp = np.stack([s(mid) for s in splines]) * (dt / grid.dx)
    return base - disp


def transport_step(theta: ScalarField, u: VectorField, dt: float, u_end: VectorField | None = None) -> ScalarField:
    """theta'(x) = theta(X(-dt; x)).

    With ``u_end`` the midpoint velocity is the average of ``u`` and ``u_end``
    (frozen-in-time otherwise).
    """
    if dt > 0.1:
        raise ValueError("dt must not exceed 0.1")
    if u.sup() == 0.0 and (u_end is None or u_end.sup() == 0.0):
        return theta
    u_mid = u if u_end is None else 0.5 * (u + u_end)
    dep = departure_points(u_mid, dt)
    out = PeriodicSpline(theta.values, theta.grid)(dep)
    lo, hi = theta.values.min(), theta.values.max()
    out = np.clip(out, lo, hi)
    return ScalarField(theta.grid, _restore_mean(out, theta.values.mean(), lo, hi))


def _restore_mean(out: np.ndarray, target: float, lo: float, hi: float) -> np.ndarray:
    """Shift ``out`` to mean ``target`` in proportion to the room left below hi (or above lo).

    Interpolation is not conservative.  Weighting the correction by headroom
    keeps every value inside [lo, hi], since lo <= target <= hi.
    """
    gap = target - out.mean()
    if gap == 0.0:
        return out
    room = (hi - out) if gap > 0 else (out - lo)
    avg = room.mean()
    if avg <= 0.0:
        return out
    return out + gap * room / avg


# ------------------------------------------------------------------- Serfati


def vector_product(theta: ScalarField, u: VectorField) -> VectorField:
    return VectorField(theta * c for c in u)


@dataclass
class SqgState:
    t: float
    theta: ScalarField
    u: VectorField
    far_accumulator: VectorField
    theta0: ScalarField
    u0: VectorField
    acc_time: float = 0.0


def serfati_velocity(state: SqgState, ks: KernelSet, dt: float | None = None) -> VectorField:
    tol = 0.5 * dt if dt is not None else 1e-12
    if abs(state.t - state.acc_time) > tol:
        raise StaleAccumulator(f"accumulator at t={state.acc_time}, state at t={state.t}")
    return state.u0 + near_conv_perp(state.theta - state.theta0, ks) - state.far_accumulator


@dataclass
class StepDiagnostics:
    t: float
    u_sup: float
    u_c1: float
    grad_theta_sup: float
    theta_mean: float


@dataclass
class Trajectory:
    mode: str
    dt: float
    lam: float
    states: list = field(default_factory=list)
    steps: list = field(default_factory=list)  # StepDiagnostics every step
    identity_residual: list = field(default_factory=list)  # (t, relative sup residual)

    @property
    def times(self):
        return [s.t for s in self.states]


def _diag(t, theta, u) -> StepDiagnostics:
    return StepDiagnostics(t, u.sup(), c_tilde_norm(u, 1), grad(theta).sup(), theta.mean())


def short_time_denominator(theta0: ScalarField, u0: VectorField, T: float, family: DyadicFamily, r: float, C: float) -> float:
    A = u0.sup() + holder_norm(theta0, r, family).value
    return 1.0 - C * T * A


def run_sqg(
    theta0: ScalarField,
    T: float,
    dt: float,
    mode: str = "spectral",
    lam: float = 1.0,
    *,
    ks: KernelSet | None = None,
    family: DyadicFamily | None = None,
    output_every: int = 1,
    track_identity: bool = True,
    r: float = 1.5,
    short_time_C: float | None = None,
    fixed_point_iterations: int = 3,
) -> Trajectory:
    """Integrate SQG from theta0 to T in ``mode`` in {"spectral", "serfati"}."""
    from .kernels import build_kernel_set
    from .littlewood_paley import build_dyadic_family

    if mode not in ("spectral", "serfati"):
        raise ValueError(f"unknown mode {mode!r}")
    grid = theta0.grid
    if ks is None and (mode == "serfati" or track_identity):
        ks = build_kernel_set(grid, lam)
    if family is None:
        family = build_dyadic_family(grid)
    nsteps = int(round(T / dt))
    if abs(nsteps * dt - T) > 1e-12 * max(1.0, T):
        raise ValueError("T must be an integer multiple of dt")
    u0 = constitutive_spectral(theta0)
    C = frozen.get("sqg_shorttime", default=1.0) if short_time_C is None else short_time_C
    denom = short_time_denominator(theta0, u0, T, family, r, C) if C > 0 else 1.0
    if denom <= 0.1:
        raise BlowUpHalt(f"short-time denominator {denom:.3g} <= 0.1 at T={T}")

    zero = VectorField.zeros(grid)
    state = SqgState(0.0, theta0, u0, zero, theta0, u0, 0.0)
    traj = Trajectory(mode, dt, lam)
    traj.states.append(state)
    traj.steps.append(_diag(0.0, theta0, u0))
    if track_identity and ks is not None:
        traj.identity_residual.append((0.0, _identity_residual(state, ks)))

    u_prev = None
    far_now = far_conv_contract(vector_product(theta0, u0), ks) if ks is not None else None
    theta, u, acc = theta0, u0, zero
    for n in range(nsteps):
        t_next = (n + 1) * dt
        u_mid = u if u_prev is None else 1.5 * u - 0.5 * u_prev
        theta_next = transport_step(theta, u_mid, dt)
        if mode == "spectral":
            u_next = constitutive_spectral(theta_next)
            if ks is not None:
                far_next = far_conv_contract(vector_product(theta_next, u_next), ks)
                acc = acc + 0.5 * dt * (far_now + far_next)
                far_now = far_next
        else:
            guess = u if u_prev is None else 2.0 * u - u_prev
            base = u0 + near_conv_perp(theta_next - theta0, ks)
            for _ in range(fixed_point_iterations):
                far_next = far_conv_contract(vector_product(theta_next, guess), ks)
                guess = base - (acc + 0.5 * dt * (far_now + far_next))
            u_next = guess
            far_next = far_conv_contract(vector_product(theta_next, u_next), ks)
            acc = acc + 0.5 * dt * (far_now + far_next)
            far_now = far_next
        u_prev, u, theta = u, u_next, theta_next
        if not (np.isfinite(u.sup()) and u.sup() < 1e6):
            raise BlowUpHalt(f"velocity blew up at t={t_next}")
        traj.steps.append(_diag(t_next, theta, u))
        if (n + 1) % output_every == 0 or n + 1 == nsteps:
            state = SqgState(t_next, theta, u, acc, theta0, u0, t_next)
            traj.states.append(state)
            if track_identity and ks is not None:
                traj.identity_residual.append((t_next, _identity_residual(state, ks, dt)))
    return traj


def _identity_residual(state: SqgState, ks: KernelSet, dt: float | None = None) -> float:
    us = serfati_velocity(state, ks, dt)
    scale = state.u.sup()
    err = (us - state.u).sup()
    return err / scale if scale > 0 else err


# ---------------------------------------------------------------- Picard


@dataclass
class LedgerRow:
    n: int
    u_sup: float
    theta_cr: float
    D: float | None


@dataclass
class IterationLedger:
    r: float
    rows: list = field(default_factory=list)
    theta1_error: float | None = None
    fixed_point_change: float | None = None
    final_theta: ScalarField | None = None
    final_u: VectorField | None = None

    def append(self, row: LedgerRow):
        if self.rows and row.n <= self.rows[-1].n:
            raise ValueError("ledger rows are append-only and increasing in n")
        if row.D is not None and row.D < 0:
            raise ValueError("D_n must be nonnegative")
        self.rows.append(row)

    def D(self) -> dict:
        return {row.n: row.D for row in self.rows if row.D is not None}


def _picard_sweep(theta_start, u_start, u_prev_traj, dt, ks):
    """One Picard step: transport by frozen u_prev_traj, Serfati velocity update."""
    nsteps = len(u_prev_traj) - 1
    thetas = [theta_start]
    us = [u_start]
    acc = VectorField.zeros(theta_start.grid)
    far_now = far_conv_contract(vector_product(theta_start, u_prev_traj[0]), ks)
    theta = theta_start
    for k in range(nsteps):
        theta = transport_step(theta, u_prev_traj[k], dt, u_end=u_prev_traj[k + 1])
        far_next = far_conv_contract(vector_product(theta, u_prev_traj[k + 1]), ks)
        acc = acc + 0.5 * dt * (far_now + far_next)
        far_now = far_next
        thetas.append(theta)
        us.append(u_start + near_conv_perp(theta - theta_start, ks) - acc)
    return thetas, us


def thetas_first(theta1: ScalarField, nsteps: int) -> list:
    """First iterate: S_2 theta0 held constant in time."""
    return [theta1] * (nsteps + 1)


def picard_iterate(
    theta0: ScalarField,
    u0: VectorField | None,
    n_max: int,
    T: float,
    dt: float,
    family: DyadicFamily,
    ks: KernelSet,
    r: float = 1.5,
    check_fixed_point: bool = True,
) -> IterationLedger:
    """Successive approximations theta^n, u^n; ledger of D_n(T).

    theta^1 = S_2 theta0 and u^1 = S_2 u0 for all t.  For n >= 1,
    theta^{n+1} starts at S_{n+2} theta0 and is transported by the frozen
    u^n; u^{n+1} follows the Serfati update with u^n inside the far term.
    """
    if u0 is None:
        u0 = constitutive_spectral(theta0)
    nsteps = int(round(T / dt))
    theta1 = low_pass(theta0, 2, family)
    u1 = low_pass(u0, 2, family)
    ledger = IterationLedger(r)
    direct = ScalarField.from_spectrum(theta0.grid, theta0.spectrum * family.low_pass_multiplier(2))
    ledger.theta1_error = float(np.max(np.abs(thetas_first(theta1, nsteps)[-1].values - direct.values)))
    thetas = thetas_first(theta1, nsteps)
    us = [u1] * (nsteps + 1)
    ledger.append(LedgerRow(1, us[-1].sup(), holder_norm(thetas[-1], r, family).value, None))
    prev_T = (thetas[-1], us[-1])
    for n in range(1, n_max + (1 if check_fixed_point else 0)):
        start_theta = low_pass(theta0, n + 2, family)
        start_u = low_pass(u0, n + 2, family)
        new_thetas, new_us = _picard_sweep(start_theta, start_u, us, dt, ks)
        if not np.isfinite(new_us[-1].sup()) or new_us[-1].sup() > 1e6:
            raise BlowUpHalt(f"Picard iterate {n + 1} blew up")
        if n + 1 <= n_max:
            eta = new_thetas[-1] - prev_T[0]
            v = new_us[-1] - prev_T[1]
            D = v.sup() + holder_norm(eta, r - 1, family).value
            ledger.append(LedgerRow(n + 1, new_us[-1].sup(), holder_norm(new_thetas[-1], r, family).value, D))
        else:
            change = max(
                max((a - b).sup() for a, b in zip(new_thetas, thetas)),
                max((a - b).sup() for a, b in zip(new_us, us)),
            )
            ledger.fixed_point_change = change
        thetas, us = new_thetas, new_us
        prev_T = (thetas[-1], us[-1])
        if n + 1 == n_max:
            ledger.final_theta, ledger.final_u = thetas[-1], us[-1]
    return ledger


# ---------------------------------------------------------------- monitors


@dataclass
class MonitorRow:
    t: float
    name: str
    lhs: float
    rhs: float
    ratio: float


@dataclass
class MonitorReport:
    rows: list
    max_ratio: dict
    lp_residual: float | None = None

    def worst(self) -> float:
        return max(self.max_ratio.values()) if self.max_ratio else 0.0


def _trapz_cumulative(t, y):
    t = np.asarray(t)
    y = np.asarray(y)
    out = np.zeros_like(y, dtype=float)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def sqg_norm_series(traj: Trajectory, family: DyadicFamily, r: float, s: int, lam: float) -> dict:
    """Norms needed by the monitors at output times, plus the step integrand."""
    out = {"t": [], "u_sup": [], "theta_cr": [], "theta_hs": [], "u_hs": [], "u_c1": []}
    for st in traj.states:
        out["t"].append(st.t)
        out["u_sup"].append(st.u.sup())
        out["theta_cr"].append(holder_norm(st.theta, r, family).value)
        out["theta_hs"].append(hs_ul(st.theta, s, lam))
        out["u_hs"].append(hs_ul(st.u, s, lam))
        out["u_c1"].append(c_tilde_norm(st.u, 1))
    ts = [d.t for d in traj.steps]
    integrand = [d.u_c1 + d.grad_theta_sup for d in traj.steps]
    cum = _trapz_cumulative(ts, integrand)
    out["gronwall_integral"] = [float(np.interp(t, ts, cum)) for t in out["t"]]
    return out


def calibrate_sqg(series: dict) -> dict:
    """Smallest constants making every monitor hold on one run's series."""
    t = np.asarray(series["t"])
    lhs_short = np.maximum.accumulate(np.asarray(series["u_sup"]) + np.asarray(series["theta_cr"]))
    A = lhs_short[0]
    c_short = float(np.max(lhs_short / (A * (1.0 + t * lhs_short)))) if A > 0 else 0.0
    hs2 = np.asarray(series["theta_hs"]) ** 2
    I = np.asarray(series["gronwall_integral"])
    c_gr = 0.0
    for h, i in zip(hs2[1:], I[1:]):
        if i > 0 and hs2[0] > 0 and h > hs2[0]:
            c_gr = max(c_gr, float(np.log(h / hs2[0]) / i))
    den = np.asarray(series["theta_hs"]) + np.asarray(series["u_c1"])
    c_vel = float(np.max(np.where(den > 0, np.asarray(series["u_hs"]) / np.where(den > 0, den, 1), 0.0)))
    return {"sqg_shorttime": c_short, "sqg_gronwall": c_gr, "sqg_velocity_hsul": c_vel}


def monitor_rows_sqg(series: dict, constants: dict) -> list:
    rows = []
    t = series["t"]
    lhs_short = np.maximum.accumulate(np.asarray(series["u_sup"]) + np.asarray(series["theta_cr"]))
    A = lhs_short[0]
    C = constants["sqg_shorttime"]
    for ti, lhs in zip(t, lhs_short):
        den = 1.0 - C * ti * A
        rhs = C * A / den if den > 0 else np.inf
        rows.append(MonitorRow(ti, "shorttime", float(lhs), float(rhs), float(lhs / rhs) if rhs > 0 else 0.0))
    h0 = series["theta_hs"][0] ** 2
    Cg = constants["sqg_gronwall"]
    for ti, h, i in zip(t, series["theta_hs"], series["gronwall_integral"]):
        rhs = h0 * np.exp(Cg * i)
        rows.append(MonitorRow(ti, "gronwall_hsul", h * h, float(rhs), float(h * h / rhs) if rhs > 0 else 0.0))
    Cv = constants["sqg_velocity_hsul"]
    for ti, uh, th, c1 in zip(t, series["u_hs"], series["theta_hs"], series["u_c1"]):
        rhs = Cv * (th + c1)
        rows.append(MonitorRow(ti, "velocity_hsul", uh, rhs, uh / rhs if rhs > 0 else 0.0))
    return rows


def lp_constitutive_residual(traj: Trajectory, family: DyadicFamily) -> float:
    worst = 0.0
    for st in traj.states:
        ref = constitutive_spectral(st.theta)
        for j in family.blocks(homogeneous=True):
            d = lp_block(st.u - ref, j, family, homogeneous=True)
            worst = max(worst, d.sup())
    return worst


def estimate_monitors(
    traj: Trajectory,
    family: DyadicFamily,
    r: float = 1.5,
    s: int = 3,
    lam: float = 1.0,
    constants: dict | None = None,
) -> MonitorReport:
    series = sqg_norm_series(traj, family, r, s, lam)
    if constants is None:
        constants = {k: frozen.get(k) for k in ("sqg_shorttime", "sqg_gronwall", "sqg_velocity_hsul")}
    rows = monitor_rows_sqg(series, constants)
    worst = {}
    for row in rows:
        worst[row.name] = max(worst.get(row.name, 0.0), row.ratio)
    return MonitorReport(rows, worst, lp_constitutive_residual(traj, family))


# ------------------------------------------------------------ initial data


def sine_initial(grid: Grid) -> ScalarField:
    return ScalarField.from_function(grid, lambda x, *rest: np.sin(x))


def radial_initial(grid: Grid, width: float = 2.0, amplitude: float = 1.0) -> ScalarField:
    r2 = grid.radius() ** 2
    return ScalarField(grid, amplitude * np.exp(-r2 / (2 * width**2)))


def random_initial(grid: Grid, seed: int, kmax: float = 1.0, rms: float = 0.05) -> ScalarField:
    from .fields import random_band_limited

    return random_band_limited(grid, kmax, np.random.default_rng(seed), rms=rms)
