"""Named verification suites.

Every suite is a function returning a list of :class:`Verdict`.  Suites
``partition`` through ``prepare`` are the ten acceptance checks (numbered by
``Suite.criterion``); the ``*-invariants`` suites cover module-level
properties.  Parameters default to the acceptance settings; the CLI can
override grid and time parameters for the 3D suites.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import euler3d, frozen, sqg
from ..fields import (
    ScalarField,
    VectorField,
    curl,
    dft_roundtrip,
    div,
    grad,
    make_grid,
    parseval_sides,
    partial,
    random_band_limited,
    shift,
)
from ..kernels import (
    build_kernel_set,
    constitutive_split,
    far_conv_contract,
    kernel_symmetry_error,
    near_conv_perp,
)
from ..littlewood_paley import (
    PHI_INNER,
    PHI_OUTER,
    bernstein_bracket,
    build_dyadic_family,
    lp_block,
    partition_error,
)
from ..ul_spaces import hs_ul, hs_ul_norm, lp_ul_norm
from . import corpus
from .verdict import Verdict

STRICTLY_BELOW_ONE = float(np.nextafter(1.0, 0.0))
SQG_L = 8 * np.pi
EULER_L = 2 * np.pi


@dataclass(frozen=True)
class Suite:
    name: str
    title: str
    fn: Callable
    criterion: int | None = None
    budget: float | None = None  # wall-clock seconds


def _v(suite, anchor, measured, threshold):
    return Verdict(suite, anchor, float(measured), float(threshold))


# ------------------------------------------------------------ 1 partition


def suite_partition(count: int = 100, N: int = 256, seed: int = 11) -> list:
    g = make_grid(2, SQG_L, N)
    fam = build_dyadic_family(g)
    rng = np.random.default_rng(seed)
    kmax = 0.99 * PHI_INNER * 2.0 ** (fam.j_max + 1)
    worst = 0.0
    for _ in range(count):
        f = random_band_limited(g, kmax, rng, rms=1.0, mean=rng.normal())
        total = sum((lp_block(f, j, fam) for j in fam.blocks()), ScalarField.constant(g))
        worst = max(worst, (total - f).sup() / f.sup())
    return [
        _v("partition", "block sum reconstructs band-limited fields", worst, 1e-10),
        _v("partition", "frequency-side partition of unity", partition_error(fam), 1e-12),
    ]


# ------------------------------------------------------------ 2 Bernstein


def suite_bernstein(per_block: int = 50, N: int = 256, seed: int = 12) -> list:
    g = make_grid(2, SQG_L, N)
    rng = np.random.default_rng(seed)
    violations = 0
    checked = 0
    for j in range(4):
        lo, hi = PHI_INNER * 2.0**j, PHI_OUTER * 2.0**j
        for _ in range(per_block):
            f = random_band_limited(g, hi, rng, kmin=lo)
            for k in (1, 2):
                rep = bernstein_bracket(f, j, k)
                checked += 1
                violations += 0 if rep.holds else 1
    return [_v("bernstein", f"L2 Bernstein bracket violations ({checked} checks)", violations, 0)]


# ------------------------------------------------------------ 3 kernels


def suite_kernels(count: int = 20, N: int = 256, seed: int = 13) -> list:
    g = make_grid(2, SQG_L, N)
    rng = np.random.default_rng(seed)
    thetas = [random_band_limited(g, g.nyquist / 2, rng) for _ in range(count)]
    out = []
    l1 = {}
    for lam in (1.0, 2.0):
        ks = build_kernel_set(g, lam)
        l1[lam] = ks.l1["far"]
        worst = 0.0
        for th in thetas:
            ref = sqg.constitutive_spectral(th)
            worst = max(worst, (constitutive_split(th, ks) - ref).sup() / ref.sup())
        out.append(_v("kernels", f"near+far reassembly, lambda={lam:g}", worst, 1e-4))
    ratio = l1[1.0] / l1[2.0]
    out.append(_v("kernels", "far-kernel L1 halves when lambda doubles", abs(ratio / 2.0 - 1.0), 0.3))
    return out


# ------------------------------------------------------------ 4 SQG identity


def _sqg_reference(N, T, dt, seed, lam=1.0, rms=0.05, kmax=1.0, output_every=None):
    g = make_grid(2, SQG_L, N)
    theta0 = sqg.random_initial(g, seed, kmax=kmax, rms=rms)
    ks = build_kernel_set(g, lam)
    fam = build_dyadic_family(g)
    every = output_every or max(1, int(round(0.125 / dt)))
    return sqg.run_sqg(theta0, T, dt, "spectral", lam, ks=ks, family=fam, output_every=every), ks, fam


def suite_sqg_identity(N: int = 256, T: float = 0.5, seed: int = 14) -> list:
    fine, _, _ = _sqg_reference(N, T, 1.0 / N, seed)
    coarse, _, _ = _sqg_reference(N // 2, T, 2.0 / N, seed)
    worst = max(r for _, r in fine.identity_residual)
    drop = coarse.identity_residual[-1][1] / max(fine.identity_residual[-1][1], 1e-300)
    return [
        _v("sqg-identity", "identity residual along spectral run", worst, 1e-3),
        _v("sqg-identity", "inverse residual drop under dx,dt halving", 1.0 / drop, 1.0 / 3.0),
    ]


# ------------------------------------------------------------ 5 Picard


PICARD_SETTINGS = dict(N=128, T=1.0, dt=1.0 / 64, rms=0.2, kmax=1.0, seed=3, n_max=8)


def run_picard(N=128, T=1.0, dt=1.0 / 64, rms=0.2, kmax=1.0, seed=3, n_max=8, lam=1.0):
    g = make_grid(2, SQG_L, N)
    fam = build_dyadic_family(g)
    ks = build_kernel_set(g, lam)
    theta0 = sqg.random_initial(g, seed, kmax=kmax, rms=rms)
    return sqg.picard_iterate(theta0, None, n_max, T, dt, fam, ks)


def suite_picard(**kw) -> list:
    params = {**PICARD_SETTINGS, **kw}
    led = run_picard(**params)
    D = led.D()
    ns = [n for n in range(3, params["n_max"] + 1)]
    worst_step = max(D[n + 1] / D[n] for n in ns[:-1])
    return [
        _v("picard", "first iterate equals S_2 theta0", led.theta1_error, 0.0),
        _v("picard", "D_n strictly decreasing, 3<=n<=8 (max ratio)", worst_step, STRICTLY_BELOW_ONE),
        _v("picard", "D_8 / D_3", D[ns[-1]] / D[3], 0.1),
        _v("picard", "converged iterate is a fixed point", led.fixed_point_change, 1e-6),
    ]


# ------------------------------------------------------------ 6 monitors


TRAJECTORY_MONITORS = (
    "shorttime",
    "gronwall_hsul",
    "velocity_hsul",
    "vorticity_gronwall",
    "velocity_from_vorticity",
)


def suite_monitors(seeds=corpus.TEST_SEEDS) -> list:
    constants = frozen.load()
    worst = {}
    for seed in seeds:
        run = corpus.corpus_run(seed, with_prepare=False)
        for k, v in corpus.monitor_ratios(run, constants).items():
            if k in TRAJECTORY_MONITORS:
                worst[k] = max(worst.get(k, 0.0), v)
    return [_v("monitors", f"{k} on test corpus", worst[k], 1.05) for k in TRAJECTORY_MONITORS]


# ------------------------------------------------------------ 7 stream


def suite_stream(count: int = 20, N: int = 32, L: float = EULER_L, seed: int = 17) -> list:
    g = make_grid(3, L, N)
    worst = 0.0
    origin = 0.0
    for i in range(count):
        u = euler3d.random_solenoidal(g, seed * 100 + i, kmax=2.0, mean=np.random.default_rng(i).normal(size=3) * 0.1)
        sr = euler3d.stream_function(u)
        worst = max(worst, sr.curl_error())
        origin = max(origin, float(np.abs(sr.at_origin()).max()))
    rng = np.random.default_rng(seed)
    c = rng.normal(size=3)
    const = VectorField.from_arrays(g, [np.full(g.shape, ci) for ci in c])
    pts = rng.uniform(-L / 2, L / 2, size=(8, 3))
    closed = -0.5 * np.cross(pts, c)
    gap = float(np.abs(euler3d.stream_at(const, pts) - closed).max())
    return [
        _v("stream", "curl psi = u on |x|<=L/2", worst, 1e-4),
        _v("stream", "psi(0) = 0", origin, 0.0),
        _v("stream", "constant field closed form", gap, 1e-12),
    ]


# ------------------------------------------------------------ 8 pressure


def suite_pressure(N: int = 32, L: float = EULER_L, lam: float | None = None) -> list:
    g = make_grid(3, L, N)
    lam = lam or L / 16
    ks, ks2 = build_kernel_set(g, lam), build_kernel_set(g, 2 * lam)
    tg = euler3d.pressure_report(euler3d.taylor_green(g), ks, ks2)
    sh = euler3d.pressure_report(euler3d.shear_flow(g), ks, ks2)
    rnd = euler3d.pressure_report(euler3d.random_solenoidal(g, 18), ks, ks2)
    return [
        _v("pressure", "Taylor-Green vs spectral Poisson oracle", tg.oracle_gap, 1e-3),
        _v("pressure", "lambda vs 2 lambda", max(tg.lambda_gap, rnd.lambda_gap), 1e-4),
        _v("pressure", "shear flow has no pressure gradient", sh.sup, 1e-4),
        _v("pressure", "curl of grad p (relative)", max(tg.curl_ratio, rnd.curl_ratio), 1e-6),
    ]


# ------------------------------------------------------------ 9 Serfati 3D


def run_euler_reference(N=32, L=EULER_L, T=0.25, dt=1.0 / 64, seed=19, lam=None, rms=0.3, output_every=4):
    g = make_grid(3, L, N)
    ks = build_kernel_set(g, lam or L / 16)
    u0 = euler3d.random_solenoidal(g, seed, kmax=2.0, rms=rms)
    return euler3d.run_euler3d(u0, T, dt, ks, output_every), ks


def suite_serfati3d(N: int = 32, L: float = EULER_L, T: float = 0.25, dt: float = 1.0 / 64, seed: int = 19, pairs: int = 20) -> list:
    traj, ks = run_euler_reference(N, L, T, dt, seed)
    res = max(r for _, r in euler3d.serfati3d_residual(traj, ks))
    g = traj.states[0].u.grid
    ibp1 = ibp2 = 0.0
    for i in range(pairs):
        u = euler3d.random_solenoidal(g, 5000 + 2 * i)
        v = VectorField(random_band_limited(g, 2.0, np.random.default_rng(5001 + 2 * i)) for _ in range(3))
        rep = euler3d.ibp_identity_suite(u, v)
        ibp1, ibp2 = max(ibp1, rep.curl_identity), max(ibp2, rep.transport_identity)
    return [
        _v("serfati3d", "3D velocity identity residual", res, 1e-2),
        _v("serfati3d", "u x curl v integration by parts", ibp1, 1e-10),
        _v("serfati3d", "(u.grad u).V integration by parts", ibp2, 1e-10),
    ]


# ------------------------------------------------------------ 10 prepare


def suite_prepare(seeds=corpus.TEST_SEEDS[:2]) -> list:
    cs = corpus.DEFAULT
    g = make_grid(3, cs.prep_L, cs.prep_N)
    fam = build_dyadic_family(g)
    C = frozen.get("prepare_hsul")
    gap = dv = ratio = 0.0
    for seed in seeds:
        u0 = euler3d.random_solenoidal(g, seed, kmax=1.0, rms=0.3)
        for n in cs.prep_ns:
            pd = euler3d.prepare_initial_data(u0, n, fam, s=cs.s)
            gap, dv, ratio = max(gap, pd.forms_gap), max(dv, pd.divergence), max(ratio, pd.ratio)
    return [
        _v("prepare", "two product-rule forms agree", gap, 1e-10),
        _v("prepare", "prepared data divergence-free", dv, 1e-10),
        _v("prepare", "H^s_ul ratio / frozen constant", ratio / C, 1.0),
    ]


# ------------------------------------------------------------ invariants


def suite_fields_invariants(seed: int = 21) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for dim, N, L in ((2, 128, SQG_L), (3, 32, EULER_L)):
        g = make_grid(dim, L, N)
        f = ScalarField(g, rng.normal(size=g.shape))
        a, b = parseval_sides(f)
        out.append(_v("fields", f"Parseval, {dim}D", abs(a - b) / a, 1e-12))
        out.append(_v("fields", f"DFT roundtrip, {dim}D", (dft_roundtrip(f) - f).sup() / f.sup(), 1e-13))
    return out


def suite_ul_invariants(calibration_seeds=corpus.CALIBRATION_SEEDS, test_seeds=corpus.TEST_SEEDS) -> list:
    """Norm facts plus the frozen inequality constants.

    Inequality ratios and equivalence brackets are re-checked on the
    calibration corpus they were frozen on; the near-kernel Holder bound is
    checked on the disjoint test seeds.
    """
    g = make_grid(2, SQG_L, 128)
    one = ScalarField.constant(g, 1.0)
    out = [_v("ul", "L2_ul of 1 is sqrt(pi)", abs(lp_ul_norm(one).value / np.sqrt(np.pi) - 1), 0.02)]
    f = random_band_limited(g, 1.5, np.random.default_rng(0))
    out.append(_v("ul", "lattice translation invariance", abs(lp_ul_norm(shift(f, (12, 20))).value - lp_ul_norm(f).value), 0.0))
    out.append(_v("ul", "homogeneity |c| scaling", abs(hs_ul(-2.5 * f, 2) - 2.5 * hs_ul(f, 2)) / hs_ul(f, 2), 1e-14))
    out.append(_v("ul", "monotone in s (violations)", sum(hs_ul(f, s + 1) < hs_ul(f, s) for s in range(4)), 0))
    constants = frozen.load()
    worst = {}
    for label, seeds in (("calibration", calibration_seeds), ("test", test_seeds)):
        for seed in seeds:
            for k, v in corpus.ul_measurements(seed).items():
                if (k == "near_perp_cs") != (label == "test"):
                    continue
                r = constants[k] / v if k.startswith("equiv_lo_") else v / constants[k]
                key = (k, label)
                worst[key] = max(worst.get(key, 0.0), r)
    for k, label in sorted(worst):
        out.append(_v("ul", f"{k} on {label} corpus", worst[(k, label)], 1.05))
    return out


def suite_kernel_invariants(seed: int = 22) -> list:
    g = make_grid(2, SQG_L, 256)
    rng = np.random.default_rng(seed)
    th = random_band_limited(g, 4.0, rng)
    out = []
    sets = {lam: build_kernel_set(g, lam) for lam in (0.5, 1.0, 2.0)}
    for lam, ks in sets.items():
        n1 = ks.l1["near"]
        out.append(_v("kernels", f"near L1 within [lam/2, 2 lam], lambda={lam:g}", max(lam / 2 - n1, n1 - 2 * lam), 0.0))
        out.append(_v("kernels", f"kernel parity, lambda={lam:g}", kernel_symmetry_error(ks), 1e-12))
        plateau = g.radius() < lam - g.dx
        far_on_plateau = float(np.abs(ks.far_table[:, :, plateau]).max())
        out.append(_v("kernels", f"far kernel vanishes where cutoff is 1, lambda={lam:g}", far_on_plateau, 0.0))
    a = constitutive_split(th, sets[1.0])
    b = constitutive_split(th, sets[2.0])
    out.append(_v("kernels", "reassembly independent of lambda", (a - b).sup() / a.sup(), 1e-6))
    const = VectorField.from_arrays(g, [np.full(g.shape, 0.7), np.full(g.shape, -0.3)])
    out.append(_v("kernels", "far contraction of a constant field", far_conv_contract(const, sets[1.0]).sup(), 1e-12))
    radial = sqg.radial_initial(g)
    v = near_conv_perp(radial, sets[1.0])
    x = g.coords()
    r = np.maximum(g.radius(), 1e-300)
    radial_part = np.abs((v[0].values * x[0] + v[1].values * x[1]) / r)
    out.append(_v("kernels", "near term of radial data is tangential", radial_part.max(), 1e-8))
    return out


def suite_sqg_invariants(N: int = 128) -> list:
    g = make_grid(2, SQG_L, N)
    ks = build_kernel_set(g, 1.0)
    fam = build_dyadic_family(g)
    out = []
    sine = sqg.sine_initial(g)
    # unit-amplitude data at T=1 lies past the short-time halt; these steady
    # runs switch the halt off (short_time_C=0)
    for mode in ("spectral", "serfati"):
        tr = sqg.run_sqg(sine, 1.0, 1.0 / 32, mode, ks=ks, family=fam, output_every=32, short_time_C=0.0)
        out.append(_v("sqg", f"sine steady over T=1 ({mode})", (tr.states[-1].theta - sine).sup(), 1e-5))
    rad = sqg.radial_initial(g)
    tr = sqg.run_sqg(rad, 1.0, 1.0 / 32, "serfati", ks=ks, family=fam, output_every=32, short_time_C=0.0)
    out.append(_v("sqg", "radial data steady over T=1", (tr.states[-1].theta - rad).sup() / rad.sup(), 1e-4))
    out.append(_v("sqg", "radial: Serfati velocity stays at u0", (tr.states[-1].u - tr.states[0].u).sup() / tr.states[0].u.sup(), 1e-4))
    th0 = sqg.random_initial(g, 23, rms=0.05)
    a = sqg.run_sqg(th0, 0.5, 1.0 / 64, "spectral", ks=ks, family=fam, output_every=8)
    b = sqg.run_sqg(th0, 0.5, 1.0 / 64, "serfati", ks=ks, family=fam, output_every=8)
    c = sqg.run_sqg(th0, 0.5, 1.0 / 64, "serfati", 2.0, family=fam, output_every=8)
    out.append(_v("sqg", "spectral vs serfati theta(T)", (a.states[-1].theta - b.states[-1].theta).sup(), 1e-3))
    out.append(_v("sqg", "lambda vs 2 lambda velocity", (b.states[-1].u - c.states[-1].u).sup() / b.states[-1].u.sup(), 1e-4))
    out.append(_v("sqg", "t=0 velocity reproduced bit-for-bit", (sqg.serfati_velocity(b.states[0], ks) - b.states[0].u).sup(), 0.0))
    out.append(_v("sqg", "LP constitutive residual", sqg.lp_constitutive_residual(a, fam), 1e-8))
    drift = max(abs(st.theta.mean() - th0.mean()) for st in a.states) / 0.5
    out.append(_v("sqg", "mean drift per unit time", drift, 1e-10))
    osc = max(st.theta.osc() for st in a.states)
    out.append(_v("sqg", "max principle: osc(theta(t)) / osc(theta0)", osc / th0.osc(), 1 + 1e-6))
    dv = max(div(st.u).sup() / max(partial(st.u[i], j).sup() for i in range(2) for j in range(2)) for st in a.states)
    out.append(_v("sqg", "velocity divergence-free", dv, 1e-8))
    return out


def suite_euler_invariants(N: int = 32, L: float = EULER_L, seed: int = 24) -> list:
    g = make_grid(3, L, N)
    u = euler3d.random_solenoidal(g, seed)
    ks = build_kernel_set(g, L / 16)
    out = []
    out.append(_v("euler3d", "biot_savart(curl u) = u", (euler3d.biot_savart(curl(u)) - u).sup() / u.sup(), 1e-10))
    out.append(_v("euler3d", "kernel-split Biot-Savart", (euler3d.biot_savart_split(curl(u), ks) - u).sup() / u.sup(), 1e-3))
    sh = euler3d.shear_flow(g)
    tr = euler3d.run_euler3d(sh, 0.25, 1.0 / 32)
    out.append(_v("euler3d", "shear flow steady to T=0.25", (tr.states[-1].u - sh).sup(), 1e-6))
    tr = euler3d.run_euler3d(u, 0.25, 1.0 / 64, output_every=16)
    e0, e1 = euler3d.energy(u), euler3d.energy(tr.states[-1].u)
    out.append(_v("euler3d", "energy conserved over T=0.25", abs(e1 - e0) / e0, 1e-3))
    st = tr.states[-1]
    out.append(_v("euler3d", "omega = curl u after stepping", (st.omega - curl(st.u)).sup() / st.omega.sup(), 1e-8))
    gmax = max(partial(st.u[i], j).sup() for i in range(3) for j in range(3))
    out.append(_v("euler3d", "velocity divergence-free", div(st.u).sup() / gmax, 1e-8))
    ds = euler3d.div_stream_check(u)
    out.append(_v("euler3d", "div psi against its quadrature formula", ds.relative, 1e-4))
    u2 = euler3d.random_solenoidal(g, seed + 1)
    lin = euler3d.stream_function(u + u2).psi - euler3d.stream_function(u).psi - euler3d.stream_function(u2).psi
    out.append(_v("euler3d", "stream function is linear", float(np.abs(lin).max()), 1e-12))
    C = frozen.get("pressure_c1")
    worst = max(corpus.pressure_ratio(s) for s in corpus.TEST_SEEDS[:4]) / C
    out.append(_v("euler3d", "grad p bounded by C ||u||_C1^2 (test seeds)", worst, 1.05))
    return out


# ------------------------------------------------------------ registry


SUITES = {
    s.name: s
    for s in (
        Suite("partition", "Partition of unity and reconstruction", suite_partition, 1, 30.0),
        Suite("bernstein", "L2 Bernstein bracket", suite_bernstein, 2, 30.0),
        Suite("kernels", "Kernel reassembly and L1 scaling", suite_kernels, 3, 60.0),
        Suite("sqg-identity", "SQG velocity identity along a reference run", suite_sqg_identity, 4, 180.0),
        Suite("picard", "Picard scheme", suite_picard, 5, 180.0),
        Suite("monitors", "Short-time and Gronwall monitors", suite_monitors, 6, 300.0),
        Suite("stream", "Stream function", suite_stream, 7, 60.0),
        Suite("pressure", "Pressure identity", suite_pressure, 8, 60.0),
        Suite("serfati3d", "3D velocity identity and integration by parts", suite_serfati3d, 9, 180.0),
        Suite("prepare", "Initial-data preparation", suite_prepare, 10, 60.0),
        Suite("fields-invariants", "Transforms", suite_fields_invariants),
        Suite("ul-invariants", "Uniformly local norms", suite_ul_invariants),
        Suite("kernel-invariants", "Kernel tables", suite_kernel_invariants),
        Suite("sqg-invariants", "SQG solver properties", suite_sqg_invariants),
        Suite("euler-invariants", "3D Euler properties", suite_euler_invariants),
    )
}

ACCEPTANCE = [name for name, s in SUITES.items() if s.criterion is not None]
INVARIANTS = [name for name, s in SUITES.items() if s.criterion is None]
GROUPS = {"acceptance": ACCEPTANCE, "invariants": INVARIANTS, "all": ACCEPTANCE + INVARIANTS}


def resolve(selectors) -> list:
    names = []
    for sel in selectors:
        if sel in GROUPS:
            names.extend(GROUPS[sel])
        elif sel in SUITES:
            names.append(sel)
        else:
            raise KeyError(sel)
    seen = set()
    return [n for n in names if not (n in seen or seen.add(n))]


def run_suite(name: str, **kw) -> list:
    """Run one suite; verdicts carry the suite's wall time.  Errors become failed verdicts."""
    t0 = time.perf_counter()
    try:
        verdicts = SUITES[name].fn(**kw)
    except Exception as exc:  # a halted solver is a failed verdict, not a crash
        verdicts = [Verdict(name, f"error: {type(exc).__name__}: {exc}", float("inf"), 0.0)]
    dt = time.perf_counter() - t0
    budget = SUITES[name].budget
    if budget is not None and not kw:
        verdicts = list(verdicts) + [Verdict(name, "wall time in seconds", dt, budget)]
    return [Verdict(v.suite, v.anchor, v.measured, v.threshold, dt) for v in verdicts]
