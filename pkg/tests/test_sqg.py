import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from serfati_flows import sqg
from serfati_flows.fields import ScalarField, VectorField, div, grad, make_grid, random_band_limited
from serfati_flows.kernels import build_kernel_set
from serfati_flows.littlewood_paley import build_dyadic_family

seeds = st.integers(0, 2**31 - 1)
G = make_grid(2, 8 * np.pi, 64)
KS = build_kernel_set(G, 1.0)
FAM = build_dyadic_family(G)
CONSTANTS = {"sqg_shorttime": 1.0, "sqg_gronwall": 0.02, "sqg_velocity_hsul": 1.0}


def test_constitutive_law_of_sine():
    u = sqg.constitutive_spectral(sqg.sine_initial(G))
    assert u[0].sup() <= 1e-15
    assert np.max(np.abs(u[1].values - np.cos(G.coords()[0]))) <= 1e-13


def test_constitutive_law_of_constant():
    assert sqg.constitutive_spectral(ScalarField.constant(G, 4.0)).sup() == 0.0


def test_radial_data_gives_tangential_velocity():
    # periodic images break radial symmetry at order (width / L)^5
    g = make_grid(2, 16 * np.pi, 256)
    th = sqg.radial_initial(g, width=1.0)
    u = sqg.constitutive_spectral(th)
    assert u.dot(grad(th)).sup() <= 1e-8


def test_radial_symmetry_defect_shrinks_with_box():
    defect = []
    for L, N in ((8 * np.pi, 128), (16 * np.pi, 256)):
        th = sqg.radial_initial(make_grid(2, L, N))
        defect.append(sqg.constitutive_spectral(th).dot(grad(th)).sup())
    assert defect[1] <= defect[0] / 16


@given(seeds)
def test_velocity_divergence_free_and_isometric(seed):
    th = random_band_limited(G, 2.0, np.random.default_rng(seed), mean=0.4)
    u = sqg.constitutive_spectral(th)
    assert div(u).sup() <= 1e-12 * max(1.0, th.sup())
    l2 = lambda a: np.sqrt(np.mean(a**2))
    assert l2(np.hypot(u[0].values, u[1].values)) == pytest.approx(l2(th.values - th.mean()), rel=1e-12)


def test_transport_with_zero_velocity_is_identity():
    th = sqg.random_initial(G, 1)
    assert sqg.transport_step(th, VectorField.zeros(G), 0.05) is th


def _translation_error(N):
    g = make_grid(2, np.pi, N)
    th = ScalarField.from_function(g, lambda x, y: np.sin(x))
    u = VectorField([ScalarField.constant(g, 1.0), ScalarField.constant(g, 0.0)])
    dt = 0.05
    out = sqg.transport_step(th, u, dt)
    return np.max(np.abs(out.values - np.sin(g.coords()[0] - dt)))


def test_constant_velocity_translates():
    e32, e64 = _translation_error(32), _translation_error(64)
    assert e64 <= 1e-4
    assert e64 <= e32 / 8  # cubic interpolation: fourth order in dx


@given(seeds, st.floats(0.001, 0.1))
def test_transport_keeps_bounds_and_mean(seed, dt):
    rng = np.random.default_rng(seed)
    th = random_band_limited(G, 2.0, rng, mean=0.3)
    u = VectorField(random_band_limited(G, 1.0, rng, rms=2.0) for _ in range(2))
    out = sqg.transport_step(th, u, dt)
    scale = th.osc()
    assert out.values.max() <= th.values.max() + 1e-12 * scale
    assert out.values.min() >= th.values.min() - 1e-12 * scale
    assert out.mean() == pytest.approx(th.mean(), abs=1e-14 * max(1.0, abs(th.mean())))


def test_large_step_rejected():
    with pytest.raises(ValueError):
        sqg.transport_step(sqg.sine_initial(G), sqg.constitutive_spectral(sqg.sine_initial(G)), 0.2)


def test_serfati_velocity_at_time_zero_is_exact():
    th = sqg.random_initial(G, 5)
    u0 = sqg.constitutive_spectral(th)
    state = sqg.SqgState(0.0, th, u0, VectorField.zeros(G), th, u0)
    assert (sqg.serfati_velocity(state, KS) - u0).sup() == 0.0


def test_stale_accumulator_detected():
    th = sqg.random_initial(G, 5)
    u0 = sqg.constitutive_spectral(th)
    state = sqg.SqgState(0.5, th, u0, VectorField.zeros(G), th, u0, acc_time=0.25)
    with pytest.raises(sqg.StaleAccumulator):
        sqg.serfati_velocity(state, KS, dt=0.01)


def test_run_rejects_bad_arguments():
    th = sqg.random_initial(G, 0)
    with pytest.raises(ValueError):
        sqg.run_sqg(th, 0.1, 0.03, family=FAM, ks=KS)
    with pytest.raises(ValueError):
        sqg.run_sqg(th, 0.1, 0.01, "euler", family=FAM, ks=KS)


def test_short_time_halt():
    th = sqg.sine_initial(G)
    with pytest.raises(sqg.BlowUpHalt):
        sqg.run_sqg(th, 1.0, 1 / 32, ks=KS, family=FAM, short_time_C=1.0)


@given(st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_short_time_denominator_decreases_in_T(a, b):
    th = sqg.sine_initial(G)
    u = sqg.constitutive_spectral(th)
    lo, hi = sorted((a, b))
    d = lambda T: sqg.short_time_denominator(th, u, T, FAM, 1.5, 1.0)
    assert d(lo) >= d(hi)


@pytest.mark.parametrize("mode", ["spectral", "serfati"])
def test_sine_is_steady(mode):
    th = sqg.sine_initial(G)
    tr = sqg.run_sqg(th, 1.0, 1 / 32, mode, ks=KS, family=FAM, output_every=32, short_time_C=0.0)
    assert (tr.states[-1].theta - th).sup() <= 1e-5


def test_radial_is_steady():
    g = make_grid(2, 8 * np.pi, 128)
    th = sqg.radial_initial(g)
    tr = sqg.run_sqg(th, 1.0, 1 / 32, "serfati", output_every=32, short_time_C=0.0)
    assert (tr.states[-1].theta - th).sup() <= 1e-4 * th.sup()
    # the identity returns u0 for all t on steady data
    assert max(r for _, r in tr.identity_residual) <= 1e-4


def test_modes_agree_on_small_data():
    th = sqg.random_initial(G, 23)
    a = sqg.run_sqg(th, 0.5, 1 / 64, "spectral", ks=KS, family=FAM, output_every=32)
    b = sqg.run_sqg(th, 0.5, 1 / 64, "serfati", ks=KS, family=FAM, output_every=32)
    assert (a.states[-1].theta - b.states[-1].theta).sup() <= 1e-3
    assert max(r for _, r in a.identity_residual) <= 1e-3


def test_runs_are_deterministic():
    th = sqg.random_initial(G, 4)
    a = sqg.run_sqg(th, 0.125, 1 / 64, ks=KS, family=FAM)
    b = sqg.run_sqg(th, 0.125, 1 / 64, ks=KS, family=FAM)
    assert np.array_equal(a.states[-1].theta.values, b.states[-1].theta.values)


# ---------------------------------------------------------------- Picard


def test_ledger_is_append_only():
    led = sqg.IterationLedger(1.5)
    led.append(sqg.LedgerRow(1, 1.0, 1.0, None))
    with pytest.raises(ValueError):
        led.append(sqg.LedgerRow(1, 1.0, 1.0, 0.5))
    with pytest.raises(ValueError):
        led.append(sqg.LedgerRow(2, 1.0, 1.0, -1.0))


def test_picard_first_iterate_and_steady_sine():
    th = sqg.sine_initial(G)
    led = sqg.picard_iterate(th, None, 3, 0.25, 1 / 32, FAM, KS)
    assert led.theta1_error == 0.0
    assert [r.n for r in led.rows] == [1, 2, 3]
    assert (led.final_theta - th).sup() <= 1e-5


def test_picard_contracts_on_small_data():
    th = sqg.random_initial(G, 8, rms=0.05)
    led = sqg.picard_iterate(th, None, 5, 0.25, 1 / 32, FAM, KS)
    D = led.D()
    assert all(D[n + 1] < D[n] for n in range(3, 5))


# ---------------------------------------------------------------- monitors


def test_zero_data_has_zero_monitor_lhs():
    z = ScalarField.constant(G, 0.0)
    tr = sqg.run_sqg(z, 0.125, 1 / 32, ks=KS, family=FAM)
    rep = sqg.estimate_monitors(tr, FAM, constants=CONSTANTS)
    assert all(r.lhs == 0.0 for r in rep.rows)


def test_steady_gronwall_ratio_at_most_one():
    th = sqg.sine_initial(G)
    tr = sqg.run_sqg(th, 0.5, 1 / 32, ks=KS, family=FAM, output_every=4, short_time_C=0.0)
    rep = sqg.estimate_monitors(tr, FAM, constants=CONSTANTS)
    assert rep.max_ratio["gronwall_hsul"] <= 1.0 + 1e-9


def test_lp_residual_vanishes_in_spectral_mode():
    th = sqg.random_initial(G, 11)
    tr = sqg.run_sqg(th, 0.25, 1 / 32, ks=KS, family=FAM, output_every=4)
    assert sqg.lp_constitutive_residual(tr, FAM) <= 1e-8


def test_calibrated_constants_make_monitors_hold():
    th = sqg.random_initial(G, 12, rms=0.1)
    tr = sqg.run_sqg(th, 0.5, 1 / 32, ks=KS, family=FAM, output_every=2, short_time_C=0.0)
    series = sqg.sqg_norm_series(tr, FAM, 1.5, 3, 1.0)
    rows = sqg.monitor_rows_sqg(series, sqg.calibrate_sqg(series))
    assert max(r.ratio for r in rows) <= 1.0 + 1e-12
