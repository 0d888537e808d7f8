import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from serfati_flows import euler3d
from serfati_flows.fields import ScalarField, VectorField, curl, div, grad, make_grid, random_band_limited
from serfati_flows.kernels import build_kernel_set
from serfati_flows.littlewood_paley import build_dyadic_family

seeds = st.integers(0, 2**31 - 1)
G = make_grid(3, 2 * np.pi, 16)
G32 = make_grid(3, 2 * np.pi, 32)
KS = build_kernel_set(G, G.L / 16)


def const_field(g, c):
    return VectorField.from_arrays(g, [np.full(g.shape, ci) for ci in c])


# ---------------------------------------------------------------- Biot-Savart


def test_biot_savart_roundtrip_shear():
    u = euler3d.shear_flow(G)
    assert (euler3d.biot_savart(curl(u)) - u).sup() <= 1e-10


def test_biot_savart_of_zero():
    z = VectorField.zeros(G)
    assert euler3d.biot_savart(z).sup() == 0.0


def test_biot_savart_rejects_mean():
    with pytest.raises(euler3d.NonzeroMeanError):
        euler3d.biot_savart(const_field(G, (1.0, 0.0, 0.0)))


@given(seeds)
def test_split_matches_spectral(seed):
    u = euler3d.random_solenoidal(G, seed)
    w = curl(u)
    ref = euler3d.biot_savart(w)
    assert (euler3d.biot_savart_split(w, KS) - ref).sup() <= 1e-3 * ref.sup()


# ---------------------------------------------------------------- stream function


def test_stream_function_constant_field_closed_form():
    u = const_field(G, (0.0, 0.0, 1.0))
    psi = euler3d.stream_at(u, np.array([[1.0, 0.0, 0.0]]))
    assert np.max(np.abs(psi[0] - [0.0, 0.5, 0.0])) <= 1e-12


def test_stream_function_vanishes_at_origin():
    u = euler3d.random_solenoidal(G, 3, mean=(0.1, -0.2, 0.3))
    assert np.all(euler3d.stream_function(u).at_origin() == 0.0)


@given(seeds)
def test_curl_of_stream_function(seed):
    u = euler3d.random_solenoidal(G, seed, mean=(0.05, 0.0, -0.1))
    assert euler3d.stream_function(u).curl_error() <= 1e-4


def test_stream_function_quadrature_converged():
    """Oracle: the same quadrature at double order."""
    u = euler3d.random_solenoidal(G, 8)
    pts = np.random.default_rng(0).uniform(-G.L / 2, G.L / 2, size=(6, 3))
    a = euler3d.stream_at(u, pts)
    b = euler3d.stream_at(u, pts, order=2 * euler3d.QUAD_ORDER)
    assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.abs(b).max())


def test_div_stream_of_constant_is_zero():
    u = const_field(G, (0.3, -1.0, 2.0))
    pts = np.random.default_rng(1).uniform(-2, 2, size=(5, 3))
    assert np.max(np.abs(euler3d.div_stream_formula(u, pts))) <= 1e-12


def test_div_stream_shear_point():
    u = euler3d.shear_flow(G)
    rep = euler3d.div_stream_check(u, np.array([[0.0, 1.0, 0.0]]))
    assert rep.relative <= 1e-4


@given(seeds)
def test_div_stream_random(seed):
    assert euler3d.div_stream_check(euler3d.random_solenoidal(G, seed), seed=seed).relative <= 1e-4


# ---------------------------------------------------------------- prepare


def test_prepare_is_identity_when_cutoff_covers_box():
    g = make_grid(3, 2 * np.pi, 16)
    fam = build_dyadic_family(g)
    u0 = euler3d.random_solenoidal(g, 4, kmax=1.0)
    n = int(np.ceil(g.L * np.sqrt(3))) + 1  # phi_n = 1 on the whole box
    top = euler3d.low_pass_identity_level(fam)
    pd = euler3d.prepare_initial_data(u0, n, fam, m_n=top, s=2, lam=0.5)
    assert (pd.u - u0).sup() <= 1e-10 * u0.sup()


def test_prepared_data_divergence_free():
    g = make_grid(3, 4 * np.pi, 32)
    fam = build_dyadic_family(g)
    u0 = euler3d.random_solenoidal(g, 6, kmax=1.0)
    for n in (1, 2):
        pd = euler3d.prepare_initial_data(u0, n, fam)
        assert pd.divergence <= 1e-10
        assert pd.forms_gap <= 1e-10


def test_prepare_rejects_bad_n():
    fam = build_dyadic_family(G)
    with pytest.raises(ValueError):
        euler3d.prepare_initial_data(euler3d.shear_flow(G), 0, fam)


# ---------------------------------------------------------------- pressure


def test_shear_flow_has_no_pressure_gradient():
    assert euler3d.pressure_gradient(euler3d.shear_flow(G32), build_kernel_set(G32, G32.L / 16)).sup() <= 1e-4


def test_taylor_green_pressure_against_spectral_oracle():
    rep = euler3d.pressure_report(
        euler3d.taylor_green(G32), build_kernel_set(G32, G32.L / 16), build_kernel_set(G32, G32.L / 8)
    )
    assert rep.oracle_gap <= 1e-3
    assert rep.lambda_gap <= 1e-4
    assert rep.curl_ratio <= 1e-6


def test_taylor_green_pressure_closed_form():
    # steady solution: grad p = -(u . grad) u = (sin 2x, sin 2y) / 2
    u = euler3d.taylor_green(G32)
    X, Y, _ = G32.coords()
    gp = euler3d.pressure_gradient_spectral(u)
    assert np.max(np.abs(gp[0].values - 0.5 * np.sin(2 * X))) <= 1e-12
    assert np.max(np.abs(gp[1].values - 0.5 * np.sin(2 * Y))) <= 1e-12
    assert gp[2].sup() <= 1e-12


# ---------------------------------------------------------------- stepper


def test_shear_flow_steady():
    u = euler3d.shear_flow(G)
    tr = euler3d.run_euler3d(u, 0.25, 1 / 32)
    assert (tr.states[-1].u - u).sup() <= 1e-6


def test_energy_conserved():
    u = euler3d.random_solenoidal(G, 9)
    tr = euler3d.run_euler3d(u, 0.25, 1 / 32, output_every=8)
    e0 = euler3d.energy(u)
    assert abs(euler3d.energy(tr.states[-1].u) - e0) <= 1e-3 * e0


def test_stepper_limits():
    u = euler3d.shear_flow(G)
    with pytest.raises(ValueError):
        euler3d.run_euler3d(u, 0.5, 1 / 32)
    with pytest.raises(ValueError):
        euler3d.run_euler3d(euler3d.shear_flow(make_grid(3, 2 * np.pi, 64)), 0.1, 1 / 32)


def test_dealias_mask_two_thirds():
    m = euler3d.dealias_mask(G)
    assert m[0, 0, 0] and not m[G.N // 2 - 1, 0, 0]


# ---------------------------------------------------------------- identity and IBP


def test_serfati_identity_at_time_zero_and_on_shear():
    u = euler3d.shear_flow(G)
    tr = euler3d.run_euler3d(u, 0.25, 1 / 32, KS, output_every=4)
    res = euler3d.serfati3d_residual(tr, KS)
    assert res[0][1] <= 1e-3
    assert max(r for _, r in res) <= 1e-3


def test_serfati_identity_small_data():
    u = euler3d.random_solenoidal(G, 10, rms=0.1)
    tr = euler3d.run_euler3d(u, 0.25, 1 / 32, KS, output_every=4)
    assert max(r for _, r in euler3d.serfati3d_residual(tr, KS)) <= 1e-2


def test_ibp_zero_field():
    z = VectorField.zeros(G)
    rep = euler3d.ibp_identity_suite(z, z)
    assert rep.curl_identity == 0.0 and rep.transport_identity == 0.0


def test_ibp_gradient_test_field():
    u = euler3d.random_solenoidal(G, 11)
    v = grad(random_band_limited(G, 2.0, np.random.default_rng(3)))
    assert curl(v).sup() <= 1e-12
    assert euler3d.ibp_identity_suite(u, v).curl_identity <= 1e-10


@given(seeds)
def test_ibp_random_pairs(seed):
    rng = np.random.default_rng(seed)
    u = euler3d.random_solenoidal(G, seed)
    v = VectorField(random_band_limited(G, 2.0, rng) for _ in range(3))
    rep = euler3d.ibp_identity_suite(u, v)
    assert rep.curl_identity <= 1e-10 and rep.transport_identity <= 1e-10
    assert euler3d.ibp_identity_suite(u, u).transport_identity <= 1e-10


# ---------------------------------------------------------------- monitors


def test_steady_vorticity_monitor_at_most_one():
    tr = euler3d.run_euler3d(euler3d.shear_flow(make_grid(3, 4 * np.pi, 32)), 0.25, 1 / 32, output_every=2)
    rep = euler3d.uomega_bound_check(tr, constants={"euler_gronwall": 0.1, "euler_uomega": 10.0})
    assert rep.max_ratio["vorticity_gronwall"] <= 1.0


def test_random_solenoidal_properties():
    u = euler3d.random_solenoidal(G, 12, mean=(0.5, 0.0, 0.0))
    assert div(u).sup() <= 1e-12
    assert np.allclose(u.mean(), [0.5, 0.0, 0.0], atol=1e-14)
