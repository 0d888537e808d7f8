import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from serfati_flows import frozen
from serfati_flows.cutoffs import cutoff
from serfati_flows.fields import ScalarField, VectorField, make_grid, random_band_limited
from serfati_flows.kernels import (
    build_kernel_set,
    constitutive_split,
    far_conv_contract,
    far_fields_3d_at,
    far_kernel_2d_at,
    far_table_check_2d,
    integral_j0,
    kernel_symmetry_error,
    near_conv_perp,
    near_table_check_2d,
)
from serfati_flows.littlewood_paley import build_dyadic_family, holder_norm
from serfati_flows.sqg import constitutive_spectral

seeds = st.integers(0, 2**31 - 1)
G = make_grid(2, 8 * np.pi, 128)
KS = build_kernel_set(G, 1.0)


@pytest.mark.parametrize("x", [0.5, 5.0, 17.0, 40.0, 120.0])
def test_integral_j0_against_quadrature(x):
    ref, _ = integrate.quad(special.j0, 0, x, limit=400)
    assert integral_j0(x) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("lam", [1.0, 2.0])
def test_near_kernel_l1_envelope(lam):
    ks = build_kernel_set(make_grid(2, 8 * np.pi, 256), lam)
    # oracle: int a(|x|) / (2 pi |x|) dx = int_0^{2 lam} a(r) dr
    ref, _ = integrate.quad(lambda r: cutoff(r, lam), 0, 2 * lam)
    assert lam / 2 <= ks.l1["near"] <= 2 * lam
    assert ks.l1["near"] == pytest.approx(ref, rel=0.03)


def test_far_kernel_l1_halves_when_lambda_doubles():
    g = make_grid(2, 8 * np.pi, 256)
    r = build_kernel_set(g, 2.0).l1["far"] / build_kernel_set(g, 1.0).l1["far"]
    assert 0.5 * 0.7 <= r <= 0.5 * 1.3


def test_far_kernel_vanishes_inside_plateau(rng):
    pts = rng.uniform(-1, 1, size=(200, 2)) * 0.7
    assert np.all(far_kernel_2d_at(pts, 1.0) == 0.0)
    pts3 = rng.uniform(-1, 1, size=(200, 3)) * 0.5
    assert all(np.all(np.asarray(a) == 0.0) for a in far_fields_3d_at(pts3, 1.0))


def test_zero_input_gives_zero():
    z = ScalarField.constant(G, 0.0)
    assert near_conv_perp(z, KS).sup() == 0.0
    assert far_conv_contract(VectorField([z, z]), KS).sup() == 0.0


def test_constant_flux_has_no_far_contribution():
    F = VectorField([ScalarField.constant(G, 1.3), ScalarField.constant(G, -0.4)])
    assert far_conv_contract(F, KS).sup() <= 1e-12


def test_radial_input_gives_tangential_output():
    f = ScalarField.from_function(G, lambda x, y: np.exp(-(x**2 + y**2) / 4))
    v = near_conv_perp(f, KS)
    X, Y = G.coords()
    rr = np.hypot(X, Y)
    radial = (v[0].values * X + v[1].values * Y) / np.where(rr > 0, rr, 1)
    sel = rr < 6
    assert np.max(np.abs(radial[sel])) <= 1e-8 * v.sup()


@given(seeds, st.sampled_from([1.0, 2.0]))
def test_reassembly_matches_spectral_law(seed, lam):
    ks = build_kernel_set(G, lam)
    th = random_band_limited(G, 2.0, np.random.default_rng(seed), mean=0.3)
    ref = constitutive_spectral(th)
    assert (constitutive_split(th, ks) - ref).sup() <= 1e-4 * ref.sup()


def test_near_bound_by_holder_norm_frozen():
    C = frozen.get("near_perp_cs")
    fam = build_dyadic_family(G)
    f = random_band_limited(G, 1.5, np.random.default_rng(2024), mean=0.2)
    assert near_conv_perp(f, KS).sup() <= 1.05 * C * holder_norm(f, 1.5, fam).value


def test_sampled_tables_converge_to_multipliers():
    """Point samples alias the cutoff ramp; the gap must shrink under refinement."""
    far, near = [], []
    for N in (64, 128, 256):
        ks = build_kernel_set(make_grid(2, 4 * np.pi, N), 1.0)
        far.append(far_table_check_2d(ks, 1.0)["max_abs"])
        near.append(near_table_check_2d(ks)["max_abs"])
    assert far[1] <= far[0] / 4 and far[2] <= far[1] / 4
    assert near[1] <= near[0] / 3 and near[2] <= near[1] / 3


def test_tables_symmetric():
    assert kernel_symmetry_error(KS) <= 1e-12
    ks3 = build_kernel_set(make_grid(3, 2 * np.pi, 16), np.pi / 8)
    assert kernel_symmetry_error(ks3) <= 1e-12


def test_lambda_too_large_rejected():
    with pytest.raises(ValueError):
        build_kernel_set(make_grid(2, 2 * np.pi, 32), 1.0)


def test_kind_must_match_dimension():
    with pytest.raises(ValueError):
        build_kernel_set(G, 1.0, kind="euler3d")


def test_grid_mismatch_rejected():
    other = make_grid(2, 8 * np.pi, 64)
    with pytest.raises(ValueError):
        near_conv_perp(ScalarField.constant(other, 1.0), KS)
