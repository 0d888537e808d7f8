import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from serfati_flows.fields import (
    ScalarField,
    VectorField,
    cross,
    curl,
    dft_roundtrip,
    div,
    grad,
    laplacian,
    leray_project,
    make_grid,
    parseval_sides,
    perp_grad,
    random_band_limited,
    shift,
    spectral_derivative,
)

seeds = st.integers(0, 2**31 - 1)


def test_grid_spacing_2d():
    g = make_grid(2, np.pi, 64)
    assert g.dx == pytest.approx(2 * np.pi / 64, rel=1e-15)


def test_grid_shape_3d():
    assert make_grid(3, np.pi, 16).shape == (16, 16, 16)


@pytest.mark.parametrize("N", [17, 0, -4])
def test_grid_rejects_odd_or_nonpositive(N):
    with pytest.raises(ValueError):
        make_grid(2, np.pi, N)


def test_derivative_of_sine_is_cosine():
    g = make_grid(2, np.pi, 64)
    f = ScalarField.from_function(g, lambda x, y: np.sin(x))
    d = spectral_derivative(f, (1, 0))
    assert np.max(np.abs(d.values - np.cos(g.coords()[0]))) <= 1e-12


@pytest.mark.parametrize("alpha", [(1, 0), (0, 2), (1, 1), (3, 0)])
def test_derivative_of_constant_vanishes(alpha):
    g = make_grid(2, np.pi, 32)
    assert spectral_derivative(ScalarField.constant(g, 2.5), alpha).sup() == 0.0


def test_eigenfunction_second_derivative():
    g = make_grid(2, np.pi, 64)
    f = ScalarField.from_function(g, lambda x, y: np.sin(3 * x) * np.cos(2 * y))
    d = spectral_derivative(f, (2, 0))
    assert np.max(np.abs(d.values + 9 * f.values)) <= 1e-10


def test_curl_of_gradient_vanishes_3d():
    g = make_grid(3, np.pi, 16)
    f = ScalarField.from_function(g, lambda x, y, z: np.sin(x + y))
    assert curl(grad(f)).sup() <= 1e-11


def test_perp_grad_of_radial_gaussian_is_tangential_on_axis():
    g = make_grid(2, 4 * np.pi, 128)
    f = ScalarField.from_function(g, lambda x, y: np.exp(-(x**2 + y**2)))
    v = perp_grad(f)
    iy = g.origin_index()[1]
    # on the positive x axis the gradient is radial, so its perpendicular has no x part
    assert np.max(np.abs(v[0].values[:, iy])) <= 1e-12


@given(seeds)
def test_div_curl_vanishes(seed):
    g = make_grid(3, np.pi, 16)
    rng = np.random.default_rng(seed)
    v = VectorField(random_band_limited(g, 4.0, rng) for _ in range(3))
    assert div(curl(v)).sup() <= 1e-11 * v.sup()


@given(seeds)
def test_parseval(seed):
    g = make_grid(2, 2 * np.pi, 32)
    f = random_band_limited(g, 3.0, np.random.default_rng(seed), mean=0.3)
    a, b = parseval_sides(f)
    assert a == pytest.approx(b, rel=1e-12)


@given(seeds)
def test_fft_roundtrip(seed):
    g = make_grid(2, 2 * np.pi, 32)
    f = ScalarField(g, np.random.default_rng(seed).normal(size=g.shape))
    assert np.max(np.abs(dft_roundtrip(f).values - f.values)) <= 1e-13


@given(seeds, st.integers(-7, 7), st.integers(-7, 7))
def test_shift_commutes_with_derivative(seed, a, b):
    g = make_grid(2, 2 * np.pi, 32)
    f = random_band_limited(g, 4.0, np.random.default_rng(seed))
    lhs = shift(spectral_derivative(f, (1, 0)), (a, b))
    rhs = spectral_derivative(shift(f, (a, b)), (1, 0))
    assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-12 * max(1.0, f.sup())


@given(seeds)
def test_leray_projection_is_divergence_free_and_idempotent(seed):
    g = make_grid(3, np.pi, 16)
    rng = np.random.default_rng(seed)
    v = VectorField(random_band_limited(g, 3.0, rng, mean=0.2) for _ in range(3))
    p = leray_project(v)
    assert div(p).sup() <= 1e-12 * v.sup()
    assert (leray_project(p) - p).sup() <= 1e-13 * v.sup()
    assert np.allclose(p.mean(), v.mean(), atol=1e-14)


@given(seeds)
def test_laplacian_matches_trace_of_hessian(seed):
    g = make_grid(2, 2 * np.pi, 32)
    f = random_band_limited(g, 4.0, np.random.default_rng(seed))
    hess = spectral_derivative(f, (2, 0)) + spectral_derivative(f, (0, 2))
    assert (laplacian(f) - hess).sup() <= 1e-12 * max(1.0, hess.sup())


def test_cross_product_anticommutes(rng):
    g = make_grid(3, np.pi, 16)
    a = VectorField(ScalarField(g, rng.normal(size=g.shape)) for _ in range(3))
    b = VectorField(ScalarField(g, rng.normal(size=g.shape)) for _ in range(3))
    assert (cross(a, b) + cross(b, a)).sup() == 0.0


def test_band_limit_above_nyquist_rejected(rng):
    g = make_grid(2, np.pi, 16)
    with pytest.raises(ValueError):
        random_band_limited(g, 20.0, rng)


def test_random_field_is_resolution_independent():
    coarse, fine = make_grid(2, 2 * np.pi, 32), make_grid(2, 2 * np.pi, 64)
    a = random_band_limited(coarse, 3.0, np.random.default_rng(5))
    b = random_band_limited(fine, 3.0, np.random.default_rng(5))
    assert np.max(np.abs(a.values - b.values[::2, ::2])) <= 1e-12
