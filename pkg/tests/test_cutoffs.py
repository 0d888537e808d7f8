import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from serfati_flows.cutoffs import bump, chi_profile, cutoff, cutoff_derivatives, smooth_step


def test_cutoff_plateaus():
    r = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
    assert np.array_equal(cutoff(r), [1.0, 1.0, 1.0, 0.0, 0.0])


def test_chi_profile_plateaus():
    assert chi_profile(0.6) == 1.0 and chi_profile(5 / 6) == 0.0


@given(st.floats(0.5, 4), st.floats(0, 10), st.floats(0, 10))
def test_cutoff_monotone(lam, a, b):
    lo, hi = sorted((a, b))
    assert cutoff(lo, lam) >= cutoff(hi, lam)


@given(st.floats(0.01, 0.99))
def test_ramp_is_antisymmetric(s):
    # h(1 + s) + h(2 - s) = 1 on the ramp of the unit cutoff
    assert smooth_step(1 + s, 1, 2) + smooth_step(2 - s, 1, 2) == pytest.approx(1.0, abs=1e-14)


@given(st.floats(1.05, 1.95), st.floats(0.5, 2))
def test_derivatives_match_finite_differences(s, lam):
    r = s * lam
    h = 1e-5 * lam
    _, d1, d2 = cutoff_derivatives(r, lam)
    fd1 = (cutoff(r + h, lam) - cutoff(r - h, lam)) / (2 * h)
    fd2 = (cutoff(r + h, lam) - 2 * cutoff(r, lam) + cutoff(r - h, lam)) / h**2
    assert d1 == pytest.approx(fd1, rel=1e-5, abs=1e-6 / lam)
    assert d2 == pytest.approx(fd2, rel=1e-3, abs=1e-3 / lam**2)


def test_bump_matches_cutoff():
    r = np.linspace(0, 5, 101)
    assert np.array_equal(bump(r, 1.5), cutoff(r, 1.5))
