"""Smooth radial steps built from q(t) = exp(-1/t).

``smooth_step(r, r_in, r_out)`` is exactly 1 for r <= r_in, exactly 0 for
r >= r_out and C-infinity in between.  The same recipe gives the dyadic
profile, the kernel cutoff and the localizing bumps.
"""

from __future__ import annotations

import numpy as np


def _q(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _q1(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    out[pos] = np.exp(-1.0 / tp) / tp**2
    return out


def _q2(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    out[pos] = np.exp(-1.0 / tp) * (1.0 - 2.0 * tp) / tp**4
    return out


def smooth_step(r, r_in: float, r_out: float):
    r = np.asarray(r, dtype=float)
    w = r_out - r_in
    a = _q((r_out - r) / w)
    b = _q((r - r_in) / w)
    return a / (a + b)


def smooth_step_derivatives(r, r_in: float, r_out: float):
    """Return (h, h', h'') in r."""
    r = np.asarray(r, dtype=float)
    w = r_out - r_in
    s = (r - r_in) / w
    A, B = _q(1 - s), _q(s)
    A1, B1 = -_q1(1 - s), _q1(s)
    A2, B2 = _q2(1 - s), _q2(s)
    S = A + B
    h = A / S
    num = A1 * B - A * B1
    h1 = num / S**2
    num1 = A2 * B - A * B2
    S1 = A1 + B1
    h2 = (num1 * S - 2.0 * num * S1) / S**3
    return h, h1 / w, h2 / w**2


# Fourier-side dyadic profile: 1 on [0, 3/5], 0 beyond 5/6.
CHI_INNER = 3.0 / 5.0
CHI_OUTER = 5.0 / 6.0


def chi_profile(r):
    return smooth_step(r, CHI_INNER, CHI_OUTER)


def cutoff(r, lam: float = 1.0):
    """Kernel cutoff a_lam: 1 on |x| <= lam, 0 on |x| >= 2 lam."""
    return smooth_step(np.asarray(r) / lam, 1.0, 2.0)


def cutoff_derivatives(r, lam: float = 1.0):
    h, h1, h2 = smooth_step_derivatives(np.asarray(r) / lam, 1.0, 2.0)
    return h, h1 / lam, h2 / lam**2


def bump(r, lam: float = 1.0):
    """Localizing bump: same profile as the cutoff."""
    return cutoff(r, lam)
