import math

import numpy as np
import pytest

from xcflow import BundleKind, MetricProfile, sinusoid_profile

TWO_PI = 2.0 * math.pi


def make_profile(n=256, period=TWO_PI, f=1.0, g=2.0, t=0.0):
    """Profile with scalar or array f/g samples."""
    f_arr = np.full(n, float(f)) if np.isscalar(f) else np.asarray(f, dtype=float)
    g_arr = np.full(n, float(g)) if np.isscalar(g) else np.asarray(g, dtype=float)
    return MetricProfile(n=n, period=period, t=t, f=f_arr, g=g_arr)


def random_trig_profile(rng, n=None, base_f=1.5, base_g=2.0, amp=0.1, modes=3):
    """Smooth positive periodic profile from a low-order trig polynomial."""
    if n is None:
        n = int(rng.integers(64, 257))
    x = np.arange(n) * (TWO_PI / n)

    def series(base):
        v = np.full(n, base)
        for k in range(1, modes + 1):
            a, b = rng.uniform(-amp / modes, amp / modes, 2)
            v += a * np.sin(k * x) + b * np.cos(k * x)
        return v

    return MetricProfile(n=n, period=TWO_PI, t=0.0, f=series(base_f), g=series(base_g))


@pytest.fixture
def profile_a():
    """Torus test profile: f = 1, g = 2 + 0.1 sin x on the standard grid."""
    return sinusoid_profile(256, TWO_PI, 2.0, 0.1, 1)


@pytest.fixture
def profile_b():
    """Same profile, used under the sphere family."""
    return sinusoid_profile(256, TWO_PI, 2.0, 0.1, 1)


@pytest.fixture(params=[BundleKind.TORUS, BundleKind.SPHERE])
def kind(request):
    return request.param
