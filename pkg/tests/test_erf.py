"""The vectorized erf against the standard library implementation."""
import math

import numpy as np

from segact.erf import erf


def test_matches_math_erf_on_dense_grid():
    x = np.linspace(-30.0, 30.0, 120001)
    expected = np.vectorize(math.erf)(x)
    np.testing.assert_allclose(erf(x), expected, rtol=0.0, atol=1e-13)


def test_matches_math_erf_near_region_boundaries():
    # The rational approximation switches regimes at 0.46875 and 4.
    x = np.concatenate([
        np.linspace(0.46875 - 1e-6, 0.46875 + 1e-6, 101),
        np.linspace(4.0 - 1e-6, 4.0 + 1e-6, 101),
    ])
    x = np.concatenate([x, -x])
    expected = np.vectorize(math.erf)(x)
    np.testing.assert_allclose(erf(x), expected, rtol=0.0, atol=1e-14)


def test_scalar_and_extremes():
    assert erf(0.0) == 0.0
    assert erf(40.0) == 1.0
    assert erf(-40.0) == -1.0
    assert isinstance(erf(1.0), float)
    assert math.isclose(erf(1.0), math.erf(1.0), rel_tol=0, abs_tol=1e-15)


def test_odd_symmetry():
    rng = np.random.default_rng(7)
    x = rng.uniform(0.0, 28.0, 5000)
    np.testing.assert_allclose(erf(-x), -erf(x), rtol=0.0, atol=0.0)
