"""Double-precision error function without external math dependencies.

Vectorized rational-approximation evaluation in three regimes (small
arguments, the transition region, and the far tail).  Absolute error is
below 1e-15 over the whole real line; the test suite checks it against
``math.erf``.
"""
from __future__ import annotations

import numpy as np

_THRESH = 0.46875
_INV_SQRT_PI = 0.5641895835477562869

# |x| <= 0.46875: erf(x) = x * R(x^2)
_A = (
    3.16112374387056560e00,
    1.13864154151050156e02,
    3.77485237685302021e02,
    3.20937758913846947e03,
    1.85777706184603153e-1,
)
_B = (
    2.36012909523441209e01,
    2.44024637934444173e02,
    1.28261652607737228e03,
    2.84423683343917062e03,
)

# 0.46875 < |x| <= 4: erfc(|x|) = exp(-x^2) * R(|x|)
_C = (
    5.64188496988670089e-1,
    8.88314979438837594e00,
    6.61191906371416295e01,
    2.98635138197400131e02,
    8.81952221241769090e02,
    1.71204761263407058e03,
    2.05107837782607147e03,
    1.23033935479799725e03,
    2.15311535474403846e-8,
)
_D = (
    1.57449261107098347e01,
    1.17693950891312499e02,
    5.37181101862009858e02,
    1.62138957456669019e03,
    3.29079923573345963e03,
    4.36261909014324716e03,
    3.43936767414372164e03,
    1.23033935480374942e03,
)

# |x| > 4: erfc(|x|) = exp(-x^2)/|x| * (1/sqrt(pi) - R(1/x^2)/x^2)
_P = (
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
)
_Q = (
    2.56852019228982242e00,
    1.87295284992346047e00,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
)

# erfc underflows to zero in float64 beyond this point.
_ERFC_CUTOFF = 26.543


def _erf_small(x: np.ndarray) -> np.ndarray:
    z = x * x
    num = _A[4] * z
    den = z
    for a, b in zip(_A[:3], _B[:3]):
        num = (num + a) * z
        den = (den + b) * z
    return x * (num + _A[3]) / (den + _B[3])


def _scaled_exp(y: np.ndarray, ratio: np.ndarray) -> np.ndarray:
    # exp(-y^2) split so the large part of the exponent is exact to 1/16.
    ysq = np.floor(y * 16.0) / 16.0
    rest = (y - ysq) * (y + ysq)
    return np.exp(-ysq * ysq) * np.exp(-rest) * ratio


def _erfc_mid(y: np.ndarray) -> np.ndarray:
    num = _C[8] * y
    den = y
    for c, d in zip(_C[:7], _D[:7]):
        num = (num + c) * y
        den = (den + d) * y
    return _scaled_exp(y, (num + _C[7]) / (den + _D[7]))


def _erfc_far(y: np.ndarray) -> np.ndarray:
    z = 1.0 / (y * y)
    num = _P[5] * z
    den = z
    for p, q in zip(_P[:4], _Q[:4]):
        num = (num + p) * z
        den = (den + q) * z
    ratio = (_INV_SQRT_PI - z * (num + _P[4]) / (den + _Q[4])) / y
    return _scaled_exp(y, ratio)


def erf(x):
    """Error function of ``x`` (scalar or array), accurate to float64."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    y = np.abs(x)
    out = np.empty_like(x)

    small = y <= _THRESH
    if small.any():
        out[small] = _erf_small(x[small])

    mid = (y > _THRESH) & (y <= 4.0)
    if mid.any():
        out[mid] = np.sign(x[mid]) * (1.0 - _erfc_mid(y[mid]))

    far = (y > 4.0) & (y <= _ERFC_CUTOFF)
    if far.any():
        out[far] = np.sign(x[far]) * (1.0 - _erfc_far(y[far]))

    saturated = y > _ERFC_CUTOFF
    if saturated.any():
        out[saturated] = np.sign(x[saturated])

    return float(out[0]) if scalar else out
