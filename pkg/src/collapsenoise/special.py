"""Special functions behind the geometry factors.

Every function accepts scalars or arrays and returns the same shape.
Removable singularities are evaluated by their Taylor series.
"""

import math

import numpy as np
from scipy.special import erf, j1

_SQRT_PI = math.sqrt(math.pi)


def _series_mask(x, threshold):
    x = np.asarray(x, dtype=float)
    return x, np.abs(x) < threshold


def sinc(x):
    """sin(x)/x, unnormalized."""
    x, small = _series_mask(x, 1e-4)
    x2 = x * x
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.sin(x) / x
    series = 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    return np.where(small, series, direct)[()]


def jinc(x):
    """2 J1(x)/x, the transverse form factor of a uniform disc."""
    x, small = _series_mask(x, 1e-4)
    x2 = x * x
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = 2.0 * j1(x) / x
    series = 1.0 - x2 / 8.0 * (1.0 - x2 / 24.0 * (1.0 - x2 / 48.0))
    return np.where(small, series, direct)[()]


# 3 (sin x - x cos x)/x^3 = 3 sum_n (-1)^n x^2n / ((2n+1)! (2n+3))
_SPHERE_COEFFS = [3.0 * (-1) ** n / (math.factorial(2 * n + 1) * (2 * n + 3)) for n in range(12)]


def sphere_profile(x):
    """3 (sin x - x cos x)/x^3.

    The direct form cancels to relative error ~eps/x^2, so the series is
    used well past the usual 1e-4 cut, up to |x| = 0.5.
    """
    x, small = _series_mask(x, 0.5)
    x2 = x * x
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = 3.0 * (np.sin(x) - x * np.cos(x)) / (x2 * x)
    series = np.zeros_like(x)
    for c in reversed(_SPHERE_COEFFS):
        series = series * x2 + c
    return np.where(small, series, direct)[()]


def scaled_bessel_i01(x):
    """Return (exp(-x) I0(x), exp(-x) I1(x)) for x >= 0.

    Power series up to x = 50, Hankel asymptotic series beyond. Avoids the
    overflow of I0, I1 themselves near x ~ 700.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("scaled_bessel_i01 needs finite x >= 0")
    low = x <= 50.0
    out0 = np.empty_like(x)
    out1 = np.empty_like(x)

    xl = np.where(low, x, 0.0)
    q = 0.25 * xl * xl
    t0 = np.ones_like(xl)
    t1 = 0.5 * xl
    s0, s1 = t0.copy(), t1.copy()
    for k in range(1, 150):
        t0 = t0 * q / (k * k)
        t1 = t1 * q / (k * (k + 1))
        s0 += t0
        s1 += t1
    scale = np.exp(-xl)
    out0[low] = (s0 * scale)[low]
    out1[low] = (s1 * scale)[low]

    if not np.all(low):
        xh = np.where(low, 100.0, x)
        pref = 1.0 / np.sqrt(2.0 * math.pi * xh)
        for nu, out in ((0, out0), (1, out1)):
            mu = 4.0 * nu * nu
            term = np.ones_like(xh)
            acc = term.copy()
            for k in range(1, 40):
                term = -term * (mu - (2 * k - 1) ** 2) / (8.0 * k * xh)
                acc += term
            out[~low] = (pref * acc)[~low]
    return out0[()], out1[()]


def gamma_one(xi):
    """Transverse factor of a cuboid edge, xi = b / (sqrt(2) r).

    (2/xi^2) [exp(-xi^2/2) - 1 + sqrt(pi/2) xi erf(xi/sqrt2)], equal to 1 at 0
    and ~ sqrt(2 pi)/xi for large xi.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0):
        raise ValueError("gamma_one needs xi >= 0")
    s2 = 0.5 * xi * xi
    small = s2 < 0.5
    s = np.sqrt(s2)
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = (np.expm1(-s2) + _SQRT_PI * s * erf(s)) / s2
    # sum_n (-1)^n s^2n / (n! (2n+1) (n+1))
    series = np.zeros_like(xi)
    for n in reversed(range(25)):
        series = series * (-s2) + 1.0 / (math.factorial(n) * (2 * n + 1) * (n + 1))
    return np.where(small, series, direct)[()]


def _gamma_perp_coeffs(n_terms=40):
    # exp(-t) I1(t)/t as a power series, then integrated term by term:
    # 1 - exp(-x)(I0 + I1) = int_0^x exp(-t) I1(t)/t dt.
    e = [(-1.0) ** a / math.factorial(a) for a in range(n_terms)]
    b = [0.0] * n_terms
    for j in range(0, n_terms, 2):
        k = j // 2
        b[j] = 1.0 / (2 ** (2 * k + 1) * math.factorial(k) * math.factorial(k + 1))
    c = [sum(e[i] * b[n - i] for i in range(n + 1)) for n in range(n_terms)]
    return [2.0 * cn / (n + 1) for n, cn in enumerate(c)]


_GAMMA_PERP_COEFFS = _gamma_perp_coeffs()


def gamma_perp(xi):
    """Transverse factor of a disc face, xi = R / (sqrt(2) r).

    (2/xi^2) {1 - exp(-xi^2) [I0(xi^2) + I1(xi^2)]}; ~ 2/xi^2 for large xi.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0):
        raise ValueError("gamma_perp needs xi >= 0")
    x = xi * xi
    small = x < 1.0
    e0, e1 = scaled_bessel_i01(np.where(small, 1.0, x))
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = 2.0 * (1.0 - (e0 + e1)) / x
    xs = np.where(small, x, 0.0)
    series = np.zeros_like(xi)
    for c in reversed(_GAMMA_PERP_COEFFS):
        series = series * xs + c
    return np.where(small, series, direct)[()]
