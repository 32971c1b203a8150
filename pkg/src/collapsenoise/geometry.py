"""CSL geometry factor alpha of homogeneous rigid bodies.

alpha = r^5 / (pi^1.5 amu^2) * Int d^3k  k_x^2 exp(-r^2 k^2) |rho~(k)|^2

Three independent routes are provided: closed forms, the large/thin-body
asymptotes, and adaptive quadrature of the defining integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import AMU, Geometry, NumericalError, ValidationError
from .quadrature import integrate, panel_edges
from .special import gamma_one, gamma_perp, jinc, sinc, sphere_profile

__all__ = [
    "AlphaResult",
    "form_factor",
    "gamma_one",
    "gamma_perp",
    "alpha_exact",
    "alpha_asymptotic",
    "alpha_quadrature",
    "alpha",
    "point_limit",
]

ASYMPTOTIC_GUARD = 5.0
# Gaussian weight exp(-u^2) at the cutoff is below exp(-1600).
K_CUTOFF = 40.0


@dataclass(frozen=True)
class AlphaResult:
    alpha: float
    method: str
    estimated_relative_error: float | None = None

    def __float__(self):
        return self.alpha


def point_limit(mass):
    """Supremum (m/amu)^2 / 2, reached by a point mass."""
    return 0.5 * (mass / AMU) ** 2


def _check_mass(mass):
    mass = float(mass)
    if not (math.isfinite(mass) and mass > 0):
        raise ValidationError(f"mass must be positive, got {mass!r}")
    return mass


def form_factor(geometry: Geometry, mass, k):
    """|rho~(k)| in kg for wave vector(s) ``k`` of shape (..., 3), x along motion."""
    k = np.asarray(k, dtype=float)
    if k.shape[-1] != 3:
        raise ValueError("k must have a trailing axis of length 3")
    if not np.all(np.isfinite(k)):
        raise ValueError("k must be finite")
    kx, ky, kz = k[..., 0], k[..., 1], k[..., 2]
    if geometry.kind == "point":
        out = np.full(kx.shape, float(mass))
    elif geometry.kind == "cuboid":
        out = mass * (
            sinc(0.5 * kx * geometry.b_x)
            * sinc(0.5 * ky * geometry.b_y)
            * sinc(0.5 * kz * geometry.b_z)
        )
    elif geometry.kind == "disc":
        kperp = np.hypot(ky, kz)
        out = mass * jinc(kperp * geometry.R) * sinc(0.5 * kx * geometry.d)
    else:
        out = mass * sphere_profile(np.sqrt(kx * kx + ky * ky + kz * kz) * geometry.R)
    return np.abs(out)[()]


def _slab_factor(y):
    # (1 - exp(-y)) / (2y) with y = b^2 / 4r^2; tends to 1/2
    if y < 1e-8:
        return 0.5 - 0.25 * y
    return -math.expm1(-y) / (2.0 * y)


def _sphere_factor(u):
    # [exp(-u) - 1 + u/2 (exp(-u) + 1)] * 6/u^3 with u = R^2/r^2
    if u < 1.0:
        # 3 sum_j (-1)^j (j+1) u^j / (j+3)!
        return 3.0 * sum((-u) ** j * (j + 1) / math.factorial(j + 3) for j in range(30))
    e = math.exp(-u)
    return (e - 1.0 + 0.5 * u * (e + 1.0)) * 6.0 / u**3


def alpha_exact(geometry: Geometry, mass, r_csl) -> AlphaResult:
    """Closed-form geometry factor for cuboid, disc, sphere or point."""
    mass = _check_mass(mass)
    r = float(r_csl)
    if not (math.isfinite(r) and r > 0):
        raise ValidationError("r_csl must be positive")
    m2 = (mass / AMU) ** 2
    s2r = math.sqrt(2.0) * r
    if geometry.kind == "point":
        value = 0.5 * m2
    elif geometry.kind == "cuboid":
        value = (
            m2
            * float(gamma_one(geometry.b_y / s2r))
            * float(gamma_one(geometry.b_z / s2r))
            * _slab_factor(geometry.b_x**2 / (4.0 * r * r))
        )
    elif geometry.kind == "disc":
        value = (
            m2
            * float(gamma_perp(geometry.R / s2r))
            * _slab_factor(geometry.d**2 / (4.0 * r * r))
        )
    else:
        value = m2 * _sphere_factor(geometry.R**2 / r**2)
    return AlphaResult(value, "exact")


def alpha_asymptotic(geometry: Geometry, mass, r_csl) -> AlphaResult:
    """Large-sphere, large-cube and thin-disc limits.

    The density is the mean density m/V. Outside the regime (R, b >= 5 r;
    disc d <= r/5 and R >= 5 r) the call is refused.
    """
    mass = _check_mass(mass)
    r = float(r_csl)
    g = ASYMPTOTIC_GUARD
    if geometry.kind == "sphere":
        if geometry.R < g * r:
            raise ValidationError(
                f"sphere R/r_csl = {geometry.R / r:.3g} < {g}; use alpha_exact"
            )
        rho = mass / geometry.volume()
        value = 16.0 * math.pi**2 * rho**2 * r**4 * geometry.R**2 / (3.0 * AMU**2)
    elif geometry.kind == "cuboid":
        if not geometry.is_cube:
            raise ValidationError("asymptotic form exists for cubes only; use alpha_exact")
        b = geometry.b_x
        if b < g * r:
            raise ValidationError(f"cube b/r_csl = {b / r:.3g} < {g}; use alpha_exact")
        rho = mass / geometry.volume()
        value = 8.0 * math.pi * rho**2 * r**4 * b**2 / AMU**2
    elif geometry.kind == "disc":
        if geometry.d > r / g or geometry.R < g * r:
            raise ValidationError(
                f"disc d/r_csl = {geometry.d / r:.3g}, R/r_csl = {geometry.R / r:.3g} "
                f"outside the thin-disc regime (d <= r/{g}, R >= {g} r); use alpha_exact"
            )
        rho = mass / geometry.volume()
        value = 2.0 * math.pi**2 * rho**2 * r**2 * geometry.d**2 * geometry.R**2 / AMU**2
    else:
        raise ValidationError("no asymptotic form for a point mass; use alpha_exact")
    return AlphaResult(value, "asymptotic")


# Dimensionless radial/axial integrals, u = k r_csl, beta = length / r_csl.


def _along_motion(beta, tol):
    # (2/sqrt(pi)) Int_0^K u^2 exp(-u^2) sinc^2(u beta/2) du ; -> 1/2 as beta -> 0
    edges = panel_edges(K_CUTOFF, 2.0 * math.pi / beta)
    val, err = integrate(
        lambda u: u * u * np.exp(-u * u) * sinc(0.5 * u * beta) ** 2, edges, tol
    )
    c = 2.0 / math.sqrt(math.pi)
    return c * val, c * err


def _transverse_edge(beta, tol):
    # (2/sqrt(pi)) Int_0^K exp(-u^2) sinc^2(u beta/2) du ; -> 1 as beta -> 0
    edges = panel_edges(K_CUTOFF, 2.0 * math.pi / beta)
    val, err = integrate(lambda u: np.exp(-u * u) * sinc(0.5 * u * beta) ** 2, edges, tol)
    c = 2.0 / math.sqrt(math.pi)
    return c * val, c * err


def _transverse_disc(rho_ratio, tol):
    # 2 Int_0^K u exp(-u^2) jinc^2(u R/r) du ; the k_perp plane in polar form
    edges = panel_edges(K_CUTOFF, math.pi / rho_ratio)
    val, err = integrate(lambda u: u * np.exp(-u * u) * jinc(u * rho_ratio) ** 2, edges, tol)
    return 2.0 * val, 2.0 * err


def _sphere_radial(rho_ratio, tol):
    # (4/(3 sqrt(pi))) Int_0^K u^4 exp(-u^2) profile^2(u R/r) du, using Int dOmega k_x^2 = 4 pi k^2/3
    edges = panel_edges(K_CUTOFF, math.pi / rho_ratio)
    val, err = integrate(
        lambda u: u**4 * np.exp(-u * u) * sphere_profile(u * rho_ratio) ** 2, edges, tol
    )
    c = 4.0 / (3.0 * math.sqrt(math.pi))
    return c * val, c * err


def _point(tol):
    edges = panel_edges(K_CUTOFF, 1.0)
    val, err = integrate(lambda u: u**4 * np.exp(-u * u), edges, tol)
    c = 4.0 / (3.0 * math.sqrt(math.pi))
    return c * val, c * err


def alpha_quadrature(geometry: Geometry, mass, r_csl, rel_tol=1e-8) -> AlphaResult:
    """Adaptive Gauss-Kronrod evaluation of the defining k-space integral.

    A cuboid factorizes into three 1-D integrals, a disc into the axial
    integral times a polar integral over k_perp, a sphere into one radial
    integral. The reported error combines the factors' estimates.
    """
    mass = _check_mass(mass)
    rel_tol = float(rel_tol)
    if not 1e-12 <= rel_tol <= 1e-3:
        raise ValidationError("rel_tol must lie in [1e-12, 1e-3]")
    r = float(r_csl)
    tol = rel_tol / 4.0
    if geometry.kind == "point":
        factors = [_point(tol)]
    elif geometry.kind == "cuboid":
        factors = [
            _along_motion(geometry.b_x / r, tol),
            _transverse_edge(geometry.b_y / r, tol),
            _transverse_edge(geometry.b_z / r, tol),
        ]
    elif geometry.kind == "disc":
        factors = [_along_motion(geometry.d / r, tol), _transverse_disc(geometry.R / r, tol)]
    else:
        factors = [_sphere_radial(geometry.R / r, tol)]
    value = (mass / AMU) ** 2
    rel_err = 0.0
    for v, e in factors:
        value *= v
        rel_err += e / abs(v)
    if rel_err > rel_tol:
        raise NumericalError(
            f"alpha quadrature error {rel_err:.3g} exceeds {rel_tol:.3g}", estimate=value
        )
    return AlphaResult(value, "quadrature", rel_err)


_METHODS = {
    "exact": alpha_exact,
    "asymptotic": alpha_asymptotic,
    "quadrature": alpha_quadrature,
}


def alpha(geometry, mass, r_csl, method="exact") -> AlphaResult:
    try:
        fn = _METHODS[method]
    except KeyError:
        raise ValidationError(f"unknown alpha method {method!r}") from None
    return fn(geometry, mass, r_csl)
