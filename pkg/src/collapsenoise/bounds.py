"""Collapse-induced momentum diffusion and its detectability bounds.

Detectability means strict dominance of the collapse term over a competing
noise term; the bounds below are the equality crossovers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    G_NEWTON,
    HBAR,
    K_B,
    Material,
    Oscillator,
    ValidationError,
    check_dp_validity,
)
from .dynamics import inverse_susceptibility_magnitude
from .quadrature import integrate, panel_edges

FULL_LORENTZIAN = "full_lorentzian"
FREE_MASS = "free_mass"
SUSCEPTIBILITY_MODES = (FULL_LORENTZIAN, FREE_MASS)
FREE_MASS_MIN_RATIO = 10.0


@dataclass(frozen=True)
class NoiseBudget:
    """Force-noise densities in N^2 s, with where each number came from."""

    D_CSL: float
    D_T: float
    D_DP: float | None = None
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("D_CSL", "D_T", "D_DP"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ValidationError(f"{name} must be >= 0, got {v!r}")


@dataclass(frozen=True)
class BoundReport:
    Lambda_T: float
    Lambda_SQL: float
    omega: float
    susceptibility_mode: str
    Sigma_DP: float | None = None

    @property
    def combined(self):
        """Lambda_T + Lambda_SQL, the sensitivity of a thermal + SQL limited setup."""
        return self.Lambda_T + self.Lambda_SQL

    def detectable(self, lambda_csl):
        return lambda_csl > self.combined


def csl_diffusion(lambda_csl, r_csl, alpha):
    """D_CSL = lambda (hbar/r)^2 alpha."""
    if lambda_csl < 0 or r_csl <= 0 or alpha < 0:
        raise ValidationError("csl_diffusion needs lambda >= 0, r > 0, alpha >= 0")
    return lambda_csl * (HBAR / r_csl) ** 2 * alpha


def thermal_bound(oscillator: Oscillator, alpha, r_csl):
    """Smallest lambda_CSL whose diffusion exceeds 2 gamma m k_B T."""
    if not alpha > 0:
        raise ValidationError("thermal_bound needs alpha > 0")
    return (
        2.0 * r_csl**2 * oscillator.gamma * K_B * oscillator.temperature * oscillator.mass
        / (HBAR**2 * alpha)
    )


def measurement_bound(oscillator: Oscillator, alpha, r_csl, omega, mode=FULL_LORENTZIAN):
    """Smallest lambda_CSL whose diffusion exceeds the SQL term hbar/|chi(omega)|.

    ``free_mass`` replaces 1/|chi| by m omega^2 and is only accepted for
    omega >= 10 Omega.
    """
    if not alpha > 0:
        raise ValidationError("measurement_bound needs alpha > 0")
    if not omega > 0:
        raise ValidationError("measurement frequency must be positive")
    if mode == FULL_LORENTZIAN:
        inv_chi = inverse_susceptibility_magnitude(oscillator, omega)
    elif mode == FREE_MASS:
        if omega < FREE_MASS_MIN_RATIO * oscillator.Omega:
            raise ValidationError(
                f"free_mass mode needs omega >= 10 Omega (omega/Omega = "
                f"{omega / oscillator.Omega:.3g}); use full_lorentzian"
            )
        inv_chi = oscillator.mass * omega**2
    else:
        raise ValidationError(f"unknown susceptibility mode {mode!r}")
    return r_csl**2 * inv_chi / (HBAR * alpha)


def _lattice(material: Material):
    if not material.has_lattice:
        raise ValidationError("DP diffusion needs lattice_constant and nuclear_mass")
    return material.lattice_constant, material.nuclear_mass


def dp_diffusion_lattice(material: Material, mass, sigma_dp):
    """D_DP = G hbar/(6 sqrt(pi)) (a/sigma)^3 rho m for a monoatomic cubic lattice."""
    a, _ = _lattice(material)
    check_dp_validity(sigma_dp, a)
    return G_NEWTON * HBAR / (6.0 * math.sqrt(math.pi)) * (a / sigma_dp) ** 3 * material.density * mass


def dp_diffusion_quadrature(material: Material, mass, sigma_dp, rel_tol=1e-10):
    """Same rate, with the Gaussian integral over q done numerically.

    D_DP = G hbar m_A^2 V / (6 pi^2 a^3) * Int d^3q exp(-sigma^2 q^2), V = m/rho.
    """
    a, m_A = _lattice(material)
    check_dp_validity(sigma_dp, a)
    volume = mass / material.density
    # Int d^3q exp(-s^2 q^2) = (4 pi / s^3) Int_0 u^2 exp(-u^2) du
    val, _ = integrate(lambda u: u * u * np.exp(-u * u), panel_edges(40.0, 1.0), rel_tol)
    gaussian = 4.0 * math.pi * val / sigma_dp**3
    return G_NEWTON * HBAR * m_A**2 * volume / (6.0 * math.pi**2 * a**3) * gaussian


def dp_blur_bound(material: Material, oscillator: Oscillator, omega):
    """Largest detectable DP blur: [G hbar rho / (6 sqrt(pi)(hbar w^2 + 2 gamma k_B T))]^(1/3) a.

    Independent of the mass; the measurement term is the free-mass SQL.
    """
    a, _ = _lattice(material)
    noise = HBAR * omega**2 + 2.0 * oscillator.gamma * K_B * oscillator.temperature
    return (G_NEWTON * HBAR * material.density / (6.0 * math.sqrt(math.pi) * noise)) ** (1.0 / 3.0) * a


def noise_budget(oscillator, alpha, collapse, material=None) -> NoiseBudget:
    D_csl = csl_diffusion(collapse.lambda_csl, collapse.r_csl, alpha)
    labels = {
        "D_CSL": "lambda_CSL (hbar/r_CSL)^2 alpha",
        "D_T": "2 gamma m k_B T (high-temperature bath)",
    }
    D_dp = None
    if material is not None and material.has_lattice and collapse.sigma_dp is not None:
        D_dp = dp_diffusion_lattice(material, oscillator.mass, collapse.sigma_dp)
        labels["D_DP"] = "monoatomic cubic lattice, sigma_DP << a"
    return NoiseBudget(D_csl, oscillator.thermal_diffusion, D_dp, labels)


def bound_report(oscillator, alpha, r_csl, omega, mode=FULL_LORENTZIAN, material=None):
    sigma = None
    if material is not None and material.has_lattice:
        sigma = dp_blur_bound(material, oscillator, omega)
    return BoundReport(
        Lambda_T=thermal_bound(oscillator, alpha, r_csl),
        Lambda_SQL=measurement_bound(oscillator, alpha, r_csl, omega, mode),
        omega=omega,
        susceptibility_mode=mode,
        Sigma_DP=sigma,
    )
