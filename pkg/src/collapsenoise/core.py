"""Shared physical constants and value types.

All quantities are SI. Angular frequencies are stored in rad/s; conversion
from Hz happens once, at the configuration boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType


class ValidationError(ValueError):
    """An input violates a documented invariant."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed (non-convergence, non-finite state)."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34
    k_B: float = 1.380649e-23
    G: float = 6.67430e-11
    amu: float = 1.66053906660e-27
    c: float = 299792458.0

    def __post_init__(self):
        for name in ("hbar", "k_B", "G", "amu", "c"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"constant {name} must be positive")


# CODATA 2018; the single instance every module reads from.
CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar
K_B = CONSTANTS.k_B
G_NEWTON = CONSTANTS.G
AMU = CONSTANTS.amu
C_LIGHT = CONSTANTS.c

HIGH_TEMPERATURE_FACTOR = 10.0
MASS_TOLERANCE = 0.05
LATTICE_DENSITY_TOLERANCE = 0.01


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Geometry:
    """Homogeneous rigid body moving along x.

    ``dims`` holds the shape's lengths by name: ``b_x, b_y, b_z`` for a
    cuboid, ``R, d`` for a disc (d is the thickness along the motion axis),
    ``R`` for a sphere, nothing for a point.
    """

    kind: str
    dims: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    _FIELDS = {
        "cuboid": ("b_x", "b_y", "b_z"),
        "disc": ("R", "d"),
        "sphere": ("R",),
        "point": (),
    }

    def __post_init__(self):
        if self.kind not in self._FIELDS:
            raise ValidationError(f"unknown geometry kind {self.kind!r}")
        names = self._FIELDS[self.kind]
        dims = dict(self.dims)
        if set(dims) != set(names):
            raise ValidationError(
                f"{self.kind} needs dimensions {names}, got {tuple(dims)}"
            )
        checked = {n: _positive(f"{self.kind}.{n}", dims[n]) for n in names}
        object.__setattr__(self, "dims", MappingProxyType(checked))

    @classmethod
    def cuboid(cls, b_x, b_y, b_z):
        return cls("cuboid", MappingProxyType({"b_x": b_x, "b_y": b_y, "b_z": b_z}))

    @classmethod
    def cube(cls, b):
        return cls.cuboid(b, b, b)

    @classmethod
    def disc(cls, R, d):
        return cls("disc", MappingProxyType({"R": R, "d": d}))

    @classmethod
    def sphere(cls, R):
        return cls("sphere", MappingProxyType({"R": R}))

    @classmethod
    def point(cls):
        return cls("point")

    def __getattr__(self, name):
        dims = object.__getattribute__(self, "dims")
        if name in dims:
            return dims[name]
        raise AttributeError(name)

    def __hash__(self):
        return hash((self.kind, tuple(self.dims.items())))

    @property
    def is_cube(self):
        return self.kind == "cuboid" and self.b_x == self.b_y == self.b_z

    def volume(self):
        if self.kind == "cuboid":
            return self.b_x * self.b_y * self.b_z
        if self.kind == "disc":
            return math.pi * self.R**2 * self.d
        if self.kind == "sphere":
            return 4.0 / 3.0 * math.pi * self.R**3
        return 0.0

    def lengths(self):
        return tuple(self.dims.values())

    def scaled(self, factor):
        """Same shape with every length multiplied by ``factor``."""
        return Geometry(
            self.kind, MappingProxyType({k: v * factor for k, v in self.dims.items()})
        )

    def __repr__(self):
        inner = ", ".join(f"{k}={v:.6g}" for k, v in self.dims.items())
        return f"Geometry.{self.kind}({inner})"


def geometry_from_mass(kind, mass, density, thickness=None):
    """Body of the given shape whose volume carries ``mass`` at ``density``.

    Cubes and spheres are fixed by the volume alone; a disc keeps its
    ``thickness`` and grows in radius.
    """
    volume = _positive("mass", mass) / _positive("density", density)
    if kind == "cube":
        return Geometry.cube(volume ** (1.0 / 3.0))
    if kind == "sphere":
        return Geometry.sphere((3.0 * volume / (4.0 * math.pi)) ** (1.0 / 3.0))
    if kind == "disc":
        if thickness is None:
            raise ValidationError("a disc sized from its mass needs a thickness")
        return Geometry.disc(math.sqrt(volume / (math.pi * thickness)), thickness)
    raise ValidationError(f"cannot size a {kind!r} from its mass alone")


@dataclass(frozen=True)
class Material:
    density: float
    lattice_constant: float | None = None
    nuclear_mass: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "density", _positive("density", self.density))
        a, m_A = self.lattice_constant, self.nuclear_mass
        if (a is None) != (m_A is None):
            raise ValidationError("lattice_constant and nuclear_mass come together")
        if a is not None:
            a = _positive("lattice_constant", a)
            m_A = _positive("nuclear_mass", m_A)
            object.__setattr__(self, "lattice_constant", a)
            object.__setattr__(self, "nuclear_mass", m_A)
            lattice_density = m_A / a**3
            if abs(lattice_density - self.density) > LATTICE_DENSITY_TOLERANCE * self.density:
                raise ValidationError(
                    f"nuclear_mass/lattice_constant^3 = {lattice_density:.6g} kg/m^3 "
                    f"differs from density {self.density:.6g} kg/m^3 by more than 1%"
                )

    @property
    def has_lattice(self):
        return self.lattice_constant is not None

    @classmethod
    def monoatomic(cls, density, lattice_constant):
        """Lattice material whose nuclear mass is fixed by density and spacing."""
        return cls(density, lattice_constant, density * lattice_constant**3)


@dataclass(frozen=True)
class Oscillator:
    """Center-of-mass mode: mass, angular resonance, damping rate, bath temperature."""

    mass: float
    Omega: float
    gamma: float
    temperature: float

    def __post_init__(self):
        for name in ("mass", "Omega", "gamma", "temperature"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))

    @classmethod
    def from_q(cls, mass, Omega, Q, temperature):
        return cls(mass, Omega, Omega / _positive("Q", Q), temperature)

    @property
    def Q(self):
        return self.Omega / self.gamma

    @property
    def high_temperature_valid(self):
        return K_B * self.temperature >= HIGH_TEMPERATURE_FACTOR * HBAR * self.Omega

    @property
    def thermal_diffusion(self):
        """D_T = 2 gamma m k_B T in N^2 s."""
        return 2.0 * self.gamma * self.mass * K_B * self.temperature


@dataclass(frozen=True)
class Readout:
    """Position transduction g (Hz^1/2 / m) at measurement frequency omega (rad/s).

    Optical constituents are optional; when given they must reproduce ``g``.
    """

    g: float
    omega: float
    wavenumber: float | None = None
    finesse: float | None = None
    photon_flux: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "g", _positive("g", self.g))
        object.__setattr__(self, "omega", _positive("omega", self.omega))
        parts = (self.wavenumber, self.finesse, self.photon_flux)
        if any(p is not None for p in parts):
            if any(p is None for p in parts):
                raise ValidationError("wavenumber, finesse and photon_flux come together")
            g = optical_coupling(*parts)
            if abs(g - self.g) > 1e-12 * self.g:
                raise ValidationError(
                    f"g = {self.g!r} is inconsistent with k sqrt(F Phi) = {g!r}"
                )

    @classmethod
    def from_optics(cls, omega, wavenumber, finesse, power, optical_omega):
        flux = photon_flux(power, optical_omega)
        return cls(optical_coupling(wavenumber, finesse, flux), omega,
                   wavenumber, finesse, flux)


def photon_flux(power, optical_omega):
    return _positive("power", power) / (HBAR * _positive("optical_omega", optical_omega))


def optical_coupling(wavenumber, finesse, flux):
    return _positive("wavenumber", wavenumber) * math.sqrt(
        _positive("finesse", finesse) * _positive("photon_flux", flux)
    )


@dataclass(frozen=True)
class CollapseParams:
    lambda_csl: float = 0.0
    r_csl: float = 1e-7
    sigma_dp: float | None = None

    def __post_init__(self):
        lam = float(self.lambda_csl)
        if not (math.isfinite(lam) and lam >= 0):
            raise ValidationError(f"lambda_csl must be >= 0, got {lam!r}")
        object.__setattr__(self, "lambda_csl", lam)
        object.__setattr__(self, "r_csl", _positive("r_csl", self.r_csl))
        if self.sigma_dp is not None:
            object.__setattr__(self, "sigma_dp", _positive("sigma_dp", self.sigma_dp))


DP_VALIDITY_RATIO = 5.0


def check_dp_validity(sigma_dp, lattice_constant):
    if sigma_dp > lattice_constant / DP_VALIDITY_RATIO:
        raise ValidationError(
            f"sigma_dp = {sigma_dp:.3g} m exceeds a/5 = "
            f"{lattice_constant / DP_VALIDITY_RATIO:.3g} m; lattice formula invalid"
        )


@dataclass(frozen=True)
class ExperimentReport:
    volume: float
    geometric_mass: float
    warnings: tuple[str, ...] = ()


def validate_experiment(geometry, material, oscillator, geometry_carries_mass=True):
    """Cross-check a geometry/material pair against the oscillator mass.

    Raises ``ValidationError`` when the body's mass differs from the
    oscillator mass by more than 5% and ``geometry_carries_mass`` is set.
    """
    warnings = []
    if geometry.kind == "point":
        volume, geometric_mass = 0.0, oscillator.mass
    else:
        volume = geometry.volume()
        geometric_mass = material.density * volume
        mismatch = abs(geometric_mass - oscillator.mass) / oscillator.mass
        if mismatch > MASS_TOLERANCE:
            msg = (
                f"geometric mass {geometric_mass:.4g} kg differs from oscillator "
                f"mass {oscillator.mass:.4g} kg by {100 * mismatch:.1f}%"
            )
            if geometry_carries_mass:
                raise ValidationError(msg)
            warnings.append(msg)
    if not oscillator.high_temperature_valid:
        warnings.append(
            "k_B T < 10 hbar Omega: thermal diffusion 2 gamma m k_B T is outside "
            "its high-temperature regime"
        )
    return ExperimentReport(volume, geometric_mass, tuple(warnings))
