"""TOML experiment and sweep configurations.

Files are flat tables (``[geometry]``, ``[material]``, ``[oscillator]``,
``[readout]``, ``[collapse]``, ``[analysis]`` plus optional ``[simulation]``,
``[reference]``; sweeps add ``[sweep]``, ``[axis1]``, ``[axis2]``). Unknown
keys are rejected. See docs/config.md for the full schema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import (
    C_LIGHT,
    CollapseParams,
    Geometry,
    Material,
    Oscillator,
    Readout,
    ValidationError,
    geometry_from_mass,
    validate_experiment,
)
from .dynamics import CHANNELS, sql_coupling
from .bounds import SUSCEPTIBILITY_MODES
from .spectral import WelchConfig

TWO_PI = 2.0 * math.pi

_SECTIONS = {
    "geometry": {"shape", "side_m", "b_x_m", "b_y_m", "b_z_m", "radius_m", "thickness_m"},
    "material": {"density_kg_m3", "lattice_constant_m", "nuclear_mass_kg"},
    "oscillator": {
        "mass_kg", "frequency_hz", "angular_frequency_rad_s", "q", "linewidth_rad_s",
        "temperature_k",
    },
    "readout": {
        "omega_hz", "omega_rad_s", "coupling", "wavenumber_m", "finesse", "power_w",
        "optical_angular_frequency_rad_s",
    },
    "collapse": {"lambda_hz", "lambda_noise_multiple", "r_csl_m", "sigma_dp_m"},
    "analysis": {"alpha_method", "susceptibility", "geometry_carries_mass"},
    "simulation": {
        "dt_s", "duration_s", "steps_per_period", "seed", "channels", "initial",
        "segment_length", "segments", "overlap", "window", "band_low_factor",
        "band_high_factor",
    },
    "reference": {"lambda_t_hz", "lambda_sql_hz", "source"},
}
_TOP = {"name", "note", "kind"}
_SWEEP_SECTIONS = {
    "sweep": {"output", "contour_decades", "workers"},
    "axis1": {"parameter", "start", "stop", "points"},
    "axis2": {"parameter", "start", "stop", "points"},
}

SWEEP_OUTPUTS = ("lambda_t", "lambda_sql", "sigma_dp", "alpha", "s_f")
SWEEP_PARAMETERS = {
    # parameter -> dependency group; two axes (or an axis and a fixed key)
    # from the same group over-determine the system
    "mass_kg": "size",
    "side_m": "size",
    "radius_m": "size",
    "thickness_m": "thickness",
    "q": "damping",
    "linewidth_rad_s": "damping",
    "frequency_hz": "resonance",
    "angular_frequency_rad_s": "resonance",
    "omega_hz": "measurement",
    "omega_rad_s": "measurement",
    "temperature_k": "temperature",
    "r_csl_m": "r_csl",
}
_PARAM_SECTION = {
    "mass_kg": "oscillator", "side_m": "geometry", "radius_m": "geometry",
    "thickness_m": "geometry", "q": "oscillator", "linewidth_rad_s": "oscillator",
    "frequency_hz": "oscillator", "angular_frequency_rad_s": "oscillator",
    "omega_hz": "readout", "omega_rad_s": "readout", "temperature_k": "oscillator",
    "r_csl_m": "collapse",
}


@dataclass(frozen=True)
class SimulationSettings:
    dt: float
    duration: float
    seed: int = 0
    channels: frozenset = frozenset(CHANNELS)
    initial: str = "thermal"
    welch: WelchConfig = field(default_factory=WelchConfig)
    band_factors: tuple = (2.0 / 3.0, 4.0 / 3.0)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    geometry: Geometry
    material: Material
    oscillator: Oscillator
    readout: Readout
    collapse: CollapseParams
    alpha_method: str = "exact"
    susceptibility_mode: str = "full_lorentzian"
    note: str = ""
    geometry_carries_mass: bool = True
    lambda_noise_multiple: float | None = None
    optics: dict = field(default_factory=dict)
    simulation: SimulationSettings | None = None
    reference: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False, compare=False)
    source: str = ""

    @property
    def omega(self):
        return self.readout.omega

    def with_omega(self, omega):
        """Same experiment measured at another frequency; a default g_SQL follows omega."""
        rd = self.readout
        if "coupling" not in self.raw.get("readout", {}) and "power_w" not in self.raw.get("readout", {}):
            rd = Readout(sql_coupling(self.oscillator, omega).g_sql, omega)
        else:
            rd = replace(rd, omega=omega)
        return replace(self, readout=rd)


@dataclass(frozen=True)
class Axis:
    parameter: str
    start: float
    stop: float
    points: int

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValidationError(
                f"cannot sweep {self.parameter!r}; choose from {sorted(SWEEP_PARAMETERS)}"
            )
        if not (self.start > 0 and self.stop > 0):
            raise ValidationError(f"axis {self.parameter}: range must be positive")
        if self.points < 1:
            raise ValidationError(f"axis {self.parameter}: needs at least one point")
        if self.points == 1 and self.start != self.stop:
            raise ValidationError(
                f"axis {self.parameter}: a range needs points >= 2 (1 point only for start == stop)"
            )

    def values(self):
        import numpy as np

        if self.points == 1:
            return np.array([float(self.start)])
        return np.logspace(math.log10(self.start), math.log10(self.stop), self.points)


@dataclass(frozen=True)
class SweepSpec:
    name: str
    output: str
    axis1: Axis
    axis2: Axis | None
    base: dict  # raw experiment tables with the swept keys absent
    contour_decades: tuple = ()
    workers: int = 1
    note: str = ""
    source: str = ""


def _reject_unknown(doc, allowed_sections, top):
    for key, value in doc.items():
        if isinstance(value, dict):
            if key not in allowed_sections:
                raise ValidationError(f"unknown section [{key}]")
            extra = set(value) - allowed_sections[key]
            if extra:
                raise ValidationError(f"unknown key(s) {sorted(extra)} in [{key}]")
        elif key not in top:
            raise ValidationError(f"unknown top-level key {key!r}")


def _one_of(table, keys, section, required=True):
    present = [k for k in keys if k in table]
    if len(present) > 1:
        raise ValidationError(f"[{section}] sets {present}; give exactly one")
    if not present:
        if required:
            raise ValidationError(f"[{section}] needs one of {list(keys)}")
        return None, None
    return present[0], table[present[0]]


def _num(table, key, section):
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"[{section}] {key} must be a number")
    return float(v)


def build_experiment(doc, name="experiment", source="") -> ExperimentConfig:
    """Validate the tables of an experiment config and build the value objects."""
    for section in ("geometry", "material", "oscillator", "readout"):
        if section not in doc:
            raise ValidationError(f"missing section [{section}]")
    geo_t, mat_t = doc["geometry"], doc["material"]
    osc_t, rd_t = doc["oscillator"], doc["readout"]
    col_t = doc.get("collapse", {})
    ana_t = doc.get("analysis", {})

    for section, table in doc.items():
        if isinstance(table, dict):
            for k in table:
                if k not in ("shape", "source", "channels", "initial", "window",
                             "alpha_method", "susceptibility", "geometry_carries_mass"):
                    _num(table, k, section)

    material = Material(
        mat_t.get("density_kg_m3", float("nan")),
        mat_t.get("lattice_constant_m"),
        mat_t.get("nuclear_mass_kg"),
    )

    mass = osc_t.get("mass_kg")
    geometry = _build_geometry(geo_t, mass, material.density)
    if mass is None:
        if geometry.kind == "point":
            raise ValidationError("a point geometry needs [oscillator] mass_kg")
        mass = material.density * geometry.volume()

    key, val = _one_of(osc_t, ("frequency_hz", "angular_frequency_rad_s"), "oscillator")
    Omega = TWO_PI * val if key == "frequency_hz" else float(val)
    if "q" not in osc_t and "linewidth_rad_s" not in osc_t:
        raise ValidationError("[oscillator] needs q or linewidth_rad_s")
    if "linewidth_rad_s" in osc_t:
        gamma = float(osc_t["linewidth_rad_s"])
        if "q" in osc_t:
            q = float(osc_t["q"])
            if not math.isclose(Omega / gamma, q, rel_tol=1e-9):
                raise ValidationError(
                    f"[oscillator] q = {q:g} and linewidth_rad_s = {gamma:g} disagree "
                    f"(Omega/gamma = {Omega / gamma:g}); set only one"
                )
    else:
        gamma = Omega / float(osc_t["q"])
    if "temperature_k" not in osc_t:
        raise ValidationError("[oscillator] needs temperature_k")
    oscillator = Oscillator(mass, Omega, gamma, osc_t["temperature_k"])

    carries = bool(ana_t.get("geometry_carries_mass", True))
    validate_experiment(geometry, material, oscillator, geometry_carries_mass=carries)

    key, val = _one_of(rd_t, ("omega_hz", "omega_rad_s"), "readout")
    omega = TWO_PI * val if key == "omega_hz" else float(val)
    readout, optics = _build_readout(rd_t, oscillator, omega)

    lam_key, lam_val = _one_of(col_t, ("lambda_hz", "lambda_noise_multiple"), "collapse",
                               required=False)
    collapse = CollapseParams(
        lam_val if lam_key == "lambda_hz" else 0.0,
        col_t.get("r_csl_m", 1e-7),
        col_t.get("sigma_dp_m"),
    )

    method = ana_t.get("alpha_method", "exact")
    if method not in ("exact", "asymptotic", "quadrature"):
        raise ValidationError(f"[analysis] alpha_method {method!r} not in exact/asymptotic/quadrature")
    mode = ana_t.get("susceptibility", "full_lorentzian")
    if mode not in SUSCEPTIBILITY_MODES:
        raise ValidationError(f"[analysis] susceptibility {mode!r} not in {SUSCEPTIBILITY_MODES}")
    if method == "asymptotic":
        # regime guard up front, so a bad pairing fails at load time
        from .geometry import alpha_asymptotic

        alpha_asymptotic(geometry, mass, collapse.r_csl)

    simulation = _build_simulation(doc.get("simulation"), oscillator, omega)

    return ExperimentConfig(
        name=str(doc.get("name", name)),
        geometry=geometry,
        material=material,
        oscillator=oscillator,
        readout=readout,
        collapse=collapse,
        alpha_method=method,
        susceptibility_mode=mode,
        note=str(doc.get("note", "")),
        geometry_carries_mass=carries,
        lambda_noise_multiple=lam_val if lam_key == "lambda_noise_multiple" else None,
        optics=optics,
        simulation=simulation,
        reference=dict(doc.get("reference", {})),
        raw=doc,
        source=source,
    )


def _build_geometry(t, mass, density):
    shape = t.get("shape")
    if shape == "point":
        if set(t) - {"shape"}:
            raise ValidationError("[geometry] point takes no dimensions")
        return Geometry.point()
    if shape == "cube":
        if set(t) - {"shape", "side_m"}:
            raise ValidationError("[geometry] cube takes only side_m")
        if "side_m" in t:
            return Geometry.cube(t["side_m"])
        if mass is None:
            raise ValidationError("[geometry] cube without side_m needs [oscillator] mass_kg")
        return geometry_from_mass("cube", mass, density)
    if shape == "cuboid":
        need = {"b_x_m", "b_y_m", "b_z_m"}
        if set(t) - {"shape"} != need:
            raise ValidationError("[geometry] cuboid needs exactly b_x_m, b_y_m, b_z_m")
        return Geometry.cuboid(t["b_x_m"], t["b_y_m"], t["b_z_m"])
    if shape == "disc":
        if set(t) - {"shape", "radius_m", "thickness_m"}:
            raise ValidationError("[geometry] disc takes radius_m and thickness_m")
        if "thickness_m" not in t:
            raise ValidationError("[geometry] disc needs thickness_m")
        if "radius_m" in t:
            return Geometry.disc(t["radius_m"], t["thickness_m"])
        if mass is None:
            raise ValidationError("[geometry] disc without radius_m needs [oscillator] mass_kg")
        return geometry_from_mass("disc", mass, density, t["thickness_m"])
    if shape == "sphere":
        if set(t) - {"shape", "radius_m"}:
            raise ValidationError("[geometry] sphere takes only radius_m")
        if "radius_m" in t:
            return Geometry.sphere(t["radius_m"])
        if mass is None:
            raise ValidationError("[geometry] sphere without radius_m needs [oscillator] mass_kg")
        return geometry_from_mass("sphere", mass, density)
    raise ValidationError(f"[geometry] shape {shape!r} not in cube/cuboid/disc/sphere/point")


def _build_readout(t, oscillator, omega):
    optics = {k: t[k] for k in ("wavenumber_m", "finesse", "optical_angular_frequency_rad_s",
                                "power_w") if k in t}
    if "power_w" in t:
        missing = {"finesse", "optical_angular_frequency_rad_s"} - set(t)
        if missing:
            raise ValidationError(f"[readout] power_w needs {sorted(missing)}")
        k = t.get("wavenumber_m", t["optical_angular_frequency_rad_s"] / C_LIGHT)
        rd = Readout.from_optics(omega, k, t["finesse"], t["power_w"],
                                 t["optical_angular_frequency_rad_s"])
        if "coupling" in t:
            Readout(t["coupling"], omega, rd.wavenumber, rd.finesse, rd.photon_flux)
        return rd, optics
    if "coupling" in t:
        return Readout(t["coupling"], omega), optics
    return Readout(sql_coupling(oscillator, omega).g_sql, omega), optics


def _build_simulation(t, oscillator, omega):
    if t is None:
        return None
    if "dt_s" in t and "steps_per_period" in t:
        raise ValidationError("[simulation] give dt_s or steps_per_period, not both")
    fastest = max(oscillator.Omega, oscillator.gamma, omega)
    dt = t["dt_s"] if "dt_s" in t else TWO_PI / (t.get("steps_per_period", 200) * fastest)
    welch = WelchConfig(
        int(t.get("segment_length", 4096)), float(t.get("overlap", 0.5)), t.get("window", "hann")
    )
    if "duration_s" in t and "segments" in t:
        raise ValidationError("[simulation] give duration_s or segments, not both")
    if "duration_s" in t:
        duration = float(t["duration_s"])
    else:
        n = welch.segment_length + (int(t.get("segments", 64)) - 1) * welch.step
        duration = n * dt
    channels = t.get("channels", list(CHANNELS))
    if not isinstance(channels, list) or set(channels) - set(CHANNELS):
        raise ValidationError(f"[simulation] channels must be a list drawn from {CHANNELS}")
    seed = t.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ValidationError("[simulation] seed must be a 64-bit unsigned integer")
    initial = t.get("initial", "thermal")
    if initial not in ("thermal", "rest"):
        raise ValidationError("[simulation] initial must be 'thermal' or 'rest'")
    band = (float(t.get("band_low_factor", 2.0 / 3.0)), float(t.get("band_high_factor", 4.0 / 3.0)))
    if not 0 < band[0] < band[1]:
        raise ValidationError("[simulation] need 0 < band_low_factor < band_high_factor")
    return SimulationSettings(float(dt), duration, seed, frozenset(channels), initial, welch, band)


def build_sweep(doc, name="sweep", source="") -> SweepSpec:
    if "sweep" not in doc or "axis1" not in doc:
        raise ValidationError("a sweep config needs [sweep] and [axis1]")
    sw = doc["sweep"]
    output = sw.get("output")
    if output not in SWEEP_OUTPUTS:
        raise ValidationError(f"[sweep] output {output!r} not in {SWEEP_OUTPUTS}")
    axes = []
    for key in ("axis1", "axis2"):
        if key in doc:
            t = doc[key]
            missing = {"parameter", "start", "stop", "points"} - set(t)
            if missing:
                raise ValidationError(f"[{key}] missing {sorted(missing)}")
            axes.append(Axis(t["parameter"], float(t["start"]), float(t["stop"]), int(t["points"])))
    axis1 = axes[0]
    axis2 = axes[1] if len(axes) > 1 else None

    base = {k: dict(v) for k, v in doc.items() if k in _SECTIONS}
    groups = {}
    for ax in axes:
        grp = SWEEP_PARAMETERS[ax.parameter]
        if grp in groups:
            raise ValidationError(
                f"axes {groups[grp]!r} and {ax.parameter!r} are not independent "
                f"(both set the {grp})"
            )
        groups[grp] = ax.parameter
    for ax in axes:
        grp = SWEEP_PARAMETERS[ax.parameter]
        for param, section in _PARAM_SECTION.items():
            if SWEEP_PARAMETERS[param] == grp and param in base.get(section, {}):
                raise ValidationError(
                    f"swept {ax.parameter!r} conflicts with fixed [{section}] {param}"
                )
    decades = tuple(int(d) for d in sw.get("contour_decades", ()))
    spec = SweepSpec(
        name=str(doc.get("name", name)),
        output=output,
        axis1=axis1,
        axis2=axis2,
        base=base,
        contour_decades=decades,
        workers=int(sw.get("workers", 1)),
        note=str(doc.get("note", "")),
        source=source,
    )
    # the first grid point must form a valid experiment
    experiment_at(spec, axis1.values()[0], axis2.values()[0] if axis2 else None)
    return spec


def experiment_at(spec: SweepSpec, v1, v2=None) -> ExperimentConfig:
    doc = {k: dict(v) for k, v in spec.base.items()}
    for ax, v in ((spec.axis1, v1), (spec.axis2, v2)):
        if ax is None:
            continue
        doc.setdefault(_PARAM_SECTION[ax.parameter], {})[ax.parameter] = float(v)
    doc["name"] = spec.name
    return build_experiment(doc, spec.name, spec.source)


def _bundled(name):
    ref = resources.files("collapsenoise") / "configs" / f"{name}.toml"
    if ref.is_file():
        return ref
    return None


def read_document(path):
    """Parse a TOML file (or a bundled config name such as ``table1/gw_detector``)."""
    p = Path(path)
    if not p.is_file():
        ref = _bundled(str(path))
        if ref is None:
            raise ValidationError(f"config {path!r} not found (file or bundled name)")
        text, source = ref.read_text(), f"bundled:{path}"
    else:
        text, source = p.read_text(), str(p)
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{source}: parse error: {exc}") from None
    return doc, source


def load_config(path):
    """Load an ExperimentConfig, or a SweepSpec when ``kind = "sweep"``."""
    doc, source = read_document(path)
    stem = Path(str(path)).stem
    kind = doc.get("kind", "experiment")
    if kind == "sweep":
        _reject_unknown(doc, {**_SECTIONS, **_SWEEP_SECTIONS}, _TOP)
        try:
            return build_sweep(doc, stem, source)
        except ValidationError as exc:
            raise ValidationError(f"{source}: {exc}") from None
    if kind != "experiment":
        raise ValidationError(f"{source}: kind must be 'experiment' or 'sweep'")
    try:
        _reject_unknown(doc, _SECTIONS, _TOP)
        return build_experiment(doc, stem, source)
    except ValidationError as exc:
        raise ValidationError(f"{source}: {exc}") from None


def bundled_names(prefix=""):
    root = resources.files("collapsenoise") / "configs"
    names = []
    for sub in sorted(root.iterdir(), key=lambda r: r.name):
        if sub.is_dir():
            for f in sorted(sub.iterdir(), key=lambda r: r.name):
                if f.name.endswith(".toml"):
                    names.append(f"{sub.name}/{f.name[:-5]}")
        elif sub.name.endswith(".toml"):
            names.append(sub.name[:-5])
    return [n for n in names if n.startswith(prefix)]
