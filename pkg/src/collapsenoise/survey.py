"""Bounds reports, parameter sweeps, simulation campaigns and the Table 1 survey."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    FREE_MASS,
    FREE_MASS_MIN_RATIO,
    bound_report,
    csl_diffusion,
    dp_diffusion_lattice,
    measurement_bound,
)
from .config import ExperimentConfig, SweepSpec, bundled_names, experiment_at, load_config
from .core import HBAR, CollapseParams, ValidationError
from .dynamics import (
    SimulationConfig,
    analytic_force_psd,
    infer_force_spectrum,
    inverse_susceptibility_magnitude,
    simulate,
    sql_coupling,
    write_record_csv,
)
from .geometry import alpha as compute_alpha
from .spectral import MIN_SEGMENTS, compare_to_analytic, write_psd_csv

LAMBDA_DECADES = tuple(10.0**e for e in range(-10, -5))
TABLE1_ROWS = (
    "gw_detector",
    "suspended_disc",
    "hypothetical_disc",
    "sin_membrane",
    "aluminum_membrane",
)
TABLE1_ALTERNATES = ("gw_detector_sphere",)
REFERENCE_FACTOR = 2.0


def fmt(x):
    """Fixed CSV number format: scientific, 9 significant digits, locale-free."""
    return f"{x:.8e}"


def _provenance(config, **extra):
    info = {"package": "collapsenoise", "version": __version__, "config": config.source or config.name}
    info.update(extra)
    return info


def _geometry_record(geometry):
    return {"shape": geometry.kind, **{f"{k}_m": v for k, v in geometry.dims.items()}}


def run_bounds(config: ExperimentConfig, omega=None):
    """Every bound of a configured experiment, with the intermediates behind it."""
    if omega is not None:
        config = config.with_omega(omega)
    o, omega, r = config.oscillator, config.omega, config.collapse.r_csl
    a = compute_alpha(config.geometry, o.mass, r, config.alpha_method)
    report = bound_report(o, a.alpha, r, omega, config.susceptibility_mode, config.material)
    inv_chi = float(inverse_susceptibility_magnitude(o, omega))
    sql = sql_coupling(
        o, omega, config.optics.get("wavenumber_m"), config.optics.get("finesse"),
        config.optics.get("optical_angular_frequency_rad_s"),
    )
    record = {
        "name": config.name,
        "geometry": _geometry_record(config.geometry),
        "mass_kg": o.mass,
        "density_kg_m3": config.material.density,
        "Omega_rad_s": o.Omega,
        "gamma_rad_s": o.gamma,
        "Q": o.Q,
        "temperature_k": o.temperature,
        "omega_rad_s": omega,
        "r_csl_m": r,
        "alpha": a.alpha,
        "alpha_method": a.method,
        "D_T_N2s": o.thermal_diffusion,
        "abs_chi_m_per_N": 1.0 / inv_chi,
        "inverse_abs_chi_N_per_m": inv_chi,
        "sql_noise_N2s": HBAR * inv_chi,
        "g_sql": sql.g_sql,
        "P_sql_w": sql.power_sql,
        "susceptibility_mode": report.susceptibility_mode,
        "Lambda_T_hz": report.Lambda_T,
        "Lambda_SQL_hz": report.Lambda_SQL,
        "Lambda_combined_hz": report.combined,
        "Lambda_SQL_free_mass_hz": (
            measurement_bound(o, a.alpha, r, omega, FREE_MASS)
            if omega >= FREE_MASS_MIN_RATIO * o.Omega
            else None
        ),
        "Sigma_DP_m": report.Sigma_DP,
        "high_temperature_valid": o.high_temperature_valid,
    }
    lam = config.collapse.lambda_csl
    record["lambda_csl_hz"] = lam
    record["D_CSL_N2s"] = csl_diffusion(lam, r, a.alpha)
    if lam > 0:
        record["lambda_detectable"] = report.detectable(lam)
    record["lambda_verdicts"] = {f"{v:.0e}": report.detectable(v) for v in LAMBDA_DECADES}
    detectable = [v for v in LAMBDA_DECADES if report.detectable(v)]
    record["smallest_detectable_decade_hz"] = min(detectable) if detectable else None
    if config.material.has_lattice and config.collapse.sigma_dp is not None:
        record["D_DP_N2s"] = dp_diffusion_lattice(config.material, o.mass, config.collapse.sigma_dp)
    if config.reference:
        ref = config.reference
        for key, ours in (("lambda_t_hz", report.Lambda_T), ("lambda_sql_hz", report.Lambda_SQL)):
            if key in ref:
                ratio = ours / ref[key]
                record[f"reference_{key}"] = ref[key]
                record[f"ratio_{key}"] = ratio
                record[f"within_factor2_{key}"] = 1.0 / REFERENCE_FACTOR <= ratio <= REFERENCE_FACTOR
    record["provenance"] = _provenance(config)
    return record


def _point_value(spec: SweepSpec, v1, v2):
    cfg = experiment_at(spec, v1, v2)
    o, r = cfg.oscillator, cfg.collapse.r_csl
    a = compute_alpha(cfg.geometry, o.mass, r, cfg.alpha_method).alpha
    if spec.output == "alpha":
        return a
    rep = bound_report(o, a, r, cfg.omega, cfg.susceptibility_mode, cfg.material)
    if spec.output == "lambda_t":
        return rep.Lambda_T
    if spec.output == "lambda_sql":
        return rep.Lambda_SQL
    if spec.output == "sigma_dp":
        if rep.Sigma_DP is None:
            raise ValidationError("sigma_dp sweep needs lattice data in [material]")
        return rep.Sigma_DP
    return float(analytic_force_psd(o, cfg.readout, cfg.collapse, a, cfg.omega).sql[0])


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    axis1: np.ndarray
    axis2: np.ndarray | None
    values: np.ndarray  # shape (len(axis1), len(axis2) or 1)

    def contours(self, decades=None):
        """Crossings of log10(value) through integer decades along axis2, per axis1 row."""
        decades = self.spec.contour_decades if decades is None else decades
        if self.axis2 is None or self.axis2.size < 2:
            return []
        out = []
        lx = np.log10(self.axis2)
        for i, v1 in enumerate(self.axis1):
            ly = np.log10(self.values[i])
            for level in decades:
                s = ly - level
                for j in range(lx.size - 1):
                    if s[j] == 0.0:
                        out.append((level, v1, self.axis2[j]))
                    elif s[j] * s[j + 1] < 0:
                        t = s[j] / (s[j] - s[j + 1])
                        out.append((level, v1, 10.0 ** (lx[j] + t * (lx[j + 1] - lx[j]))))
        return out


def run_sweep(spec: SweepSpec, workers=None) -> SweepResult:
    a1 = spec.axis1.values()
    a2 = spec.axis2.values() if spec.axis2 else None
    points = [(v1, v2) for v1 in a1 for v2 in (a2 if a2 is not None else [None])]
    workers = spec.workers if workers is None else workers
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(lambda p: _point_value(spec, *p), points))
    else:
        vals = [_point_value(spec, *p) for p in points]
    shape = (a1.size, a2.size if a2 is not None else 1)
    return SweepResult(spec, a1, a2, np.array(vals, dtype=float).reshape(shape))


def write_sweep(result: SweepResult, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = result.spec
    header = [spec.axis1.parameter] + ([spec.axis2.parameter] if spec.axis2 else []) + [spec.output]
    grid_path = out / f"{spec.name}_grid.csv"
    with open(grid_path, "w", newline="") as fh:
        fh.write(f"# collapsenoise {__version__} sweep {spec.name} from {spec.source}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, v1 in enumerate(result.axis1):
            if result.axis2 is None:
                w.writerow([fmt(v1), fmt(result.values[i, 0])])
            else:
                for j, v2 in enumerate(result.axis2):
                    w.writerow([fmt(v1), fmt(v2), fmt(result.values[i, j])])
    paths = [grid_path]
    if spec.contour_decades and spec.axis2 is not None:
        cpath = out / f"{spec.name}_contours.csv"
        with open(cpath, "w", newline="") as fh:
            fh.write(f"# collapsenoise {__version__} decade contours of {spec.output} from {spec.source}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["log10_level", spec.axis1.parameter, spec.axis2.parameter])
            for level, v1, v2 in result.contours():
                w.writerow([level, fmt(v1), fmt(v2)])
        paths.append(cpath)
    return paths


@dataclass
class CampaignReport:
    config: ExperimentConfig
    simulation: SimulationConfig
    record: object
    estimate: object
    analytic: object
    comparison: object
    verdict: dict
    warnings: list

    def summary(self):
        s = {
            "name": self.config.name,
            "seed": self.simulation.seed,
            "dt_s": self.simulation.dt,
            "duration_s": self.simulation.duration,
            "samples": int(self.record.times.size),
            "segments": self.estimate.segments,
            "relative_standard_error": self.estimate.relative_standard_error,
            "channels": sorted(self.simulation.channels),
            "lambda_csl_hz": self.simulation.collapse.lambda_csl,
            "alpha": self.simulation.alpha,
            "g": self.simulation.readout.g,
            "omega_rad_s": self.simulation.readout.omega,
            "diffusion_N2s": self.record.diffusion,
            "comparison": self.comparison.summary(),
            "verdict": self.verdict,
            "warnings": self.warnings,
        }
        s["provenance"] = _provenance(self.config, seed=self.simulation.seed)
        return s


def campaign_simulation(config: ExperimentConfig, settings=None, alpha_value=None):
    """SimulationConfig for an experiment, resolving lambda_noise_multiple."""
    settings = settings or config.simulation
    if settings is None:
        raise ValidationError(f"{config.name}: no [simulation] settings")
    o = config.oscillator
    if alpha_value is None:
        alpha_value = compute_alpha(config.geometry, o.mass, config.collapse.r_csl,
                                    config.alpha_method).alpha
    collapse = config.collapse
    if config.lambda_noise_multiple is not None:
        noise = o.thermal_diffusion + HBAR * float(inverse_susceptibility_magnitude(o, config.omega))
        lam = config.lambda_noise_multiple * noise / ((HBAR / collapse.r_csl) ** 2 * alpha_value)
        collapse = CollapseParams(lam, collapse.r_csl, collapse.sigma_dp)
    return SimulationConfig(
        oscillator=o,
        readout=config.readout,
        collapse=collapse,
        alpha=alpha_value,
        dt=settings.dt,
        duration=settings.duration,
        seed=settings.seed,
        channels=settings.channels,
        initial=settings.initial,
    )


# Hann tapers correlate neighbouring bins; the periodogram correlation is (2/3)^2.
_BIN_CORRELATION = {"hann": 4.0 / 9.0, "rectangular": 0.0}


def run_campaign(config: ExperimentConfig, sim: SimulationConfig | None = None,
                 welch=None, band=None, out_dir=None, one_sided=False) -> CampaignReport:
    """Simulate, estimate S_f, compare to the analytic spectrum and judge the CSL excess.

    The verdict estimates D_CSL as the band average of (S_f estimate minus
    the non-collapse channels of the model) and calls it detectable when it
    is statistically resolved (z >= 3) and exceeds D_T + hbar/|chi(omega)|.
    """
    settings = config.simulation
    sim = sim or campaign_simulation(config)
    welch = welch or (settings.welch if settings else None)
    if band is None:
        lo, hi = settings.band_factors if settings else (2.0 / 3.0, 4.0 / 3.0)
        band = (lo * sim.readout.omega, hi * sim.readout.omega)
    warnings = []
    record = simulate(sim)
    est = infer_force_spectrum(record, sim.readout, sim.oscillator, welch)
    if est.segments < MIN_SEGMENTS:
        warnings.append(f"only {est.segments} Welch segments (< {MIN_SEGMENTS}); statistical power is low")
    analytic = analytic_force_psd(sim.oscillator, sim.readout, sim.collapse, sim.alpha,
                                  est.omega, sim.channels)
    comparison = compare_to_analytic(est, analytic, band)

    noise_only = analytic_force_psd(sim.oscillator, sim.readout, sim.collapse, sim.alpha,
                                    est.omega, sim.channels - {"csl"})
    sel = (est.omega >= band[0]) & (est.omega <= band[1])
    residual = est.S_f[sel] - noise_only.S_f[sel]
    d_csl_hat = float(np.mean(residual))
    window = (welch.window if welch else "hann")
    n_eff = sel.sum() / (1.0 + 2.0 * _BIN_CORRELATION[window])
    # scatter of the estimate follows the total spectrum, collapse noise included
    se = float(np.mean(analytic.S_f[sel])) * est.relative_standard_error / math.sqrt(n_eff)
    o, omega = sim.oscillator, sim.readout.omega
    reference = o.thermal_diffusion + HBAR * float(inverse_susceptibility_magnitude(o, omega))
    excess_z = d_csl_hat / se if se > 0 else 0.0
    injected = sim.collapse.lambda_csl * (HBAR / sim.collapse.r_csl) ** 2 * sim.alpha
    verdict = {
        "D_CSL_injected_N2s": injected if "csl" in sim.channels else 0.0,
        "D_CSL_estimated_N2s": d_csl_hat,
        "D_CSL_standard_error_N2s": se,
        "excess_z": excess_z,
        "reference_noise_N2s": reference,
        "excess_factor": d_csl_hat / reference,
        "resolved": excess_z >= 3.0,
        "dominant": d_csl_hat > reference,
        "detectable": bool(excess_z >= 3.0 and d_csl_hat > reference),
        "band_rad_s": list(band),
    }
    report = CampaignReport(config, sim, record, est, analytic, comparison, verdict, warnings)
    if out_dir is not None:
        write_campaign(report, out_dir, one_sided)
    return report


def write_campaign(report: CampaignReport, out_dir, one_sided=False):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = report.config.name
    sim = report.simulation
    head = [
        f"collapsenoise {__version__} campaign {name} from {report.config.source or name}",
        f"seed={sim.seed} dt_s={sim.dt:.17g} duration_s={sim.duration:.17g} "
        f"lambda_hz={sim.collapse.lambda_csl:.17g} channels={','.join(sorted(sim.channels))}",
    ]
    psd_head = head + ["double-sided S_f, N^2 s"]
    write_record_csv(out / f"{name}_record.csv", report.record, head)
    write_psd_csv(out / f"{name}_psd.csv", report.estimate.omega, report.estimate.S_f,
                  one_sided=one_sided, comments=psd_head)
    write_psd_csv(out / f"{name}_analytic.csv", report.analytic.omega, report.analytic.S_f,
                  one_sided=one_sided, comments=psd_head)
    with open(out / f"{name}_report.json", "w") as fh:
        json.dump(_jsonable(report.summary()), fh, indent=2, sort_keys=True)
    return out


def table1(names=TABLE1_ROWS + TABLE1_ALTERNATES):
    """Bounds records for the bundled Table 1 systems."""
    known = set(bundled_names("table1/"))
    rows = []
    for n in names:
        key = f"table1/{n}"
        if key not in known:
            raise ValidationError(f"no bundled config {key}")
        rows.append(run_bounds(load_config(key)))
    return rows


TABLE1_COLUMNS = (
    "name", "mass_kg", "alpha", "Lambda_T_hz", "reference_lambda_t_hz", "ratio_lambda_t_hz",
    "Lambda_SQL_hz", "reference_lambda_sql_hz", "ratio_lambda_sql_hz",
)


def write_rows_csv(rows, path_or_file, columns=TABLE1_COLUMNS):
    def cell(v):
        if isinstance(v, float):
            return fmt(v)
        return "" if v is None else str(v)

    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([cell(r.get(c)) for c in columns])
    finally:
        if own:
            fh.close()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in (sorted(obj) if isinstance(obj, (set, frozenset)) else obj)]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def to_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


__all__ = [
    "run_bounds", "run_sweep", "write_sweep", "run_campaign", "campaign_simulation",
    "table1", "write_rows_csv", "to_json", "SweepResult", "CampaignReport", "asdict", "replace",
]
