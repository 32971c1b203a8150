"""Monitored mechanical oscillator: Langevin simulation, homodyne record,
force inference and the analytic force-noise spectrum.

Noise channels
--------------
thermal     white force, D_T = 2 gamma m k_B T
csl         white force, D_CSL = lambda (hbar/r)^2 alpha
backaction  white force hbar g x_in with <x_in x_in> = delta/2, D_BA = hbar^2 g^2 / 2
shot        additive record noise p_in with <p_in p_in> = delta/2

Back-action only drives the mechanics; shot noise only enters the record.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter, lfiltic

from .core import C_LIGHT, HBAR, NumericalError, Oscillator, Readout, ValidationError

CHANNELS = ("thermal", "csl", "backaction", "shot")
_STREAM_IDS = {"thermal": 0, "csl": 1, "backaction": 2, "shot": 3, "initial": 4}
RESOLUTION_STEPS = 50
MIN_STEPS = 100
MIN_INFERENCE_SAMPLES = 2**12


def susceptibility(oscillator: Oscillator, omega):
    """chi(omega) = 1 / [m (Omega^2 - omega^2 + i omega gamma)]."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValidationError("omega must be >= 0")
    o = oscillator
    return (1.0 / (o.mass * (o.Omega**2 - omega**2 + 1j * omega * o.gamma)))[()]


def inverse_susceptibility_magnitude(oscillator: Oscillator, omega):
    """|chi(omega)|^-1 = m sqrt((Omega^2 - omega^2)^2 + omega^2 gamma^2)."""
    omega = np.asarray(omega, dtype=float)
    o = oscillator
    return (o.mass * np.hypot(o.Omega**2 - omega**2, omega * o.gamma))[()]


def discrete_susceptibility(oscillator: Oscillator, dt, omega):
    """Position response of the sampled integrator to a force sequence.

    From the recurrence used by ``simulate``, with z = exp(i omega dt):
    chi_d = h (dt^2/m) / (z - (1 + e - h W^2) + e/z), e = exp(-gamma dt),
    h = sqrt(e), W = 2 sin(Omega dt/2). Tends to ``susceptibility`` as dt -> 0.
    """
    o = oscillator
    z = np.exp(1j * np.asarray(omega, dtype=float) * dt)
    e, h, w2 = _step_factors(o, dt)
    return (h * dt * dt / o.mass / (z - (1.0 + e - h * w2) + e / z))[()]


def _step_factors(o, dt):
    e = math.exp(-o.gamma * dt)
    # warped stiffness: the discrete oscillation frequency equals Omega exactly
    w2 = (2.0 * math.sin(0.5 * o.Omega * dt)) ** 2
    return e, math.sqrt(e), w2


@dataclass(frozen=True)
class ForceSpectrum:
    """Double-sided force-noise density S_f (N^2 s) on an angular frequency grid.

    Analytic spectra carry the four channel terms and the SQL-optimized sum;
    estimated spectra carry the relative standard error of each bin instead.
    """

    omega: np.ndarray
    S_f: np.ndarray
    components: dict = field(default_factory=dict)
    sql: np.ndarray | None = None
    relative_standard_error: float | None = None
    segments: int | None = None


def analytic_force_psd(oscillator, readout, collapse, alpha, omega, channels=CHANNELS):
    """S_f(omega) = D_CSL + 2 gamma m k_B T + 1/(2 g^2 |chi|^2) + hbar^2 g^2 / 2.

    Channels missing from ``channels`` contribute zero. ``sql`` holds
    D_CSL + D_T + hbar/|chi|, the value at the optimal coupling.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omega <= 0):
        raise ValidationError("analytic_force_psd needs omega > 0")
    g = readout.g
    inv_chi = inverse_susceptibility_magnitude(oscillator, omega)
    D_csl = collapse.lambda_csl * (HBAR / collapse.r_csl) ** 2 * float(alpha)
    ones = np.ones_like(omega)
    terms = {
        "csl": D_csl * ones,
        "thermal": oscillator.thermal_diffusion * ones,
        "shot": inv_chi**2 / (2.0 * g * g),
        "backaction": 0.5 * (HBAR * g) ** 2 * ones,
    }
    for name in CHANNELS:
        if name not in channels:
            terms[name] = np.zeros_like(omega)
    total = terms["csl"] + terms["thermal"] + terms["shot"] + terms["backaction"]
    sql = D_csl + oscillator.thermal_diffusion + HBAR * inv_chi
    return ForceSpectrum(omega=omega, S_f=total, components=terms, sql=sql)


@dataclass(frozen=True)
class SqlCoupling:
    g_sql: float
    power_sql: float | None = None


def sql_coupling(oscillator, omega, wavenumber=None, finesse=None, optical_omega=None):
    """Coupling g_SQL = 1/sqrt(hbar |chi(omega)|) that balances shot noise and back-action.

    With ``finesse`` and ``optical_omega`` the equivalent injected power is
    returned too, from g = k sqrt(F P / hbar w_opt); k defaults to w_opt / c.
    """
    if not omega > 0:
        raise ValidationError("omega must be positive")
    g = math.sqrt(float(inverse_susceptibility_magnitude(oscillator, omega)) / HBAR)
    power = None
    if finesse is not None and optical_omega is not None:
        k = wavenumber if wavenumber is not None else optical_omega / C_LIGHT
        power = g * g * HBAR * optical_omega / (k * k * finesse)
    return SqlCoupling(g, power)


@dataclass(frozen=True)
class SimulationConfig:
    oscillator: Oscillator
    readout: Readout
    collapse: object
    alpha: float
    dt: float
    duration: float
    seed: int = 0
    channels: frozenset = frozenset(CHANNELS)
    initial: object = "thermal"  # "thermal", "rest" or an (x0, p0) pair

    def __post_init__(self):
        object.__setattr__(self, "channels", frozenset(self.channels))
        unknown = self.channels - set(CHANNELS)
        if unknown:
            raise ValidationError(f"unknown channels {sorted(unknown)}")
        o = self.oscillator
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        limit = 2.0 * math.pi / (RESOLUTION_STEPS * max(o.Omega, o.gamma))
        if self.dt > limit * (1 + 1e-12):
            raise ValidationError(f"dt = {self.dt:.3g} s exceeds 2pi/(50 max(Omega, gamma)) = {limit:.3g} s")
        if self.duration < MIN_STEPS * self.dt:
            raise ValidationError("duration must cover at least 100 steps")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    @property
    def n_samples(self):
        return int(round(self.duration / self.dt))

    def diffusion(self):
        """Force densities (N^2 s) of the enabled mechanical channels."""
        o = self.oscillator
        full = {
            "thermal": o.thermal_diffusion,
            "csl": self.collapse.lambda_csl * (HBAR / self.collapse.r_csl) ** 2 * self.alpha,
            "backaction": 0.5 * (HBAR * self.readout.g) ** 2,
        }
        return {k: (v if k in self.channels else 0.0) for k, v in full.items()}


@dataclass(frozen=True)
class HomodyneRecord:
    times: np.ndarray
    x: np.ndarray
    p: np.ndarray
    p_out: np.ndarray
    diffusion: dict
    dt: float

    @property
    def duration(self):
        return self.times.size * self.dt


def channel_rng(seed, channel):
    """Independent generator for one noise channel; toggling others leaves it unchanged."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_STREAM_IDS[channel],))
    return np.random.Generator(np.random.PCG64(ss))


def _initial_state(config, diffusion):
    o = config.oscillator
    if isinstance(config.initial, str):
        if config.initial == "rest":
            return 0.0, 0.0
        if config.initial != "thermal":
            raise ValidationError(f"unknown initial state {config.initial!r}")
        # stationary state of the continuous dynamics driven by all enabled forces
        D = sum(diffusion.values())
        var_p = D / (2.0 * o.gamma)
        var_x = var_p / (o.mass * o.Omega) ** 2
        z = channel_rng(config.seed, "initial").standard_normal(2)
        return math.sqrt(var_x) * z[0], math.sqrt(var_p) * z[1]
    x0, p0 = config.initial
    return float(x0), float(p0)


def simulate(config: SimulationConfig) -> HomodyneRecord:
    """Integrate the monitored Langevin equations and synthesize the homodyne record.

    Symplectic Euler-Maruyama with the exact damping factor split in half
    around each kick:
        p' = e p + h (-m Omega_w^2 x + F) dt,   x' = x + p' dt / m,
    with e = exp(-gamma dt), h = sqrt(e) and the warped frequency
    Omega_w dt = 2 sin(Omega dt / 2), which puts the discrete resonance at
    Omega. F = sum_c sqrt(D_c/dt) xi_c. Eliminating p gives a two-term
    linear recurrence in x, run as an IIR filter over the force sequence.
    Record: p_out = p_in + g x, p_in ~ N(0, 1/(2 dt)).
    """
    o, g, dt = config.oscillator, config.readout.g, config.dt
    n = config.n_samples
    diffusion = config.diffusion()

    force = np.zeros(n)
    for name in ("thermal", "csl", "backaction"):
        if name in config.channels and diffusion[name] > 0:
            force += math.sqrt(diffusion[name] / dt) * channel_rng(config.seed, name).standard_normal(n)

    x0, p0 = _initial_state(config, diffusion)
    decay, half, w2 = _step_factors(o, dt)
    p1 = decay * p0 + half * (-o.mass * w2 / dt**2 * x0 + force[0]) * dt
    x1 = x0 + p1 * dt / o.mass
    b = [half * dt * dt / o.mass]
    a = [1.0, -(1.0 + decay - half * w2), decay]
    x = np.empty(n)
    x[0], x[1] = x0, x1
    if n > 2:
        zi = lfiltic(b, a, y=[x1, x0])
        x[2:], _ = lfilter(b, a, force[1 : n - 1], zi=zi)
    if not np.all(np.isfinite(x)):
        bad = int(np.argmin(np.isfinite(x)))
        raise NumericalError(f"non-finite oscillator state at step {bad} (t = {bad * dt:.3g} s)")
    p = np.empty(n)
    p[0] = p0
    p[1:] = o.mass * np.diff(x) / dt

    p_out = g * x
    if "shot" in config.channels:
        p_out = p_out + math.sqrt(0.5 / dt) * channel_rng(config.seed, "shot").standard_normal(n)
    diffusion = dict(diffusion, shot=0.5 if "shot" in config.channels else 0.0)
    return HomodyneRecord(
        times=np.arange(n) * dt, x=x, p=p, p_out=p_out, diffusion=diffusion, dt=dt
    )


def infer_force_spectrum(record: HomodyneRecord, readout, oscillator, welch=None) -> ForceSpectrum:
    """Estimated S_f: Welch PSD of p_out divided bin by bin by g^2 |chi(omega)|^2.

    Only bins in (0, pi/dt] are returned. For a pure sinusoidal force
    F0 sin(w0 t) centered on a bin, the peak bin of S_f reads
    F0^2 dt (sum w)^2 / (4 sum w^2) for taper w.
    """
    from .spectral import WelchConfig, welch_psd

    if record.p_out.size < MIN_INFERENCE_SAMPLES:
        raise ValidationError(f"record needs at least {MIN_INFERENCE_SAMPLES} samples")
    if not readout.g > 0:
        raise ValidationError("g must be positive")
    welch = welch or WelchConfig(segment_length=min(4096, record.p_out.size // 8))
    est = welch_psd(record.p_out, record.dt, welch)
    keep = est.frequencies > 0
    if not np.any(keep):
        raise ValidationError("no resolvable frequency band")
    omega = est.frequencies[keep]
    chi2 = np.abs(susceptibility(oscillator, omega)) ** 2
    s_f = est.values[keep] / (readout.g**2 * chi2)
    return ForceSpectrum(
        omega=omega,
        S_f=s_f,
        relative_standard_error=est.relative_standard_error,
        segments=est.segments,
    )


def write_record_csv(path, record: HomodyneRecord, comments=()):
    """Columns t, x, p_out; ``comments`` become leading '#' lines."""
    data = np.column_stack([record.times, record.x, record.p_out])
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("t,x,p_out\n")
        np.savetxt(fh, data, fmt="%.8e", delimiter=",")


def _read_csv(path, header):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or rows[0] != header:
        raise ValidationError(f"{path}: expected header {','.join(header)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return data.reshape(-1, len(header))


def read_record_csv(path):
    """Return (t, x, p_out) arrays from a record CSV."""
    data = _read_csv(path, ["t", "x", "p_out"])
    return data[:, 0], data[:, 1], data[:, 2]
