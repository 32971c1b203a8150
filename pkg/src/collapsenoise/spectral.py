"""Welch power spectral density estimates and comparisons with analytic spectra.

Convention: double-sided density over angular frequency, normalized so a
white sequence of per-sample variance s^2 and step dt has flat PSD s^2 dt.
A white force with <f(t) f(t')> = D delta(t - t') therefore reads S = D.
Frequencies are reported for the non-negative half only; the values there
are still the double-sided density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ValidationError

WINDOWS = ("hann", "rectangular")
MIN_SEGMENTS = 8
Z_FLAG = 4.0
RATIO_BAND = (0.95, 1.05)


@dataclass(frozen=True)
class WelchConfig:
    segment_length: int = 4096
    overlap: float = 0.5
    window: str = "hann"

    def __post_init__(self):
        n = int(self.segment_length)
        if n < 2 or n & (n - 1):
            raise ValidationError(f"segment_length must be a power of two, got {self.segment_length}")
        if not 0.0 <= self.overlap <= 0.9:
            raise ValidationError("overlap must lie in [0, 0.9]")
        if self.window not in WINDOWS:
            raise ValidationError(f"window must be one of {WINDOWS}")

    @property
    def step(self):
        return max(self.segment_length - int(round(self.overlap * self.segment_length)), 1)

    def segment_count(self, n_samples):
        if n_samples < self.segment_length:
            return 0
        return 1 + (n_samples - self.segment_length) // self.step

    def taper(self):
        if self.window == "rectangular":
            return np.ones(self.segment_length)
        # periodic Hann
        return np.hanning(self.segment_length + 1)[:-1]


@dataclass(frozen=True)
class PsdEstimate:
    frequencies: np.ndarray  # rad/s, non-negative half
    values: np.ndarray
    segments: int
    relative_standard_error: float
    dt: float
    segment_length: int

    @property
    def resolution(self):
        """Bin spacing in rad/s."""
        return 2.0 * math.pi / (self.segment_length * self.dt)

    def total_power(self):
        """Variance recovered from the PSD: sum over both signs of S * d(omega)/2pi."""
        weights = np.full(self.values.shape, 2.0)
        weights[0] = 1.0
        if self.segment_length % 2 == 0:
            weights[-1] = 1.0
        return float(np.sum(weights * self.values) * self.resolution / (2.0 * math.pi))


def _overlap_standard_error(taper, step, segments):
    # Welch variance reduction for correlated overlapping segments.
    if segments <= 1:
        return 1.0
    norm = np.sum(taper**2)
    acc = 1.0
    for j in range(1, segments):
        shift = j * step
        if shift >= taper.size:
            break
        rho = np.sum(taper[: taper.size - shift] * taper[shift:]) / norm
        acc += 2.0 * (1.0 - j / segments) * rho**2
    return math.sqrt(acc / segments)


def segment_transforms(samples, config: WelchConfig):
    """Windowed, mean-removed segment spectra, shape (segments, L//2 + 1)."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ValidationError("samples must be one-dimensional")
    k = config.segment_count(x.size)
    if k < 1:
        raise ValidationError(
            f"record of {x.size} samples is shorter than one segment ({config.segment_length})"
        )
    L = config.segment_length
    idx = np.arange(k)[:, None] * config.step + np.arange(L)[None, :]
    seg = x[idx]
    seg = seg - seg.mean(axis=1, keepdims=True)
    return np.fft.rfft(seg * config.taper()[None, :], axis=1)


def welch_psd(samples, dt, config: WelchConfig | None = None) -> PsdEstimate:
    """Averaged modified periodogram of a uniformly sampled record."""
    config = config or WelchConfig()
    dt = float(dt)
    if not dt > 0:
        raise ValidationError("dt must be positive")
    spectra = segment_transforms(samples, config)
    taper = config.taper()
    # fixed summation order over segments keeps the estimate bit-reproducible
    power = np.mean(np.abs(spectra) ** 2, axis=0)
    values = power * dt / np.sum(taper**2)
    L = config.segment_length
    freqs = 2.0 * math.pi * np.fft.rfftfreq(L, dt)
    k = spectra.shape[0]
    return PsdEstimate(
        frequencies=freqs,
        values=values,
        segments=k,
        relative_standard_error=_overlap_standard_error(taper, config.step, k),
        dt=dt,
        segment_length=L,
    )


@dataclass(frozen=True)
class Comparison:
    frequencies: np.ndarray
    ratio: np.ndarray
    z: np.ndarray
    band_ratio: float
    mean_z: float
    flagged: np.ndarray  # bin indices within the band with |z| > 4

    @property
    def ratio_ok(self):
        return RATIO_BAND[0] <= self.band_ratio <= RATIO_BAND[1]

    @property
    def ok(self):
        return self.ratio_ok and self.flagged.size == 0

    def summary(self):
        return {
            "bins": int(self.frequencies.size),
            "band_ratio": self.band_ratio,
            "mean_z": self.mean_z,
            "flagged_bins": int(self.flagged.size),
            "ratio_within_5pct": self.ratio_ok,
        }


def _analytic_values(analytic, omega):
    if callable(analytic):
        return np.asarray(analytic(omega), dtype=float)
    a_omega = np.asarray(analytic.omega, dtype=float)
    a_vals = np.asarray(analytic.S_f, dtype=float)
    if a_omega.size == omega.size and np.array_equal(a_omega, omega):
        return a_vals
    if omega.min() < a_omega.min() or omega.max() > a_omega.max():
        raise ValidationError("analytic spectrum does not cover the comparison band")
    return np.exp(np.interp(np.log(omega), np.log(a_omega), np.log(a_vals)))


def compare_to_analytic(estimate, analytic, band) -> Comparison:
    """Per-bin z-scores and band-averaged ratio of an estimate to a model.

    ``estimate`` is anything with ``frequencies`` (or ``omega``), values
    (``values`` or ``S_f``) and ``relative_standard_error``; ``analytic`` is a
    spectrum object with ``omega``/``S_f`` or a callable of omega.
    """
    freqs = np.asarray(
        estimate.frequencies if hasattr(estimate, "frequencies") else estimate.omega
    )
    vals = np.asarray(estimate.values if hasattr(estimate, "values") else estimate.S_f)
    lo, hi = band
    sel = (freqs >= lo) & (freqs <= hi) & (freqs > 0)
    if not np.any(sel):
        raise ValidationError(f"no estimate bins inside band [{lo:.4g}, {hi:.4g}] rad/s")
    omega = freqs[sel]
    model = _analytic_values(analytic, omega)
    ratio = vals[sel] / model
    se = float(getattr(estimate, "relative_standard_error", 0.0) or 0.0)
    if se > 0:
        z = (ratio - 1.0) / se
    else:
        z = np.where(np.isclose(ratio, 1.0, rtol=1e-12, atol=0.0), 0.0, np.inf)
    flagged = np.nonzero(np.abs(z) > Z_FLAG)[0]
    return Comparison(
        frequencies=omega,
        ratio=ratio,
        z=z,
        band_ratio=float(np.mean(ratio)),
        mean_z=float(np.mean(z)),
        flagged=flagged,
    )


def write_psd_csv(path, frequencies, values, one_sided=False, comments=()):
    """Columns omega_rad_s, S_f_N2s; ``one_sided`` doubles the values explicitly."""
    factor = 2.0 if one_sided else 1.0
    data = np.column_stack([np.asarray(frequencies, float), factor * np.asarray(values, float)])
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("omega_rad_s,S_f_N2s\n")
        np.savetxt(fh, data, fmt="%.8e", delimiter=",")


def read_psd_csv(path):
    from .dynamics import _read_csv

    data = _read_csv(path, ["omega_rad_s", "S_f_N2s"])
    return data[:, 0], data[:, 1]
