import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collapsenoise.core import HBAR, K_B, CollapseParams, Oscillator, Readout, ValidationError
from collapsenoise.dynamics import (
    CHANNELS,
    HomodyneRecord,
    SimulationConfig,
    analytic_force_psd,
    channel_rng,
    discrete_susceptibility,
    infer_force_spectrum,
    inverse_susceptibility_magnitude,
    read_record_csv,
    simulate,
    sql_coupling,
    susceptibility,
    write_record_csv,
)
from collapsenoise.spectral import WelchConfig, compare_to_analytic

TWO_PI = 2 * math.pi


def osc_(m=1e-12, f0=100.0, Q=10.0, T=1.0):
    return Oscillator.from_q(m, TWO_PI * f0, Q, T)


def config(osc, n=2**14, wdt=0.02, channels=CHANNELS, seed=1, g=None, lam=0.0, alpha=1e20, **kw):
    dt = wdt / osc.Omega
    g = g or sql_coupling(osc, osc.Omega).g_sql
    return SimulationConfig(osc, Readout(g, osc.Omega), CollapseParams(lam), alpha, dt, n * dt,
                            seed=seed, channels=channels, **kw)


def test_susceptibility_examples():
    o = osc_()
    chi0 = susceptibility(o, 0.0)
    assert chi0.imag == 0 and chi0.real == pytest.approx(1 / (o.mass * o.Omega**2))
    chi = susceptibility(o, o.Omega)
    assert abs(chi) == pytest.approx(1 / (o.mass * o.Omega * o.gamma), rel=1e-12)
    assert np.angle(chi) == pytest.approx(-math.pi / 2, abs=1e-12)
    hi = Oscillator(1.0, 1.0, 1e-6, 1.0)
    w = 1e3
    assert abs(susceptibility(hi, w)) == pytest.approx(1 / w**2, rel=1e-5)
    assert inverse_susceptibility_magnitude(o, 3.0) == pytest.approx(1 / abs(susceptibility(o, 3.0)))
    with pytest.raises(ValidationError):
        susceptibility(o, -1.0)


def test_config_guards():
    o = osc_()
    limit = TWO_PI / (50 * o.Omega)
    SimulationConfig(o, Readout(1.0, 1.0), CollapseParams(), 1.0, limit, 200 * limit)
    with pytest.raises(ValidationError, match="exceeds"):
        SimulationConfig(o, Readout(1.0, 1.0), CollapseParams(), 1.0, 1.01 * limit, 1.0)
    with pytest.raises(ValidationError, match="100 steps"):
        SimulationConfig(o, Readout(1.0, 1.0), CollapseParams(), 1.0, limit, 50 * limit)
    with pytest.raises(ValidationError, match="channels"):
        config(o, channels={"thermal", "gravity"})
    overdamped = Oscillator(1.0, 1.0, 100.0, 1.0)
    with pytest.raises(ValidationError):
        SimulationConfig(overdamped, Readout(1.0, 1.0), CollapseParams(), 1.0, TWO_PI / 50, 100.0)


def test_determinism():
    cfg = config(osc_(), lam=1e-8)
    a, b = simulate(cfg), simulate(cfg)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.p_out, b.p_out)
    assert not np.array_equal(a.x, simulate(config(osc_(), lam=1e-8, seed=2)).x)


def test_channel_streams_are_independent():
    a = channel_rng(5, "thermal").standard_normal(8)
    assert np.array_equal(a, channel_rng(5, "thermal").standard_normal(8))
    assert not np.array_equal(a, channel_rng(5, "csl").standard_normal(8))
    # switching the shot channel off leaves the mechanics untouched
    o = osc_()
    full = simulate(config(o))
    quiet = simulate(config(o, channels={"thermal", "csl", "backaction"}))
    assert np.array_equal(full.x, quiet.x)
    assert np.array_equal(quiet.p_out, quiet.x * config(o).readout.g)


def test_back_action_only_in_dynamics_shot_only_in_record():
    o = osc_()
    shot = simulate(config(o, channels={"shot"}, initial="rest"))
    assert np.all(shot.x == 0) and np.std(shot.p_out) > 0
    ba = simulate(config(o, channels={"backaction"}, initial="rest"))
    assert np.std(ba.x) > 0
    assert np.array_equal(ba.p_out, ba.x * config(o).readout.g)


def test_free_ringdown():
    o = osc_(Q=200.0)
    x0 = 1e-9
    cfg = config(o, n=40000, wdt=0.01, channels=(), initial=(x0, 0.0))
    rec = simulate(cfg)
    t = rec.times
    wd = math.sqrt(o.Omega**2 - o.gamma**2 / 4)
    expected = x0 * np.exp(-o.gamma * t / 2) * (np.cos(wd * t) + o.gamma / (2 * wd) * np.sin(wd * t))
    assert np.max(np.abs(rec.x - expected)) < 0.02 * x0
    energy = 0.5 * o.mass * o.Omega**2 * rec.x**2 + 0.5 * rec.p**2 / o.mass
    # cycle-averaged energy decays at rate gamma
    period = int(round(TWO_PI / o.Omega / cfg.dt))
    e = np.array([energy[i:i + period].mean() for i in range(0, t.size - period, period)])
    tc = np.arange(e.size) * period * cfg.dt
    rate = -np.polyfit(tc, np.log(e), 1)[0]
    assert rate == pytest.approx(o.gamma, rel=0.01)


def test_discrete_response_converges_and_is_stable_under_halving():
    for Q in (1.0, 5.0, 100.0, 1e4):
        o = osc_(Q=Q)
        dt = TWO_PI / (50 * max(o.Omega, o.gamma))
        w = np.linspace(1e-3 * o.Omega, math.pi / (10 * dt), 20001)
        chi2 = np.abs(susceptibility(o, w)) ** 2
        r1 = np.abs(discrete_susceptibility(o, dt, w)) ** 2 / chi2
        r2 = np.abs(discrete_susceptibility(o, dt / 2, w)) ** 2 / chi2
        assert abs(r1.mean() / r2.mean() - 1) < 0.01
        assert np.max(np.abs(r1 - 1)) < 0.02
    o = osc_()
    w = np.array([0.5, 1.0, 2.0]) * o.Omega
    np.testing.assert_allclose(discrete_susceptibility(o, 1e-3 / o.Omega, w), susceptibility(o, w), rtol=1e-5)


def test_fluctuation_dissipation_momentum():
    o = osc_(Q=5.0)
    acc, n = 0.0, 0
    for seed in range(4):
        rec = simulate(config(o, n=2**22, wdt=0.01, channels={"thermal"}, seed=seed))
        acc += float(np.dot(rec.p, rec.p))
        n += rec.p.size
    assert acc / n / (o.mass * K_B * o.temperature) == pytest.approx(1.0, abs=0.02)


def _sinusoid_record(o, g, F0, w0, dt, n):
    t = np.arange(n) * dt
    chi = susceptibility(o, w0)
    x = F0 * abs(chi) * np.sin(w0 * t + np.angle(chi))
    return HomodyneRecord(t, x, np.zeros(n), g * x, {}, dt)


def test_sinusoid_peak_height():
    o = osc_()
    dt = 0.01 / o.Omega
    welch = WelchConfig(4096, 0.5, "hann")
    w0 = 300 * TWO_PI / (4096 * dt)  # bin centred
    F0 = 2e-15
    rec = _sinusoid_record(o, 3.0, F0, w0, dt, 4096 * 16)
    est = infer_force_spectrum(rec, Readout(3.0, o.Omega), o, welch)
    k = int(np.argmax(est.S_f))
    assert est.omega[k] == pytest.approx(w0, rel=1e-12)
    taper = welch.taper()
    factor = taper.sum() ** 2 / (4 * np.sum(taper**2))
    assert est.S_f[k] == pytest.approx(F0**2 * dt * factor, rel=1e-6)


def test_pure_shot_noise_inference():
    o = osc_(f0=10.0)
    g = 1e3
    cfg = config(o, n=2**18, wdt=0.005, channels={"shot"}, g=g)
    est = infer_force_spectrum(simulate(cfg), cfg.readout, o, WelchConfig(4096))
    model = analytic_force_psd(o, cfg.readout, cfg.collapse, cfg.alpha, est.omega, {"shot"})
    band = (5 * o.Omega, 50 * o.Omega)
    assert compare_to_analytic(est, model, band).ratio_ok
    sel = (est.omega > band[0]) & (est.omega < band[1])
    slope = np.polyfit(np.log(est.omega[sel]), np.log(est.S_f[sel]), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.1)


def test_sql_full_simulation_band_average():
    o = osc_(f0=100.0, Q=50.0, T=1e-3)
    w = 4 * o.Omega
    g = sql_coupling(o, w).g_sql
    dt = 0.02 / o.Omega
    cfg = SimulationConfig(o, Readout(g, w), CollapseParams(1e-6), 1e22, dt, (4096 + 255 * 2048) * dt, seed=4)
    est = infer_force_spectrum(simulate(cfg), cfg.readout, o, WelchConfig(4096))
    model = analytic_force_psd(o, cfg.readout, cfg.collapse, cfg.alpha, est.omega)
    sel = (est.omega > 3.5 * o.Omega) & (est.omega < 4.5 * o.Omega)
    ratio = est.S_f[sel].mean() / model.sql[sel].mean()
    assert ratio == pytest.approx(1.0, abs=0.05)


def test_channel_additivity():
    o = osc_(f0=50.0, Q=20.0, T=0.1)
    welch = WelchConfig(8192)
    alpha = 1e21
    lam = o.thermal_diffusion / ((HBAR / 1e-7) ** 2 * alpha)
    diffs, ses = [], []
    for seed in range(50):
        vals = {}
        for key, ch in (("both", {"thermal", "csl"}), ("t", {"thermal"}), ("c", {"csl"})):
            cfg = config(o, n=8192 * 8, wdt=0.02, channels=ch, seed=seed, lam=lam, alpha=alpha)
            est = infer_force_spectrum(simulate(cfg), cfg.readout, o, welch)
            sel = (est.omega > 0.5 * o.Omega) & (est.omega < 2 * o.Omega)
            vals[key] = est.S_f[sel].mean()
        diffs.append(vals["both"] - vals["t"] - vals["c"])
        ses.append(vals["both"])
    diffs = np.array(diffs)
    z = diffs.mean() / (diffs.std(ddof=1) / math.sqrt(diffs.size))
    assert abs(z) < 3
    assert abs(np.mean(ses) / (2 * o.thermal_diffusion) - 1) < 0.05


def test_analytic_psd_components():
    o = osc_()
    w = np.logspace(1, 5, 50)
    rd = Readout(sql_coupling(o, 1e3).g_sql, 1e3)
    psd = analytic_force_psd(o, rd, CollapseParams(1e-8), 1e20, w)
    assert np.allclose(psd.S_f, sum(psd.components.values()), rtol=1e-15)
    assert all(np.all(v >= 0) for v in psd.components.values())
    assert np.all(psd.components["thermal"] == o.thermal_diffusion)
    single = analytic_force_psd(o, rd, CollapseParams(1e-8), 1e20, 1e3)
    shot, ba = single.components["shot"][0], single.components["backaction"][0]
    assert shot == pytest.approx(ba, rel=1e-12)
    assert shot + ba == pytest.approx(HBAR * inverse_susceptibility_magnitude(o, 1e3), rel=1e-12)
    quiet = analytic_force_psd(o, rd, CollapseParams(), 1e20, 1e3, channels={"shot", "backaction"})
    assert quiet.S_f[0] == pytest.approx(HBAR * inverse_susceptibility_magnitude(o, 1e3), rel=1e-12)


@given(st.floats(1e-3, 1e3), st.floats(1e-2, 1e4))
@settings(max_examples=200, deadline=None)
def test_sql_is_a_lower_bound(g_scale, w_ratio):
    o = osc_()
    w = w_ratio * o.Omega
    g_sql = sql_coupling(o, w).g_sql
    at = analytic_force_psd(o, Readout(g_sql * g_scale, w), CollapseParams(), 1.0, w)
    assert at.S_f[0] >= at.sql[0] * (1 - 1e-12)
    if abs(g_scale - 1) > 1e-3:
        assert at.S_f[0] > at.sql[0]


def test_sql_coupling_free_mass_and_power():
    o = Oscillator(1e-9, 1.0, 1e-6, 1.0)
    w = 1e3
    g = sql_coupling(o, w).g_sql
    assert abs(g - w * math.sqrt(o.mass / HBAR)) / g <= 1e-6
    k, F, w_opt = 7.4e6, 1e4, 1.77e15
    res = sql_coupling(o, w, k, F, w_opt)
    rd = Readout.from_optics(w, k, F, res.power_sql, w_opt)
    assert rd.g == pytest.approx(g, rel=1e-12)
    assert sql_coupling(o, w, finesse=F, optical_omega=w_opt).power_sql == pytest.approx(
        g * g * HBAR * w_opt / ((w_opt / 299792458.0) ** 2 * F), rel=1e-15)


def test_inference_requires_samples():
    o = osc_()
    rec = simulate(config(o, n=1000))
    with pytest.raises(ValidationError):
        infer_force_spectrum(rec, Readout(1.0, 1.0), o)


def test_record_csv_round_trip(tmp_path):
    rec = simulate(config(osc_(), n=500))
    path = tmp_path / "r.csv"
    write_record_csv(path, rec, comments=["seed=1"])
    t, x, p = read_record_csv(path)
    np.testing.assert_allclose(x, rec.x, rtol=1e-8)
    np.testing.assert_allclose(p, rec.p_out, rtol=1e-8)
    assert path.read_text().splitlines()[1] == "t,x,p_out"
