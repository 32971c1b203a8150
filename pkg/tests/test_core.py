import dataclasses
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from collapsenoise import core
from collapsenoise.core import (
    CONSTANTS,
    CollapseParams,
    Geometry,
    Material,
    Oscillator,
    Readout,
    ValidationError,
    check_dp_validity,
    geometry_from_mass,
    validate_experiment,
)


def test_codata_2018_values():
    assert CONSTANTS.hbar == 1.054571817e-34
    assert CONSTANTS.k_B == 1.380649e-23
    assert CONSTANTS.G == 6.67430e-11
    assert CONSTANTS.amu == 1.66053906660e-27
    assert CONSTANTS.c == 299792458.0
    assert core.HBAR is CONSTANTS.hbar


def test_constants_are_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        CONSTANTS.hbar = 1.0


def test_single_source_of_constants():
    from collapsenoise import bounds, dynamics, geometry

    assert bounds.HBAR == dynamics.HBAR == core.HBAR
    assert geometry.AMU == core.AMU


@pytest.mark.parametrize(
    "geom, volume",
    [
        (Geometry.cuboid(1.0, 2.0, 3.0), 6.0),
        (Geometry.disc(2.0, 0.5), math.pi * 2.0),
        (Geometry.sphere(1.5), 4.0 / 3.0 * math.pi * 1.5**3),
    ],
)
def test_volumes(geom, volume):
    assert geom.volume() == pytest.approx(volume, rel=1e-15)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_lengths_must_be_positive(bad):
    with pytest.raises(ValidationError):
        Geometry.cube(bad)
    with pytest.raises(ValidationError):
        Geometry.disc(1.0, bad)


def test_geometry_attribute_access_and_hash():
    g = Geometry.disc(R=2.0, d=0.1)
    assert g.R == 2.0 and g.d == 0.1
    assert hash(g) == hash(Geometry.disc(2.0, 0.1))
    assert Geometry.cube(1.0).is_cube and not Geometry.cuboid(1, 1, 2).is_cube
    with pytest.raises(AttributeError):
        g.b_x


def test_geometry_from_mass():
    cube = geometry_from_mass("cube", 40.0, 2300.0)
    assert cube.b_x == pytest.approx(0.2590, abs=2e-4)
    disc = geometry_from_mass("disc", 1e-7, 2000.0, 1e-4)
    assert disc.R == pytest.approx(math.sqrt(1e-7 / (2000 * math.pi * 1e-4)))
    with pytest.raises(ValidationError):
        geometry_from_mass("disc", 1.0, 1.0)


def _osc(m):
    return Oscillator.from_q(m, 2 * math.pi, 1e4, 300.0)


def test_validate_gw_cube_accepted():
    rep = validate_experiment(Geometry.cube(0.2589), Material(2300.0), _osc(40.0))
    assert rep.geometric_mass == pytest.approx(39.9, abs=0.05)
    assert rep.warnings == ()


def test_validate_hypothetical_disc_accepted():
    rep = validate_experiment(Geometry.disc(4e-4, 1e-4), Material(2000.0), _osc(1e-7))
    assert rep.geometric_mass == pytest.approx(1.005e-7, rel=1e-3)


def test_validate_mass_mismatch_rejected():
    with pytest.raises(ValidationError, match="differs"):
        validate_experiment(Geometry.sphere(1.0), Material(1000.0), _osc(1.0))
    rep = validate_experiment(Geometry.sphere(1.0), Material(1000.0), _osc(1.0),
                              geometry_carries_mass=False)
    assert any("differs" in w for w in rep.warnings)


def test_validate_is_pure():
    args = (Geometry.cube(0.2589), Material(2300.0), _osc(40.0))
    assert validate_experiment(*args) == validate_experiment(*args)


def test_high_temperature_flag():
    cold = Oscillator(1e-12, 2 * math.pi * 1.1e7, 1.0, 1e-4)
    assert not cold.high_temperature_valid
    rep = validate_experiment(Geometry.point(), Material(1.0), cold)
    assert any("high-temperature" in w for w in rep.warnings)
    assert Oscillator(1.0, 1.0, 1.0, 1.0).high_temperature_valid
    # the aluminium drum of the survey sits at k_B T ~ 28 hbar Omega
    assert Oscillator(4.8e-14, 2 * math.pi * 1.1e7, 1.0, 0.015).high_temperature_valid


@given(st.floats(1e-3, 1e9), st.floats(1e-3, 1e9))
def test_q_gamma_round_trip(Omega, Q):
    o = Oscillator.from_q(1.0, Omega, Q, 1.0)
    assert o.gamma == Omega / Q
    assert Oscillator(1.0, Omega, Omega / o.Q, 1.0).gamma == pytest.approx(o.gamma, rel=1e-15)


def test_lattice_consistency():
    Material(2330.0, 5.43e-10, 2330.0 * 5.43e-10**3 * 1.009)
    with pytest.raises(ValidationError, match="1%"):
        Material(2330.0, 5.43e-10, 2330.0 * 5.43e-10**3 * 1.02)
    with pytest.raises(ValidationError):
        Material(2330.0, 5.43e-10)


def test_readout_optics_consistency():
    rd = Readout.from_optics(1e3, 7.4e6, 1e4, 1e-3, 1.77e15)
    assert rd.g == pytest.approx(7.4e6 * math.sqrt(1e4 * 1e-3 / (core.HBAR * 1.77e15)))
    with pytest.raises(ValidationError):
        Readout(rd.g * (1 + 1e-9), 1e3, rd.wavenumber, rd.finesse, rd.photon_flux)
    with pytest.raises(ValidationError):
        Readout(1.0, 1.0, wavenumber=1.0)


def test_collapse_params():
    assert CollapseParams().r_csl == 1e-7
    with pytest.raises(ValidationError):
        CollapseParams(-1e-8)
    with pytest.raises(ValidationError):
        CollapseParams(1e-8, 0.0)


def test_dp_validity_boundary():
    a = 5e-10
    check_dp_validity(a / 5, a)
    with pytest.raises(ValidationError):
        check_dp_validity(a / 2, a)
