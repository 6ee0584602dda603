import math

import numpy as np
import pytest

from superatom import ConfigError, build_disc_array, gaussian_mode, uniform_mode, validate_bragg
from superatom.units import K


@pytest.mark.parametrize(
    "nside,shape,natoms",
    [
        (3, "disc", 5),
        (3, "auto", 9),
        (7, "auto", 49),
        (9, "auto", 81),
        (15, "auto", 149),
        (21, "auto", 317),
        (31, "auto", 709),
        (21, "full", 441),
    ],
)
def test_atom_counts(nside, shape, natoms):
    geom = build_disc_array(nside, 0.75, shape=shape)
    assert geom.natoms == natoms


def test_auto_shape_switchover():
    assert build_disc_array(9, 0.75).shape == "full"
    assert build_disc_array(11, 0.75).shape == "disc"


def test_positions_centered_and_planar():
    geom = build_disc_array(21, 0.75)
    assert np.allclose(geom.positions.mean(axis=0), 0.0, atol=1e-12)
    assert np.all(geom.positions[:, 2] == 0.0)
    # disc radius never exceeds the half diagonal of the generating square
    assert geom.radius() <= (geom.nside - 1) / 2 * geom.spacing * math.sqrt(2) + 1e-12


def test_positions_deterministic_ordering():
    a = build_disc_array(15, 0.68)
    b = build_disc_array(15, 0.68)
    assert np.array_equal(a.positions, b.positions)
    y = a.positions[:, 1]
    assert np.all(np.diff(y) >= -1e-12)  # sorted by row first


@pytest.mark.parametrize("nside,spacing", [(0, 0.75), (5, 0.0), (5, -1.0)])
def test_invalid_geometry_rejected(nside, spacing):
    with pytest.raises(ConfigError):
        build_disc_array(nside, spacing)


def test_unknown_shape_rejected():
    with pytest.raises(ConfigError):
        build_disc_array(5, 0.75, shape="hexagon")


def test_gaussian_mode_normalization():
    geom = build_disc_array(21, 0.75)
    mode = gaussian_mode(geom, 3.0)
    assert 0.99 <= mode.norm_area <= 1.01
    # peak amplitude at the central atom
    assert np.argmax(np.abs(mode.u)) == np.argmin(np.linalg.norm(geom.positions, axis=1))


def test_gaussian_mode_waist_containment():
    # a beam wider than the array is not fully sampled and norm_area drops
    geom = build_disc_array(15, 0.75)
    wide = gaussian_mode(geom, 20.0)
    assert wide.norm_area < 0.9


def test_tilted_mode_phase_gradient():
    geom = build_disc_array(11, 0.75)
    theta = math.radians(5.0)
    m0 = gaussian_mode(geom, 3.0)
    mt = gaussian_mode(geom, 3.0, theta=theta)
    x = geom.positions[:, 0]
    expected = np.exp(1j * K * math.sin(theta) * x)
    assert np.allclose(mt.u / m0.u, expected, atol=1e-12)


def test_uniform_mode_density():
    geom = build_disc_array(15, 0.6)
    mode = uniform_mode(geom)
    assert mode.norm_area == 1.0
    assert np.allclose(np.abs(mode.u) ** 2, 1.0 / (geom.natoms * geom.spacing**2))


def test_invalid_mode_parameters():
    geom = build_disc_array(5, 0.75)
    with pytest.raises(ConfigError):
        gaussian_mode(geom, 0.0)
    with pytest.raises(ConfigError):
        gaussian_mode(geom, 3.0, theta=math.pi / 2)


class TestBragg:
    def test_normal_incidence_subwavelength(self):
        rep = validate_bragg(0.75, 0.0)
        assert rep.ok
        assert rep.margin == pytest.approx(0.25)

    def test_threshold_angle_three_quarters(self):
        rep = validate_bragg(0.75, 0.0)
        assert rep.threshold_angle == pytest.approx(math.asin(1.0 / 3.0))
        assert math.degrees(rep.threshold_angle) == pytest.approx(19.47, abs=0.01)

    def test_beyond_threshold_fails(self):
        rep = validate_bragg(0.75, math.radians(25.0))
        assert not rep.ok
        assert rep.margin < 0

    def test_half_wavelength_always_safe(self):
        rep = validate_bragg(0.5, math.radians(80.0))
        assert rep.ok
        assert rep.threshold_angle is None

    def test_wavelength_spacing_never_safe_tilted(self):
        rep = validate_bragg(1.0, 0.0)
        assert rep.threshold_angle == 0.0

    def test_boolean_coercion(self):
        assert validate_bragg(0.6, 0.0)
        assert not validate_bragg(0.9, math.radians(30.0))
