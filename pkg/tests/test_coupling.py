import math

import numpy as np
import pytest

from superatom import (
    ConfigError,
    build_disc_array,
    collective_parameters,
    coupling_matrix,
    gaussian_mode,
    greens_tensor,
    load_coupling,
    save_coupling,
)
from superatom.lattice import ArrayGeometry
from superatom.units import K, collective_rate_infinite

# Two-atom couplings at separation 0.75 lambda, evaluated independently from
# the dyadic formula (frozen reference values).
J_CIRC = -0.016886863940389647
G_CIRC = -0.16632195074371747
J_TRANSVERSE = 0.03377372788077924
G_TRANSVERSE = -0.3039758708801465
J_LONGITUDINAL = -0.06754745576155852
G_LONGITUDINAL = -0.028668030607288425


def two_atom_geometry(separation, axis=0):
    pos = np.zeros((2, 3))
    pos[1, axis] = separation
    return ArrayGeometry(positions=pos, spacing=separation, nside=2, shape="full")


class TestGreensTensor:
    def test_far_field_transverse_magnitude(self):
        r = 500.0
        g = greens_tensor(np.array([0.0, 0.0, r]))
        # transverse (x) component approaches the spherical-wave envelope
        assert abs(abs(g[0, 0]) - 1.0 / (4 * math.pi * r)) < 1e-3 / (4 * math.pi * r)

    def test_zero_separation_rejected(self):
        with pytest.raises(ConfigError):
            greens_tensor(np.zeros(3))

    def test_longitudinal_projection_structure(self):
        # along the separation axis only the longitudinal structure remains
        r = 0.4
        g = greens_tensor(np.array([r, 0.0, 0.0]))
        kr = K * r
        c1 = 1 + 1j / kr - 1 / kr**2
        c2 = 1 + 3j / kr - 3 / kr**2
        pref = np.exp(1j * kr) / (4 * math.pi * r)
        assert g[0, 0] == pytest.approx(pref * (c1 - c2), abs=1e-15)
        assert g[1, 1] == pytest.approx(pref * c1, abs=1e-15)
        assert g[0, 1] == 0.0

    def test_decay_contraction_continuous_at_origin(self):
        # 2 * Im[(3 pi / k) d* G d] -> 1 as r -> 0 for any direction
        d = np.array([1.0, 1.0j, 0.0]) / math.sqrt(2)
        for rvec in ([1e-4, 0, 0], [0, 1e-4, 0], [1e-4, 1e-4, 1e-4]):
            g = greens_tensor(np.array(rvec, dtype=float))
            val = 2.0 * np.imag(3 * math.pi / K * np.conj(d) @ g @ d)
            assert val == pytest.approx(1.0, abs=1e-6)


class TestCouplingMatrix:
    def test_single_atom(self):
        geom = build_disc_array(1, 0.75)
        cm = coupling_matrix(geom)
        assert cm.J.shape == (1, 1)
        assert cm.J[0, 0] == 0.0
        assert cm.Gam[0, 0] == 1.0

    def test_two_atom_circular_against_direct_evaluation(self):
        cm = coupling_matrix(two_atom_geometry(0.75), polarization="circular")
        assert cm.J[0, 1] == pytest.approx(J_CIRC, abs=1e-12)
        assert cm.Gam[0, 1] == pytest.approx(G_CIRC, abs=1e-12)

    def test_two_atom_matches_greens_contraction(self):
        # independent route through the full dyadic
        d = np.array([1.0, 1.0j, 0.0]) / math.sqrt(2)
        sep = np.array([0.33, -0.41, 0.0])
        pos = np.zeros((2, 3))
        pos[1] = sep
        geom = ArrayGeometry(positions=pos, spacing=0.5, nside=2, shape="full")
        cm = coupling_matrix(geom, polarization="circular")
        m = 3 * math.pi / K * np.conj(d) @ greens_tensor(sep) @ d
        assert cm.J[0, 1] == pytest.approx(m.real, abs=1e-12)
        assert cm.Gam[0, 1] == pytest.approx(2 * m.imag, abs=1e-12)

    def test_circular_in_plane_isotropy(self):
        cm_x = coupling_matrix(two_atom_geometry(0.75, axis=0))
        cm_y = coupling_matrix(two_atom_geometry(0.75, axis=1))
        assert cm_x.J[0, 1] == pytest.approx(cm_y.J[0, 1], abs=1e-14)
        assert cm_x.Gam[0, 1] == pytest.approx(cm_y.Gam[0, 1], abs=1e-14)

    def test_linear_polarization_anisotropy(self):
        cm_long = coupling_matrix(two_atom_geometry(0.75, axis=0), polarization="x")
        cm_trans = coupling_matrix(two_atom_geometry(0.75, axis=1), polarization="x")
        assert cm_long.J[0, 1] == pytest.approx(J_LONGITUDINAL, abs=1e-12)
        assert cm_trans.J[0, 1] == pytest.approx(J_TRANSVERSE, abs=1e-12)
        assert cm_long.Gam[0, 1] == pytest.approx(G_LONGITUDINAL, abs=1e-12)
        assert cm_trans.Gam[0, 1] == pytest.approx(G_TRANSVERSE, abs=1e-12)
        assert abs(cm_long.J[0, 1] - cm_trans.J[0, 1]) > 0.01

    def test_coincident_atoms_rejected(self):
        pos = np.zeros((2, 3))
        geom = ArrayGeometry(positions=pos, spacing=0.75, nside=2, shape="full")
        with pytest.raises(ConfigError):
            coupling_matrix(geom)

    def test_bad_polarization_rejected(self):
        geom = build_disc_array(3, 0.75)
        with pytest.raises(ConfigError):
            coupling_matrix(geom, polarization="z+")
        with pytest.raises(ConfigError):
            coupling_matrix(geom, polarization=[1.0, 1.0, 0.0])

    @pytest.mark.parametrize("spacing", [0.5, 0.65, 0.75])
    @pytest.mark.parametrize("nside", [5, 11, 21])
    def test_symmetry_and_psd(self, spacing, nside):
        geom = build_disc_array(nside, spacing)
        cm = coupling_matrix(geom)
        assert np.max(np.abs(cm.J - cm.J.T)) < 1e-12
        assert np.max(np.abs(cm.Gam - cm.Gam.T)) < 1e-12
        evals = np.linalg.eigvalsh(cm.Gam)
        assert evals.min() >= -1e-10

    def test_central_index_is_origin_atom(self):
        geom = build_disc_array(21, 0.75)
        cm = coupling_matrix(geom)
        assert np.allclose(geom.positions[cm.central_index], 0.0)


class TestCollectiveParameters:
    def test_single_atom_limit(self):
        geom = build_disc_array(1, 0.75)
        cm = coupling_matrix(geom)
        col = collective_parameters(cm)["lattice_sum"]
        assert col.delta_c == 0.0
        assert col.gamma_c == 1.0

    @pytest.mark.parametrize(
        "spacing,expected", [(0.75, 0.4244131815783876), (0.65, 0.5651024035708832)]
    )
    def test_mode_weighted_rate_near_infinite_array(self, spacing, expected):
        geom = build_disc_array(31, spacing)
        cm = coupling_matrix(geom)
        mode = gaussian_mode(geom, 4.0)
        col = collective_parameters(cm, mode)["mode_weighted"]
        assert col.gamma_c == pytest.approx(expected, rel=0.03)
        assert col.gamma_c == pytest.approx(collective_rate_infinite(spacing), rel=0.03)

    def test_mode_weighted_requires_matching_size(self):
        geom = build_disc_array(11, 0.75)
        cm = coupling_matrix(geom)
        mode = gaussian_mode(build_disc_array(7, 0.75), 3.0)
        with pytest.raises(ConfigError):
            collective_parameters(cm, mode)

    def test_rate_positive_subwavelength(self):
        for spacing in (0.5, 0.65, 0.75):
            geom = build_disc_array(15, spacing)
            cm = coupling_matrix(geom)
            mode = gaussian_mode(geom, 3.0)
            col = collective_parameters(cm, mode)
            assert col["mode_weighted"].gamma_c > 0
            assert col["lattice_sum"].gamma_c > 0


class TestBinaryRoundTrip:
    def test_save_load_identity(self, tmp_path):
        geom = build_disc_array(11, 0.68)
        cm = coupling_matrix(geom)
        path = tmp_path / "cm.bin"
        save_coupling(path, cm)
        back = load_coupling(path, central_index=cm.central_index)
        assert np.array_equal(back.J, cm.J)
        assert np.array_equal(back.Gam, cm.Gam)
        assert back.k == cm.k
        assert back.central_index == cm.central_index

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 12)
        with pytest.raises(ConfigError):
            load_coupling(path)

    def test_truncated_rejected(self, tmp_path):
        geom = build_disc_array(5, 0.75)
        cm = coupling_matrix(geom)
        path = tmp_path / "cm.bin"
        save_coupling(path, cm)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ConfigError):
            load_coupling(path)
