import math
import warnings

import numpy as np
import pytest

from superatom import (
    ConfigError,
    DriveParams,
    NumericalError,
    at_resonances,
    build_disc_array,
    coupling_matrix,
    gaussian_mode,
    reduce_two_level,
    solve_single_excitation_2level,
    solve_single_excitation_3level,
    spectrum_3level,
    uniform_mode,
)
from superatom.coupling import collective_parameters
from superatom.steady_state import (
    G_COUPLING,
    blockaded_bound,
    blockaded_reflection,
    blockade_radius,
    default_spectrum_grid,
    delta_e_for_dbar,
    fit_lorentzian,
    reflection_closed_form,
    reflection_closed_form_2level,
    spectrum_2level_mapped,
)
from superatom.units import G2_OVER_C

# Dressed-resonance positions for Omega=8, delta_r=-10, delta_c=0 and the
# blockaded reflectance at the narrow one (a=0.75, infinite-array rates),
# evaluated independently from the quadratic/Lorentzian formulas.
NARROW_RES = 14.433981132056603
BROAD_RES = -4.433981132056603
R_BLOCKADED = 0.0002160984289222253
R_BLOCKADED_BOUND = 0.000703619330849568

FIG2_DRIVE = dict(delta_r=-10.0, omega=8.0, omega_p=1e-3, gamma=0.0)


def small_system(nside=9, spacing=0.75, waist=2.0):
    geom = build_disc_array(nside, spacing)
    cm = coupling_matrix(geom)
    mode = gaussian_mode(geom, waist)
    return geom, cm, mode


class TestResonanceBookkeeping:
    def test_at_resonances_frozen(self):
        narrow, broad = at_resonances(-10.0, 8.0, 0.0)
        assert narrow == pytest.approx(NARROW_RES, abs=1e-12)
        assert broad == pytest.approx(BROAD_RES, abs=1e-12)

    def test_narrow_branch_tracks_two_photon_resonance(self):
        narrow, broad = at_resonances(10.0, 8.0, 0.0)
        assert narrow == pytest.approx(-NARROW_RES, abs=1e-12)
        assert abs(narrow + 10.0) < abs(broad + 10.0)

    def test_detuning_map_roundtrip(self):
        for dbar in np.linspace(-1.0, 1.0, 11):
            de = delta_e_for_dbar(float(dbar), -10.0, 8.0)
            assert de - 10.0 - 64.0 / de == pytest.approx(dbar, abs=1e-12)
            # narrow branch stays near the two-photon resonance delta_e = 10
            assert abs(de - 10.0) < 6.0

    def test_blockaded_closed_form_frozen(self):
        gc = 3.0 / (4.0 * math.pi * 0.75**2)
        val = blockaded_reflection(NARROW_RES, 0.0, gc, 0.75)
        assert val == pytest.approx(R_BLOCKADED, rel=1e-12)
        bound = blockaded_bound(gc, 8.0)
        assert bound == pytest.approx(R_BLOCKADED_BOUND, rel=1e-12)
        assert val < bound

    def test_blockade_radius(self):
        rb = blockade_radius(4.1e7, 0.17)
        assert rb == pytest.approx((4.1e7 / 0.17) ** (1 / 6), rel=1e-12)
        with pytest.raises(ConfigError):
            blockade_radius(-1.0, 0.17)


class TestSingleAtomLimits:
    def test_bare_two_level_reflection(self):
        geom = build_disc_array(1, 0.75)
        cm = coupling_matrix(geom)
        mode = uniform_mode(geom)
        u2 = float(np.abs(mode.u[0]) ** 2)
        for de in (-2.0, 0.0, 0.7):
            drive = DriveParams(delta_e=de, omega=0.0, omega_p=1e-3)
            ss = solve_single_excitation_3level(geom, cm, mode, drive)
            expected = -1j * G2_OVER_C * u2 / (de + 0.5j)
            assert ss.refl_amp == pytest.approx(expected, abs=1e-12)
            assert ss.R == pytest.approx(abs(expected) ** 2, rel=1e-12)

    def test_control_dressed_reflection(self):
        geom = build_disc_array(1, 0.75)
        cm = coupling_matrix(geom)
        mode = uniform_mode(geom)
        u2 = float(np.abs(mode.u[0]) ** 2)
        drive = DriveParams(delta_e=1.3, delta_r=-3.0, omega=2.0, omega_p=1e-3, gamma=1e-4)
        ss = solve_single_excitation_3level(geom, cm, mode, drive)
        d_r = 1.3 - 3.0 + 0.5j * 1e-4
        expected = -1j * G2_OVER_C * u2 / (1.3 - 4.0 / d_r + 0.5j)
        assert ss.refl_amp == pytest.approx(expected, abs=1e-12)

    def test_rydberg_amplitude_relation(self):
        geom = build_disc_array(1, 0.75)
        cm = coupling_matrix(geom)
        mode = uniform_mode(geom)
        drive = DriveParams(delta_e=2.0, delta_r=-1.0, omega=3.0, omega_p=1e-3, gamma=0.0)
        ss = solve_single_excitation_3level(geom, cm, mode, drive)
        d_r = 2.0 - 1.0
        assert ss.r_amp[0] == pytest.approx(-3.0 * ss.e_amp[0] / d_r, abs=1e-14)


class TestSolverProperties:
    def test_linearity_in_probe(self):
        geom, cm, mode = small_system()
        base = DriveParams(delta_e=NARROW_RES, **FIG2_DRIVE)
        strong = DriveParams(delta_e=NARROW_RES, delta_r=-10.0, omega=8.0, omega_p=1e-2, gamma=0.0)
        a = solve_single_excitation_3level(geom, cm, mode, base)
        b = solve_single_excitation_3level(geom, cm, mode, strong)
        assert b.R == pytest.approx(a.R, rel=1e-12)
        assert b.T == pytest.approx(a.T, rel=1e-12)
        assert np.allclose(b.e_amp, 10.0 * a.e_amp, rtol=1e-12)

    def test_output_intensities_physical(self):
        geom, cm, mode = small_system(nside=11, waist=2.5)
        grid = np.linspace(-6.0, 16.0, 40)
        spec = spectrum_3level(geom, cm, mode, DriveParams(**FIG2_DRIVE), grid)
        assert np.all(spec.R >= 0)
        assert np.all(spec.T >= 0)
        assert np.all(spec.R <= 1 + 1e-12)
        assert np.all(spec.L >= -1e-9)

    def test_dark_resonance_guard(self):
        geom, cm, mode = small_system(nside=3)
        drive = DriveParams(delta_e=5.0, delta_r=-5.0, omega=8.0, omega_p=1e-3, gamma=0.0)
        with pytest.raises(NumericalError):
            solve_single_excitation_3level(geom, cm, mode, drive)

    def test_size_mismatch_rejected(self):
        geom, cm, _ = small_system(nside=5)
        wrong = gaussian_mode(build_disc_array(3, 0.75), 2.0)
        with pytest.raises(ConfigError):
            solve_single_excitation_3level(geom, cm, wrong, DriveParams(**FIG2_DRIVE))


class TestTwoLevelReduction:
    def test_requires_finite_intermediate_detuning(self):
        _, cm, _ = small_system(nside=3)
        with pytest.raises(ConfigError):
            reduce_two_level(DriveParams(delta_e=0.0, omega=8.0), cm)

    def test_scaled_couplings(self):
        _, cm, mode = small_system(nside=5)
        drive = DriveParams(delta_e=NARROW_RES, **FIG2_DRIVE)
        eff = reduce_two_level(drive, cm, mode)
        scale = (8.0 / NARROW_RES) ** 2
        assert np.allclose(eff.Jbar, scale * cm.J, rtol=1e-14)
        assert np.allclose(eff.Gambar, scale * cm.Gam, rtol=1e-14)
        assert eff.gbar_over_g == pytest.approx(-8.0 / NARROW_RES, abs=1e-14)
        assert eff.delta_bar == pytest.approx(NARROW_RES - 10.0 - 64.0 / NARROW_RES, abs=1e-12)

    def test_background_amplitude_diagnostic(self):
        _, cm, mode = small_system(nside=9, waist=2.0)
        drive = DriveParams(delta_e=NARROW_RES, **FIG2_DRIVE)
        eff = reduce_two_level(drive, cm, mode)
        expected = G2_OVER_C * float(np.sum(np.abs(mode.u) ** 2)) / NARROW_RES
        assert eff.epsilon == pytest.approx(expected, rel=1e-12)
        assert eff.epsilon**2 < 1e-3

    def test_warns_when_background_not_small(self):
        _, cm, mode = small_system(nside=9)
        drive = DriveParams(delta_e=0.5, delta_r=0.0, omega=1.0, omega_p=1e-3, gamma=0.0)
        with pytest.warns(UserWarning):
            reduce_two_level(drive, cm, mode)

    def test_no_warning_far_detuned(self):
        _, cm, mode = small_system(nside=9)
        drive = DriveParams(delta_e=NARROW_RES, **FIG2_DRIVE)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            reduce_two_level(drive, cm, mode)

    def test_spectra_agree_at_peak_scale(self):
        # the reduced model reproduces the narrow-resonance lineshape to
        # better than 1% of the peak reflectance
        geom, cm, mode = small_system(nside=15, waist=2.5)
        col = collective_parameters(cm, mode)["mode_weighted"]
        narrow, _ = at_resonances(-10.0, 8.0, col.delta_c)
        eff = reduce_two_level(DriveParams(delta_e=narrow, **FIG2_DRIVE), cm, mode)
        dbars = np.linspace(
            -eff.delta_c_bar - 5 * eff.gamma_c_bar,
            -eff.delta_c_bar + 5 * eff.gamma_c_bar,
            21,
        )
        des = np.array([delta_e_for_dbar(float(db), -10.0, 8.0) for db in dbars])
        s3 = spectrum_3level(geom, cm, mode, DriveParams(**FIG2_DRIVE), des)
        s2 = spectrum_2level_mapped(geom, cm, mode, DriveParams(**FIG2_DRIVE), des)
        # finite-size deviation at this small array; the full-size comparison
        # in the acceptance suite holds 1%
        assert np.max(np.abs(s3.R - s2.R)) / np.max(s3.R) < 0.02


class TestClosedForms:
    def test_peak_reflection_near_unity(self):
        # contained beam on a sizeable array: collective mirror with R ~ 1
        geom = build_disc_array(21, 0.75)
        cm = coupling_matrix(geom)
        mode = gaussian_mode(geom, 3.0)
        col = collective_parameters(cm, mode)["mode_weighted"]
        narrow, _ = at_resonances(-10.0, 8.0, col.delta_c)
        ss = solve_single_excitation_3level(
            geom, cm, mode, DriveParams(delta_e=narrow, **FIG2_DRIVE)
        )
        assert ss.R > 0.99
        assert abs(1.0 + ss.refl_amp) < 0.05  # reflection amplitude close to -1

    def test_closed_form_peak_value(self):
        val = reflection_closed_form_2level(0.02, -0.02, 0.13, 0.0)
        assert val == pytest.approx(1.0, abs=1e-12)
        val = reflection_closed_form_2level(0.0, 0.0, 0.13, 0.13)
        assert val == pytest.approx(0.25, abs=1e-12)

    def test_three_level_closed_form_matches_two_level_on_narrow_branch(self):
        # both closed forms describe the same resonance after the exact
        # detuning map; compare them in a small window around the peak
        gc, dc = 0.4244131815783876, 0.0
        drive = DriveParams(**FIG2_DRIVE)
        narrow, _ = at_resonances(-10.0, 8.0, dc)
        scale = (8.0 / narrow) ** 2
        for db in np.linspace(-0.05, 0.05, 11):
            de = delta_e_for_dbar(float(db), -10.0, 8.0)
            r3 = reflection_closed_form(de, drive, dc, gc, 0.75)
            r2 = reflection_closed_form_2level(db, dc * scale, gc * scale, 0.0)
            assert r3 == pytest.approx(r2, rel=2e-2)

    def test_blockaded_solver_agrees_with_closed_form(self):
        # bare e-array response at the narrow detuning vs the Lorentzian
        geom = build_disc_array(21, 0.75)
        cm = coupling_matrix(geom)
        mode = gaussian_mode(geom, 3.0)
        col = collective_parameters(cm, mode)["mode_weighted"]
        narrow, _ = at_resonances(-10.0, 8.0, col.delta_c)
        ss = solve_single_excitation_3level(
            geom, cm, mode, DriveParams(delta_e=narrow, omega=0.0, omega_p=1e-3)
        )
        cf = blockaded_reflection(narrow, col.delta_c, col.gamma_c, 0.75)
        assert ss.R == pytest.approx(cf, rel=0.05)


class TestSpectrumGrid:
    def test_grid_covers_both_resonances(self):
        drive = DriveParams(**FIG2_DRIVE)
        grid = default_spectrum_grid(drive, 0.0, 0.13)
        assert grid.min() < BROAD_RES < NARROW_RES < grid.max()
        assert np.all(np.diff(grid) > 0)

    def test_grid_refined_near_narrow_resonance(self):
        drive = DriveParams(**FIG2_DRIVE)
        grid = default_spectrum_grid(drive, 0.0, 0.13)
        near = np.abs(grid - NARROW_RES) < 5 * 0.13
        far = np.abs(grid - BROAD_RES) < 5 * 0.13
        assert near.sum() > 2 * far.sum()


class TestLorentzianFit:
    def test_recovers_synthetic_peak(self):
        x = np.linspace(-3.0, 3.0, 301)
        y = 0.8 * 0.2**2 / ((x - 0.4) ** 2 + 0.2**2) + 0.05
        fit = fit_lorentzian(x, y)
        assert fit.amplitude == pytest.approx(0.8, rel=1e-8)
        assert fit.hwhm == pytest.approx(0.2, rel=1e-8)
        assert fit.center == pytest.approx(0.4, abs=1e-9)
        assert fit.offset == pytest.approx(0.05, abs=1e-9)

    def test_window_restricts_fit(self):
        x = np.linspace(-10.0, 10.0, 2001)
        y = 1.0 * 0.1**2 / ((x - 1.0) ** 2 + 0.1**2)
        y += 0.3 * 2.0**2 / ((x + 6.0) ** 2 + 2.0**2)
        fit = fit_lorentzian(x, y, window=1.0)
        assert fit.center == pytest.approx(1.0, abs=1e-3)
        assert fit.hwhm == pytest.approx(0.1, rel=0.05)

    def test_flat_data_rejected(self):
        x = np.linspace(0, 1, 50)
        with pytest.raises(NumericalError):
            fit_lorentzian(x, np.ones_like(x))
