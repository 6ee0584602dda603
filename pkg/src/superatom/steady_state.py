"""Weak-drive steady states of the driven array.

The probe couples g -> e, a classical control field couples e -> r with Rabi
frequency Omega, and the single-excitation response is obtained from dense
linear solves of the coupled-dipole equations.  The far-detuned intermediate
state can be eliminated, which yields an effective two-level (g -> r) model
with rescaled couplings; both models are exposed so they can be compared.

Reflection, transmission and loss refer to the mode-projected outputs

    a_back  = i (g/c) sum_j u*_j e_j ,     a_fwd = a_in + i (g/c) sum_j u*_j e_j ,

with g^2/c = 3/(8 pi) in natural units; the infinite-array limit of the
reflection amplitude reproduces the closed form implemented in
``reflection_closed_form``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .coupling import CouplingMatrix, collective_parameters
from .errors import ConfigError, NumericalError
from .lattice import ArrayGeometry, ModeVector
from .units import G2_OVER_C

G_COUPLING = math.sqrt(G2_OVER_C)  # g in units with c = 1

_SINGULAR_TOL = 1e-12
_RESIDUAL_TOL = 1e-8


@dataclass
class DriveParams:
    """Probe/control drive configuration (all rates in units of Gamma).

    delta_e : probe detuning from the bare e resonance
    delta_r : additional two-photon detuning of the Rydberg state
    omega   : control Rabi frequency (e <-> r)
    omega_p : peak probe Rabi frequency at the beam axis
    gamma   : Rydberg-state decay rate
    """

    delta_e: float = 0.0
    delta_r: float = 0.0
    omega: float = 0.0
    omega_p: float = 1e-3
    gamma: float = 0.0


@dataclass
class EffectiveParams:
    """Two-level (g -> r) model obtained by eliminating the e manifold.

    Couplings are rescaled by (Omega / delta_e)^2 and the drive coupling by
    gbar = -g Omega / delta_e.  ``epsilon`` is the magnitude of the neglected
    far-off-resonant emission amplitude per unit input; its effect on output
    intensities is of order epsilon^2.
    """

    delta_bar: float
    gbar_over_g: float
    Jbar: np.ndarray
    Gambar: np.ndarray
    gamma: float
    delta_c_bar: float = 0.0
    gamma_c_bar: float = 0.0
    epsilon: float = 0.0
    delta_e: float = 0.0
    omega: float = 0.0
    delta_r: float = 0.0

    @property
    def gbar(self) -> float:
        return G_COUPLING * self.gbar_over_g

    def complex_coupling(self) -> np.ndarray:
        return self.Jbar + 0.5j * self.Gambar


@dataclass
class SteadyState:
    """Single-excitation steady state and mode-projected observables."""

    e_amp: np.ndarray
    r_amp: np.ndarray
    refl_amp: complex
    R: float
    T: float
    L: float
    a_in: float


@dataclass
class LinearSpectrum:
    grid: np.ndarray
    R: np.ndarray
    T: np.ndarray
    L: np.ndarray
    refl_amp: np.ndarray | None = None


def _solve_response(wtot: np.ndarray, delta: complex, source: np.ndarray) -> np.ndarray:
    """Solve (delta I + W) x = -source with a residual check."""
    a = wtot.copy()
    idx = np.arange(a.shape[0])
    a[idx, idx] += delta
    try:
        x = np.linalg.solve(a, -source)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular single-excitation system: {exc}") from exc
    res = np.linalg.norm(a @ x + source)
    scale = np.linalg.norm(source)
    if scale > 0 and res > _RESIDUAL_TOL * max(scale, np.linalg.norm(x)):
        raise NumericalError(f"ill-conditioned single-excitation solve, residual {res:.2e}")
    return x


def _ports_from_amplitudes(u: np.ndarray, e_amp: np.ndarray, a_in: float):
    back = 1j * G_COUPLING * np.vdot(u, e_amp) / a_in
    R = abs(back) ** 2
    T = abs(1.0 + back) ** 2
    return back, R, T, 1.0 - R - T


def probe_input_amplitude(mode: ModeVector, omega_p: float) -> float:
    """Input field amplitude a_in for a given peak probe Rabi frequency."""
    peak = float(np.max(np.abs(mode.u)))
    if peak == 0.0:
        raise ConfigError("drive mode has no support on the array")
    return omega_p / (G_COUPLING * peak)


def solve_single_excitation_3level(
    geom: ArrayGeometry,
    cm: CouplingMatrix,
    mode: ModeVector,
    drive: DriveParams,
) -> SteadyState:
    """Steady state of the three-level array for a weak coherent probe.

    The Rydberg coherence is eliminated exactly at fixed detuning, which
    turns the e-manifold equations into a single dense linear system.  With
    omega = 0 the Rydberg state decouples and the result is the bare
    two-level (g -> e) array response.
    """
    if mode.size != geom.natoms or cm.natoms != geom.natoms:
        raise ConfigError("geometry, coupling matrix and mode sizes disagree")
    wtot = cm.complex_coupling()
    a_in = probe_input_amplitude(mode, drive.omega_p)
    source = G_COUPLING * a_in * mode.u

    if drive.omega != 0.0:
        d_r = drive.delta_e + drive.delta_r + 0.5j * drive.gamma
        if abs(d_r) < _SINGULAR_TOL:
            raise NumericalError(
                "exact dark resonance (delta_e + delta_r = 0 with gamma = 0): "
                "Rydberg elimination is singular"
            )
        delta_eff = drive.delta_e - drive.omega**2 / d_r
    else:
        d_r = None
        delta_eff = complex(drive.delta_e)

    e_amp = _solve_response(wtot, delta_eff, source)
    if d_r is not None:
        r_amp = -drive.omega * e_amp / d_r
    else:
        r_amp = np.zeros_like(e_amp)

    back, R, T, L = _ports_from_amplitudes(mode.u, e_amp, a_in)
    return SteadyState(e_amp=e_amp, r_amp=r_amp, refl_amp=back, R=R, T=T, L=L, a_in=a_in)


def reduce_two_level(
    drive: DriveParams,
    cm: CouplingMatrix,
    mode: ModeVector | None = None,
) -> EffectiveParams:
    """Eliminate the intermediate state: effective g -> r model parameters.

    delta_bar = delta_e + delta_r - Omega^2/delta_e, couplings rescaled by
    (Omega/delta_e)^2.  When a mode is given, the mode-weighted collective
    shift and rate of the rescaled couplings are attached.
    """
    if drive.delta_e == 0.0:
        raise ConfigError("two-level reduction requires a nonzero intermediate detuning")
    ratio = drive.omega / drive.delta_e
    delta_bar = drive.delta_e + drive.delta_r - drive.omega**2 / drive.delta_e
    scale = ratio**2
    eff = EffectiveParams(
        delta_bar=delta_bar,
        gbar_over_g=-ratio,
        Jbar=scale * cm.J,
        Gambar=scale * cm.Gam,
        gamma=drive.gamma,
        delta_e=drive.delta_e,
        omega=drive.omega,
        delta_r=drive.delta_r,
    )
    if mode is not None:
        col = collective_parameters(cm, mode)["mode_weighted"]
        eff.delta_c_bar = scale * col.delta_c
        eff.gamma_c_bar = scale * col.gamma_c
        eff.epsilon = G2_OVER_C * float(np.sum(np.abs(mode.u) ** 2)) / abs(drive.delta_e)
        if eff.epsilon**2 > 1e-3:
            warnings.warn(
                f"neglected intermediate-state emission is not small: "
                f"epsilon^2 = {eff.epsilon**2:.2e}",
                stacklevel=2,
            )
    return eff


def solve_single_excitation_2level(
    geom: ArrayGeometry,
    eff: EffectiveParams,
    mode: ModeVector,
    delta_bar: float | None = None,
    omega_p: float = 1e-3,
) -> SteadyState:
    """Steady state of the effective two-level model at detuning delta_bar."""
    if mode.size != geom.natoms:
        raise ConfigError("geometry and mode sizes disagree")
    db = eff.delta_bar if delta_bar is None else delta_bar
    wtot = eff.complex_coupling()
    gbar = eff.gbar
    if gbar == 0.0:
        raise ConfigError("effective drive coupling vanishes (Omega = 0)")
    a_in = omega_p / (abs(gbar) * float(np.max(np.abs(mode.u))))
    source = gbar * a_in * mode.u
    r_amp = _solve_response(wtot, db + 0.5j * eff.gamma, source)
    back = 1j * gbar * np.vdot(mode.u, r_amp) / a_in
    R = abs(back) ** 2
    T = abs(1.0 + back) ** 2
    return SteadyState(
        e_amp=np.zeros_like(r_amp),
        r_amp=r_amp,
        refl_amp=back,
        R=R,
        T=T,
        L=1.0 - R - T,
        a_in=a_in,
    )


def spectrum_3level(geom, cm, mode, drive: DriveParams, de_grid) -> LinearSpectrum:
    """Sweep the probe detuning delta_e; returns mode-projected R, T, L."""
    de_grid = np.asarray(de_grid, dtype=float)
    R = np.empty_like(de_grid)
    T = np.empty_like(de_grid)
    refl = np.empty(de_grid.shape, dtype=complex)
    for i, de in enumerate(de_grid):
        d = DriveParams(
            delta_e=float(de),
            delta_r=drive.delta_r,
            omega=drive.omega,
            omega_p=drive.omega_p,
            gamma=drive.gamma,
        )
        ss = solve_single_excitation_3level(geom, cm, mode, d)
        R[i], T[i], refl[i] = ss.R, ss.T, ss.refl_amp
    return LinearSpectrum(grid=de_grid, R=R, T=T, L=1.0 - R - T, refl_amp=refl)


def spectrum_2level(geom, eff: EffectiveParams, mode, dbar_grid, omega_p=1e-3) -> LinearSpectrum:
    """Sweep the effective detuning delta_bar at fixed effective couplings."""
    dbar_grid = np.asarray(dbar_grid, dtype=float)
    R = np.empty_like(dbar_grid)
    T = np.empty_like(dbar_grid)
    refl = np.empty(dbar_grid.shape, dtype=complex)
    for i, db in enumerate(dbar_grid):
        ss = solve_single_excitation_2level(geom, eff, mode, delta_bar=float(db), omega_p=omega_p)
        R[i], T[i], refl[i] = ss.R, ss.T, ss.refl_amp
    return LinearSpectrum(grid=dbar_grid, R=R, T=T, L=1.0 - R - T, refl_amp=refl)


def spectrum_2level_mapped(geom, cm, mode, drive: DriveParams, de_grid) -> LinearSpectrum:
    """Reduced-model spectrum on a probe-detuning grid.

    The elimination is redone at every grid point, so the effective couplings
    track the swept detuning exactly as in the underlying three-level sweep;
    this is the curve to lay over a ``spectrum_3level`` result.
    """
    de_grid = np.asarray(de_grid, dtype=float)
    R = np.empty_like(de_grid)
    T = np.empty_like(de_grid)
    refl = np.empty(de_grid.shape, dtype=complex)
    for i, de in enumerate(de_grid):
        d = DriveParams(
            delta_e=float(de),
            delta_r=drive.delta_r,
            omega=drive.omega,
            omega_p=drive.omega_p,
            gamma=drive.gamma,
        )
        eff = reduce_two_level(d, cm)
        ss = solve_single_excitation_2level(
            geom, eff, mode, delta_bar=eff.delta_bar, omega_p=drive.omega_p
        )
        R[i], T[i], refl[i] = ss.R, ss.T, ss.refl_amp
    return LinearSpectrum(grid=de_grid, R=R, T=T, L=1.0 - R - T, refl_amp=refl)


# ---------------------------------------------------------------------------
# closed forms and resonance bookkeeping


def reflection_closed_form(delta_e, drive: DriveParams, delta_c: float, gamma_c: float, spacing: float):
    """Infinite-array reflectance of the three-level model.

    R(delta_e) = | (g^2/(c a^2)) / (delta_e + delta_c
                 - Omega^2/(delta_e + delta_r + i gamma/2) + i Gamma_c/2) |^2
    """
    delta_e = np.asarray(delta_e, dtype=float)
    num = G2_OVER_C / spacing**2
    d_r = delta_e + drive.delta_r + 0.5j * drive.gamma
    den = delta_e + delta_c - drive.omega**2 / d_r + 0.5j * gamma_c
    return np.abs(num / den) ** 2


def reflection_closed_form_2level(delta_bar, eff_delta_c: float, eff_gamma_c: float, gamma: float):
    """Effective-model reflectance |(Gbar_c/2) / (dbar + Dbar_c + i(Gbar_c + gamma)/2)|^2."""
    delta_bar = np.asarray(delta_bar, dtype=float)
    den = delta_bar + eff_delta_c + 0.5j * (eff_gamma_c + gamma)
    return np.abs(0.5 * eff_gamma_c / den) ** 2


def blockaded_reflection(delta_e, delta_c: float, gamma_c: float, spacing: float):
    """Reflectance of a fully blockaded array (bare e response, control decoupled)."""
    delta_e = np.asarray(delta_e, dtype=float)
    num = G2_OVER_C / spacing**2
    den = delta_e + delta_c + 0.5j * gamma_c
    return np.abs(num / den) ** 2


def blockaded_bound(gamma_c: float, omega: float) -> float:
    """Upper bound (Gamma_c / Omega)^2 / 4 on the blockaded reflectance at the narrow resonance."""
    return 0.25 * (gamma_c / omega) ** 2


def at_resonances(delta_r: float, omega: float, delta_c: float = 0.0):
    """Positions of the two dressed-state reflection resonances.

    delta_e(+/-) = [-(delta_r + delta_c) +/- sqrt((delta_r - delta_c)^2 + 4 Omega^2)] / 2
    Returned as (narrow, broad): the narrow branch is the one closer to the
    bare two-photon resonance delta_e = -delta_r.
    """
    disc = math.sqrt((delta_r - delta_c) ** 2 + 4.0 * omega**2)
    plus = 0.5 * (-(delta_r + delta_c) + disc)
    minus = 0.5 * (-(delta_r + delta_c) - disc)
    if abs(plus + delta_r) <= abs(minus + delta_r):
        return plus, minus
    return minus, plus


def delta_e_for_dbar(delta_bar: float, delta_r: float, omega: float) -> float:
    """Invert delta_bar(delta_e) on the narrow branch.

    Solves delta_e^2 + (delta_r - delta_bar) delta_e - Omega^2 = 0 and picks
    the root adiabatically connected to the two-photon resonance.
    """
    b = delta_r - delta_bar
    disc = math.sqrt(b * b + 4.0 * omega**2)
    r1 = 0.5 * (-b + disc)
    r2 = 0.5 * (-b - disc)
    return r1 if abs(r1 + delta_r) <= abs(r2 + delta_r) else r2


def blockade_radius(c6: float, gamma_c_bar: float) -> float:
    """Distance where the van der Waals shift equals the collective linewidth."""
    if c6 <= 0 or gamma_c_bar <= 0:
        raise ConfigError("blockade radius needs positive C6 and collective rate")
    return (c6 / gamma_c_bar) ** (1.0 / 6.0)


def resonant_delta_e(cm, mode, drive: DriveParams, iterations: int = 4):
    """Self-consistent intermediate detuning of the narrow collective resonance.

    Iterates delta_bar(delta_e) = -delta_c_bar(delta_e); the mode-weighted
    collective shift depends on delta_e only through the (Omega/delta_e)^2
    scale, so a few fixed-point steps converge far below the linewidth.
    Returns (delta_e, effective) with the reduction evaluated at the solution.
    """
    delta_e = delta_e_for_dbar(0.0, drive.delta_r, drive.omega)
    eff = None
    for _ in range(iterations):
        probe = replace(drive, delta_e=delta_e)
        eff = reduce_two_level(probe, cm, mode)
        delta_e = delta_e_for_dbar(-eff.delta_c_bar, drive.delta_r, drive.omega)
    return delta_e, reduce_two_level(replace(drive, delta_e=delta_e), cm, mode)


@dataclass
class LorentzFit:
    """Least-squares Lorentzian fit A w^2 / ((x - x0)^2 + w^2) + B."""

    amplitude: float
    hwhm: float
    center: float
    offset: float
    residual: float


def fit_lorentzian(grid, values, window: float | None = None) -> LorentzFit:
    """Fit a Lorentzian peak to sampled data.

    ``window`` restricts the fit to |x - argmax| <= window.  Raises
    NumericalError when the optimizer does not converge or the data has no
    usable peak structure.
    """
    from scipy.optimize import least_squares

    x = np.asarray(grid, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 5:
        raise NumericalError("too few points for a Lorentzian fit")
    i0 = int(np.argmax(y))
    if window is not None:
        keep = np.abs(x - x[i0]) <= window
        x, y = x[keep], y[keep]
        i0 = int(np.argmax(y))
    b0 = float(np.min(y))
    a0 = float(y[i0] - b0)
    if a0 <= 0:
        raise NumericalError("no peak above the baseline")
    half = b0 + 0.5 * a0
    above = np.where(y >= half)[0]
    w0 = max(0.5 * (x[above[-1]] - x[above[0]]), 2.0 * np.min(np.diff(x)))

    def model(p):
        a, w, x0, b = p
        return a * w**2 / ((x - x0) ** 2 + w**2) + b - y

    fit = least_squares(model, [a0, w0, x[i0], b0], method="lm")
    if not fit.success:
        raise NumericalError(f"Lorentzian fit failed: {fit.message}")
    a, w, x0, b = fit.x
    return LorentzFit(
        amplitude=float(a),
        hwhm=abs(float(w)),
        center=float(x0),
        offset=float(b),
        residual=float(np.sqrt(np.mean(fit.fun**2))),
    )


def default_spectrum_grid(
    drive: DriveParams,
    delta_c: float,
    gamma_c_bar: float,
    n_main: int = 400,
    n_extra: int = 100,
    pad: float = 5.0,
):
    """Probe-detuning grid covering both dressed resonances.

    n_main points span [delta_e(-) - pad, delta_e(+) + pad] and n_extra extra
    points resolve +/- 5 Gbar_c around the narrow resonance.
    """
    narrow, broad = at_resonances(drive.delta_r, drive.omega, delta_c)
    lo, hi = min(narrow, broad) - pad, max(narrow, broad) + pad
    main = np.linspace(lo, hi, n_main)
    halfwidth = 5.0 * max(gamma_c_bar, 1e-6)
    extra = np.linspace(narrow - halfwidth, narrow + halfwidth, n_extra)
    return np.unique(np.concatenate([main, extra]))
