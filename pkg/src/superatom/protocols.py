"""Photon storage in the Rydberg manifold and ramped read-out.

A classical two-photon write pulse (probe plus control) imprints the drive
mode onto the g -> r coherence.  In the single-excitation sector the array
acts as one collective two-level system with coupling gbar ||u||, so a pulse
of area pi/2 in that collective variable swaps the ground state into the
mode-matched spin wave.  While stored, the excitation suffers only the slow
Rydberg decay gamma; the dressed exchange Jbar keeps acting and slightly
distorts the profile, which dominates the write infidelity for tight beams.
The dressed radiative part Gambar describes the optically admixed coherence
while the control is on and heavily overestimates the loss of what ends up
as a pure Rydberg excitation, so it is off by default and can be switched
on (``collective_damping=True``) as an upper bound on the write-pulse loss.

Read-out ramps the control back on at the bare e resonance.  The spin wave
converts into an e polarization that radiates through the full dipole
coupling (J, Gamma), and the efficiency is the fraction of the emitted
energy collected in the paraxial drive mode, counting both propagation
directions (the symmetric interferometer folds them into one output):

    eta = 2 (g^2/c) int |sum_j u*_j e_j(t)|^2 dt .

The prefactor is fixed by the uniformly excited infinite array, which decays
at 3 / (4 pi a^2) purely into the specular directions and therefore
retrieves with eta = 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .coupling import CouplingMatrix, collective_parameters
from .errors import ConfigError, NumericalError
from .lattice import ArrayGeometry, ModeVector
from .pulses import PulseSpec
from .steady_state import EffectiveParams
from .units import G2_OVER_C

__all__ = [
    "ControlRamp",
    "RetrievalResult",
    "StorageState",
    "calibrate_pi_area",
    "eit_retrieval",
    "pi_pulse_storage",
]

_NORM_GROWTH_TOL = 1e-6
_RESIDUAL_TARGET = 1e-6


@dataclass
class StorageState:
    """Stored spin wave after the write pulse.

    c0 is the remaining ground-state amplitude and c the per-atom Rydberg
    amplitudes; p_u = |sum_j u*_j c_j|^2 / sum_j |u_j|^2 is the stored
    population in the drive mode.  t and p_u_t record the write history.
    """

    c0: complex
    c: np.ndarray
    p_u: float
    t: np.ndarray
    p_u_t: np.ndarray

    def __post_init__(self):
        if self.norm > 1.0 + 1e-6:
            raise NumericalError(f"stored norm {self.norm:.6f} exceeds one")

    @property
    def norm(self) -> float:
        return float(abs(self.c0) ** 2 + np.sum(np.abs(self.c) ** 2))


@dataclass(frozen=True)
class ControlRamp:
    """Exponential turn-on of the read-out control field.

    Omega(t) = omega_max (1 - exp(-t / t_rise)) for t >= 0 and zero before.
    delta_e and delta_r set the read-out frame detunings; the default is
    resonant retrieval, where the emission linewidth is the collective rate.
    """

    omega_max: float
    t_rise: float
    delta_e: float = 0.0
    delta_r: float = 0.0

    def __post_init__(self):
        if self.omega_max < 0:
            raise ConfigError(f"control amplitude must be >= 0, got {self.omega_max}")
        if self.t_rise <= 0:
            raise ConfigError(f"ramp rise time must be positive, got {self.t_rise}")

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        return self.omega_max * -np.expm1(-np.clip(t, 0.0, None) / self.t_rise)


@dataclass
class RetrievalResult:
    """Read-out record.

    e_out(t) = sqrt(2 g^2/c) sum_j u*_j e_j(t), normalized so that
    eta = int |e_out|^2 dt; norm_t tracks the remaining excitation and
    residual is its final value relative to the stored norm.
    """

    t: np.ndarray
    e_out: np.ndarray
    eta: float
    norm_t: np.ndarray
    residual: float


def _collective_area(eff: EffectiveParams, mode: ModeVector, pulse: PulseSpec) -> float:
    """Collective pulse area per unit drive amplitude."""
    t = pulse.times()
    unorm = math.sqrt(float(np.sum(np.abs(mode.u) ** 2)))
    return abs(eff.gbar) * unorm * float(np.trapezoid(np.abs(pulse.envelope(t)), t))


def pi_pulse_storage(
    geom: ArrayGeometry,
    eff: EffectiveParams,
    mode: ModeVector,
    pulse: PulseSpec,
    amplitude: float | None = None,
    collective_damping: bool = False,
) -> StorageState:
    """Drive the g -> r transition with a classical write pulse.

    Integrates the single-excitation amplitudes

        c0' = i sum_j conj(Omega_j) c_j ,
        c_j' = i (delta_bar + i gamma / 2) c_j + i Omega_j c0
               + i sum_k [Jbar (+ i Gambar / 2)]_{jk} c_k ,

    with Omega_j(t) = gbar * amplitude * u_j * phi(t) and phi the unit-norm
    pulse envelope.  ``amplitude`` is the classical field strength (it is
    not bounded as the weak quantum inputs are); if omitted, the pi/2 area
    that inverts the collective transition is used.  A non-square envelope
    is allowed but warned about, since the area calibration then competes
    with the detuning spread of the pulse.
    """
    n = geom.natoms
    if mode.size != n or eff.Jbar.shape[0] != n:
        raise ConfigError("geometry, effective couplings and mode sizes disagree")
    if eff.gbar == 0.0:
        raise ConfigError("effective drive coupling vanishes (Omega = 0)")
    if pulse.shape != "square":
        warnings.warn(
            f"write-pulse area calibration assumes a square envelope, got "
            f"{pulse.shape!r}",
            stacklevel=2,
        )
    dt = pulse.dt
    if dt > pulse.tau / 50.0 * (1.0 + 1e-9):
        raise ConfigError(
            f"step {dt:.3g} does not resolve the write pulse (need <= "
            f"{pulse.tau / 50.0:.3g})"
        )
    detune_scale = abs(pulse.delta0) + abs(eff.delta_bar)
    if dt * detune_scale > 0.2:
        raise ConfigError(
            f"step {dt:.3g} does not resolve the detuning scale {detune_scale:.3g}"
        )
    if amplitude is None:
        area = _collective_area(eff, mode, pulse)
        if area <= 0.0:
            raise ConfigError("write pulse has zero collective area")
        amplitude = 0.5 * math.pi / area

    nt = pulse.nt
    t = pulse.times()
    t_half = pulse.t0 + 0.5 * dt * np.arange(2 * nt - 1)
    phi_half = pulse.envelope(t_half)

    w = eff.Jbar.astype(complex)
    if collective_damping:
        w = w + 0.5j * eff.Gambar
    a_mat = 1j * w
    idx = np.arange(n)
    a_mat[idx, idx] += 1j * (eff.delta_bar + 0.5j * eff.gamma)
    drive = eff.gbar * amplitude * mode.u

    def deriv(c0v, cv, ph):
        om = drive * ph
        return 1j * np.vdot(om, cv), a_mat @ cv + (1j * c0v) * om

    c0 = 1.0 + 0.0j
    c = np.zeros(n, dtype=complex)
    u2 = float(np.sum(np.abs(mode.u) ** 2))
    p_u_t = np.zeros(nt)
    norm_prev = 1.0
    for i in range(nt - 1):
        p_u_t[i] = abs(np.vdot(mode.u, c)) ** 2 / u2
        p0, p1, p2 = phi_half[2 * i], phi_half[2 * i + 1], phi_half[2 * i + 2]
        k1a, k1b = deriv(c0, c, p0)
        k2a, k2b = deriv(c0 + 0.5 * dt * k1a, c + 0.5 * dt * k1b, p1)
        k3a, k3b = deriv(c0 + 0.5 * dt * k2a, c + 0.5 * dt * k2b, p1)
        k4a, k4b = deriv(c0 + dt * k3a, c + dt * k3b, p2)
        c0 = c0 + (dt / 6.0) * (k1a + 2.0 * (k2a + k3a) + k4a)
        c = c + (dt / 6.0) * (k1b + 2.0 * (k2b + k3b) + k4b)
        norm = abs(c0) ** 2 + float(np.sum(np.abs(c) ** 2))
        if norm > norm_prev * (1.0 + _NORM_GROWTH_TOL):
            raise NumericalError(
                f"norm grew during the write pulse at t = {t[i + 1]:.3f}; "
                f"reduce the step"
            )
        norm_prev = norm
    p_u_t[-1] = abs(np.vdot(mode.u, c)) ** 2 / u2
    return StorageState(c0=c0, c=c, p_u=float(p_u_t[-1]), t=t, p_u_t=p_u_t)


def calibrate_pi_area(
    geom: ArrayGeometry,
    eff: EffectiveParams,
    mode: ModeVector,
    tau: float,
) -> tuple[float, float]:
    """Amplitude of the square write pulse of length tau that inverts g -> u.

    The collective Rabi coupling is gbar * amplitude * ||u|| / sqrt(tau), so
    the inversion condition reads

        gbar * amplitude * ||u|| * sqrt(tau) = pi / 2 .

    Returns (amplitude, p_u) where p_u comes from a verification run of the
    storage integrator; the shortfall from one measures the profile
    distortion by the dressed exchange plus the gamma dwell loss.
    """
    if tau <= 0:
        raise ConfigError(f"pulse length must be positive, got {tau}")
    if eff.gbar == 0.0:
        raise ConfigError("effective drive coupling vanishes (Omega = 0)")
    unorm = math.sqrt(float(np.sum(np.abs(mode.u) ** 2)))
    if unorm == 0.0:
        raise ConfigError("drive mode has zero norm on the array")
    amplitude = 0.5 * math.pi / (abs(eff.gbar) * unorm * math.sqrt(tau))
    pulse = PulseSpec("square", tau, -0.55 * tau, 0.55 * tau, tau / 2000.0)
    state = pi_pulse_storage(geom, eff, mode, pulse, amplitude=amplitude)
    return amplitude, state.p_u


def eit_retrieval(
    stored: StorageState,
    coupling: CouplingMatrix,
    ramp: ControlRamp,
    mode: ModeVector,
    gamma: float = 0.0,
    dt: float | None = None,
    t_max: float | None = None,
) -> RetrievalResult:
    """Ramp the control back on and collect the retrieved field.

    Integrates the bare three-level single-excitation equations

        e' = i (delta_e I + J + i Gamma / 2) e + i Omega(t) c ,
        c' = [i (delta_e + delta_r) - gamma / 2] c + i Omega(t) e ,

    from the stored Rydberg amplitudes until the remaining excitation falls
    below 1e-6 of the stored norm or t_max is reached.  In contrast to the
    write stage this uses the full unreduced dipole coupling: the read-out
    operates on the single-photon resonance where the collective linewidth,
    not the control detuning, sets the emission bandwidth.

    The total norm must decrease at every step; growth raises
    NumericalError (it indicates an unresolved step).  A ramp rising faster
    than 1 / omega_max is warned about, since the spin wave then projects
    onto both polariton branches instead of following the dark one.
    """
    n = coupling.natoms
    if stored.c.shape[0] != n or mode.size != n:
        raise ConfigError("stored state, coupling matrix and mode sizes disagree")
    if gamma < 0:
        raise ConfigError(f"Rydberg decay rate cannot be negative, got {gamma}")
    norm0 = float(np.sum(np.abs(stored.c) ** 2))
    if norm0 <= 0.0:
        raise ConfigError("stored state carries no Rydberg excitation")
    if ramp.omega_max > 0 and ramp.t_rise * ramp.omega_max < 1.0:
        warnings.warn(
            f"control ramp rise {ramp.t_rise:.3g} is faster than "
            f"1 / omega_max; retrieval may not stay adiabatic",
            stacklevel=2,
        )

    scale = max(2.0, ramp.omega_max, abs(ramp.delta_e) + abs(ramp.delta_r))
    if dt is None:
        dt = 0.04 / scale
    elif dt <= 0 or dt * scale > 0.1 * (1.0 + 1e-9):
        raise ConfigError(
            f"step {dt:.3g} does not resolve the read-out scale {scale:.3g}"
        )
    if t_max is None:
        gamma_c = collective_parameters(coupling, mode)["mode_weighted"].gamma_c
        t_max = 60.0 / min(max(gamma_c, 1e-3), 1.0)
    nt = int(math.floor(t_max / dt)) + 1

    idx = np.arange(n)
    a_e = 1j * (coupling.J + 0.5j * coupling.Gam)
    a_e[idx, idx] += 1j * ramp.delta_e
    c_diag = 1j * (ramp.delta_e + ramp.delta_r) - 0.5 * gamma

    def deriv(ev, cv, om):
        return a_e @ ev + (1j * om) * cv, c_diag * cv + (1j * om) * ev

    t_grid = dt * np.arange(nt)
    om_half = ramp.omega(dt * 0.5 * np.arange(2 * nt - 1))
    pref = math.sqrt(2.0 * G2_OVER_C)

    e = np.zeros(n, dtype=complex)
    c = stored.c.astype(complex).copy()
    e_out = np.zeros(nt, dtype=complex)
    norm_t = np.zeros(nt)
    norm_t[0] = norm0
    last = nt - 1
    for i in range(nt - 1):
        o0, o1, o2 = om_half[2 * i], om_half[2 * i + 1], om_half[2 * i + 2]
        k1e, k1c = deriv(e, c, o0)
        k2e, k2c = deriv(e + 0.5 * dt * k1e, c + 0.5 * dt * k1c, o1)
        k3e, k3c = deriv(e + 0.5 * dt * k2e, c + 0.5 * dt * k2c, o1)
        k4e, k4c = deriv(e + dt * k3e, c + dt * k3c, o2)
        e = e + (dt / 6.0) * (k1e + 2.0 * (k2e + k3e) + k4e)
        c = c + (dt / 6.0) * (k1c + 2.0 * (k2c + k3c) + k4c)
        norm = float(np.sum(np.abs(e) ** 2) + np.sum(np.abs(c) ** 2))
        if norm > norm_t[i] * (1.0 + _NORM_GROWTH_TOL):
            raise NumericalError(
                f"norm grew during read-out at t = {t_grid[i + 1]:.3f}; "
                f"reduce the step"
            )
        norm_t[i + 1] = norm
        e_out[i + 1] = pref * np.vdot(mode.u, e)
        if norm < _RESIDUAL_TARGET * norm0:
            last = i + 1
            break

    t_grid = t_grid[: last + 1]
    e_out = e_out[: last + 1]
    norm_t = norm_t[: last + 1]
    residual = norm_t[-1] / norm0
    if residual >= _RESIDUAL_TARGET and ramp.omega_max > 0:
        warnings.warn(
            f"read-out left residual excitation {residual:.1e} at t_max = "
            f"{t_max:.3g}",
            stacklevel=2,
        )
    eta = float(np.trapezoid(np.abs(e_out) ** 2, t_grid))
    return RetrievalResult(
        t=t_grid, e_out=e_out, eta=eta, norm_t=norm_t, residual=float(residual)
    )
