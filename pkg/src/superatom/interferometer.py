"""Symmetric two-sided illumination and effective waveguide parameters.

Splitting the probe onto both faces of the array and recombining the two
output fields funnels the full response into a single forward mode: the
array couples to the symmetric superposition only, so the second splitter
port stays dark under perfect alignment.  The resulting transmission dip
is that of a saturable emitter coupled to one propagating mode, and
fitting it yields the loss rate gamma_tilde, the mode coupling rate
Gamma_tilde and the efficiency beta = Gamma_tilde/(Gamma_tilde+gamma_tilde).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .errors import ConfigError, NumericalError
from .steady_state import (
    DriveParams,
    delta_e_for_dbar,
    resonant_delta_e,
    spectrum_2level_mapped,
)
from .units import K

__all__ = [
    "TwoSidedSpectrum",
    "WaveguideFit",
    "beta_opt",
    "displacement_signal",
    "effective_emitter_fit",
    "recombine_displaced",
    "symmetric_port_transform",
    "two_sided_spectrum",
]


def symmetric_port_transform(a_fwd, a_bwd, emission=0.0):
    """Recombine the two array outputs on the second splitter.

    ``emission`` is the one-sided emitted amplitude (the same field leaves
    both faces of a planar array), so it adds coherently in the bright
    port and cancels in the dark port:

        a_hat = (a_fwd + a_bwd)/sqrt(2) + sqrt(2) * emission
        b_hat = (a_fwd - a_bwd)/sqrt(2)

    Works elementwise on time series as well as on scalars.
    """
    a_fwd = np.asarray(a_fwd)
    a_bwd = np.asarray(a_bwd)
    root2 = np.sqrt(2.0)
    a_hat = (a_fwd + a_bwd) / root2 + root2 * np.asarray(emission)
    b_hat = (a_fwd - a_bwd) / root2
    return a_hat, b_hat


@dataclass
class TwoSidedSpectrum:
    """Bright-port transmission of the symmetric setup vs detuning."""

    delta: np.ndarray
    T: np.ndarray
    a_amp: np.ndarray
    delta_e: np.ndarray


def two_sided_spectrum(
    geom,
    cm,
    mode,
    drive: DriveParams,
    delta_grid,
    mode_bwd=None,
    omega_p: float = 1e-3,
) -> TwoSidedSpectrum:
    """Steady-state transmission through the bright port.

    ``delta_grid`` is referenced to the self-consistent narrow resonance:
    each detuning is mapped to an intermediate-state detuning on the
    narrow branch and solved with per-point elimination.  The backward
    illumination must mirror the forward one; supplying a second mode with
    different intensities raises, since the dark-port cancellation rests
    on that symmetry.
    """
    if mode_bwd is not None and not np.allclose(
        np.abs(mode_bwd.u), np.abs(mode.u), rtol=1e-10, atol=1e-12
    ):
        raise ConfigError("two-sided illumination requires equal arm intensities")

    delta_grid = np.asarray(delta_grid, dtype=float)
    _, eff_res = resonant_delta_e(cm, mode, drive)
    dcb = eff_res.delta_c_bar
    de_grid = np.array(
        [delta_e_for_dbar(d - dcb, drive.delta_r, drive.omega) for d in delta_grid]
    )
    lin = spectrum_2level_mapped(
        geom, cm, mode, replace(drive, omega_p=omega_p), de_grid
    )
    a_amp = 1.0 + 2.0 * lin.refl_amp
    return TwoSidedSpectrum(
        delta=delta_grid, T=np.abs(a_amp) ** 2, a_amp=a_amp, delta_e=de_grid
    )


@dataclass
class WaveguideFit:
    """Effective emitter parameters extracted from a transmission dip."""

    gamma_tilde: float
    Gamma_tilde: float
    beta: float
    center: float
    residual: float

    def __post_init__(self):
        if self.gamma_tilde < 0 or self.Gamma_tilde < 0:
            raise ConfigError("fitted rates must be non-negative")


def _emitter_transmission(delta, center, gamma_tilde, Gamma_tilde):
    num = 2.0 * (delta - center) + 1j * (gamma_tilde - Gamma_tilde)
    den = 2.0 * (delta - center) + 1j * (gamma_tilde + Gamma_tilde)
    return np.abs(num / den) ** 2


def effective_emitter_fit(delta, T) -> WaveguideFit:
    """Fit the single-emitter lineshape to a sampled transmission dip.

    The model |2(d - d0) + i(gt - Gt)|^2 / |2(d - d0) + i(gt + Gt)|^2 is
    symmetric under exchanging the two rates; the overcoupled branch
    (Gamma_tilde >= gamma_tilde) is returned.  The line center is a third
    fit parameter since the collective shift of a finite array does not
    centre the dip exactly.
    """
    delta = np.asarray(delta, dtype=float)
    T = np.asarray(T, dtype=float)
    if delta.shape != T.shape or delta.ndim != 1:
        raise ConfigError("detuning and transmission samples must match 1-d")
    if delta.size < 8:
        raise ConfigError("emitter fit needs at least 8 samples")

    order = np.argsort(delta)
    delta, T = delta[order], T[order]

    i_min = int(np.argmin(T))
    center0 = delta[i_min]
    t_min = max(float(T[i_min]), 0.0)
    # half-depth width of the dip for the initial total linewidth
    half = 0.5 * (1.0 + t_min)
    below = np.where(T <= half)[0]
    if below.size >= 2:
        fwhm0 = delta[below[-1]] - delta[below[0]]
    else:
        fwhm0 = 0.1 * (delta[-1] - delta[0])
    if fwhm0 <= 0:
        raise ConfigError("transmission samples do not resolve a dip")
    if delta[-1] - delta[0] < 2.0 * fwhm0:
        raise ConfigError("samples must span at least two linewidths")

    total0 = fwhm0
    diff0 = total0 * np.sqrt(t_min)
    g0 = 0.5 * (total0 - diff0)
    G0 = 0.5 * (total0 + diff0)

    window = np.abs(delta - center0) <= 10.0 * fwhm0
    dfit, tfit = delta[window], T[window]
    if dfit.size < 8:
        dfit, tfit = delta, T

    def resid(p):
        return _emitter_transmission(dfit, p[0], p[1], p[2]) - tfit

    sol = least_squares(
        resid,
        x0=[center0, max(g0, 1e-12), max(G0, 1e-9)],
        bounds=([-np.inf, 0.0, 0.0], [np.inf, np.inf, np.inf]),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=2000,
    )
    if not sol.success:
        raise NumericalError(f"emitter lineshape fit failed: {sol.message}")
    center, gt, Gt = sol.x
    if gt > Gt:
        gt, Gt = Gt, gt
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    beta = Gt / (Gt + gt) if (Gt + gt) > 0 else 0.0
    return WaveguideFit(
        gamma_tilde=float(gt),
        Gamma_tilde=float(Gt),
        beta=float(beta),
        center=float(center),
        residual=rms,
    )


def beta_opt(gamma_c_bar: float, gamma: float) -> float:
    """Saturation value of the coupling efficiency, Gc_bar/(Gc_bar + gamma)."""
    if gamma_c_bar <= 0 or gamma < 0:
        raise ConfigError("beta_opt needs a positive collective rate")
    return gamma_c_bar / (gamma_c_bar + gamma)


def displacement_signal(dz: float) -> float:
    """Dark-port intensity fraction for a small longitudinal offset.

    Quadratic small-displacement law 4 pi^2 (dz/lambda)^2 with lambda = 1.
    """
    return 4.0 * np.pi**2 * dz**2


def recombine_displaced(dz: float, refl=-1.0):
    """Exact two-arm recombination with the array offset by ``dz``.

    The offset de-phases the two arms by +-phi with phi = pi dz (the
    convention that reproduces the quadratic law above), giving

        a_hat/a_in = 1 + 2 refl cos^2(phi)
        b_hat/a_in = -i refl sin(2 phi)

    For |refl| = 1 the two ports conserve energy exactly.
    """
    phi = 0.5 * K * dz
    a_ratio = 1.0 + 2.0 * refl * np.cos(phi) ** 2
    b_ratio = -1j * refl * np.sin(2.0 * phi)
    return a_ratio, b_ratio
