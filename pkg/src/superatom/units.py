"""Global unit conventions.

Everything in the package is expressed in natural units of the atomic
transition: the single-atom linewidth GAMMA = 1 sets the time scale, the
transition wavelength LAMBDA = 1 sets the length scale, and c = 1.  The
wavenumber is therefore K = 2*pi and all rates, detunings and interaction
strengths are pure numbers.

The only place physical units enter is the Rydberg-state data table, which
stores C6 coefficients in GHz um^6 and decay rates in 1/us.  The anchors
below (a typical alkali D2 line) convert those to natural units.
"""

import math

GAMMA = 1.0
LAMBDA = 1.0
C_LIGHT = 1.0
K = 2.0 * math.pi

# g^2 / c for the paraxial coupling constant g = sqrt(3 GAMMA c lambda^2 / (8 pi)) / lambda,
# i.e. the prefactor of the reflection amplitude in natural units.
G2_OVER_C = 3.0 / (8.0 * math.pi)

# Physical anchors used by superatom.atomdata when converting table entries.
GAMMA_HZ = 6.07e6          # natural linewidth / (2 pi), in Hz
LAMBDA_UM = 0.780          # transition wavelength in micrometers


def collective_rate_infinite(spacing: float) -> float:
    """Collective emission rate 3 / (4 pi a^2) of an infinite array (a in units of lambda)."""
    return 3.0 / (4.0 * math.pi * spacing**2)
