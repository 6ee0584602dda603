"""Array geometry and paraxial drive modes.

A planar square lattice in the z = 0 plane, optionally rounded to a disc,
illuminated by a Gaussian beam whose axis lies in the x-z plane at angle
``theta`` from the z axis.  Mode functions are sampled at the atom positions
and carry the in-plane tilt phase exp(i k sin(theta) x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .units import K

# Arrays up to nside <= 9 are kept as full squares by default; larger ones are
# rounded to the inscribed disc |r| <= (nside - 1) a / 2 (inclusive).
_FULL_SQUARE_MAX_NSIDE = 9


@dataclass
class ArrayGeometry:
    """Atom positions of a planar array.

    positions : (N, 3) float array, z = 0 for all atoms
    spacing   : lattice constant in units of lambda
    nside     : linear size of the generating square grid
    shape     : "full" or "disc"
    """

    positions: np.ndarray
    spacing: float
    nside: int
    shape: str

    @property
    def natoms(self) -> int:
        return self.positions.shape[0]

    def radius(self) -> float:
        """Largest distance of any atom from the array center."""
        return float(np.max(np.linalg.norm(self.positions, axis=1)))


@dataclass
class ModeVector:
    """Drive-mode samples u(r_j) at the atom positions (continuum normalized)."""

    u: np.ndarray
    waist: float
    theta: float
    norm_area: float = field(default=0.0)

    @property
    def size(self) -> int:
        return self.u.shape[0]


def build_disc_array(nside: int, spacing: float, shape: str = "auto") -> ArrayGeometry:
    """Build an nside x nside square array, rounded to a disc for large nside.

    The disc keeps lattice sites with |r| <= (nside - 1) * spacing / 2,
    boundary inclusive.  ``shape`` may be "auto", "full" or "disc"; "auto"
    keeps the full square for nside <= 9.

    Raises ConfigError for nside < 1, spacing <= 0, or an unknown shape tag.
    """
    if nside < 1:
        raise ConfigError(f"nside must be >= 1, got {nside}")
    if spacing <= 0:
        raise ConfigError(f"lattice spacing must be positive, got {spacing}")
    if shape not in ("auto", "full", "disc"):
        raise ConfigError(f"unknown array shape {shape!r}")

    if shape == "auto":
        shape = "full" if nside <= _FULL_SQUARE_MAX_NSIDE else "disc"

    # Grid indices centered on the origin (half-integer for even nside).
    idx = np.arange(nside) - (nside - 1) / 2.0
    ix, iy = np.meshgrid(idx, idx, indexing="xy")
    ix = ix.ravel()
    iy = iy.ravel()

    if shape == "disc":
        r2max = ((nside - 1) / 2.0) ** 2
        keep = ix**2 + iy**2 <= r2max + 1e-9
        ix, iy = ix[keep], iy[keep]

    # Deterministic ordering: sort by row, then column.
    order = np.lexsort((ix, iy))
    ix, iy = ix[order], iy[order]

    pos = np.zeros((ix.size, 3))
    pos[:, 0] = ix * spacing
    pos[:, 1] = iy * spacing
    return ArrayGeometry(positions=pos, spacing=spacing, nside=nside, shape=shape)


def gaussian_mode(geom: ArrayGeometry, waist: float, theta: float = 0.0) -> ModeVector:
    """Sample a Gaussian mode of waist w0 (units of lambda) on the array.

    u(r) = sqrt(2 / (pi w0^2)) exp(-(x^2 + y^2) / w0^2) exp(i k sin(theta) x)

    The forward and backward modes of the scattering problem coincide in the
    array plane, so a single sample vector serves both.  norm_area is the
    Riemann-sum normalization a^2 * sum_j |u_j|^2, close to 1 when the beam
    is well contained in the array.
    """
    if waist <= 0:
        raise ConfigError(f"beam waist must be positive, got {waist}")
    if not -math.pi / 2 < theta < math.pi / 2:
        raise ConfigError(f"tilt angle must lie in (-pi/2, pi/2), got {theta}")

    x = geom.positions[:, 0]
    y = geom.positions[:, 1]
    amp = math.sqrt(2.0 / (math.pi * waist**2))
    u = amp * np.exp(-(x**2 + y**2) / waist**2) * np.exp(1j * K * math.sin(theta) * x)
    norm_area = float(geom.spacing**2 * np.sum(np.abs(u) ** 2))
    return ModeVector(u=u, waist=waist, theta=theta, norm_area=norm_area)


def uniform_mode(geom: ArrayGeometry, theta: float = 0.0) -> ModeVector:
    """Plane-wave drive samples with unit transverse density normalization.

    |u|^2 = 1 / (N a^2) so that norm_area = 1 exactly; used for
    infinite-array comparisons.
    """
    n = geom.natoms
    x = geom.positions[:, 0]
    amp = 1.0 / math.sqrt(n * geom.spacing**2)
    u = amp * np.exp(1j * K * math.sin(theta) * x)
    return ModeVector(u=u, waist=math.inf, theta=theta, norm_area=1.0)


@dataclass
class BraggReport:
    """Result of the first-order grating-loss check a <= lambda / (1 + sin theta)."""

    ok: bool
    margin: float
    threshold_angle: float | None

    def __bool__(self) -> bool:
        return self.ok


def validate_bragg(spacing: float, theta: float) -> BraggReport:
    """Check that no diffraction order opens at tilt angle theta.

    For spacing a <= 1/2 no first-order grating lobe exists at any angle and
    threshold_angle is None.  Otherwise the threshold is
    asin(1/a - 1); beyond it the tilted drive scatters into open orders.
    """
    if spacing <= 0:
        raise ConfigError(f"lattice spacing must be positive, got {spacing}")
    limit = 1.0 / (1.0 + abs(math.sin(theta)))
    margin = limit - spacing
    if spacing <= 0.5:
        threshold = None
    elif spacing >= 1.0:
        threshold = 0.0
    else:
        threshold = math.asin(1.0 / spacing - 1.0)
    return BraggReport(ok=margin >= 0, margin=margin, threshold_angle=threshold)
