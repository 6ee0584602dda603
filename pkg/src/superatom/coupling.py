"""Resonant dipole-dipole couplings from the free-space Green's tensor.

The pairwise coherent shift J_jk and correlated decay Gam_jk follow from the
classical dyadic Green's tensor evaluated at the transition wavenumber,

    J_jk + i Gam_jk / 2 = (3 pi / k) * d* . G(r_j - r_k) . d ,

normalized so that the diagonal satisfies Gam_jj = 1 (single-atom linewidth)
and J_jj = 0 (the single-atom Lamb shift is absorbed into the detuning).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .lattice import ArrayGeometry, ModeVector
from .units import K

_MAGIC = b"SACM"

# Unit polarization vectors; "circular" gives in-plane isotropic couplings.
POLARIZATIONS = {
    "circular": np.array([1.0, 1.0j, 0.0]) / np.sqrt(2.0),
    "x": np.array([1.0, 0.0, 0.0], dtype=complex),
    "y": np.array([0.0, 1.0, 0.0], dtype=complex),
}


@dataclass
class CouplingMatrix:
    """Dipole-dipole coupling of an array: real shift J and decay matrix Gam."""

    J: np.ndarray
    Gam: np.ndarray
    polarization: np.ndarray
    k: float = K
    central_index: int = 0

    @property
    def natoms(self) -> int:
        return self.J.shape[0]

    def complex_coupling(self) -> np.ndarray:
        """J + i Gam / 2 with the full diagonal (i/2 per atom) included."""
        return self.J + 0.5j * self.Gam


def greens_tensor(rvec: np.ndarray, k: float = K) -> np.ndarray:
    """Free-space dyadic Green's tensor G(r) at wavenumber k, as a 3x3 array.

    G(r) = e^{ikr}/(4 pi r) [ (1 + i/(kr) - 1/(kr)^2) I
                              - (1 + 3i/(kr) - 3/(kr)^2) rhat rhat ]

    Its imaginary part at r -> 0 tends to (k / 6 pi) I, which fixes the
    normalization of the collective decay matrix.  Raises ConfigError at
    r = 0 where the real part diverges.
    """
    rvec = np.asarray(rvec, dtype=float)
    r = np.linalg.norm(rvec)
    if r == 0.0:
        raise ConfigError("Green's tensor is singular at zero separation")
    kr = k * r
    rhat = rvec / r
    c1 = 1.0 + 1j / kr - 1.0 / kr**2
    c2 = 1.0 + 3j / kr - 3.0 / kr**2
    pref = np.exp(1j * kr) / (4.0 * np.pi * r)
    return pref * (c1 * np.eye(3) - c2 * np.outer(rhat, rhat))


def _unit_polarization(polarization) -> np.ndarray:
    if isinstance(polarization, str):
        try:
            return POLARIZATIONS[polarization]
        except KeyError:
            raise ConfigError(f"unknown polarization {polarization!r}") from None
    d = np.asarray(polarization, dtype=complex)
    if d.shape != (3,):
        raise ConfigError("polarization must be a 3-vector or a known label")
    norm = np.linalg.norm(d)
    if abs(norm - 1.0) > 1e-9:
        raise ConfigError(f"polarization must be a unit vector, |d| = {norm:.6g}")
    return d


def coupling_matrix(geom: ArrayGeometry, polarization="circular", k: float = K) -> CouplingMatrix:
    """Assemble J and Gam for all atom pairs of a planar array.

    Both matrices are real and symmetric; Gam is positive semidefinite up to
    roundoff.  Coincident atoms are rejected.
    """
    d = _unit_polarization(polarization)
    pos = geom.positions
    n = pos.shape[0]

    dx = pos[:, 0][:, None] - pos[:, 0][None, :]
    dy = pos[:, 1][:, None] - pos[:, 1][None, :]
    dz = pos[:, 2][:, None] - pos[:, 2][None, :]
    r = np.sqrt(dx**2 + dy**2 + dz**2)

    off = ~np.eye(n, dtype=bool)
    if n > 1 and np.min(r[off]) <= 0.0:
        raise ConfigError("coincident atom positions in array geometry")

    rs = np.where(off, r, 1.0)  # keep diagonal harmless; overwritten below
    kr = k * rs
    c1 = 1.0 + 1j / kr - 1.0 / kr**2
    c2 = 1.0 + 3j / kr - 3.0 / kr**2

    # |rhat . d|^2 for every pair (real, in [0, 1]).
    w = (dx * d[0] + dy * d[1] + dz * d[2]) / rs
    proj = np.abs(w) ** 2

    scalar = np.exp(1j * kr) / (4.0 * np.pi * rs) * (c1 - c2 * proj)
    m = (3.0 * np.pi / k) * scalar
    m[~off] = 0.0

    J = np.real(m)
    Gam = 2.0 * np.imag(m)
    np.fill_diagonal(J, 0.0)
    np.fill_diagonal(Gam, 1.0)
    i0 = int(np.argmin(np.einsum("ij,ij->i", pos, pos)))
    return CouplingMatrix(J=J, Gam=Gam, polarization=d, k=k, central_index=i0)


@dataclass
class CollectiveParams:
    """Collective frequency shift and decay rate of the driven array mode."""

    delta_c: float
    gamma_c: float
    variant: str


def collective_parameters(cm: CouplingMatrix, mode: ModeVector | None = None):
    """Collective shift Delta_c and rate Gamma_c in two conventions.

    Returns a dict with two CollectiveParams entries:

    "lattice_sum"   : sums over the row of the atom closest to the array
                      center, Delta_c = sum_{j != i0} J[i0, j] and
                      Gamma_c = sum_j Gam[i0, j] (diagonal included).
    "mode_weighted" : quadratic forms u* M u / |u|^2 with the drive-mode
                      samples, which is what a finite beam actually probes.
                      Requires ``mode``.
    """
    n = cm.natoms
    out = {}
    i0 = cm.central_index
    delta_lat = float(np.sum(cm.J[i0]) - cm.J[i0, i0])
    gamma_lat = float(np.sum(cm.Gam[i0]))
    out["lattice_sum"] = CollectiveParams(delta_c=delta_lat, gamma_c=gamma_lat, variant="lattice_sum")

    if mode is not None:
        if mode.size != n:
            raise ConfigError("mode vector length does not match coupling matrix")
        u = mode.u
        nrm = float(np.sum(np.abs(u) ** 2))
        delta_m = float(np.real(np.conj(u) @ cm.J @ u) / nrm)
        gamma_m = float(np.real(np.conj(u) @ cm.Gam @ u) / nrm)
        out["mode_weighted"] = CollectiveParams(delta_c=delta_m, gamma_c=gamma_m, variant="mode_weighted")
    return out


def save_coupling(path, cm: CouplingMatrix) -> None:
    """Binary dump: 16-byte header (magic, N uint32, k float64) + J + Gam.

    Matrices are written row-major as little-endian float64.
    """
    n = cm.natoms
    header = _MAGIC + struct.pack("<I", n) + struct.pack("<d", cm.k)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(cm.J, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(cm.Gam, dtype="<f8").tobytes())


def load_coupling(path, central_index: int = 0) -> CouplingMatrix:
    """Read a coupling matrix written by save_coupling.

    The dump stores only J, Gam and k; the polarization comes back as NaN and
    the central atom index (not part of the 16-byte header) must be supplied
    by the caller if the lattice-sum collective parameters are needed.
    """
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != _MAGIC:
            raise ConfigError(f"{path}: not a coupling-matrix dump")
        n = struct.unpack("<I", header[4:8])[0]
        k = struct.unpack("<d", header[8:16])[0]
        body = np.frombuffer(fh.read(), dtype="<f8")
    if body.size != 2 * n * n:
        raise ConfigError(f"{path}: truncated coupling-matrix dump")
    J = body[: n * n].reshape(n, n).copy()
    Gam = body[n * n :].reshape(n, n).copy()
    return CouplingMatrix(
        J=J,
        Gam=Gam,
        polarization=np.array([np.nan] * 3, dtype=complex),
        k=k,
        central_index=central_index,
    )
