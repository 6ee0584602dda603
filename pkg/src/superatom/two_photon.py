"""Two-excitation steady states and equal-time photon correlations.

Under a weak coherent probe the atomic state organizes into a perturbative
hierarchy: vacuum O(1), single excitations O(Omega_p), pairs O(Omega_p^2).
Both levels are linear solves; the pair system carries the Rydberg-Rydberg
interaction and is what turns the blockade into photon-photon correlations.

Pair amplitudes live on unordered atom pairs (hard-core: no double
occupation of one atom).  The equation for the symmetric zero-diagonal pair
matrix C is

    ZeroDiag[ Wt C + C Wt - U o C + S ] = 0 ,     S_jk = Op_j c_k + Op_k c_j

with Wt the full single-excitation matrix (detuning + couplings) and U the
pairwise shift; the restriction to the hard-core subspace is exact because a
vanishing diagonal of C removes the excluded paths.

``g2_equal_time`` assembles output-port one- and two-photon amplitudes from
the mode projections and returns their normalized ratio, which is
independent of the probe strength.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import CouplingMatrix
from .errors import ConfigError, NumericalError, ResourceCapError
from .lattice import ArrayGeometry, ModeVector
from .steady_state import (
    G_COUPLING,
    DriveParams,
    EffectiveParams,
    _solve_response,
    probe_input_amplitude,
)

_OMEGA_P_MAX = 0.01
_PAIR_DENSE_MAX = 8256  # pair-basis dimension for a direct dense solve
_PAIR_N_MAX = 441  # hard cap on atom number for any pair solve
_ORACLE_N_MAX = 60
_GMRES_RTOL = 1e-11
_PORT_FLOOR = 1e-20

_KINDS = ("none", "vdw", "hard-blockade")


@dataclass(frozen=True)
class InteractionModel:
    """Pairwise Rydberg-Rydberg interaction.

    kind "vdw" uses U_jk = c6 / r_jk^6 (repulsive for c6 > 0), acting on the
    doubly-Rydberg components only.  kind "hard-blockade" removes pair states
    with r_jk < r_b from the basis.  kind "none" is the linear-optics
    reference: pair amplitudes factorize into products of singles and every
    g2 equals one.
    """

    kind: str
    c6: float = 0.0
    r_b: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown interaction kind {self.kind!r}")
        if self.kind == "vdw" and self.c6 == 0.0:
            raise ConfigError("vdw interaction requires a nonzero C6")
        if self.kind == "hard-blockade" and self.r_b <= 0.0:
            raise ConfigError("hard blockade requires a positive radius")

    @classmethod
    def none(cls) -> "InteractionModel":
        return cls(kind="none")

    @classmethod
    def vdw(cls, c6: float) -> "InteractionModel":
        return cls(kind="vdw", c6=c6)

    @classmethod
    def hard_blockade(cls, r_b: float) -> "InteractionModel":
        return cls(kind="hard-blockade", r_b=r_b)


@dataclass
class PairAmplitudes:
    """Weak-drive amplitudes: singles c_j and the symmetric pair matrix.

    ``pairs[j, k]`` is the unordered-pair amplitude for j != k.  For the
    "none" interaction the matrix also carries the self-pair products on the
    diagonal, which is what makes the downstream correlations exactly
    coherent.  ``out_coupling`` is the emission coupling used for port
    projections (gbar for the reduced model, g for the full one).
    """

    singles: np.ndarray
    pairs: np.ndarray
    kind: str
    a_in: float
    out_coupling: complex
    r_singles: np.ndarray | None = None
    pairs_er: np.ndarray | None = None
    pairs_rr: np.ndarray | None = None

    @property
    def natoms(self) -> int:
        return self.singles.shape[0]


def interaction_shifts(geom: ArrayGeometry, interaction: InteractionModel):
    """Pairwise shift matrix U and the removed-pair mask for a geometry."""
    n = geom.natoms
    pos = geom.positions
    diff = pos[:, None, :] - pos[None, :, :]
    r = np.sqrt(np.sum(diff**2, axis=-1))
    np.fill_diagonal(r, np.inf)
    u = np.zeros((n, n))
    blocked = np.zeros((n, n), dtype=bool)
    if interaction.kind == "vdw":
        u = interaction.c6 / r**6
    elif interaction.kind == "hard-blockade":
        blocked = r < interaction.r_b
    return u, blocked


def _pair_indexing(n: int):
    ju, ku = np.triu_indices(n, 1)
    pidx = -np.ones((n, n), dtype=int)
    pidx[ju, ku] = np.arange(ju.size)
    pidx[ku, ju] = pidx[ju, ku]
    return ju, ku, pidx


def _check_probe(omega_p: float) -> None:
    if not 0 < omega_p <= _OMEGA_P_MAX:
        raise ConfigError(
            f"probe Rabi frequency {omega_p} outside the perturbative range "
            f"(0, {_OMEGA_P_MAX}]"
        )


def _pair_matrix_dense(wt_diag, w_off, u_mat, blocked, source):
    """Direct solve of the pair system on the unordered-pair basis."""
    n = wt_diag.shape[0]
    ju, ku, pidx = _pair_indexing(n)
    p = ju.size
    keep = ~blocked[ju, ku]
    sub = np.where(keep)[0]
    remap = -np.ones(p, dtype=int)
    remap[sub] = np.arange(sub.size)
    jr, kr = ju[sub], ku[sub]
    d = sub.size

    a = np.zeros((d, d), dtype=complex)
    a[np.arange(d), np.arange(d)] = wt_diag[jr] + wt_diag[kr] - u_mat[jr, kr]
    for m in range(n):
        ok = (m != jr) & (m != kr)
        rows = np.where(ok)[0]
        if rows.size == 0:
            continue
        # excitation hop m -> j with k fixed
        cols = remap[pidx[m, kr[rows]]]
        good = cols >= 0
        a[rows[good], cols[good]] += w_off[jr[rows[good]], m]
        # excitation hop m -> k with j fixed
        cols = remap[pidx[jr[rows], m]]
        good = cols >= 0
        a[rows[good], cols[good]] += w_off[kr[rows[good]], m]

    b = -source[jr, kr]
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular pair system: {exc}") from exc
    res = np.linalg.norm(a @ x - b)
    if res > 1e-8 * max(np.linalg.norm(b), np.linalg.norm(x), 1e-300):
        raise NumericalError(f"ill-conditioned pair solve, residual {res:.2e}")

    c = np.zeros((n, n), dtype=complex)
    c[jr, kr] = x
    c[kr, jr] = x
    return c


def _pair_matrix_gmres(wt_diag, w_off, u_mat, blocked, source):
    """Matrix-free solve of the pair system for large arrays."""
    from scipy.sparse.linalg import LinearOperator, gmres

    n = wt_diag.shape[0]
    ju, ku, _ = _pair_indexing(n)
    p = ju.size
    wt = w_off + np.diag(wt_diag)
    blockedu = blocked[ju, ku]

    def matvec(x):
        c = np.zeros((n, n), dtype=complex)
        c[ju, ku] = x
        c[ku, ju] = x
        y_mat = wt @ c + c @ wt - u_mat * c
        y = y_mat[ju, ku]
        y[blockedu] = x[blockedu]
        return y

    rhs = -source[ju, ku]
    rhs[blockedu] = 0.0
    diag = wt_diag[ju] + wt_diag[ku] - u_mat[ju, ku]
    diag[blockedu] = 1.0

    op = LinearOperator((p, p), matvec=matvec, dtype=complex)
    pre = LinearOperator((p, p), matvec=lambda x: x / diag, dtype=complex)
    x, info = gmres(op, rhs, M=pre, rtol=_GMRES_RTOL, atol=0.0, restart=300, maxiter=40)
    if info != 0:
        raise NumericalError(f"pair-system GMRES did not converge (info={info})")
    res = np.linalg.norm(matvec(x) - rhs)
    if res > 1e-8 * max(np.linalg.norm(rhs), np.linalg.norm(x), 1e-300):
        raise NumericalError(f"pair-system GMRES residual too large: {res:.2e}")

    c = np.zeros((n, n), dtype=complex)
    c[ju, ku] = x
    c[ku, ju] = x
    return c


def pair_steady_state(
    geom: ArrayGeometry,
    eff: EffectiveParams,
    mode: ModeVector,
    interaction: InteractionModel,
    omega_p: float = 1e-3,
    method: str = "auto",
) -> PairAmplitudes:
    """Singles and pairs of the effective two-level array under weak drive.

    ``method`` selects the pair solver: "dense" (direct LU, capped at
    pair dimension 8256), "gmres" (matrix-free, up to N=441) or "auto".
    """
    n = geom.natoms
    if mode.size != n or eff.Jbar.shape[0] != n:
        raise ConfigError("geometry, effective couplings and mode sizes disagree")
    _check_probe(omega_p)

    gbar = eff.gbar
    if gbar == 0.0:
        raise ConfigError("effective drive coupling vanishes (Omega = 0)")
    a_in = omega_p / (abs(gbar) * float(np.max(np.abs(mode.u))))
    drive = gbar * a_in * mode.u

    w_off = eff.Jbar + 0.5j * eff.Gambar
    np.fill_diagonal(w_off, 0.0)
    wt_diag = np.full(n, eff.delta_bar + 0.5j * eff.gamma, dtype=complex)
    wt_diag += 0.5j * np.diag(eff.Gambar)

    wtot = eff.complex_coupling()
    singles = _solve_response(wtot, eff.delta_bar + 0.5j * eff.gamma, drive)

    if interaction.kind == "none":
        pairs = np.outer(singles, singles)
        return PairAmplitudes(
            singles=singles, pairs=pairs, kind="none", a_in=a_in, out_coupling=gbar
        )

    u_mat, blocked = interaction_shifts(geom, interaction)
    source = drive[:, None] * singles[None, :] + drive[None, :] * singles[:, None]

    pair_dim = n * (n - 1) // 2
    if n > _PAIR_N_MAX:
        raise ResourceCapError(
            f"pair solve limited to N <= {_PAIR_N_MAX} atoms (got {n}); "
            "reduce problem size"
        )
    if method == "auto":
        method = "dense" if pair_dim <= _PAIR_DENSE_MAX else "gmres"
    if method == "dense":
        if pair_dim > _PAIR_DENSE_MAX:
            raise ResourceCapError(
                f"dense pair solve limited to {_PAIR_DENSE_MAX} pair states "
                f"(needed {pair_dim}); use method='gmres' or reduce problem size"
            )
        pairs = _pair_matrix_dense(wt_diag, w_off, u_mat, blocked, source)
    elif method == "gmres":
        pairs = _pair_matrix_gmres(wt_diag, w_off, u_mat, blocked, source)
    else:
        raise ConfigError(f"unknown pair solver method {method!r}")

    return PairAmplitudes(
        singles=singles, pairs=pairs, kind=interaction.kind, a_in=a_in, out_coupling=gbar
    )


def pair_steady_state_3level(
    geom: ArrayGeometry,
    cm: CouplingMatrix,
    mode: ModeVector,
    drive: DriveParams,
    interaction: InteractionModel,
) -> PairAmplitudes:
    """Exact weak-drive pair solve in the full {e, r} two-excitation manifold.

    Serves as the oracle for the reduced model; the basis holds ee pairs
    (j < k), ordered er pairs (e on j, r on k, j != k) and rr pairs (j < k),
    so its dimension is 2 N (N - 1) and the atom number is capped at 60.
    """
    n = geom.natoms
    if mode.size != n or cm.natoms != n:
        raise ConfigError("geometry, coupling matrix and mode sizes disagree")
    if n > _ORACLE_N_MAX:
        raise ResourceCapError(
            f"three-level pair oracle limited to N <= {_ORACLE_N_MAX} atoms (got {n})"
        )
    _check_probe(drive.omega_p)

    a_in = probe_input_amplitude(mode, drive.omega_p)
    drv = G_COUPLING * a_in * mode.u
    w_off = cm.J + 0.5j * cm.Gam
    np.fill_diagonal(w_off, 0.0)
    we = drive.delta_e + 0.5j
    wr = drive.delta_e + drive.delta_r + 0.5j * drive.gamma
    om = drive.omega

    # singles in the {e, r} manifold
    wtot = cm.complex_coupling()
    if om != 0.0:
        if abs(wr) < 1e-12:
            raise NumericalError("exact dark resonance: pair oracle is singular")
        e_amp = _solve_response(wtot, drive.delta_e - om**2 / wr, drv)
        r_amp = -om * e_amp / wr
    else:
        e_amp = _solve_response(wtot, complex(drive.delta_e), drv)
        r_amp = np.zeros_like(e_amp)

    if interaction.kind == "none":
        pairs = np.outer(e_amp, e_amp)
        return PairAmplitudes(
            singles=e_amp,
            pairs=pairs,
            kind="none",
            a_in=a_in,
            out_coupling=G_COUPLING,
            r_singles=r_amp,
        )

    u_mat, blocked = interaction_shifts(geom, interaction)

    ju, ku, pidx = _pair_indexing(n)
    p = ju.size
    # ordered er pairs: q = j * (n - 1) + (k if k < j else k - 1)
    qj, qk = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    off_mask = qj != qk
    erj, erk = qj[off_mask], qk[off_mask]
    q = erj.size
    eridx = -np.ones((n, n), dtype=int)
    eridx[erj, erk] = np.arange(q)

    # rr states removed under a hard blockade
    rr_keep = np.where(~blocked[ju, ku])[0]
    rr_remap = -np.ones(p, dtype=int)
    rr_remap[rr_keep] = np.arange(rr_keep.size)
    pr = rr_keep.size
    rrj, rrk = ju[rr_keep], ku[rr_keep]

    dim = p + q + pr
    a = np.zeros((dim, dim), dtype=complex)
    b = np.zeros(dim, dtype=complex)
    o_ee, o_er, o_rr = 0, p, p + q

    # ee block
    rows = np.arange(p)
    a[o_ee + rows, o_ee + rows] = 2.0 * we
    for m in range(n):
        ok = (m != ju) & (m != ku)
        rw = rows[ok]
        a[o_ee + rw, o_ee + pidx[m, ku[rw]]] += w_off[ju[rw], m]
        a[o_ee + rw, o_ee + pidx[ju[rw], m]] += w_off[ku[rw], m]
    if om != 0.0:
        a[o_ee + rows, o_er + eridx[ju, ku]] += om
        a[o_ee + rows, o_er + eridx[ku, ju]] += om
    b[o_ee + rows] = -(drv[ju] * e_amp[ku] + drv[ku] * e_amp[ju])

    # er block (e on erj, r on erk)
    rows = np.arange(q)
    a[o_er + rows, o_er + rows] = we + wr
    for m in range(n):
        ok = (m != erj) & (m != erk)
        rw = rows[ok]
        a[o_er + rw, o_er + eridx[m, erk[rw]]] += w_off[erj[rw], m]
    if om != 0.0:
        a[o_er + rows, o_ee + pidx[erj, erk]] += om
        cols = rr_remap[pidx[erj, erk]]
        good = cols >= 0
        a[o_er + rows[good], o_rr + cols[good]] += om
    b[o_er + rows] = -drv[erj] * r_amp[erk]

    # rr block
    rows = np.arange(pr)
    a[o_rr + rows, o_rr + rows] = 2.0 * wr - u_mat[rrj, rrk]
    if om != 0.0:
        a[o_rr + rows, o_er + eridx[rrj, rrk]] += om
        a[o_rr + rows, o_er + eridx[rrk, rrj]] += om

    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular pair-oracle system: {exc}") from exc
    res = np.linalg.norm(a @ x - b)
    if res > 1e-8 * max(np.linalg.norm(b), np.linalg.norm(x), 1e-300):
        raise NumericalError(f"ill-conditioned pair-oracle solve, residual {res:.2e}")

    c_ee = np.zeros((n, n), dtype=complex)
    c_ee[ju, ku] = x[o_ee : o_ee + p]
    c_ee[ku, ju] = x[o_ee : o_ee + p]
    c_er = np.zeros((n, n), dtype=complex)
    c_er[erj, erk] = x[o_er : o_er + q]
    c_rr = np.zeros((n, n), dtype=complex)
    c_rr[rrj, rrk] = x[o_rr : o_rr + pr]
    c_rr[rrk, rrj] = x[o_rr : o_rr + pr]

    return PairAmplitudes(
        singles=e_amp,
        pairs=c_ee,
        kind=interaction.kind,
        a_in=a_in,
        out_coupling=G_COUPLING,
        r_singles=r_amp,
        pairs_er=c_er,
        pairs_rr=c_rr,
    )


def g2_equal_time(pair: PairAmplitudes, mode: ModeVector, ports=("r", "r")) -> float:
    """Equal-time intensity correlation between two output ports.

    Ports: "r" reflected (no coherent input), "t" transmitted.  The result
    is independent of the probe strength by construction.
    """
    for port in ports:
        if port not in ("r", "t"):
            raise ConfigError(f"unknown output port {port!r}")
    x = pair.out_coupling
    u = mode.u
    f1 = 1j * x * np.einsum("j,j->", np.conj(u), pair.singles) / pair.a_in
    f2 = (1j * x) ** 2 * (np.conj(u) @ pair.pairs @ np.conj(u)) / pair.a_in**2

    amp_in = {"r": 0.0, "t": 1.0}
    a1 = {p: amp_in[p] + f1 for p in ("r", "t")}
    aa, ab = (amp_in[ports[0]], amp_in[ports[1]])
    a2 = aa * ab + (aa + ab) * f1 + f2

    den = abs(a1[ports[0]]) ** 2 * abs(a1[ports[1]]) ** 2
    if den < _PORT_FLOOR:
        raise NumericalError("port intensity underflow in g2 denominator")
    return float(abs(a2) ** 2 / den)
