"""Coupled-dipole channel model for the enclosure.

Every radiating entity (wall segment, RIS element, scattering-object dipole,
transceiver antenna) is a polarizable dipole in the x-y plane.  The N x N
interaction matrix carries inverse polarizabilities on its diagonal and the
negative two-dimensional Green's function off it; channels between dipole
groups are blocks of diag(alpha^-1) W^-1.

Units are normalized: wavelength 1, propagation speed 1, operating frequency
1, wavenumber 2*pi.  All matrices are complex128; W (and hence W^-1) is
complex symmetric by reciprocity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack as _lapack

from .specfun import hankel2_0

__all__ = [
    "PhysicsError",
    "DipoleParams",
    "DipoleSet",
    "ChannelResponse",
    "ChannelContext",
    "polarizability",
    "inverse_polarizability",
    "radiative_damping",
    "phase_to_f_res",
    "greens_function",
    "assemble_w",
    "channel",
    "channel_adjoint",
    "condition_estimate",
    "BatchChannelEngine",
]

MIN_SEPARATION = 1e-9


class PhysicsError(Exception):
    """Raised for degenerate dipoles, singular systems, bad geometry."""


@dataclass(frozen=True)
class DipoleParams:
    """Electromagnetic description of one dipole."""

    f_res: float
    chi: float
    gamma_r: float
    gamma_l: float

    def __post_init__(self):
        if not (self.chi > 0):
            raise PhysicsError(f"chi must be positive, got {self.chi}")
        if self.gamma_l < 0:
            raise PhysicsError(f"gamma_l must be >= 0, got {self.gamma_l}")
        if not (self.f_res > 0):
            raise PhysicsError(f"f_res must be positive, got {self.f_res}")


@dataclass
class DipoleSet:
    """All dipoles of a scene, partitioned BS | U | E (walls then SO) | RIS.

    ``f_res`` holds the configuration-independent resonance frequencies; RIS
    entries are placeholders that :func:`assemble_w` overwrites from the
    configuration phases (sensing elements, flagged False in ``ris_tunable``,
    keep their pinned values).
    """

    positions: np.ndarray        # (N, 2) float64, wavelength units
    f_res: np.ndarray            # (N,)
    chi: np.ndarray              # (N,)
    gamma_r: np.ndarray          # (N,)
    gamma_l: np.ndarray          # (N,)
    n_bs: int
    n_u: int
    n_e: int
    n_ris: int
    ris_band: tuple = (0.8, 1.2)                 # f_res range spanned by phases
    ris_tunable: np.ndarray | None = None        # (n_ris,) bool
    prefactor: float = 1.0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        for name in ("f_res", "chi", "gamma_r", "gamma_l"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.ris_tunable is None:
            self.ris_tunable = np.ones(self.n_ris, dtype=bool)
        n = self.n_bs + self.n_u + self.n_e + self.n_ris
        if self.positions.shape != (n, 2):
            raise PhysicsError(
                f"positions shape {self.positions.shape} does not match "
                f"role counts summing to {n}")
        for name in ("f_res", "chi", "gamma_r", "gamma_l"):
            if getattr(self, name).shape != (n,):
                raise PhysicsError(f"{name} must have shape ({n},)")

    @property
    def n_total(self) -> int:
        return self.n_bs + self.n_u + self.n_e + self.n_ris

    @property
    def bs_indices(self) -> np.ndarray:
        return np.arange(0, self.n_bs)

    @property
    def u_indices(self) -> np.ndarray:
        return np.arange(self.n_bs, self.n_bs + self.n_u)

    @property
    def e_indices(self) -> np.ndarray:
        lo = self.n_bs + self.n_u
        return np.arange(lo, lo + self.n_e)

    @property
    def ris_indices(self) -> np.ndarray:
        lo = self.n_bs + self.n_u + self.n_e
        return np.arange(lo, lo + self.n_ris)

    def check_separation(self):
        d = np.linalg.norm(self.positions[:, None, :] - self.positions[None, :, :],
                           axis=-1)
        np.fill_diagonal(d, np.inf)
        dmin = d.min()
        if dmin <= MIN_SEPARATION:
            i, j = np.unravel_index(np.argmin(d), d.shape)
            raise PhysicsError(f"coincident dipoles {i} and {j} (d = {dmin:.3e})")


@dataclass
class ChannelResponse:
    """Extracted channel blocks: BS->user and BS->sensing elements."""

    h_bs_u: np.ndarray   # (N_U, N_BS) complex128
    h_bs_s: np.ndarray   # (S_RIS, N_BS) complex128


@dataclass
class ChannelContext:
    """Factorization cache for one (scene, config, frequency) evaluation."""

    lu: np.ndarray | None = None
    piv: np.ndarray | None = None
    diag: np.ndarray | None = None
    x_cols: np.ndarray | None = None     # W^-1[:, BS]
    rows: np.ndarray | None = None       # output row indices (U then sensing)
    delta: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


def polarizability(params: DipoleParams, f: float) -> complex:
    """Dipole frequency response alpha(f)."""
    if not (f > 0):
        raise PhysicsError(f"frequency must be positive, got {f}")
    den = (4 * np.pi**2 * (params.f_res**2 - f**2)
           + 1j * (params.gamma_r + 2 * np.pi * f * params.gamma_l))
    if abs(den) < 1e-30:
        raise PhysicsError(
            "degenerate polarizability: lossless dipole exactly at resonance")
    return params.chi**2 / den


def inverse_polarizability(f_res, chi, gamma_r, gamma_l, f):
    """Vectorized alpha^-1; the W diagonal."""
    den = (4 * np.pi**2 * (np.asarray(f_res)**2 - f**2)
           + 1j * (np.asarray(gamma_r) + 2 * np.pi * f * np.asarray(gamma_l)))
    if np.any(np.abs(den) < 1e-30):
        raise PhysicsError("degenerate polarizability in dipole set")
    return den / np.asarray(chi)**2


def radiative_damping(chi, f: float = 1.0, prefactor: float = 1.0):
    """Energy-conserving radiation damping k^2 chi^2 prefactor / 4.

    Makes Im(alpha^-1) match -Im(G(r -> 0)) so a lossless dipole neither
    creates nor destroys energy.
    """
    k = 2 * np.pi * f
    return (k * k) * np.asarray(chi)**2 * prefactor / 4.0


def phase_to_f_res(delta, band=(0.8, 1.2)):
    """Linear map from phase in [0, 2*pi) to the RIS resonance band."""
    lo, hi = band
    return lo + (hi - lo) * np.asarray(delta) / (2 * np.pi)


def config_phases(k: np.ndarray) -> np.ndarray:
    """Phases of a unit-modulus configuration, wrapped to [0, 2*pi)."""
    return np.mod(np.angle(k), 2 * np.pi)


def greens_function(r_i, r_j, f: float, prefactor: float = 1.0) -> complex:
    """2D free-space Green's function between two dipole positions."""
    r_i = np.asarray(r_i, dtype=np.float64)
    r_j = np.asarray(r_j, dtype=np.float64)
    d = float(np.linalg.norm(r_i - r_j))
    if d <= MIN_SEPARATION:
        raise PhysicsError("coincident points in greens_function")
    k = 2 * np.pi * f
    return -1j * (k * k * prefactor / 4.0) * hankel2_0(k * d)


def _greens_offdiag(positions: np.ndarray, f: float, prefactor: float) -> np.ndarray:
    """Dense (N, N) Green's matrix with a zero diagonal."""
    diff = positions[:, None, :] - positions[None, :, :]
    d = np.sqrt(diff[..., 0]**2 + diff[..., 1]**2)
    np.fill_diagonal(d, 1.0)  # masked out below
    k = 2 * np.pi * f
    g = -1j * (k * k * prefactor / 4.0) * hankel2_0(k * d.ravel()).reshape(d.shape)
    np.fill_diagonal(g, 0.0)
    return g


def _effective_f_res(dipoles: DipoleSet, ris_config: np.ndarray) -> np.ndarray:
    """Scene resonance frequencies with tunable RIS entries set from phases."""
    k = np.asarray(ris_config)
    if k.shape != (dipoles.n_ris,):
        raise PhysicsError(
            f"RIS configuration length {k.shape} != ({dipoles.n_ris},)")
    f_res = dipoles.f_res.copy()
    if dipoles.n_ris:
        delta = config_phases(k)
        mapped = phase_to_f_res(delta, dipoles.ris_band)
        ris = dipoles.ris_indices
        tun = dipoles.ris_tunable
        f_res[ris[tun]] = mapped[tun]
    return f_res


def assemble_w(dipoles: DipoleSet, f: float, ris_config: np.ndarray) -> np.ndarray:
    """Interaction matrix W: alpha^-1 on the diagonal, -G off it."""
    dipoles.check_separation()
    f_res = _effective_f_res(dipoles, ris_config)
    diag = inverse_polarizability(f_res, dipoles.chi, dipoles.gamma_r,
                                  dipoles.gamma_l, f)
    w = -_greens_offdiag(dipoles.positions, f, dipoles.prefactor)
    np.fill_diagonal(w, diag)
    return w


def condition_estimate(w: np.ndarray, lu: np.ndarray | None = None,
                       piv: np.ndarray | None = None) -> float:
    """1-norm condition estimate from an (optionally supplied) factorization."""
    anorm = np.linalg.norm(w, 1)
    if lu is None:
        lu, piv = sla.lu_factor(w, check_finite=False)
    rcond, info = _lapack.zgecon(lu, anorm)
    if info != 0 or rcond == 0.0:
        return np.inf
    return 1.0 / rcond


def channel(dipoles: DipoleSet, f: float, ris_config: np.ndarray,
            sensing_indices: np.ndarray,
            ctx: ChannelContext | None = None) -> ChannelResponse:
    """Channel blocks BS->U and BS->sensing for one configuration.

    One LU factorization of W, back-substitution for the BS columns of W^-1,
    then the diagonal alpha^-1 scaling.  Pass ``ctx`` to keep the
    factorization for :func:`channel_adjoint`.
    """
    sensing_indices = np.asarray(sensing_indices, dtype=int)
    ris = dipoles.ris_indices
    if sensing_indices.size and not np.isin(sensing_indices, ris).all():
        raise PhysicsError("sensing indices outside the RIS index range")

    w = assemble_w(dipoles, f, ris_config)
    try:
        lu, piv = sla.lu_factor(w, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - lapack raises rarely
        raise PhysicsError(f"singular interaction matrix: {exc}") from exc
    cond = condition_estimate(w, lu, piv)
    if not np.isfinite(cond) or cond > 1e14:
        raise PhysicsError(f"singular interaction matrix (cond ~ {cond:.2e})")

    n = dipoles.n_total
    cols = dipoles.bs_indices
    rhs = np.zeros((n, cols.size), dtype=np.complex128)
    rhs[cols, np.arange(cols.size)] = 1.0
    x = sla.lu_solve((lu, piv), rhs, check_finite=False)

    diag = inverse_polarizability(_effective_f_res(dipoles, ris_config),
                                  dipoles.chi, dipoles.gamma_r,
                                  dipoles.gamma_l, f)
    u_rows = dipoles.u_indices
    h_bs_u = diag[u_rows, None] * x[u_rows, :]
    h_bs_s = diag[sensing_indices, None] * x[sensing_indices, :]

    if ctx is not None:
        ctx.lu, ctx.piv, ctx.diag = lu, piv, diag
        ctx.x_cols = x
        ctx.rows = np.concatenate([u_rows, sensing_indices])
        ctx.delta = config_phases(np.asarray(ris_config))
    return ChannelResponse(h_bs_u=h_bs_u, h_bs_s=h_bs_s)


def channel_adjoint(dipoles: DipoleSet, f: float, ris_config: np.ndarray,
                    sensing_indices: np.ndarray, upstream: ChannelResponse,
                    ctx: ChannelContext) -> np.ndarray:
    """Gradient of Re<upstream, H> with respect to the RIS phases.

    ``upstream`` carries complex cotangents g with the convention
    dL = Re(sum conj(g) * dH); the return value is dL/d(delta_n) for each of
    the n_ris configuration phases (zero at sensing elements).

    Uses d(W^-1) = -W^-1 dW W^-1 where dW/d(delta_n) touches a single
    diagonal entry, re-using the factorization cached by :func:`channel`.
    """
    if ctx is None or ctx.lu is None:
        raise PhysicsError("channel_adjoint called without a cached factorization")
    sensing_indices = np.asarray(sensing_indices, dtype=int)
    u_rows = dipoles.u_indices
    gu = np.asarray(upstream.h_bs_u, dtype=np.complex128)
    gs = np.asarray(upstream.h_bs_s, dtype=np.complex128)
    if gu.shape != (dipoles.n_u, dipoles.n_bs) or \
            gs.shape != (sensing_indices.size, dipoles.n_bs):
        raise PhysicsError("upstream cotangent shape mismatch")

    rows = np.concatenate([u_rows, sensing_indices])
    n = dipoles.n_total
    rhs = np.zeros((n, rows.size), dtype=np.complex128)
    rhs[rows, np.arange(rows.size)] = 1.0
    z = sla.lu_solve((ctx.lu, ctx.piv), rhs, check_finite=False)  # W^-1[:, rows]

    # cotangent on X = W^-1[:, BS]: xbar = g * conj(d_row), rows R only
    gbar = np.concatenate([gu, gs], axis=0) * np.conj(ctx.diag[rows])[:, None]
    # S_n = sum_{r,c} Z[n,r] conj(xbar)[r,c] X[n,c]
    m = z @ np.conj(gbar)                       # (N, N_BS)
    s = np.sum(m * ctx.x_cols, axis=1)          # (N,)

    ris = dipoles.ris_indices
    f_res_ris = phase_to_f_res(ctx.delta, dipoles.ris_band)
    band_slope = (dipoles.ris_band[1] - dipoles.ris_band[0]) / (2 * np.pi)
    dw_ddelta = 8 * np.pi**2 * f_res_ris * band_slope / dipoles.chi[ris]**2
    grad = -np.real(s[ris]) * dw_ddelta
    grad[~dipoles.ris_tunable] = 0.0
    return grad


def _fill_so_couplings(w, pos, so_idx, f, prefactor):
    """Overwrite the scattering-object rows/columns of batched W in place."""
    k = 2 * np.pi * f
    diff = pos[:, so_idx, None, :] - pos[:, None, :, :]
    d = np.sqrt(diff[..., 0]**2 + diff[..., 1]**2)       # (B, n_so, N)
    own = np.abs(d) < MIN_SEPARATION
    d[own] = 1.0
    g = -1j * (k * k * prefactor / 4.0) * hankel2_0(k * d.ravel()).reshape(d.shape)
    g[own] = 0.0
    rows = -g
    w[:, so_idx, :] = rows
    w[:, :, so_idx] = rows.transpose(0, 2, 1)


class BatchChannelEngine:
    """Vectorized forward/adjoint channel evaluation over episode batches.

    The static geometry (walls, BS, RIS placement, everything except user
    dipoles and scattering objects) is assembled once; per batch the user
    rows are filled, per frame the SO rows and the RIS diagonal.  The forward
    solve keeps the W^-1 columns needed by the adjoint, so backward is pure
    matrix arithmetic.
    """

    def __init__(self, dipoles: DipoleSet, f: float, sensing_indices,
                 so_indices, n_threads: int = 1):
        self.dipoles = dipoles
        self.f = f
        self.k_wave = 2 * np.pi * f
        self.sensing = np.asarray(sensing_indices, dtype=int)
        self.so_idx = np.asarray(so_indices, dtype=int)
        self.n_threads = max(1, int(n_threads))
        self._pool = None

        n = dipoles.n_total
        pos = dipoles.positions.copy()
        self.static_diag = inverse_polarizability(
            dipoles.f_res, dipoles.chi, dipoles.gamma_r, dipoles.gamma_l, f)
        # static couplings with user and SO rows left as garbage; they are
        # overwritten per batch / per frame
        g = _greens_offdiag(np.where(np.isfinite(pos), pos, 0.0), f,
                            dipoles.prefactor)
        self.w_static = -g
        np.fill_diagonal(self.w_static, self.static_diag)
        self.u_rows = dipoles.u_indices
        self.ris = dipoles.ris_indices
        self.rows_out = np.concatenate([self.u_rows, self.sensing])
        self.cols = dipoles.bs_indices
        self.n = n
        band = dipoles.ris_band
        self.band_slope = (band[1] - band[0]) / (2 * np.pi)

    def _solver_pool(self):
        if self._pool is None and self.n_threads > 1:
            from concurrent.futures import ThreadPoolExecutor
            self._pool = ThreadPoolExecutor(self.n_threads)
        return self._pool

    def new_batch(self, user_positions: np.ndarray):
        """Allocate the per-batch W buffer for user positions (B, N_U, 2)."""
        b = user_positions.shape[0]
        w = np.broadcast_to(self.w_static, (b, self.n, self.n)).copy()
        pos = np.broadcast_to(self.dipoles.positions, (b, self.n, 2)).copy()
        pos[:, self.u_rows, :] = user_positions
        # user rows couple to everything (fixed across frames except SO,
        # whose rows get overwritten later anyway)
        diff = pos[:, self.u_rows, None, :] - pos[:, None, :, :]
        d = np.sqrt(diff[..., 0]**2 + diff[..., 1]**2)
        own = d < MIN_SEPARATION
        d[own] = 1.0
        g = -1j * (self.k_wave**2 * self.dipoles.prefactor / 4.0) \
            * hankel2_0(self.k_wave * d.ravel()).reshape(d.shape)
        g[own] = 0.0
        w[:, self.u_rows, :] = -g
        w[:, :, self.u_rows] = (-g).transpose(0, 2, 1)
        w[:, self.u_rows, self.u_rows] = self.static_diag[self.u_rows]
        return {"w": w, "pos": pos, "b": b}

    def solve_frame(self, batch: dict, so_positions: np.ndarray,
                    delta: np.ndarray):
        """Channel for one frame.

        ``so_positions``: (B, n_so, 2) dipole positions of all SO clusters;
        ``delta``: (B, n_ris) configuration phases in [0, 2*pi).
        Returns (h_u, h_s, cache) with h_u (B, N_U, N_BS), h_s (B, S, N_BS).
        """
        w, pos, b = batch["w"], batch["pos"], batch["b"]
        pos[:, self.so_idx, :] = so_positions
        _fill_so_couplings(w, pos, self.so_idx, self.f, self.dipoles.prefactor)
        w[:, self.so_idx, self.so_idx] = self.static_diag[self.so_idx]

        f_res_ris = phase_to_f_res(delta, self.dipoles.ris_band)
        dip = self.dipoles
        tun = dip.ris_tunable
        ris_t = self.ris[tun]
        den = (4 * np.pi**2 * (f_res_ris[:, tun]**2 - self.f**2)
               + 1j * (dip.gamma_r[ris_t] + 2 * np.pi * self.f * dip.gamma_l[ris_t]))
        diag_ris = den / dip.chi[ris_t]**2
        w[:, ris_t, ris_t] = diag_ris

        ncols = self.cols.size + self.rows_out.size
        rhs = np.zeros((b, self.n, ncols), dtype=np.complex128)
        rhs[:, self.cols, np.arange(self.cols.size)] = 1.0
        rhs[:, self.rows_out, self.cols.size + np.arange(self.rows_out.size)] = 1.0

        pool = self._solver_pool()
        if pool is not None and b >= 2 * self.n_threads:
            chunks = np.array_split(np.arange(b), self.n_threads)
            outs = list(pool.map(
                lambda idx: np.linalg.solve(w[idx], rhs[idx]), chunks))
            sol = np.concatenate(outs, axis=0)
        else:
            sol = np.linalg.solve(w, rhs)

        x = sol[:, :, :self.cols.size]            # W^-1[:, BS]
        z = sol[:, :, self.cols.size:]            # W^-1[:, rows_out]

        diag_rows = np.broadcast_to(self.static_diag[self.rows_out],
                                    (b, self.rows_out.size))
        h_rows = diag_rows[:, :, None] * x[:, self.rows_out, :]
        nu = self.u_rows.size
        h_u = h_rows[:, :nu, :]
        h_s = h_rows[:, nu:, :]
        cache = {"x": x, "z": z, "diag_rows": diag_rows,
                 "f_res_ris": f_res_ris, "delta": delta}
        return h_u, h_s, cache

    def adjoint_frame(self, cache: dict, g_u: np.ndarray,
                      g_s: np.ndarray) -> np.ndarray:
        """dL/d(delta) for the frame, given complex channel cotangents."""
        gbar = np.concatenate([g_u, g_s], axis=1) \
            * np.conj(cache["diag_rows"])[:, :, None]
        m = cache["z"] @ np.conj(gbar)                  # (B, N, N_BS)
        s = np.sum(m * cache["x"], axis=2)              # (B, N)
        dip = self.dipoles
        dw_ddelta = (8 * np.pi**2 * cache["f_res_ris"] * self.band_slope
                     / dip.chi[self.ris]**2)
        grad = -np.real(s[:, self.ris]) * dw_ddelta
        grad[:, ~dip.ris_tunable] = 0.0
        return grad
