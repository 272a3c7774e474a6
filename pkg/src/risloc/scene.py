"""Enclosure geometry and scene state.

Builds the simulated room: a rectangular wall fence of strongly scattering
dipoles, RIS line arrays mounted on the walls (with a dedicated sensing
subset), BS and user antenna arrays, and the moving scattering-object (SO)
clusters with their stochastic trajectories.  Also owns the mapping from a
unit-modulus RIS configuration to dipole resonance parameters and the
human-readable scene-spec file format.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import physics
from .physics import DipoleParams, DipoleSet, PhysicsError, radiative_damping

__all__ = [
    "SceneError",
    "RoomSpec",
    "SoTrajectory",
    "Scene",
    "EpisodeGeometry",
    "build_scene",
    "SoWalk",
    "advance_so",
    "config_to_dipole_params",
    "check_unit_modulus",
    "default_config",
    "desk_scene_spec",
    "load_scene_spec",
    "save_scene_spec",
]

UNIT_MODULUS_TOL = 1e-9


class SceneError(Exception):
    pass


# Table-style dipole parameter defaults; gamma_r = None means the
# energy-conserving radiative value is filled in at build time.
DIPOLE_DEFAULTS = {
    "transceiver": {"f_res": 1.0, "chi": 0.5, "gamma_l": 0.0, "gamma_r": None},
    "environment": {"f_res": 10.0, "chi": 50.0, "gamma_l": 1e4, "gamma_r": None},
    "ris": {"chi": 0.2, "gamma_l": 0.03, "gamma_r": None,
            "f_res_band": [0.8, 1.2]},
    "sensing": {"f_res": 1.0, "chi": 1e-3, "gamma_l": 0.03, "gamma_r": None},
}


@dataclass
class RoomSpec:
    """Geometric layout of the enclosure (lengths in wavelengths)."""

    width: float = 8.0
    height: float = 8.0
    wall_spacing: float = 0.25
    ris_segments: list = field(default_factory=list)   # [{wall, offset, count}]
    ris_spacing: float = 0.5
    ris_inset: float = 0.125
    sensing_count: int = 4
    sensing_rule: str = "even"
    bs_position: tuple = (0.75, 3.0)
    bs_count: int = 1
    bs_spacing: float = 0.5
    user_count: int = 1
    user_grid_spacing: float = 0.5
    user_region: tuple = (2.0, 2.0, 6.0, 6.0)   # xmin, ymin, xmax, ymax

    def validate(self):
        if self.width <= 0 or self.height <= 0:
            raise SceneError("room dimensions must be positive")
        for name in ("wall_spacing", "ris_spacing", "bs_spacing",
                     "user_grid_spacing"):
            if getattr(self, name) <= 0:
                raise SceneError(f"{name} must be positive")
        perim = 2.0 * (self.width + self.height)
        n = perim / self.wall_spacing
        if abs(n - round(n)) > 1e-9:
            raise SceneError("wall perimeter must be a multiple of the pitch")
        x0, y0, x1, y1 = self.user_region
        if not (0 < x0 < x1 < self.width and 0 < y0 < y1 < self.height):
            raise SceneError("user region must lie strictly inside the room")


@dataclass
class SoTrajectory:
    """Base path and noise parameters of one scattering-object cluster."""

    waypoints: np.ndarray                      # (K, 2)
    step_max: float = 0.25
    sigma_theta: float = 0.052
    sigma_p: float = 0.05                      # lambda / 20
    cluster_offsets: np.ndarray = field(
        default_factory=lambda: np.array([[-0.25, 0.0], [0.0, 0.0], [0.25, 0.0]]))

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=np.float64)
        self.cluster_offsets = np.asarray(self.cluster_offsets, dtype=np.float64)
        if self.waypoints.ndim != 2 or self.waypoints.shape[0] < 2:
            raise SceneError("trajectory needs at least two waypoints")

    @property
    def arclength(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0),
                                           axis=1)))

    def point_at(self, s: float) -> np.ndarray:
        """Position at (ping-pong folded) arclength s along the polyline."""
        total = self.arclength
        s = s % (2 * total)
        if s > total:
            s = 2 * total - s
        segs = np.diff(self.waypoints, axis=0)
        lens = np.linalg.norm(segs, axis=1)
        for p0, seg, ln in zip(self.waypoints[:-1], segs, lens):
            if ln > 0 and s <= ln:
                return p0 + seg * (s / ln)
            s -= ln
        return self.waypoints[-1].copy()


@dataclass
class EpisodeGeometry:
    """Ground-truth geometry of one localization episode."""

    user_center: np.ndarray          # (2,)
    user_dipoles: np.ndarray         # (N_U, 2)
    so_centers: np.ndarray           # (T, M, 2) realized central dipoles
    so_dipoles: np.ndarray           # (T, M * n_cluster, 2)
    clamped_steps: int = 0


@dataclass
class Scene:
    """Everything needed to simulate episodes in one enclosure."""

    room: RoomSpec
    dipoles: DipoleSet               # template positions (user/SO placeholders)
    sensing_indices: np.ndarray      # global indices into the RIS block
    so_dipole_indices: np.ndarray    # (M * n_cluster,) global indices
    trajectories: list
    user_grid: np.ndarray            # (G, 2) admissible user centers
    frequency: float = 1.0
    seed: int = 0
    params: dict = field(default_factory=dict)

    @property
    def n_ris(self) -> int:
        return self.dipoles.n_ris

    @property
    def n_so(self) -> int:
        return len(self.trajectories)

    @property
    def user_offsets(self) -> np.ndarray:
        n = self.room.user_count
        span = (n - 1) * self.room.user_grid_spacing
        ys = np.linspace(-span / 2, span / 2, n) if n > 1 else np.zeros(1)
        return np.stack([np.zeros(n), ys], axis=1)

    def dipoles_for(self, user_center, so_centers_flat) -> DipoleSet:
        """DipoleSet copy with user and SO positions filled in.

        ``so_centers_flat``: (M, 2) central positions, one per cluster.
        """
        ds = copy.deepcopy(self.dipoles)
        ds.positions[ds.u_indices] = np.asarray(user_center) + self.user_offsets
        ds.positions[self.so_dipole_indices] = self.so_cluster_positions(
            np.asarray(so_centers_flat))
        return ds

    def so_cluster_positions(self, centers: np.ndarray) -> np.ndarray:
        """Expand (..., M, 2) cluster centers into (..., M*n_cl, 2) dipoles."""
        outs = []
        for m, traj in enumerate(self.trajectories):
            outs.append(centers[..., m, None, :] + traj.cluster_offsets)
        return np.concatenate(outs, axis=-2)

    def sample_episode(self, rng: np.random.Generator, frames: int
                       ) -> EpisodeGeometry:
        """Draw a user grid point and one realized SO trajectory."""
        user_center = self.user_grid[rng.integers(len(self.user_grid))]
        walk = SoWalk(self, rng)
        centers = np.empty((frames, self.n_so, 2))
        clamped = 0
        for t in range(frames):
            state = advance_so(walk, rng)
            centers[t] = state.reshape(self.n_so, 2)
            clamped += walk.last_clamped
        return EpisodeGeometry(
            user_center=user_center,
            user_dipoles=user_center + self.user_offsets,
            so_centers=centers,
            so_dipoles=self.so_cluster_positions(centers),
            clamped_steps=clamped)


class SoWalk:
    """Mutable traversal state of all SO clusters within one episode."""

    def __init__(self, scene: Scene, rng: np.random.Generator | None = None):
        self.scene = scene
        self.trajectories = scene.trajectories
        # independent random starting offsets along each base path
        if rng is None:
            self.s = np.zeros(len(self.trajectories))
        else:
            self.s = np.array([rng.uniform(0, t.arclength)
                               for t in self.trajectories])
        self.last_clamped = 0

    def clamp_box(self, traj: SoTrajectory):
        room = self.scene.room
        ext = np.abs(traj.cluster_offsets).max(axis=0)
        lo = 0.25 + ext
        return (lo[0], lo[1], room.width - lo[0], room.height - lo[1])


def advance_so(walk: SoWalk, rng: np.random.Generator) -> np.ndarray:
    """Advance every cluster one step; returns the 2M state vector.

    Each cluster moves ``step_max`` along its base polyline; the realized
    position applies a Gaussian heading rotation to the step and an isotropic
    Gaussian positional offset.  Steps that would leave the enclosure margin
    are clamped (flagged via ``walk.last_clamped``).
    """
    walk.last_clamped = 0
    out = np.empty((len(walk.trajectories), 2))
    for m, traj in enumerate(walk.trajectories):
        p_prev = traj.point_at(walk.s[m])
        walk.s[m] += traj.step_max
        p_base = traj.point_at(walk.s[m])
        step = p_base - p_prev
        dtheta = rng.normal(0.0, traj.sigma_theta)
        eps = rng.normal(0.0, traj.sigma_p, size=2)
        c, s = np.cos(dtheta), np.sin(dtheta)
        rot = np.array([[c, -s], [s, c]])
        p = p_prev + rot @ step + eps
        x0, y0, x1, y1 = walk.clamp_box(traj)
        clipped = np.clip(p, [x0, y0], [x1, y1])
        if not np.array_equal(clipped, p):
            walk.last_clamped += 1
        out[m] = clipped
    return out.reshape(-1)


def check_unit_modulus(k: np.ndarray, tol: float = UNIT_MODULUS_TOL):
    k = np.asarray(k)
    dev = np.abs(np.abs(k) - 1.0)
    if dev.size and dev.max() > tol:
        raise SceneError(f"configuration violates unit modulus by {dev.max():.2e}")


def default_config(n_ris: int) -> np.ndarray:
    """Fixed initial configuration: all elements at zero phase."""
    return np.ones(n_ris, dtype=np.complex128)


def config_to_dipole_params(k: np.ndarray, scene: Scene) -> list:
    """Per-element dipole parameters for a unit-modulus configuration.

    Tunable elements map their phase linearly onto the resonance band;
    sensing elements keep their pinned parameters.
    """
    check_unit_modulus(k)
    ds = scene.dipoles
    if len(k) != ds.n_ris:
        raise SceneError(f"configuration length {len(k)} != N_RIS {ds.n_ris}")
    delta = np.mod(np.angle(k), 2 * np.pi)
    f_res = physics.phase_to_f_res(delta, ds.ris_band)
    ris = ds.ris_indices
    out = []
    for i, n in enumerate(ris):
        fr = f_res[i] if ds.ris_tunable[i] else ds.f_res[n]
        out.append(DipoleParams(f_res=float(fr), chi=float(ds.chi[n]),
                                gamma_r=float(ds.gamma_r[n]),
                                gamma_l=float(ds.gamma_l[n])))
    return out


def _wall_positions(room: RoomSpec) -> np.ndarray:
    perim = 2.0 * (room.width + room.height)
    n = int(round(perim / room.wall_spacing))
    s = np.arange(n) * room.wall_spacing
    return np.array([_perimeter_point(room, si) for si in s])


def _perimeter_point(room: RoomSpec, s: float) -> np.ndarray:
    w, h = room.width, room.height
    s = s % (2 * (w + h))
    if s < w:
        return np.array([s, 0.0])
    s -= w
    if s < h:
        return np.array([w, s])
    s -= h
    if s < w:
        return np.array([w - s, h])
    s -= w
    return np.array([0.0, h - s])


def _wall_frame(room: RoomSpec, wall: int):
    """Origin, tangent and inward normal of one wall (0 b, 1 r, 2 t, 3 l)."""
    w, h = room.width, room.height
    frames = {
        0: (np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])),
        1: (np.array([w, 0.0]), np.array([0.0, 1.0]), np.array([-1.0, 0.0])),
        2: (np.array([w, h]), np.array([-1.0, 0.0]), np.array([0.0, -1.0])),
        3: (np.array([0.0, h]), np.array([0.0, -1.0]), np.array([1.0, 0.0])),
    }
    if wall not in frames:
        raise SceneError(f"wall id must be 0..3, got {wall}")
    return frames[wall]


def _ris_positions(room: RoomSpec) -> np.ndarray:
    pts = []
    w, h = room.width, room.height
    for seg in room.ris_segments:
        wall, offset, count = seg["wall"], float(seg["offset"]), int(seg["count"])
        origin, tang, normal = _wall_frame(room, wall)
        wall_len = w if wall in (0, 2) else h
        span = (count - 1) * room.ris_spacing
        if offset < 0 or offset + span > wall_len:
            raise SceneError(f"RIS segment {seg} exceeds wall length {wall_len}")
        for i in range(count):
            pts.append(origin + tang * (offset + i * room.ris_spacing)
                       + normal * room.ris_inset)
    if not pts:
        raise SceneError("scene has no RIS segments")
    return np.array(pts)


def _sensing_indices(n_ris: int, count: int, rule: str) -> np.ndarray:
    if count > n_ris:
        raise SceneError("sensing count exceeds RIS size")
    if rule != "even":
        raise SceneError(f"unknown sensing placement rule {rule!r}")
    idx = np.unique(np.round(np.linspace(0, n_ris - 1, count)).astype(int))
    if len(idx) != count:
        raise SceneError("sensing placement produced duplicate indices")
    return idx


def _class_params(params: dict, name: str) -> dict:
    merged = dict(DIPOLE_DEFAULTS[name])
    merged.update(params.get(name, {}))
    return merged


def build_scene(spec: dict | RoomSpec) -> Scene:
    """Construct the scene from a spec dict (see :func:`desk_scene_spec`)."""
    if isinstance(spec, RoomSpec):
        spec = {"room": spec.__dict__}
    room_d = dict(spec.get("room", {}))
    ris_d = dict(spec.get("ris", {}))
    bs_d = dict(spec.get("bs", {}))
    user_d = dict(spec.get("user", {}))
    so_d = dict(spec.get("so", {}))
    params = dict(spec.get("dipoles", {}))
    frequency = float(spec.get("frequency", 1.0))
    prefactor = float(spec.get("prefactor", 1.0))
    seed = int(spec.get("seed", 0))

    room = RoomSpec(
        width=float(room_d.get("width", 8.0)),
        height=float(room_d.get("height", 8.0)),
        wall_spacing=float(room_d.get("wall_spacing", 0.25)),
        ris_segments=list(ris_d.get("segments", [])),
        ris_spacing=float(ris_d.get("spacing", 0.5)),
        ris_inset=float(ris_d.get("inset", 0.125)),
        sensing_count=int(ris_d.get("sensing_count", 4)),
        sensing_rule=str(ris_d.get("sensing_rule", "even")),
        bs_position=tuple(bs_d.get("position", (0.75, 3.0))),
        bs_count=int(bs_d.get("count", 1)),
        bs_spacing=float(bs_d.get("spacing", 0.5)),
        user_count=int(user_d.get("count", 1)),
        user_grid_spacing=float(user_d.get("spacing", 0.5)),
        user_region=tuple(user_d.get("region", (2.0, 2.0, 6.0, 6.0))),
    )
    room.validate()

    walls = _wall_positions(room)
    ris = _ris_positions(room)
    n_ris = len(ris)

    bs0 = np.asarray(room.bs_position, dtype=float)
    span = (room.bs_count - 1) * room.bs_spacing
    bs = np.stack([np.full(room.bs_count, bs0[0]),
                   bs0[1] + np.linspace(-span / 2, span / 2, room.bs_count)
                   if room.bs_count > 1 else np.full(1, bs0[1])], axis=1)

    # trajectories and the SO dipole block
    trajs = []
    offsets_default = so_d.get("cluster_offsets")
    for tr in so_d.get("trajectories", []):
        kwargs = {"waypoints": np.asarray(tr["waypoints"], dtype=float),
                  "step_max": float(so_d.get("step_max", 0.25)),
                  "sigma_theta": float(so_d.get("sigma_theta", 0.052)),
                  "sigma_p": float(so_d.get("sigma_p", 0.05))}
        if offsets_default is not None:
            kwargs["cluster_offsets"] = np.asarray(offsets_default, dtype=float)
        trajs.append(SoTrajectory(**kwargs))
    so_template = np.concatenate(
        [t.waypoints[0] + t.cluster_offsets for t in trajs], axis=0) \
        if trajs else np.zeros((0, 2))

    # user grid strictly inside the declared region
    x0, y0, x1, y1 = room.user_region
    gs = room.user_grid_spacing
    xs = np.arange(x0, x1 + 1e-9, gs)
    ys = np.arange(y0, y1 + 1e-9, gs)
    grid = np.array([[x, y] for x in xs for y in ys])
    if not len(grid):
        raise SceneError("empty user grid")
    user_center = grid[len(grid) // 2]

    n_bs, n_u = room.bs_count, room.user_count
    n_wall, n_so_dip = len(walls), len(so_template)
    n_e = n_wall + n_so_dip
    n = n_bs + n_u + n_e + n_ris

    tr_p = _class_params(params, "transceiver")
    env_p = _class_params(params, "environment")
    ris_p = _class_params(params, "ris")
    sen_p = _class_params(params, "sensing")

    user_offsets_span = (n_u - 1) * room.user_grid_spacing
    u_off = np.stack([np.zeros(n_u),
                      np.linspace(-user_offsets_span / 2, user_offsets_span / 2,
                                  n_u) if n_u > 1 else np.zeros(1)], axis=1)
    positions = np.concatenate([
        bs, user_center + u_off, walls, so_template, ris], axis=0)

    f_res = np.empty(n)
    chi = np.empty(n)
    gamma_l = np.empty(n)
    gamma_r = np.empty(n)

    def fill(sl, p, f_res_value=None):
        f_res[sl] = p["f_res"] if f_res_value is None else f_res_value
        chi[sl] = p["chi"]
        gamma_l[sl] = p["gamma_l"]
        gamma_r[sl] = (p["gamma_r"] if p.get("gamma_r") is not None
                       else radiative_damping(p["chi"], frequency, prefactor))

    sl_bs = slice(0, n_bs)
    sl_u = slice(n_bs, n_bs + n_u)
    sl_e = slice(n_bs + n_u, n_bs + n_u + n_e)
    sl_ris = slice(n_bs + n_u + n_e, n)
    fill(sl_bs, tr_p)
    fill(sl_u, tr_p)
    fill(sl_e, env_p)
    band = tuple(ris_p.get("f_res_band", (0.8, 1.2)))
    fill(sl_ris, ris_p, f_res_value=0.5 * (band[0] + band[1]))

    sensing = _sensing_indices(n_ris, room.sensing_count, room.sensing_rule)
    tunable = np.ones(n_ris, dtype=bool)
    tunable[sensing] = False
    ris_global = np.arange(n_bs + n_u + n_e, n)
    for i in sensing:
        g = ris_global[i]
        f_res[g] = sen_p["f_res"]
        chi[g] = sen_p["chi"]
        gamma_l[g] = sen_p["gamma_l"]
        gamma_r[g] = (sen_p["gamma_r"] if sen_p.get("gamma_r") is not None
                      else radiative_damping(sen_p["chi"], frequency, prefactor))

    dipoles = DipoleSet(positions=positions, f_res=f_res, chi=chi,
                        gamma_r=gamma_r, gamma_l=gamma_l,
                        n_bs=n_bs, n_u=n_u, n_e=n_e, n_ris=n_ris,
                        ris_band=band, ris_tunable=tunable,
                        prefactor=prefactor)
    try:
        dipoles.check_separation()
    except PhysicsError as exc:
        raise SceneError(f"geometry violation: {exc}") from exc

    so_dipole_indices = np.arange(n_bs + n_u + n_wall, n_bs + n_u + n_e)
    return Scene(room=room, dipoles=dipoles,
                 sensing_indices=ris_global[sensing],
                 so_dipole_indices=so_dipole_indices,
                 trajectories=trajs, user_grid=grid,
                 frequency=frequency, seed=seed, params=spec)


def desk_scene_spec(n_ris: int = 16, n_bs: int = 1, n_u: int = 1,
                    seed: int = 0) -> dict:
    """Default desk-scale scene: 8x8 room, two RIS strips, two SO corridors."""
    half = n_ris // 2
    span0 = (half - 1) * 0.5
    span1 = (n_ris - half - 1) * 0.5
    return {
        "seed": seed,
        "frequency": 1.0,
        "prefactor": 1.0,
        "room": {"width": 8.0, "height": 8.0, "wall_spacing": 0.25},
        "ris": {
            "spacing": 0.5,
            "inset": 0.125,
            "segments": [
                {"wall": 0, "offset": round(4.0 - span0 / 2, 3), "count": half},
                {"wall": 2, "offset": round(4.0 - span1 / 2, 3),
                 "count": n_ris - half},
            ],
            "sensing_count": 4,
            "sensing_rule": "even",
        },
        "bs": {"position": [0.75, 4.0], "count": n_bs, "spacing": 0.5},
        "user": {"count": n_u, "spacing": 0.5, "region": [2.5, 2.5, 6.0, 6.0]},
        "so": {
            "step_max": 0.25,
            "sigma_theta": 0.052,
            "sigma_p": 0.05,
            "cluster_offsets": [[-0.25, 0.0], [0.0, 0.0], [0.25, 0.0]],
            "trajectories": [
                {"waypoints": [[1.5, 1.25], [6.5, 1.25]]},
                {"waypoints": [[6.75, 2.5], [6.75, 6.5]]},
            ],
        },
        "dipoles": {},
    }


def save_scene_spec(spec: dict, path):
    with open(path, "w") as f:
        yaml.safe_dump(spec, f, default_flow_style=None, sort_keys=True)


def load_scene_spec(path) -> dict:
    with open(path) as f:
        return yaml.safe_load(f)
