import numpy as np
import pytest
import yaml

from risloc import physics
from risloc.scene import (
    SceneError,
    SoTrajectory,
    SoWalk,
    advance_so,
    build_scene,
    check_unit_modulus,
    config_to_dipole_params,
    default_config,
    desk_scene_spec,
    load_scene_spec,
    save_scene_spec,
)


@pytest.fixture(scope="module")
def scene():
    return build_scene(desk_scene_spec())


def test_wall_count_eight_by_eight(scene):
    # perimeter 32 lambda at lambda/4 pitch
    n_wall = scene.dipoles.n_e - len(scene.so_dipole_indices)
    assert n_wall == 128


def test_role_partition_counts(scene):
    ds = scene.dipoles
    assert ds.n_total == ds.n_bs + ds.n_u + ds.n_e + ds.n_ris
    assert ds.n_bs == 1 and ds.n_u == 1 and ds.n_ris == 16
    assert ds.n_e == 128 + 2 * 3


def test_ris_block_contiguous(scene):
    ris = scene.dipoles.ris_indices
    assert np.array_equal(ris, np.arange(ris[0], ris[0] + 16))
    # two 8-element segments on opposite walls
    ys = scene.dipoles.positions[ris][:, 1]
    assert np.sum(ys < 1.0) == 8 and np.sum(ys > 7.0) == 8


def test_paper_scale_ris_sizes_buildable():
    for n_ris in (20, 60, 100):
        spec = desk_scene_spec(n_ris=n_ris)
        spec["room"]["width"] = spec["room"]["height"] = 30.0
        spec["ris"]["segments"] = [
            {"wall": 0, "offset": 2.0, "count": n_ris // 2},
            {"wall": 2, "offset": 2.0, "count": n_ris - n_ris // 2},
        ]
        spec["user"]["region"] = [6.0, 6.0, 24.0, 24.0]
        sc = build_scene(spec)
        assert sc.dipoles.n_ris == n_ris


def test_sensing_indices_inside_ris_block(scene):
    ris = scene.dipoles.ris_indices
    assert np.isin(scene.sensing_indices, ris).all()
    assert len(scene.sensing_indices) == 4
    assert not scene.dipoles.ris_tunable[
        np.searchsorted(ris, scene.sensing_indices)].any()


def test_build_deterministic():
    a = build_scene(desk_scene_spec())
    b = build_scene(desk_scene_spec())
    assert np.array_equal(a.dipoles.positions, b.dipoles.positions)
    assert np.array_equal(a.user_grid, b.user_grid)


def test_user_grid_strictly_inside(scene):
    room = scene.room
    g = scene.user_grid
    assert (g[:, 0] > 0).all() and (g[:, 0] < room.width).all()
    assert (g[:, 1] > 0).all() and (g[:, 1] < room.height).all()
    # lambda/2 grid
    dx = np.diff(np.unique(g[:, 0]))
    assert np.allclose(dx, 0.5)


def test_table_parameters_applied(scene):
    ds = scene.dipoles
    assert np.allclose(ds.chi[ds.e_indices], 50.0)
    assert np.allclose(ds.f_res[ds.e_indices], 10.0)
    assert np.allclose(ds.gamma_l[ds.e_indices], 1e4)
    assert np.allclose(ds.chi[ds.bs_indices], 0.5)
    tun = ds.ris_indices[ds.ris_tunable]
    assert np.allclose(ds.chi[tun], 0.2)
    assert np.allclose(ds.gamma_l[tun], 0.03)


def test_geometry_overlap_rejected():
    spec = desk_scene_spec()
    spec["ris"]["inset"] = 0.0  # RIS lands on the wall dipole line
    spec["ris"]["segments"] = [{"wall": 0, "offset": 1.0, "count": 8},
                               {"wall": 2, "offset": 1.0, "count": 8}]
    with pytest.raises(SceneError):
        build_scene(spec)


def test_out_of_bounds_segment_rejected():
    spec = desk_scene_spec()
    spec["ris"]["segments"][0]["offset"] = 7.5
    with pytest.raises(SceneError):
        build_scene(spec)


# ----------------------------------------------------------------- trajectories

def test_zero_noise_follows_waypoints(scene):
    traj = SoTrajectory(waypoints=[[1.0, 1.0], [3.0, 1.0]],
                        sigma_theta=0.0, sigma_p=0.0)
    sc = build_scene(desk_scene_spec())
    sc.trajectories = [traj]
    walk = SoWalk(sc)
    rng = np.random.default_rng(0)
    pts = [advance_so(walk, rng) for _ in range(4)]
    expected = [[1.25, 1.0], [1.5, 1.0], [1.75, 1.0], [2.0, 1.0]]
    assert np.allclose(pts, expected)


def test_pingpong_reflection():
    traj = SoTrajectory(waypoints=[[1.0, 1.0], [1.5, 1.0]],
                        sigma_theta=0.0, sigma_p=0.0)
    assert np.allclose(traj.point_at(0.75), [1.25, 1.0])  # folded back
    assert np.allclose(traj.point_at(1.0), [1.0, 1.0])


def test_fixed_seed_reproducible(scene):
    r1 = scene.sample_episode(np.random.default_rng(5), frames=6)
    r2 = scene.sample_episode(np.random.default_rng(5), frames=6)
    assert np.array_equal(r1.so_centers, r2.so_centers)
    assert np.array_equal(r1.user_center, r2.user_center)


def test_positional_noise_std(scene):
    traj = SoTrajectory(waypoints=[[2.0, 4.0], [6.0, 4.0]], sigma_theta=0.0)
    sc = build_scene(desk_scene_spec())
    sc.trajectories = [traj]
    walk = SoWalk(sc)
    rng = np.random.default_rng(123)
    offs = []
    for _ in range(1000):
        base_prev = traj.point_at(walk.s[0])
        state = advance_so(walk, rng)
        base = traj.point_at(walk.s[0])
        offs.append(state - base)
    offs = np.array(offs)
    assert abs(offs.std() - 0.05) / 0.05 < 0.05


def test_clamping_flags_steps():
    traj = SoTrajectory(waypoints=[[0.5, 0.5], [0.5, 7.5]],
                        sigma_theta=0.0, sigma_p=0.0)
    sc = build_scene(desk_scene_spec())
    sc.trajectories = [traj]
    walk = SoWalk(sc)
    rng = np.random.default_rng(0)
    advance_so(walk, rng)
    assert walk.last_clamped == 1  # x = 0.5 is inside margin 0.25+0.25


# ------------------------------------------------------------- config mapping

def test_config_mapping_endpoints(scene):
    k = default_config(scene.n_ris)
    params = config_to_dipole_params(k, scene)
    tun = np.flatnonzero(scene.dipoles.ris_tunable)[0]
    assert params[tun].f_res == pytest.approx(0.8)

    k2 = -np.ones(scene.n_ris, dtype=complex)
    assert config_to_dipole_params(k2, scene)[tun].f_res == pytest.approx(1.0)

    k3 = np.full(scene.n_ris, np.exp(1j * 3 * np.pi / 2), dtype=complex)
    assert config_to_dipole_params(k3, scene)[tun].f_res == pytest.approx(1.1)


def test_config_mapping_slope(scene):
    h = 1e-6
    f1 = physics.phase_to_f_res(1.0 + h)
    f0 = physics.phase_to_f_res(1.0 - h)
    assert abs((f1 - f0) / (2 * h) - 0.4 / (2 * np.pi)) < 1e-8


def test_config_mapping_injective_on_phases():
    deltas = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    f = physics.phase_to_f_res(deltas)
    assert len(np.unique(f)) == len(deltas)


def test_non_unit_modulus_rejected(scene):
    k = default_config(scene.n_ris)
    k[3] = 1.5
    with pytest.raises(SceneError):
        config_to_dipole_params(k, scene)
    check_unit_modulus(default_config(4))


# ---------------------------------------------------------------- spec round-trip

def test_scene_spec_round_trip(tmp_path):
    spec = desk_scene_spec()
    p1 = tmp_path / "scene.yaml"
    save_scene_spec(spec, p1)
    loaded = load_scene_spec(p1)
    assert loaded == spec
    p2 = tmp_path / "scene2.yaml"
    save_scene_spec(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    # bit-exact floats survive
    assert loaded["so"]["sigma_theta"] == 0.052


def test_scene_spec_yaml_is_nested_text(tmp_path):
    p = tmp_path / "scene.yaml"
    save_scene_spec(desk_scene_spec(), p)
    text = p.read_text()
    assert "room:" in text and "trajectories:" in text
    assert yaml.safe_load(text)["room"]["width"] == 8.0
