import numpy as np
import pytest

from evfuse import synth
from evfuse.dataset_io import Pose
from evfuse.emvs import PointCloud
from evfuse.metrics import planar_abs_error


def identity_pose(t=0.0):
    return Pose(t, np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))


def uniform_scene(value=128.0, depth=1.0, speed=0.0):
    tex = np.full((64, 64), value)
    traj = synth.slider_trajectory(speed, 0.0, 1.0)
    return synth.PlaneScene(tex, depth, traj, contrast=0.3, texture_scale=200.0)


# ---------------------------------------------------------------- rendering

def test_render_uniform_texture(cam):
    frame = synth.render_frame(uniform_scene(77.0), identity_pose(), cam)
    assert frame.intensity.shape == (cam.height, cam.width)
    assert np.all(frame.intensity == 77)


def test_render_center_pixel_reads_texture_origin(cam):
    tex = np.full((64, 64), 10.0)
    tex[0, 0] = 250.0
    traj = synth.slider_trajectory(0.0, 0.0, 1.0)
    scene = synth.PlaneScene(tex, 1.0, traj, texture_scale=1.0)
    img = synth.render_intensity(scene, identity_pose(), cam)
    # principal point looks along +z onto world (0, 0) = texel (0, 0)
    assert img[int(cam.cy), int(cam.cx)] == pytest.approx(250.0)


def test_render_plane_behind_camera_raises(cam):
    tex = np.full((8, 8), 50.0)
    traj = synth.slider_trajectory(0.0, 0.0, 1.0)
    scene = synth.PlaneScene(tex, 0.5, traj, texture_scale=100.0)
    pose = Pose(0.0, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0, 0.0]))
    with pytest.raises(ValueError, match="behind"):
        synth.render_intensity(scene, pose, cam)


def test_render_lateral_shift_is_parallax(cam, rng):
    tex = synth.make_blob_texture(128, 3.0, seed=3)
    traj = synth.slider_trajectory(0.0, 0.0, 1.0)
    depth = 0.8
    scene = synth.PlaneScene(tex, depth, traj, texture_scale=cam.fx / (depth * 5.0))
    a = synth.render_intensity(scene, identity_pose(), cam)
    delta = 0.02
    pose_b = Pose(0.0, np.array([delta, 0.0, 0.0]), np.array([1.0, 0.0, 0.0, 0.0]))
    b = synth.render_intensity(scene, pose_b, cam)
    expected_shift = cam.fx * delta / depth  # 5 px: camera +x shifts content left
    row_a = a[90] - a[90].mean()
    row_b = b[90] - b[90].mean()
    shifts = range(0, 12)
    scores = [np.dot(row_a[s:240], row_b[: 240 - s]) for s in shifts]
    assert shifts[int(np.argmax(scores))] == pytest.approx(expected_shift, abs=1.0)


# ---------------------------------------------------------------- events

def test_static_camera_no_events(cam):
    events = synth.generate_events(uniform_scene(speed=0.0), cam, 0.0, 0.5, frame_rate=100.0)
    assert events == []


def test_uniform_texture_no_events(cam):
    events = synth.generate_events(uniform_scene(speed=0.3), cam, 0.0, 0.5, frame_rate=100.0)
    assert events == []


def test_step_edge_event_count_closed_form(cam):
    """Pixels fully crossed by a step edge emit floor(|dlog| / C) events."""
    low, high = 40.0, 215.0
    tex = np.full((256, 256), low)
    tex[:, :128] = high  # rising edge at texel 0 <-> world x = 0 <-> image cx
    speed = 0.05
    depth, texel_px, c = 1.0, 2.0, 0.3
    traj = synth.slider_trajectory(speed, 0.0, 1.0)
    scene = synth.PlaneScene(tex, depth, traj, contrast=c, texture_scale=cam.fx / (depth * texel_px))
    events = synth.generate_events(scene, cam, 0.0, 1.0, frame_rate=500.0)
    assert events
    expected = int((np.log1p(high) - np.log1p(low)) / c)  # 5 for these values
    assert all(e.polarity == 1 for e in events)  # dark-to-bright only
    counts: dict[tuple[int, int], int] = {}
    for e in events:
        counts[(e.x, e.y)] = counts.get((e.x, e.y), 0) + 1
    # each pixel's sample point advances fx*speed/depth = 10 px; the edge
    # (1 texel = 2 px ramp) fully crosses pixels a few px left of cx
    assert all(cam.cx - 14 <= x <= cam.cx + 3 for (x, _) in counts)
    per_pixel = np.array(list(counts.values()))
    assert per_pixel.max() == expected
    assert (per_pixel == expected).mean() > 0.6


def test_event_timestamps_sorted_and_in_range(cam):
    tex = synth.make_blob_texture(64, 2.0, seed=5)
    traj = synth.slider_trajectory(0.1, 0.0, 0.5)
    scene = synth.PlaneScene(tex, 0.5, traj, contrast=0.3, texture_scale=cam.fx / (0.5 * 6.0))
    events = synth.generate_events(scene, cam, 0.0, 0.5, frame_rate=200.0)
    ts = np.array([e.t for e in events])
    assert len(ts) > 0
    assert np.all(np.diff(ts) >= 0)
    assert ts[0] >= 0.0 and ts[-1] <= 0.5


def test_event_count_scales_with_texture_contrast(cam):
    counts = []
    swings = []
    for high in (90.0, 140.0, 215.0):
        tex = np.full((256, 256), 40.0)
        tex[:, 128:] = high
        traj = synth.slider_trajectory(0.05, 0.0, 0.5)
        scene = synth.PlaneScene(tex, 1.0, traj, contrast=0.05, texture_scale=cam.fx / 2.0)
        events = synth.generate_events(scene, cam, 0.0, 0.5, frame_rate=250.0)
        counts.append(len(events))
        swings.append(np.log1p(high) - np.log1p(40.0))
    ratios = [c / s for c, s in zip(counts, swings)]
    assert max(ratios) / min(ratios) < 1.15


# ---------------------------------------------------------------- ground truth

def test_ground_truth_range_center_and_formula(cam):
    scene = uniform_scene(depth=0.7)
    rng_img = synth.ground_truth_range(scene, identity_pose(), cam)
    assert rng_img[int(cam.cy), int(cam.cx)] == pytest.approx(0.7, abs=1e-15)
    xn = (0 - cam.cx) / cam.fx
    yn = (0 - cam.cy) / cam.fy
    assert rng_img[0, 0] == pytest.approx(0.7 * np.sqrt(xn**2 + yn**2 + 1.0), abs=1e-12)


def test_ground_truth_range_invariant_to_lateral_translation(cam):
    scene = uniform_scene(depth=0.7)
    a = synth.ground_truth_range(scene, identity_pose(), cam)
    b = synth.ground_truth_range(
        scene, Pose(0.0, np.array([0.3, -0.2, 0.0]), np.array([1.0, 0.0, 0.0, 0.0])), cam
    )
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_ground_truth_range_rotated_camera_brute_force(cam, rng):
    from evfuse.geometry import quat_normalize, quat_to_rot

    scene = uniform_scene(depth=0.9)
    q = quat_normalize(np.array([0.95, 0.1, -0.15, 0.05]))
    pose = Pose(0.0, np.array([0.05, 0.02, -0.1]), q)
    rng_img = synth.ground_truth_range(scene, pose, cam)
    rot = quat_to_rot(q)
    for _ in range(50):
        v = int(rng.integers(0, cam.height))
        u = int(rng.integers(0, cam.width))
        d = rot @ np.array([(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0])
        s = (0.9 - pose.translation[2]) / d[2]
        expected = s * np.linalg.norm(d)
        assert rng_img[v, u] == pytest.approx(expected, abs=1e-9)


def test_ground_truth_range_planar_error_zero(cam):
    depth = 0.585
    scene = uniform_scene(depth=depth)
    rng_img = synth.ground_truth_range(scene, identity_pose(), cam)
    v, u = np.mgrid[0 : cam.height, 0 : cam.width]
    d = np.stack(((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, np.ones_like(u, float)), axis=-1)
    pts = d / np.linalg.norm(d, axis=-1, keepdims=True) * rng_img[..., None]
    err = planar_abs_error(PointCloud(pts.reshape(-1, 3)), np.array([0.0, 0.0, 1.0]), depth)
    # zero up to the two float roundings in norm-and-rescale (~1e-15 cm)
    assert err < 1e-12


# ---------------------------------------------------------------- dataset writer

def test_write_dataset_layout_and_reload(cam, tmp_path):
    tex = synth.make_stripe_texture(64, 3, 6, seed=2)
    traj = synth.slider_trajectory(0.1, 0.0, 1.0)
    scene = synth.PlaneScene(tex, 0.5, traj, contrast=0.4, texture_scale=cam.fx / (0.5 * 6.0))
    meta = synth.write_dataset(scene, cam, tmp_path, 0.0, 0.4, sim_rate=200.0, frame_rate=10.0)
    for name in ("events.txt", "images.txt", "calib.txt", "groundtruth.txt", "gt_range.pfm", "scene.json"):
        assert (tmp_path / name).is_file(), name
    from evfuse.dataset_io import load_dataset

    ds = load_dataset(tmp_path, cam.width, cam.height)
    assert len(ds.events) == meta["n_events"] > 0
    assert len(ds.frames) == 5
    frame = ds.load_frame(ds.frames[0])
    assert frame.intensity.shape == (cam.height, cam.width)


def test_write_dataset_deterministic(cam, tmp_path):
    def build(where):
        tex = synth.make_blob_texture(64, 3.0, seed=9)
        traj = synth.slider_trajectory(0.1, 0.0, 1.0)
        scene = synth.PlaneScene(tex, 0.5, traj, contrast=0.4, texture_scale=240.0)
        synth.write_dataset(scene, cam, where, 0.0, 0.3, sim_rate=200.0, frame_rate=10.0)

    build(tmp_path / "a")
    build(tmp_path / "b")
    for name in ("events.txt", "calib.txt", "groundtruth.txt", "images.txt", "gt_range.pfm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_write_dataset_zero_duration(cam, tmp_path):
    tex = synth.make_blob_texture(64, 3.0, seed=1)
    traj = synth.slider_trajectory(0.1, 0.0, 1.0)
    scene = synth.PlaneScene(tex, 0.5, traj, texture_scale=240.0)
    synth.write_dataset(scene, cam, tmp_path, 0.0, 0.0, sim_rate=200.0, frame_rate=10.0)
    assert (tmp_path / "events.txt").read_text() == ""
    from evfuse.dataset_io import load_dataset

    ds = load_dataset(tmp_path, cam.width, cam.height)
    assert ds.events == [] and len(ds.trajectory) >= 2


def test_blob_texture_binary_and_tileable():
    tex = synth.make_blob_texture(64, 4.0, 40.0, 215.0, seed=11)
    assert set(np.unique(tex)) == {40.0, 215.0}
    tex2 = synth.make_blob_texture(64, 4.0, 40.0, 215.0, seed=11)
    np.testing.assert_array_equal(tex, tex2)


def test_stripe_texture_widths():
    tex = synth.make_stripe_texture(64, 4, 4, 0.0, 100.0, seed=3)
    col = tex[0]
    changes = np.nonzero(np.diff(col))[0]
    widths = np.diff(changes)
    assert np.all(widths == 4)
