import io
import logging

import numpy as np
import pytest

from evfuse import dataset_io as dio


# ---------------------------------------------------------------- events

def test_parse_events_basic():
    events = dio.parse_events(io.StringIO("0.003811 96 133 0\n"))
    assert events == [dio.Event(0.003811, 96, 133, 0)]


def test_parse_events_empty_stream():
    assert dio.parse_events(io.StringIO("")) == []


def test_parse_events_out_of_bounds():
    with pytest.raises(dio.ParseError, match="x=300"):
        dio.parse_events(io.StringIO("0.1 300 10 1\n"), width=240, height=180)


def test_parse_events_malformed_line_names_line_number():
    with pytest.raises(dio.ParseError, match="line 2"):
        dio.parse_events(io.StringIO("0.1 1 2 0\n0.2 3 4\n"))


def test_parse_events_non_monotonic_warns(caplog):
    with caplog.at_level(logging.WARNING):
        events = dio.parse_events(io.StringIO("0.2 0 0 0\n0.1 1 1 1\n"))
    assert len(events) == 2
    assert any("non-monotonic" in r.message for r in caplog.records)


def test_parse_events_accepts_tabs_and_crlf():
    events = dio.parse_events(io.StringIO("0.5\t4\t5\t1\r\n\r\n1.0  6  7  0\r\n"))
    assert [e.x for e in events] == [4, 6]


def test_events_roundtrip_identical(rng):
    events = [
        dio.Event(float(t), int(x), int(y), int(p))
        for t, x, y, p in zip(
            np.sort(rng.uniform(0, 10, 100)),
            rng.integers(0, 240, 100),
            rng.integers(0, 180, 100),
            rng.integers(0, 2, 100),
        )
    ]
    text = dio.format_events(events)
    assert dio.parse_events(io.StringIO(text)) == events


def test_parse_events_count_matches_nonempty_lines():
    text = "0.1 1 2 0\n\n0.2 3 4 1\n   \n0.3 5 6 0\n"
    nonempty = sum(1 for line in text.splitlines() if line.split())
    assert len(dio.parse_events(io.StringIO(text))) == nonempty


# ---------------------------------------------------------------- calibration

def test_parse_calibration_dataset_style():
    cam = dio.parse_calibration(
        "199.0 198.0 132.0 110.0 -0.368 0.15 -0.0002 0.0007 0.0", 240, 180
    )
    assert (cam.fx, cam.fy, cam.cx, cam.cy) == (199.0, 198.0, 132.0, 110.0)
    assert (cam.k1, cam.k2, cam.p1, cam.p2, cam.k3) == (-0.368, 0.15, -0.0002, 0.0007, 0.0)
    assert cam.resolution == 43200


def test_parse_calibration_distortion_free():
    cam = dio.parse_calibration("1 1 120 90 0 0 0 0 0", 240, 180)
    assert not cam.has_distortion


def test_parse_calibration_wrong_field_count():
    with pytest.raises(dio.ParseError):
        dio.parse_calibration("1 2 3", 240, 180)


# ---------------------------------------------------------------- poses

def test_parse_poses_single_pose_fails():
    with pytest.raises(dio.ParseError, match="at least 2"):
        dio.parse_poses(io.StringIO("0 0 0 0 0 0 0 1\n"))


def test_parse_poses_two_identity_rotations():
    traj = dio.parse_poses(io.StringIO("0 0 0 0 0 0 0 1\n1 2 0 0 0 0 0 1\n"))
    assert len(traj) == 2
    np.testing.assert_array_equal(traj.translations[1], [2.0, 0.0, 0.0])
    np.testing.assert_array_equal(traj.quaternions[0], [1.0, 0.0, 0.0, 0.0])


def test_parse_poses_renormalizes_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        traj = dio.parse_poses(io.StringIO("0 0 0 0 9 9 9 9\n1 0 0 0 0 0 0 1\n"))
    np.testing.assert_allclose(np.linalg.norm(traj.quaternions[0]), 1.0, atol=1e-12)
    assert any("renormalized" in r.message for r in caplog.records)


def test_trajectory_requires_increasing_timestamps():
    with pytest.raises(ValueError, match="strictly increasing"):
        dio.parse_poses(io.StringIO("1 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n"))


# ---------------------------------------------------------------- pose interpolation

def test_interpolate_pose_exact_at_samples():
    traj = dio.parse_poses(io.StringIO("0 1 2 3 0 0 0 1\n2 4 5 6 0 0 0.7071067811865476 0.7071067811865476\n"))
    p = dio.interpolate_pose(traj, 0.0)
    np.testing.assert_array_equal(p.translation, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(p.rotation, traj.quaternions[0])
    p1 = dio.interpolate_pose(traj, 2.0)
    np.testing.assert_array_equal(p1.rotation, traj.quaternions[1])


def test_interpolate_pose_midpoint_translation():
    traj = dio.parse_poses(io.StringIO("0 0 0 0 0 0 0 1\n1 2 0 0 0 0 0 1\n"))
    p = dio.interpolate_pose(traj, 0.5)
    np.testing.assert_allclose(p.translation, [1.0, 0.0, 0.0], atol=1e-15)


def test_interpolate_pose_midpoint_rotation_45deg():
    s = np.sqrt(0.5)
    traj = dio.parse_poses(io.StringIO(f"0 0 0 0 0 0 0 1\n1 0 0 0 0 0 {s} {s}\n"))
    p = dio.interpolate_pose(traj, 0.5)
    angle = 2 * np.arccos(min(p.rotation[0], 1.0))
    assert angle == pytest.approx(np.pi / 4, abs=1e-12)


def test_interpolate_pose_outside_span_raises(static_traj):
    with pytest.raises(ValueError, match="span"):
        dio.interpolate_pose(static_traj, 2.5)


def test_interpolate_pose_continuity():
    s = np.sqrt(0.5)
    traj = dio.parse_poses(io.StringIO(f"0 0 0 0 0 0 0 1\n1 1 2 3 0 0 {s} {s}\n"))
    eps = 1e-6
    for t in (0.25, 0.5, 0.903):
        a = dio.interpolate_pose(traj, t)
        b = dio.interpolate_pose(traj, t + eps)
        assert np.linalg.norm(a.translation - b.translation) < 1e-5
        from evfuse.geometry import quat_angle

        assert quat_angle(a.rotation, b.rotation) < 1e-5


def test_sample_poses_matches_scalar(rng):
    from tests._oracles import random_trajectory

    traj = random_trajectory(rng, 0.0, 2.0)
    ts = rng.uniform(0.0, 2.0, size=40)
    trans, quats = dio.sample_poses(traj, ts)
    for i, t in enumerate(ts):
        p = dio.interpolate_pose(traj, float(t))
        np.testing.assert_allclose(trans[i], p.translation, atol=1e-12)
        q = p.rotation if np.dot(p.rotation, quats[i]) >= 0 else -p.rotation
        np.testing.assert_allclose(quats[i], q, atol=1e-12)


# ---------------------------------------------------------------- undistortion

def test_undistort_zero_distortion_closed_form(cam):
    xn, yn = dio.undistort_pixel(cam, cam.cx, cam.cy)
    assert xn == 0.0 and yn == 0.0
    xn, yn = dio.undistort_pixel(cam, cam.cx + cam.fx, cam.cy)
    assert abs(xn - 1.0) < 1e-12 and abs(yn) < 1e-12


def test_undistort_zero_distortion_matches_pinhole_inverse(cam, rng):
    xs = rng.uniform(0, cam.width - 1, 100)
    ys = rng.uniform(0, cam.height - 1, 100)
    xn, yn = dio.undistort_pixels(cam, xs, ys)
    np.testing.assert_allclose(xn, (xs - cam.cx) / cam.fx, atol=1e-12)
    np.testing.assert_allclose(yn, (ys - cam.cy) / cam.fy, atol=1e-12)


def test_undistort_k1_against_grid_search_oracle():
    cam = dio.CameraModel(240, 180, 200.0, 200.0, 120.0, 90.0, k1=-0.3)
    x_pix, y_pix = cam.cx + 50.0, cam.cy
    xd_target = (x_pix - cam.cx) / cam.fx
    # brute-force forward model scan at 1e-6 resolution along y = 0
    candidates = np.arange(0.0, 0.5, 1e-6)
    xd, _ = dio.distort_normalized(cam, candidates, np.zeros_like(candidates))
    best = candidates[np.argmin(np.abs(xd - xd_target))]
    xn, yn = dio.undistort_pixel(cam, x_pix, y_pix)
    assert xn == pytest.approx(best, abs=2e-6)
    assert yn == pytest.approx(0.0, abs=1e-12)
    # round trip through the forward model
    xd2, yd2 = dio.distort_normalized(cam, np.array([xn]), np.array([yn]))
    assert xd2[0] == pytest.approx(xd_target, abs=1e-10)


def test_undistort_image_zero_distortion_is_identity(cam, rng):
    img = rng.integers(0, 256, size=(cam.height, cam.width), dtype=np.uint8)
    np.testing.assert_array_equal(dio.undistort_image(cam, img), img)


def test_undistort_image_straightens_distorted_point():
    cam = dio.CameraModel(240, 180, 200.0, 200.0, 120.0, 90.0, k1=-0.2)
    img = np.zeros((180, 240), dtype=np.uint8)
    # place a dot at the distorted image position of ideal pixel (170, 90)
    xn = (170.0 - cam.cx) / cam.fx
    xd, yd = dio.distort_normalized(cam, np.array([xn]), np.array([0.0]))
    u = int(round(float(xd[0] * cam.fx + cam.cx)))
    v = int(round(float(yd[0] * cam.fy + cam.cy)))
    img[v, u] = 255
    out = dio.undistort_image(cam, img)
    ys, xs = np.nonzero(out > 64)
    assert len(xs) > 0
    assert abs(xs.mean() - 170.0) <= 1.0
    assert abs(ys.mean() - 90.0) <= 1.0


# ---------------------------------------------------------------- frames

def test_select_reference_frame_nearest():
    recs = [dio.FrameRecord(1.0, "a.png"), dio.FrameRecord(2.0, "b.png")]
    assert dio.select_reference_frame(recs, 1.4).filename == "a.png"


def test_select_reference_frame_tie_prefers_earlier():
    recs = [dio.FrameRecord(1.0, "a.png"), dio.FrameRecord(2.0, "b.png")]
    assert dio.select_reference_frame(recs, 1.5).filename == "a.png"


def test_select_reference_frame_exact():
    recs = [dio.FrameRecord(1.0, "a.png"), dio.FrameRecord(2.0, "b.png")]
    assert dio.select_reference_frame(recs, 2.0).filename == "b.png"


def test_select_reference_frame_empty():
    with pytest.raises(ValueError):
        dio.select_reference_frame([], 0.0)


def test_load_frame_pgm_and_png(tmp_path, rng):
    from PIL import Image

    from evfuse.io_formats import write_pgm

    arr = rng.integers(0, 256, size=(180, 240), dtype=np.uint8)
    write_pgm(tmp_path / "f.pgm", arr)
    Image.fromarray(arr, mode="L").save(tmp_path / "f.png")
    for name in ("f.pgm", "f.png"):
        frame = dio.load_frame(tmp_path / name, 0.5)
        assert frame.t == 0.5
        np.testing.assert_array_equal(frame.intensity, arr)


def test_parse_frame_index():
    recs = dio.parse_frame_index(io.StringIO("0.1 frames/a.png\n0.2 frames/b.png\n"))
    assert recs == [dio.FrameRecord(0.1, "frames/a.png"), dio.FrameRecord(0.2, "frames/b.png")]
