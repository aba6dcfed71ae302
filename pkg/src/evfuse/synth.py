"""Synthetic textured-plane scenes with exact ground truth.

Renders a fronto-parallel plane (world plane z = depth) seen by a moving
pinhole camera, simulates the event stream with the standard
log-intensity contrast-threshold model, and writes complete dataset
directories in the text formats dataset_io reads, so that the pipeline
consumes synthetic and real recordings identically.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .dataset_io import CameraModel, Event, Frame, Pose, Trajectory, interpolate_pose

logger = logging.getLogger(__name__)


@dataclass
class PlaneScene:
    texture: np.ndarray      # (S, S) grayscale values, tiles seamlessly
    plane_depth: float       # world z of the plane (meters)
    trajectory: Trajectory
    contrast: float = 0.25   # log-intensity step per event
    texture_scale: float = 400.0  # texels per meter on the plane

    def __post_init__(self) -> None:
        if self.plane_depth <= 0:
            raise ValueError("plane depth must be positive")
        if self.contrast <= 0:
            raise ValueError("contrast threshold must be positive")


def make_blob_texture(
    size: int = 256,
    blob_sigma: float = 6.0,
    low: float = 40.0,
    high: float = 215.0,
    seed: int = 7,
) -> np.ndarray:
    """Binary random-blob texture (poster-like, edge-rich), tileable."""
    rng = np.random.default_rng(seed)
    noise = rng.random((size, size))
    smooth = ndimage.gaussian_filter(noise, blob_sigma, mode="wrap")
    return np.where(smooth > np.median(smooth), high, low).astype(np.float64)


def make_stripe_texture(
    size: int = 256,
    min_width: int = 3,
    max_width: int = 8,
    low: float = 40.0,
    high: float = 215.0,
    seed: int = 7,
) -> np.ndarray:
    """Vertical stripes of random widths (in texels); precision-rig pattern.

    For a laterally sliding camera only vertical edges carry depth
    information, so this pattern concentrates every event on a useful
    edge.
    """
    rng = np.random.default_rng(seed)
    column = np.empty(size)
    x = 0
    value = low
    while x < size:
        w = int(rng.integers(min_width, max_width + 1))
        column[x : x + w] = value
        value = high if value == low else low
        x += w
    return np.tile(column, (size, 1))


def slider_trajectory(
    speed: float,
    t0: float,
    t1: float,
    rate: float = 100.0,
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0),
) -> Trajectory:
    """Constant-velocity translation with identity rotation (slider rig)."""
    n = max(int(math.ceil((t1 - t0) * rate)), 1) + 1
    ts = np.linspace(t0, t1, n)
    direction = np.asarray(axis, dtype=np.float64)
    translations = speed * (ts - t0)[:, None] * direction
    quats = np.zeros((n, 4))
    quats[:, 0] = 1.0
    return Trajectory(ts, translations, quats)


def _sample_texture(tex: np.ndarray, tx: np.ndarray, ty: np.ndarray) -> np.ndarray:
    """Bilinear lookup with wrap-around (the texture tiles)."""
    sh, sw = tex.shape
    x0 = np.floor(tx)
    y0 = np.floor(ty)
    fx = tx - x0
    fy = ty - y0
    x0i = x0.astype(np.int64) % sw
    y0i = y0.astype(np.int64) % sh
    x1i = (x0i + 1) % sw
    y1i = (y0i + 1) % sh
    return (
        tex[y0i, x0i] * (1 - fx) * (1 - fy)
        + tex[y0i, x1i] * fx * (1 - fy)
        + tex[y1i, x0i] * (1 - fx) * fy
        + tex[y1i, x1i] * fx * fy
    )


def _pixel_rays_world(pose: Pose, cam: CameraModel) -> np.ndarray:
    """(H, W, 3) world-frame ray directions through every pixel (unnormalized)."""
    v, u = np.mgrid[0 : cam.height, 0 : cam.width]
    d_cam = np.stack(
        ((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, np.ones_like(u, dtype=np.float64)),
        axis=-1,
    )
    return d_cam @ pose.rotation_matrix().T


def render_intensity(scene: PlaneScene, pose: Pose, cam: CameraModel) -> np.ndarray:
    """Float-precision render: ray/plane intersection + bilinear texture lookup."""
    d = _pixel_rays_world(pose, cam)
    o = pose.translation
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (scene.plane_depth - o[2]) / d[..., 2]
    if not np.all(s > 0):
        raise ValueError("plane is behind the camera for some pixels")
    px = o[0] + s * d[..., 0]
    py = o[1] + s * d[..., 1]
    return _sample_texture(scene.texture, px * scene.texture_scale, py * scene.texture_scale)


def render_frame(scene: PlaneScene, pose: Pose, cam: CameraModel) -> Frame:
    """8-bit frame as a standard camera would deliver it."""
    img = np.clip(np.rint(render_intensity(scene, pose, cam)), 0, 255).astype(np.uint8)
    return Frame(pose.t, img)


def ground_truth_range(scene: PlaneScene, pose: Pose, cam: CameraModel) -> np.ndarray:
    """Exact per-pixel distance along each viewing ray to the plane.

    For the identity pose this is plane_depth at the principal point and
    plane_depth / cos(angle to the optical axis) elsewhere.
    """
    d = _pixel_rays_world(pose, cam)
    o = pose.translation
    s = (scene.plane_depth - o[2]) / d[..., 2]
    if not np.all(s > 0):
        raise ValueError("plane is behind the camera for some pixels")
    return s * np.linalg.norm(d, axis=-1)


def generate_events(
    scene: PlaneScene,
    cam: CameraModel,
    t0: float,
    t1: float,
    frame_rate: float = 1000.0,
) -> list[Event]:
    """Simulate the event stream over [t0, t1].

    Frames are rendered densely at frame_rate; a pixel fires whenever its
    accumulated |delta log(I+1)| crosses the contrast threshold, with the
    crossing time interpolated linearly inside the step. Events are
    returned sorted by time (ties broken by row, column, polarity).
    """
    if t1 <= t0:
        raise ValueError("need t1 > t0")
    c = scene.contrast
    n_steps = max(int(round((t1 - t0) * frame_rate)), 1)
    times = t0 + (t1 - t0) * np.arange(n_steps + 1) / n_steps

    h, w = cam.height, cam.width
    grid_x = np.tile(np.arange(w, dtype=np.int64), (h, 1))
    grid_y = np.tile(np.arange(h, dtype=np.int64)[:, None], (1, w))

    ref_log = np.log1p(render_intensity(scene, interpolate_pose(scene.trajectory, times[0]), cam))
    prev_log = ref_log
    ts_out: list[np.ndarray] = []
    xs_out: list[np.ndarray] = []
    ys_out: list[np.ndarray] = []
    ps_out: list[np.ndarray] = []

    for i in range(1, n_steps + 1):
        cur_log = np.log1p(render_intensity(scene, interpolate_pose(scene.trajectory, times[i]), cam))
        delta = cur_log - ref_log
        n_cross = np.floor(np.abs(delta) / c).astype(np.int64)
        max_cross = int(n_cross.max())
        if max_cross > 0:
            sign = np.sign(delta)
            denom = cur_log - prev_log
            dt = times[i] - times[i - 1]
            for j in range(1, max_cross + 1):
                mask = n_cross >= j
                level = ref_log + sign * (j * c)
                with np.errstate(divide="ignore", invalid="ignore"):
                    frac = np.clip((level - prev_log) / denom, 0.0, 1.0)
                frac = np.where(np.isfinite(frac), frac, 1.0)
                ts_out.append(times[i - 1] + frac[mask] * dt)
                xs_out.append(grid_x[mask])
                ys_out.append(grid_y[mask])
                ps_out.append((sign[mask] > 0).astype(np.int64))
            ref_log = ref_log + sign * (n_cross * c)
        prev_log = cur_log

    if not ts_out:
        return []
    ts = np.concatenate(ts_out)
    xs = np.concatenate(xs_out)
    ys = np.concatenate(ys_out)
    ps = np.concatenate(ps_out)
    order = np.lexsort((ps, xs, ys, ts))
    return [Event(float(ts[i]), int(xs[i]), int(ys[i]), int(ps[i])) for i in order]


def write_dataset(
    scene: PlaneScene,
    cam: CameraModel,
    out_dir: str | Path,
    t0: float,
    t1: float,
    sim_rate: float = 500.0,
    frame_rate: float = 20.0,
    pose_rate: float = 200.0,
) -> dict:
    """Write a complete synthetic dataset directory.

    Produces events.txt, images.txt + PGM frames, calib.txt,
    groundtruth.txt, gt_range.pfm (at the mid-time reference view) and
    scene.json with the ground-truth plane parameters.
    """
    from .io_formats import write_pfm, write_pgm

    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)

    events = generate_events(scene, cam, t0, t1, sim_rate) if t1 > t0 else []
    with (out / "events.txt").open("w") as f:
        f.writelines(f"{e.t:.9f} {e.x} {e.y} {e.polarity}\n" for e in events)

    n_frames = max(int(round((t1 - t0) * frame_rate)), 0) + 1
    frame_ts = np.linspace(t0, t1, n_frames)
    with (out / "images.txt").open("w") as f:
        for i, t in enumerate(frame_ts):
            name = f"frames/frame_{i:05d}.pgm"
            frame = render_frame(scene, interpolate_pose(scene.trajectory, t), cam)
            write_pgm(out / name, frame.intensity)
            f.write(f"{t:.9f} {name}\n")

    traj = scene.trajectory
    n_poses = max(int(round((traj.t_end - traj.t_start) * pose_rate)), 1) + 1
    with (out / "groundtruth.txt").open("w") as f:
        for t in np.linspace(traj.t_start, traj.t_end, n_poses):
            p = interpolate_pose(traj, float(t))
            qw, qx, qy, qz = p.rotation
            tx, ty, tz = p.translation
            f.write(f"{t:.9f} {tx:.9f} {ty:.9f} {tz:.9f} {qx:.9f} {qy:.9f} {qz:.9f} {qw:.9f}\n")

    with (out / "calib.txt").open("w") as f:
        f.write(f"{cam.fx:.9g} {cam.fy:.9g} {cam.cx:.9g} {cam.cy:.9g} "
                f"{cam.k1:.9g} {cam.k2:.9g} {cam.p1:.9g} {cam.p2:.9g} {cam.k3:.9g}\n")

    t_ref = 0.5 * (t0 + t1)
    ref_pose = interpolate_pose(traj, t_ref)
    write_pfm(out / "gt_range.pfm", ground_truth_range(scene, ref_pose, cam).astype(np.float32))

    meta = {
        "plane_normal": [0.0, 0.0, 1.0],
        "plane_distance": scene.plane_depth,
        "contrast": scene.contrast,
        "texture_scale": scene.texture_scale,
        "t0": t0,
        "t1": t1,
        "t_ref": t_ref,
        "n_events": len(events),
        "width": cam.width,
        "height": cam.height,
    }
    with (out / "scene.json").open("w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info("synthetic dataset written to %s (%d events)", out, len(events))
    return meta
