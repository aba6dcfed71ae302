"""Semi-dense mapping by ray counting over a depth-plane volume.

Every event is back-projected through its own camera pose; the resulting
viewing ray is intersected with a stack of depth planes anchored at a
reference view and each in-bounds intersection votes for the nearest
voxel. Pixels whose best vote count stands out against the local
neighborhood become 3D points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels, geometry
from .dataset_io import CameraModel, Event, Pose, Trajectory, events_to_arrays, sample_poses, undistort_pixels

logger = logging.getLogger(__name__)

SAMPLING_INVERSE = "inverse"
SAMPLING_LINEAR = "linear"

PROVENANCE_EVENT = 0
PROVENANCE_FILL = 1


@dataclass(frozen=True)
class DsiConfig:
    """Geometry of the vote volume: nx*ny viewing rays times nz depth planes."""

    nx: int
    ny: int
    nz: int
    z_min: float
    z_max: float
    sampling: str = SAMPLING_INVERSE

    def __post_init__(self) -> None:
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError("grid dimensions must be >= 1")
        if not 0 < self.z_min < self.z_max:
            raise ValueError(f"need 0 < z_min < z_max, got {self.z_min}, {self.z_max}")
        if self.sampling not in (SAMPLING_INVERSE, SAMPLING_LINEAR):
            raise ValueError(f"unknown depth sampling {self.sampling!r}")


def plane_depths(cfg: DsiConfig) -> np.ndarray:
    """Depths of all nz planes, nearest (z_min) first.

    Inverse sampling spaces 1/z uniformly between 1/z_min and 1/z_max,
    linear sampling spaces z itself.
    """
    if cfg.sampling == SAMPLING_INVERSE:
        return 1.0 / np.linspace(1.0 / cfg.z_min, 1.0 / cfg.z_max, cfg.nz)
    return np.linspace(cfg.z_min, cfg.z_max, cfg.nz)


def depth_of_plane(cfg: DsiConfig, k: int) -> float:
    """Depth of plane k (0 <= k < nz)."""
    if not 0 <= k < cfg.nz:
        raise IndexError(f"plane index {k} outside [0, {cfg.nz})")
    return float(plane_depths(cfg)[k])


@dataclass
class Dsi:
    """Vote volume; counts has shape (ny, nx, nz), z index fastest."""

    counts: np.ndarray
    config: DsiConfig
    ref_pose: Pose
    cam: CameraModel
    total_votes: int = 0
    skipped_events: int = 0

    def dump(self, path: str | Path) -> None:
        from .io_formats import write_dsi_volume

        write_dsi_volume(path, self.counts, self.config.z_min, self.config.z_max, self.config.sampling)


@dataclass(frozen=True)
class MaximaConfig:
    """Spatial window and additive margin for the local-maxima filter."""

    kernel: int = 15
    c: float = 7.0

    def __post_init__(self) -> None:
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"kernel must be odd and >= 1, got {self.kernel}")
        if self.c < 0:
            raise ValueError("constant c must be non-negative")


@dataclass
class SemiDenseDepthMap:
    """Per-ray depth at the reference view; NaN marks pixels without a point."""

    depth: np.ndarray  # (ny, nx) float64, NaN = invalid

    @property
    def valid_mask(self) -> np.ndarray:
        return ~np.isnan(self.depth)

    @property
    def n_points(self) -> int:
        return int(self.valid_mask.sum())


@dataclass
class PointCloud:
    """World-frame points with a provenance tag (0 event, 1 fill)."""

    points: np.ndarray  # (N, 3) float64
    provenance: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if self.provenance is None:
            self.provenance = np.zeros(len(self.points), dtype=np.uint8)
        else:
            self.provenance = np.asarray(self.provenance, dtype=np.uint8)
        if len(self.provenance) != len(self.points):
            raise ValueError("provenance length must match point count")

    def __len__(self) -> int:
        return len(self.points)


def event_rays_in_reference(
    events: Sequence[Event],
    traj: Trajectory,
    cam: CameraModel,
    ref_pose: Pose,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Per-event viewing rays expressed in the reference camera frame.

    Undistorts each event pixel, forms the ray through it at the event-time
    camera pose and maps it into the reference frame. Events outside the
    trajectory span are skipped. Returns (origins, dirs, n_skipped); dirs
    are unnormalized (z component 1 in the event camera frame).
    """
    ts, xs, ys, _ = events_to_arrays(events)
    in_span = (ts >= traj.t_start) & (ts <= traj.t_end)
    skipped = int((~in_span).sum())
    if skipped:
        logger.warning("build_dsi: skipping %d events outside the trajectory span", skipped)
    ts, xs, ys = ts[in_span], xs[in_span], ys[in_span]
    if ts.size == 0:
        return np.empty((0, 3)), np.empty((0, 3)), skipped

    xn, yn = undistort_pixels(cam, xs.astype(np.float64), ys.astype(np.float64))
    d_cam = np.stack((xn, yn, np.ones_like(xn)), axis=1)

    trans, quats = sample_poses(traj, ts)
    rots = geometry.quat_to_rot_many(quats)
    r_ref = ref_pose.rotation_matrix()
    # x_ref = R_ref^T (x_world - t_ref); apply to ray origin and direction
    d_world = np.einsum("nij,nj->ni", rots, d_cam)
    dirs = d_world @ r_ref
    origins = (trans - ref_pose.translation) @ r_ref
    return np.ascontiguousarray(origins), np.ascontiguousarray(dirs), skipped


def build_dsi(
    events: Sequence[Event],
    traj: Trajectory,
    cam: CameraModel,
    ref_pose: Pose,
    cfg: DsiConfig,
) -> Dsi:
    """Count ray/voxel intersections for all events.

    The result is independent of event order (integer votes commute).
    Pixel (u, v) in the reference image maps to grid cell
    (round(u*nx/width), round(v*ny/height)).
    """
    counts = np.zeros((cfg.ny, cfg.nx, cfg.nz), dtype=np.uint32)
    origins, dirs, skipped = event_rays_in_reference(events, traj, cam, ref_pose)
    depths = plane_depths(cfg)
    total = 0
    if len(origins):
        total = _kernels.vote_rays(
            origins,
            dirs,
            depths,
            cam.fx,
            cam.fy,
            cam.cx,
            cam.cy,
            cfg.nx / cam.width,
            cfg.ny / cam.height,
            counts,
        )
    return Dsi(counts, cfg, ref_pose, cam, total_votes=total, skipped_events=skipped)


def _clipped_window_mean(arr: np.ndarray, radius: int) -> np.ndarray:
    """Mean over the (2r+1)^2 window around each cell, clipped at the borders."""
    h, w = arr.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(np.cumsum(arr, axis=0, dtype=np.float64), axis=1, out=ii[1:, 1:])
    y0 = np.maximum(np.arange(h) - radius, 0)
    y1 = np.minimum(np.arange(h) + radius + 1, h)
    x0 = np.maximum(np.arange(w) - radius, 0)
    x1 = np.minimum(np.arange(w) + radius + 1, w)
    total = (
        ii[y1[:, None], x1[None, :]]
        - ii[y0[:, None], x1[None, :]]
        - ii[y1[:, None], x0[None, :]]
        + ii[y0[:, None], x0[None, :]]
    )
    area = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return total / area


def detect_local_maxima(dsi: Dsi, mcfg: MaximaConfig) -> SemiDenseDepthMap:
    """Extract the semi-dense depth map from the vote volume.

    Per pixel the best plane is the vote argmax along z (ties to the
    nearer plane). The pixel is kept iff its best count exceeds the mean
    of the best-count map over the kernel x kernel neighborhood by more
    than the constant c.
    """
    best_count = dsi.counts.max(axis=2).astype(np.float64)
    best_plane = dsi.counts.argmax(axis=2)
    mean = _clipped_window_mean(best_count, mcfg.kernel // 2)
    accepted = best_count > mean + mcfg.c
    depth = np.full(best_count.shape, np.nan)
    depth[accepted] = plane_depths(dsi.config)[best_plane[accepted]]
    return SemiDenseDepthMap(depth)


def grid_to_pixel(cfg: DsiConfig, cam: CameraModel, ix: np.ndarray, iy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Image pixel coordinates of DSI grid cells (identity when nx == width)."""
    u = np.asarray(ix, dtype=np.float64) * (cam.width / cfg.nx)
    v = np.asarray(iy, dtype=np.float64) * (cam.height / cfg.ny)
    return u, v


def semi_dense_to_cloud(
    smap: SemiDenseDepthMap,
    ref_pose: Pose,
    cam: CameraModel,
    cfg: DsiConfig | None = None,
) -> PointCloud:
    """Back-project every valid map pixel into the world frame.

    cfg is only needed when the DSI grid resolution differs from the
    camera resolution.
    """
    iy, ix = np.nonzero(smap.valid_mask)
    z = smap.depth[iy, ix]
    if cfg is not None and (cfg.nx != cam.width or cfg.ny != cam.height):
        u, v = grid_to_pixel(cfg, cam, ix, iy)
    else:
        u, v = ix.astype(np.float64), iy.astype(np.float64)
    pts_cam = geometry.backproject_pinhole(cam.fx, cam.fy, cam.cx, cam.cy, u, v, z)
    pts_world = geometry.transform_points(ref_pose.rotation_matrix(), ref_pose.translation, pts_cam)
    return PointCloud(pts_world, np.full(len(pts_world), PROVENANCE_EVENT, dtype=np.uint8))
