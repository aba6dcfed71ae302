"""Densify the semi-dense map by segment-guided depth interpolation.

Map points are reprojected into the reference view ("projected events").
A region is filled when its contour ring holds enough projected events
while its interior holds few; filled pixels get a distance-weighted
convex combination of the depths of the region's projected events.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _kernels, geometry
from .dataset_io import CameraModel, Pose
from .emvs import PROVENANCE_EVENT, PROVENANCE_FILL, PointCloud
from .segmentation import LabelMap, RegionSets, region_boundary_sets

logger = logging.getLogger(__name__)

KERNEL_NAMES = ("inverse", "gauss", "exponential")

PIX_EMPTY = 0
PIX_EVENT = 1
PIX_FILL = 2


class FillError(RuntimeError):
    """Internal consistency violation while assembling the range image."""


@dataclass(frozen=True)
class FillConfig:
    contour_fraction: float = 0.30
    interior_fraction: float = 0.05
    ring_width: int = 3
    kernel: str = "inverse"
    sigma: float = 5.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.contour_fraction <= 1.0 or not 0.0 <= self.interior_fraction <= 1.0:
            raise ValueError("fill fractions must lie in [0, 1]")
        if self.ring_width < 1:
            raise ValueError("ring_width must be >= 1")
        if self.kernel not in KERNEL_NAMES:
            raise ValueError(f"unknown weighting kernel {self.kernel!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass
class ProjectedEvents:
    """Sparse per-pixel depth of the reprojected map points."""

    depth: np.ndarray  # (ny, nx) float64, NaN = no projected event

    @property
    def mask(self) -> np.ndarray:
        return ~np.isnan(self.depth)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def pixel_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ys, xs = np.nonzero(self.mask)
        return ys, xs, self.depth[ys, xs]


@dataclass
class FillDecision:
    region_id: int
    contour_hits: int
    interior_hits: int
    contour_len: int
    region_size: int
    filled: bool


@dataclass
class RangeImage:
    """Dense per-pixel depth with provenance (0 empty, 1 event, 2 fill)."""

    depth: np.ndarray       # (ny, nx) float64, NaN = empty
    provenance: np.ndarray  # (ny, nx) uint8

    @property
    def valid_mask(self) -> np.ndarray:
        return ~np.isnan(self.depth)

    @property
    def n_points(self) -> int:
        return int(self.valid_mask.sum())


@dataclass
class RegionFill:
    """Interpolated depths for one region's pixels that lack projected events."""

    region_id: int
    ys: np.ndarray
    xs: np.ndarray
    depths: np.ndarray


def project_map_points(cloud: PointCloud, ref_pose: Pose, cam: CameraModel) -> ProjectedEvents:
    """Project world-frame map points into the rectified reference view.

    Points behind the camera or outside the image are dropped; when two
    points land on one pixel the smaller depth wins (z-buffer).
    """
    depth = np.full((cam.height, cam.width), np.nan)
    if len(cloud) == 0:
        return ProjectedEvents(depth)
    r_ref = ref_pose.rotation_matrix()
    pts_cam = (cloud.points - ref_pose.translation) @ r_ref
    u, v, z = geometry.project_pinhole(cam.fx, cam.fy, cam.cx, cam.cy, pts_cam)
    iu = np.floor(u + 0.5)
    iv = np.floor(v + 0.5)
    ok = (z > 0) & (iu >= 0) & (iu < cam.width) & (iv >= 0) & (iv < cam.height)
    iu = iu[ok].astype(np.int64)
    iv = iv[ok].astype(np.int64)
    zb = np.full(cam.height * cam.width, np.inf)
    np.minimum.at(zb, iv * cam.width + iu, z[ok])
    zb = zb.reshape(cam.height, cam.width)
    hit = np.isfinite(zb)
    depth[hit] = zb[hit]
    return ProjectedEvents(depth)


def decide_fill(
    lmap: LabelMap,
    region_id: int,
    pe: ProjectedEvents,
    cfg: FillConfig,
    sets: RegionSets | None = None,
) -> FillDecision:
    """Apply the contour-support / interior-sparsity test to one region.

    Events in the ring band count as contour support (reprojection lands
    near, not exactly on, the contour); interior hits are events in the
    region interior outside the ring.
    """
    if sets is None:
        sets = region_boundary_sets(lmap, region_id, cfg.ring_width)
    pe_mask = pe.mask
    contour_hits = int((pe_mask & sets.ring).sum())
    interior_hits = int((pe_mask & sets.interior & ~sets.ring).sum())
    contour_len = sets.contour_len
    region_size = lmap.region_size(region_id)
    filled = (
        contour_hits >= cfg.contour_fraction * contour_len
        and interior_hits <= cfg.interior_fraction * region_size
    )
    return FillDecision(region_id, contour_hits, interior_hits, contour_len, region_size, filled)


def kernel_weight(dist: float | np.ndarray, cfg: FillConfig) -> float | np.ndarray:
    """Weight of a seed at the given pixel distance under cfg.kernel.

    inverse:      1 for dist < 1, else 1/dist
    gauss:        exp(-dist^2 / (2 sigma^2)) / (sqrt(2 pi) sigma)
    exponential:  exp(-dist)
    """
    d = np.asarray(dist, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    if cfg.kernel == "inverse":
        w = 1.0 / np.maximum(d, 1.0)
    elif cfg.kernel == "gauss":
        w = np.exp(-(d * d) / (2.0 * cfg.sigma**2)) / (np.sqrt(2.0 * np.pi) * cfg.sigma)
    else:
        w = np.exp(-d)
    return float(w) if np.isscalar(dist) else w


def region_seeds(
    lmap: LabelMap,
    region_id: int,
    pe: ProjectedEvents,
    sets: RegionSets,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Projected events associated with a region: inside it or in its ring."""
    assoc = pe.mask & (lmap.region_mask(region_id) | sets.ring)
    ys, xs = np.nonzero(assoc)
    return ys, xs, pe.depth[ys, xs]


def fill_region(
    lmap: LabelMap,
    region_id: int,
    pe: ProjectedEvents,
    cfg: FillConfig,
    sets: RegionSets | None = None,
) -> RegionFill:
    """Interpolate depth over one region from its associated projected events.

    Every region pixel without its own projected event receives
    sum_k w_k D(m_k) / sum_k w_k over all seeds m_k; pixels that carry a
    projected event keep it (handled at assembly). The normalization
    makes each filled depth a convex combination of seed depths.
    """
    if sets is None:
        sets = region_boundary_sets(lmap, region_id, cfg.ring_width)
    my, mx, mdepth = region_seeds(lmap, region_id, pe, sets)
    if len(my) == 0:
        raise FillError(f"region {region_id} has no projected events to fill from")
    targets = lmap.region_mask(region_id) & ~pe.mask
    ty, tx = np.nonzero(targets)
    depths = _kernels.weighted_fill(
        ty.astype(np.int64),
        tx.astype(np.int64),
        my.astype(np.int64),
        mx.astype(np.int64),
        mdepth.astype(np.float64),
        _kernels.KERNEL_IDS[cfg.kernel],
        cfg.sigma,
    )
    return RegionFill(region_id, ty, tx, depths)


def assemble_range_image(
    lmap: LabelMap,
    decisions: Sequence[FillDecision],
    fills: Sequence[RegionFill],
    pe: ProjectedEvents,
) -> RangeImage:
    """Merge projected events and region fills into the dense range image.

    All projected-event pixels keep their depth with event provenance;
    fills must cover exactly the regions decided as filled and may not
    collide with each other or with event pixels.
    """
    filled_ids = {d.region_id for d in decisions if d.filled}
    fill_ids = {f.region_id for f in fills}
    if filled_ids != fill_ids:
        raise FillError(f"fills {sorted(fill_ids)} do not match filled decisions {sorted(filled_ids)}")
    depth = pe.depth.copy()
    provenance = np.where(pe.mask, PIX_EVENT, PIX_EMPTY).astype(np.uint8)
    for f in fills:
        if np.any(provenance[f.ys, f.xs] != PIX_EMPTY):
            raise FillError(f"region {f.region_id} fill overlaps existing pixels")
        depth[f.ys, f.xs] = f.depths
        provenance[f.ys, f.xs] = PIX_FILL
    return RangeImage(depth, provenance)


def plan_fill(
    lmap: LabelMap,
    pe: ProjectedEvents,
    cfg: FillConfig,
) -> list[tuple[FillDecision, RegionSets]]:
    """Decide every region once; boundary sets are reused by the fill pass."""
    plan = []
    for region_id in lmap.region_ids():
        sets = region_boundary_sets(lmap, region_id, cfg.ring_width)
        plan.append((decide_fill(lmap, region_id, pe, cfg, sets), sets))
    return plan


def fill_planned(
    lmap: LabelMap,
    plan: Sequence[tuple[FillDecision, RegionSets]],
    pe: ProjectedEvents,
    cfg: FillConfig,
) -> tuple[RangeImage, list[FillDecision]]:
    """Fill all regions decided positive and assemble the range image."""
    decisions = [d for d, _ in plan]
    fills = [
        fill_region(lmap, d.region_id, pe, cfg, sets)
        for d, sets in plan
        if d.filled
    ]
    return assemble_range_image(lmap, decisions, fills, pe), decisions


def densify(
    lmap: LabelMap,
    pe: ProjectedEvents,
    cfg: FillConfig,
) -> tuple[RangeImage, list[FillDecision]]:
    """decide + fill + assemble over all regions of the label map."""
    return fill_planned(lmap, plan_fill(lmap, pe, cfg), pe, cfg)


def range_image_to_cloud(ri: RangeImage, ref_pose: Pose, cam: CameraModel) -> PointCloud:
    """Back-project every non-empty range-image pixel into the world frame."""
    iy, ix = np.nonzero(ri.valid_mask)
    z = ri.depth[iy, ix]
    pts_cam = geometry.backproject_pinhole(
        cam.fx, cam.fy, cam.cx, cam.cy, ix.astype(np.float64), iy.astype(np.float64), z
    )
    pts_world = geometry.transform_points(ref_pose.rotation_matrix(), ref_pose.translation, pts_cam)
    provenance = np.where(ri.provenance[iy, ix] == PIX_FILL, PROVENANCE_FILL, PROVENANCE_EVENT).astype(np.uint8)
    return PointCloud(pts_world, provenance)


def kernel_variants(cfg: FillConfig, kernels: Sequence[str] = KERNEL_NAMES) -> dict[str, FillConfig]:
    """Copies of cfg, one per weighting kernel."""
    return {k: replace(cfg, kernel=k) for k in kernels}
