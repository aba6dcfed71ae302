"""Region-growing segmentation of the reference frame.

Pixels are grouped by flood fill: a region admits an unlabeled neighbor
whose intensity differs from the adjacent region pixel by at most the
growing threshold. Small regions (slivers between two larger ones) are
pruned to label 0 afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .dataset_io import Frame


@dataclass(frozen=True)
class GrowConfig:
    threshold: float = 3.0
    connectivity: int = 4
    min_region_size: int = 100

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ValueError("growing threshold must be >= 0")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.min_region_size < 1:
            raise ValueError("min_region_size must be >= 1")


@dataclass
class LabelMap:
    """Region labels per pixel; 0 means invalid/pruned."""

    labels: np.ndarray  # (ny, nx) int32
    sizes: np.ndarray   # (R+1,) pixel count per label, index 0 = invalid pixels

    @property
    def n_regions(self) -> int:
        return len(self.sizes) - 1

    def region_ids(self) -> range:
        return range(1, len(self.sizes))

    def region_mask(self, region_id: int) -> np.ndarray:
        self._check_id(region_id)
        return self.labels == region_id

    def region_size(self, region_id: int) -> int:
        self._check_id(region_id)
        return int(self.sizes[region_id])

    def _check_id(self, region_id: int) -> None:
        if not 1 <= region_id < len(self.sizes):
            raise KeyError(f"unknown region id {region_id}")


def _label_sizes(labels: np.ndarray) -> np.ndarray:
    return np.bincount(labels.ravel())


def region_grow(frame: Frame | np.ndarray, cfg: GrowConfig) -> LabelMap:
    """Segment a grayscale frame into intensity-homogeneous regions.

    Deterministic: seeds are taken in raster order and growth is
    breadth-first with a fixed neighbor order, so identical inputs give
    byte-identical label maps.
    """
    intensity = frame.intensity if isinstance(frame, Frame) else np.asarray(frame)
    if intensity.ndim != 2 or intensity.size == 0:
        raise ValueError("frame must be a non-empty 2D grid")
    inten32 = np.ascontiguousarray(intensity, dtype=np.int32)
    labels = np.zeros(intensity.shape, dtype=np.int32)
    _kernels.grow_labels(inten32, float(cfg.threshold), cfg.connectivity, labels)
    return LabelMap(labels, _label_sizes(labels))


def prune_small_regions(lmap: LabelMap, min_region_size: int) -> LabelMap:
    """Zero out regions below min_region_size and compact surviving ids to 1..R."""
    keep = lmap.sizes >= min_region_size
    keep[0] = False
    mapping = np.zeros(len(lmap.sizes), dtype=np.int32)
    mapping[keep] = np.arange(1, int(keep.sum()) + 1, dtype=np.int32)
    labels = mapping[lmap.labels]
    sizes = np.bincount(labels.ravel(), minlength=int(keep.sum()) + 1)
    return LabelMap(labels, sizes)


@dataclass
class RegionSets:
    """Contour/interior split of a region plus its surrounding ring band."""

    contour: np.ndarray   # bool (ny, nx): region pixels touching outside or border
    interior: np.ndarray  # bool: region pixels minus contour
    ring: np.ndarray      # bool: band within ring_width of the region boundary, both sides

    @property
    def contour_len(self) -> int:
        return int(self.contour.sum())


def region_boundary_sets(lmap: LabelMap, region_id: int, ring_width: int = 3) -> RegionSets:
    """Compute contour, interior and ring masks for one region.

    Contour pixels have at least one 8-connected neighbor outside the
    region or lie on the image border. The ring is the band of pixels
    within Chebyshev distance ring_width of the region boundary on both
    sides: dilation minus erosion with a (2w+1)^2 square element. For a
    10x10 square region this gives a 16x16 block minus its 4x4 core.
    """
    lmap._check_id(region_id)
    full = lmap.labels == region_id
    ys, xs = np.nonzero(full)
    if len(ys) == 0:
        raise KeyError(f"region {region_id} has no pixels")
    h, w = full.shape
    pad = ring_width + 1
    y0 = max(int(ys.min()) - pad, 0)
    y1 = min(int(ys.max()) + pad + 1, h)
    x0 = max(int(xs.min()) - pad, 0)
    x1 = min(int(xs.max()) + pad + 1, w)
    sub = full[y0:y1, x0:x1].astype(np.uint8)

    # min over the 3x3 window: 1 only where the pixel and all 8 neighbors
    # are in-region; cval=0 makes image-border pixels contour
    inner3 = ndimage.minimum_filter(sub, size=3, mode="constant", cval=0)
    contour_sub = (sub == 1) & (inner3 == 0)
    interior_sub = (sub == 1) & (inner3 == 1)

    size = 2 * ring_width + 1
    dilated = ndimage.maximum_filter(sub, size=size, mode="constant", cval=0)
    eroded = ndimage.minimum_filter(sub, size=size, mode="constant", cval=0)
    ring_sub = (dilated == 1) & (eroded == 0)

    contour = np.zeros((h, w), dtype=bool)
    interior = np.zeros((h, w), dtype=bool)
    ring = np.zeros((h, w), dtype=bool)
    contour[y0:y1, x0:x1] = contour_sub
    interior[y0:y1, x0:x1] = interior_sub
    ring[y0:y1, x0:x1] = ring_sub
    return RegionSets(contour, interior, ring)
