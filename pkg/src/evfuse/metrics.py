"""Densification score and planar accuracy metrics.

The filling score rates how much a fill pass grew the map relative to
the image resolution: beta = (N2 - N1) / (Res + N1 / Res), in [0, 1).
Planar errors measure point clouds against a known plane, in
centimeters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset_io import CameraModel, Event, Pose
from .emvs import PointCloud
from .fusion import (
    FillConfig,
    FillDecision,
    ProjectedEvents,
    fill_planned,
    kernel_variants,
    plan_fill,
    range_image_to_cloud,
)
from .segmentation import LabelMap

KERNEL_TABLE_DEFAULT = ("inverse", "gauss", "exponential")


@dataclass
class FillingReport:
    n1: int
    n2: int
    res: int
    beta: float
    decisions: list[FillDecision] = field(default_factory=list)


@dataclass
class ErrorReport:
    sequence: str
    kernel: str
    per_segment_cm: list[float]

    @property
    def mean_cm(self) -> float:
        return float(np.mean(self.per_segment_cm))


def filling_score(n1: int, n2: int, res: int) -> float:
    """Score (n2 - n1) / (res + n1 / res); 0 when nothing was added."""
    if res <= 0:
        raise ValueError(f"res must be positive, got {res}")
    if not 0 <= n1 <= n2 <= res:
        raise ValueError(f"need 0 <= n1 <= n2 <= res, got n1={n1}, n2={n2}, res={res}")
    return (n2 - n1) / (res + n1 / res)


def planar_abs_error(cloud: PointCloud, normal: np.ndarray, distance: float) -> float:
    """Mean absolute point-to-plane distance in centimeters.

    The plane is {x : n.x = distance} with unit normal n.
    """
    if len(cloud) == 0:
        raise ValueError("empty point cloud")
    normal = np.asarray(normal, dtype=np.float64)
    if abs(np.linalg.norm(normal) - 1.0) > 1e-6:
        raise ValueError("plane normal must be unit length")
    return float(np.mean(np.abs(cloud.points @ normal - distance))) * 100.0


def segment_sequence(
    events: Sequence[Event] | np.ndarray,
    duration: float,
    segment_len: float,
) -> list[tuple[float, float]]:
    """Consecutive [t0 + i*L, t0 + (i+1)*L) windows; a trailing partial window is dropped.

    t0 is the first event timestamp (0 when no events are given).
    """
    if segment_len <= 0:
        raise ValueError("segment_len must be positive")
    if isinstance(events, np.ndarray):
        t0 = float(events[0]) if events.size else 0.0
    else:
        t0 = float(events[0].t) if len(events) else 0.0
    n = int(duration / segment_len + 1e-9)
    return [(t0 + i * segment_len, t0 + (i + 1) * segment_len) for i in range(n)]


def compare_kernels(
    lmap: LabelMap,
    pe: ProjectedEvents,
    ref_pose: Pose,
    cam: CameraModel,
    cfg: FillConfig,
    normal: np.ndarray,
    distance: float,
    kernels: Sequence[str] = KERNEL_TABLE_DEFAULT,
) -> dict[str, float]:
    """Planar error of the fused cloud per weighting kernel, in cm.

    Fill decisions do not depend on the kernel, so the plan is shared and
    only the interpolation step is rerun.
    """
    plan = plan_fill(lmap, pe, cfg)
    errors: dict[str, float] = {}
    for name, variant in kernel_variants(cfg, kernels).items():
        ri, _ = fill_planned(lmap, plan, pe, variant)
        cloud = range_image_to_cloud(ri, ref_pose, cam)
        errors[name] = planar_abs_error(cloud, normal, distance)
    return errors
