"""Readers for the event-camera dataset text formats.

A dataset directory holds:
  events.txt       lines "t x y polarity"
  images.txt       lines "t filename" (8-bit grayscale PNG or PGM)
  calib.txt        one line "fx fy cx cy k1 k2 p1 p2 k3"
  groundtruth.txt  lines "t px py pz qx qy qz qw"

All parsers accept Unix or Windows line endings and any run of spaces or
tabs between fields. Poses are camera-to-world; quaternions are stored
internally as (w, x, y, z). The calibration file carries no image size,
so width/height are passed in by the caller.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence, TextIO

import numpy as np

from . import geometry

logger = logging.getLogger(__name__)

UNDISTORT_MAX_ITER = 50
UNDISTORT_TOL = 1e-10


class ParseError(ValueError):
    """A dataset text file violated its documented format."""


class Event(NamedTuple):
    t: float
    x: int
    y: int
    polarity: int


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera with radial-tangential distortion (k1 k2 p1 p2 k3)."""

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    k3: float = 0.0

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got {self.fx}, {self.fy}")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point outside the image")

    @property
    def has_distortion(self) -> bool:
        return any(c != 0.0 for c in (self.k1, self.k2, self.p1, self.p2, self.k3))

    @property
    def resolution(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class Pose:
    """Camera-to-world pose: x_world = R(rotation) @ x_cam + translation."""

    t: float
    translation: np.ndarray  # (3,)
    rotation: np.ndarray     # unit quaternion (w, x, y, z)

    def rotation_matrix(self) -> np.ndarray:
        return geometry.quat_to_rot(self.rotation)


@dataclass
class Trajectory:
    """Time-ordered camera-to-world poses with strictly increasing stamps."""

    ts: np.ndarray            # (N,)
    translations: np.ndarray  # (N, 3)
    quaternions: np.ndarray   # (N, 4), unit (w, x, y, z)

    def __post_init__(self) -> None:
        self.ts = np.asarray(self.ts, dtype=np.float64)
        self.translations = np.asarray(self.translations, dtype=np.float64)
        self.quaternions = np.asarray(self.quaternions, dtype=np.float64)
        if len(self.ts) < 2:
            raise ValueError("a trajectory needs at least 2 poses")
        if not np.all(np.diff(self.ts) > 0):
            raise ValueError("trajectory timestamps must be strictly increasing")
        norms = np.linalg.norm(self.quaternions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("trajectory quaternions must be unit length")

    def __len__(self) -> int:
        return len(self.ts)

    @property
    def t_start(self) -> float:
        return float(self.ts[0])

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    def pose(self, i: int) -> Pose:
        return Pose(float(self.ts[i]), self.translations[i].copy(), self.quaternions[i].copy())


@dataclass
class Frame:
    """One grayscale frame; intensity is a (height, width) uint8 grid."""

    t: float
    intensity: np.ndarray


class FrameRecord(NamedTuple):
    t: float
    filename: str


def _fields(line: str) -> list[str]:
    return line.split()


def parse_events(
    stream: Iterable[str] | TextIO,
    width: int | None = None,
    height: int | None = None,
) -> list[Event]:
    """Parse an events.txt stream into a list of Events, in file order.

    Bounds are checked when width/height are given. Non-monotonic
    timestamps are logged once as a warning (real recordings contain
    jitter) but are not an error.
    """
    events: list[Event] = []
    prev_t = -np.inf
    jitter = 0
    for lineno, line in enumerate(stream, start=1):
        parts = _fields(line)
        if not parts:
            continue
        if len(parts) != 4:
            raise ParseError(f"events line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            t = float(parts[0])
            x = int(parts[1])
            y = int(parts[2])
            polarity = int(parts[3])
        except ValueError as exc:
            raise ParseError(f"events line {lineno}: {exc}") from exc
        if polarity not in (0, 1):
            raise ParseError(f"events line {lineno}: polarity must be 0 or 1, got {polarity}")
        if width is not None and not 0 <= x < width:
            raise ParseError(f"events line {lineno}: x={x} outside [0, {width})")
        if height is not None and not 0 <= y < height:
            raise ParseError(f"events line {lineno}: y={y} outside [0, {height})")
        if t < prev_t:
            jitter += 1
        prev_t = t
        events.append(Event(t, x, y, polarity))
    if jitter:
        logger.warning("events stream: %d non-monotonic timestamps", jitter)
    return events


def format_events(events: Iterable[Event]) -> str:
    """Serialize events back to the events.txt format (round-trip safe)."""
    return "".join(f"{e.t!r} {e.x} {e.y} {e.polarity}\n" for e in events)


def events_to_arrays(events: Sequence[Event]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split events into (t, x, y, polarity) arrays for batch processing."""
    if not events:
        return (
            np.empty(0, dtype=np.float64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
        )
    arr = np.asarray(events, dtype=np.float64)
    return (
        arr[:, 0].copy(),
        arr[:, 1].astype(np.int64),
        arr[:, 2].astype(np.int64),
        arr[:, 3].astype(np.int64),
    )


def parse_calibration(text: str, width: int, height: int) -> CameraModel:
    """Parse a calib.txt body: one line "fx fy cx cy k1 k2 p1 p2 k3"."""
    parts = text.split()
    if len(parts) != 9:
        raise ParseError(f"calibration: expected 9 fields, got {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"calibration: {exc}") from exc
    fx, fy, cx, cy, k1, k2, p1, p2, k3 = vals
    return CameraModel(width, height, fx, fy, cx, cy, k1, k2, p1, p2, k3)


def parse_poses(stream: Iterable[str] | TextIO) -> Trajectory:
    """Parse a groundtruth.txt stream ("t px py pz qx qy qz qw" lines).

    Quaternions are renormalized; a norm off by more than 1e-3 is logged
    as a warning. Raises if fewer than 2 poses survive parsing.
    """
    ts: list[float] = []
    trans: list[list[float]] = []
    quats: list[list[float]] = []
    bad_norms = 0
    for lineno, line in enumerate(stream, start=1):
        parts = _fields(line)
        if not parts:
            continue
        if len(parts) != 8:
            raise ParseError(f"poses line {lineno}: expected 8 fields, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(f"poses line {lineno}: {exc}") from exc
        t, px, py, pz, qx, qy, qz, qw = vals
        norm = float(np.sqrt(qw * qw + qx * qx + qy * qy + qz * qz))
        if norm == 0.0:
            raise ParseError(f"poses line {lineno}: zero quaternion")
        if abs(norm - 1.0) > 1e-3:
            bad_norms += 1
        ts.append(t)
        trans.append([px, py, pz])
        quats.append([qw / norm, qx / norm, qy / norm, qz / norm])
    if bad_norms:
        logger.warning("poses: %d quaternions renormalized (|q| off by > 1e-3)", bad_norms)
    if len(ts) < 2:
        raise ParseError(f"poses: need at least 2 poses, got {len(ts)}")
    return Trajectory(np.array(ts), np.array(trans), np.array(quats))


def interpolate_pose(traj: Trajectory, t: float) -> Pose:
    """Pose at time t: linear in translation, spherical in rotation.

    Exact at sample timestamps. Raises ValueError for t outside the
    trajectory span.
    """
    if not traj.t_start <= t <= traj.t_end:
        raise ValueError(f"t={t} outside trajectory span [{traj.t_start}, {traj.t_end}]")
    i = int(np.searchsorted(traj.ts, t))
    if i < len(traj) and traj.ts[i] == t:
        return traj.pose(i)
    lo, hi = i - 1, i
    u = (t - traj.ts[lo]) / (traj.ts[hi] - traj.ts[lo])
    translation = (1.0 - u) * traj.translations[lo] + u * traj.translations[hi]
    rotation = geometry.quat_slerp(traj.quaternions[lo], traj.quaternions[hi], u)
    return Pose(float(t), translation, rotation)


def sample_poses(traj: Trajectory, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized interpolate_pose: returns ((N, 3) translations, (N, 4) quats).

    All query times must lie within the trajectory span.
    """
    ts = np.asarray(ts, dtype=np.float64)
    if ts.size and (ts.min() < traj.t_start or ts.max() > traj.t_end):
        raise ValueError("query times outside trajectory span")
    hi = np.clip(np.searchsorted(traj.ts, ts, side="right"), 1, len(traj) - 1)
    lo = hi - 1
    dt = traj.ts[hi] - traj.ts[lo]
    u = (ts - traj.ts[lo]) / dt
    trans = (1.0 - u)[:, None] * traj.translations[lo] + u[:, None] * traj.translations[hi]
    quats = geometry.quat_slerp_many(traj.quaternions[lo], traj.quaternions[hi], u)
    return trans, quats


def distort_normalized(cam: CameraModel, xn: np.ndarray, yn: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward radial-tangential model: ideal normalized -> distorted normalized."""
    x2 = xn * xn
    y2 = yn * yn
    xy = xn * yn
    r2 = x2 + y2
    radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3))
    xd = xn * radial + 2.0 * cam.p1 * xy + cam.p2 * (r2 + 2.0 * x2)
    yd = yn * radial + cam.p1 * (r2 + 2.0 * y2) + 2.0 * cam.p2 * xy
    return xd, yd


def undistort_pixels(cam: CameraModel, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pixel coordinates -> ideal normalized image coordinates.

    Inverts the distortion by fixed-point iteration; with all distortion
    coefficients zero this reduces to ((x-cx)/fx, (y-cy)/fy) exactly.
    Raises ArithmeticError if any pixel fails to converge.
    """
    xd = (np.asarray(x, dtype=np.float64) - cam.cx) / cam.fx
    yd = (np.asarray(y, dtype=np.float64) - cam.cy) / cam.fy
    if not cam.has_distortion:
        return xd, yd
    xn, yn = xd.copy(), yd.copy()
    for _ in range(UNDISTORT_MAX_ITER):
        x2 = xn * xn
        y2 = yn * yn
        xy = xn * yn
        r2 = x2 + y2
        radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3))
        dx = 2.0 * cam.p1 * xy + cam.p2 * (r2 + 2.0 * x2)
        dy = cam.p1 * (r2 + 2.0 * y2) + 2.0 * cam.p2 * xy
        xn = (xd - dx) / radial
        yn = (yd - dy) / radial
    xc, yc = distort_normalized(cam, xn, yn)
    err = np.hypot(xc - xd, yc - yd)
    if np.any(err > UNDISTORT_TOL):
        raise ArithmeticError(
            f"undistortion did not converge for {int(np.sum(err > UNDISTORT_TOL))} pixel(s)"
        )
    return xn, yn


def undistort_pixel(cam: CameraModel, x: float, y: float) -> tuple[float, float]:
    """Scalar convenience wrapper around undistort_pixels."""
    xn, yn = undistort_pixels(cam, np.array([x], dtype=np.float64), np.array([y], dtype=np.float64))
    return float(xn[0]), float(yn[0])


def undistort_image(cam: CameraModel, image: np.ndarray) -> np.ndarray:
    """Remap a distorted frame onto the ideal pinhole grid.

    For each rectified pixel the forward distortion model gives the source
    location in the input image, sampled bilinearly; samples falling
    outside the input are set to 0.
    """
    image = np.asarray(image)
    if image.shape != (cam.height, cam.width):
        raise ValueError(f"image shape {image.shape} does not match camera {cam.height}x{cam.width}")
    if not cam.has_distortion:
        return image.copy()
    v, u = np.mgrid[0 : cam.height, 0 : cam.width]
    xn = (u - cam.cx) / cam.fx
    yn = (v - cam.cy) / cam.fy
    xd, yd = distort_normalized(cam, xn.ravel(), yn.ravel())
    us = xd * cam.fx + cam.cx
    vs = yd * cam.fy + cam.cy
    out = _bilinear_sample(image.astype(np.float64), us, vs).reshape(cam.height, cam.width)
    if image.dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out.astype(image.dtype)


def _bilinear_sample(img: np.ndarray, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Bilinear lookup at float coords; out-of-bounds samples return 0."""
    h, w = img.shape
    valid = (us >= 0) & (us <= w - 1) & (vs >= 0) & (vs <= h - 1)
    u0 = np.clip(np.floor(us).astype(np.int64), 0, w - 1)
    v0 = np.clip(np.floor(vs).astype(np.int64), 0, h - 1)
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    fu = np.clip(us - u0, 0.0, 1.0)
    fv = np.clip(vs - v0, 0.0, 1.0)
    interp = (
        img[v0, u0] * (1 - fu) * (1 - fv)
        + img[v0, u1] * fu * (1 - fv)
        + img[v1, u0] * (1 - fu) * fv
        + img[v1, u1] * fu * fv
    )
    return np.where(valid, interp, 0.0)


def parse_frame_index(stream: Iterable[str] | TextIO) -> list[FrameRecord]:
    """Parse images.txt: lines "t filename"."""
    records: list[FrameRecord] = []
    for lineno, line in enumerate(stream, start=1):
        parts = _fields(line)
        if not parts:
            continue
        if len(parts) != 2:
            raise ParseError(f"images line {lineno}: expected 2 fields, got {len(parts)}")
        try:
            t = float(parts[0])
        except ValueError as exc:
            raise ParseError(f"images line {lineno}: {exc}") from exc
        records.append(FrameRecord(t, parts[1]))
    return records


def select_reference_frame(records: Sequence[FrameRecord], t_ref: float) -> FrameRecord:
    """Record with timestamp nearest t_ref; ties break toward the earlier one."""
    if not records:
        raise ValueError("empty frame index")
    best = records[0]
    best_d = abs(best.t - t_ref)
    for rec in records[1:]:
        d = abs(rec.t - t_ref)
        if d < best_d:
            best, best_d = rec, d
    return best


def load_frame(path: str | Path, t: float, cam: CameraModel | None = None) -> Frame:
    """Load an 8-bit grayscale PNG or PGM frame from disk."""
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    if cam is not None and arr.shape != (cam.height, cam.width):
        raise ValueError(f"frame {path}: shape {arr.shape} does not match camera")
    return Frame(t, arr)


@dataclass
class Dataset:
    """All parsed pieces of one dataset directory."""

    root: Path
    cam: CameraModel
    events: list[Event]
    trajectory: Trajectory
    frames: list[FrameRecord] = field(default_factory=list)

    def load_frame(self, record: FrameRecord) -> Frame:
        return load_frame(self.root / record.filename, record.t, self.cam)


def load_dataset(root: str | Path, width: int, height: int) -> Dataset:
    """Read events.txt, calib.txt, groundtruth.txt and images.txt under root."""
    root = Path(root)
    calib_path = root / "calib.txt"
    events_path = root / "events.txt"
    poses_path = root / "groundtruth.txt"
    images_path = root / "images.txt"
    for p in (calib_path, events_path, poses_path):
        if not p.is_file():
            raise FileNotFoundError(f"missing dataset file: {p}")
    cam = parse_calibration(calib_path.read_text(), width, height)
    with events_path.open() as f:
        events = parse_events(f, width, height)
    with poses_path.open() as f:
        trajectory = parse_poses(f)
    frames: list[FrameRecord] = []
    if images_path.is_file():
        with images_path.open() as f:
            frames = parse_frame_index(f)
    return Dataset(root, cam, events, trajectory, frames)
