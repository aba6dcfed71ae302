"""Quaternion, rigid-transform and pinhole projection primitives.

Quaternions are stored as (w, x, y, z) and must be unit length. Rigid
transforms are camera-to-world: x_world = R @ x_cam + t.
"""

from __future__ import annotations

import numpy as np

_SLERP_PARALLEL_DOT = 0.9995


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Return q scaled to unit norm. Works on (4,) or (N, 4) arrays."""
    q = np.asarray(q, dtype=np.float64)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise ValueError("zero-norm quaternion")
    return q / norm


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    """Convert a unit quaternion (w, x, y, z) to a 3x3 rotation matrix."""
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_to_rot_many(q: np.ndarray) -> np.ndarray:
    """Convert (N, 4) unit quaternions to (N, 3, 3) rotation matrices."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((len(q), 3, 3))
    out[:, 0, 0] = 1 - 2 * (y * y + z * z)
    out[:, 0, 1] = 2 * (x * y - w * z)
    out[:, 0, 2] = 2 * (x * z + w * y)
    out[:, 1, 0] = 2 * (x * y + w * z)
    out[:, 1, 1] = 1 - 2 * (x * x + z * z)
    out[:, 1, 2] = 2 * (y * z - w * x)
    out[:, 2, 0] = 2 * (x * z - w * y)
    out[:, 2, 1] = 2 * (y * z + w * x)
    out[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def quat_slerp(q0: np.ndarray, q1: np.ndarray, u: float) -> np.ndarray:
    """Spherical interpolation between two unit quaternions, u in [0, 1].

    Takes the shorter great-circle arc; falls back to normalized linear
    interpolation when the quaternions are nearly parallel.
    """
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > _SLERP_PARALLEL_DOT:
        out = q0 + u * (q1 - q0)
        return out / np.linalg.norm(out)
    theta = np.arccos(min(dot, 1.0))
    sin_theta = np.sin(theta)
    a = np.sin((1.0 - u) * theta) / sin_theta
    b = np.sin(u * theta) / sin_theta
    return a * q0 + b * q1


def quat_slerp_many(q0: np.ndarray, q1: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise slerp: q0, q1 are (N, 4) unit quaternions, u is (N,)."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.array(q1, dtype=np.float64, copy=True)
    u = np.asarray(u, dtype=np.float64)[:, None]

    dot = np.sum(q0 * q1, axis=1)
    flip = dot < 0.0
    q1[flip] = -q1[flip]
    dot = np.abs(dot)

    out = np.empty_like(q0)
    near = dot > _SLERP_PARALLEL_DOT
    if np.any(near):
        lin = q0[near] + u[near] * (q1[near] - q0[near])
        out[near] = lin / np.linalg.norm(lin, axis=1, keepdims=True)
    far = ~near
    if np.any(far):
        theta = np.arccos(np.minimum(dot[far], 1.0))[:, None]
        sin_theta = np.sin(theta)
        a = np.sin((1.0 - u[far]) * theta) / sin_theta
        b = np.sin(u[far] * theta) / sin_theta
        out[far] = a * q0[far] + b * q1[far]
    return out


def quat_angle(qa: np.ndarray, qb: np.ndarray) -> float:
    """Rotation angle in radians between two unit quaternions."""
    dot = abs(float(np.dot(qa, qb)))
    return 2.0 * np.arccos(min(dot, 1.0))


def relative_transform(
    r_a: np.ndarray, t_a: np.ndarray, r_b: np.ndarray, t_b: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Express frame b in frame a: returns (R, t) with x_a = R @ x_b + t.

    Both inputs are camera-to-world (R, t) pairs.
    """
    r_rel = r_a.T @ r_b
    t_rel = r_a.T @ (t_b - t_a)
    return r_rel, t_rel


def transform_points(r: np.ndarray, t: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Apply x' = R @ x + t to an (N, 3) array of points."""
    return pts @ np.asarray(r).T + np.asarray(t)


def project_pinhole(
    fx: float, fy: float, cx: float, cy: float, pts_cam: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project (N, 3) camera-frame points through an ideal pinhole.

    Returns (u, v, z); callers must mask on z > 0 themselves.
    """
    pts_cam = np.asarray(pts_cam, dtype=np.float64)
    z = pts_cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = fx * pts_cam[:, 0] / z + cx
        v = fy * pts_cam[:, 1] / z + cy
    return u, v, z


def backproject_pinhole(
    fx: float, fy: float, cx: float, cy: float,
    u: np.ndarray, v: np.ndarray, z: np.ndarray,
) -> np.ndarray:
    """Back-project pixels (u, v) at depth z to (N, 3) camera-frame points."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    return np.stack(((u - cx) / fx * z, (v - cy) / fy * z, z), axis=1)
