"""NumPy fallback implementations of the hot-loop kernels.

Mirrors evfuse._kernels._native operation for operation. vote_rays and
grow_labels are written so that their integer outputs match the compiled
backend bit for bit; weighted_fill differs only in float summation order.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

KERNEL_INVERSE = 0
KERNEL_GAUSS = 1
KERNEL_EXPONENTIAL = 2


def vote_rays(
    origins: np.ndarray,
    dirs: np.ndarray,
    depths: np.ndarray,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    gx_scale: float,
    gy_scale: float,
    counts: np.ndarray,
) -> int:
    """Accumulate one vote per in-bounds ray/plane intersection.

    origins/dirs are (N, 3) rays in the reference camera frame, depths the
    (K,) plane depths, counts a (ny, nx, K) uint32 grid updated in place.
    A ray hits plane k at parameter s = (z_k - oz)/dz; only s > 0 counts.
    Returns the number of votes added.
    """
    ny, nx, nk = counts.shape
    ox, oy, oz = origins[:, 0], origins[:, 1], origins[:, 2]
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    total = 0
    for k in range(nk):
        zk = float(depths[k])
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (zk - oz) / dz
            u = (fx * (ox + s * dx) / zk + cx) * gx_scale
            v = (fy * (oy + s * dy) / zk + cy) * gy_scale
        iu = np.floor(u + 0.5)
        iv = np.floor(v + 0.5)
        # NaN/inf fall out of the comparisons, so degenerate rays drop here
        ok = (s > 0.0) & (iu >= 0) & (iu < nx) & (iv >= 0) & (iv < ny)
        if not np.any(ok):
            continue
        flat = iv[ok].astype(np.int64) * nx + iu[ok].astype(np.int64)
        votes = np.bincount(flat, minlength=ny * nx).astype(np.uint32)
        counts[:, :, k] += votes.reshape(ny, nx)
        total += int(ok.sum())
    return total


_OFFSETS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))
_OFFSETS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def grow_labels(
    intensity: np.ndarray,
    threshold: float,
    connectivity: int,
    labels: np.ndarray,
) -> int:
    """Flood-fill region growing over an int32 intensity grid.

    Seeds are scanned in raster order; a FIFO queue admits an unlabeled
    neighbor q of region pixel p iff |I(q) - I(p)| <= threshold. Every
    pixel ends up labeled (worst case as its own one-pixel region).
    labels must be a preallocated int32 grid; returns the region count.
    """
    offsets = _OFFSETS_4 if connectivity == 4 else _OFFSETS_8
    h, w = intensity.shape
    labels.fill(0)
    inten = intensity
    lab = labels
    qy = np.empty(h * w, dtype=np.int64)
    qx = np.empty(h * w, dtype=np.int64)
    next_label = 0
    for sy in range(h):
        for sx in range(w):
            if lab[sy, sx] != 0:
                continue
            next_label += 1
            lab[sy, sx] = next_label
            qy[0] = sy
            qx[0] = sx
            head, tail = 0, 1
            while head < tail:
                y = int(qy[head])
                x = int(qx[head])
                head += 1
                ival = int(inten[y, x])
                for oy, ox in offsets:
                    y2 = y + oy
                    x2 = x + ox
                    if 0 <= y2 < h and 0 <= x2 < w and lab[y2, x2] == 0:
                        if abs(int(inten[y2, x2]) - ival) <= threshold:
                            lab[y2, x2] = next_label
                            qy[tail] = y2
                            qx[tail] = x2
                            tail += 1
    return next_label


def weighted_fill(
    py: np.ndarray,
    px: np.ndarray,
    my: np.ndarray,
    mx: np.ndarray,
    mdepth: np.ndarray,
    kernel: int,
    sigma: float,
) -> np.ndarray:
    """Distance-weighted depth for pixels (py, px) from seeds (my, mx, mdepth).

    d(p) = sum_k w_k D(m_k) / sum_k w_k with weights from the chosen
    kernel over the Euclidean pixel distance. Gauss and exponential
    weights are rescaled by the per-pixel nearest-seed weight before
    summation; the ratio is unchanged and the sums cannot underflow.
    """
    n_px = py.shape[0]
    n_seed = mx.shape[0]
    if n_seed == 0:
        raise ValueError("weighted_fill needs at least one seed")
    out = np.empty(n_px, dtype=np.float64)
    pxf = px.astype(np.float64)
    pyf = py.astype(np.float64)
    mxf = mx.astype(np.float64)
    myf = my.astype(np.float64)
    depth = mdepth.astype(np.float64)
    chunk = max(1, int(4_000_000 // n_seed))
    inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma)
    for i0 in range(0, n_px, chunk):
        sl = slice(i0, min(i0 + chunk, n_px))
        ddx = pxf[sl, None] - mxf[None, :]
        ddy = pyf[sl, None] - myf[None, :]
        d = np.sqrt(ddx * ddx + ddy * ddy)
        if kernel == KERNEL_INVERSE:
            w = 1.0 / np.maximum(d, 1.0)
        elif kernel == KERNEL_GAUSS:
            dmin = d.min(axis=1, keepdims=True)
            w = np.exp(-(d * d - dmin * dmin) * inv_two_sigma2)
        elif kernel == KERNEL_EXPONENTIAL:
            dmin = d.min(axis=1, keepdims=True)
            w = np.exp(-(d - dmin))
        else:
            raise ValueError(f"unknown kernel id {kernel}")
        out[sl] = (w @ depth) / w.sum(axis=1)
    return out
