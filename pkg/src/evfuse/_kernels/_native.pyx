# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot-loop kernels: DSI ray voting, region growing, depth fill.

Keep the floating-point expressions in the same order as py_backend.py;
together with -ffp-contract=off this makes vote_rays bit-identical to
the NumPy fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, floor, sqrt

NAME = "native"

KERNEL_INVERSE = 0
KERNEL_GAUSS = 1
KERNEL_EXPONENTIAL = 2


def vote_rays(double[:, ::1] origins, double[:, ::1] dirs, double[::1] depths,
              double fx, double fy, double cx, double cy,
              double gx_scale, double gy_scale,
              cnp.uint32_t[:, :, ::1] counts):
    """Accumulate one vote per in-bounds ray/plane intersection.

    Same contract as py_backend.vote_rays.
    """
    cdef Py_ssize_t n = origins.shape[0]
    cdef Py_ssize_t nk = depths.shape[0]
    cdef Py_ssize_t ny = counts.shape[0]
    cdef Py_ssize_t nx = counts.shape[1]
    cdef Py_ssize_t e, k
    cdef double ox, oy, oz, dx, dy, dz, zk, s, u, v, iu, iv
    cdef long long total = 0
    with nogil:
        for e in range(n):
            ox = origins[e, 0]
            oy = origins[e, 1]
            oz = origins[e, 2]
            dx = dirs[e, 0]
            dy = dirs[e, 1]
            dz = dirs[e, 2]
            if dz == 0.0:
                continue
            for k in range(nk):
                zk = depths[k]
                s = (zk - oz) / dz
                if not (s > 0.0):
                    continue
                u = (fx * (ox + s * dx) / zk + cx) * gx_scale
                v = (fy * (oy + s * dy) / zk + cy) * gy_scale
                iu = floor(u + 0.5)
                iv = floor(v + 0.5)
                if 0 <= iu < nx and 0 <= iv < ny:
                    counts[<Py_ssize_t>iv, <Py_ssize_t>iu, k] += 1
                    total += 1
    return int(total)


def grow_labels(cnp.int32_t[:, ::1] intensity, double threshold, int connectivity,
                cnp.int32_t[:, ::1] labels):
    """Flood-fill region growing; same contract as py_backend.grow_labels."""
    cdef Py_ssize_t h = intensity.shape[0]
    cdef Py_ssize_t w = intensity.shape[1]
    cdef int[8] offy
    cdef int[8] offx
    cdef int n_off
    if connectivity == 4:
        offy[0] = -1; offx[0] = 0
        offy[1] = 0;  offx[1] = -1
        offy[2] = 0;  offx[2] = 1
        offy[3] = 1;  offx[3] = 0
        n_off = 4
    else:
        offy[0] = -1; offx[0] = -1
        offy[1] = -1; offx[1] = 0
        offy[2] = -1; offx[2] = 1
        offy[3] = 0;  offx[3] = -1
        offy[4] = 0;  offx[4] = 1
        offy[5] = 1;  offx[5] = -1
        offy[6] = 1;  offx[6] = 0
        offy[7] = 1;  offx[7] = 1
        n_off = 8

    queue_arr = np.empty(h * w, dtype=np.int64)
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head, tail, sy, sx, y, x, y2, x2
    cdef int i, ival, diff
    cdef cnp.int32_t next_label = 0

    labels[:, :] = 0
    with nogil:
        for sy in range(h):
            for sx in range(w):
                if labels[sy, sx] != 0:
                    continue
                next_label += 1
                labels[sy, sx] = next_label
                queue[0] = sy * w + sx
                head = 0
                tail = 1
                while head < tail:
                    y = queue[head] // w
                    x = queue[head] % w
                    head += 1
                    ival = intensity[y, x]
                    for i in range(n_off):
                        y2 = y + offy[i]
                        x2 = x + offx[i]
                        if 0 <= y2 < h and 0 <= x2 < w and labels[y2, x2] == 0:
                            diff = intensity[y2, x2] - ival
                            if diff < 0:
                                diff = -diff
                            if diff <= threshold:
                                labels[y2, x2] = next_label
                                queue[tail] = y2 * w + x2
                                tail += 1
    return int(next_label)


def weighted_fill(cnp.int64_t[::1] py, cnp.int64_t[::1] px,
                  cnp.int64_t[::1] my, cnp.int64_t[::1] mx,
                  double[::1] mdepth, int kernel, double sigma):
    """Distance-weighted depth fill; same contract as py_backend.weighted_fill."""
    cdef Py_ssize_t n_px = py.shape[0]
    cdef Py_ssize_t n_seed = mx.shape[0]
    if n_seed == 0:
        raise ValueError("weighted_fill needs at least one seed")
    out_arr = np.empty(n_px, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma)
    cdef Py_ssize_t i, j
    cdef double pxx, pyy, ddx, ddy, d, dmin, w, num, den
    with nogil:
        for i in range(n_px):
            pxx = <double>px[i]
            pyy = <double>py[i]
            dmin = 0.0
            if kernel != 0:  # gauss/exponential rescale by the nearest seed
                dmin = 1e300
                for j in range(n_seed):
                    ddx = pxx - <double>mx[j]
                    ddy = pyy - <double>my[j]
                    d = sqrt(ddx * ddx + ddy * ddy)
                    if d < dmin:
                        dmin = d
            num = 0.0
            den = 0.0
            for j in range(n_seed):
                ddx = pxx - <double>mx[j]
                ddy = pyy - <double>my[j]
                d = sqrt(ddx * ddx + ddy * ddy)
                if kernel == 0:
                    w = 1.0 / (d if d > 1.0 else 1.0)
                elif kernel == 1:
                    w = exp(-(d * d - dmin * dmin) * inv_two_sigma2)
                else:
                    w = exp(-(d - dmin))
                num += w * mdepth[j]
                den += w
            out[i] = num / den
    return out_arr
