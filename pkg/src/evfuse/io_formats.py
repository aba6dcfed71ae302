"""Artifact file formats: ASCII PLY clouds, PFM range images, PGM masks.

PLY vertices carry a uchar provenance property (0 = event-derived,
1 = fill-derived). PFM files are little-endian float32 with bottom-up
rows (scale -1.0); invalid depths are stored as 0. PGM files are binary
P5, big-endian for 16-bit data as Netpbm requires.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .emvs import PointCloud


def write_ply(path: str | Path, cloud: PointCloud) -> None:
    """Write a point cloud as ASCII PLY with per-vertex provenance."""
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(cloud)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar provenance",
        "end_header",
    ]
    body = [
        f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {tag}"
        for p, tag in zip(cloud.points, cloud.provenance)
    ]
    Path(path).write_text("\n".join(lines + body) + "\n")


def read_ply(path: str | Path) -> PointCloud:
    """Read a PLY written by write_ply."""
    text = Path(path).read_text().splitlines()
    try:
        end = text.index("end_header")
    except ValueError as exc:
        raise ValueError(f"{path}: not a PLY file") from exc
    n = 0
    for line in text[:end]:
        m = re.match(r"element vertex (\d+)", line)
        if m:
            n = int(m.group(1))
    rows = [line.split() for line in text[end + 1 : end + 1 + n]]
    if len(rows) != n:
        raise ValueError(f"{path}: expected {n} vertices, found {len(rows)}")
    if n == 0:
        return PointCloud(np.empty((0, 3)), np.empty(0, dtype=np.uint8))
    pts = np.array([[float(r[0]), float(r[1]), float(r[2])] for r in rows])
    prov = np.array([int(r[3]) for r in rows], dtype=np.uint8)
    return PointCloud(pts, prov)


def write_pfm(path: str | Path, data: np.ndarray) -> None:
    """Write a single-channel float32 PFM (little-endian, bottom-up rows)."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise ValueError("PFM writer expects a 2D array")
    h, w = data.shape
    with Path(path).open("wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode())
        f.write(b"-1.0\n")
        f.write(np.flipud(data).astype("<f4").tobytes())


def read_pfm(path: str | Path) -> np.ndarray:
    """Read a single-channel PFM into a float32 array (top-down rows)."""
    with Path(path).open("rb") as f:
        if f.readline().strip() != b"Pf":
            raise ValueError(f"{path}: not a grayscale PFM")
        w, h = (int(v) for v in f.readline().split())
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(f.read(w * h * 4), dtype=dtype).reshape(h, w)
    return np.flipud(data).astype(np.float32)


def write_pgm(path: str | Path, data: np.ndarray) -> None:
    """Write a binary PGM (P5); uint8 or uint16 (16-bit stored big-endian)."""
    data = np.asarray(data)
    if data.ndim != 2:
        raise ValueError("PGM writer expects a 2D array")
    if data.dtype == np.uint8:
        maxval, raw = 255, data.tobytes()
    elif data.dtype == np.uint16:
        maxval, raw = 65535, data.astype(">u2").tobytes()
    else:
        raise ValueError(f"PGM writer expects uint8 or uint16, got {data.dtype}")
    h, w = data.shape
    with Path(path).open("wb") as f:
        f.write(f"P5\n{w} {h}\n{maxval}\n".encode())
        f.write(raw)


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM written by write_pgm."""
    with Path(path).open("rb") as f:
        if f.readline().strip() != b"P5":
            raise ValueError(f"{path}: not a binary PGM")
        fields: list[bytes] = []
        while len(fields) < 3:
            line = f.readline()
            if line.startswith(b"#"):
                continue
            fields.extend(line.split())
        w, h, maxval = (int(v) for v in fields)
        if maxval <= 255:
            data = np.frombuffer(f.read(w * h), dtype=np.uint8)
        else:
            data = np.frombuffer(f.read(w * h * 2), dtype=">u2").astype(np.uint16)
    return data.reshape(h, w)


def write_dsi_volume(
    path: str | Path,
    counts: np.ndarray,
    z_min: float,
    z_max: float,
    sampling: str,
) -> None:
    """Dump a vote volume: text header "nx ny nz z_min z_max sampling", then
    raw little-endian u32 counts in (y, x, z) C order."""
    ny, nx, nz = counts.shape
    with Path(path).open("wb") as f:
        f.write(f"{nx} {ny} {nz} {z_min:.9g} {z_max:.9g} {sampling}\n".encode())
        f.write(np.ascontiguousarray(counts, dtype="<u4").tobytes())


def read_dsi_volume(path: str | Path) -> tuple[np.ndarray, dict]:
    """Read a volume written by write_dsi_volume."""
    with Path(path).open("rb") as f:
        header = f.readline().split()
        if len(header) != 6:
            raise ValueError(f"{path}: bad DSI header")
        nx, ny, nz = int(header[0]), int(header[1]), int(header[2])
        meta = {
            "nx": nx,
            "ny": ny,
            "nz": nz,
            "z_min": float(header[3]),
            "z_max": float(header[4]),
            "sampling": header[5].decode(),
        }
        counts = np.frombuffer(f.read(nx * ny * nz * 4), dtype="<u4").reshape(ny, nx, nz)
    return counts.astype(np.uint32), meta
