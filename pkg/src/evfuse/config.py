"""Flat key=value configuration for the pipeline and the scene generator.

A config file holds one "key = value" pair per line; '#' starts a
comment. Every key can be overridden on the command line with
--set key=value. Defaults follow the reference experiment setup:
grid 240x180x100, maxima kernel 15 / constant 7, growing threshold 3,
contour 30% / interior 5%, ring 3, sigma 5.
"""

from __future__ import annotations

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .emvs import DsiConfig, MaximaConfig
from .fusion import KERNEL_NAMES, FillConfig
from .segmentation import GrowConfig


class ConfigError(ValueError):
    """Invalid configuration file, key, value or combination."""


@dataclass
class PipelineConfig:
    dataset: str = ""
    out_dir: str = "out"
    width: int = 240
    height: int = 180
    t_start: float = 0.0
    t_end: float = 0.0
    t_ref: float = float("nan")   # NaN = window midpoint
    dsi_nx: int = 0               # 0 = sensor width
    dsi_ny: int = 0               # 0 = sensor height
    dsi_nz: int = 100
    z_min: float = 0.3
    z_max: float = 5.0
    depth_sampling: str = "inverse"
    maxima_kernel: int = 15
    maxima_constant: float = 7.0
    grow_threshold: float = 3.0
    grow_connectivity: int = 4
    min_region_size: int = 100
    contour_fraction: float = 0.30
    interior_fraction: float = 0.05
    ring_width: int = 3
    fill_kernel: str = "inverse"
    sigma: float = 5.0
    eval_plane: str = ""          # "nx ny nz distance" in world coordinates
    segment_len: float = 1.0
    eval_kernels: str = "inverse,gauss,exponential"
    dump_dsi: bool = False

    def resolved_t_ref(self) -> float:
        if np.isnan(self.t_ref):
            return 0.5 * (self.t_start + self.t_end)
        return self.t_ref

    def validate(self) -> None:
        if not self.dataset:
            raise ConfigError("dataset path is required")
        if not self.t_end > self.t_start:
            raise ConfigError(f"need t_start < t_end, got [{self.t_start}, {self.t_end}]")
        t_ref = self.resolved_t_ref()
        if not self.t_start < t_ref <= self.t_end:
            raise ConfigError(f"need t_start < t_ref <= t_end, got t_ref={t_ref}")
        try:
            self.dsi_config()
            self.maxima_config()
            self.grow_config()
            self.fill_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for k in self.eval_kernel_list():
            if k not in KERNEL_NAMES:
                raise ConfigError(f"unknown kernel {k!r} in eval_kernels")
        self.eval_plane_params()
        if self.segment_len <= 0:
            raise ConfigError("segment_len must be positive")

    def dsi_config(self) -> DsiConfig:
        return DsiConfig(
            nx=self.dsi_nx or self.width,
            ny=self.dsi_ny or self.height,
            nz=self.dsi_nz,
            z_min=self.z_min,
            z_max=self.z_max,
            sampling=self.depth_sampling,
        )

    def maxima_config(self) -> MaximaConfig:
        return MaximaConfig(kernel=self.maxima_kernel, c=self.maxima_constant)

    def grow_config(self) -> GrowConfig:
        return GrowConfig(
            threshold=self.grow_threshold,
            connectivity=self.grow_connectivity,
            min_region_size=self.min_region_size,
        )

    def fill_config(self) -> FillConfig:
        return FillConfig(
            contour_fraction=self.contour_fraction,
            interior_fraction=self.interior_fraction,
            ring_width=self.ring_width,
            kernel=self.fill_kernel,
            sigma=self.sigma,
        )

    def eval_plane_params(self) -> tuple[np.ndarray, float] | None:
        """Parse eval_plane "nx ny nz distance" (normal is normalized)."""
        if not self.eval_plane.strip():
            return None
        parts = self.eval_plane.replace(",", " ").split()
        if len(parts) != 4:
            raise ConfigError(f"eval_plane needs 4 numbers, got {self.eval_plane!r}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise ConfigError(f"eval_plane: {exc}") from exc
        normal = np.array(vals[:3])
        norm = np.linalg.norm(normal)
        if norm == 0:
            raise ConfigError("eval_plane normal must be nonzero")
        return normal / norm, vals[3]

    def eval_kernel_list(self) -> list[str]:
        return [k.strip() for k in self.eval_kernels.split(",") if k.strip()]


@dataclass
class SynthConfig:
    out_dir: str = "synth_out"
    width: int = 240
    height: int = 180
    fx: float = 200.0
    fy: float = 200.0
    cx: float = 120.0
    cy: float = 90.0
    plane_depth: float = 0.5
    speed: float = 0.04
    duration: float = 2.0
    t0: float = 0.0
    sim_rate: float = 500.0
    frame_rate: float = 20.0
    pose_rate: float = 200.0
    contrast: float = 0.25
    seed: int = 7
    texture: str = "blobs"  # blobs | stripes
    texture_size: int = 256
    blob_sigma: float = 6.0
    stripe_min: int = 3     # stripe widths in texels
    stripe_max: int = 8
    tex_low: float = 40.0
    tex_high: float = 215.0
    texels_per_meter: float = 0.0  # 0 = auto (~6 image px per texel at plane depth)

    def validate(self) -> None:
        if self.duration < 0:
            raise ConfigError("duration must be >= 0")
        if self.plane_depth <= 0:
            raise ConfigError("plane_depth must be positive")
        if self.contrast <= 0:
            raise ConfigError("contrast must be positive")
        if self.texture not in ("blobs", "stripes"):
            raise ConfigError(f"unknown texture kind {self.texture!r}")
        if not 1 <= self.stripe_min <= self.stripe_max:
            raise ConfigError("need 1 <= stripe_min <= stripe_max")

    def resolved_texels_per_meter(self) -> float:
        if self.texels_per_meter > 0:
            return self.texels_per_meter
        return self.fx / (self.plane_depth * 6.0)


def _coerce(name: str, raw: str, target_type: type) -> Any:
    raw = raw.strip()
    try:
        if target_type is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from exc


def _apply(cfg: Any, pairs: Iterable[tuple[str, str]]) -> None:
    types = {f.name: f.type for f in fields(cfg)}
    pytypes = {"int": int, "float": float, "str": str, "bool": bool}
    for name, raw in pairs:
        if name not in types:
            raise ConfigError(f"unknown config key {name!r}")
        setattr(cfg, name, _coerce(name, raw, pytypes[types[name]]))


def _parse_lines(text: str, source: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        pairs.append((key.strip(), value.strip()))
    return pairs


def parse_overrides(overrides: Iterable[str]) -> list[tuple[str, str]]:
    pairs = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        pairs.append((key.strip(), value.strip()))
    return pairs


def load_pipeline_config(
    path: str | Path | None,
    overrides: Iterable[str] = (),
    out_dir: str | None = None,
) -> PipelineConfig:
    cfg = PipelineConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        _apply(cfg, _parse_lines(p.read_text(), str(p)))
    _apply(cfg, parse_overrides(overrides))
    if out_dir is not None:
        cfg.out_dir = out_dir
    cfg.validate()
    return cfg


def load_synth_config(
    path: str | Path | None,
    overrides: Iterable[str] = (),
    out_dir: str | None = None,
) -> SynthConfig:
    cfg = SynthConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        _apply(cfg, _parse_lines(p.read_text(), str(p)))
    _apply(cfg, parse_overrides(overrides))
    if out_dir is not None:
        cfg.out_dir = out_dir
    cfg.validate()
    return cfg
