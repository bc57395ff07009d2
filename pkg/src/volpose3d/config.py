"""Pipeline configuration (JSON round-trippable)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .decoder import DecoderParams
from .volume import VoxelGrid


@dataclass(frozen=True)
class SynthConfig:
    n_cams: int = 4
    n_people: int = 1
    stride: float = 16.0
    sigma2d: float = 2.0
    paf_width: float = 1.5
    image_size: tuple[int, int] = (1920, 1080)
    # scene bounds are the grid extent shrunk by this many meters per side
    bounds_margin: float = 0.15
    min_separation: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "image_size", tuple(int(x) for x in self.image_size))


@dataclass(frozen=True)
class PipelineConfig:
    grid: VoxelGrid = field(default_factory=VoxelGrid)
    decoder: DecoderParams = field(default_factory=DecoderParams)
    sigma: float = 1.0
    limb_radius: float = 1.0
    visibility_normalized: bool = False
    seed: int = 0
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        if not self.sigma > 0 or not self.limb_radius > 0:
            raise ValueError("sigma and limb_radius must be positive")

    def scene_bounds(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        lo, hi = self.grid.bounds()
        m = self.synth.bounds_margin
        return tuple((lo + m).tolist()), tuple((hi - m).tolist())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = self.grid.to_dict()
        d["synth"]["image_size"] = list(self.synth.image_size)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        data = dict(data)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "grid" in data:
            data["grid"] = VoxelGrid.from_dict(data["grid"])
        if "decoder" in data:
            data["decoder"] = DecoderParams(**data["decoder"])
        if "synth" in data:
            data["synth"] = SynthConfig(**data["synth"])
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> PipelineConfig:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
