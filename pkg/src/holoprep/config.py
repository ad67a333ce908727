"""Pipeline configuration: one JSON file drives every subcommand.

Flags win over the file; the resolved configuration is embedded in each run
summary so outputs carry their own provenance. Serialization is canonical
(sorted keys, fixed float formatting) so parse -> dump round-trips are stable.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .augment import AugmentationPolicy, classification_policy_default, detection_policy_default
from .prep import (
    DEFAULT_BLACK_THRESHOLD,
    DEFAULT_CROP_SIZE,
    DEFAULT_KEEP_FRACTION,
    DEFAULT_MERGE_IOU,
    DEFAULT_SPLIT_RATIOS,
    DEFAULT_TILE_SIZE,
)
from .registration import DEFAULT_MAX_WARP_PIXELS

EXPANSION_PRESETS = (1.0, 1.25, 1.50)


class ConfigError(ValueError):
    """A configuration field violated its owning operation's precondition."""


@dataclass(frozen=True)
class PipelineConfig:
    tile_size: int = DEFAULT_TILE_SIZE
    crop_size: int = DEFAULT_CROP_SIZE
    black_threshold: float = DEFAULT_BLACK_THRESHOLD
    keep_fraction: float = DEFAULT_KEEP_FRACTION
    expansion_factor: float = 1.0
    expand_mode: str = "area"
    split_ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS
    merge_iou: float = DEFAULT_MERGE_IOU
    seed: int = 0
    max_warp_pixels: int = DEFAULT_MAX_WARP_PIXELS
    detection_augmentation: AugmentationPolicy = field(default_factory=detection_policy_default)
    classification_augmentation: AugmentationPolicy = field(default_factory=classification_policy_default)

    def __post_init__(self):
        object.__setattr__(self, "split_ratios", tuple(self.split_ratios))
        self.validate()

    def validate(self) -> None:
        if self.tile_size < 32:
            raise ConfigError(f"config field tile_size: must be >= 32, got {self.tile_size}")
        if self.crop_size < 1:
            raise ConfigError(f"config field crop_size: must be >= 1, got {self.crop_size}")
        if not (0.0 < self.black_threshold <= 1.0):
            raise ConfigError(f"config field black_threshold: must be in (0, 1], got {self.black_threshold}")
        if not (0.0 < self.keep_fraction <= 1.0):
            raise ConfigError(f"config field keep_fraction: must be in (0, 1], got {self.keep_fraction}")
        if self.expansion_factor < 1.0:
            raise ConfigError(f"config field expansion_factor: must be >= 1, got {self.expansion_factor}")
        if self.expand_mode not in ("area", "side"):
            raise ConfigError(f"config field expand_mode: must be 'area' or 'side', got {self.expand_mode!r}")
        if len(self.split_ratios) != 3 or abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ConfigError(f"config field split_ratios: three values summing to 1, got {self.split_ratios}")
        if not (0.0 < self.merge_iou <= 1.0):
            raise ConfigError(f"config field merge_iou: must be in (0, 1], got {self.merge_iou}")
        if self.max_warp_pixels < 1:
            raise ConfigError(f"config field max_warp_pixels: must be >= 1, got {self.max_warp_pixels}")

    def override(self, **kwargs) -> "PipelineConfig":
        """Apply non-None keyword overrides (flags win over the file)."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["split_ratios"] = list(self.split_ratios)
        for key in ("detection_augmentation", "classification_augmentation"):
            doc[key]["crop_keep_range"] = list(doc[key]["crop_keep_range"])
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"config field {sorted(unknown)[0]}: unknown field")
        kwargs = dict(doc)
        for key in ("detection_augmentation", "classification_augmentation"):
            if key in kwargs and isinstance(kwargs[key], dict):
                policy_doc = dict(kwargs[key])
                policy_known = {f.name for f in fields(AugmentationPolicy)}
                bad = set(policy_doc) - policy_known
                if bad:
                    raise ConfigError(f"config field {key}.{sorted(bad)[0]}: unknown field")
                if "crop_keep_range" in policy_doc:
                    policy_doc["crop_keep_range"] = tuple(policy_doc["crop_keep_range"])
                try:
                    kwargs[key] = AugmentationPolicy(**policy_doc)
                except ValueError as exc:
                    raise ConfigError(f"config field {key}: {exc}") from None
        if "split_ratios" in kwargs:
            kwargs["split_ratios"] = tuple(kwargs["split_ratios"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"config error: {exc}") from None

    @classmethod
    def loads(cls, text: str) -> "PipelineConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"config file not found: {p}")
        return cls.loads(p.read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")
