"""Tool-wide configuration: every tunable with its documented default.

The config file is JSON with one object per section; unknown keys are
rejected so typos fail loudly.  ``config_echo`` flattens the active values
into the output artifacts so any run can be reproduced from its report alone.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

ENV_CONFIG_VAR = "RECAP_CONFIG"


class ConfigError(Exception):
    """Raised for invalid or inconsistent configuration values."""


@dataclass
class SsimConfig:
    window: int = 7                      # odd sliding-window size
    c1: float = (0.01 * 255.0) ** 2      # luminance stabilizer
    c2: float = (0.03 * 255.0) ** 2      # contrast/structure stabilizer


@dataclass
class SegmentationConfig:
    drop_threshold: float = 0.92     # similarity below this marks a transition
    steady_threshold: float = 0.97   # at/above this the screen counts as steady
    smooth_window: int = 3           # moving-median width applied to the signal
    t_s_max_s: float = 0.5           # max loading-plateau length merged into one tap
    scroll_min_s: float = 0.3        # minimum transition length classified as scroll
    scroll_rise_fraction: float = 0.6  # share of non-decreasing steps required in a scroll run
    input_min_oscillations: int = 3  # drop/rise cycles required inside a keyboard span
    input_drop_threshold: float = 0.97  # keystroke cycles dip below this, not drop_threshold
    kb_sample_stride: int = 5        # OCR every Nth frame for keyboard flags
    downsample_factor: int = 0       # 0 = auto (2, or 4 for frames wider than 720 px)
    pre_blur: bool = True            # 3x3 mean filter on analysis planes (noise floor)

    def factor_for_width(self, width: int) -> int:
        if self.downsample_factor > 0:
            return self.downsample_factor
        return 4 if width > 720 else 2


@dataclass
class ScrollConfig:
    strips: int = 10                 # horizontal strips matched per frame pair
    min_correlation: float = 0.5     # strips matching below this are rejected
    search_fraction: float = 0.45    # vertical search window as fraction of height
                                     # (must exceed 0.4: full-shift recovery holds
                                     # up to 40% of frame height)
    chrome_correlation: float = 0.995  # zero-offset match treated as fixed chrome...
    chrome_pair_fraction: float = 0.8  # ...when seen in at least this share of pairs
    confirm_min_px: int = 12         # minimum |distance| for a scroll clip to be kept
    confirm_pair_fraction: float = 0.5  # minimum share of pairs with accepted strips


@dataclass
class TapConfig:
    diff_threshold: int = 12         # per-pixel luma delta that counts as changed
    max_blob_area_fraction: float = 0.08  # indicator bbox cap as share of frame area
    min_blob_pixels: int = 30        # reject speckle blobs
    min_fill_ratio: float = 0.15     # blob pixels / bbox pixels lower bound
    mask_overlap_fraction: float = 0.5  # blob share inside the persistent-change mask
    mask_dilate_px: int = 2
    max_pair_change_fraction: float = 0.03  # pairs whose substantial blobs cover
                                            # more are transitions, which a small
                                            # overlay never produces
    group_radius_px: int = 12        # blobs within this radius count as one site
    pre_context_frames: int = 8      # frames before the clip included in the sample
                                     # (the indicator animates before the transition)


@dataclass
class GraphConfig:
    neighbor_threshold_fraction: float = 0.25  # max link distance / frame height
    axis_overlap_fraction: float = 0.3         # perpendicular overlap for candidacy


@dataclass
class CaptionConfig:
    alpha: float = 0.9               # high-confidence threshold
    beta: float = 0.5                # low-confidence threshold


@dataclass
class AdapterConfig:
    ocr_command: str | None = None
    detector_command: str | None = None
    captioner_command: str | None = None
    tap_localizer_command: str | None = None
    timeout_s: float = 20.0
    max_parallel: int = 2


@dataclass
class InputConfig:
    frame_margin: int = 2            # extra frames before/after the keyboard span


@dataclass
class EvalConfig:
    broaden_frames: int = 5          # ground-truth interval expansion per side
    scroll_tolerance_px: int = 2     # 0 restores exact-offset scoring
    input_exact_match: bool = True


@dataclass
class PipelineConfig:
    ssim: SsimConfig = field(default_factory=SsimConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    scroll: ScrollConfig = field(default_factory=ScrollConfig)
    tap: TapConfig = field(default_factory=TapConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    caption: CaptionConfig = field(default_factory=CaptionConfig)
    adapters: AdapterConfig = field(default_factory=AdapterConfig)
    input: InputConfig = field(default_factory=InputConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not 0 <= self.caption.beta < self.caption.alpha <= 1:
            raise ConfigError(
                f"caption thresholds need 0 <= beta < alpha <= 1, got "
                f"beta={self.caption.beta}, alpha={self.caption.alpha}"
            )
        if self.scroll.strips < 2:
            raise ConfigError(f"scroll.strips must be >= 2, got {self.scroll.strips}")
        if self.ssim.window < 3 or self.ssim.window % 2 == 0:
            raise ConfigError(f"ssim.window must be odd and >= 3, got {self.ssim.window}")
        if self.segmentation.kb_sample_stride < 1:
            raise ConfigError("segmentation.kb_sample_stride must be >= 1")
        if self.segmentation.smooth_window % 2 == 0:
            raise ConfigError("segmentation.smooth_window must be odd")
        if self.eval.broaden_frames < 0:
            raise ConfigError("eval.broaden_frames must be >= 0")

    def echo(self) -> dict:
        """Flat, JSON-ready dump of every tunable (section.key -> value)."""
        out: dict[str, object] = {}
        for section_field in dataclasses.fields(self):
            section = getattr(self, section_field.name)
            for f in dataclasses.fields(section):
                out[f"{section_field.name}.{f.name}"] = getattr(section, f.name)
        return out


_SECTIONS = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def config_from_dict(data: dict) -> PipelineConfig:
    """Build a config from a {section: {key: value}} mapping."""
    kwargs = {}
    for name, values in data.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown config section {name!r}")
        cls = PipelineConfig.__dataclass_fields__[name].default_factory  # type: ignore[union-attr]
        known = {f.name for f in dataclasses.fields(cls())}
        bad = set(values) - known
        if bad:
            raise ConfigError(f"unknown keys in section {name!r}: {sorted(bad)}")
        kwargs[name] = cls(**values)
    return PipelineConfig(**kwargs)


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Load config from a JSON file, the RECAP_CONFIG env var, or defaults."""
    if path is None:
        env = os.environ.get(ENV_CONFIG_VAR)
        if env:
            path = env
    if path is None:
        return PipelineConfig()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {p}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    return config_from_dict(data)
