"""Timed subtitle cues and serialized artifacts (SRT track, step report).

Cues start at each clip's first frame and run until just before the next
clip starts (the last cue gets a fixed tail).  Files are UTF-8 with LF
endings and deterministic byte-for-byte for identical inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from recap.captions import StepDescription
from recap.frames import frame_timestamp_ms
from recap.segmentation import ActionClip

FINAL_CUE_TAIL_MS = 1500


@dataclass(frozen=True)
class SubtitleCue:
    index: int      # 1-based
    start_ms: int
    end_ms: int
    text: str

    def __post_init__(self) -> None:
        if self.start_ms >= self.end_ms:
            raise ValueError(f"cue {self.index}: start {self.start_ms} >= end {self.end_ms}")


def build_cues(clips: list[ActionClip], steps: list[StepDescription],
               fps: float) -> list[SubtitleCue]:
    """One cue per clip, starting at the clip's first-frame timestamp."""
    if len(clips) != len(steps):
        raise ValueError(f"{len(clips)} clips but {len(steps)} steps")
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    cues = []
    for i, (clip, step) in enumerate(zip(clips, steps)):
        start = frame_timestamp_ms(clip.start_frame, fps)
        if i + 1 < len(clips):
            end = frame_timestamp_ms(clips[i + 1].start_frame, fps) - 1
        else:
            end = frame_timestamp_ms(clip.end_frame, fps) + FINAL_CUE_TAIL_MS
        end = max(end, start + 1)  # truncation guard for degenerate spacing
        cues.append(SubtitleCue(index=i + 1, start_ms=start, end_ms=end, text=step.text))
    return cues


def format_srt_timestamp(ms: int) -> str:
    hours, rem = divmod(ms, 3_600_000)
    minutes, rem = divmod(rem, 60_000)
    seconds, millis = divmod(rem, 1000)
    return f"{hours:02d}:{minutes:02d}:{seconds:02d},{millis:03d}"


def parse_srt_timestamp(text: str) -> int:
    hm, _, rest = text.partition(":")
    mm, _, rest = rest.partition(":")
    ss, _, mmm = rest.partition(",")
    return ((int(hm) * 60 + int(mm)) * 60 + int(ss)) * 1000 + int(mmm)


def srt_text(cues: list[SubtitleCue]) -> str:
    blocks = []
    for cue in cues:
        blocks.append(f"{cue.index}\n"
                      f"{format_srt_timestamp(cue.start_ms)} --> "
                      f"{format_srt_timestamp(cue.end_ms)}\n"
                      f"{cue.text}\n")
    return "\n".join(blocks) + ("\n" if blocks else "")


def write_srt(cues: list[SubtitleCue], path: str | Path) -> Path:
    p = Path(path)
    p.write_bytes(srt_text(cues).replace("\r\n", "\n").encode("utf-8"))
    return p


def parse_srt(text: str) -> list[SubtitleCue]:
    """Inverse of :func:`srt_text` for round-trip verification."""
    cues = []
    for block in text.strip("\n").split("\n\n"):
        if not block.strip():
            continue
        lines = block.split("\n")
        if len(lines) < 3:
            raise ValueError(f"malformed SRT block: {block!r}")
        index = int(lines[0])
        start_raw, _, end_raw = lines[1].partition(" --> ")
        cues.append(SubtitleCue(index=index,
                                start_ms=parse_srt_timestamp(start_raw),
                                end_ms=parse_srt_timestamp(end_raw),
                                text="\n".join(lines[2:])))
    return cues


def step_report(clips: list[ActionClip], steps: list[StepDescription], fps: float,
                config_echo: dict) -> list[dict]:
    """One JSON-ready object per clip (schema: docs/report.schema.json)."""
    if len(clips) != len(steps):
        raise ValueError(f"{len(clips)} clips but {len(steps)} steps")
    report = []
    for clip, step in zip(clips, steps):
        report.append({
            "index": step.clip_index,
            "kind": step.kind.value,
            "template_id": step.template_id,
            "text": step.text,
            "start_ms": frame_timestamp_ms(clip.start_frame, fps),
            "end_ms": frame_timestamp_ms(clip.end_frame, fps),
            "slots": {k: v for k, v in sorted(step.slots.items())},
            "confidences": {"object": step.confidence},
            "config_echo": config_echo,
        })
    return report


def write_report(steps_json: list[dict], path: str | Path) -> Path:
    p = Path(path)
    payload = json.dumps(steps_json, sort_keys=True, indent=2, ensure_ascii=False)
    p.write_bytes((payload + "\n").encode("utf-8"))
    return p
