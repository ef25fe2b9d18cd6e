"""End-to-end orchestration: recording in, captioned steps out.

Stage order: similarity signal, keyboard flags, clip segmentation, per-clip
attribute inference (scroll candidates that strip matching cannot confirm
are dropped here), screen understanding, template captioning, cue timing.
Per-clip adapter failures drop the clip with a diagnostic; an unavailable
adapter aborts the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from recap.adapters import AdapterError, AdapterSet, AdapterUnavailable, NoIndicatorFound
from recap.attributes import (
    IndicatorLocalizer,
    InputDelta,
    ScrollDirection,
    ScrollOffset,
    TapPoint,
    infer_input_text,
    infer_scroll_offset,
    infer_tap_location,
    sample_clip,
    scroll_confirmed,
)
from recap.captions import (
    StepDescription,
    describe,
    phrase_scroll_offset,
    resolve_input_target,
    resolve_scroll_target,
    resolve_tap_target,
)
from recap.config import PipelineConfig
from recap.frames import Recording
from recap.gui import Screen, absolute_position, build_screen
from recap.segmentation import (
    ActionClip,
    ActionKind,
    KeyboardFlags,
    SimilaritySignal,
    build_keyboard_flags,
    compute_signal,
    segment_actions,
)
from recap.subtitles import SubtitleCue, build_cues, step_report


@dataclass
class PipelineResult:
    clips: list[ActionClip]
    attrs: list[TapPoint | ScrollOffset | InputDelta | None]
    steps: list[StepDescription]
    cues: list[SubtitleCue]
    signal: SimilaritySignal | None
    keyboard: KeyboardFlags
    diagnostics: dict = field(default_factory=dict)

    def report_json(self, fps: float, config_echo: dict) -> list[dict]:
        return step_report(self.clips, self.steps, fps, config_echo)


def _keyboard_flags(rec: Recording, adapters: AdapterSet, cfg: PipelineConfig,
                    diagnostics: dict) -> KeyboardFlags:
    errors = diagnostics.setdefault("adapter_errors", [])

    def texts_at(index: int) -> list[str]:
        try:
            return [item.text for item in adapters.ocr.ocr(rec.frames[index])]
        except AdapterUnavailable:
            raise
        except AdapterError as e:
            errors.append(f"keyboard OCR at frame {index}: {e}")
            return []

    return build_keyboard_flags(rec, texts_at, cfg.segmentation)


def _tap_point(rec: Recording, adapters: AdapterSet, cfg: PipelineConfig,
               start_frame: int, end_frame: int) -> tuple[TapPoint, bool]:
    """(point, fallback_used); the window reaches back over the indicator
    animation that precedes the similarity transition."""
    start = max(0, start_frame - cfg.tap.pre_context_frames)
    window = ActionClip(kind=ActionKind.TAP, start_frame=start,
                        end_frame=min(end_frame, len(rec) - 1))
    sample = sample_clip(window, rec)
    localizer = adapters.tap_localizer
    if localizer is None:
        localizer = IndicatorLocalizer(cfg.tap)
    try:
        return infer_tap_location(sample, rec, localizer), False
    except NoIndicatorFound:
        return TapPoint(0.5, 0.5), True


def run_pipeline(rec: Recording, adapters: AdapterSet,
                 cfg: PipelineConfig | None = None) -> PipelineResult:
    cfg = cfg or PipelineConfig()
    diagnostics: dict = {"dropped_clips": [], "tap_fallbacks": 0,
                         "scroll_rejected_pairs": 0, "notes": []}

    if len(rec) < 2:
        diagnostics["notes"].append("single-frame recording: empty signal")
        signal = SimilaritySignal(scores=np.empty(0), fps=rec.fps)
        kb = KeyboardFlags([], [], n_frames=len(rec))
        return PipelineResult(clips=[], attrs=[], steps=[], cues=[],
                              signal=signal, keyboard=kb, diagnostics=diagnostics)

    signal = compute_signal(rec, cfg.segmentation, cfg.ssim)
    kb = _keyboard_flags(rec, adapters, cfg, diagnostics)
    raw_clips = segment_actions(signal, kb, cfg.segmentation) if len(signal) else []
    diagnostics["signal"] = {
        "pairs": len(signal),
        "min": float(signal.scores.min()) if len(signal) else None,
        "mean": float(signal.scores.mean()) if len(signal) else None,
        "below_drop_threshold": int(
            (signal.scores < cfg.segmentation.drop_threshold).sum()),
    }

    clips: list[ActionClip] = []
    attrs: list[TapPoint | ScrollOffset | InputDelta | None] = []
    steps: list[StepDescription] = []
    screens: dict[int, Screen] = {}

    def screen_at(index: int) -> Screen:
        if index not in screens:
            screens[index] = build_screen(rec.frames[index], adapters.detector,
                                          adapters.ocr, adapters.captioner,
                                          cfg.graph)
        return screens[index]

    for clip in raw_clips:
        try:
            if clip.kind is ActionKind.SCROLL:
                offset = infer_scroll_offset(clip, rec, cfg=cfg.scroll)
                diagnostics["scroll_rejected_pairs"] += len(offset.rejected_pairs)
                if not scroll_confirmed(offset, cfg.scroll):
                    diagnostics["dropped_clips"].append({
                        "kind": clip.kind.value, "start_frame": clip.start_frame,
                        "end_frame": clip.end_frame,
                        "reason": "strip matching found no consistent vertical motion",
                    })
                    continue
                post_screen = screen_at(clip.end_frame)
                pre_texts = {item.text for item
                             in adapters.ocr.ocr(rec.frames[clip.start_frame])}
                target = resolve_scroll_target(pre_texts, post_screen)
                direction = "down" if offset.direction is ScrollDirection.DOWN else "up"
                step = describe(len(clips), clip, target, post_screen, cfg.caption,
                                scroll_direction=direction,
                                scroll_amount=phrase_scroll_offset(
                                    offset.distance_px, rec.height))
                clips.append(clip)
                attrs.append(offset)
                steps.append(step)

            elif clip.kind is ActionKind.TAP:
                point, fallback = _tap_point(rec, adapters, cfg,
                                             clip.start_frame, clip.end_frame)
                if fallback:
                    diagnostics["tap_fallbacks"] += 1
                screen = screen_at(clip.start_frame)
                target = resolve_tap_target(
                    point.to_pixels(screen.width, screen.height), screen)
                px, py = point.to_pixels(screen.width, screen.height)
                position = absolute_position((int(px), int(py), 0, 0),
                                             (screen.width, screen.height))
                step = describe(len(clips), clip, target, screen, cfg.caption,
                                tap_position=position)
                clips.append(clip)
                attrs.append(point)
                steps.append(step)

            else:  # INPUT
                delta = infer_input_text(clip, rec, adapters.ocr, kb, cfg.input)
                if delta.text == "":
                    diagnostics["notes"].append(
                        f"empty input diff for clip [{clip.start_frame}, "
                        f"{clip.end_frame}]")
                screen = screen_at(delta.before_frame)
                # The tap that opened the keyboard animates around the clip
                # start; keystroke popups later in the clip must stay out of
                # the localizer's window.
                opening, opening_fallback = _tap_point(
                    rec, adapters, cfg, clip.start_frame, clip.start_frame + 2)
                target = resolve_input_target(
                    screen, None if opening_fallback
                    else opening.to_pixels(screen.width, screen.height))
                step = describe(len(clips), clip, target, screen, cfg.caption,
                                input_text=delta.text)
                clips.append(clip)
                attrs.append(delta)
                steps.append(step)
        except AdapterUnavailable:
            raise
        except AdapterError as e:
            diagnostics["dropped_clips"].append({
                "kind": clip.kind.value, "start_frame": clip.start_frame,
                "end_frame": clip.end_frame, "reason": f"adapter failure: {e}"})

    cues = build_cues(clips, steps, rec.fps)
    return PipelineResult(clips=clips, attrs=attrs, steps=steps, cues=cues,
                          signal=signal, keyboard=kb, diagnostics=diagnostics)
