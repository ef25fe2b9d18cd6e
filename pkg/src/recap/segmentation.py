"""Consecutive-frame similarity signal and action-clip segmentation.

The signal is the mean structural similarity (SSIM) of the luminance planes
of each consecutive frame pair.  Transitions show up as sub-threshold runs
whose shape separates the three action patterns: an instantaneous drop that
recovers immediately (tap), a drop with a gradual rise back to baseline
(scroll), and repeated drop/rise cycles while an on-screen keyboard is
visible (text input).  A short steady stretch between two tap drops is the
familiar slow-resource-loading plateau and is merged into a single tap clip.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from recap.config import PipelineConfig, SegmentationConfig, SsimConfig
from recap.frames import LumaPlane, Recording, box_blur, downsample, rgb_to_luma

# OCR substrings that identify keyboard key rows.  Letter triggers are checked
# against the lowercased letter stream, digit triggers against the digit
# stream, so capitalized keyboards and numeric pads are both caught.
KEY_ROW_TRIGGERS = ("qwert", "asdfg", "zxcvb")
DIGIT_ROW_TRIGGERS = ("123", "456", "789")


class ActionKind(enum.Enum):
    TAP = "TAP"
    SCROLL = "SCROLL"
    INPUT = "INPUT"


@dataclass(frozen=True)
class SimilaritySignal:
    """Per-pair similarity scores: scores[i] compares frames i and i+1."""

    scores: np.ndarray  # float64, length = frame count - 1
    fps: float

    def __len__(self) -> int:
        return len(self.scores)


@dataclass
class ActionClip:
    """A typed, inclusive frame interval covering one user action."""

    kind: ActionKind
    start_frame: int
    end_frame: int
    steady_gap: tuple[int, int] | None = None  # loading plateau inside the clip

    def __post_init__(self) -> None:
        if self.start_frame >= self.end_frame:
            raise ValueError(
                f"clip needs start < end, got [{self.start_frame}, {self.end_frame}]"
            )
        if self.steady_gap is not None:
            gs, ge = self.steady_gap
            if not (self.start_frame < gs <= ge < self.end_frame):
                raise ValueError(f"steady_gap {self.steady_gap} outside clip")

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1


@dataclass
class KeyboardFlags:
    """Keyboard visibility sampled on a frame-index grid."""

    sampled_indices: list[int]
    sampled_flags: list[bool]
    n_frames: int
    dense: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.sampled_indices) != len(self.sampled_flags):
            raise ValueError("sampled indices/flags length mismatch")
        self.dense = self._interpolate()

    def _interpolate(self) -> np.ndarray:
        # Nearest-neighbor expansion of sampled flags to every frame; ties go
        # to the earlier sample.  No samples means no keyboard anywhere.
        out = np.zeros(self.n_frames, dtype=bool)
        if not self.sampled_indices:
            return out
        idx = np.asarray(self.sampled_indices)
        flags = np.asarray(self.sampled_flags)
        order = np.argsort(idx, kind="stable")
        idx, flags = idx[order], flags[order]
        for i in range(self.n_frames):
            pos = int(np.argmin(np.abs(idx - i)))  # argmin takes the first tie
            out[i] = flags[pos]
        return out

    def visible_at(self, frame_index: int) -> bool:
        return bool(self.dense[frame_index])

    def visible_spans(self) -> list[tuple[int, int]]:
        """Maximal [first, last] frame spans where the keyboard is visible."""
        spans = []
        start = None
        for i, v in enumerate(self.dense):
            if v and start is None:
                start = i
            elif not v and start is not None:
                spans.append((start, i - 1))
                start = None
        if start is not None:
            spans.append((start, self.n_frames - 1))
        return spans


def _window_sums(x: np.ndarray, k: int) -> np.ndarray:
    """Sums over every k x k window (valid positions only) via integral image."""
    c = np.cumsum(np.cumsum(x, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    return c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]


def ssim(a: LumaPlane, b: LumaPlane, window: int = 7,
         stabilizers: tuple[float, float] = (SsimConfig.c1, SsimConfig.c2)) -> float:
    """Mean SSIM over uniform sliding windows of two equally sized planes.

    Uses population statistics (divide by window pixel count) and float64
    integral images, so it agrees with a direct per-window evaluation to
    well below 1e-9.
    """
    if a.values.shape != b.values.shape:
        raise ValueError(f"plane dimensions differ: {a.values.shape} vs {b.values.shape}")
    h, w = a.values.shape
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if window > min(h, w):
        raise ValueError(f"window {window} exceeds min dimension of {h}x{w} plane")
    c1, c2 = stabilizers

    x = a.values.astype(np.float64)
    y = b.values.astype(np.float64)
    n = float(window * window)
    mx = _window_sums(x, window) / n
    my = _window_sums(y, window) / n
    vx = _window_sums(x * x, window) / n - mx * mx
    vy = _window_sums(y * y, window) / n - my * my
    cov = _window_sums(x * y, window) / n - mx * my
    s = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / (
        (mx * mx + my * my + c1) * (vx + vy + c2)
    )
    return float(s.mean())


def analysis_planes(rec: Recording, cfg: SegmentationConfig,
                    ssim_cfg: SsimConfig | None = None) -> list[LumaPlane]:
    """Luma planes prepared for signal computation (downsample + optional blur)."""
    factor = cfg.factor_for_width(rec.width)
    planes = []
    for f in rec.frames:
        p = rgb_to_luma(f)
        if factor > 1:
            p = downsample(p, factor)
        if cfg.pre_blur:
            p = box_blur(p, 1)
        planes.append(p)
    return planes


def compute_signal(rec: Recording, cfg: SegmentationConfig | None = None,
                   ssim_cfg: SsimConfig | None = None) -> SimilaritySignal:
    """Similarity score for every consecutive frame pair, in order.

    Per-frame window sums are computed once and shared between the two pairs
    a frame participates in; only the cross term is per-pair work.
    """
    cfg = cfg or SegmentationConfig()
    ssim_cfg = ssim_cfg or SsimConfig()
    if len(rec) < 2:
        raise ValueError(f"need at least 2 frames to compare, got {len(rec)}")
    planes = analysis_planes(rec, cfg)

    k = ssim_cfg.window
    c1, c2 = ssim_cfg.c1, ssim_cfg.c2
    n = float(k * k)
    pre = []
    for p in planes:
        x = p.values.astype(np.float64)
        m = _window_sums(x, k) / n
        v = _window_sums(x * x, k) / n - m * m
        pre.append((x, m, v))

    scores = np.empty(len(planes) - 1, dtype=np.float64)
    for i in range(len(planes) - 1):
        x, mx, vx = pre[i]
        y, my, vy = pre[i + 1]
        cov = _window_sums(x * y, k) / n - mx * my
        s = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / (
            (mx * mx + my * my + c1) * (vx + vy + c2)
        )
        scores[i] = s.mean()
    return SimilaritySignal(scores=scores, fps=rec.fps)


def detect_keyboard(ocr_text: str, ocr_num: str) -> bool:
    """True when the frame's OCR streams contain a keyboard key-row trigger."""
    letters = ocr_text.lower()
    if any(t in letters for t in KEY_ROW_TRIGGERS):
        return True
    return any(t in ocr_num for t in DIGIT_ROW_TRIGGERS)


def split_ocr_streams(texts: list[str]) -> tuple[str, str]:
    """Concatenate OCR item texts into a letter stream and a digit stream."""
    letters = []
    digits = []
    for t in texts:
        for ch in t:
            if ch.isalpha():
                letters.append(ch)
            elif ch.isdigit():
                digits.append(ch)
    return "".join(letters), "".join(digits)


def smooth_signal(scores: np.ndarray, window: int = 3) -> np.ndarray:
    """Moving median; kills single-sample compression flicker, keeps edges."""
    if window <= 1 or len(scores) == 0:
        return scores.copy()
    r = window // 2
    padded = np.pad(scores, r, mode="edge")
    view = np.lib.stride_tricks.sliding_window_view(padded, window)
    return np.median(view, axis=1)


def _low_runs(smoothed: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """Maximal [first, last] pair-index runs with score below threshold."""
    runs = []
    start = None
    for i, v in enumerate(smoothed):
        if v < threshold and start is None:
            start = i
        elif v >= threshold and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(smoothed) - 1))
    return runs


def _is_scroll_run(smoothed: np.ndarray, run: tuple[int, int],
                   cfg: SegmentationConfig, fps: float) -> bool:
    """Long drop with a predominantly rising recovery inside the run."""
    a, b = run
    min_pairs = max(2, int(round(cfg.scroll_min_s * fps)))
    if b - a + 1 < min_pairs:
        return False
    seg = smoothed[a : b + 1]
    lowest = int(np.argmin(seg))
    tail = seg[lowest:]
    if len(tail) < 2:
        return False
    deltas = np.diff(tail)
    rising = float(np.mean(deltas >= -1e-9))
    return rising >= cfg.scroll_rise_fraction


def segment_actions(signal: SimilaritySignal, kb: KeyboardFlags,
                    cfg: SegmentationConfig | None = None) -> list[ActionClip]:
    """Cut the similarity signal into disjoint, sorted, typed action clips.

    Order of precedence: keyboard-visible spans with enough drop/rise cycles
    become INPUT clips and consume every overlapping transition; remaining
    sub-threshold runs are classified scroll vs tap by shape; consecutive
    tap runs separated by a short steady plateau merge into one tap with the
    plateau recorded as its loading gap.
    """
    cfg = cfg or SegmentationConfig()
    if len(signal) == 0:
        raise ValueError("empty similarity signal")
    n_frames = len(signal.scores) + 1
    smoothed = smooth_signal(signal.scores, cfg.smooth_window)
    runs = _low_runs(smoothed, cfg.drop_threshold)

    clips: list[ActionClip] = []
    consumed = [False] * len(runs)

    # INPUT: keyboard spans with enough drop/rise cycles strictly inside.
    # Keystroke footprints are smaller than screen transitions, so cycles are
    # counted against their own (higher) threshold.
    for k0, k1 in kb.visible_spans():
        cycles = _low_runs(smoothed[k0:k1], cfg.input_drop_threshold)
        if len(cycles) < cfg.input_min_oscillations:
            continue
        start = max(k0 - 1, 0)
        end = min(k1 + 1, n_frames - 1)
        if start >= end:
            continue
        # Keyboard flags are sampled on a stride, so the open/close
        # transitions can straddle the flag boundary; snap the clip to cover
        # any transition run within a stride of it.
        slack = cfg.kb_sample_stride
        for a, b in runs:
            if a <= end + slack and b + 1 >= start - slack:
                start = min(start, a)
                end = max(end, min(b + 1, n_frames - 1))
        clips.append(ActionClip(kind=ActionKind.INPUT, start_frame=start, end_frame=end))
        for i, (a, b) in enumerate(runs):
            if a <= end and b + 1 >= start:  # run touches the clip's frame span
                consumed[i] = True

    # Classify the remaining runs.
    free = [r for i, r in enumerate(runs) if not consumed[i]]
    tap_runs: list[tuple[int, int]] = []
    for run in free:
        if _is_scroll_run(smoothed, run, cfg, signal.fps):
            clips.append(ActionClip(kind=ActionKind.SCROLL,
                                    start_frame=run[0], end_frame=run[1] + 1))
        else:
            tap_runs.append(run)

    # Merge tap-run pairs across a short steady plateau (slow loading).
    max_gap = int(round(cfg.t_s_max_s * signal.fps))
    i = 0
    while i < len(tap_runs):
        a1, b1 = tap_runs[i]
        merged = False
        if i + 1 < len(tap_runs):
            a2, b2 = tap_runs[i + 1]
            gap_pairs = a2 - b1 - 1
            gap_has_kb = any(kb.visible_at(f) for f in range(b1 + 1, a2 + 1))
            if 0 < gap_pairs <= max_gap and not gap_has_kb:
                clips.append(ActionClip(kind=ActionKind.TAP, start_frame=a1,
                                        end_frame=b2 + 1,
                                        steady_gap=(b1 + 1, a2)))
                i += 2
                merged = True
        if not merged:
            clips.append(ActionClip(kind=ActionKind.TAP, start_frame=a1, end_frame=b1 + 1))
            i += 1

    clips.sort(key=lambda c: c.start_frame)
    for prev, nxt in zip(clips, clips[1:]):
        if nxt.start_frame <= prev.end_frame:
            raise AssertionError(
                f"internal error: overlapping clips {prev} and {nxt}"
            )
    return clips


def signal_csv_lines(signal: SimilaritySignal) -> list[str]:
    """Diagnostic dump: one 'frame_index,score' line per pair."""
    lines = ["frame_index,score"]
    for i, s in enumerate(signal.scores):
        lines.append(f"{i},{s:.9f}")
    return lines


def build_keyboard_flags(rec: Recording, ocr_texts_at,
                         cfg: SegmentationConfig | None = None) -> KeyboardFlags:
    """Sample keyboard visibility every Nth frame using an OCR text source.

    ``ocr_texts_at(frame_index)`` must return the frame's OCR item texts.
    """
    cfg = cfg or SegmentationConfig()
    stride = cfg.kb_sample_stride
    indices = list(range(0, len(rec), stride))
    last = len(rec) - 1
    if indices and indices[-1] != last:
        indices.append(last)
    flags = []
    for i in indices:
        letters, digits = split_ocr_streams(ocr_texts_at(i))
        flags.append(detect_keyboard(letters, digits))
    return KeyboardFlags(sampled_indices=indices, sampled_flags=flags, n_frames=len(rec))
