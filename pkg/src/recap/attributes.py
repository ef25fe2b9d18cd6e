"""Per-clip action attributes: tap point, scroll offset, or typed text.

Tap localization is a pluggable contract (a 16-frame clip sample in, a
normalized point out).  The built-in realization looks for the transient
touch-indicator overlay: it diffs consecutive sampled frames, discards
change regions that persist into the clip's final frame, and keeps the
largest compact blob.  Scroll offsets come from matching horizontal strips
of each previous frame into the next frame under pure vertical translation;
typed text comes from diffing OCR text around the keyboard span.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from difflib import SequenceMatcher

import numpy as np
from scipy import ndimage

from recap.adapters import NoIndicatorFound, OcrAdapter, OcrItem, TapLocalizer
from recap.config import InputConfig, ScrollConfig, TapConfig
from recap.frames import Frame, Recording, rgb_to_luma
from recap.segmentation import (
    DIGIT_ROW_TRIGGERS,
    KEY_ROW_TRIGGERS,
    ActionClip,
    ActionKind,
    KeyboardFlags,
)

SAMPLE_FRAMES = 16
SAMPLE_STRIDE = 5


@dataclass(frozen=True)
class TapPoint:
    """Normalized coordinates relative to frame width/height."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"tap point outside [0,1]^2: ({self.x}, {self.y})")

    def to_pixels(self, width: int, height: int) -> tuple[float, float]:
        return self.x * width, self.y * height


class ScrollDirection(enum.Enum):
    UP = "UP"
    DOWN = "DOWN"


@dataclass
class ScrollOffset:
    """Signed scroll distance; positive means downward."""

    distance_px: float
    pair_offsets: list[float] = field(default_factory=list)
    rejected_pairs: list[int] = field(default_factory=list)  # clip-relative pair indices

    @property
    def direction(self) -> ScrollDirection:
        return ScrollDirection.DOWN if self.distance_px > 0 else ScrollDirection.UP


@dataclass(frozen=True)
class InputDelta:
    """Text that appeared between the keyboard-open and keyboard-close frames."""

    text: str
    before_frame: int
    after_frame: int


@dataclass(frozen=True)
class ClipSample:
    """Sixteen frame indices uniformly drawn from a clip."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.indices) != SAMPLE_FRAMES:
            raise ValueError(f"sample needs {SAMPLE_FRAMES} indices, got {len(self.indices)}")


def sample_clip(clip: ActionClip, rec: Recording) -> ClipSample:
    """Sixteen indices at five-frame spacing, or a nearest-neighbor stretch
    of the clip when it is shorter than the full sampling span."""
    if clip.end_frame >= len(rec):
        raise ValueError(f"clip {clip} extends past recording of {len(rec)} frames")
    length = clip.n_frames
    if length >= SAMPLE_FRAMES * SAMPLE_STRIDE:
        idx = [clip.start_frame + SAMPLE_STRIDE * i for i in range(SAMPLE_FRAMES)]
    else:
        idx = [clip.start_frame + (i * length) // SAMPLE_FRAMES
               for i in range(SAMPLE_FRAMES)]
    return ClipSample(indices=tuple(idx))


# ---------------------------------------------------------------------------
# Tap localization

class IndicatorLocalizer:
    """Finds the transient touch-indicator blob in a sampled clip.

    An indicator overlay appears and later disappears in place, so its
    change blobs recur at one site in pairs at least two apart; transition
    debris moves (co-locating only across consecutive pairs at best) and
    late-loading content appears once and persists.  Recurrent sites
    therefore win outright, and the persistent-change mask filters only the
    one-off blobs.
    """

    def __init__(self, cfg: TapConfig | None = None):
        self.cfg = cfg or TapConfig()

    def _candidates(self, lumas: list[np.ndarray]) -> list[tuple]:
        cfg = self.cfg
        h, w = lumas[0].shape
        max_bbox_area = cfg.max_blob_area_fraction * h * w

        # Changes that persist into the final frame are the screen transition
        # itself (or late resource loads), not the indicator overlay.
        persistent = np.abs(lumas[-1] - lumas[0]) > cfg.diff_threshold
        if cfg.mask_dilate_px > 0:
            persistent = ndimage.binary_dilation(
                persistent, structure=np.ones((3, 3), bool),
                iterations=cfg.mask_dilate_px)

        eight = np.ones((3, 3), dtype=bool)
        found = []  # (pair_idx, npix, cy, cx, top, left, mask_ok)
        for p in range(len(lumas) - 1):
            diff = np.abs(lumas[p + 1] - lumas[p]) > cfg.diff_threshold
            if not diff.any():
                continue
            labels, count = ndimage.label(diff, structure=eight)
            if count == 0:
                continue
            sizes = ndimage.sum_labels(diff, labels, index=range(1, count + 1))
            substantial = sizes[sizes >= cfg.min_blob_pixels]
            if substantial.sum() > cfg.max_pair_change_fraction * h * w:
                continue  # a screen transition, not an overlay appearing
            for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
                npix = int(sizes[lab - 1])
                if npix < cfg.min_blob_pixels:
                    continue
                blob = labels[sl] == lab
                bh = sl[0].stop - sl[0].start
                bw = sl[1].stop - sl[1].start
                if bh * bw > max_bbox_area:
                    continue
                if npix / (bh * bw) < cfg.min_fill_ratio:
                    continue
                overlap = int((blob & persistent[sl]).sum())
                mask_ok = overlap / npix < cfg.mask_overlap_fraction
                ys, xs = np.nonzero(blob)
                found.append((p, npix, float(ys.mean()) + sl[0].start,
                              float(xs.mean()) + sl[1].start,
                              sl[0].start, sl[1].start, mask_ok))
        return found

    def locate(self, frames: list[Frame]) -> tuple[float, float]:
        if len(frames) < 2:
            raise NoIndicatorFound("not enough frames to diff")
        cfg = self.cfg
        lumas = [rgb_to_luma(f).values.astype(np.int16) for f in frames]
        h, w = lumas[0].shape
        candidates = self._candidates(lumas)

        # Group by site; each pair counts once per site.
        groups: list[dict] = []
        for p, npix, cy, cx, top, left, mask_ok in candidates:
            entry = (npix, -p, -top, -left, cy, cx)
            for g in groups:
                if abs(cy - g["cy"]) <= cfg.group_radius_px and \
                        abs(cx - g["cx"]) <= cfg.group_radius_px:
                    g["pairs"].add(p)
                    g["mask_ok"] = g["mask_ok"] or mask_ok
                    if entry > g["best"]:
                        g["best"] = entry
                        g["cy"], g["cx"] = cy, cx
                    break
            else:
                groups.append({"cy": cy, "cx": cx, "pairs": {p},
                               "mask_ok": mask_ok, "best": entry})

        def recurrent(g: dict) -> bool:
            pairs = sorted(g["pairs"])
            return pairs[-1] - pairs[0] >= 2

        eligible = [g for g in groups if recurrent(g) or g["mask_ok"]]
        if not eligible:
            raise NoIndicatorFound("no qualifying indicator blob in any sampled pair")
        best = max(eligible, key=lambda g: (recurrent(g), g["best"]))
        _, _, _, _, cy, cx = best["best"]
        return (cx + 0.5) / w, (cy + 0.5) / h


def infer_tap_location(sample: ClipSample, rec: Recording,
                       localizer: TapLocalizer | None = None,
                       cfg: TapConfig | None = None) -> TapPoint:
    """Normalized tap point for a sampled clip; raises NoIndicatorFound."""
    frames = [rec.frames[i] for i in sample.indices]
    loc = localizer if localizer is not None else IndicatorLocalizer(cfg)
    x, y = loc.locate(frames)
    return TapPoint(x=x, y=y)


# ---------------------------------------------------------------------------
# Scroll offset via strip matching

def _strip_bounds(height: int, strips: int) -> list[tuple[int, int]]:
    edges = [round(k * height / strips) for k in range(strips + 1)]
    return [(edges[k], edges[k + 1]) for k in range(strips)]


def match_strips(prev: np.ndarray, cur: np.ndarray,
                 cfg: ScrollConfig) -> list[tuple[float, float]]:
    """Best vertical displacement per strip of ``prev`` inside ``cur``.

    Returns one (offset, correlation) per strip, where offset is positive
    when the viewport moved down (content moved up).  Strips without texture
    or without a physically placeable candidate get correlation 0.
    """
    h, w = prev.shape
    search = int(round(h * cfg.search_fraction))
    p = prev.astype(np.float64)
    c = cur.astype(np.float64)

    # Row-dot matrix: D[i, j] = prev_row_i . cur_row_j.  Every strip/offset
    # cross term is a diagonal range sum of D.
    D = p @ c.T
    s_prev = p.sum(axis=1)
    s_cur = c.sum(axis=1)
    q_prev = (p * p).sum(axis=1)
    q_cur = (c * c).sum(axis=1)
    cs_prev = np.concatenate([[0.0], np.cumsum(s_prev)])
    cs_cur = np.concatenate([[0.0], np.cumsum(s_cur)])
    cq_prev = np.concatenate([[0.0], np.cumsum(q_prev)])
    cq_cur = np.concatenate([[0.0], np.cumsum(q_cur)])

    bounds = _strip_bounds(h, cfg.strips)
    starts = np.array([a for a, _ in bounds])
    heights = np.array([b - a for a, b in bounds])

    ds = np.arange(-search, search + 1)
    ncc = np.full((cfg.strips, len(ds)), -np.inf)
    eps = 1e-9
    for di, d in enumerate(ds):
        diag = np.diagonal(D, offset=int(d))
        cdiag = np.concatenate([[0.0], np.cumsum(diag)])
        for k in range(cfg.strips):
            a, hs = int(starts[k]), int(heights[k])
            m = a + d
            if m < 0 or m + hs > h:
                continue
            base = a if d >= 0 else a + d  # index of D[a, a+d] on this diagonal
            x = cdiag[base + hs] - cdiag[base]
            n = hs * w
            ts = cs_prev[a + hs] - cs_prev[a]
            tq = cq_prev[a + hs] - cq_prev[a]
            cs = cs_cur[m + hs] - cs_cur[m]
            cq = cq_cur[m + hs] - cq_cur[m]
            tvar = tq - ts * ts / n
            cvar = cq - cs * cs / n
            if tvar <= eps or cvar <= eps:
                continue  # untextured strip: unmatchable
            ncc[k, di] = (x - ts * cs / n) / np.sqrt(tvar * cvar)

    out = []
    for k in range(cfg.strips):
        row = ncc[k]
        best = row.max()
        if not np.isfinite(best):
            out.append((0.0, 0.0))
            continue
        tied = np.nonzero(row >= best - 1e-12)[0]
        # Deterministic tie-break: smallest |d|, then smallest d.
        d = min((int(ds[i]) for i in tied), key=lambda v: (abs(v), v))
        out.append((float(-d), float(best)))
    return out


def infer_scroll_offset(clip: ActionClip, rec: Recording, K: int | None = None,
                        cfg: ScrollConfig | None = None) -> ScrollOffset:
    """Scroll distance for a clip: sum over pairs of the median accepted
    strip displacement; direction from the sign of the total."""
    cfg = cfg or ScrollConfig()
    if K is not None:
        if K < 2:
            raise ValueError(f"need at least 2 strips, got {K}")
        cfg = dataclasses.replace(cfg, strips=K)
    if clip.end_frame >= len(rec):
        raise ValueError(f"clip {clip} extends past recording of {len(rec)} frames")

    lumas = [rgb_to_luma(rec.frames[i]).values
             for i in range(clip.start_frame, clip.end_frame + 1)]
    matches = [match_strips(lumas[i], lumas[i + 1], cfg)
               for i in range(len(lumas) - 1)]
    n_pairs = len(matches)

    # Fixed chrome: a strip that best-matches zero displacement with very
    # high correlation in nearly every pair (status bars, nav bars).
    chrome = []
    for k in range(cfg.strips):
        zero_hits = sum(1 for m in matches
                        if m[k][0] == 0.0 and m[k][1] > cfg.chrome_correlation)
        chrome.append(n_pairs > 0 and zero_hits / n_pairs >= cfg.chrome_pair_fraction)

    pair_offsets: list[float] = []
    rejected: list[int] = []
    for pi, m in enumerate(matches):
        accepted = [off for k, (off, corr) in enumerate(m)
                    if not chrome[k] and corr >= cfg.min_correlation]
        if not accepted:
            pair_offsets.append(0.0)
            rejected.append(pi)
        else:
            pair_offsets.append(float(np.median(accepted)))
    return ScrollOffset(distance_px=float(sum(pair_offsets)),
                        pair_offsets=pair_offsets, rejected_pairs=rejected)


def scroll_confirmed(offset: ScrollOffset, cfg: ScrollConfig | None = None) -> bool:
    """Whether strip matching corroborates a consistent vertical motion.

    Segmentation marks scroll candidates by signal shape alone; animated
    content can fake that shape, so a clip is only kept as a scroll when
    enough pairs matched and the total movement is non-trivial.
    """
    cfg = cfg or ScrollConfig()
    n = len(offset.pair_offsets)
    if n == 0:
        return False
    accepted = n - len(offset.rejected_pairs)
    if accepted / n < cfg.confirm_pair_fraction:
        return False
    return abs(offset.distance_px) >= cfg.confirm_min_px


# ---------------------------------------------------------------------------
# Input text via OCR diff

def lcs_diff(before: str, after: str) -> str:
    """Concatenation of the parts of ``after`` left unmatched by the
    longest-contiguous-matching-block alignment; whitespace-trimmed."""
    sm = SequenceMatcher(None, before, after, autojunk=False)
    pieces = []
    pos = 0
    for _, b_start, size in sm.get_matching_blocks():
        if b_start > pos:
            pieces.append(after[pos:b_start])
        pos = b_start + size
    return "".join(pieces).strip()


def ocr_frame(frame: Frame, adapter: OcrAdapter) -> list[OcrItem]:
    """All text items the OCR adapter reads from one frame."""
    return adapter.ocr(frame)


def keyboard_band(items: list[OcrItem], frame_height: int) -> tuple[float, float]:
    """Vertical band covered by the keyboard's key rows.

    The tightest band covering every trigger-bearing row; when no row can be
    localized, the conventional lower 45% of the screen.
    """
    tops, bottoms = [], []
    for item in items:
        letters = "".join(ch for ch in item.text.lower() if ch.isalpha())
        digits = "".join(ch for ch in item.text if ch.isdigit())
        if any(t in letters for t in KEY_ROW_TRIGGERS) or \
           any(t in digits for t in DIGIT_ROW_TRIGGERS):
            tops.append(item.box[1])
            bottoms.append(item.box[1] + item.box[3])
    if not tops:
        return 0.55 * frame_height, float(frame_height)
    return float(min(tops)), float(max(bottoms))


def strip_keyboard_text(items: list[OcrItem],
                        band: tuple[float, float]) -> list[OcrItem]:
    """Drop items whose box center lies inside the keyboard band."""
    lo, hi = band
    out = []
    for item in items:
        cy = item.box[1] + item.box[3] / 2.0
        if lo <= cy <= hi:
            continue
        out.append(item)
    return out


def linearize_ocr(items: list[OcrItem]) -> str:
    """Join item texts top-to-bottom then left-to-right.

    Items are grouped into rows whenever their tops lie within half the
    median box height of the row's first item; rows and items are joined
    with single spaces.
    """
    if not items:
        return ""
    med_h = float(np.median([it.box[3] for it in items]))
    tol = 0.5 * med_h
    by_top = sorted(items, key=lambda it: (it.box[1], it.box[0]))
    rows: list[list[OcrItem]] = []
    for it in by_top:
        if rows and it.box[1] - rows[-1][0].box[1] <= tol:
            rows[-1].append(it)
        else:
            rows.append([it])
    parts = []
    for row in rows:
        parts.extend(it.text for it in sorted(row, key=lambda it: it.box[0]))
    return " ".join(parts)


def infer_input_text(clip: ActionClip, rec: Recording, adapter: OcrAdapter,
                     kb: KeyboardFlags, cfg: InputConfig | None = None) -> InputDelta:
    """Typed text: the OCR diff between a frame just before the keyboard
    appears and a frame just after it disappears (each with a stability
    margin), with keyboard rows stripped if still visible."""
    if clip.kind is not ActionKind.INPUT:
        raise ValueError(f"expected an INPUT clip, got {clip.kind}")
    cfg = cfg or InputConfig()
    spans = [s for s in kb.visible_spans()
             if s[0] <= clip.end_frame and s[1] >= clip.start_frame]
    if not spans:
        raise ValueError(f"no keyboard span overlaps clip {clip}")
    k0 = min(s[0] for s in spans)
    k1 = max(s[1] for s in spans)
    before = max(0, k0 - 1 - cfg.frame_margin)
    after = min(len(rec) - 1, k1 + 1 + cfg.frame_margin)

    def text_at(index: int) -> str:
        items = adapter.ocr(rec.frames[index])
        if kb.visible_at(index):
            items = strip_keyboard_text(items, keyboard_band(items, rec.height))
        return linearize_ocr(items)

    return InputDelta(text=lcs_diff(text_at(before), text_at(after)),
                      before_frame=before, after_frame=after)
