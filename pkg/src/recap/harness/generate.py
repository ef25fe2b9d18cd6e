"""Deterministic rendering of scripted sessions into recordings.

Every instantaneous screen swap is rendered with one 50% cross-fade frame
(as video encoders smear real transitions) so transitions span two frame
pairs and survive the signal's median smoothing.  Keystrokes render a key
flash plus a large moving key-preview popup over three frames for the same
reason.  The ground-truth intervals in the trace cover exactly the visible
transition frames.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from recap.adapters import ElementAnnotation, MemoryAnnotations, OcrItem
from recap.frames import Recording, recording_from_arrays, write_recording
from recap.harness import glyphs
from recap.harness.script import (
    NAV_BAR_H,
    STATUS_BAR_H,
    ElementSpec,
    InputAction,
    ScreenSpec,
    ScrollAction,
    SessionScript,
    TapAction,
)
from recap.harness.trace import GroundTruthTrace, TraceAction
from recap.segmentation import ActionKind

INDICATOR_FRAMES = 6
KEY_EVENT_FRAMES = 3
KEYSTROKE_SPACING = 8

_BG = (250, 250, 252)
_BAR_BG = (44, 52, 64)
_BAR_FG = (235, 238, 242)
_INK = (38, 40, 46)
_MUTED = (120, 124, 132)
_BTN_BG = (205, 211, 222)
_BTN_BORDER = (88, 94, 108)
_ACCENT = (64, 106, 196)
_KB_BG = (214, 218, 224)
_KEY_BG = (246, 247, 249)
_SUGGEST_BG = (229, 232, 236)

_LETTER_ROWS = ("QWERTYUIOP", "ASDFGHJKL", "ZXCVBNM")
_DIGIT_ROWS = ("123", "456", "789", "0")


def scroll_schedule(distance_px: int, min_pairs: int = 5, max_pairs: int = 18,
                    min_shift: int = 8) -> list[int]:
    """Decaying per-pair shifts summing exactly to the requested distance."""
    mag = abs(int(distance_px))
    if mag < 4:
        raise ValueError(f"scroll distance too small: {distance_px}")
    n = int(np.clip(round(mag / 34), min_pairs, max_pairs))
    n = max(2, min(n, mag))
    lo = max(1, min(min_shift, mag // n))
    w = 0.82 ** np.arange(n)
    w = w / w.sum()
    shifts = np.maximum(lo, np.round(w * mag).astype(int))
    order = list(np.argsort(-shifts, kind="stable"))
    resid = mag - int(shifts.sum())
    i = 0
    while resid != 0:
        k = order[i % n]
        step = 1 if resid > 0 else -1
        if shifts[k] + step >= lo:
            shifts[k] += step
            resid -= step
        i += 1
        if i > 10_000:  # pragma: no cover
            raise RuntimeError("scroll schedule failed to converge")
    sign = 1 if distance_px > 0 else -1
    return [sign * int(s) for s in shifts]


def _fill(canvas: np.ndarray, box: tuple[int, int, int, int],
          color: tuple[int, int, int]) -> None:
    x, y, w, h = box
    canvas[y:y + h, x:x + w] = color


def _border(canvas: np.ndarray, box: tuple[int, int, int, int],
            color: tuple[int, int, int], t: int = 2) -> None:
    x, y, w, h = box
    canvas[y:y + t, x:x + w] = color
    canvas[y + h - t:y + h, x:x + w] = color
    canvas[y:y + h, x:x + t] = color
    canvas[y:y + h, x + w - t:x + w] = color


def _circle_mask(h: int, w: int, cy: float, cx: float, r: float) -> np.ndarray:
    yy, xx = np.ogrid[:h, :w]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r


def _alpha_blend(canvas: np.ndarray, mask: np.ndarray,
                 color: tuple[int, int, int], alpha: float) -> None:
    a = int(round(alpha * 256))
    region = canvas[mask].astype(np.uint16)
    col = np.array(color, dtype=np.uint16)
    canvas[mask] = ((region * (256 - a) + col * a + 128) >> 8).astype(np.uint8)


def _center_text(canvas: np.ndarray, box: tuple[int, int, int, int], text: str,
                 color: tuple[int, int, int], scale: int = 2) -> None:
    x, y, w, h = box
    tw = glyphs.text_width(text, scale)
    th = glyphs.text_height(scale)
    glyphs.draw_text(canvas, x + max(2, (w - tw) // 2), y + max(1, (h - th) // 2),
                     text, color, scale)


def _draw_element(canvas: np.ndarray, el: ElementSpec, box: tuple[int, int, int, int],
                  text: str | None, text_muted: bool) -> None:
    x, y, w, h = box
    ink = _MUTED if text_muted else _INK
    if el.klass in ("button", "toggle button", "spinner"):
        _fill(canvas, box, _BTN_BG)
        _border(canvas, box, _BTN_BORDER)
        if text:
            _center_text(canvas, box, text, _INK)
        if el.klass == "spinner":
            canvas[y + h // 2 - 3: y + h // 2 + 3, x + w - 14: x + w - 6] = _BTN_BORDER
    elif el.klass == "edittext":
        _fill(canvas, box, (255, 255, 255))
        _border(canvas, box, _MUTED)
        if text:
            glyphs.draw_text(canvas, x + 8, y + (h - glyphs.text_height(2)) // 2,
                             text, ink, 2)
    elif el.klass in ("textview", "chronometer"):
        if text:
            glyphs.draw_text(canvas, x, y + max(0, (h - glyphs.text_height(2)) // 2),
                             text, ink, 2)
    elif el.klass in ("checkbox", "radio button"):
        _border(canvas, box, _BTN_BORDER)
        if el.klass == "radio button":
            m = _circle_mask(canvas.shape[0], canvas.shape[1],
                             y + h / 2, x + w / 2, min(w, h) / 4)
            canvas[m] = _BTN_BORDER
        else:
            canvas[y + 7: y + h - 7, x + 7: x + w - 7] = _ACCENT
    elif el.klass == "switch":
        _fill(canvas, box, (186, 192, 202))
        _border(canvas, box, _BTN_BORDER, 1)
        canvas[y + 3: y + h - 3, x + w - h + 3: x + w - 3] = _ACCENT
    elif el.klass == "icon":
        m = _circle_mask(canvas.shape[0], canvas.shape[1],
                         y + h / 2, x + w / 2, min(w, h) / 2 - 1)
        canvas[m] = _ACCENT
        canvas[y + h // 2 - 4: y + h // 2 + 4, x + w // 2 - 4: x + w // 2 + 4] = (255, 255, 255)
    elif el.klass == "imageview":
        _fill(canvas, box, (226, 228, 233))
        for d in range(-h, w, 12):
            for r in range(h):
                c = d + r
                if 0 <= c < w:
                    canvas[y + r, x + c] = (184, 188, 196)
        _border(canvas, box, (200, 203, 210), 1)


@dataclass(frozen=True)
class _State:
    """Everything that determines a rendered screen's pixels."""

    screen_id: str
    offset: int
    fields: tuple[tuple[str, str], ...] = ()   # element id -> current content
    hidden: tuple[str, ...] = ()               # elements not yet loaded
    keyboard: str | None = None                # None | "letters" | "digits"
    mangle_spaces: tuple[str, ...] = ()        # elements OCR'd without spaces


class _Renderer:
    def __init__(self, script: SessionScript):
        self.script = script
        self._content_cache: dict = {}
        self._state_cache: dict = {}

    # -- content canvas (per screen + field contents + hidden set) ----------

    def _content(self, state: _State):
        key = (state.screen_id, state.fields, state.hidden)
        hit = self._content_cache.get(key)
        if hit is not None:
            return hit
        script = self.script
        screen = script.screen(state.screen_id)
        ch = screen.content_height or script.view_height
        canvas = np.empty((ch, script.width, 3), dtype=np.uint8)
        canvas[:] = _BG
        fields = dict(state.fields)
        items: list[tuple[ElementSpec, str | None, bool]] = []
        for el in screen.elements:
            if el.id in state.hidden:
                continue
            if el.klass == "edittext":
                content = fields.get(el.id, "")
                shown = content if content else (el.text or "")
                muted = not content
                items.append((el, shown or None, muted))
            else:
                items.append((el, el.text, False))
            _draw_element(canvas, el, el.box, items[-1][1], items[-1][2])
        self._content_cache[key] = (canvas, items)
        return canvas, items

    # -- full frame + annotations (cached per state) -------------------------

    def frame(self, state: _State):
        hit = self._state_cache.get(state)
        if hit is not None:
            return hit
        script = self.script
        w, h = script.width, script.height
        view_h = script.view_height
        content, items = self._content(state)
        canvas = np.empty((h, w, 3), dtype=np.uint8)
        canvas[STATUS_BAR_H: STATUS_BAR_H + view_h] = \
            content[state.offset: state.offset + view_h]

        # Chrome: status bar and nav bar (nav hidden under the keyboard).
        canvas[:STATUS_BAR_H] = _BAR_BG
        glyphs.draw_text(canvas, 16, (STATUS_BAR_H - glyphs.text_height(2)) // 2,
                         "Memo", _BAR_FG, 2)
        clock = "10:47"
        glyphs.draw_text(canvas, w - glyphs.text_width(clock, 2) - 16,
                         (STATUS_BAR_H - glyphs.text_height(2)) // 2,
                         clock, _BAR_FG, 2)
        ocr: list[OcrItem] = [
            OcrItem("Memo", (16, 20, glyphs.text_width("Memo", 2), 14), 0.99),
            OcrItem(clock, (w - glyphs.text_width(clock, 2) - 16, 20,
                            glyphs.text_width(clock, 2), 14), 0.99),
        ]
        kb_top = h - round(0.45 * h)
        if state.keyboard is None:
            canvas[h - NAV_BAR_H:] = _BAR_BG
            for i in range(3):
                cx = w // 2 + (i - 1) * 60
                m = _circle_mask(h, w, h - NAV_BAR_H / 2, cx, 10)
                canvas[m] = _BAR_FG

        elements: list[ElementAnnotation] = []
        visible_limit = kb_top if state.keyboard is not None else STATUS_BAR_H + view_h
        mangled = set(state.mangle_spaces)
        for el, shown, muted in items:
            vy = STATUS_BAR_H + el.box[1] - state.offset
            if vy < STATUS_BAR_H or vy + el.box[3] > visible_limit:
                continue
            vbox = (el.box[0], vy, el.box[2], el.box[3])
            elements.append(ElementAnnotation(
                klass=el.klass, box=vbox, text=shown,
                text_confid=el.text_confid if shown else None,
                caption=el.caption, caption_confid=el.caption_confid
                if el.caption else None))
            if shown:
                text = shown.replace(" ", "") if el.id in mangled else shown
                conf = 0.96 if el.klass == "edittext" and dict(state.fields).get(el.id) \
                    else el.text_confid
                ocr.append(OcrItem(text, vbox, conf))

        if state.keyboard is not None:
            self._draw_keyboard(canvas, kb_top, state.keyboard, ocr)

        result = (canvas, ocr, elements)
        self._state_cache[state] = result
        return result

    def _draw_keyboard(self, canvas: np.ndarray, kb_top: int, layout: str,
                       ocr: list[OcrItem]) -> None:
        h, w = canvas.shape[:2]
        canvas[kb_top:] = _KB_BG
        canvas[kb_top: kb_top + 52] = _SUGGEST_BG
        rows = _LETTER_ROWS if layout == "letters" else _DIGIT_ROWS
        y = kb_top + 52
        row_h = (h - y) // len(rows)
        for row in rows:
            key_w = w // max(len(row), 4)
            x0 = (w - key_w * len(row)) // 2
            for i, ch in enumerate(row):
                box = (x0 + i * key_w + 2, y + 3, key_w - 4, row_h - 6)
                _fill(canvas, box, _KEY_BG)
                _border(canvas, box, (150, 155, 165), 1)
                _center_text(canvas, box, ch, _INK, 2)
            ocr.append(OcrItem(row, (x0, y, key_w * len(row), row_h), 0.95))
            y += row_h

    def key_box(self, layout: str, ch: str) -> tuple[int, int, int, int]:
        """Viewport box of one key (for flash/popup placement)."""
        script = self.script
        h, w = script.height, script.width
        kb_top = h - round(0.45 * h)
        rows = _LETTER_ROWS if layout == "letters" else _DIGIT_ROWS
        y = kb_top + 52
        row_h = (h - y) // len(rows)
        up = ch.upper()
        for row in rows:
            key_w = w // max(len(row), 4)
            x0 = (w - key_w * len(row)) // 2
            if up in row:
                i = row.index(up)
                return (x0 + i * key_w + 2, y + 3, key_w - 4, row_h - 6)
            y += row_h
        return (w // 2 - 20, y - row_h + 3, 40, row_h - 6)  # unknown keys: center


def _keystroke_overlay(base: np.ndarray, renderer: _Renderer, layout: str,
                       ch: str, stage: int) -> np.ndarray:
    """Key flash plus a large preview popup; the popup moves and rescales
    between the two visible stages so every event pair differs structurally."""
    canvas = base.copy()
    kx, ky, kw, kh = renderer.key_box(layout, ch)
    if stage == 0:
        canvas[ky:ky + kh, kx:kx + kw] = 255 - canvas[ky:ky + kh, kx:kx + kw]
    pw, ph = 110, 130
    px = int(np.clip(kx + kw // 2 - pw // 2, 8, base.shape[1] - pw - 8))
    py = renderer.script.height - round(0.45 * renderer.script.height) - ph - 10
    py -= 10 * stage
    _fill(canvas, (px, py, pw, ph), (252, 252, 254))
    _border(canvas, (px, py, pw, ph), _BTN_BORDER, 3)
    _center_text(canvas, (px, py, pw, ph), ch.upper(), _INK, 8 - stage)
    return canvas


def _cursor_mask(h: int, w: int, tip_y: int, tip_x: int) -> np.ndarray:
    """Classic pointer arrow with its tip at the given point."""
    mask = np.zeros((h, w), dtype=bool)
    for r in range(18):
        if r < 13:
            span = max(1, round(r * 0.66))
        else:
            span = max(1, 9 - 2 * (r - 13))
        y = tip_y + r
        if 0 <= y < h:
            x0 = max(0, tip_x)
            x1 = min(w, tip_x + span)
            if x1 > x0:
                mask[y, x0:x1] = True
    return mask


def _draw_indicator(base: np.ndarray, style: str, cx: float, cy: float,
                    step: int) -> np.ndarray:
    canvas = base.copy()
    h, w = canvas.shape[:2]
    if style == "default":
        alpha = 0.5 * (1.0 - step / INDICATOR_FRAMES)
        _alpha_blend(canvas, _circle_mask(h, w, cy, cx, 26), (52, 52, 56), alpha)
    elif style == "cursor":
        mask = _cursor_mask(h, w, int(cy), int(cx))
        edge = np.zeros_like(mask)
        edge[1:, :] |= mask[:-1, :]
        edge[:, 1:] |= mask[:, :-1]
        edge[:-1, :] |= mask[1:, :]
        edge[:, :-1] |= mask[:, 1:]
        canvas[edge & ~mask] = (248, 248, 248)
        canvas[mask] = (28, 28, 32)
    else:  # custom: solid ring
        yy, xx = np.ogrid[:h, :w]
        d2 = (yy - cy) ** 2 + (xx - cx) ** 2
        ring = (d2 <= 30 * 30) & (d2 >= 22 * 22)
        canvas[ring] = (232, 120, 36)
    return canvas


def _blend(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return ((a.astype(np.uint16) + b.astype(np.uint16)) >> 1).astype(np.uint8)


def _push_frames(old: np.ndarray, new: np.ndarray, steps: int = 2) -> list[np.ndarray]:
    """Horizontal push transition of the content area (new screen enters
    from the right); status and nav chrome stay fixed, as platform activity
    changes animate."""
    h, w = old.shape[:2]
    top, bottom = STATUS_BAR_H, h - NAV_BAR_H
    out = []
    for k in range(1, steps + 1):
        s = k * w // (steps + 1)
        canvas = old.copy()
        canvas[top:bottom, : w - s] = old[top:bottom, s:]
        canvas[top:bottom, w - s:] = new[top:bottom, :s]
        out.append(canvas)
    return out


def _keyboard_slide(content: np.ndarray, kb_frame: np.ndarray, kb_top: int,
                    dy: int) -> np.ndarray:
    """The keyboard band partially risen: content behind, band shifted down."""
    canvas = content.copy()
    h = canvas.shape[0]
    band = kb_frame[kb_top:]
    canvas[kb_top + dy:] = band[: h - kb_top - dy]
    return canvas


@dataclass
class GeneratedRecording:
    recording: Recording
    trace: GroundTruthTrace
    annotations: MemoryAnnotations
    script: SessionScript

    def write(self, out_dir: str | Path) -> Path:
        root = Path(out_dir)
        arrays = [f.pixels for f in self.recording.frames]
        write_recording(arrays, self.recording.fps, root)
        self.trace.write(root / "trace.json")
        for i in range(len(arrays)):
            stem = root / f"frame_{i + 1:06d}"
            ocr = [{"text": it.text, "box": list(it.box), "confidence": it.confidence}
                   for it in self.annotations.ocr_items(self.recording.frames[i])]
            els = []
            for a in self.annotations.element_annotations(self.recording.frames[i]):
                entry: dict = {"class": a.klass, "box": list(a.box)}
                if a.text is not None:
                    entry["text"] = a.text
                    entry["text_confid"] = a.text_confid
                if a.caption is not None:
                    entry["caption"] = a.caption
                    entry["caption_confid"] = a.caption_confid
                els.append(entry)
            stem.with_name(stem.name + ".ocr.json").write_text(
                json.dumps(ocr, sort_keys=True) + "\n")
            stem.with_name(stem.name + ".elements.json").write_text(
                json.dumps(els, sort_keys=True) + "\n")
        return root


def generate_recording(script: SessionScript, seed: int = 0,
                       noise_sigma: float | None = None) -> GeneratedRecording:
    """Render a script into frames plus trace and annotation fixtures.

    Rendering is fully deterministic; the seed only drives the optional
    additive luminance noise (same noise on all three channels).
    """
    renderer = _Renderer(script)
    fps = script.fps
    frames: list[np.ndarray] = []
    ocr_ann: dict[int, list[OcrItem]] = {}
    el_ann: dict[int, list[ElementAnnotation]] = {}
    trace_actions: list[TraceAction] = []

    def emit(state: _State, n: int = 1, pixels: np.ndarray | None = None) -> None:
        canvas, ocr, els = renderer.frame(state)
        arr = pixels if pixels is not None else canvas
        for _ in range(n):
            idx = len(frames)
            frames.append(arr)
            ocr_ann[idx] = ocr
            el_ann[idx] = els

    state = _State(screen_id=script.start_screen, offset=script.start_offset)
    lead = max(2, round(script.lead_in_s * fps))
    gap = max(2, round(script.gap_s * fps))
    tail = max(2, round(script.tail_s * fps))
    emit(state, lead)

    for action in script.actions:
        if isinstance(action, TapAction):
            state = _emit_tap(script, renderer, state, action, emit, frames,
                              trace_actions)
        elif isinstance(action, ScrollAction):
            state = _emit_scroll(script, renderer, state, action, emit, frames,
                                 trace_actions)
        else:
            state = _emit_input(script, renderer, state, action, emit, frames,
                                trace_actions)
        emit(state, gap)
    emit(state, tail)

    sigma = script.noise_sigma if noise_sigma is None else noise_sigma
    if sigma > 0:
        rng = np.random.default_rng(seed)
        h, w = script.height, script.width
        noisy = []
        for arr in frames:
            noise = np.round(rng.normal(0.0, sigma, size=(h, w, 1)))
            noisy.append(np.clip(arr.astype(np.int16) + noise, 0, 255).astype(np.uint8))
        frames = noisy

    recording = recording_from_arrays(frames, fps)
    trace = GroundTruthTrace(fps=fps, width=script.width, height=script.height,
                             frame_count=len(frames),
                             indicator_style=script.indicator_style,
                             actions=trace_actions)
    return GeneratedRecording(recording=recording, trace=trace,
                              annotations=MemoryAnnotations(ocr_ann, el_ann),
                              script=script)


def _element_view_box(script: SessionScript, state: _State,
                      element_id: str) -> tuple[int, int, int, int]:
    screen = script.screen(state.screen_id)
    for el in screen.elements:
        if el.id == element_id:
            x, y, w, h = el.box
            return (x, STATUS_BAR_H + y - state.offset, w, h)
    raise KeyError(element_id)


def _emit_indicator(script, renderer, state: _State, cx: float, cy: float,
                    emit) -> None:
    """Indicator animation plus one clean frame: the overlay lifts before
    the transition starts, so its disappearance is its own frame pair."""
    base, _, _ = renderer.frame(state)
    for step in range(INDICATOR_FRAMES - 1):
        emit(state, pixels=_draw_indicator(base, script.indicator_style, cx, cy, step))
    emit(state)


def _emit_tap(script, renderer, state: _State, action: TapAction, emit,
              frames, trace_actions) -> _State:
    box = _element_view_box(script, state, action.target)
    cx = box[0] + box[2] / 2.0
    cy = box[1] + box[3] / 2.0
    press = len(frames)
    _emit_indicator(script, renderer, state, cx, cy, emit)

    dest_screen = script.screen(action.to_screen)
    full = _State(screen_id=action.to_screen, offset=0)
    old_frame, _, _ = renderer.frame(state)
    if action.loading_delay > 0:
        # The screen arrives without its largest element, holds steady while
        # "loading", then the element fades in: two separated signal drops.
        late = max(dest_screen.elements, key=lambda e: (e.box[2] * e.box[3], e.id))
        partial = _State(screen_id=action.to_screen, offset=0, hidden=(late.id,))
        partial_frame, _, _ = renderer.frame(partial)
        for pixels in _push_frames(old_frame, partial_frame):
            emit(partial, pixels=pixels)
        emit(partial, n=action.loading_delay)
        full_frame, _, _ = renderer.frame(full)
        emit(full, pixels=_blend(partial_frame, full_frame))
        emit(full)
    else:
        full_frame, _, _ = renderer.frame(full)
        for pixels in _push_frames(old_frame, full_frame):
            emit(full, pixels=pixels)
        emit(full)

    end = len(frames) - 1
    trace_actions.append(TraceAction(
        kind=ActionKind.TAP, start_frame=press + INDICATOR_FRAMES - 1,
        end_frame=end, tap_xy=(cx, cy), element_box=box))
    return full


def _emit_scroll(script, renderer, state: _State, action: ScrollAction, emit,
                 frames, trace_actions) -> _State:
    shifts = scroll_schedule(action.distance_px, min_pairs=action.min_pairs)
    start = len(frames) - 1  # pre-scroll frame already emitted
    offset = state.offset
    for s in shifts:
        offset += s
        state = _State(screen_id=state.screen_id, offset=offset,
                       fields=state.fields)
        emit(state)
    trace_actions.append(TraceAction(
        kind=ActionKind.SCROLL, start_frame=start, end_frame=len(frames) - 1,
        distance_px=float(sum(shifts))))
    return state


def _emit_input(script, renderer, state: _State, action: InputAction, emit,
                frames, trace_actions) -> _State:
    field_box = _element_view_box(script, state, action.field)
    cx = field_box[0] + field_box[2] / 2.0
    cy = field_box[1] + field_box[3] / 2.0
    layout = "digits" if action.numeric else "letters"
    mangle = (action.mangle_space_label,) if action.mangle_space_label else ()

    # Mangling applies from the indicator window on; the before-frame always
    # lands inside that window, so earlier idle frames stay untouched.
    pre = _State(state.screen_id, state.offset, state.fields, mangle_spaces=mangle)
    press = len(frames)
    base, _, _ = renderer.frame(pre)
    for step in range(INDICATOR_FRAMES - 1):
        emit(pre, pixels=_draw_indicator(base, script.indicator_style, cx, cy, step))
    emit(pre)

    kb0 = _State(state.screen_id, state.offset, state.fields, keyboard=layout,
                 mangle_spaces=mangle)
    kb0_frame, _, _ = renderer.frame(kb0)
    kb_top = script.height - round(0.45 * script.height)
    kb_h = script.height - kb_top
    emit(kb0, pixels=_keyboard_slide(base, kb0_frame, kb_top, 2 * kb_h // 3))
    emit(kb0, pixels=_keyboard_slide(base, kb0_frame, kb_top, kb_h // 3))
    emit(kb0)

    if action.edit_states:
        states = list(action.edit_states) + [action.text]
    else:
        states = [action.text[:j + 1] for j in range(len(action.text))]
    fields = dict(state.fields)
    kb_state = kb0
    for j, content in enumerate(states):
        # idle frames between keystrokes
        emit(kb_state, KEYSTROKE_SPACING - KEY_EVENT_FRAMES)
        fields[action.field] = content
        kb_state = _State(state.screen_id, state.offset,
                          tuple(sorted(fields.items())), keyboard=layout,
                          mangle_spaces=mangle)
        typed_frame, _, _ = renderer.frame(kb_state)
        ch = content[-1] if content else "?"
        emit(kb_state, pixels=_keystroke_overlay(typed_frame, renderer, layout, ch, 0))
        emit(kb_state, pixels=_keystroke_overlay(typed_frame, renderer, layout, ch, 1))
        emit(kb_state)

    emit(kb_state, 6)  # settle before closing the keyboard
    post = _State(state.screen_id, state.offset, tuple(sorted(fields.items())))
    kb_last_frame, _, _ = renderer.frame(kb_state)
    post_frame, _, _ = renderer.frame(post)
    emit(post, pixels=_keyboard_slide(post_frame, kb_last_frame, kb_top, kb_h // 3))
    emit(post, pixels=_keyboard_slide(post_frame, kb_last_frame, kb_top, 2 * kb_h // 3))
    emit(post)

    end = len(frames) - 1
    trace_actions.append(TraceAction(
        kind=ActionKind.INPUT, start_frame=press + INDICATOR_FRAMES - 1,
        end_frame=end, tap_xy=(cx, cy), element_box=field_box, text=action.text))
    return post
