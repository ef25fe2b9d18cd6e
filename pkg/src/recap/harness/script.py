"""Session scripts: what a synthetic recording should contain.

A script lists screens (elements in content coordinates below a fixed
status bar) and a sequence of actions.  Scripts are hand-written as JSON
(TOML too on Python 3.11+) or produced by :func:`make_batch_scripts`, the
seeded generator used for batch evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    tomllib = None

from recap.adapters import ELEMENT_CLASSES

INDICATOR_STYLES = ("default", "cursor", "custom")

# Fixed layout constants shared with the renderer.
STATUS_BAR_H = 64
NAV_BAR_H = 64


class ScriptError(Exception):
    """Raised when a session script is internally inconsistent."""


@dataclass
class ElementSpec:
    id: str
    klass: str
    box: tuple[int, int, int, int]  # content coordinates (x, y, w, h)
    text: str | None = None
    caption: str | None = None
    text_confid: float = 0.97
    caption_confid: float = 0.9

    def __post_init__(self) -> None:
        if self.klass not in ELEMENT_CLASSES:
            raise ScriptError(f"element {self.id!r}: unknown class {self.klass!r}")


@dataclass
class ScreenSpec:
    id: str
    elements: list[ElementSpec]
    content_height: int = 0  # 0 = exactly one viewport tall (not scrollable)


@dataclass
class TapAction:
    target: str
    to_screen: str
    loading_delay: int = 0          # plateau frames between the two swap stages
    kind: str = "tap"


@dataclass
class ScrollAction:
    distance_px: int                # positive scrolls down
    min_pairs: int = 11
    kind: str = "scroll"


@dataclass
class InputAction:
    field: str
    text: str
    edit_states: list[str] = field(default_factory=list)  # mid-typing field contents
    numeric: bool = False
    mangle_space_label: str | None = None  # element whose pre-keyboard OCR drops spaces
    kind: str = "input"


Action = TapAction | ScrollAction | InputAction


@dataclass
class SessionScript:
    name: str
    screens: list[ScreenSpec]
    start_screen: str
    actions: list[Action]
    width: int = 360
    height: int = 640
    fps: float = 30.0
    indicator_style: str = "default"
    lead_in_s: float = 0.8
    gap_s: float = 1.2              # idle time between actions
    tail_s: float = 0.8
    start_offset: int = 0           # initial scroll offset of the start screen
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        self.validate()

    @property
    def view_height(self) -> int:
        return self.height - STATUS_BAR_H - NAV_BAR_H

    def screen(self, screen_id: str) -> ScreenSpec:
        for s in self.screens:
            if s.id == screen_id:
                return s
        raise ScriptError(f"unknown screen {screen_id!r}")

    def validate(self) -> None:
        if self.indicator_style not in INDICATOR_STYLES:
            raise ScriptError(f"unknown indicator style {self.indicator_style!r}")
        if self.fps <= 0:
            raise ScriptError("fps must be positive")
        ids = [s.id for s in self.screens]
        if len(set(ids)) != len(ids):
            raise ScriptError("screen ids must be unique")
        for screen in self.screens:
            el_ids = [e.id for e in screen.elements]
            if len(set(el_ids)) != len(el_ids):
                raise ScriptError(f"screen {screen.id!r}: element ids must be unique")
            ch = screen.content_height or self.view_height
            if ch < self.view_height:
                raise ScriptError(f"screen {screen.id!r}: content shorter than viewport")
            for e in screen.elements:
                x, y, w, h = e.box
                if x < 0 or y < 0 or x + w > self.width or y + h > ch:
                    raise ScriptError(f"element {e.id!r} leaves the content canvas")

        # Walk the action sequence to check reachability and scroll bounds.
        current = self.screen(self.start_screen)
        offset = self.start_offset
        for i, action in enumerate(self.actions):
            if isinstance(action, TapAction):
                target = self._element(current, action.target, i)
                if not self._visible(target, current, offset):
                    raise ScriptError(
                        f"action {i}: tap target {action.target!r} not in view")
                current = self.screen(action.to_screen)
                offset = 0
            elif isinstance(action, ScrollAction):
                ch = current.content_height or self.view_height
                new_offset = offset + action.distance_px
                if not 0 <= new_offset <= ch - self.view_height:
                    raise ScriptError(
                        f"action {i}: scroll to offset {new_offset} leaves content "
                        f"of height {ch}")
                offset = new_offset
            elif isinstance(action, InputAction):
                fl = self._element(current, action.field, i)
                if fl.klass != "edittext":
                    raise ScriptError(
                        f"action {i}: input target {action.field!r} is {fl.klass}")
                if not self._visible(fl, current, offset):
                    raise ScriptError(f"action {i}: field {action.field!r} not in view")
                vy = STATUS_BAR_H + fl.box[1] - offset
                if vy + fl.box[3] > 0.5 * self.height:
                    raise ScriptError(
                        f"action {i}: field {action.field!r} would sit under the keyboard")
                if len(action.text) < 1:
                    raise ScriptError(f"action {i}: empty input text")
            else:  # pragma: no cover
                raise ScriptError(f"action {i}: unknown action {action!r}")

    def _element(self, screen: ScreenSpec, element_id: str, action_index: int) -> ElementSpec:
        for e in screen.elements:
            if e.id == element_id:
                return e
        raise ScriptError(
            f"action {action_index}: element {element_id!r} not on screen {screen.id!r}")

    def _visible(self, el: ElementSpec, screen: ScreenSpec, offset: int) -> bool:
        y = el.box[1] - offset
        return y >= 0 and y + el.box[3] <= self.view_height


# ---------------------------------------------------------------------------
# Script files

def script_from_dict(data: dict) -> SessionScript:
    try:
        screens = [
            ScreenSpec(
                id=s["id"],
                content_height=int(s.get("content_height", 0)),
                elements=[ElementSpec(
                    id=e["id"], klass=e["class"], box=tuple(e["box"]),
                    text=e.get("text"), caption=e.get("caption"),
                    text_confid=float(e.get("text_confid", 0.97)),
                    caption_confid=float(e.get("caption_confid", 0.9)),
                ) for e in s.get("elements", [])],
            )
            for s in data["screens"]
        ]
        actions: list[Action] = []
        for a in data["actions"]:
            kind = a["kind"]
            if kind == "tap":
                actions.append(TapAction(target=a["target"], to_screen=a["to_screen"],
                                         loading_delay=int(a.get("loading_delay", 0))))
            elif kind == "scroll":
                actions.append(ScrollAction(distance_px=int(a["distance_px"]),
                                            min_pairs=int(a.get("min_pairs", 11))))
            elif kind == "input":
                actions.append(InputAction(
                    field=a["field"], text=a["text"],
                    edit_states=list(a.get("edit_states", [])),
                    numeric=bool(a.get("numeric", False)),
                    mangle_space_label=a.get("mangle_space_label")))
            else:
                raise ScriptError(f"unknown action kind {kind!r}")
        return SessionScript(
            name=data.get("name", "session"),
            screens=screens,
            start_screen=data["start_screen"],
            actions=actions,
            width=int(data.get("width", 360)),
            height=int(data.get("height", 640)),
            fps=float(data.get("fps", 30.0)),
            indicator_style=data.get("indicator_style", "default"),
            lead_in_s=float(data.get("lead_in_s", 0.8)),
            gap_s=float(data.get("gap_s", 1.2)),
            tail_s=float(data.get("tail_s", 0.8)),
            start_offset=int(data.get("start_offset", 0)),
            noise_sigma=float(data.get("noise_sigma", 0.0)),
        )
    except KeyError as e:
        raise ScriptError(f"script is missing required key {e}") from e


def load_script(path: str | Path) -> SessionScript:
    p = Path(path)
    if p.suffix == ".toml":
        if tomllib is None:
            raise ScriptError("TOML scripts need Python 3.11+; use JSON instead")
        data = tomllib.loads(p.read_text())
    else:
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise ScriptError(f"invalid JSON in {p}: {e}") from e
    return script_from_dict(data)


# ---------------------------------------------------------------------------
# Seeded batch generation

_WORDS = (
    "OK", "Cancel", "Save", "Done", "Next", "Back", "Settings", "Profile",
    "Search", "Login", "Submit", "Share", "Edit", "Delete", "Amount", "Name",
    "Email", "Phone", "Address", "City", "Account", "Balance", "History",
    "Transfer", "Payment", "Details", "Options", "Help", "About", "Privacy",
    "Terms", "Language", "Theme", "Alerts", "Display", "Sound", "Storage",
    "Battery", "Apps", "Updates", "Security", "Backup", "Restore", "Sync",
    "Filter", "Sort", "Refresh", "Download", "Music", "Photos", "Videos",
    "Camera", "Gallery", "Contacts", "Messages", "Calendar", "Clock",
    "Weather", "News", "Maps", "Notes", "Tasks", "Files", "Wallet", "Orders",
)

_TYPED = ("100", "250", "2024", "John", "Anna", "Hello", "Cash", "Taxi",
          "Milk", "Rome", "Blue", "Note", "4711")

_ICON_CAPTIONS = ("menu", "search", "share", "home", "star", "user", "plus")


def _grid_slots(rng: np.random.Generator,
                rows: int = 5, cols: int = 2) -> list[tuple[int, int]]:
    slots = [(r, c) for r in range(rows) for c in range(cols)]
    rng.shuffle(slots)
    return slots


def _make_static_screen(rng: np.random.Generator, sid: str, width: int,
                        view_h: int, used_words: set[str]) -> ScreenSpec:
    """A screen of 4-7 non-overlapping classed elements on a row/column grid."""
    n = int(rng.integers(4, 8))
    slots = _grid_slots(rng)[:n]
    col_w = width // 2
    row_h = (view_h - 40) // 5
    elements = []
    kinds = ["button", "textview", "icon", "checkbox", "switch", "imageview",
             "radio button", "spinner", "toggle button", "chronometer"]
    for j, (r, c) in enumerate(slots):
        klass = kinds[int(rng.integers(0, len(kinds)))]
        x0 = c * col_w + 20
        y0 = 20 + r * row_h
        if klass in ("button", "toggle button", "spinner"):
            box = (x0, y0, min(col_w - 40, 140), 48)
        elif klass in ("checkbox", "radio button"):
            box = (x0, y0 + 6, 28, 28)
        elif klass == "icon":
            box = (x0 + 10, y0, 44, 44)
        elif klass == "switch":
            box = (x0 + 10, y0 + 6, 56, 30)
        elif klass == "imageview":
            box = (x0, y0, min(col_w - 40, 130), min(row_h - 16, 72))
        else:
            box = (x0, y0 + 8, min(col_w - 40, 130), 22)
        text = None
        caption = None
        if klass == "icon":
            caption = str(rng.choice(_ICON_CAPTIONS))
        elif klass in ("button", "textview", "spinner", "toggle button", "chronometer"):
            fresh = [w for w in _WORDS if w not in used_words]
            text = str(rng.choice(fresh)) if fresh else str(rng.choice(_WORDS))
            used_words.add(text)
        elements.append(ElementSpec(
            id=f"{sid}_e{j}", klass=klass, box=box, text=text, caption=caption,
            text_confid=float(rng.uniform(0.93, 0.99)),
            caption_confid=float(rng.uniform(0.8, 0.95))))
    return ScreenSpec(id=sid, elements=elements)


_SAFE_DIGITS = "01479"  # digit runs that can never form a keypad-row trigger


def _safe_number(rng: np.random.Generator, n_digits: int = 2) -> str:
    return "".join(_SAFE_DIGITS[int(rng.integers(0, len(_SAFE_DIGITS)))]
                   for _ in range(n_digits))


def _make_list_screen(rng: np.random.Generator, sid: str, width: int,
                      view_h: int, pages: int = 3) -> ScreenSpec:
    """A scrollable list of distinct labeled rows with right-aligned values."""
    content_h = view_h * pages
    elements = []
    y = 14
    j = 0
    while y + 40 <= content_h - 14:
        label = f"{rng.choice(_WORDS)} {_safe_number(rng)}"
        elements.append(ElementSpec(id=f"{sid}_row{j}", klass="textview",
                                    box=(28, y, width - 160, 24), text=label,
                                    text_confid=float(rng.uniform(0.93, 0.99))))
        elements.append(ElementSpec(id=f"{sid}_val{j}", klass="textview",
                                    box=(width - 110, y, 84, 24),
                                    text=f"{_safe_number(rng)}%",
                                    text_confid=float(rng.uniform(0.93, 0.99))))
        y += int(rng.integers(52, 68))
        j += 1
    return ScreenSpec(id=sid, elements=elements, content_height=content_h)


def _make_hero_screen(rng: np.random.Generator, sid: str, width: int,
                      view_h: int, used_words: set[str]) -> ScreenSpec:
    """A screen led by a large image that plausibly loads late."""
    elements = [ElementSpec(id=f"{sid}_hero", klass="imageview",
                            box=(20, 16, width - 40, 210))]
    y = 250
    for j in range(3):
        fresh = [w for w in _WORDS if w not in used_words]
        word = str(rng.choice(fresh)) if fresh else str(rng.choice(_WORDS))
        used_words.add(word)
        klass = "button" if j == 0 else "textview"
        box = (28, y, 150, 48) if klass == "button" else (28, y + 10, 170, 22)
        elements.append(ElementSpec(id=f"{sid}_e{j}", klass=klass, box=box,
                                    text=word,
                                    text_confid=float(rng.uniform(0.93, 0.99))))
        y += 72
    return ScreenSpec(id=sid, elements=elements)


def _make_form_screen(rng: np.random.Generator, sid: str, width: int,
                      view_h: int) -> ScreenSpec:
    """One or two edittexts high on the screen plus a confirm button."""
    elements = []
    two_fields = bool(rng.integers(0, 2))
    label_above = bool(rng.integers(0, 2))
    y = 24
    for j in range(2 if two_fields else 1):
        word = str(rng.choice(("Amount", "Name", "Email", "Phone", "City")))
        if label_above:
            elements.append(ElementSpec(id=f"{sid}_lbl{j}", klass="textview",
                                        box=(28, y, 140, 22), text=word))
            elements.append(ElementSpec(id=f"{sid}_field{j}", klass="edittext",
                                        box=(28, y + 30, width - 56, 44)))
            y += 92
        else:
            elements.append(ElementSpec(id=f"{sid}_field{j}", klass="edittext",
                                        box=(28, y, width - 56, 44), text=word,
                                        text_confid=float(rng.uniform(0.93, 0.99))))
            y += 62
    elements.append(ElementSpec(id=f"{sid}_done", klass="button",
                                box=(width - 160, y + 8, 132, 48), text="Done"))
    return ScreenSpec(id=sid, elements=elements)


def make_batch_scripts(count: int, seed: int, *, width: int = 360,
                       height: int = 640, fps: float = 30.0,
                       loading_fraction: float = 0.1,
                       noise_sigma: float = 0.0) -> list[SessionScript]:
    """Deterministic batch of mixed-action scripts covering all indicator
    styles; roughly half the actions are taps, a quarter scrolls, a quarter
    typing sessions, and the configured fraction of taps load slowly."""
    scripts = []
    view_h = height - STATUS_BAR_H - NAV_BAR_H
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        style = INDICATOR_STYLES[i % len(INDICATOR_STYLES)]
        n_actions = int(rng.integers(2, 5))
        used_words: set[str] = set()

        state = str(rng.choice(["static", "list", "form"]))
        if state == "list":
            first = _make_list_screen(rng, "s0", width, view_h)
        elif state == "form":
            first = _make_form_screen(rng, "s0", width, view_h)
        else:
            first = _make_static_screen(rng, "s0", width, view_h, used_words)
        screens = [first]
        current = first
        offset = view_h if state == "list" else 0
        actions: list[Action] = []
        typed_fields: set[str] = set()
        # every tenth script carries the slow-loading tap pattern
        force_loading = loading_fraction > 0 and count >= 10 and i % 10 == 9

        for a in range(n_actions):
            if force_loading and a == 0:
                choice = "tap"
            elif state == "list":
                choice = "scroll" if rng.random() < 0.65 else "tap"
            elif state == "form":
                fresh_fields = [e for e in current.elements
                                if e.klass == "edittext" and e.id not in typed_fields]
                choice = "input" if fresh_fields and rng.random() < 0.6 else "tap"
            else:
                choice = "tap"

            if choice == "scroll":
                ch = current.content_height
                room_down = ch - view_h - offset
                room_up = offset
                down = rng.random() < 0.5 if min(room_down, room_up) > 220 \
                    else room_down >= room_up
                room = room_down if down else room_up
                dist = int(rng.integers(150, max(151, min(520, room))))
                dist = min(dist, room)
                actions.append(ScrollAction(distance_px=dist if down else -dist))
                offset += dist if down else -dist
            elif choice == "input":
                target = fresh_fields[int(rng.integers(0, len(fresh_fields)))]
                # Character-level text diffing cannot tell a typed character
                # from an identical one in the placeholder it replaces, so
                # keep the two disjoint (fields without placeholders are
                # unconstrained).
                placeholder = set(target.text or "")
                options = [t for t in _TYPED if not set(t) & placeholder]
                text = str(rng.choice(options or list(_TYPED)))
                typed_fields.add(target.id)
                actions.append(InputAction(field=target.id, text=text,
                                           numeric=text.isdigit()))
            else:
                next_state = str(rng.choice(["static", "list", "form"],
                                            p=[0.4, 0.3, 0.3]))
                loading = next_state == "static" and rng.random() < loading_fraction / 4
                if force_loading and a == 0:
                    next_state = "static"
                    loading = True
                    force_loading = False
                sid = f"s{len(screens)}"
                if next_state == "list":
                    dest = _make_list_screen(rng, sid, width, view_h)
                elif next_state == "form":
                    dest = _make_form_screen(rng, sid, width, view_h)
                elif loading:
                    dest = _make_hero_screen(rng, sid, width, view_h, used_words)
                else:
                    dest = _make_static_screen(rng, sid, width, view_h, used_words)
                screens.append(dest)
                visible = [e for e in current.elements
                           if e.box[1] >= offset
                           and e.box[1] + e.box[3] <= offset + view_h]
                target = visible[int(rng.integers(0, len(visible)))]
                delay = int(rng.integers(8, 13)) if loading else 0
                actions.append(TapAction(target=target.id, to_screen=sid,
                                         loading_delay=delay))
                current = dest
                state = next_state
                offset = 0

        start_offset = view_h if screens[0].content_height else 0
        scripts.append(SessionScript(
            name=f"batch_{seed}_{i:03d}", screens=screens,
            start_screen="s0", actions=actions, width=width, height=height,
            fps=fps, indicator_style=style, start_offset=start_offset,
            noise_sigma=noise_sigma))
    return scripts
