"""Template-based step descriptions.

Seven templates cover the three action kinds; which one fires depends on the
target element's confidence (its recognition confidence when its label is
unique on screen, zero otherwise) against the high/low thresholds alpha and
beta.  Rendered strings use plain ASCII double quotes.  When a screen offers
no anchor for a neighbor- or text-based template, documented reduced forms
keep the output well-formed (see docs/templates.md).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from recap.config import CaptionConfig
from recap.gui import GuiElement, GridPosition, Screen, absolute_position
from recap.segmentation import ActionClip, ActionKind

TEMPLATES_BY_KIND = {
    ActionKind.TAP: (1, 2, 3),
    ActionKind.SCROLL: (4, 5),
    ActionKind.INPUT: (6, 7),
}

# Element class -> rendered word.  All eleven classes read naturally as-is.
CLASS_WORDS = {k: k for k in (
    "button", "checkbox", "icon", "imageview", "textview", "radio button",
    "spinner", "switch", "toggle button", "edittext", "chronometer",
)}

RELATION_WORDS = ("next to", "below", "above", "left of", "right of")

SCROLL_BUCKETS = ("a quarter", "half", "three quarters", "the full")


class MissingSlot(Exception):
    """A template was rendered without a slot it requires."""


@dataclass(frozen=True)
class ObjectConfidence:
    value: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"confidence outside [0,1]: {self.value}")


@dataclass
class StepDescription:
    clip_index: int
    kind: ActionKind
    template_id: int
    text: str
    slots: dict[str, object] = field(default_factory=dict)
    confidence: float = 0.0

    def __post_init__(self) -> None:
        if self.template_id not in TEMPLATES_BY_KIND[self.kind]:
            raise ValueError(
                f"template {self.template_id} not valid for {self.kind.value}")
        if not self.text:
            raise ValueError("step description text must be non-empty")


def object_confidence(element: GuiElement, screen: Screen) -> ObjectConfidence:
    """The element's recognition confidence when its label is unique among
    the screen's element labels; zero otherwise or when it has no label."""
    label = element.label
    if label is None:
        return ObjectConfidence(0.0)
    occurrences = sum(1 for el in screen.elements if el.label == label)
    if occurrences != 1:
        return ObjectConfidence(0.0)
    return ObjectConfidence(element.label_confidence)


def resolve_tap_target(point_px: tuple[float, float], screen: Screen) -> GuiElement | None:
    """Smallest-area element containing the point (ties: first in list)."""
    best: tuple[int, int] | None = None
    for i, el in enumerate(screen.elements):
        if el.contains(*point_px):
            key = (el.area, i)
            if best is None or key < best:
                best = key
    return screen.elements[best[1]] if best is not None else None


def resolve_scroll_target(pre_texts: set[str], post_screen: Screen) -> GuiElement | None:
    """Element whose text was revealed by the scroll (absent before, present
    after); among several, the one closest to the viewport center."""
    cx, cy = post_screen.width / 2.0, post_screen.height / 2.0
    best: tuple[float, int] | None = None
    for i, el in enumerate(post_screen.elements):
        if el.text is None or el.text in pre_texts:
            continue
        ex, ey = el.center
        key = ((ex - cx) ** 2 + (ey - cy) ** 2, i)
        if best is None or key < best:
            best = key
    return post_screen.elements[best[1]] if best is not None else None


def resolve_input_target(screen: Screen,
                         opening_tap_px: tuple[float, float] | None) -> GuiElement | None:
    """The edittext holding the tap that opened the keyboard, else the
    topmost edittext on screen."""
    fields = [(i, el) for i, el in enumerate(screen.elements) if el.klass == "edittext"]
    if not fields:
        return None
    if opening_tap_px is not None:
        containing = [(el.area, i, el) for i, el in fields if el.contains(*opening_tap_px)]
        if containing:
            return min(containing, key=lambda t: (t[0], t[1]))[2]
    return min(fields, key=lambda t: (t[1].box[1], t[0]))[1]


def resolve_target(clip: ActionClip, attrs, screen: Screen, *,
                   post_screen: Screen | None = None,
                   pre_texts: set[str] | None = None) -> GuiElement | None:
    """Bind a clip's inferred attributes to a screen element (None is a valid
    outcome and routes to the fallback templates)."""
    if clip.kind is ActionKind.TAP:
        if attrs is None:
            return None
        return resolve_tap_target(attrs.to_pixels(screen.width, screen.height), screen)
    if clip.kind is ActionKind.SCROLL:
        if post_screen is None:
            return None
        return resolve_scroll_target(pre_texts or set(), post_screen)
    point = attrs.to_pixels(screen.width, screen.height) if attrs is not None else None
    return resolve_input_target(screen, point)


def select_template(action_kind: ActionKind, target: GuiElement | None,
                    confid: float, cfg: CaptionConfig | None = None) -> int:
    """The single template whose condition holds (conditions partition all
    cases given beta < alpha)."""
    cfg = cfg or CaptionConfig()
    has_label = target is not None and target.label is not None
    if action_kind is ActionKind.TAP:
        if has_label and confid > cfg.alpha:
            return 1
        if has_label and cfg.beta < confid <= cfg.alpha:
            return 2
        return 3
    if action_kind is ActionKind.SCROLL:
        return 4 if target is not None and target.text is not None else 5
    if has_label and confid > cfg.alpha:
        return 6
    return 7


def phrase_scroll_offset(distance_px: float, frame_height: int) -> tuple[str, int]:
    """Bucketed scroll amount: (bucket word, full-screen repeat count).

    Ratios map to the nearest of a quarter / half / three quarters / the
    full screen (ties to the lower bucket, sub-eighth ratios floor to a
    quarter); ratios above one keep the full-screen bucket with the whole
    screen count as the repeat qualifier.
    """
    if frame_height <= 0:
        raise ValueError(f"frame_height must be positive, got {frame_height}")
    r = abs(distance_px) / frame_height
    if r > 1.0:
        return "the full", max(1, int(r))
    if r <= 0.375:
        return "a quarter", 1
    if r <= 0.625:
        return "half", 1
    if r <= 0.875:
        return "three quarters", 1
    return "the full", 1


def _repeat_words(n: int) -> str:
    if n == 2:
        return "twice"
    if n == 3:
        return "three times"
    return f"{n} times"


def _need(slots: dict, key: str) -> object:
    if key not in slots or slots[key] is None:
        raise MissingSlot(f"template slot {key!r} is missing")
    return slots[key]


def _scroll_amount_phrase(slots: dict) -> str:
    bucket = str(_need(slots, "amount_bucket"))
    if bucket not in SCROLL_BUCKETS:
        raise MissingSlot(f"unknown scroll bucket {bucket!r}")
    if bucket == "the full":
        repeats = int(slots.get("amount_repeats", 1))
        phrase = "the full screen"
        if repeats >= 2:
            phrase += f" {_repeat_words(repeats)}"
        return phrase
    return f"{bucket} of the screen"


def render_description(template_id: int, slots: dict) -> str:
    """Instantiate a template; reduced forms apply when anchor slots are
    absent (documented in docs/templates.md)."""
    if template_id == 1:
        return f'Tap "{_need(slots, "object_text")}" {_need(slots, "object_class")}'
    if template_id == 2:
        return (f'Tap "{_need(slots, "object_text")}" {_need(slots, "object_class")}'
                f' at {_need(slots, "position")}')
    if template_id == 3:
        klass = slots.get("object_class")
        if klass is None:
            return f'Tap at {_need(slots, "position")}'
        if slots.get("neighbor_text") is not None:
            relation = str(_need(slots, "neighbor_relation"))
            if relation not in RELATION_WORDS:
                raise MissingSlot(f"unknown neighbor relation {relation!r}")
            return f'Tap the {klass} {relation} "{slots["neighbor_text"]}"'
        if slots.get("position") is not None:
            return f'Tap the {klass} at {slots["position"]}'
        return f'Tap the {klass}'
    if template_id == 4:
        return (f'Scroll {_need(slots, "direction")} {_scroll_amount_phrase(slots)}'
                f' to "{_need(slots, "object_text")}"')
    if template_id == 5:
        return f'Scroll {_need(slots, "direction")} {_scroll_amount_phrase(slots)}'
    if template_id == 6:
        return (f'Input "{_need(slots, "input_text")}" in the'
                f' "{_need(slots, "object_text")}" edittext')
    if template_id == 7:
        text = _need(slots, "input_text")
        if slots.get("neighbor_text") is not None:
            relation = str(_need(slots, "neighbor_relation"))
            if relation not in RELATION_WORDS:
                raise MissingSlot(f"unknown neighbor relation {relation!r}")
            return f'Input "{text}" in the edittext {relation} "{slots["neighbor_text"]}"'
        return f'Input "{text}" in the edittext'
    raise ValueError(f"unknown template id {template_id}")


def neighbor_slots(screen: Screen, element: GuiElement) -> dict[str, str] | None:
    """Nearest labeled neighbor and its relation word for templates 3/7.

    The relation describes the target relative to the neighbor (a neighbor
    above the target reads "below ...").  A single labeled horizontal
    neighbor reads "next to"; when both sides are labeled the explicit side
    is used.
    """
    try:
        idx = screen.elements.index(element)
    except ValueError:
        return None
    candidates = []
    for direction in ("left", "right", "top", "bottom"):
        link = screen.graph.neighbor(idx, direction)
        if link is None:
            continue
        other = screen.elements[link.index]
        if other.label is None:
            continue
        candidates.append((link.distance, direction, other))
    if not candidates:
        return None
    _, direction, other = min(candidates, key=lambda t: (t[0], t[1]))
    if direction in ("left", "right"):
        opposite = "right" if direction == "left" else "left"
        opp = screen.graph.neighbor(idx, opposite)
        opp_labeled = opp is not None and screen.elements[opp.index].label is not None
        relation = ("left of" if direction == "right" else "right of") if opp_labeled \
            else "next to"
    else:
        relation = "below" if direction == "top" else "above"
    return {"neighbor_text": str(other.label), "neighbor_relation": relation}


# ---------------------------------------------------------------------------
# Parser (inverse of render_description, used for round-trip checks)

_CLASS_ALT = "|".join(sorted((re.escape(c) for c in CLASS_WORDS), key=len, reverse=True))
_POSITION_ALT = "|".join((
    "top left corner", "top right corner", "bottom left corner",
    "bottom right corner", "top", "bottom", "left", "right", "center",
))
_RELATION_ALT = "|".join(RELATION_WORDS)
_AMOUNT = r"(?:(?P<bucket>a quarter|half|three quarters) of the screen|" \
          r"the full screen(?: (?P<repeat>twice|three times|\d+ times))?)"

_PATTERNS: list[tuple[int, re.Pattern]] = [
    (2, re.compile(rf'^Tap "(?P<text>.+)" (?P<klass>{_CLASS_ALT})'
                   rf' at (?P<position>{_POSITION_ALT})$')),
    (1, re.compile(rf'^Tap "(?P<text>.+)" (?P<klass>{_CLASS_ALT})$')),
    (3, re.compile(rf'^Tap the (?P<klass>{_CLASS_ALT})'
                   rf' (?P<relation>{_RELATION_ALT}) "(?P<nbr>.+)"$')),
    (3, re.compile(rf'^Tap the (?P<klass>{_CLASS_ALT})'
                   rf' at (?P<position>{_POSITION_ALT})$')),
    (3, re.compile(rf'^Tap the (?P<klass>{_CLASS_ALT})$')),
    (3, re.compile(rf'^Tap at (?P<position>{_POSITION_ALT})$')),
    (4, re.compile(rf'^Scroll (?P<direction>down|up) {_AMOUNT}'
                   rf' to "(?P<text>.+)"$')),
    (5, re.compile(rf'^Scroll (?P<direction>down|up) {_AMOUNT}$')),
    (6, re.compile(r'^Input "(?P<input>.+?)" in the "(?P<text>.+)" edittext$')),
    (7, re.compile(rf'^Input "(?P<input>.+?)" in the edittext'
                   rf' (?P<relation>{_RELATION_ALT}) "(?P<nbr>.+)"$')),
    (7, re.compile(r'^Input "(?P<input>.+)" in the edittext$')),
]

_REPEAT_NUMBERS = {"twice": 2, "three times": 3}


def parse_description(text: str) -> tuple[int, dict[str, object]]:
    """Recover (template_id, slots) from a rendered description."""
    for template_id, pattern in _PATTERNS:
        m = pattern.match(text)
        if m is None:
            continue
        g = m.groupdict()
        slots: dict[str, object] = {}
        if g.get("text") is not None:
            slots["object_text"] = g["text"]
        if g.get("klass") is not None:
            slots["object_class"] = g["klass"]
        if g.get("position") is not None:
            slots["position"] = g["position"]
        if g.get("relation") is not None:
            slots["neighbor_relation"] = g["relation"]
        if g.get("nbr") is not None:
            slots["neighbor_text"] = g["nbr"]
        if g.get("direction") is not None:
            slots["direction"] = g["direction"]
        if g.get("input") is not None:
            slots["input_text"] = g["input"]
        if "bucket" in g:
            if g["bucket"] is not None:
                slots["amount_bucket"] = g["bucket"]
                slots["amount_repeats"] = 1
            else:
                slots["amount_bucket"] = "the full"
                rep = g.get("repeat")
                if rep is None:
                    slots["amount_repeats"] = 1
                else:
                    slots["amount_repeats"] = _REPEAT_NUMBERS.get(
                        rep, int(rep.split()[0]) if rep.split()[0].isdigit() else 1)
        return template_id, slots
    raise ValueError(f"unparseable description: {text!r}")


def describe(clip_index: int, clip: ActionClip, target: GuiElement | None,
             screen: Screen, cfg: CaptionConfig, *,
             tap_position: GridPosition | None = None,
             scroll_direction: str | None = None,
             scroll_amount: tuple[str, int] | None = None,
             input_text: str | None = None) -> StepDescription:
    """Assemble slots, pick the template, and render one step description."""
    confid = object_confidence(target, screen).value if target is not None else 0.0
    template_id = select_template(clip.kind, target, confid, cfg)

    slots: dict[str, object] = {}
    if clip.kind is ActionKind.TAP:
        if target is not None:
            slots["object_class"] = CLASS_WORDS[target.klass]
            if target.label is not None:
                slots["object_text"] = target.label
            slots["position"] = absolute_position(
                target.box, (screen.width, screen.height)).phrase()
            nbr = neighbor_slots(screen, target)
            if nbr is not None:
                slots.update(nbr)
        elif tap_position is not None:
            slots["position"] = tap_position.phrase()
    elif clip.kind is ActionKind.SCROLL:
        if scroll_direction is None or scroll_amount is None:
            raise MissingSlot("scroll steps need direction and amount")
        slots["direction"] = scroll_direction
        slots["amount_bucket"], slots["amount_repeats"] = scroll_amount
        if target is not None and target.text is not None:
            slots["object_text"] = target.text
    else:
        slots["input_text"] = input_text if input_text is not None else ""
        if target is not None:
            if target.label is not None:
                slots["object_text"] = target.label
            nbr = neighbor_slots(screen, target)
            if nbr is not None:
                slots.update(nbr)

    text = render_description(template_id, slots)
    return StepDescription(clip_index=clip_index, kind=clip.kind,
                           template_id=template_id, text=text, slots=slots,
                           confidence=confid)
