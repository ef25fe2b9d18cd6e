"""Semantic model of a GUI screen: classed elements, grid positions, and a
four-direction nearest-neighbor graph.

Element detection and icon captioning are adapter-backed (fixture files by
default); OCR text is attached to elements by box-center containment with
the highest-confidence item winning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from recap.adapters import (
    ELEMENT_CLASSES,
    ElementDetector,
    IconCaptioner,
    OcrAdapter,
    OcrItem,
)
from recap.config import GraphConfig
from recap.frames import Frame


@dataclass(frozen=True)
class GuiElement:
    klass: str
    box: tuple[int, int, int, int]  # x, y, w, h
    text: str | None = None
    caption: str | None = None
    ocr_confid: float = 0.0
    caption_confid: float = 0.0
    detect_confid: float = 1.0

    def __post_init__(self) -> None:
        if self.klass not in ELEMENT_CLASSES:
            raise ValueError(f"unknown element class {self.klass!r}")

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.box
        return x + w / 2.0, y + h / 2.0

    @property
    def area(self) -> int:
        return self.box[2] * self.box[3]

    @property
    def label(self) -> str | None:
        """Text for text-bearing elements, caption for icons."""
        return self.text if self.text is not None else self.caption

    @property
    def label_confidence(self) -> float:
        return self.ocr_confid if self.text is not None else self.caption_confid

    def contains(self, px: float, py: float) -> bool:
        x, y, w, h = self.box
        return x <= px <= x + w and y <= py <= y + h


VERTICAL_CELLS = ("top", "center", "bottom")
HORIZONTAL_CELLS = ("left", "center", "right")


@dataclass(frozen=True)
class GridPosition:
    vertical: str
    horizontal: str

    def phrase(self) -> str:
        """Rendering per the documented position phrase table."""
        if self.vertical == "center" and self.horizontal == "center":
            return "center"
        if self.vertical == "center":
            return self.horizontal
        if self.horizontal == "center":
            return self.vertical
        return f"{self.vertical} {self.horizontal} corner"


DIRECTIONS = ("left", "right", "top", "bottom")


@dataclass(frozen=True)
class NeighborLink:
    index: int           # index of the neighbor element in the screen list
    distance: float      # center-to-center pixels


@dataclass
class ElementGraph:
    """Per-element nearest neighbor in each axis direction, if within range."""

    links: list[dict[str, NeighborLink]]

    def neighbor(self, element_index: int, direction: str) -> NeighborLink | None:
        return self.links[element_index].get(direction)


@dataclass
class Screen:
    frame_index: int
    width: int
    height: int
    elements: list[GuiElement]
    graph: ElementGraph = field(default_factory=lambda: ElementGraph(links=[]))


def detect_elements(frame: Frame, detector: ElementDetector) -> list[GuiElement]:
    """Raw detections as bare elements; text/caption attachment happens in
    :func:`enrich`."""
    out = []
    for det in detector.detect(frame):
        out.append(GuiElement(klass=det.klass, box=det.box, detect_confid=det.confidence))
    return out


def enrich(elements: list[GuiElement], frame: Frame, ocr: OcrAdapter,
           captioner: IconCaptioner) -> list[GuiElement]:
    """Attach OCR text (highest-confidence contained item) and icon captions.

    Idempotent: re-running replaces the same fields with the same values.
    """
    items = ocr.ocr(frame)
    enriched = []
    for el in elements:
        best: OcrItem | None = None
        for item in items:
            cx = item.box[0] + item.box[2] / 2.0
            cy = item.box[1] + item.box[3] / 2.0
            if el.contains(cx, cy):
                if best is None or item.confidence > best.confidence:
                    best = item
        if best is not None:
            el = replace(el, text=best.text, ocr_confid=best.confidence)
        if el.klass == "icon":
            cap = captioner.caption(frame, el.box)
            if cap is not None:
                el = replace(el, caption=cap[0], caption_confid=cap[1])
        enriched.append(el)
    return enriched


def absolute_position(box: tuple[int, int, int, int],
                      frame_dims: tuple[int, int]) -> GridPosition:
    """3x3 grid cell of the box center; exact boundaries go to the lower cell."""
    width, height = frame_dims
    cx = box[0] + box[2] / 2.0
    cy = box[1] + box[3] / 2.0

    def cell(value: float, extent: float) -> int:
        if value <= extent / 3.0:
            return 0
        if value <= 2.0 * extent / 3.0:
            return 1
        return 2

    return GridPosition(vertical=VERTICAL_CELLS[cell(cy, height)],
                        horizontal=HORIZONTAL_CELLS[cell(cx, width)])


def _axis_overlap(a_lo: float, a_len: float, b_lo: float, b_len: float) -> float:
    return max(0.0, min(a_lo + a_len, b_lo + b_len) - max(a_lo, b_lo))


def build_graph(elements: list[GuiElement], threshold_px: float,
                cfg: GraphConfig | None = None) -> ElementGraph:
    """Nearest element per direction, within a distance cap.

    A candidate must lie in the direction's half-plane (by centers) and
    overlap the source box on the perpendicular axis by at least the
    configured fraction of the source edge, so diagonal elements never
    become left/right (or top/bottom) neighbors.
    """
    cfg = cfg or GraphConfig()
    links: list[dict[str, NeighborLink]] = []
    for i, el in enumerate(elements):
        ex, ey = el.center
        x, y, w, h = el.box
        found: dict[str, NeighborLink] = {}
        for direction in DIRECTIONS:
            best: tuple[float, int] | None = None
            for j, other in enumerate(elements):
                if j == i:
                    continue
                ox, oy = other.center
                bx, by, bw, bh = other.box
                if direction == "left":
                    in_half = ox < ex
                    overlap = _axis_overlap(y, h, by, bh) >= cfg.axis_overlap_fraction * h
                elif direction == "right":
                    in_half = ox > ex
                    overlap = _axis_overlap(y, h, by, bh) >= cfg.axis_overlap_fraction * h
                elif direction == "top":
                    in_half = oy < ey
                    overlap = _axis_overlap(x, w, bx, bw) >= cfg.axis_overlap_fraction * w
                else:
                    in_half = oy > ey
                    overlap = _axis_overlap(x, w, bx, bw) >= cfg.axis_overlap_fraction * w
                if not (in_half and overlap):
                    continue
                dist = math.hypot(ox - ex, oy - ey)
                if dist > threshold_px:
                    continue
                if best is None or (dist, j) < best:
                    best = (dist, j)
            if best is not None:
                found[direction] = NeighborLink(index=best[1], distance=best[0])
        links.append(found)
    return ElementGraph(links=links)


def build_screen(frame: Frame, detector: ElementDetector, ocr: OcrAdapter,
                 captioner: IconCaptioner, cfg: GraphConfig | None = None) -> Screen:
    """Detect, enrich, and link a frame's elements into a Screen."""
    cfg = cfg or GraphConfig()
    elements = enrich(detect_elements(frame, detector), frame, ocr, captioner)
    threshold = cfg.neighbor_threshold_fraction * frame.height
    graph = build_graph(elements, threshold, cfg)
    return Screen(frame_index=frame.index, width=frame.width, height=frame.height,
                  elements=elements, graph=graph)
