"""Ground-truth trace written alongside generated recordings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from recap.segmentation import ActionKind


@dataclass
class TraceAction:
    kind: ActionKind
    start_frame: int
    end_frame: int
    # TAP / INPUT: where the press landed and which element owns it.
    tap_xy: tuple[float, float] | None = None        # pixels
    element_box: tuple[int, int, int, int] | None = None
    # SCROLL
    distance_px: float | None = None
    # INPUT
    text: str | None = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value, "start_frame": self.start_frame,
                     "end_frame": self.end_frame}
        if self.kind is ActionKind.TAP:
            out["tap"] = {"x": self.tap_xy[0], "y": self.tap_xy[1],
                          "element_box": list(self.element_box)}
        elif self.kind is ActionKind.SCROLL:
            out["scroll"] = {"distance_px": self.distance_px}
        else:
            out["input"] = {"text": self.text,
                            "field_box": list(self.element_box) if self.element_box else None}
        return out

    @staticmethod
    def from_json(data: dict) -> "TraceAction":
        kind = ActionKind(data["kind"])
        action = TraceAction(kind=kind, start_frame=int(data["start_frame"]),
                             end_frame=int(data["end_frame"]))
        if kind is ActionKind.TAP:
            tap = data["tap"]
            action.tap_xy = (float(tap["x"]), float(tap["y"]))
            action.element_box = tuple(tap["element_box"])
        elif kind is ActionKind.SCROLL:
            action.distance_px = float(data["scroll"]["distance_px"])
        else:
            action.text = data["input"]["text"]
            fb = data["input"].get("field_box")
            action.element_box = tuple(fb) if fb else None
        return action


@dataclass
class GroundTruthTrace:
    fps: float
    width: int
    height: int
    frame_count: int
    indicator_style: str
    actions: list[TraceAction] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"fps": self.fps, "width": self.width, "height": self.height,
                "frame_count": self.frame_count,
                "indicator_style": self.indicator_style,
                "actions": [a.to_json() for a in self.actions]}

    def write(self, path: str | Path) -> Path:
        p = Path(path)
        p.write_text(json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n")
        return p

    @staticmethod
    def from_json(data: dict) -> "GroundTruthTrace":
        return GroundTruthTrace(
            fps=float(data["fps"]), width=int(data["width"]),
            height=int(data["height"]), frame_count=int(data["frame_count"]),
            indicator_style=str(data["indicator_style"]),
            actions=[TraceAction.from_json(a) for a in data["actions"]])

    @staticmethod
    def load(path: str | Path) -> "GroundTruthTrace":
        return GroundTruthTrace.from_json(json.loads(Path(path).read_text()))
