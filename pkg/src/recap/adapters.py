"""Pluggable perception backends: OCR, element detection, icon captioning,
and tap localization.

Two realizations ship for each role: a fixture adapter that reads sibling
annotation files written next to the frames (``frame_000123.ocr.json``,
``frame_000123.elements.json``), and a command adapter that spawns an
external process, writes one JSON request line to its stdin, and reads one
JSON response line from its stdout.  The wire schema is versioned with a
``"schema": "1"`` field and documented in docs/adapters.md.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from recap.frames import Frame

SCHEMA_VERSION = "1"

# The closed set of GUI element classes a detector may emit.
ELEMENT_CLASSES = (
    "button", "checkbox", "icon", "imageview", "textview", "radio button",
    "spinner", "switch", "toggle button", "edittext", "chronometer",
)


class AdapterError(Exception):
    """Base for adapter failures; aborts the clip, never the run."""


class AdapterUnavailable(AdapterError):
    """The configured adapter command cannot be started."""


class AdapterTimeout(AdapterError):
    """The adapter did not answer within the configured timeout."""


class AdapterMalformedOutput(AdapterError):
    """The adapter answered with something outside the wire schema."""


class NoIndicatorFound(Exception):
    """The tap localizer found no qualifying touch-indicator blob."""


@dataclass(frozen=True)
class OcrItem:
    text: str
    box: tuple[int, int, int, int]  # x, y, w, h in pixels
    confidence: float


@dataclass(frozen=True)
class Detection:
    klass: str
    box: tuple[int, int, int, int]
    confidence: float = 1.0


@dataclass(frozen=True)
class ElementAnnotation:
    """One entry of a frame's elements fixture (generator-authored)."""

    klass: str
    box: tuple[int, int, int, int]
    text: str | None = None
    text_confid: float | None = None
    caption: str | None = None
    caption_confid: float | None = None


class OcrAdapter(Protocol):
    def ocr(self, frame: Frame) -> list[OcrItem]: ...


class ElementDetector(Protocol):
    def detect(self, frame: Frame) -> list[Detection]: ...


class IconCaptioner(Protocol):
    def caption(self, frame: Frame, box: tuple[int, int, int, int]) -> tuple[str, float] | None: ...


class TapLocalizer(Protocol):
    def locate(self, frames: list[Frame]) -> tuple[float, float]: ...


# ---------------------------------------------------------------------------
# Fixture annotation sources

def _parse_box(raw) -> tuple[int, int, int, int]:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 4):
        raise AdapterMalformedOutput(f"box must be [x, y, w, h], got {raw!r}")
    return tuple(int(v) for v in raw)  # type: ignore[return-value]


def parse_ocr_items(raw) -> list[OcrItem]:
    if not isinstance(raw, list):
        raise AdapterMalformedOutput(f"OCR fixture must be a list, got {type(raw).__name__}")
    items = []
    for entry in raw:
        conf = float(entry.get("confidence", 1.0))
        if not 0.0 <= conf <= 1.0:
            raise AdapterMalformedOutput(f"confidence outside [0,1]: {conf}")
        items.append(OcrItem(text=str(entry["text"]), box=_parse_box(entry["box"]),
                             confidence=conf))
    return items


def parse_element_annotations(raw) -> list[ElementAnnotation]:
    if not isinstance(raw, list):
        raise AdapterMalformedOutput(
            f"elements fixture must be a list, got {type(raw).__name__}")
    out = []
    for entry in raw:
        klass = str(entry["class"])
        if klass not in ELEMENT_CLASSES:
            raise AdapterMalformedOutput(f"unknown element class {klass!r}")
        out.append(ElementAnnotation(
            klass=klass,
            box=_parse_box(entry["box"]),
            text=entry.get("text"),
            text_confid=entry.get("text_confid"),
            caption=entry.get("caption"),
            caption_confid=entry.get("caption_confid"),
        ))
    return out


class MemoryAnnotations:
    """Per-frame fixtures held in memory (the generator's native output)."""

    def __init__(self, ocr: dict[int, list[OcrItem]],
                 elements: dict[int, list[ElementAnnotation]]):
        self._ocr = ocr
        self._elements = elements

    def ocr_items(self, frame: Frame) -> list[OcrItem]:
        return list(self._ocr.get(frame.index, []))

    def element_annotations(self, frame: Frame) -> list[ElementAnnotation]:
        return list(self._elements.get(frame.index, []))


class DirectoryAnnotations:
    """Per-frame fixtures read from files next to the frame images."""

    def ocr_items(self, frame: Frame) -> list[OcrItem]:
        return parse_ocr_items(self._load(frame, ".ocr.json", default=[]))

    def element_annotations(self, frame: Frame) -> list[ElementAnnotation]:
        return parse_element_annotations(self._load(frame, ".elements.json", default=[]))

    @staticmethod
    def _load(frame: Frame, suffix: str, default):
        if frame.source_path is None:
            raise AdapterError(f"frame {frame.index} has no source path for fixtures")
        sidecar = frame.source_path.with_name(frame.source_path.stem + suffix)
        if not sidecar.exists():
            return default
        try:
            return json.loads(sidecar.read_text())
        except json.JSONDecodeError as e:
            raise AdapterMalformedOutput(f"invalid fixture {sidecar}: {e}") from e


class FixtureOcr:
    def __init__(self, source):
        self._source = source

    def ocr(self, frame: Frame) -> list[OcrItem]:
        return self._source.ocr_items(frame)


class FixtureDetector:
    """Yields class + box (+ unit confidence); enrichment adds text later."""

    def __init__(self, source):
        self._source = source

    def detect(self, frame: Frame) -> list[Detection]:
        return [Detection(klass=a.klass, box=a.box)
                for a in self._source.element_annotations(frame)]


class FixtureCaptioner:
    """Captions an icon crop from the annotation that covers the same box."""

    def __init__(self, source):
        self._source = source

    def caption(self, frame: Frame, box: tuple[int, int, int, int]) -> tuple[str, float] | None:
        for a in self._source.element_annotations(frame):
            if a.box == box and a.caption is not None:
                return a.caption, float(a.caption_confid if a.caption_confid is not None else 1.0)
        return None


# ---------------------------------------------------------------------------
# Command adapters (one JSON request line in, one JSON response line out)

class CommandRunner:
    """Spawns an adapter command per call, bounded by a shared semaphore."""

    def __init__(self, command: str, name: str, timeout_s: float = 20.0,
                 semaphore: threading.BoundedSemaphore | None = None):
        self.command = command
        self.name = name
        self.timeout_s = timeout_s
        self._sem = semaphore

    def call(self, payload: dict) -> dict:
        request = dict(payload)
        request["schema"] = SCHEMA_VERSION
        line = json.dumps(request, sort_keys=True) + "\n"
        if self._sem is not None:
            self._sem.acquire()
        try:
            try:
                proc = subprocess.Popen(
                    shlex.split(self.command), stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True)
            except OSError as e:
                raise AdapterUnavailable(f"adapter {self.name!r}: cannot start "
                                         f"{self.command!r}: {e}") from e
            try:
                out, _ = proc.communicate(line, timeout=self.timeout_s)
            except subprocess.TimeoutExpired as e:
                proc.kill()
                proc.wait()
                raise AdapterTimeout(
                    f"adapter {self.name!r} exceeded {self.timeout_s}s") from e
        finally:
            if self._sem is not None:
                self._sem.release()
        reply = out.splitlines()[0] if out.splitlines() else ""
        try:
            data = json.loads(reply)
        except json.JSONDecodeError as e:
            raise AdapterMalformedOutput(
                f"adapter {self.name!r} wrote non-JSON reply {reply!r}") from e
        if not isinstance(data, dict):
            raise AdapterMalformedOutput(
                f"adapter {self.name!r} reply must be an object")
        if "error" in data:
            raise AdapterError(f"adapter {self.name!r} reported: {data['error']}")
        return data


def _require_path(frame: Frame, name: str) -> str:
    if frame.source_path is None:
        raise AdapterError(
            f"adapter {name!r} needs on-disk frames (frame {frame.index} has no path)")
    return str(frame.source_path)


class CommandOcr:
    def __init__(self, runner: CommandRunner):
        self._runner = runner

    def ocr(self, frame: Frame) -> list[OcrItem]:
        data = self._runner.call({"op": "ocr",
                                  "frame_path": _require_path(frame, self._runner.name)})
        try:
            return parse_ocr_items(data["items"])
        except KeyError as e:
            raise AdapterMalformedOutput(
                f"adapter {self._runner.name!r} reply missing {e}") from e


class CommandDetector:
    def __init__(self, runner: CommandRunner):
        self._runner = runner

    def detect(self, frame: Frame) -> list[Detection]:
        data = self._runner.call({"op": "detect_elements",
                                  "frame_path": _require_path(frame, self._runner.name)})
        try:
            raw = data["elements"]
        except KeyError as e:
            raise AdapterMalformedOutput(
                f"adapter {self._runner.name!r} reply missing {e}") from e
        if not isinstance(raw, list):
            raise AdapterMalformedOutput("elements must be a list")
        out = []
        for entry in raw:
            klass = str(entry.get("class", ""))
            if klass not in ELEMENT_CLASSES:
                raise AdapterMalformedOutput(f"unknown element class {klass!r}")
            conf = float(entry.get("confidence", 1.0))
            out.append(Detection(klass=klass, box=_parse_box(entry["box"]),
                                 confidence=conf))
        return out


class CommandCaptioner:
    def __init__(self, runner: CommandRunner):
        self._runner = runner

    def caption(self, frame: Frame, box: tuple[int, int, int, int]) -> tuple[str, float] | None:
        data = self._runner.call({"op": "caption_icon",
                                  "frame_path": _require_path(frame, self._runner.name),
                                  "crop_box": list(box)})
        if data.get("caption") is None:
            return None
        return str(data["caption"]), float(data.get("confidence", 1.0))


class CommandTapLocalizer:
    def __init__(self, runner: CommandRunner):
        self._runner = runner

    def locate(self, frames: list[Frame]) -> tuple[float, float]:
        paths = [_require_path(f, self._runner.name) for f in frames]
        data = self._runner.call({"op": "locate_tap", "frame_paths": paths})
        if data.get("found") is False:
            raise NoIndicatorFound(f"adapter {self._runner.name!r} found no indicator")
        try:
            x, y = float(data["x"]), float(data["y"])
        except (KeyError, TypeError, ValueError) as e:
            raise AdapterMalformedOutput(
                f"adapter {self._runner.name!r} reply lacks normalized x/y") from e
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise AdapterMalformedOutput(f"tap point outside [0,1]^2: ({x}, {y})")
        return x, y


@dataclass
class AdapterSet:
    """The four perception roles the pipeline consumes."""

    ocr: OcrAdapter
    detector: ElementDetector
    captioner: IconCaptioner
    tap_localizer: TapLocalizer | None = None  # None selects the built-in heuristic


def fixture_adapters(source) -> AdapterSet:
    """Adapter set backed entirely by generator/fixture annotations."""
    return AdapterSet(ocr=FixtureOcr(source), detector=FixtureDetector(source),
                      captioner=FixtureCaptioner(source), tap_localizer=None)


def adapters_for_recording_dir(root: Path) -> AdapterSet:
    return fixture_adapters(DirectoryAnnotations())
