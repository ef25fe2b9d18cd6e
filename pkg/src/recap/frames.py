"""Frame loading, color conversion, and luminance-plane utilities.

Recordings are exchanged as a directory of image files plus a ``manifest.json``
declaring the frame rate; decoding a container format (mp4/gif) into that
layout is delegated to an external tool (see README).  All pixel math on the
luminance path is integer-exact so results are reproducible bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

MANIFEST_NAME = "manifest.json"
DEFAULT_FRAME_GLOB = "frame_*.png"


class RecordingError(Exception):
    """Raised when a recording directory cannot be loaded or is inconsistent."""


@dataclass(frozen=True)
class Frame:
    """One decoded RGB frame of a recording."""

    index: int
    timestamp_ms: int
    pixels: np.ndarray  # (h, w, 3) uint8
    source_path: Path | None = None

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class LumaPlane:
    """2-D grid of luminance bytes (Y of YUV, BT.601 weights)."""

    values: np.ndarray  # (h, w) uint8

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass
class Recording:
    """An ordered, constant-dimension frame sequence with timing."""

    frames: list[Frame]
    fps: float
    width: int
    height: int
    source_dir: Path | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise RecordingError(f"fps must be positive, got {self.fps}")
        if not self.frames:
            raise RecordingError("recording has zero frames")
        for i, f in enumerate(self.frames):
            if f.index != i:
                raise RecordingError(f"frame indices not contiguous at {i} (got {f.index})")
            if f.pixels.shape != (self.height, self.width, 3):
                raise RecordingError(
                    f"frame {i} has shape {f.pixels.shape}, expected "
                    f"({self.height}, {self.width}, 3)"
                )

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def duration_ms(self) -> int:
        return frame_timestamp_ms(len(self.frames), self.fps)


def frame_timestamp_ms(index: int, fps: float) -> int:
    """Timestamp of a frame index: round(index * 1000 / fps)."""
    return int(round(index * 1000.0 / fps))


def recording_from_arrays(arrays: list[np.ndarray], fps: float,
                          source_dir: Path | None = None) -> Recording:
    """Wrap in-memory rasters as a Recording (used by the synthetic generator)."""
    if not arrays:
        raise RecordingError("recording has zero frames")
    h, w = arrays[0].shape[:2]
    frames = [
        Frame(index=i, timestamp_ms=frame_timestamp_ms(i, fps), pixels=a)
        for i, a in enumerate(arrays)
    ]
    return Recording(frames=frames, fps=fps, width=w, height=h, source_dir=source_dir)


def load_recording(source_path: str | Path, manifest_fps: float | None = None) -> Recording:
    """Load a recording from a frame-sequence directory.

    The directory must contain ``manifest.json`` with at least an ``fps``
    field (``manifest_fps`` overrides it) and frame images matching the
    manifest's ``frame_glob`` (default ``frame_*.png``), ordered
    lexicographically.
    """
    root = Path(source_path)
    if not root.is_dir():
        raise RecordingError(f"not a recording directory: {root}")

    manifest: dict = {}
    manifest_path = root / MANIFEST_NAME
    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text())
        except json.JSONDecodeError as e:
            raise RecordingError(f"unreadable manifest {manifest_path}: {e}") from e

    fps = manifest_fps if manifest_fps is not None else manifest.get("fps")
    if fps is None:
        raise RecordingError(f"manifest {manifest_path} declares no fps and no override given")
    fps = float(fps)
    if fps <= 0:
        raise RecordingError(f"fps must be positive, got {fps}")

    glob = manifest.get("frame_glob", DEFAULT_FRAME_GLOB)
    paths = sorted(root.glob(glob))
    if not paths:
        raise RecordingError(f"no frames matching {glob!r} in {root}")

    frames: list[Frame] = []
    dims: tuple[int, int] | None = None
    for i, p in enumerate(paths):
        with Image.open(p) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
        if dims is None:
            dims = arr.shape[:2]
        elif arr.shape[:2] != dims:
            raise RecordingError(
                f"frame {p.name} has dimensions {arr.shape[:2]}, expected {dims}"
            )
        frames.append(Frame(index=i, timestamp_ms=frame_timestamp_ms(i, fps),
                            pixels=arr, source_path=p))
    assert dims is not None
    return Recording(frames=frames, fps=fps, width=dims[1], height=dims[0], source_dir=root)


def write_recording(arrays: list[np.ndarray], fps: float, out_dir: str | Path,
                    compress_level: int = 1) -> Path:
    """Write rasters as a loadable frame directory (1-based zero-padded names)."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    for i, arr in enumerate(arrays):
        Image.fromarray(arr).save(root / f"frame_{i + 1:06d}.png",
                                  compress_level=compress_level)
    h, w = arrays[0].shape[:2]
    manifest = {"fps": fps, "frame_glob": DEFAULT_FRAME_GLOB, "width": w, "height": h}
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return root


def rgb_to_luma(frame: Frame | np.ndarray) -> LumaPlane:
    """BT.601 luma: Y = 0.299 R + 0.587 G + 0.114 B, rounded half-up.

    Computed in milli-units integer arithmetic, so the decimal weights are
    applied exactly and the result never depends on float rounding.
    """
    pixels = frame.pixels if isinstance(frame, Frame) else frame
    p = pixels.astype(np.int32)
    y = (299 * p[:, :, 0] + 587 * p[:, :, 1] + 114 * p[:, :, 2] + 500) // 1000
    return LumaPlane(values=y.astype(np.uint8))


def downsample(plane: LumaPlane, factor: int) -> LumaPlane:
    """Box-filter mean over factor x factor blocks (half-up rounding).

    ``factor=1`` is the identity.  Trailing rows/columns that do not fill a
    whole block are dropped.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return plane
    h, w = plane.values.shape
    if factor > h or factor > w:
        raise ValueError(f"factor {factor} exceeds plane dimensions {h}x{w}")
    hb, wb = h // factor, w // factor
    v = plane.values[: hb * factor, : wb * factor].astype(np.int64)
    sums = v.reshape(hb, factor, wb, factor).sum(axis=(1, 3))
    n = factor * factor
    means = (2 * sums + n) // (2 * n)  # integer half-up rounding of sums / n
    return LumaPlane(values=means.astype(np.uint8))


def box_blur(plane: LumaPlane, radius: int = 1) -> LumaPlane:
    """Mean filter over (2r+1)^2 neighborhoods with edge replication.

    Used to suppress per-pixel sensor/compression noise before the similarity
    signal is computed; half-up rounding keeps the result a byte plane.
    """
    if radius < 1:
        return plane
    k = 2 * radius + 1
    v = np.pad(plane.values.astype(np.int64), radius, mode="edge")
    c = np.cumsum(np.cumsum(v, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    sums = c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]
    n = k * k
    means = (2 * sums + n) // (2 * n)
    return LumaPlane(values=means.astype(np.uint8))
