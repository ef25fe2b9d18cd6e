"""recap: turn GUI screen recordings into time-aligned step captions.

The pipeline has three stages: cut the recording into action clips from a
consecutive-frame similarity signal, infer each clip's attributes (tap point,
scroll offset, or typed text), and render templated natural-language
descriptions as an SRT track plus a structured step report.  A synthetic
recording generator and scoring harness live in :mod:`recap.harness`.
"""

__version__ = "0.1.0"

from recap.frames import Frame, LumaPlane, Recording, load_recording
from recap.segmentation import ActionClip, ActionKind, SimilaritySignal

__all__ = [
    "ActionClip",
    "ActionKind",
    "Frame",
    "LumaPlane",
    "Recording",
    "SimilaritySignal",
    "load_recording",
    "__version__",
]
