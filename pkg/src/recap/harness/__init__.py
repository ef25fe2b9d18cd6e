"""Synthetic screen-recording generator and scoring harness.

Generates deterministic recordings of scripted tap/scroll/typing sessions
(all three touch-indicator styles), writes ground-truth traces and
per-frame annotation fixtures alongside, and scores pipeline output with
interval-overlap F1 and per-attribute accuracy.
"""

from recap.harness.generate import GeneratedRecording, generate_recording
from recap.harness.metrics import EvalReport, score_attributes, vs_f1
from recap.harness.script import SessionScript, load_script, make_batch_scripts

__all__ = [
    "EvalReport",
    "GeneratedRecording",
    "SessionScript",
    "generate_recording",
    "load_script",
    "make_batch_scripts",
    "score_attributes",
    "vs_f1",
]
