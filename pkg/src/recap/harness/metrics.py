"""Scoring: interval-overlap F1 for segmentation and per-attribute accuracy.

Intervals are inclusive frame ranges with |c| = end - start + 1.  Ground
truth is broadened on both sides before overlap computation, which forgives
boundary wobble; the per-pair score keeps the unbroadened truth duration in
its denominator so identical predictions always score 1 and broadening can
never lower a score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from recap.attributes import InputDelta, ScrollOffset, TapPoint
from recap.harness.trace import GroundTruthTrace, TraceAction
from recap.segmentation import ActionClip, ActionKind

KINDS = (ActionKind.TAP, ActionKind.SCROLL, ActionKind.INPUT)


def interval_len(start: int, end: int) -> int:
    return end - start + 1


def interval_overlap(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(0, min(a[1], b[1]) - max(a[0], b[0]) + 1)


@dataclass
class MatchedPair:
    pred_index: int
    truth_index: int
    overlap: int         # against the broadened truth interval
    f1: float
    kinds_agree: bool


@dataclass
class MatchResult:
    pairs: list[MatchedPair] = field(default_factory=list)
    unmatched_pred: list[int] = field(default_factory=list)
    unmatched_truth: list[int] = field(default_factory=list)


def pair_f1(pred: tuple[int, int], truth: tuple[int, int], broaden: int) -> float:
    """2|pred n broadened(truth)| / (|pred| + |truth|).

    The denominator keeps the unbroadened truth duration and the overlap is
    capped at min(|pred|, |truth|), so identical intervals score exactly 1
    and broadening can only forgive boundary error, never inflate a score.
    """
    broadened = (truth[0] - broaden, truth[1] + broaden)
    ov = min(interval_overlap(pred, broadened),
             interval_len(*pred), interval_len(*truth))
    return 2.0 * ov / (interval_len(*pred) + interval_len(*truth))


def match_clips(pred: list[ActionClip], truth: list[TraceAction],
                broaden: int = 5) -> MatchResult:
    """Greedy one-to-one matching by maximal overlap with broadened truth."""
    if broaden < 0:
        raise ValueError(f"broaden must be >= 0, got {broaden}")
    candidates = []
    for ti, t in enumerate(truth):
        widened = (t.start_frame - broaden, t.end_frame + broaden)
        for pi, p in enumerate(pred):
            ov = interval_overlap((p.start_frame, p.end_frame), widened)
            if ov > 0:
                candidates.append((-ov, ti, pi))
    candidates.sort()
    result = MatchResult()
    used_p: set[int] = set()
    used_t: set[int] = set()
    for neg_ov, ti, pi in candidates:
        if pi in used_p or ti in used_t:
            continue
        used_p.add(pi)
        used_t.add(ti)
        p, t = pred[pi], truth[ti]
        result.pairs.append(MatchedPair(
            pred_index=pi, truth_index=ti, overlap=-neg_ov,
            f1=pair_f1((p.start_frame, p.end_frame),
                       (t.start_frame, t.end_frame), broaden),
            kinds_agree=p.kind is t.kind))
    result.unmatched_pred = [i for i in range(len(pred)) if i not in used_p]
    result.unmatched_truth = [i for i in range(len(truth)) if i not in used_t]
    return result


def f1_entries(pred: list[ActionClip], truth: list[TraceAction],
               broaden: int = 5) -> list[tuple[ActionKind, float]]:
    """One (kind, f1) entry per matched pair and per unmatched clip (0.0).

    Matched pairs and unmatched truth file under the truth kind; unmatched
    predictions under their own kind.
    """
    result = match_clips(pred, truth, broaden)
    entries = [(truth[m.truth_index].kind, m.f1) for m in result.pairs]
    entries += [(truth[i].kind, 0.0) for i in result.unmatched_truth]
    entries += [(pred[i].kind, 0.0) for i in result.unmatched_pred]
    return entries


def vs_f1(pred: list[ActionClip], truth: GroundTruthTrace | list[TraceAction],
          broaden: int = 5) -> dict[str, float]:
    """Segmentation F1 per kind plus macro and micro overall scores."""
    actions = truth.actions if isinstance(truth, GroundTruthTrace) else truth
    entries = f1_entries(pred, actions, broaden)
    out: dict[str, float] = {}
    for kind in KINDS:
        vals = [f for k, f in entries if k is kind]
        out[kind.value] = float(np.mean(vals)) if vals else float("nan")
    out["overall"] = float(np.mean([f for _, f in entries])) if entries else float("nan")

    result = match_clips(pred, actions, broaden)
    inter = sum(m.overlap for m in result.pairs)
    total = sum(interval_len(p.start_frame, p.end_frame) for p in pred) + \
        sum(interval_len(t.start_frame, t.end_frame) for t in actions)
    out["overall_micro"] = 2.0 * inter / total if total else float("nan")
    return out


def classification_accuracy(pred: list[ActionClip], truth: list[TraceAction],
                            broaden: int = 5) -> float:
    """Share of truth actions whose matched clip has the right kind."""
    if not truth:
        return float("nan")
    result = match_clips(pred, truth, broaden)
    correct = sum(1 for m in result.pairs if m.kinds_agree)
    return correct / len(truth)


@dataclass
class EvalReport:
    vs_f1: dict[str, float]
    classification_accuracy: float
    tap_in_element: float
    scroll_offset_accuracy: float
    input_exact_match: float
    counts: dict[str, int]

    def to_json(self) -> dict:
        def clean(v: float) -> float | None:
            return None if isinstance(v, float) and np.isnan(v) else v

        return {
            "vs_f1": {k: clean(v) for k, v in sorted(self.vs_f1.items())},
            "classification_accuracy": clean(self.classification_accuracy),
            "tap_in_element": clean(self.tap_in_element),
            "scroll_offset_accuracy": clean(self.scroll_offset_accuracy),
            "input_exact_match": clean(self.input_exact_match),
            "counts": dict(sorted(self.counts.items())),
        }

    def to_text(self) -> str:
        lines = ["kind      f1", "-" * 18]
        for kind in ("TAP", "SCROLL", "INPUT"):
            v = self.vs_f1.get(kind, float("nan"))
            lines.append(f"{kind:<8}  {v:.3f}" if not np.isnan(v) else f"{kind:<8}  -")
        lines.append(f"overall   {self.vs_f1['overall']:.3f} "
                     f"(micro {self.vs_f1['overall_micro']:.3f})")
        lines.append(f"classification accuracy  {self.classification_accuracy:.3f}")

        def rate(name: str, v: float) -> str:
            return f"{name}  {v:.3f}" if not np.isnan(v) else f"{name}  -"

        lines.append(rate("tap in element     ", self.tap_in_element))
        lines.append(rate("scroll offset ok   ", self.scroll_offset_accuracy))
        lines.append(rate("input exact match  ", self.input_exact_match))
        return "\n".join(lines)


def score_attributes(pred: list[ActionClip], attrs: list[object | None],
                     truth: GroundTruthTrace, *, broaden: int = 5,
                     scroll_tolerance_px: float = 2.0) -> EvalReport:
    """Full evaluation of clips plus their inferred attributes.

    ``attrs[i]`` belongs to ``pred[i]``: a TapPoint, ScrollOffset,
    InputDelta, or None when inference failed.
    """
    if len(pred) != len(attrs):
        raise ValueError(f"{len(pred)} clips but {len(attrs)} attribute entries")
    result = match_clips(pred, truth.actions, broaden)

    tap_ok = tap_n = scroll_ok = scroll_n = input_ok = input_n = 0
    for m in result.pairs:
        t = truth.actions[m.truth_index]
        a = attrs[m.pred_index]
        if not m.kinds_agree:
            continue
        if t.kind is ActionKind.TAP:
            tap_n += 1
            if isinstance(a, TapPoint) and t.element_box is not None:
                x, y = a.to_pixels(truth.width, truth.height)
                bx, by, bw, bh = t.element_box
                if bx <= x <= bx + bw and by <= y <= by + bh:
                    tap_ok += 1
        elif t.kind is ActionKind.SCROLL:
            scroll_n += 1
            if isinstance(a, ScrollOffset) and t.distance_px is not None:
                sign_ok = (a.distance_px > 0) == (t.distance_px > 0) or \
                    (a.distance_px == 0 and t.distance_px == 0)
                if sign_ok and abs(a.distance_px - t.distance_px) <= scroll_tolerance_px:
                    scroll_ok += 1
        else:
            input_n += 1
            if isinstance(a, InputDelta) and a.text == t.text:
                input_ok += 1

    return EvalReport(
        vs_f1=vs_f1(pred, truth.actions, broaden),
        classification_accuracy=classification_accuracy(pred, truth.actions, broaden),
        tap_in_element=tap_ok / tap_n if tap_n else float("nan"),
        scroll_offset_accuracy=scroll_ok / scroll_n if scroll_n else float("nan"),
        input_exact_match=input_ok / input_n if input_n else float("nan"),
        counts={"predicted_clips": len(pred), "truth_actions": len(truth.actions),
                "matched": len(result.pairs),
                "matched_taps": tap_n, "matched_scrolls": scroll_n,
                "matched_inputs": input_n},
    )


def write_eval_report(report: EvalReport, path) -> None:
    from pathlib import Path

    Path(path).write_text(json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n")
