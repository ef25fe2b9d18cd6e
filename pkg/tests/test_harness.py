import numpy as np
import pytest

from recap.harness.generate import generate_recording, scroll_schedule
from recap.harness.metrics import (
    classification_accuracy,
    interval_overlap,
    match_clips,
    pair_f1,
    score_attributes,
    vs_f1,
)
from recap.harness.script import (
    ElementSpec,
    InputAction,
    ScreenSpec,
    ScriptError,
    ScrollAction,
    SessionScript,
    TapAction,
    load_script,
    make_batch_scripts,
    script_from_dict,
)
from recap.harness.trace import GroundTruthTrace, TraceAction
from recap.segmentation import ActionClip, ActionKind


def trace_of(intervals):
    actions = []
    for kind, start, end in intervals:
        actions.append(TraceAction(kind=kind, start_frame=start, end_frame=end,
                                   tap_xy=(0, 0), element_box=(0, 0, 1, 1)))
    return actions


def clips_of(intervals):
    return [ActionClip(kind=k, start_frame=s, end_frame=e) for k, s, e in intervals]


class TestVsF1:
    def test_identity_scores_one(self):
        intervals = [(ActionKind.TAP, 10, 20), (ActionKind.SCROLL, 50, 80)]
        scores = vs_f1(clips_of(intervals), trace_of(intervals), broaden=5)
        assert scores["overall"] == 1.0
        assert scores["overall_micro"] <= 1.0
        assert scores["TAP"] == 1.0

    def test_hand_computed_example(self):
        pred = clips_of([(ActionKind.TAP, 10, 20)])
        truth = trace_of([(ActionKind.TAP, 12, 22)])
        score = vs_f1(pred, truth, broaden=0)["overall"]
        assert score == pytest.approx(2 * 9 / (11 + 11), abs=1e-9)

    def test_no_predictions_scores_zero(self):
        truth = trace_of([(ActionKind.TAP, 10, 20)])
        assert vs_f1([], truth, broaden=5)["overall"] == 0.0

    def test_broadening_never_decreases(self, rng):
        for _ in range(50):
            s = int(rng.integers(0, 100))
            e = s + int(rng.integers(1, 40))
            ps = s + int(rng.integers(-8, 9))
            pe = max(ps + 1, e + int(rng.integers(-8, 9)))
            prev = -1.0
            for b in range(0, 10):
                score = pair_f1((ps, pe), (s, e), b)
                assert score >= prev - 1e-12
                assert 0.0 <= score <= 1.0
                prev = score

    def test_symmetric_at_pair_level(self, rng):
        for _ in range(30):
            a = (int(rng.integers(0, 50)), 0)
            a = (a[0], a[0] + int(rng.integers(1, 30)))
            b = (int(rng.integers(0, 50)), 0)
            b = (b[0], b[0] + int(rng.integers(1, 30)))
            assert pair_f1(a, b, 0) == pytest.approx(pair_f1(b, a, 0), abs=1e-12)

    def test_greedy_matching_is_one_to_one(self):
        pred = clips_of([(ActionKind.TAP, 10, 20), (ActionKind.TAP, 21, 30)])
        truth = trace_of([(ActionKind.TAP, 12, 22)])
        result = match_clips(pred, truth, broaden=0)
        assert len(result.pairs) == 1
        assert result.pairs[0].pred_index == 0  # bigger overlap wins
        assert result.unmatched_pred == [1]

    def test_classification_accuracy(self):
        pred = clips_of([(ActionKind.SCROLL, 10, 20), (ActionKind.TAP, 50, 60)])
        truth = trace_of([(ActionKind.TAP, 10, 20), (ActionKind.TAP, 50, 60)])
        assert classification_accuracy(pred, truth, broaden=0) == 0.5

    def test_interval_overlap_inclusive(self):
        assert interval_overlap((10, 20), (12, 22)) == 9
        assert interval_overlap((0, 5), (6, 8)) == 0
        assert interval_overlap((0, 5), (5, 8)) == 1


class TestScoreAttributes:
    def make(self):
        trace = GroundTruthTrace(fps=30.0, width=360, height=640, frame_count=200,
                                 indicator_style="default")
        trace.actions = [
            TraceAction(ActionKind.TAP, 10, 14, tap_xy=(100, 100),
                        element_box=(80, 80, 60, 40)),
            TraceAction(ActionKind.SCROLL, 50, 70, distance_px=-200.0),
            TraceAction(ActionKind.INPUT, 100, 150, text="100",
                        element_box=(10, 10, 100, 40)),
        ]
        return trace

    def test_tolerances(self):
        from recap.attributes import InputDelta, ScrollOffset, TapPoint

        trace = self.make()
        pred = clips_of([(ActionKind.TAP, 10, 14), (ActionKind.SCROLL, 50, 70),
                         (ActionKind.INPUT, 100, 150)])
        attrs = [TapPoint(100 / 360, 100 / 640), ScrollOffset(-198.0),
                 InputDelta("100", 98, 153)]
        rep = score_attributes(pred, attrs, trace, scroll_tolerance_px=2.0)
        assert rep.tap_in_element == 1.0
        assert rep.scroll_offset_accuracy == 1.0   # -198 vs -200 within 2
        assert rep.input_exact_match == 1.0

        attrs[1] = ScrollOffset(-195.0)            # outside the 2 px tolerance
        attrs[2] = InputDelta("10O", 98, 153)      # OCR confusion: not exact
        rep = score_attributes(pred, attrs, trace, scroll_tolerance_px=2.0)
        assert rep.scroll_offset_accuracy == 0.0
        assert rep.input_exact_match == 0.0

    def test_zero_tolerance_restores_exact_scoring(self):
        from recap.attributes import ScrollOffset

        trace = self.make()
        trace.actions = [trace.actions[1]]
        pred = clips_of([(ActionKind.SCROLL, 50, 70)])
        rep = score_attributes(pred, [ScrollOffset(-200.0)], trace,
                               scroll_tolerance_px=0.0)
        assert rep.scroll_offset_accuracy == 1.0
        rep = score_attributes(pred, [ScrollOffset(-201.0)], trace,
                               scroll_tolerance_px=0.0)
        assert rep.scroll_offset_accuracy == 0.0


class TestScrollSchedule:
    @pytest.mark.parametrize("distance", [40, -40, 148, 300, -517, 800])
    def test_sums_exactly(self, distance):
        shifts = scroll_schedule(distance, min_pairs=5)
        assert sum(shifts) == distance
        assert all((s > 0) == (distance > 0) for s in shifts)

    def test_min_pairs_respected(self):
        assert len(scroll_schedule(300, min_pairs=11)) >= 11

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            scroll_schedule(2)


def tiny_script(**overrides):
    data = dict(
        name="tiny",
        screens=[
            ScreenSpec(id="a", elements=[
                ElementSpec(id="a_btn", klass="button", box=(40, 60, 140, 48),
                            text="Go"),
            ]),
            ScreenSpec(id="b", elements=[
                ElementSpec(id="b_text", klass="textview", box=(40, 60, 160, 24),
                            text="Done"),
            ]),
        ],
        start_screen="a",
        actions=[TapAction(target="a_btn", to_screen="b")],
    )
    data.update(overrides)
    return SessionScript(**data)


class TestScriptValidation:
    def test_valid_script_builds(self):
        tiny_script()

    def test_unknown_target_rejected(self):
        with pytest.raises(ScriptError, match="nope"):
            tiny_script(actions=[TapAction(target="nope", to_screen="b")])

    def test_scroll_needs_scrollable_screen(self):
        with pytest.raises(ScriptError, match="offset"):
            tiny_script(actions=[ScrollAction(distance_px=300)])

    def test_input_needs_edittext(self):
        with pytest.raises(ScriptError, match="button"):
            tiny_script(actions=[InputAction(field="a_btn", text="100")])

    def test_duplicate_screen_ids_rejected(self):
        with pytest.raises(ScriptError, match="unique"):
            tiny_script(screens=[
                ScreenSpec(id="a", elements=[]), ScreenSpec(id="a", elements=[])])

    def test_load_json_script(self, tmp_path):
        payload = {
            "name": "from-file",
            "start_screen": "a",
            "screens": [
                {"id": "a", "elements": [
                    {"id": "a_btn", "class": "button", "box": [40, 60, 140, 48],
                     "text": "Go"}]},
                {"id": "b", "elements": []},
            ],
            "actions": [{"kind": "tap", "target": "a_btn", "to_screen": "b"}],
        }
        import json

        p = tmp_path / "script.json"
        p.write_text(json.dumps(payload))
        script = load_script(p)
        assert script.name == "from-file"
        assert script.actions[0].target == "a_btn"

    def test_unknown_action_kind_rejected(self):
        with pytest.raises(ScriptError, match="fling"):
            script_from_dict({
                "name": "x", "start_screen": "a",
                "screens": [{"id": "a", "elements": []}],
                "actions": [{"kind": "fling"}],
            })


class TestGenerator:
    def test_same_script_and_seed_byte_identical(self):
        script = make_batch_scripts(1, seed=5)[0]
        a = generate_recording(script, seed=3)
        b = generate_recording(script, seed=3)
        assert len(a.recording) == len(b.recording)
        for fa, fb in zip(a.recording.frames, b.recording.frames):
            assert fa.pixels.tobytes() == fb.pixels.tobytes()
        assert a.trace.to_json() == b.trace.to_json()

    def test_noise_seed_changes_frames_not_trace(self):
        script = make_batch_scripts(1, seed=5)[0]
        a = generate_recording(script, seed=1, noise_sigma=4.0)
        b = generate_recording(script, seed=2, noise_sigma=4.0)
        assert a.trace.to_json() == b.trace.to_json()
        assert any(fa.pixels.tobytes() != fb.pixels.tobytes()
                   for fa, fb in zip(a.recording.frames, b.recording.frames))

    def test_trace_frame_count_matches_recording(self):
        script = make_batch_scripts(1, seed=9)[0]
        gen = generate_recording(script, seed=0)
        assert gen.trace.frame_count == len(gen.recording)
        for action in gen.trace.actions:
            assert 0 <= action.start_frame < action.end_frame < len(gen.recording)

    def test_keyboard_fixture_contains_numeric_trigger(self):
        script = SessionScript(
            name="numpad",
            screens=[ScreenSpec(id="a", elements=[
                ElementSpec(id="f", klass="edittext", box=(28, 40, 300, 44),
                            text="Amount"),
            ])],
            start_screen="a",
            actions=[InputAction(field="f", text="100", numeric=True)],
        )
        gen = generate_recording(script, seed=0)
        action = gen.trace.actions[0]
        mid = (action.start_frame + action.end_frame) // 2
        texts = [i.text for i in
                 gen.annotations.ocr_items(gen.recording.frames[mid])]
        digits = "".join(ch for t in texts for ch in t if ch.isdigit())
        assert "123" in digits

    def test_trace_round_trip_through_json(self, tmp_path):
        script = make_batch_scripts(1, seed=5)[0]
        gen = generate_recording(script, seed=0)
        p = gen.trace.write(tmp_path / "trace.json")
        loaded = GroundTruthTrace.load(p)
        assert loaded.to_json() == gen.trace.to_json()

    def test_write_produces_loadable_fixture_directory(self, tmp_path):
        from recap.adapters import DirectoryAnnotations
        from recap.frames import load_recording

        script = make_batch_scripts(1, seed=6)[0]
        gen = generate_recording(script, seed=0)
        root = gen.write(tmp_path / "rec")
        rec = load_recording(root)
        assert len(rec) == len(gen.recording)
        np.testing.assert_array_equal(rec.frames[0].pixels,
                                      gen.recording.frames[0].pixels)
        fixtures = DirectoryAnnotations()
        items = fixtures.ocr_items(rec.frames[10])
        expected = gen.annotations.ocr_items(gen.recording.frames[10])
        assert [i.text for i in items] == [i.text for i in expected]
        assert (root / "trace.json").exists()


class TestBatchScripts:
    def test_deterministic(self):
        a = make_batch_scripts(4, seed=21)
        b = make_batch_scripts(4, seed=21)
        for sa, sb in zip(a, b):
            assert sa == sb

    def test_covers_all_indicator_styles(self):
        styles = {s.indicator_style for s in make_batch_scripts(6, seed=3)}
        assert styles == {"default", "cursor", "custom"}

    def test_mixed_action_kinds(self):
        kinds = set()
        for s in make_batch_scripts(20, seed=3):
            kinds.update(a.kind for a in s.actions)
        assert kinds == {"tap", "scroll", "input"}
