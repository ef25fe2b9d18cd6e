import json
from pathlib import Path

import pytest

from recap.captions import StepDescription
from recap.config import PipelineConfig
from recap.segmentation import ActionClip, ActionKind
from recap.subtitles import (
    SubtitleCue,
    build_cues,
    format_srt_timestamp,
    parse_srt,
    srt_text,
    step_report,
    write_report,
    write_srt,
)

DOCS = Path(__file__).resolve().parent.parent / "docs"


def step(i, kind=ActionKind.TAP, template_id=1, text='Tap "OK" button'):
    return StepDescription(clip_index=i, kind=kind, template_id=template_id,
                           text=text, slots={"object_text": "OK"}, confidence=0.97)


class TestBuildCues:
    def test_cue_spans_until_next_clip(self):
        clips = [ActionClip(ActionKind.TAP, 30, 40),
                 ActionClip(ActionKind.TAP, 150, 160)]
        steps = [step(0), step(1)]
        cues = build_cues(clips, steps, fps=30.0)
        assert (cues[0].start_ms, cues[0].end_ms) == (1000, 4999)
        assert cues[1].start_ms == 5000

    def test_final_cue_gets_fixed_tail(self):
        clips = [ActionClip(ActionKind.TAP, 60, 90)]
        cues = build_cues(clips, [step(0)], fps=30.0)
        assert (cues[0].start_ms, cues[0].end_ms) == (2000, 3000 + 1500)

    def test_counts_must_match(self):
        with pytest.raises(ValueError):
            build_cues([ActionClip(ActionKind.TAP, 0, 2)], [], fps=30.0)

    def test_cues_sorted_and_non_overlapping(self):
        clips = [ActionClip(ActionKind.TAP, 10 + 40 * i, 20 + 40 * i)
                 for i in range(4)]
        cues = build_cues(clips, [step(i) for i in range(4)], fps=30.0)
        for a, b in zip(cues, cues[1:]):
            assert a.end_ms < b.start_ms


class TestSrt:
    def test_exact_block_format(self):
        cue = SubtitleCue(index=1, start_ms=1000, end_ms=4999,
                          text='Tap "OK" button')
        assert srt_text([cue]) == \
            '1\n00:00:01,000 --> 00:00:04,999\nTap "OK" button\n\n'

    def test_empty_cue_list_gives_empty_file(self, tmp_path):
        p = write_srt([], tmp_path / "x.srt")
        assert p.read_bytes() == b""

    def test_timestamp_format(self):
        assert format_srt_timestamp(0) == "00:00:00,000"
        assert format_srt_timestamp(3_723_456) == "01:02:03,456"

    def test_round_trip(self, tmp_path):
        cues = [SubtitleCue(1, 1000, 4999, 'Tap "OK" button'),
                SubtitleCue(2, 5000, 9000, "Scroll up a quarter of the screen")]
        p = write_srt(cues, tmp_path / "captions.srt")
        assert parse_srt(p.read_text()) == cues

    def test_lf_endings_and_utf8(self, tmp_path):
        p = write_srt([SubtitleCue(1, 0, 10, "ok")], tmp_path / "x.srt")
        raw = p.read_bytes()
        assert b"\r" not in raw


class TestReport:
    def make_report(self):
        cfg = PipelineConfig()
        clips = [ActionClip(ActionKind.TAP, 30, 40)]
        return step_report(clips, [step(0)], fps=30.0, config_echo=cfg.echo())

    def test_report_fields(self):
        report = self.make_report()
        entry = report[0]
        assert entry["index"] == 0
        assert entry["kind"] == "TAP"
        assert entry["start_ms"] == 1000
        assert entry["end_ms"] == 1333
        assert entry["config_echo"]["caption.alpha"] == 0.9

    def test_validates_against_schema(self):
        import jsonschema

        schema = json.loads((DOCS / "report.schema.json").read_text())
        jsonschema.validate(self.make_report(), schema)

    def test_rerun_is_byte_identical(self, tmp_path):
        a = write_report(self.make_report(), tmp_path / "a.json")
        b = write_report(self.make_report(), tmp_path / "b.json")
        assert a.read_bytes() == b.read_bytes()
