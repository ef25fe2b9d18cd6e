import json
import sys

import numpy as np
import pytest

from recap.adapters import (
    AdapterMalformedOutput,
    AdapterTimeout,
    AdapterUnavailable,
    CommandOcr,
    CommandRunner,
    CommandTapLocalizer,
    DirectoryAnnotations,
    FixtureOcr,
    NoIndicatorFound,
    parse_ocr_items,
)
from recap.frames import Frame


def frame_with_path(tmp_path, index=0):
    p = tmp_path / f"frame_{index + 1:06d}.png"
    p.write_bytes(b"")
    return Frame(index=index, timestamp_ms=0,
                 pixels=np.zeros((4, 4, 3), dtype=np.uint8), source_path=p)


# One-line adapter stubs runnable via `python -c`.
ECHO_OCR = (
    "import sys,json; req=json.loads(sys.stdin.readline()); "
    "print(json.dumps({'items':[{'text':'OK','box':[1,2,3,4],'confidence':0.9}],"
    "'schema':'1'}))"
)
BAD_JSON = "print('this is not json')"
SLEEPER = "import time,sys; sys.stdin.readline(); time.sleep(5)"
NOT_FOUND_TAP = (
    "import sys,json; sys.stdin.readline(); print(json.dumps({'found': False}))"
)


def runner(code, timeout=10.0):
    return CommandRunner(f'{sys.executable} -c "{code}"', name="test",
                         timeout_s=timeout)


class TestCommandProtocol:
    def test_ocr_request_response(self, tmp_path):
        ocr = CommandOcr(runner(ECHO_OCR))
        items = ocr.ocr(frame_with_path(tmp_path))
        assert len(items) == 1
        assert items[0].text == "OK"
        assert items[0].box == (1, 2, 3, 4)

    def test_request_carries_schema_and_op(self, tmp_path):
        code = (
            "import sys,json; req=json.loads(sys.stdin.readline()); "
            "assert req['schema']=='1' and req['op']=='ocr', req; "
            "print(json.dumps({'items': []}))"
        )
        assert CommandOcr(runner(code)).ocr(frame_with_path(tmp_path)) == []

    def test_malformed_output(self, tmp_path):
        with pytest.raises(AdapterMalformedOutput):
            CommandOcr(runner(BAD_JSON)).ocr(frame_with_path(tmp_path))

    def test_timeout(self, tmp_path):
        with pytest.raises(AdapterTimeout):
            CommandOcr(runner(SLEEPER, timeout=0.4)).ocr(frame_with_path(tmp_path))

    def test_missing_command(self, tmp_path):
        bad = CommandRunner("/no/such/adapter-binary", name="ocr", timeout_s=1.0)
        with pytest.raises(AdapterUnavailable, match="ocr"):
            CommandOcr(bad).ocr(frame_with_path(tmp_path))

    def test_tap_localizer_not_found(self, tmp_path):
        loc = CommandTapLocalizer(runner(NOT_FOUND_TAP))
        with pytest.raises(NoIndicatorFound):
            loc.locate([frame_with_path(tmp_path)])

    def test_tap_localizer_point(self, tmp_path):
        code = ("import sys,json; sys.stdin.readline(); "
                "print(json.dumps({'x': 0.25, 'y': 0.75}))")
        loc = CommandTapLocalizer(runner(code))
        assert loc.locate([frame_with_path(tmp_path)]) == (0.25, 0.75)

    def test_tap_localizer_rejects_out_of_range(self, tmp_path):
        code = ("import sys,json; sys.stdin.readline(); "
                "print(json.dumps({'x': 1.5, 'y': 0.5}))")
        with pytest.raises(AdapterMalformedOutput):
            CommandTapLocalizer(runner(code)).locate([frame_with_path(tmp_path)])


class TestFixtures:
    def test_directory_ocr_fixture(self, tmp_path):
        frame = frame_with_path(tmp_path)
        sidecar = tmp_path / "frame_000001.ocr.json"
        sidecar.write_text(json.dumps(
            [{"text": "OK", "box": [120, 300, 80, 40], "confidence": 0.98}]))
        items = FixtureOcr(DirectoryAnnotations()).ocr(frame)
        assert items[0].text == "OK"
        assert items[0].confidence == 0.98

    def test_missing_sidecar_is_empty(self, tmp_path):
        frame = frame_with_path(tmp_path)
        assert FixtureOcr(DirectoryAnnotations()).ocr(frame) == []

    def test_confidence_out_of_range_rejected(self):
        with pytest.raises(AdapterMalformedOutput):
            parse_ocr_items([{"text": "x", "box": [0, 0, 1, 1], "confidence": 1.4}])

    def test_bad_box_rejected(self):
        with pytest.raises(AdapterMalformedOutput):
            parse_ocr_items([{"text": "x", "box": [0, 0, 1], "confidence": 0.5}])
