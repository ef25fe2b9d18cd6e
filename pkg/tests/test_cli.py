import json

import pytest

from recap.cli import main
from recap.harness.generate import generate_recording
from recap.harness.script import make_batch_scripts


@pytest.fixture(scope="module")
def script_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scripts") / "session.json"
    payload = {
        "name": "cli-session",
        "start_screen": "a",
        "screens": [
            {"id": "a", "elements": [
                {"id": "a_btn", "class": "button", "box": [40, 80, 140, 48],
                 "text": "Go", "text_confid": 0.97},
                {"id": "a_lbl", "class": "textview", "box": [40, 200, 160, 24],
                 "text": "Welcome"},
                {"id": "a_img", "class": "imageview", "box": [40, 260, 280, 140]},
                {"id": "a_sw", "class": "switch", "box": [260, 88, 56, 30]},
            ]},
            {"id": "b", "elements": [
                {"id": "b_text", "class": "textview", "box": [40, 60, 160, 24],
                 "text": "Arrived"},
                {"id": "b_img", "class": "imageview", "box": [40, 120, 280, 160]},
                {"id": "b_btn", "class": "button", "box": [40, 320, 140, 48],
                 "text": "Back"},
                {"id": "b_box", "class": "checkbox", "box": [260, 330, 28, 28]},
            ]},
        ],
        "actions": [{"kind": "tap", "target": "a_btn", "to_screen": "b"}],
    }
    path.write_text(json.dumps(payload))
    return path


@pytest.fixture(scope="module")
def generated_dir(tmp_path_factory, script_file):
    out = tmp_path_factory.mktemp("rec") / "session"
    assert main(["gen", "--input", str(script_file), "--out", str(out),
                 "--seed", "7"]) == 0
    return out


class TestGen:
    def test_writes_frames_trace_and_fixtures(self, generated_dir):
        assert (generated_dir / "manifest.json").exists()
        assert (generated_dir / "trace.json").exists()
        assert (generated_dir / "frame_000001.png").exists()
        assert (generated_dir / "frame_000001.ocr.json").exists()
        assert (generated_dir / "frame_000001.elements.json").exists()

    def test_rerun_is_byte_identical(self, tmp_path, script_file):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert main(["gen", "--input", str(script_file), "--out", str(a),
                     "--seed", "7"]) == 0
        assert main(["gen", "--input", str(script_file), "--out", str(b),
                     "--seed", "7"]) == 0
        for name in sorted(p.name for p in a.iterdir()):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_invalid_script_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "name": "bad", "start_screen": "a",
            "screens": [{"id": "a", "elements": []}],
            "actions": [{"kind": "tap", "target": "ghost", "to_screen": "a"}],
        }))
        assert main(["gen", "--input", str(bad), "--out", str(tmp_path / "o")]) == 2


class TestCaption:
    def test_end_to_end(self, generated_dir, tmp_path):
        out = tmp_path / "out"
        code = main(["caption", "--input", str(generated_dir), "--out", str(out),
                     "--dump-signal"])
        assert code == 0
        steps = json.loads((out / "steps.json").read_text())
        assert len(steps) == 1
        assert steps[0]["kind"] == "TAP"
        assert (out / "captions.srt").read_text().startswith("1\n")
        diagnostics = json.loads((out / "diagnostics.json").read_text())
        assert "config_echo" in diagnostics
        assert (out / "signal.csv").read_text().startswith("frame_index,score")

    def test_empty_directory_exits_2(self, tmp_path, capsys):
        empty = tmp_path / "nothing"
        empty.mkdir()
        assert main(["caption", "--input", str(empty),
                     "--out", str(tmp_path / "o")]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_adapter_command_exits_3(self, generated_dir, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(
            {"adapters": {"ocr_command": "/no/such/ocr-binary"}}))
        code = main(["caption", "--input", str(generated_dir),
                     "--out", str(tmp_path / "o"), "--config", str(cfg)])
        assert code == 3
        assert "ocr" in capsys.readouterr().err

    def test_config_env_fallback(self, generated_dir, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"caption": {"alpha": 0.8, "beta": 0.4}}))
        monkeypatch.setenv("RECAP_CONFIG", str(cfg))
        out = tmp_path / "out"
        assert main(["caption", "--input", str(generated_dir),
                     "--out", str(out)]) == 0
        steps = json.loads((out / "steps.json").read_text())
        assert steps[0]["config_echo"]["caption.alpha"] == 0.8

    def test_bad_config_exits_2(self, generated_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"caption": {"alpha": 0.4, "beta": 0.9}}))
        assert main(["caption", "--input", str(generated_dir),
                     "--out", str(tmp_path / "o"), "--config", str(cfg)]) == 2


class TestEval:
    def test_eval_prints_report(self, generated_dir, capsys):
        code = main(["eval", "--input", str(generated_dir),
                     "--trace", str(generated_dir / "trace.json"), "--json"])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["vs_f1"]["overall"] == pytest.approx(1.0, abs=0.05)
        assert report["classification_accuracy"] == 1.0

    def test_eval_table_output(self, generated_dir, capsys):
        assert main(["eval", "--input", str(generated_dir),
                     "--trace", str(generated_dir / "trace.json")]) == 0
        out = capsys.readouterr().out
        assert "TAP" in out and "overall" in out

    def test_trace_mismatch_exits_2(self, generated_dir, tmp_path, capsys):
        trace = json.loads((generated_dir / "trace.json").read_text())
        trace["frame_count"] = 999
        bad = tmp_path / "bad_trace.json"
        bad.write_text(json.dumps(trace))
        assert main(["eval", "--input", str(generated_dir),
                     "--trace", str(bad)]) == 2
        assert "does not match" in capsys.readouterr().err


class TestDumpSignal:
    def test_writes_csv(self, generated_dir, tmp_path):
        out = tmp_path / "signal.csv"
        assert main(["dump-signal", "--input", str(generated_dir),
                     "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "frame_index,score"
        assert len(lines) > 10
