"""Command line interface: caption | gen | eval | dump-signal.

Exit codes: 0 success, 2 recording/script/config problems, 3 adapter
failures.  Output files are only left behind on success.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from pathlib import Path

from recap.adapters import (
    AdapterError,
    AdapterSet,
    AdapterUnavailable,
    CommandCaptioner,
    CommandDetector,
    CommandOcr,
    CommandRunner,
    CommandTapLocalizer,
    DirectoryAnnotations,
    FixtureCaptioner,
    FixtureDetector,
    FixtureOcr,
)
from recap.config import ConfigError, PipelineConfig, load_config
from recap.frames import RecordingError, load_recording
from recap.harness.generate import generate_recording
from recap.harness.metrics import score_attributes, write_eval_report
from recap.harness.script import ScriptError, load_script
from recap.harness.trace import GroundTruthTrace
from recap.pipeline import run_pipeline
from recap.segmentation import signal_csv_lines
from recap.subtitles import write_report, write_srt

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ADAPTER = 3


def build_adapters(cfg: PipelineConfig, jobs: int | None = None) -> AdapterSet:
    """Command adapters where configured, fixture adapters otherwise."""
    a = cfg.adapters
    max_parallel = jobs if jobs is not None else a.max_parallel
    sem = threading.BoundedSemaphore(max(1, max_parallel))
    fixtures = DirectoryAnnotations()

    def runner(command: str, name: str) -> CommandRunner:
        return CommandRunner(command, name, timeout_s=a.timeout_s, semaphore=sem)

    ocr = CommandOcr(runner(a.ocr_command, "ocr")) if a.ocr_command \
        else FixtureOcr(fixtures)
    detector = CommandDetector(runner(a.detector_command, "detector")) \
        if a.detector_command else FixtureDetector(fixtures)
    captioner = CommandCaptioner(runner(a.captioner_command, "captioner")) \
        if a.captioner_command else FixtureCaptioner(fixtures)
    localizer = CommandTapLocalizer(runner(a.tap_localizer_command, "tap_localizer")) \
        if a.tap_localizer_command else None
    return AdapterSet(ocr=ocr, detector=detector, captioner=captioner,
                      tap_localizer=localizer)


def _cleanup(paths: list[Path]) -> None:
    for p in paths:
        try:
            p.unlink()
        except OSError:
            pass


def cmd_caption(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    rec = load_recording(args.input)
    adapters = build_adapters(cfg, args.jobs)
    result = run_pipeline(rec, adapters, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        written.append(write_report(result.report_json(rec.fps, cfg.echo()),
                                    out / "steps.json"))
        written.append(write_srt(result.cues, out / "captions.srt"))
        diagnostics = dict(result.diagnostics)
        diagnostics["clips"] = [
            {"index": i, "kind": c.kind.value, "start_frame": c.start_frame,
             "end_frame": c.end_frame, "steady_gap": list(c.steady_gap)
             if c.steady_gap else None}
            for i, c in enumerate(result.clips)]
        diagnostics["config_echo"] = cfg.echo()
        diag_path = out / "diagnostics.json"
        diag_path.write_text(json.dumps(diagnostics, sort_keys=True, indent=2) + "\n")
        written.append(diag_path)
        if args.dump_signal and result.signal is not None:
            sig_path = out / "signal.csv"
            sig_path.write_text("\n".join(signal_csv_lines(result.signal)) + "\n")
            written.append(sig_path)
    except Exception:
        _cleanup(written)
        raise
    print(f"{len(result.clips)} steps -> {out}")
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    script = load_script(args.input)
    generated = generate_recording(script, seed=args.seed)
    out = generated.write(args.out)
    print(f"{len(generated.recording)} frames, {len(generated.trace.actions)} "
          f"actions -> {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    rec = load_recording(args.input)
    trace = GroundTruthTrace.load(args.trace)
    if trace.frame_count != len(rec) or trace.width != rec.width \
            or trace.height != rec.height:
        raise RecordingError(
            f"trace ({trace.frame_count} frames {trace.width}x{trace.height}) does "
            f"not match recording ({len(rec)} frames {rec.width}x{rec.height})")
    adapters = build_adapters(cfg, args.jobs)
    result = run_pipeline(rec, adapters, cfg)
    report = score_attributes(result.clips, result.attrs, trace,
                              broaden=cfg.eval.broaden_frames,
                              scroll_tolerance_px=cfg.eval.scroll_tolerance_px)
    if args.json:
        print(json.dumps(report.to_json(), sort_keys=True, indent=2))
    else:
        print(report.to_text())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_eval_report(report, out / "eval.json")
    return EXIT_OK


def cmd_dump_signal(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    rec = load_recording(args.input)
    from recap.segmentation import compute_signal

    if len(rec) < 2:
        raise RecordingError("need at least 2 frames for a similarity signal")
    signal = compute_signal(rec, cfg.segmentation, cfg.ssim)
    text = "\n".join(signal_csv_lines(signal)) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recap",
        description="Caption GUI screen recordings as timed action steps.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, out_required: bool) -> None:
        p.add_argument("--input", required=True,
                       help="recording directory (or script file for gen)")
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--config", default=None,
                       help="JSON config file (falls back to $RECAP_CONFIG)")
        p.add_argument("--jobs", type=int, default=None,
                       help="max concurrent adapter processes")

    p = sub.add_parser("caption", help="segment, infer, and caption a recording")
    common(p, out_required=True)
    p.add_argument("--dump-signal", action="store_true",
                   help="also write the per-pair similarity signal as CSV")
    p.set_defaults(func=cmd_caption)

    p = sub.add_parser("gen", help="render a synthetic recording from a script")
    common(p, out_required=True)
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="run the pipeline and score it against a trace")
    common(p, out_required=False)
    p.add_argument("--trace", required=True, help="ground-truth trace.json")
    p.add_argument("--json", action="store_true", help="print machine-readable report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dump-signal", help="write the similarity signal as CSV")
    common(p, out_required=False)
    p.set_defaults(func=cmd_dump_signal)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdapterUnavailable as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ADAPTER
    except AdapterError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ADAPTER
    except (RecordingError, ScriptError, ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
