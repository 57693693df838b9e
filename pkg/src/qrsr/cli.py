"""Command-line entry point: ``qrsr {encode,qart,repair,verify,sweep,analyze}``.

Exit codes: 0 success (and scannable), 1 finished but unscannable, 2 usage
error, 3 bad input or domain error.

Settings come from flags, then from an optional TOML ``--config`` file, then
from the library defaults. The config file has ``[code]``, ``[refine]``,
``[tilt]`` and ``[sweep]`` tables; unknown tables or keys are rejected.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from qrsr.errors import QrsrError
from qrsr.imaging import read_png, resize, write_png
from qrsr.qr_core import CodeConfig, ModuleMatrix, encode, rasterize
from qrsr.refine import RefineConfig, repair
from qrsr.srl import srl
from qrsr.verify import SweepCase, SweepReport, TiltSpec, overlay_errors, scan, sweep

log = logging.getLogger("qrsr")

EXIT_OK, EXIT_UNSCANNABLE, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3

SWEEP_KEYS = {"angles", "ec_levels", "messages", "corpus", "photos", "format"}


class UsageError(Exception):
    """Bad flags or config keys (exit 2)."""


class InputError(Exception):
    """Unreadable or invalid input files (exit 3)."""


# ---------------------------------------------------------------- config


def load_config(path) -> dict:
    """Read and validate a TOML job config."""
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {p}")
    try:
        with open(p, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"config file {p} is not valid TOML: {exc}") from exc
    allowed = {
        "code": {f.name for f in dataclasses.fields(CodeConfig)},
        "refine": {f.name for f in dataclasses.fields(RefineConfig)},
        "tilt": {f.name for f in dataclasses.fields(TiltSpec)},
        "sweep": SWEEP_KEYS,
    }
    for table, values in raw.items():
        if table not in allowed or not isinstance(values, dict):
            raise UsageError(f"unknown config table [{table}]")
        unknown = set(values) - allowed[table]
        if unknown:
            raise UsageError(f"unknown key(s) in [{table}]: {', '.join(sorted(unknown))}")
    return raw


def _merge(defaults: dict, config: dict, flags: dict) -> dict:
    out = dict(defaults)
    out.update(config)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def code_config(args, config: dict) -> CodeConfig:
    flags = {
        "version": args.version,
        "ec_level": args.ec,
        "mask_id": args.mask,
        "module_px": args.module_px,
        "quiet_px": args.quiet_px,
    }
    return CodeConfig(**_merge({}, config.get("code", {}), flags))


def refine_config(args, config: dict, code: CodeConfig) -> RefineConfig:
    flags = {
        "srl_weight": getattr(args, "srl_weight", None),
        "perceptual_weight": getattr(args, "perceptual_weight", None),
        "step_size": getattr(args, "step_size", None),
        "tau": getattr(args, "tau", None),
        "max_iters": getattr(args, "max_iters", None),
        "step_rule": getattr(args, "step_rule", None),
    }
    return RefineConfig.for_level(code.ec_level, **_merge({}, config.get("refine", {}), flags))


def tilt_spec(args, config: dict) -> TiltSpec:
    flags = {"degrees": getattr(args, "tilt", None), "focal": getattr(args, "focal", None)}
    return TiltSpec(**_merge({}, config.get("tilt", {}), flags))


def resolve_jobs(value) -> int:
    if value is None:
        value = os.environ.get("QRSR_JOBS", "1")
    try:
        jobs = int(value)
    except ValueError as exc:
        raise UsageError(f"jobs must be an integer, got {value!r}") from exc
    if jobs < 1:
        raise UsageError("jobs must be >= 1")
    return jobs


def _input_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input not found: {p}")
    return p


def _read_image(path, code: CodeConfig):
    p = _input_file(path)
    try:
        image = read_png(p)
    except OSError as exc:
        raise InputError(f"cannot read image {p}: {exc}") from exc
    if image.shape[:2] != (code.image_px, code.image_px):
        raise InputError(
            f"{p} is {image.shape[1]}x{image.shape[0]}, expected {code.image_px}x{code.image_px}"
        )
    return image


def _emit(text: str, out_path) -> None:
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


# -------------------------------------------------------------- commands


def cmd_encode(args, config) -> int:
    code = code_config(args, config)
    matrix = encode(args.message, code)
    out = Path(args.out)
    write_png(out, rasterize(matrix, code))
    matrix_path = Path(args.matrix) if args.matrix else out.with_suffix(".txt")
    matrix_path.write_text(matrix.to_text())
    print(f"wrote {out} ({code.image_px}x{code.image_px}) and {matrix_path}")
    return EXIT_OK


def cmd_qart(args, config) -> int:
    from qrsr.qart import desired_pattern, transform

    code = code_config(args, config)
    p = _input_file(args.reference)
    reference = read_png(p)
    pattern = desired_pattern(reference, code)
    matrix, report = transform(args.message, code, pattern)
    out = Path(args.out)
    write_png(out, rasterize(matrix, code))
    out.with_suffix(".txt").write_text(matrix.to_text())
    _emit(json.dumps(report.as_dict(), sort_keys=True) + "\n", args.report)
    return EXIT_OK


def _repair_file(job):
    src, dst, message, code, cfg = job
    image = read_png(src)
    if image.shape[:2] != (code.image_px, code.image_px):
        image = resize(image, code.image_px)
    result = repair(image, message, code, cfg)
    dst = Path(dst)
    write_png(dst, result.image)
    dst.with_suffix(".trace.jsonl").write_text(result.trace.to_jsonl())
    write_png(dst.with_suffix(".overlay.png"), overlay_errors(result.image, result.target, code))
    return {
        "input": str(src),
        "output": str(dst),
        "scannable": result.decoded,
        "iterations": result.trace.iterations,
        "final_error_rate": result.trace.final_error_rate,
        "stop_reason": result.trace.stop_reason,
        "corrections": list(result.corrections),
    }


def cmd_repair(args, config) -> int:
    code = code_config(args, config)
    cfg = refine_config(args, config, code)
    if args.dir:
        src_dir = Path(args.input)
        if not src_dir.is_dir():
            raise InputError(f"not a directory: {src_dir}")
        out_dir = Path(args.out)
        inputs = sorted(src_dir.glob("*.png"))
        if not inputs:
            raise InputError(f"no PNG files in {src_dir}")
        jobs = [(p, out_dir / p.name, args.message, code, cfg) for p in inputs]
        n_workers = resolve_jobs(args.jobs)
        if n_workers > 1:
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                rows = list(pool.map(_repair_file, jobs))
        else:
            rows = [_repair_file(j) for j in jobs]
        _emit(json.dumps({"items": rows}, sort_keys=True) + "\n", args.report)
        return EXIT_OK if all(r["scannable"] for r in rows) else EXIT_UNSCANNABLE
    _input_file(args.input)
    row = _repair_file((Path(args.input), Path(args.out), args.message, code, cfg))
    _emit(json.dumps(row, sort_keys=True) + "\n", args.report)
    return EXIT_OK if row["scannable"] else EXIT_UNSCANNABLE


def cmd_verify(args, config) -> int:
    code = code_config(args, config)
    tilt = tilt_spec(args, config)
    image = _read_image(args.input, code)
    target = ModuleMatrix.from_text(_input_file(args.target).read_text()) if args.target else None
    outcome = scan(image, args.message, code, tilt, target)
    if args.format == "table":
        verdict = "scannable" if outcome.scannable else "unscannable"
        print(f"{verdict}  angle={tilt.degrees:g}  corrections={outcome.corrections}  error_rate={outcome.error_rate:.4f}")
    else:
        print(json.dumps({"angle": tilt.degrees, "ec_level": code.ec_level, **outcome.as_dict()}, sort_keys=True))
    return EXIT_OK if outcome.scannable else EXIT_UNSCANNABLE


def _sweep_photos(settings: dict, code: CodeConfig, base_dir: Path):
    if "photos" in settings:
        folder = Path(settings["photos"])
        if not folder.is_absolute():
            folder = base_dir / folder
        if not folder.is_dir():
            raise InputError(f"photo directory not found: {folder}")
        paths = sorted(folder.glob("*.png"))
        if not paths:
            raise InputError(f"no PNG files in {folder}")
        return [resize(read_png(p), code.image_px) for p in paths]
    from qrsr.corpus import desk_corpus

    return [e.photo for e in desk_corpus(int(settings.get("corpus", 10)), cfg=code)]


def cmd_sweep(args, config) -> int:
    base = code_config(args, config)
    tilt_defaults = tilt_spec(args, config)
    settings = _merge({"angles": [0], "ec_levels": [base.ec_level], "messages": ["Thanks reviewer!"],
                       "format": "table"}, config.get("sweep", {}), {"format": args.format})
    cases = [
        SweepCase(base.replace(ec_level=ec), TiltSpec(float(a), tilt_defaults.focal), msg)
        for ec in settings["ec_levels"]
        for a in settings["angles"]
        for msg in settings["messages"]
    ]
    base_dir = Path(args.config).parent if args.config else Path.cwd()
    photos = _sweep_photos(settings, base, base_dir) if cases else []
    overrides = dict(config.get("refine", {}))
    report = sweep(cases, photos, overrides, jobs=resolve_jobs(args.jobs)) if cases else SweepReport()
    if settings["format"] == "json":
        _emit(report.to_json() + "\n", args.out)
    else:
        _emit(report.to_table(), args.out)
    unscannable = any(r.successes < r.size for r in report.rows)
    return EXIT_UNSCANNABLE if unscannable else EXIT_OK


def cmd_analyze(args, config) -> int:
    code = code_config(args, config)
    image = _read_image(args.input, code)
    if args.target:
        target = ModuleMatrix.from_text(_input_file(args.target).read_text())
    else:
        target = encode(args.message, code)
    report = srl(image, target, code)
    _emit(report.to_json() + "\n", args.report)
    if args.overlay:
        write_png(args.overlay, overlay_errors(image, target, code))
    return EXIT_OK if report.error_rate == 0.0 else EXIT_UNSCANNABLE


# ---------------------------------------------------------------- parser


def _add_code_flags(p):
    g = p.add_argument_group("code geometry")
    g.add_argument("--version", type=int, help="QR version 1-5 (default 3)")
    g.add_argument("--ec", choices=["L", "M", "Q", "H"], help="error correction level (default M)")
    g.add_argument("--mask", type=int, choices=range(8), metavar="0-7", help="mask pattern (default 4)")
    g.add_argument("--module-px", type=int, help="pixels per module side (default 20)")
    g.add_argument("--quiet-px", type=int, help="quiet zone width in pixels (default 80)")
    p.add_argument("--config", help="TOML job config")


def _add_refine_flags(p):
    g = p.add_argument_group("refinement")
    g.add_argument("--srl-weight", type=float, help="scanning-loss scale (default 500)")
    g.add_argument("--perceptual-weight", type=float, help="perceptual scale (default 3)")
    g.add_argument("--step-size", type=float, help="initial step (default: automatic)")
    g.add_argument("--tau", type=float, help="error-rate gate (default follows --ec)")
    g.add_argument("--max-iters", type=int, help="iteration cap (default 200)")
    g.add_argument("--step-rule", choices=["fixed", "backtracking"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrsr", description="Make stylized images scannable as QR codes.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a message as a QR raster")
    p.add_argument("--message", required=True)
    p.add_argument("--out", default="code.png")
    p.add_argument("--matrix", help="module matrix text output (default: next to --out)")
    _add_code_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("qart", help="re-select padding bits to resemble a reference image")
    p.add_argument("reference")
    p.add_argument("--message", required=True)
    p.add_argument("--out", default="qart.png")
    p.add_argument("--report", help="match report JSON path (default stdout)")
    _add_code_flags(p)
    p.set_defaults(func=cmd_qart)

    p = sub.add_parser("repair", help="refine an image until it decodes")
    p.add_argument("input", help="input PNG, or a directory with --dir")
    p.add_argument("--message", required=True)
    p.add_argument("--out", default="repaired.png", help="output PNG, or a directory with --dir")
    p.add_argument("--dir", action="store_true", help="repair every PNG in the input directory")
    p.add_argument("--jobs", type=int, help="worker processes (default $QRSR_JOBS or 1)")
    p.add_argument("--report", help="summary JSON path (default stdout)")
    _add_code_flags(p)
    _add_refine_flags(p)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("verify", help="decode an image, optionally under camera tilt")
    p.add_argument("input")
    p.add_argument("--message", required=True)
    p.add_argument("--tilt", type=float, help="tilt angle in degrees (default 0)")
    p.add_argument("--focal", type=float, help="focal length in image widths (default 1.2)")
    p.add_argument("--target", help="module matrix text file for the error rate")
    p.add_argument("--format", choices=["json", "table"], default="json")
    _add_code_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="repair a corpus across EC levels, angles and messages")
    p.add_argument("--format", choices=["json", "table"])
    p.add_argument("--out", help="report path (default stdout)")
    p.add_argument("--jobs", type=int, help="worker processes (default $QRSR_JOBS or 1)")
    _add_code_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="per-module scanning loss report and error overlay")
    p.add_argument("input")
    p.add_argument("--message", help="payload whose plain encoding is the target")
    p.add_argument("--target", help="module matrix text file (overrides --message)")
    p.add_argument("--report", help="SRL JSON path (default stdout)")
    p.add_argument("--overlay", help="PNG with mis-binarizing modules tinted red")
    _add_code_flags(p)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "analyze" and not (args.message or args.target):
        parser.error("analyze needs --message or --target")
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except UsageError as exc:
        print(f"qrsr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, QrsrError, ValueError, TypeError, OSError) as exc:
        print(f"qrsr: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
