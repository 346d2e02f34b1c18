"""``lead`` command-line interface: decode, sweep, analyze, ablate, validate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from . import analysis, tracefile
from .engine import decode
from .errors import InvalidConfigError, InvalidInputError, LeadError
from .runspec import CONDITIONS, RunSpec, sweep_override
from .tasks import exact_match

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(Exception):
    pass


def _parse_overrides(extra: Sequence[str]) -> dict:
    """Turn ``--a.b VALUE`` / ``--a.b=VALUE`` pairs into a dotted-path mapping."""
    out, i = {}, 0
    extra = list(extra)
    while i < len(extra):
        arg = extra[i]
        if not arg.startswith("--"):
            raise ConfigError(f"unexpected argument {arg!r}")
        key = arg[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"override {arg} needs a value")
            i += 1
            raw = extra[i]
        out[key] = yaml.safe_load(raw)
        i += 1
    return out


def _load_spec(args, overrides: dict) -> RunSpec:
    if args.config is None:
        spec = RunSpec({})
    else:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"--config: file not found: {path}")
        try:
            spec = RunSpec.from_file(path)
        except InvalidConfigError as exc:
            raise ConfigError(str(exc)) from exc
    if args.seed is not None:
        overrides = {**overrides, "seed": args.seed}
    if args.format is not None:
        overrides = {**overrides, "output.format": args.format}
    spec = spec.apply_overrides(overrides)
    problems = spec.violations()
    if problems:
        raise ConfigError("\n".join(problems))
    return spec


def _out_path(args, spec: RunSpec, default_suffix: str) -> Path:
    out = args.out or (spec.raw.get("output") or {}).get("path")
    if out is None:
        raise ConfigError(f"no output path: pass --out or set output.path (e.g. result{default_suffix})")
    return Path(out)


def _scorer(spec: RunSpec):
    expected = (spec.raw.get("score") or {}).get("expected")
    return exact_match(expected) if expected is not None else None


def _write_rows(path: Path, rows: list[dict], header: dict, fmt: str) -> None:
    if fmt == "jsonl":
        lines = [json.dumps({"config": header}, sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True) for r in rows]
        path.write_text("\n".join(lines) + "\n")
        return
    import csv
    import io
    buf = io.StringIO()
    buf.write(f"# config {json.dumps(header, sort_keys=True)}\n")
    cols = list(rows[0]) if rows else []
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([json.dumps(r[c]) if isinstance(r[c], (list, dict)) else r[c] for c in cols])
    path.write_text(buf.getvalue())


def cmd_decode(args, spec: RunSpec) -> int:
    resolved = spec.resolved()
    fmt = resolved["output"].get("format", "jsonl")
    out = _out_path(args, spec, f".{fmt}")
    model = spec.build_model()
    vision, text = spec.inputs()
    result = decode(model, vision, text, spec.lead_config())
    tracefile.write_trace(result.trace, out, fmt, header={"config": resolved})
    summary = result.summary()
    score = _scorer(spec)
    if score is not None:
        summary["score"] = score(result)
    summary_path = out.with_name(out.name + ".summary.json")
    summary_path.write_text(json.dumps({"config": resolved, "summary": summary}, indent=2, sort_keys=True) + "\n")
    print(f"{summary['termination']}: {summary['reasoning_length']} reasoning steps, "
          f"{summary['latent_steps']} latent, {summary['transitions']} transitions -> {out}")
    return EXIT_OK


def cmd_sweep(args, spec: RunSpec) -> int:
    resolved = spec.resolved()
    sw = spec.raw.get("sweep")
    if sw is None:
        raise ConfigError("sweep: section is required for the sweep command")
    fmt = resolved["output"].get("format", "jsonl")
    out = _out_path(args, spec, f".{fmt}")
    vision, text = spec.inputs()
    score = _scorer(spec)
    base = spec.raw.get("lead", {})
    rows = []
    for value in sw["values"]:
        lead = sweep_override(base, sw["axis"], value)
        for seed in sw.get("seeds", [0]):
            point = {**spec.raw, "lead": {**lead, "seed": seed}}
            pspec = RunSpec(point, spec.base_dir)
            model = pspec.build_model(seed_offset=seed if sw.get("vary_model_seed", True) else 0)
            result = decode(model, vision, text, pspec.lead_config())
            summary = result.summary()
            row = {"axis": sw["axis"], "value": value, "seed": seed,
                   **{k: summary[k] for k in ("termination", "reasoning_length", "answer_length",
                                              "latent_steps", "transitions", "injections",
                                              "mean_entropy")}}
            if score is not None:
                row["score"] = score(result)
            rows.append(row)
    _write_rows(out, rows, resolved, fmt)
    print(f"{len(rows)} sweep rows -> {out}")
    return EXIT_OK


def _trace_for_analysis(args, spec: RunSpec):
    if args.trace:
        _, records = tracefile.read_jsonl(args.trace)
        return records
    model = spec.build_model()
    vision, text = spec.inputs()
    return decode(model, vision, text, spec.lead_config()).trace


def cmd_analyze(args, spec: RunSpec) -> int:
    resolved = spec.resolved()
    fmt = resolved["output"].get("format", "jsonl")
    out = _out_path(args, spec, f".{fmt}")
    trace = _trace_for_analysis(args, spec)
    stats = analysis.entropy_summary(trace)
    markers = (spec.raw.get("analysis") or {}).get("markers", [])
    report = analysis.marker_entropy_report(trace, markers)
    row = {"kind": "entropy_summary", **stats.to_dict()}
    rows = [row, {"kind": "marker_report", **report.to_dict()}]
    if fmt == "csv":
        rows = [{"kind": "entropy_summary", "mean": stats.mean, "max": stats.max, "p50": stats.p50,
                 "p90": stats.p90, "latent_steps": stats.latent_steps, "transitions": stats.transitions,
                 "marker_mean": report.marker_mean, "other_mean": report.other_mean,
                 "difference": report.difference}]
    _write_rows(out, rows, resolved, fmt)
    print(f"mean entropy {stats.mean:.4f} over {len(stats.entropies)} steps -> {out}")
    return EXIT_OK


def cmd_ablate(args, spec: RunSpec) -> int:
    resolved = spec.resolved()
    fmt = resolved["output"].get("format", "jsonl")
    out = _out_path(args, spec, f".{fmt}")
    score = _scorer(spec)
    if score is None:
        raise ConfigError("score.expected: required for ablate (the toy task's correct answer)")
    ab = spec.raw.get("ablation") or {}
    model = spec.build_model()
    vision, text = spec.inputs()
    config = spec.lead_config()
    baseline = decode(model, vision, text, config)
    reports = []
    for condition in ab.get("conditions", list(CONDITIONS)):
        for segment in ab.get("segments", [1, 2, 3, 4, 5]):
            reports.append(analysis.masking_ablation(
                model, vision, text, config, condition, segment, score,
                fraction=ab.get("fraction", 0.25), seed=ab.get("seed", 0), baseline=baseline))
    rows = [r.to_dict() for r in reports]
    if fmt == "csv":
        for r in rows:
            r["masked_steps"] = " ".join(map(str, r["masked_steps"]))
    _write_rows(out, rows, resolved, fmt)
    print(f"{len(reports)} masking reports -> {out}")
    return EXIT_OK


def validate_config(path) -> list[str]:
    """Every violation in a run file or bare decoding config, without running anything."""
    spec = RunSpec.from_file(path)
    return spec.violations()


def cmd_validate(args) -> int:
    from .config import default_config_path
    path = Path(args.path or args.config or default_config_path())
    if not path.is_file():
        print(f"error: file not found: {path}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        problems = validate_config(path)
    except InvalidConfigError as exc:
        problems = [str(exc)]
    for p in problems:
        print(p)
    if problems:
        print(f"{path}: {len(problems)} violation(s)", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{path}: ok")
    return EXIT_OK


COMMANDS = {"decode": cmd_decode, "sweep": cmd_sweep, "analyze": cmd_analyze, "ablate": cmd_ablate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lead", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="run file (YAML)")
        if name == "validate":
            p.add_argument("path", nargs="?", help="file to check (default: shipped default config)")
            continue
        p.add_argument("--out", help="output path")
        p.add_argument("--format", choices=("jsonl", "csv"))
        p.add_argument("--seed", type=int)
        if name == "analyze":
            p.add_argument("--trace", help="analyze an existing lead_trace_v1 JSONL file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if args.command == "validate":
        if extra:
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
        return cmd_validate(args)
    try:
        spec = _load_spec(args, _parse_overrides(extra))
        return COMMANDS[args.command](args, spec)
    except (ConfigError, InvalidConfigError, InvalidInputError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LeadError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
