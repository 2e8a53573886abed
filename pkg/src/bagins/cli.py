"""Command-line entry point: ``bagins derive|individualize|simulate|evaluate|ri-table``.

Every command that writes files also writes one run manifest next to its
output.  Exit codes: 0 success, 2 input or validation error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .evaluation import DatasetError, aggregate, evaluate_participant, load_dataset, records_to_csv
from .heuristic import IndividualizationConfig, individualize_scale
from .pcm import PCMFormatError, ScaleAssignment, ScaleError, parse_pcm, realize
from .priority import (
    InvalidMatrixError,
    NonConvergenceError,
    RandomIndexTable,
    build_ri_table,
    consistency,
    default_ri_table,
)
from .studygen import StudyConfig, generate_batch

EXIT_INPUT = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def _write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _dump(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _manifest(command, config, seed, inputs, outputs, defaults_applied):
    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()
    return {
        "command": command,
        "tool_version": __version__,
        "seed": seed,
        "config": config,
        "config_digest": digest,
        "defaults_applied": defaults_applied,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
    }


def _emit(args, command, text, config, inputs, defaults_applied=False):
    """Write ``text`` to ``--out`` (plus manifest) or to stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    _write_atomic(out, text)
    manifest = _manifest(command, config, args.seed, inputs, [out], defaults_applied)
    _write_atomic(out.with_name(out.name + ".manifest.json"), _dump(manifest))


def _read_config(path):
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"{path}: cannot read config: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return doc


def _pick(doc, cls):
    return {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}


def _check_config_keys(doc):
    known = set(IndividualizationConfig.__dataclass_fields__) | set(StudyConfig.__dataclass_fields__)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise UsageError(f"unknown config field(s): {unknown}")


def _individualization_config(args):
    doc = _read_config(args.config)
    _check_config_keys(doc)
    picked = _pick(doc, IndividualizationConfig)
    return IndividualizationConfig.from_dict(picked), not picked


def _ri(args):
    return RandomIndexTable.load(args.ri) if args.ri else default_ri_table()


def _input_format(path, fmt):
    if fmt:
        return fmt
    return "csv" if Path(path).suffix.lower() == ".csv" else "json"


def _read_pcm(path, fmt):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    try:
        return parse_pcm(data, _input_format(path, fmt))
    except PCMFormatError as exc:
        raise PCMFormatError(str(exc), None) from None


def _read_scale(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict):
        doc = doc["scale"]
    return ScaleAssignment(tuple(doc))


# --- commands ----------------------------------------------------------------

def cmd_derive(args):
    path = Path(args.input)
    fmt = _input_format(path, args.format)
    doc = None
    if fmt == "json":
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"{path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise PCMFormatError(exc.msg, f"{path} line {exc.lineno} column {exc.colno}") from None
    ident = path.stem
    if isinstance(doc, dict) and "matrix" in doc:
        matrix = doc["matrix"]
        ident = doc.get("id", ident)
        scale = None
    else:
        pcm = _read_pcm(path, fmt)
        ident = pcm.id
        scale = _read_scale(args.scale) if args.scale else ScaleAssignment.default()
        matrix = realize(pcm, scale, v_max=max(9.0, scale.values[-1]))
    rep = consistency(matrix, _ri(args), args.method, args.tol, args.max_iter)
    out = {
        "id": ident,
        "method": rep.method,
        "weights": list(rep.weights),
        "lambda_max": rep.lambda_max,
        "ci": rep.ci,
        "cr": rep.cr,
        "iterations": rep.iterations,
    }
    if scale is not None:
        out["scale"] = list(scale.values)
    inputs = [path] + ([args.scale] if args.scale else [])
    _emit(args, "derive", _dump(out), {"method": args.method}, inputs)


def cmd_individualize(args):
    cfg, defaults = _individualization_config(args)
    pcm = _read_pcm(args.input, args.format)
    result = individualize_scale(pcm, cfg, _ri(args))
    inputs = [args.input] + ([args.config] if args.config else [])
    _emit(args, "individualize", _dump(result.to_dict()), cfg.to_dict(), inputs, defaults)


def cmd_simulate(args):
    doc = _read_config(args.config)
    _check_config_keys(doc)
    fields = _pick(doc, StudyConfig)
    defaults = not fields
    for key, flag in (("n", args.n), ("matrices", args.matrices),
                      ("perturb_prob", args.perturb_prob), ("weight_model", args.weight_model),
                      ("seed", args.seed)):
        if flag is not None:
            fields[key] = flag
    cfg = StudyConfig.from_dict(fields)
    args.seed = cfg.seed
    text = "".join(inst.to_json() + "\n" for inst in generate_batch(cfg))
    _emit(args, "simulate", text, cfg.to_dict(), [args.config] if args.config else [], defaults)


def cmd_evaluate(args):
    if args.out is None:
        raise UsageError("evaluate needs --out DIR")
    cfg, defaults = _individualization_config(args)
    fmt = {"json": "jsonl", "csv": "csv_dir"}.get(args.format)
    rows = load_dataset(args.dataset, fmt, args.truth)
    if not rows:
        raise DatasetError("no matrices found")
    missing = [pcm.id for pcm, truth in rows if truth is None]
    if missing:
        raise DatasetError(f"no ground truth for {missing[0]} (pass --truth)")
    ri = _ri(args)
    records = []
    for pcm, truth in rows:
        records.extend(evaluate_participant(pcm, truth, cfg, ri, args.method))
    summary = aggregate(records)
    out = Path(args.out)
    report, summary_path, manifest_path = out / "report.csv", out / "summary.json", out / "manifest.json"
    _write_atomic(report, records_to_csv(records))
    _write_atomic(summary_path, _dump(summary))
    config = {**cfg.to_dict(), "method": args.method}
    inputs = [args.dataset] + [p for p in (args.truth, args.config) if p]
    manifest = _manifest("evaluate", config, args.seed, inputs, [report, summary_path], defaults)
    _write_atomic(manifest_path, _dump(manifest))


def cmd_ri_table(args):
    lo, _, hi = args.dims.partition("-")
    dims = range(int(lo), int(hi or lo) + 1)
    seed = 42 if args.seed is None else args.seed
    args.seed = seed
    table = build_ri_table(dims, args.samples, seed)
    config = {"dims": [dims.start, dims.stop - 1], "samples": args.samples, "seed": seed}
    _emit(args, "ri-table", table.to_json() + "\n", config, [])


# --- parser ------------------------------------------------------------------

def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="random seed")
    parser.add_argument("--config", default=default, help="JSON config file")
    parser.add_argument("--out", default=default, help="output path")
    parser.add_argument("--format", choices=("json", "csv"), default=default, help="input format")


def build_parser():
    parser = argparse.ArgumentParser(prog="bagins", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    ri_flag = argparse.ArgumentParser(add_help=False)
    ri_flag.add_argument("--ri", help="random-index table JSON (default: shipped table)")
    method = argparse.ArgumentParser(add_help=False)
    method.add_argument("--method", choices=("eigenvector", "geometric_mean"), default="eigenvector")

    p = sub.add_parser("derive", parents=[common, ri_flag, method],
                       help="priorities and consistency of one matrix")
    p.add_argument("input", help="PCM file (JSON/CSV) or JSON {\"matrix\": [[...]]}")
    p.add_argument("--scale", help="scale JSON: list of 9 values or an individualize result")
    p.add_argument("--tol", type=float, default=1e-10, help="power-iteration tolerance")
    p.add_argument("--max-iter", type=int, default=1000, help="power-iteration step limit")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("individualize", parents=[common, ri_flag],
                       help="individualized scale for one PCM")
    p.add_argument("input", help="PCM file (JSON/CSV)")
    p.set_defaults(func=cmd_individualize)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic JSON-lines batch")
    p.add_argument("--n", type=int)
    p.add_argument("--matrices", type=int)
    p.add_argument("--perturb-prob", type=float)
    p.add_argument("--weight-model", choices=("uniform_simplex", "table1_fixed"))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", parents=[common, ri_flag, method],
                       help="fixed vs individualized scale against ground truth")
    p.add_argument("dataset", help="JSON-lines file or directory of PCM files")
    p.add_argument("--truth", help="ground-truth sidecar JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ri-table", parents=[common], help="derive the random-index table")
    p.add_argument("--samples", type=int, default=500_000)
    p.add_argument("--dims", default="3-15", help="dimension range, e.g. 3-15")
    p.set_defaults(func=cmd_ri_table)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, PCMFormatError, ScaleError, DatasetError, InvalidMatrixError,
            ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
