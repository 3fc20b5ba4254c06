"""Command-line front door: fit, score, benchmark, time, export, serve.

All randomness is seeded from flags (default 0) and no output embeds
timestamps, so identical invocations produce byte-identical files.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from . import baseline, service, teaching, tree as tree_mod, vspace
from .data import DatasetError, SchemaError, dump_dataset, load_dataset


def _configure_logging() -> None:
    level = os.environ.get("STAND_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _load_data(path: str):
    fmt = "json" if path.endswith(".json") else "csv"
    with open(path, "rb") as fh:
        return load_dataset(fh.read(), format=fmt)


def _load_tree(path: str) -> tree_mod.StandTree:
    return tree_mod.StandTree.from_json(Path(path).read_text(encoding="utf-8"))


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _cmd_fit(args) -> int:
    data = _load_data(args.data)
    tree = tree_mod.fit(data, alpha=args.alpha)
    _write(args.out, tree.to_json())
    return 0


def _cmd_predict(args) -> int:
    tree = _load_tree(args.model)
    data = _load_data(args.data)
    lines = ["prediction"]
    for x in data.examples:
        lines.append(str(tree.predict(x)))
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_certainty(args) -> int:
    tree = _load_tree(args.model)
    data = _load_data(args.data)
    lines = ["signed_ic,prediction"]
    for x in data.examples:
        report = vspace.instance_certainty(tree, x)
        lines.append(f"{report.signed_ic:.6f},{report.prediction}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_bench(args) -> int:
    config_obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    config = teaching.ExperimentConfig.from_json_obj(config_obj)
    traces = teaching.run_experiment(config)
    _write(args.out, teaching.traces_to_csv(traces))
    if args.json_out:
        payload = teaching.traces_to_json_obj(traces)
        payload["config"] = config_obj
        _write(args.json_out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_time(args) -> int:
    data = _load_data(args.data)
    fit_ms, predict_ms = tree_mod.time_fit_predict(data, reps=args.reps, alpha=args.alpha)
    base = baseline_time(data, args.reps)
    sys.stdout.write(
        f"stand_fit_ms={fit_ms:.3f} stand_predict_ms={predict_ms:.3f} "
        f"tree_fit_ms={base:.3f}\n"
    )
    return 0


def baseline_time(data, reps: int) -> float:
    import time as _time

    total = 0.0
    for r in range(reps):
        t0 = _time.perf_counter()
        baseline.fit_tree(data, seed=r)
        total += _time.perf_counter() - t0
    return total * 1000.0 / reps


def _cmd_export(args) -> int:
    tree = _load_tree(args.model)
    if args.what == "json":
        _write(args.out, tree.to_json())
    elif args.what == "ambiguity":
        report = vspace.ambiguity(tree)
        _write(args.out, json.dumps(report.to_json_obj(), sort_keys=True) + "\n")
    elif args.what == "dnf":
        statements, truncated = vspace.enumerate_G(tree, limit=args.limit)
        lines = [vspace.render_dnf(s, tree.schema) for s in statements]
        if truncated:
            lines.append(f"# truncated at {args.limit}")
        _write(args.out, "\n".join(lines) + "\n")
    elif args.what == "data":
        _write(args.out, dump_dataset(tree.data, format="csv"))
    return 0


def _cmd_serve(args) -> int:
    sys.stderr.write(f"serving on http://{args.host}:{args.port}\n")
    service.serve(args.host, args.port, args.state_dir, args.ui_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stand",
        description="Option-tree stand classifier: fit, score, benchmark, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write its JSON export")
    p.add_argument("--data", required=True, help="CSV or JSON dataset path")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="predict labels for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("certainty", help="signed certainty per row as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_certainty)

    p = sub.add_parser("bench", help="run a teaching experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="-", help="trace CSV path")
    p.add_argument("--json-out", default=None, help="optional JSON trace path")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("time", help="timing harness: mean fit/predict durations")
    p.add_argument("--data", required=True)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(func=_cmd_time)

    p = sub.add_parser("export", help="export tree JSON, DNF statements or metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--what", choices=["json", "dnf", "ambiguity", "data"], default="json")
    p.add_argument("--limit", type=int, default=64, help="DNF enumeration cap")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("serve", help="serve the HTTP teaching API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--state-dir", default=None, help="session event-log directory")
    p.add_argument("--ui-dir", default=None, help="static UI bundle to host")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, SchemaError, ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
