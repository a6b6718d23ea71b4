"""Batch entry point: run bundled or external scenarios headless,
write logs/summaries/CSV extracts, and audit logs independently.

Exit codes: 0 ok, 2 invariant violation, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .model import ModelError, load_model_file
from .scenario import RunSpec, ScenarioError, read_log, run, verify_log

ASSET_DIR = Path(__file__).resolve().parent / "assets"

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_INPUT = 3


def resolve_asset(value: str, suffix: str) -> str:
    """Accept a filesystem path or the name of a bundled asset."""
    path = Path(value)
    if path.exists():
        return str(path)
    candidate = ASSET_DIR / value
    if candidate.exists():
        return str(candidate)
    candidate = ASSET_DIR / f"{value}{suffix}"
    if candidate.exists():
        return str(candidate)
    raise FileNotFoundError(f"no such file or bundled asset: {value}")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcretarget",
        description="Multi-contact whole-body retargeting: headless scenario runs and log audits.",
    )
    parser.add_argument("--model", required=True, help="model file path or bundled name (biped, quadruped, ...)")
    parser.add_argument("--weights", default=None, help="weights config file (key=value); defaults baked in")
    parser.add_argument("--scenario", default=None, help="scenario file path or bundled name (reach, push, ...)")
    parser.add_argument("--tracking", default=None, choices=["perfect", "spring-damper"], help="override the scenario's tracking mode")
    parser.add_argument("--rate", type=float, default=1000.0, help="tick rate in Hz (default 1000)")
    parser.add_argument("--out", default="out", help="output directory for log/summary/CSV")
    parser.add_argument("--seed", type=int, default=0, help="run seed recorded with the log")
    parser.add_argument("--probe-period", type=int, default=50, help="ticks between max-force probes")
    parser.add_argument("--verify", action="store_true", help="audit the produced (or given) log against the safety invariant")
    parser.add_argument("--log", default=None, help="existing log to verify (skips the run)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        model_path = resolve_asset(args.model, ".urdf")
        model = load_model_file(model_path)
    except (FileNotFoundError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.log is not None:
        try:
            result = verify_log(model, read_log(args.log))
        except (FileNotFoundError, KeyError, ScenarioError, ValueError) as exc:
            print(f"error: log verification failed to parse: {exc!r}", file=sys.stderr)
            return EXIT_INPUT
        print(json.dumps(result, indent=2, default=float))
        return EXIT_OK if result["ok"] else EXIT_VIOLATION

    if args.scenario is None:
        print("error: --scenario (or --log for verification) is required", file=sys.stderr)
        return EXIT_INPUT
    try:
        scenario_path = resolve_asset(args.scenario, ".jsonl")
        weights_path = resolve_asset(args.weights, ".cfg") if args.weights else None
        spec = RunSpec(
            model=model_path,
            scenario=scenario_path,
            weights=weights_path,
            tracking=args.tracking,
            tick_rate=args.rate,
            out_dir=args.out,
            seed=args.seed,
            probe_period=args.probe_period,
        )
        session, records, summary = run(spec)
    except (FileNotFoundError, ModelError, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:
        print(f"error: run aborted: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(summary.to_dict(), indent=2, default=float))

    if args.verify:
        log_path = Path(args.out) / "log.jsonl"
        result = verify_log(model, read_log(log_path))
        print(json.dumps(result, indent=2, default=float))
        if not result["ok"]:
            return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
