"""Command-line scenario driver.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Environment variables are never consulted; the config file plus the flags
below are the single source of truth. `--threads` affects speed only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ScenarioConfig, unwrap_manifest, validate
from .errors import ConfigError
from .runner import run_scenario


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="disordyn",
        description="Run a disorder-ensemble / master-equation scenario and "
        "write a reproducible artifact bundle.",
    )
    p.add_argument("--config", required=True, help="path to a scenario JSON "
                   "(a bundle manifest.json is also accepted)")
    p.add_argument("--out", help="output bundle directory (overrides config)")
    p.add_argument("--scenario", help="override the scenario name from the config")
    p.add_argument("--seed", type=int, help="override master_seed from the config")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for ensemble realizations (speed only)")
    p.add_argument("--validate-only", action="store_true",
                   help="report diagnostics without running")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return 2
    if isinstance(raw, dict):
        raw = unwrap_manifest(raw)
    if not isinstance(raw, dict):
        print("config error: config must be a JSON object", file=sys.stderr)
        return 2
    if args.scenario is not None:
        raw["scenario"] = args.scenario
    if args.seed is not None:
        raw["master_seed"] = args.seed

    diagnostics = validate(raw)
    for d in diagnostics:
        print(f"{d.level}: [{d.code}] {d.message}", file=sys.stderr)
    errors = [d for d in diagnostics if d.level == "error"]
    if args.validate_only:
        return 2 if errors else 0
    if errors:
        return 2

    try:
        config = ScenarioConfig.from_dict(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or config.output_dir
    if not out_dir:
        print("config error: no output directory (--out or config output_dir)", file=sys.stderr)
        return 2
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".write_probe")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        print(f"config error: output directory not writable: {exc}", file=sys.stderr)
        return 2

    try:
        code = run_scenario(config, out_dir, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if code != 0:
        print(f"numerical failure; see {os.path.join(out_dir, 'manifest.json')}",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
