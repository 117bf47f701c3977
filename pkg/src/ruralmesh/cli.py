"""Command-line entry point: ``validate``, ``run`` and ``report``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from .engine import Simulation
from .metrics import format_csv, format_text
from .model import SimulationError
from .scenario import ScenarioParseError, has_errors, load_scenario, validate_scenario

EXIT_OK, EXIT_PARSE, EXIT_SCENARIO, EXIT_RUNTIME = 0, 2, 3, 4


def _setup_logging() -> None:
    level = os.environ.get("RURALMESH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ruralmesh",
                                 description="Rural e-services data-ferry simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("scenario")

    r = sub.add_parser("run", help="simulate a scenario and write a JSON report")
    r.add_argument("scenario")
    r.add_argument("--until-hours", type=float, required=True)
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--out", required=True)
    r.add_argument("--event-log", action="store_true", help="include the full event log")

    p = sub.add_parser("report", help="summarise a report file")
    p.add_argument("report")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    return ap


def _load(path: str):
    try:
        return load_scenario(path)
    except ScenarioParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return None


def main(argv: Optional[List[str]] = None) -> int:
    _setup_logging()
    args = _parser().parse_args(argv)

    if args.command == "validate":
        cfg = _load(args.scenario)
        if cfg is None:
            return EXIT_PARSE
        findings = validate_scenario(cfg)
        for f in findings:
            print(f)
        if not findings:
            print("ok")
        return EXIT_SCENARIO if has_errors(findings) else EXIT_OK

    if args.command == "run":
        cfg = _load(args.scenario)
        if cfg is None:
            return EXIT_PARSE
        findings = validate_scenario(cfg)
        if has_errors(findings):
            for f in findings:
                print(f, file=sys.stderr)
            return EXIT_SCENARIO
        for f in findings:
            print(f, file=sys.stderr)
        try:
            report = Simulation(cfg, args.until_hours * 3600.0, seed=args.seed,
                                event_log=args.event_log).run()
        except SimulationError as e:
            print(f"simulation aborted: {e}", file=sys.stderr)
            return EXIT_RUNTIME
        Path(args.out).write_text(report.to_json())
        return EXIT_OK

    try:
        data = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read report: {e}", file=sys.stderr)
        return EXIT_PARSE
    sys.stdout.write(format_text(data) if args.format == "text" else format_csv(data))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
