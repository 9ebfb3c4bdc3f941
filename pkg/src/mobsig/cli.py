"""Command-line interface: run scenarios, check traces, draw sequence diagrams.

Exit codes
    run      0 success; 2 scenario invalid (no trace written); 3 simulation
             aborted at runtime (partial trace written for post-mortem).
    check    0 conformant; 1 violation found; 2 trace unreadable.
    diagram  0 rendered; 2 trace unreadable.
"""

from __future__ import annotations

import argparse
import json
import sys

from .conformance import TEMPLATES, check_trace, load_trace
from .core import (
    FE_DAEMON,
    FE_ENVIRONMENT,
    FE_FLOW_MANAGEMENT,
    FE_HOLM,
    FE_MRRM,
    FE_PATH_SELECTION,
)
from .scenario import ScenarioError, load_scenario
from .simkernel import SimulationError, TraceRecord
from .simulation import Simulation

_COLUMN_WIDTH = 12
_TIME_GUTTER = 12
_BASE_COLUMNS = (
    FE_MRRM,
    FE_HOLM,
    FE_PATH_SELECTION,
    FE_FLOW_MANAGEMENT,
    FE_ENVIRONMENT,
    FE_DAEMON,
)


def render_diagram(records: list[TraceRecord], width: int = _COLUMN_WIDTH) -> str:
    """Render a trace as a plain-text sequence diagram, one row per message."""
    seen = {r.sender for r in records} | {r.receiver for r in records}
    columns = list(_BASE_COLUMNS) + sorted(seen - set(_BASE_COLUMNS))
    centers = {fe: i * width + width // 2 for i, fe in enumerate(columns)}
    lines = [" " * _TIME_GUTTER + "".join(fe.center(width) for fe in columns)]
    for record in records:
        row = [" "] * (len(columns) * width)
        for center in centers.values():
            row[center] = "|"
        src = centers[record.sender]
        dst = centers[record.receiver]
        if src == dst:
            row[src] = "*"
        else:
            for x in range(min(src, dst) + 1, max(src, dst)):
                row[x] = "-"
            if dst > src:
                row[dst - 1] = ">"
            else:
                row[dst + 1] = "<"
        label = record.name
        flow = record.params.get("flow")
        if flow is not None:
            label += f" [flow={flow}]"
        lines.append(f"{record.at:>10}  " + "".join(row).rstrip() + "  " + label)
    return "\n".join(line.rstrip() for line in lines) + "\n"


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_scenario(args.scenario, seed_override=args.seed)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    simulation = Simulation(config)
    try:
        result = simulation.run()
    except SimulationError as exc:
        try:
            simulation.recorder.write(args.trace)
        except OSError as write_exc:
            print(f"cannot write partial trace: {write_exc}", file=sys.stderr)
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 3
    try:
        simulation.recorder.write(args.trace)
        with open(args.metrics, "w", encoding="utf-8") as handle:
            json.dump(result.metrics, handle, indent=2, sort_keys=True)
            handle.write("\n")
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return 3
    totals = result.metrics["totals"]
    print(
        f"run complete: {len(result.records)} records, "
        f"{totals['count']} handovers ({totals['succeeded']} ok, {totals['failed']} failed), "
        f"final t={result.final_time_us}us"
    )
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    try:
        records = load_trace(args.trace)
    except (OSError, ValueError) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return 2
    verdict = check_trace(records, template=args.template)
    if verdict.ok:
        print(f"conformant ({len(records)} records, template={args.template})")
        return 0
    print(f"violation: {verdict.describe()}", file=sys.stderr)
    return 1


def _cmd_diagram(args: argparse.Namespace) -> int:
    try:
        records = load_trace(args.trace)
    except (OSError, ValueError) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(render_diagram(records))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mobsig",
        description="Deterministic simulator for multi-access handover signaling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate a scenario, write trace and metrics")
    run_p.add_argument("--scenario", required=True, help="scenario JSON file")
    run_p.add_argument("--trace", required=True, help="output trace (JSON Lines)")
    run_p.add_argument("--metrics", required=True, help="output metrics JSON")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    check_p = sub.add_parser("check", help="check a trace against sequence templates")
    check_p.add_argument("--trace", required=True, help="trace file to check")
    check_p.add_argument(
        "--template",
        default="auto",
        choices=["auto"] + sorted(TEMPLATES),
        help="template name, or 'auto' to match each handover's variant",
    )

    diagram_p = sub.add_parser("diagram", help="render a trace as a sequence diagram")
    diagram_p.add_argument("--trace", required=True, help="trace file to render")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "check": _cmd_check, "diagram": _cmd_diagram}
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
