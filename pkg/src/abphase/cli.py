"""Command-line interface: run scenarios, dump data, inspect presets."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import ScenarioValidationError
from .presets import preset_names, preset_tree
from .scenario import dump, load_scenario, render_toml, run


def _resolve_config(arg: str) -> str:
    """Accept a TOML path or 'preset:<name>'."""
    if arg.startswith("preset:"):
        return render_toml(preset_tree(arg.split(":", 1)[1]))
    return arg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abphase",
        description="Interferometric phase laboratory for configurable electromagnetic setups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run every applicable formula and audit")
    p_run.add_argument("config", help="scenario TOML path or preset:<name>")
    p_run.add_argument("--report", help="write the JSON report to this file")
    p_run.add_argument("--grid", help="override the surface grid as N,M")
    p_run.add_argument("--q-over-hbar", type=float, help="override the charge-to-action ratio")

    p_dump = sub.add_parser("dump", help="dump fields, a mesh, or worldlines as CSV")
    p_dump.add_argument("config", help="scenario TOML path or preset:<name>")
    p_dump.add_argument("--what", required=True, choices=["fields", "mesh", "worldlines"])
    p_dump.add_argument("--out", required=True, help="output CSV path")
    p_dump.add_argument("--sampling", help="fields grid, e.g. 'x=-2:2:10;y=-2:2:10;z=0;t=1.0'")
    p_dump.add_argument("--strategy", help="strategy label for mesh dumps")

    p_presets = sub.add_parser("presets", help="list or show bundled scenarios")
    presets_sub = p_presets.add_subparsers(dest="presets_command", required=True)
    presets_sub.add_parser("list", help="list preset names")
    p_show = presets_sub.add_parser("show", help="print a preset as TOML")
    p_show.add_argument("name")

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "presets":
        if args.presets_command == "list":
            for name in preset_names():
                print(name)
            return 0
        try:
            print(render_toml(preset_tree(args.name)), end="")
        except KeyError as exc:
            print(exc.args[0], file=sys.stderr)
            return 1
        return 0

    try:
        scn = load_scenario(_resolve_config(args.config))
    except ScenarioValidationError as exc:
        print("scenario validation failed:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return 1

    if args.command == "run":
        if args.grid:
            try:
                n, m = (int(v) for v in args.grid.split(","))
            except ValueError:
                print(f"--grid must be N,M, got {args.grid!r}", file=sys.stderr)
                return 1
            scn = dataclasses.replace(scn, grid_n=n, grid_m=m)
        if args.q_over_hbar is not None:
            scn = dataclasses.replace(scn, q_over_hbar=args.q_over_hbar)
        report = run(scn)
        text = report.to_json()
        print(text)
        if args.report:
            Path(args.report).write_text(text + "\n")
        return 0 if report.passed else 1

    if args.command == "dump":
        try:
            text = dump(scn, args.what, sampling=args.sampling, strategy=args.strategy)
        except ValueError as exc:
            print(str(exc), file=sys.stderr)
            return 1
        Path(args.out).write_text(text)
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
