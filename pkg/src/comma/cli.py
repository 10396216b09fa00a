"""Command-line entry point: `comma <subcommand> --config <path> [...]`.

Subcommands map onto sweep kinds; a config file or a named preset is
required.  Exit codes: 0 success, 1 config error, 2 runtime failure,
3 all rows infeasible.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from comma.experiments import (
    PRESETS,
    ConfigError,
    run_sweep,
    validate_config,
)

SUBCOMMAND_KINDS = {
    "bound-achannel": "achannel-seff",
    "bound-awgn": "achannel-ebn0",
    "sim-amp": "amp-missrate",
    "sweep-se": "comma-seff-perfect",
    "sweep-se-csi": "comma-seff-estimated",
    "mimo-fbl": "mimo-fbl",
    "mf-scaling": "mf-scaling",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comma",
        description="COMMA bound evaluation and link-level simulation sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMAND_KINDS.items():
        p = sub.add_parser(name, help=f"run a {kind} sweep")
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--preset", choices=sorted(PRESETS), help="built-in config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the CSV output path")
        p.add_argument("--trace", action="store_true", help="verbose progress")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    expected_kind = SUBCOMMAND_KINDS[args.command]

    if args.config is None and args.preset is None:
        print("error: provide --config or --preset", file=sys.stderr)
        return 1
    try:
        text = PRESETS[args.preset] if args.preset else open(args.config).read()
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 1
    try:
        spec = validate_config(text)
    except ConfigError as e:
        for msg in e.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 1

    overrides = {}
    if spec.kind != expected_kind and "kind" not in text:
        overrides["kind"] = expected_kind
    elif spec.kind != expected_kind:
        # explicit kind in the config must match the subcommand
        print(
            f"config error: kind {spec.kind!r} does not match subcommand "
            f"{args.command!r} (expected {expected_kind!r})",
            file=sys.stderr,
        )
        return 1
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if overrides:
        spec = replace(spec, **overrides)

    try:
        if args.trace:
            print(f"running {spec.kind} sweep -> {spec.out}", file=sys.stderr)
        summary = run_sweep(spec)
    except Exception as e:  # noqa: BLE001 - runtime failures map to exit 2
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2
    print(
        f"{summary.out}: {len(summary.rows)} rows "
        f"({summary.n_ok} ok, {summary.n_infeasible} infeasible, "
        f"{summary.n_failed} failed)"
    )
    if summary.rows and summary.n_ok == 0:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
