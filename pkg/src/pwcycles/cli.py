"""Command-line front end for the experiment harness.

Subcommands map onto manifest kinds; a JSON config supplies the inputs
and flags override its common fields.  Exit codes: 0 all checks passed,
1 at least one check failed, 2 configuration error, 3 runtime or
numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .manifest import ExperimentManifest, ManifestError, emit_table, run_manifest

_SUBCOMMANDS = {
    "verify": "verify_identities",
    "reproduce-hn": "reproduce_hn",
    "place": "place_and_simulate",
    "simulate": "place_and_simulate",
    "smooth": "smooth_theorem12",
    "sweep": "sweep",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwcycles",
        description="Averaged-function zero analysis and return-map verification "
        "for the piecewise cubic center",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run a {kind} experiment")
        p.add_argument("--config", type=Path, help="JSON manifest path")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        p.add_argument("--seed", type=int, help="override the manifest seed")
        p.add_argument(
            "--epsilon",
            type=str,
            help="comma-separated descending epsilon list, overrides the manifest",
        )
        p.add_argument("--format", choices=("csv", "json", "both"), default="both")
        p.add_argument("--a", type=float, help="system constant for x >= 0")
        p.add_argument("--b", type=float, help="system constant for x < 0")
    return parser


def _manifest_from_args(args: argparse.Namespace) -> ExperimentManifest:
    kind = _SUBCOMMANDS[args.command]
    doc = {"schema_version": 1, "kind": kind}
    if args.config:
        if not args.config.exists():
            raise ManifestError(f"config file not found: {args.config}")
        try:
            doc.update(json.loads(args.config.read_text()))
        except json.JSONDecodeError as exc:
            raise ManifestError(f"config is not valid JSON: {exc}") from exc
        if doc.get("kind") != kind:
            raise ManifestError(
                f"config kind {doc.get('kind')!r} does not match subcommand {args.command!r}"
            )
    if args.a is not None:
        doc["a"] = args.a
    if args.b is not None:
        doc["b"] = args.b
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.epsilon:
        doc["epsilons"] = [float(x) for x in args.epsilon.split(",")]
    if args.command == "place":
        doc["epsilons"] = []
    return ExperimentManifest.from_dict(doc)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        manifest = _manifest_from_args(args)
    except ManifestError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        record = run_manifest(manifest)
        written = emit_table(record, args.format, args.out)
    except ManifestError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numerical/runtime failures carry module context
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    failed = [c for c in record["checks"] if c["status"] == "fail"]
    for c in record["checks"]:
        marker = {"pass": "PASS", "fail": "FAIL", "finding": "NOTE"}[c["status"]]
        print(f"[{marker}] {c['name']}: measured={c['measured']} expected={c['expected']}")
    for path in written:
        print(f"wrote {path}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
