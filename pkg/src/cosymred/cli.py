"""Command line front end.

Exit codes: 0 when every directive's verdict matches its expectation
(declared failures count as matches), 1 on any mismatch, 2 for usage or
manifest errors (malformed JSON is reported with line and column).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import gallery
from .manifest import ManifestError, load_world
from .report import RunReport, Tolerances, format_report
from .runner import run_world


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--samples", type=int, default=128, metavar="N",
                        help="points per randomized check (default 128)")
    common.add_argument("--seed", type=int, default=42,
                        help="seed for all sampling (default 42)")
    common.add_argument("--tol", type=float, default=1e-9, metavar="EPS",
                        help="default residual tolerance (default 1e-9)")
    common.add_argument("--report", metavar="PATH",
                        help="write the JSON run report to PATH")
    common.add_argument("--quiet", action="store_true",
                        help="print only per-directive verdict lines")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="cosymred",
        description="Numeric-symbolic verification of cosymplectic structures "
                    "on explicit groupoid presentations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common],
                           help="run the checks of a JSON manifest")
    check.add_argument("manifest", help="path to the manifest file")

    examples = sub.add_parser("examples", help="built-in example manifests")
    exsub = examples.add_subparsers(dest="action", required=True)
    exsub.add_parser("list", help="list example and mutation names")
    run = exsub.add_parser("run", parents=[common], help="run a built-in example")
    run.add_argument("name", help="example or mutation name (see 'examples list')")
    run.add_argument("--n", type=int, default=2,
                     help="configuration coordinates for parametric families")
    run.add_argument("--k", type=int, default=1,
                     help="momentum pairs kept by the reduction")
    emit = exsub.add_parser("emit", help="write all example manifests as JSON")
    emit.add_argument("directory", nargs="?", default="manifests",
                      help="output directory (default: manifests)")
    return parser


def _finish(run: RunReport, args) -> int:
    print(format_report(run, quiet=args.quiet))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(run.to_json())
            fh.write("\n")
    return 0 if run.verdict == "pass" else 1


def _cmd_check(args) -> int:
    try:
        with open(args.manifest, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        print(f"error: cannot read {args.manifest}: {err}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as err:
        print(f"error: {args.manifest}:{err.lineno}:{err.colno}: {err.msg}",
              file=sys.stderr)
        return 2
    return _run_doc(doc, args)


def _run_doc(doc: dict, args) -> int:
    tol = Tolerances().with_default(args.tol)
    try:
        world = load_world(doc)
        run = run_world(world, samples=args.samples, seed=args.seed, tol=tol)
    except ManifestError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return _finish(run, args)


def _cmd_examples(args) -> int:
    if args.action == "list":
        print("examples:")
        for name in gallery.names():
            doc = gallery.build(name)
            print(f"  {name:34s} {doc.get('description', '')}")
        print("mutations (declared failures):")
        for name in gallery.mutation_names():
            base, caught_by = gallery.MUTATIONS[name]
            print(f"  {name:34s} on {base}; caught by {', '.join(caught_by)}")
        return 0
    if args.action == "run":
        try:
            doc = gallery.build(args.name, n=args.n, k=args.k)
        except (KeyError, ValueError) as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        return _run_doc(doc, args)
    if args.action == "emit":
        outdir = args.directory
        os.makedirs(os.path.join(outdir, "mutations"), exist_ok=True)
        written = []
        for name in gallery.names():
            path = os.path.join(outdir, f"{name}.json")
            _write_doc(path, gallery.build(name))
            written.append(path)
        for name in gallery.mutation_names():
            path = os.path.join(outdir, "mutations", f"{name}.json")
            _write_doc(path, gallery.build(name))
            written.append(path)
        for path in written:
            print(f"wrote {path}")
        return 0
    raise AssertionError(f"unhandled action {args.action!r}")


def _write_doc(path: str, doc: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        return _cmd_check(args)
    if args.command == "examples":
        return _cmd_examples(args)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
