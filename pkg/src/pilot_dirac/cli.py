"""Command line: ``pilot-dirac run <config>``, ``verify [--fast]``, ``plot <dir>``.

Exit codes: 0 success, 2 configuration error, 3 model error, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import traceback
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import ConfigError, ModelError, NodeError
from .io import OutputTree

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("pilot_dirac")


def cmd_run(args) -> int:
    from .plotting import plot_run
    from .runner import execute

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else cfg.output_dir(Path(args.config).resolve().parent)
    tree = OutputTree(out)
    tree.write_json("config.json", {"source": str(args.config), "values": cfg.values})
    try:
        summary = execute(cfg, tree)
    except ModelError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, NodeError):
            diag.update(position=exc.position, rho0=exc.rho0)
        tree.write_json("error.json", diag)
        tree.write_manifest()
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    if cfg["emit.plots"]:
        plot_run(out, tree)
    tree.write_manifest()
    for key in sorted(summary):
        print(f"{key} = {summary[key]}")
    print(f"outputs in {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    settings = verify.FAST if args.fast else verify.FULL
    t0 = time.perf_counter()
    report = open(args.report, "w") if args.report else None

    def emit(line):
        print(line, flush=True)
        if report:
            report.write(line + "\n")

    try:
        ok, _ = verify.run_battery(settings, emit)
    finally:
        if report:
            report.close()
    print(f"wall time {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_plot(args) -> int:
    from .plotting import plot_run

    try:
        written = plot_run(args.run_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in written:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pilot-dirac", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configured scenario")
    p.add_argument("config", help="key = value configuration file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the invariant battery")
    p.add_argument("--fast", action="store_true", help="reduced resolution (nx=256), under a minute")
    p.add_argument("--report", help="also write the report to this file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="render SVG figures for a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
