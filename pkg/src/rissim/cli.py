"""Command line entry point.

::

    rissim run CONFIG [--threads N] [--out DIR]
    rissim deviation CONFIG [--out DIR]
    rissim paths export FILE --config CONFIG [--src X Y Z] [--dst X Y Z]
    rissim paths import FILE [--out DIR]

Exit codes: 0 success, 2 configuration or input error, 3 numeric
singularity (the message names the offending element and angle).
There is no ``--seed``: nothing in the pipeline is random.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from rissim import __version__
from rissim.errors import ConfigError, DegenerateGeometry, NumericSingularity, SchemaError
from rissim.raytrace import load_paths, save_paths, trace
from rissim.scenarios import load_config, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3


def _parser():
    p = argparse.ArgumentParser(prog="rissim", description="RIS channel simulator")
    p.add_argument("--version", action="version", version=f"rissim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        sp.add_argument("--out", type=Path, default=Path("results"), help="output directory")

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("config", type=Path)
    common(r)
    d = sub.add_parser("deviation", help="run a phase-deviation study file")
    d.add_argument("config", type=Path)
    common(d)

    pa = sub.add_parser("paths", help="export or import path-record CSV files")
    psub = pa.add_subparsers(dest="action", required=True)
    e = psub.add_parser("export", help="trace paths between two points of a scenario")
    e.add_argument("file", type=Path)
    e.add_argument("--config", type=Path, required=True)
    e.add_argument("--src", type=float, nargs=3, metavar=("X", "Y", "Z"), help="default: the scenario Tx")
    e.add_argument("--dst", type=float, nargs=3, metavar=("X", "Y", "Z"), help="default: the panel centre")
    i = psub.add_parser("import", help="validate a path file and print a summary")
    i.add_argument("file", type=Path)
    i.add_argument("--out", type=Path, default=None, help="also write a normalised copy here")
    return p


def _summary(result):
    lines = []
    for name, cols in result.columns.items():
        for key, v in cols.items():
            if key.endswith("_db"):
                lines.append(f"{name:>12s}  {key:<40s} median {np.median(v):9.3f} dB  max {np.max(v):9.3f} dB")
            elif key.startswith("deviation_"):
                lines.append(f"{name:>12s}  {key:<40s} max {np.max(v):9.3f} deg")
    return lines


def _run(args, want_kind=None):
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    cfg = load_config(args.config)
    if want_kind is not None and cfg.kind != want_kind:
        raise ConfigError(f"expected a {want_kind!r} scenario, got {cfg.kind!r}", args.config)
    result = run_scenario(cfg, threads=args.threads)
    for p in result.write(args.out):
        print(f"wrote {p}")
    for line in _summary(result):
        print(line)
    return EXIT_OK


def _export(args):
    cfg = load_config(args.config)
    if cfg.kind == "deviation":
        raise ConfigError("deviation scenarios have no geometry", args.config)
    src = np.array(args.src if args.src else cfg.tx, float)
    dst = np.array(args.dst if args.dst else cfg.panel.origin, float)
    recs = trace(cfg.scene.build(), src, dst, cfg.max_reflections, cfg.frequency_hz)
    args.file.parent.mkdir(parents=True, exist_ok=True)
    save_paths(recs, args.file)
    print(f"wrote {len(recs)} paths to {args.file}")
    return EXIT_OK


def _import(args):
    recs = load_paths(args.file)
    print(f"{len(recs)} paths in {args.file}")
    for n, r in enumerate(recs):
        print(f"  {n}: delay {r.delay * 1e9:.6f} ns  |gain| {np.linalg.norm(r.gain):.6e}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        dest = args.out / args.file.name
        save_paths(recs, dest)
        print(f"wrote {dest}")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "deviation":
            return _run(args, "deviation")
        if args.action == "export":
            return _export(args)
        return _import(args)
    except NumericSingularity as e:
        print(f"rissim: numeric singularity: {e}", file=sys.stderr)
        return EXIT_SINGULAR
    except (ConfigError, SchemaError, DegenerateGeometry) as e:
        print(f"rissim: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as e:
        # unreadable files or malformed numeric content
        print(f"rissim: error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
