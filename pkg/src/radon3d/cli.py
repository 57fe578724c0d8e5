"""Command line front end: ``radon3d <stage|pipeline> [options]``."""

import argparse
import json
import sys

from .pipeline import STAGES, RunConfig, StageError, run_pipeline

__all__ = ["build_parser", "config_from_args", "main"]

SUBCOMMANDS = STAGES + ("pipeline",)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="radon3d",
        description="Cone-beam CT reconstruction through the 3D discrete Radon transform.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--nx", type=int, help="object voxels per side")
    common.add_argument("--nu", type=int, help="detector pixels per side")
    common.add_argument("--n-proj", type=int, help="number of source angles")
    common.add_argument("--phantom", help="builtin name, ellipsoid JSON or raw volume")
    common.add_argument("--projector", choices=("voxel", "analytic"))
    common.add_argument("--shadow", choices=("zero", "linear", "oracle"))
    common.add_argument("--far-source", choices=("on", "off"))
    common.add_argument(
        "--stages", help="comma separated stages (pipeline subcommand only)"
    )
    common.add_argument("--workers", type=int, help="FFT worker threads")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        what = "run every stage" if name == "pipeline" else f"run the {name} stage"
        sub.add_parser(name, parents=[common], help=what)
    return parser


def config_from_args(args):
    """Defaults, then the config file, then explicit flags."""
    d = {}
    if args.config:
        with open(args.config) as fh:
            d = json.load(fh)
    geom = dict(d.get("geometry", {}))
    for flag, key in (("nx", "nx"), ("nu", "nu"), ("n_proj", "n_proj")):
        value = getattr(args, flag)
        if value is not None:
            geom[key] = value
    d["geometry"] = geom
    if args.out:
        d["out_dir"] = args.out
    if args.phantom:
        d["phantom"] = args.phantom
    if args.projector:
        d["projector"] = args.projector
    if args.shadow:
        d["shadow"] = args.shadow
    if args.far_source:
        d["far_source"] = args.far_source == "on"
    if args.workers is not None:
        d["workers"] = args.workers
    if args.command == "pipeline":
        if args.stages:
            d["stages"] = [s.strip() for s in args.stages.split(",") if s.strip()]
    else:
        if args.stages:
            raise ValueError("--stages only applies to the pipeline subcommand")
        d["stages"] = [args.command]
    return RunConfig.from_dict(d)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_pipeline(config)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    for stage, info in report["stages"].items():
        print(f"{stage:12s} {info['seconds']:8.2f} s  {info['artifact']}")
    if report["metrics"]:
        for name, value in report["metrics"].items():
            print(f"{name:12s} {value:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
