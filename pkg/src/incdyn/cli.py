"""Command line interface for the experiment harness.

Subcommands: ``gen`` (dataset generation), ``run`` (sequential protocol),
``summarize`` (aggregate a results directory). Exit codes: 0 on success,
2 for configuration errors, 3 for I/O errors.
"""

import argparse
import sys

from . import harness


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH",
                        help="flat key=value configuration file (defaults apply if omitted)")
    parser.add_argument("--out", metavar="DIR", default="runs",
                        help="output / results directory (default: runs)")


def _add_overrides(parser):
    parser.add_argument("--seed", type=int, metavar="INT",
                        help="run a single seed, overriding the configured list")
    parser.add_argument("--estimators", metavar="LIST",
                        help="comma-separated subset of p,np,sp")
    parser.add_argument("--features", type=int, metavar="D",
                        help="random feature dimension")
    parser.add_argument("--sigma", metavar="REAL|median",
                        help="Gaussian kernel bandwidth or 'median'")
    parser.add_argument("--lambda-p", dest="lambda_p", metavar="REAL|auto",
                        help="parametric regularization")
    parser.add_argument("--lambda-np", dest="lambda_np", metavar="REAL|auto",
                        help="nonparametric regularization")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="incdyn",
        description="Incremental semiparametric dynamics learning harness")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate plant dataset CSVs")
    _add_common(gen)
    _add_overrides(gen)
    gen.add_argument("--which", choices=("a", "b", "both"), default="both",
                     help="which trajectory dataset to generate (default: both)")

    run = sub.add_parser("run", help="run the sequential validation protocol")
    _add_common(run)
    _add_overrides(run)
    run.add_argument("--fresh", action="store_true",
                     help="ignore existing checkpoints instead of resuming")

    summ = sub.add_parser("summarize", help="aggregate a results directory")
    _add_common(summ)
    return parser


def _load_config(args):
    cfg = harness.load_config(args.config) if args.config else harness.ExperimentConfig()
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seeds"] = (args.seed,)
    if getattr(args, "estimators", None):
        updates["estimators"] = tuple(
            e.strip().lower() for e in args.estimators.split(",") if e.strip())
    if getattr(args, "features", None) is not None:
        updates["features"] = args.features
    if getattr(args, "sigma", None) is not None:
        updates["sigma"] = "median" if args.sigma.lower() == "median" else float(args.sigma)
    for name in ("lambda_p", "lambda_np"):
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = None if value.lower() == "auto" else float(value)
    if updates:
        from dataclasses import replace
        cfg = replace(cfg, **updates)
        cfg.validate()
    return cfg


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            cfg = _load_config(args)
            which = ("a", "b") if args.which == "both" else (args.which,)
            for seed in cfg.seeds:
                for w in which:
                    path = harness.generate_dataset(cfg, w, seed, args.out)
                    print(path)
        elif args.command == "run":
            cfg = _load_config(args)
            out = harness.run_protocol(cfg, args.out, resume=not args.fresh)
            print(out / "summary.csv")
        else:
            print(harness.summarize(args.out))
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
