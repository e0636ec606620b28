"""Command line driver: ``eklab <experiment> --n N --alpha SPEC ...``."""

import argparse
import sys
import traceback

from .errors import BudgetError, EklabError, PrecisionError, ValidationError
from .experiments import EXPERIMENTS, ExperimentConfig, export_results, run_experiment


def build_parser():
    p = argparse.ArgumentParser(prog="eklab", description="Prime-factor statistics along Beatty sequences.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--n", type=int, required=True, help="sample size N (>= 16)")
    p.add_argument("--alpha", action="append", default=None, help="real spec, e.g. sqrt:2 or rational:3/2")
    p.add_argument("--beta", action="append", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--r", type=int)
    p.add_argument("--j", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--t", type=int)
    p.add_argument("--moment-cap", type=int, default=4)
    p.add_argument("--truncated", action="store_true", help="also report moments of the truncated omega")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--cache", help="sieve cache directory")
    return p


def _origin(exc):
    tb = traceback.extract_tb(exc.__traceback__)
    for frame in reversed(tb):
        if "eklab" in frame.filename:
            return frame.filename.rsplit("/", 1)[-1].removesuffix(".py")
    return "eklab"


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig(
            experiment=args.experiment,
            N=args.n,
            alphas=args.alpha or ["sqrt:2"],
            betas=args.beta or [],
            seed=args.seed,
            R=args.r,
            J=args.j,
            L=args.l,
            epsilon=args.eps,
            T=args.t,
            moment_cap=args.moment_cap,
            truncated=args.truncated,
            levels=args.levels,
            d=args.degree,
            out=args.out,
            cache=args.cache,
        )
        result = run_experiment(cfg)
        for path in export_results(result, args.out, args.format):
            print(path)
    except ValidationError as e:
        print(f"eklab: [{_origin(e)}] {e}", file=sys.stderr)
        return 2
    except (PrecisionError, BudgetError) as e:
        print(f"eklab: [{_origin(e)}] {e}", file=sys.stderr)
        return 3
    except EklabError as e:
        print(f"eklab: [{_origin(e)}] {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
