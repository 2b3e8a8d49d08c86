"""Command line: ``lerw3d run|plot|selftest|list``.

Exit codes: 0 success, 2 invalid parameters or unknown experiment, 3 I/O
failure, 4 selftest failure, 1 schema mismatch in ``plot``.
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import InvalidParams, IoFailure, SchemaMismatch, UnknownExperiment


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lerw3d")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment from a config file")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--out")
    p = sub.add_parser("plot", help="emit (x, y, yerr) columns from a results file")
    p.add_argument("results")
    p.add_argument("--kind", required=True)
    p.add_argument("--out")
    sub.add_parser("selftest", help="run the exact-oracle checks")
    sub.add_parser("list", help="list registered experiments")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    from . import runner

    try:
        if args.cmd == "run":
            cfg = runner.load_config(args.config)
            if args.seed is not None:
                cfg.master_seed = args.seed
            if args.workers is not None:
                cfg.workers = args.workers
            if args.out is not None:
                cfg.out_dir = args.out
            man = runner.run(cfg)
            print(json.dumps({k: v for k, v in man.summary.items() if k != "params"},
                             indent=2, sort_keys=True, default=str))
            print(f"wrote {', '.join(man.outputs)} to {cfg.out_dir}")
        elif args.cmd == "plot":
            print(runner.plot_data(args.results, args.kind, args.out))
        elif args.cmd == "selftest":
            from .acceptance import selftest

            return 0 if selftest() else 4
        elif args.cmd == "list":
            for name in runner.available():
                print(name)
    except (InvalidParams, UnknownExperiment) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SchemaMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
