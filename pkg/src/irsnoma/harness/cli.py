"""Command line: ``run``, ``reproduce`` and ``audit``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .figures import FIGURES, SCALES, preset
from .runner import audit_results, run

log = logging.getLogger("irsnoma")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="irsnoma", description="IRS-aided NOMA beamforming sweeps")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--jobs", type=int, default=1, help="concurrent trials")
        p.add_argument("--dump-solutions", action="store_true",
                       help="persist beamformers and IRS vectors for later audit")
        p.add_argument("--output", help="results root (default: $IRSNOMA_OUTPUT or ./results)")

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True)
    common(p)
    p = sub.add_parser("reproduce", help="run a figure preset")
    p.add_argument("--figure", required=True, choices=FIGURES)
    p.add_argument("--scale", default="desk", choices=SCALES)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p = sub.add_parser("audit", help="re-verify persisted solutions")
    p.add_argument("--result", required=True, help="result directory or solutions.jsonl")
    p.add_argument("--tol", type=float, default=1e-6)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.cmd == "audit":
            results = audit_results(args.result, args.tol)
            bad = 0
            for value, scheme, seed, ok, worst in results:
                bad += not ok
                print(f"{'PASS' if ok else 'FAIL'} {scheme} value={value} seed={seed} "
                      f"worst={worst:.3e}")
            print(f"{len(results) - bad}/{len(results)} solutions pass")
            return 1 if bad else 0
        if args.cmd == "run":
            cfg = load_config(args.config)
        else:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            cfg = preset(args.figure, args.scale, args.seed)
        if args.output:
            cfg = cfg.with_output(args.output)
        out = run(cfg, jobs=args.jobs, dump_solutions=args.dump_solutions)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
