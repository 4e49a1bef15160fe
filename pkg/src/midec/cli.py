"""Command line entry point: ``python -m midec``.

Subcommands::

    run --config PATH [--out DIR]      full experiment, writes report.csv/summary.json
    bounds --chain ... --steps K       table of theorem bounds for k = 0..K
    oracle --chain ... --k K           exact Gaussian mutual information
    presets list                       bundled configs

Exit status is 0 on success, 1 when a run records violations and 2 for usage
or configuration errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bounds as B
from .errors import MidecError
from .gaussian_oracle import ou_mi_exact, proximal_gaussian_mi_exact, ula_gaussian_mi_exact
from .harness import list_presets, load_config, load_preset, parse_config, run_experiment

__all__ = ["cli_main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="midec", description="Mutual information decay along Markov chains")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON config")
    src.add_argument("--preset", help="name of a bundled preset")
    r.add_argument("--out", help="output directory (overrides the config)")

    b = sub.add_parser("bounds", help="print theorem bounds for k = 0..steps")
    b.add_argument("--chain", choices=["langevin", "ula", "proximal"], required=True)
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--eta", type=float, required=True, help="step size (time increment for langevin)")
    b.add_argument("--sobolev", type=float, required=True, help="Sobolev constant at the reference index")
    b.add_argument("--mi-ref", type=float, required=True, help="MI at the reference index")
    b.add_argument("--steps", type=int, required=True)

    o = sub.add_parser("oracle", help="print the exact MI for N(0, I) initialisation")
    o.add_argument("--chain", choices=["langevin", "ula", "proximal"], required=True)
    o.add_argument("--alpha", type=float, required=True)
    o.add_argument("--eta", type=float, help="step size (ula, proximal)")
    o.add_argument("--k", type=int, help="iteration count (ula, proximal)")
    o.add_argument("--t", type=float, help="time (langevin)")
    o.add_argument("--dim", type=int, default=1)
    o.add_argument("--precision", type=int, default=6, help="significant digits")

    s = sub.add_parser("presets", help="bundled configs")
    s.add_argument("action", choices=["list"])
    return p


def _bounds(args):
    print("k,bound")
    for k in range(args.steps + 1):
        if args.chain == "ula":
            v = B.bound_mi_ula(args.alpha, args.eta, args.sobolev, args.mi_ref, k)
        elif args.chain == "proximal":
            v = B.bound_mi_proximal(args.alpha, args.eta, args.sobolev, args.mi_ref, k)
        else:
            v = B.bound_mi_langevin(args.alpha, args.sobolev, args.mi_ref, k * args.eta)
        print(f"{k},{v:.6g}")
    return 0


def _oracle(args, parser):
    if args.chain == "langevin":
        if args.t is None:
            parser.error("oracle --chain langevin needs --t")
        v = ou_mi_exact(args.alpha, args.t, args.dim)
    else:
        if args.k is None or args.eta is None:
            parser.error(f"oracle --chain {args.chain} needs --eta and --k")
        f = ula_gaussian_mi_exact if args.chain == "ula" else proximal_gaussian_mi_exact
        v = f(args.alpha, args.eta, args.k, args.dim)
    print(f"{v:.{args.precision}g}")
    return 0


def _run(args):
    if args.preset:
        cfg = parse_config(load_preset(args.preset), base_dir=Path.cwd())
    else:
        cfg = load_config(args.config)
    report, status = run_experiment(cfg, out_dir=args.out)
    print(f"{cfg.name}: {len(report.index)} indices, {len(report.violations)} violation(s)")
    for k, kind, margin in report.violations:
        print(f"  index {k}: {kind} by {margin:.3g}")
    if cfg.out_dir is not None:
        print(f"wrote {cfg.out_dir / 'report.csv'} and {cfg.out_dir / 'summary.json'}")
    return status


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "bounds":
            return _bounds(args)
        if args.command == "oracle":
            return _oracle(args, parser)
        for name in list_presets():
            print(name)
        return 0
    except SystemExit as e:
        return int(e.code or 0)
    except MidecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())
