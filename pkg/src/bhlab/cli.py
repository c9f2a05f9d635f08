"""Command line entry point: ``bhl verify|scan|spectrum|version``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .errors import BHLabError, ValidationError
from .fock import basis_for
from .lattice import LatticeSpec
from .model import ModelSpec
from .operators import op_hamiltonian
from .reports import versions, write_csv, write_manifest
from .scans import RUNNERS, SCAN_KINDS
from .suite import run_suite
from .thermal import diagonalize

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=str, help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes (1 = serial)")
    p.add_argument("--seed", type=int, help="seed for random test vectors")
    p.add_argument("--cap", type=int, help="maximum Hilbert-space dimension")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bhl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("verify", help="run the full invariant suite"))
    scan = sub.add_parser("scan", help="run a parameter scan")
    _common(scan)
    scan.add_argument("--kind", choices=SCAN_KINDS, required=True)
    spec = sub.add_parser("spectrum", help="dump the spectrum of one grid point")
    _common(spec)
    for name, typ in (("--N", int), ("--M", int), ("--U", float), ("--mu", float),
                      ("--lam", float)):
        spec.add_argument(name, type=typ)
    sub.add_parser("version", help="print version information")
    return parser


def _load(args) -> RunConfig:
    return load_config(args.config, {"out": args.out, "jobs": args.jobs, "seed": args.seed,
                                     "cap": args.cap})


def cmd_verify(cfg: RunConfig) -> int:
    res = run_suite(cfg, cfg.out)
    bad = [c.name for c in res.checks if c.status == "fail"]
    print(f"overall: {'FAIL ' + ', '.join(bad) if bad else 'pass'} ({len(res.files)} CSV files "
          f"in {cfg.out})")
    return res.exit_code


def cmd_scan(cfg: RunConfig, kind: str) -> int:
    start = time.perf_counter()
    out = cfg.out
    result = RUNNERS[kind](cfg.scan(kind), cfg.cap, out)
    status = "fail" if result["failed"] else "pass"
    write_manifest(out / f"manifest_{kind}.json", {
        "command": f"scan {kind}", "config_hash": cfg.hash(), "seed": cfg.seed,
        "versions": versions(), "status": status,
        "total_runtime": time.perf_counter() - start})
    print(f"scan {kind}: {status} (output in {out})")
    return EXIT_FAIL if result["failed"] else EXIT_OK


def cmd_spectrum(cfg: RunConfig, args) -> int:
    N = args.N if args.N is not None else cfg.N_list[0]
    M = args.M if args.M is not None else cfg.M_list[0]
    pick = lambda flag, name: flag if flag is not None else cfg.grid(name)[0]
    lat = LatticeSpec(cfg.d, N)
    model = ModelSpec(lat, cfg.hopping(N), pick(args.U, "U"), pick(args.mu, "mu"),
                      pick(args.lam, "lambda"), cfg.grid("beta")[0])
    basis = basis_for(lat.size, M, cfg.cap)
    spec = diagonalize(op_hamiltonian(model, basis), cap=cfg.cap, blocks=basis.offsets)
    rows = [{"index": i, "eigenvalue": float(e)} for i, e in enumerate(spec.energies)]
    path = write_csv(cfg.out / f"spectrum_N{N}_M{M}.csv", ["index", "eigenvalue"], rows)
    print(f"{len(rows)} eigenvalues written to {path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "version":
        for k, v in versions().items():
            print(f"{k} {v}")
        return EXIT_OK
    try:
        cfg = _load(args)
    except ValidationError as exc:
        print(f"bhl: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "scan":
            return cmd_scan(cfg, args.kind)
        return cmd_spectrum(cfg, args)
    except ValidationError as exc:
        print(f"bhl: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BHLabError as exc:
        print(f"bhl: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except KeyError as exc:
        print(f"bhl: invalid configuration: missing entry {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
