"""Command-line entry point ``ginspectra``.

Exit codes: 0 on success, 1 on invalid input, 2 on numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .csr_stats import (CsrSet, complex_spacing_ratios, density2d, ginue_reference, marginals,
                        signatures, write_density2d_csv, write_marginal_csv)
from .errors import ConvergenceError, ValidationError
from .harness.config import load_config
from .harness.io import read_spectrum, write_json
from .harness.runner import run_experiment
from .harness.tables import format_report, reproduce_tables, write_report_csv

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


def _workers(raw: str):
    if raw == "auto":
        return raw
    try:
        n = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {raw!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {raw!r}")
    return n


def _progress(label):
    def report(i, n):
        if i == n or i % max(1, n // 20) == 0:
            print(f"{label}: {i}/{n}", file=sys.stderr)
    return report


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    summary = run_experiment(cfg, force=args.force, save_spectra=not args.no_spectra,
                             progress=None if args.quiet else _progress(cfg.config_hash()))
    payload = summary.to_json()
    if summary.output_dir is not None:
        payload["output_dir"] = str(summary.output_dir)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(json.dumps({"valid": True, "config_hash": cfg.config_hash(), "config": cfg.to_dict()},
                     indent=2, sort_keys=True))
    return EXIT_OK


def cmd_tables(args) -> int:
    def row_done(res):
        if not args.quiet:
            print(f"done: {res.row.label} ({res.status})", file=sys.stderr)
    results = reproduce_tables(args.scale, args.workers, progress=row_done)
    print(format_report(results))
    if args.out is not None:
        write_report_csv(args.out, results)
    if any(r.status == "error" for r in results):
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_reference(args) -> int:
    ref = ginue_reference(args.n, args.count, args.seed, cache_dir=args.cache_dir,
                          use_cache=not args.no_cache, bins_r=args.bins_r, bins_theta=args.bins_theta,
                          progress=None if args.quiet else _progress("ginue"))
    print(json.dumps({"signatures": ref.signatures.to_json(), "from_cache": ref.from_cache},
                     indent=2, sort_keys=True))
    return EXIT_OK


def cmd_csr(args) -> int:
    sets = [complex_spacing_ratios(read_spectrum(p)) for p in args.spectra]
    pooled = CsrSet.pool(sets)
    sig = signatures(pooled)
    payload = {"files": len(sets), "signatures": sig.to_json(),
               "counts": {"eigenvalues": pooled.source_count, "ratios": len(pooled),
                          "skipped_degenerate": pooled.skipped_degenerate}}
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        h_r, h_t = marginals(pooled, args.bins_r, args.bins_theta)
        write_marginal_csv(out / "marginal_r.csv", h_r)
        write_marginal_csv(out / "marginal_theta.csv", h_t)
        write_density2d_csv(out / "density2d.csv", density2d(pooled, args.grid))
        write_json(out / "summary.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ginspectra",
                                description="Complex spacing ratio statistics of non-Hermitian spectra.")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress progress output")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the ensemble described by a JSON config")
    run.add_argument("config")
    run.add_argument("--force", action="store_true", help="recompute even if outputs are complete")
    run.add_argument("--no-spectra", action="store_true", help="do not persist per-realization spectra")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)

    tab = sub.add_parser("tables", help="recompute the built-in table presets")
    tab.add_argument("--scale", type=float, default=1.0,
                     help="fraction of the full ensemble sizes (tolerances widen by 1/sqrt(scale))")
    tab.add_argument("--workers", type=_workers, default=1)
    tab.add_argument("--out", help="also write the comparison as CSV")
    tab.set_defaults(func=cmd_tables)

    ref = sub.add_parser("reference", help="build a cached reference curve")
    ref.add_argument("kind", choices=["ginue"])
    ref.add_argument("--n", type=int, default=2000)
    ref.add_argument("--count", type=int, default=50)
    ref.add_argument("--seed", type=int, default=20240101)
    ref.add_argument("--bins-r", type=int, default=50)
    ref.add_argument("--bins-theta", type=int, default=50)
    ref.add_argument("--cache-dir")
    ref.add_argument("--no-cache", action="store_true")
    ref.set_defaults(func=cmd_reference)

    csr = sub.add_parser("csr", help="pool ratios from stored spectrum files")
    csr.add_argument("spectra", nargs="+")
    csr.add_argument("--out", help="directory for marginal and density CSVs")
    csr.add_argument("--bins-r", type=int, default=50)
    csr.add_argument("--bins-theta", type=int, default=50)
    csr.add_argument("--grid", type=int, default=101)
    csr.set_defaults(func=cmd_csr)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
