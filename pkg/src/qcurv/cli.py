"""Command-line entry point: ``qcurv {constants,check,solve,probe,recheck}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .io import dumps
from .pipeline import (
    EXIT_GATE,
    EXIT_HYPOTHESIS,
    EXIT_OK,
    PROBES,
    ConfigError,
    RunConfig,
    _write_hypothesis,
    cmd_check,
    cmd_constants,
    cmd_probe,
    cmd_solve,
    load_config,
    recheck,
)

EXIT_USAGE = 1


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="TOML or JSON run configuration")
    p.add_argument("--n", type=int)
    p.add_argument("--backend", choices=("axisym", "full"))
    p.add_argument("--L", type=int)
    p.add_argument("--t0", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str)


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.with_overrides(n=args.n, backend=args.backend, L=args.L, t0=args.t0, eps=args.eps,
                              seed=args.seed, out=args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcurv", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="dimensional constants and identity checks")
    p.add_argument("n", type=int, nargs="*", default=[5, 6, 7, 8])

    p = sub.add_parser("check", help="evaluate the hypotheses on f")
    _add_config_args(p)

    p = sub.add_parser("solve", help="locate a zero of the multiplier field and certify it")
    _add_config_args(p)
    p.add_argument("--force", action="store_true", help="solve even if a hypothesis fails")

    p = sub.add_parser("probe", help="diagnostic probes")
    p.add_argument("which", choices=PROBES)
    _add_config_args(p)

    p = sub.add_parser("recheck", help="re-evaluate the gates of a stored certificate")
    p.add_argument("certificate", type=Path)
    return ap


def _print_constants(rows):
    cols = ["n", "c_n", "d_n", "two_sharp", "f0", "k0_inv_scaled"]
    print("  ".join(f"{c:>14}" for c in cols + ["identities"]))
    for r in rows:
        cells = [f"{r[c]:>14.10g}" for c in cols]
        print("  ".join(cells + [f"{'pass' if r['identities_pass'] else 'FAIL':>14}"]))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "constants":
            rows = cmd_constants(args.n)
            _print_constants(rows)
            return EXIT_OK if all(r["identities_pass"] for r in rows) else EXIT_GATE
        if args.command == "recheck":
            code, report = recheck(args.certificate)
            sys.stdout.write(dumps(report))
            return code
        cfg = _config(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "check":
        rep = cmd_check(cfg)
        path = _write_hypothesis(cfg, rep, Path(cfg.out))
        for k, v in (("H1", rep.h1_pass), ("H2", rep.h2_pass), ("H3", rep.h3_pass)):
            print(f"{k}: {'pass' if v else 'fail'}")
        print(f"degree {rep.degree}, morse sum {rep.morse_sum}, eps_f {rep.eps_f:.6g}")
        for w in rep.warnings:
            print(f"warning: {w}")
        print(f"report: {path}")
        return EXIT_OK if rep.passed else EXIT_HYPOTHESIS
    if args.command == "solve":
        cert = cmd_solve(cfg, force=args.force)
        print(f"status: {cert.status}")
        for name, g in cert.data.get("gates", {}).items():
            print(f"  {name:<13} {g['value']:.3e}  (threshold {g['threshold']:.1e})  {'pass' if g['pass'] else 'FAIL'}")
        for w in cert.data.get("warnings", []):
            print(f"warning: {w}")
        if not cert.passed:
            print("no certified solution", file=sys.stderr)
        return cert.exit_code
    if args.command == "probe":
        res = cmd_probe(cfg, args.which)
        sys.stdout.write(dumps(res))
        return EXIT_OK if res.get("pass", True) else EXIT_GATE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
