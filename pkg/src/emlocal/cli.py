"""Command-line front end: ``emlocal run | validate | kernels``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .spectral import GridSpec, set_workers

log = logging.getLogger("emlocal")


def _threads(n: int | None):
    if n is None:
        return
    if n < 1:
        raise SystemExit("--threads must be >= 1")
    set_workers(n)
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except (ImportError, ValueError):
        pass


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"ok: {len(cfg.sources)} source(s), {len(cfg.tasks)} task(s), grid {cfg.grid.n} box {cfg.grid.box}")
    return 0


def cmd_run(args) -> int:
    from .runner import run_scenario

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be >= 0", file=sys.stderr)
            return 2
        cfg = cfg.with_seed(args.seed)
    _threads(args.threads)
    try:
        manifest = run_scenario(cfg, args.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for t in manifest.tasks:
        status = "pass" if t.passed else "FAIL"
        tag = "" if t.acceptance else " (informational)"
        print(f"[{status}] {t.index:02d} {t.type}{tag} {t.seconds:.2f}s")
        if t.error:
            print(f"       error: {t.error}")
        for c in t.checks:
            if not c.passed:
                print(f"       {c.name}: {c.value:.3e} (tolerance {c.tolerance:.1e})")
    print(f"manifest: {Path(manifest.output_dir) / 'manifest.json'}")
    return manifest.exit_status


def cmd_kernels(args) -> int:
    from .brackets import commutator_kernel
    from .io import write_components

    try:
        grid = GridSpec.cube(args.grid, args.box)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = [a + b for a in "xyz" for b in "xyz"]
    files = []
    for kind in ("B_D", "Aperp_D"):
        K = commutator_kernel(kind, grid, smoothing=args.smoothing, padding=args.padding)
        files += write_components(out / kind, K, grid, names)
    for f in files:
        print(f)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emlocal", description="Locality diagnostics for free-field electromagnetism.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a scenario file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("--seed", type=int, help="global seed (overrides the config)")
    r.add_argument("--threads", type=int, help="FFT / direct-sum worker threads")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a scenario file and list every problem")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    k = sub.add_parser("kernels", help="dump the B-D and transverse-delta kernels as EMLF files")
    k.add_argument("--grid", type=int, required=True, help="points per axis (even, >= 8)")
    k.add_argument("--box", type=float, required=True, help="box length")
    k.add_argument("--out", default="kernels")
    k.add_argument("--smoothing", type=float, default=0.0, help="Gaussian width regularizing the delta")
    k.add_argument("--padding", type=int, default=1, help="supercell factor for image suppression")
    k.set_defaults(func=cmd_kernels)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
