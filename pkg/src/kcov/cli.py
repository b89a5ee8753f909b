"""Command line entry point: ``kcov <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from typing import Sequence, TextIO

from . import __version__
from ._backend import BACKEND

log = logging.getLogger("kcov")


def _open_out(path: str | None) -> TextIO:
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def _open_in(path: str | None) -> TextIO:
    return sys.stdin if path in (None, "-") else open(path)


def cmd_sample(args: argparse.Namespace) -> int:
    from .kostlan import EnsembleSpec, RejectionLog, sample_pair

    spec = EnsembleSpec(args.degree, "real", args.seed)
    rej = RejectionLog()
    out = _open_out(args.out)
    try:
        for i in range(args.start, args.start + args.samples):
            pair = sample_pair(spec, i, rej)
            out.write(json.dumps(pair.to_json(), separators=(",", ":")) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if rej.total:
        log.warning("%d rejected draws", rej.total)
    return 0


def cmd_count(args: argparse.Namespace) -> int:
    from .poly import CoveringPair, infinity_multiplicity
    from .realroots import count_complex_critical, count_real_critical

    src = _open_in(args.input)
    out = _open_out(args.out)
    status = 0
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["index", "d", "n_real", "n_complex", "inf_root"])
        for lineno, line in enumerate(src):
            if not line.strip():
                continue
            pair = CoveringPair.from_json(json.loads(line))
            idx = pair.provenance.index if pair.provenance.index is not None else lineno
            n_complex = count_complex_critical(pair)
            if n_complex != 2 * pair.d - 2:
                log.error("index %s: %d complex critical points, expected %d", idx, n_complex, 2 * pair.d - 2)
                status = 2
            w.writerow([idx, pair.d, count_real_critical(pair, args.method), n_complex, infinity_multiplicity(pair)])
    finally:
        if out is not sys.stdout:
            out.close()
        if src is not sys.stdin:
            src.close()
    return status


def cmd_jets(args: argparse.Namespace) -> int:
    from .geometry import PointCP1, jet_report

    rep = jet_report(args.degree, PointCP1.parse(args.point), args.B)
    print(json.dumps(rep.to_json(), indent=2))
    return 0


def cmd_moments(args: argparse.Namespace) -> int:
    from .analysis import moment_report
    from .geometry import PointCP1

    x = PointCP1.parse(args.point) if args.point else None
    rep = moment_report(args.mode, args.m_max, args.degree, x, args.samples, args.seed, args.B)
    print(json.dumps(rep.to_json(), indent=2))
    return 0 if all(rep.satisfied) else 1


def cmd_pl_check(args: argparse.Namespace) -> int:
    from .analysis import DiscBump, IllPosedFixture, empirical_order, poincare_lelong_study
    from .kostlan import EnsembleSpec, sample_pair

    re_, im_ = (float(t) for t in args.center.split(","))
    bump = DiscBump(complex(re_, im_), args.radius)
    grids = [int(g) for g in args.grids.split(",")]
    out = _open_out(args.out)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["grid", "lhs", "rhs", "residual"])
        for i in range(args.index, args.index + args.pairs):
            pair = sample_pair(EnsembleSpec(args.degree, "real", args.seed), i)
            try:
                rows = poincare_lelong_study(pair, bump, grids)
            except IllPosedFixture as e:
                log.error("pair %d: %s", i, e)
                return 3
            for r in rows:
                w.writerow([r.grid, repr(r.lhs), repr(r.rhs), repr(r.residual)])
            log.info("pair %d: empirical order %.3g", i, empirical_order(rows))
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _experiment_config(args: argparse.Namespace, degrees):
    from .experiments import DEFAULT_ELL_GRID, ExperimentConfig, parse_ell_grid

    ell = parse_ell_grid(args.ell) if getattr(args, "ell", None) else DEFAULT_ELL_GRID
    return ExperimentConfig(
        degrees=degrees,
        samples=args.samples,
        master_seed=args.seed,
        ell_grid=ell,
        workers=args.workers,
        out_dir=args.out,
        chunk=args.chunk,
        allow_large=args.allow_large,
    )


def _run_experiment(fn) -> int:
    from .experiments import RiemannHurwitzViolation

    try:
        return fn()
    except RiemannHurwitzViolation as e:
        log.error("hard assertion failed: %s", e)
        return 2


def cmd_sweep(args: argparse.Namespace) -> int:
    from .experiments import emit_report, parse_degrees, sweep_mean

    def run() -> int:
        cfg = _experiment_config(args, parse_degrees(args.degrees))
        t = time.perf_counter()
        rep = sweep_mean(cfg)
        emit_report(rep, args.out, cfg, time.perf_counter() - t)
        for r in rep.rows:
            print(f"d={r.d} mean={r.mean:.4f} se={r.se:.4f} mean/sqrt(d)={r.mean_over_sqrt_d:.4f}")
        if rep.limit is not None:
            print(f"extrapolated limit {rep.limit:.4f}")
        return 0

    return _run_experiment(run)


def cmd_tail(args: argparse.Namespace) -> int:
    from .experiments import emit_report, tail_estimate

    def run() -> int:
        cfg = _experiment_config(args, (args.degree,))
        t = time.perf_counter()
        rep = tail_estimate(cfg, args.degree)
        emit_report(rep, args.out, cfg, time.perf_counter() - t)
        for r in rep.rows:
            flag = " (below theorem regime)" if r.below_regime else ""
            print(f"ell={r.ell:g} threshold={r.threshold} hits={r.hits} p={r.p_hat:.3e}{flag}")
        if rep.slope is not None:
            print(f"fit: slope={rep.slope:.4f} R2={rep.r2:.4f}")
        return 0 if rep.monotone else 1

    return _run_experiment(run)


def cmd_maximal(args: argparse.Namespace) -> int:
    from .experiments import emit_report, maximal_frequency, parse_degrees

    def run() -> int:
        cfg = _experiment_config(args, parse_degrees(args.degrees))
        t = time.perf_counter()
        reps = [maximal_frequency(cfg, d) for d in cfg.degrees]
        emit_report(reps, args.out, cfg, time.perf_counter() - t)
        for r in reps:
            print(f"d={r.d} maximal={r.hits}/{r.n} p={r.p_hat:.3e} [{r.ci_lo:.3e}, {r.ci_hi:.3e}]")
        return 0

    return _run_experiment(run)


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench import format_table, run_benchmark

    degrees = [int(d) for d in args.degrees.split(",")]
    rows = run_benchmark(degrees, args.samples, args.seed)
    print(format_table(rows))
    return 0


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for Riemann-Hurwitz violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kcov", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="emit Kostlan pairs as JSON lines")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("count", help="count critical points of JSON-lines pairs")
    p.add_argument("--input")
    p.add_argument("--out")
    p.add_argument("--method", choices=("auto", "sturm", "descartes"), default="auto")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("jets", help="jet map norms at a point")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--point", required=True, help="RE,IM of the affine coordinate, or inf")
    p.add_argument("--B", type=float, default=1.0)
    p.set_defaults(func=cmd_jets)

    p = sub.add_parser("moments", help="log-moment reports")
    p.add_argument("--mode", choices=("radial", "cubic", "det", "wronskian"), required=True)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--degree", type=int)
    p.add_argument("--point")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--B", type=float, default=1.0)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("pl-check", help="Poincare-Lelong residual under grid refinement")
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--pairs", type=int, default=1)
    p.add_argument("--center", default="1,1")
    p.add_argument("--radius", type=float, default=0.2)
    p.add_argument("--grids", default="64,128,256")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pl_check)

    def experiment(p: argparse.ArgumentParser) -> None:
        p.add_argument("--samples", type=int, default=2000)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", default="out")
        p.add_argument("--workers", type=int)
        p.add_argument("--chunk", type=int, default=250)
        p.add_argument("--allow-large", action="store_true")

    p = sub.add_parser("sweep", help="mean number of real critical points vs d")
    p.add_argument("--degrees", required=True)
    experiment(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tail", help="tail probabilities P[N >= ell sqrt d]")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--ell", default="0.5:2.5:0.5")
    experiment(p)
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("maximal", help="frequency of maximal coverings")
    p.add_argument("--degrees", required=True)
    experiment(p)
    p.set_defaults(func=cmd_maximal)

    p = sub.add_parser("bench", help="compiled vs pure-Python kernels")
    p.add_argument("--degrees", default="20,50,100")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"kcov {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
