"""Command-line harness: ``solve``, ``bench``, ``check`` and ``list``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import ALGORITHMS, bench, emit, start_points, trace_header, trace_rows
from .cone import Cone, gerstewitz, gerstewitz_lipschitz
from .problem import EXAMPLES, fd_check, make_example
from .solver import SolverConfig, Status, descent_audit, solve_newton, solve_sd

log = logging.getLogger("setnewton")

ALGO_FLAGS = {"nm": "NM", "nm-full": "NM_fullstep", "sd": "SD"}


def _config(args) -> SolverConfig:
    return SolverConfig(beta=args.beta, nu=args.nu, eps=args.eps, max_iter=args.max_iter,
                        full_step=args.algo == "nm-full")


def _cone(args, K: Cone) -> Cone:
    if args.cone is None:
        return K
    custom = Cone.from_json(Path(args.cone).read_text())
    if custom.m != K.m:
        raise ValueError(f"cone has dimension {custom.m}, problem {args.problem!r} has {K.m}")
    return custom


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.4f}"


def _table(header, rows) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines)


def cmd_list(args) -> int:
    for name in EXAMPLES:
        P, K = make_example(name)
        lo, hi = P.sample_box
        print(f"{name}: n={P.n} m={P.m} p={P.p} box=[{lo.tolist()}, {hi.tolist()}] "
              f"cone rows={K.rows.tolist()} e={np.round(K.e, 6).tolist()}")
    return 0


def cmd_solve(args) -> int:
    P, K = make_example(args.problem)
    K = _cone(args, K)
    x0 = np.array(args.x0, dtype=float) if args.x0 else start_points(P, 1, args.seed)[0]
    cfg = _config(args)
    run = (solve_sd if args.algo == "sd" else solve_newton)(P, K, cfg, x0)
    rows = [[_short(c) if c else "-" for c in r] for r in trace_rows(run, include_time=False)]
    print(_table(trace_header(P.n, include_time=False), rows))
    print(f"status={run.status.value} updates={run.updates} iterations={run.iterations} "
          f"x_final={run.x_final.tolist()}")
    if run.message:
        print(run.message)
    if args.out:
        emit(run, args.format, args.out)
    return 0


def _short(cell: str) -> str:
    try:
        return f"{float(cell):.6g}"
    except ValueError:
        return cell


def cmd_bench(args) -> int:
    cfg = _config(args)
    algos = [ALGO_FLAGS[args.algo]] if args.algo else list(ALGORITHMS)
    cone = None
    if args.cone is not None:
        cone = _cone(args, make_example(args.problem)[1])
    header = ["algorithm", "min", "max", "mean", "median", "mode", "sd", "failures"]
    rows = []
    for algo in algos:
        res = bench(args.problem, algo, cfg, args.starts, args.seed, args.workers, cone=cone)
        st = res.stats
        stats = st.iterations or (None,) * 6
        fails = ",".join(f"{k}:{v}" for k, v in sorted(st.failures.items())) or "0"
        rows.append([algo] + [_fmt(v) for v in stats] + [fails])
        times = st.time_seconds or (None,) * 6
        rows.append([f"{algo} time_s"] + [_fmt(v) for v in times] + [""])
        if args.out:
            out = Path(args.out)
            if len(algos) > 1:
                out = out.with_name(f"{out.stem}_{algo}{out.suffix}")
            emit(res, args.format, out)
    print(f"{args.problem}: {args.starts} starts, seed {args.seed}")
    print(_table(header, rows))
    return 0


def cmd_check(args) -> int:
    ok = True
    rng = np.random.default_rng(args.seed)
    names = [args.problem] if args.problem else list(EXAMPLES)
    for name in names:
        P, K = make_example(name)
        lo, hi = P.sample_box
        worst_j = worst_h = 0.0
        finite = True
        for _ in range(args.points):
            rep = fd_check(P, lo + (hi - lo) * rng.random(P.n))
            worst_j = max(worst_j, rep.max_rel_err_jac)
            worst_h = max(worst_h, rep.max_rel_err_hess)
            finite &= not rep.nonfinite
        limit = 1e-7 if P.quadratic else 1e-5
        passed = finite and worst_j <= limit and worst_h <= limit
        ok &= passed
        print(f"derivatives {name}: jac {worst_j:.2e} hess {worst_h:.2e} "
              f"(limit {limit:.0e}) {'PASS' if passed else 'FAIL'}")

        Z = rng.normal(size=(200, K.m)) * 10
        W = rng.normal(size=(200, K.m)) * 10
        psi_z, psi_w = gerstewitz(K, Z), gerstewitz(K, W)
        lam = rng.random(200) * 5
        L = gerstewitz_lipschitz(K)
        axioms = (np.all(gerstewitz(K, Z + W) <= psi_z + psi_w + 1e-9)
                  and np.allclose(gerstewitz(K, lam[:, None] * Z), lam * psi_z)
                  and np.allclose(gerstewitz(K, Z + 3.0 * K.e), psi_z + 3.0)
                  and np.all(np.abs(psi_z - psi_w) <= L * np.linalg.norm(Z - W, axis=1) + 1e-9))
        cfg = SolverConfig()
        run = solve_newton(P, K, cfg, lo + (hi - lo) * rng.random(P.n))
        audit = descent_audit(P, K, run)
        smoke = bool(axioms) and (run.status is not Status.CONVERGED or audit.passed)
        ok &= smoke
        print(f"invariants {name}: scalarization {'ok' if axioms else 'broken'}, "
              f"NM run {run.status.value} audit {'ok' if audit.passed else 'broken'} "
              f"{'PASS' if smoke else 'FAIL'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="setnewton",
                                     description="Newton and steepest-descent solvers for set optimization")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, algo_default):
        p.add_argument("--problem", required=True, choices=sorted(EXAMPLES))
        p.add_argument("--algo", choices=sorted(ALGO_FLAGS), default=algo_default)
        p.add_argument("--beta", type=float, default=0.5)
        p.add_argument("--nu", type=float, default=0.54)
        p.add_argument("--eps", type=float, default=1e-3)
        p.add_argument("--max-iter", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--cone", help="JSON file {\"m\", \"rows\", \"e\"} replacing the instance cone")
        p.add_argument("--out", help="report file")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("solve", help="one run with its full trace")
    common(p, "nm")
    p.add_argument("--x0", type=float, nargs="+", help="start point (default: random start 0)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="statistics over random starts")
    common(p, None)
    p.add_argument("--starts", type=int, default=100)
    p.add_argument("--workers", type=int, default=1, help="threads used for the starts")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", help="derivative and invariant checks")
    p.add_argument("--problem", choices=sorted(EXAMPLES))
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("list", help="registered instances")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        log.debug("fatal", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
