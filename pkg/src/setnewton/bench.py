"""Multi-start benchmarks, summary statistics and report files."""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cone import Cone
from .problem import ProblemInstance, make_example
from .solver import RunRecord, SolverConfig, Status, solve_newton, solve_sd

ALGORITHMS = ("NM", "NM_fullstep", "SD")


def summarize(values, integer_mode: bool = True) -> tuple[float, ...]:
    """``(min, max, mean, median, mode, sd)`` with the population standard deviation.

    With ``integer_mode`` the mode is taken over values rounded to the
    nearest integer.  Ties in the mode go to the smallest value.
    """
    values = [float(v) for v in values]
    if not values:
        raise ValueError("cannot summarize an empty list")
    pool = [float(round(v)) for v in values] if integer_mode else values
    counts = Counter(pool)
    top = max(counts.values())
    mode = min(v for v, c in counts.items() if c == top)
    return (min(values), max(values), statistics.fmean(values), statistics.median(values),
            mode, statistics.pstdev(values))


@dataclass
class BenchStats:
    algorithm: str
    n_starts: int
    iterations: tuple[float, ...] | None
    time_seconds: tuple[float, ...] | None
    failures: dict[str, int] = field(default_factory=dict)

    @property
    def successes(self) -> int:
        return self.n_starts - sum(self.failures.values())


@dataclass(eq=False)
class StartRecord:
    start_index: int
    x0: np.ndarray
    run: RunRecord
    time_s: float


@dataclass(eq=False)
class BenchResult:
    problem: str
    seed: int
    stats: BenchStats
    starts: list[StartRecord]


def start_points(P: ProblemInstance, n_starts: int, seed: int) -> list[np.ndarray]:
    """Uniform points in the sample box; start ``i`` depends only on ``(seed, i)``."""
    lo, hi = P.sample_box
    return [lo + (hi - lo) * np.random.default_rng([seed, i]).random(P.n) for i in range(n_starts)]


def _solver_for(algorithm: str, cfg: SolverConfig):
    if algorithm == "SD":
        return solve_sd, cfg
    if algorithm == "NM":
        return solve_newton, SolverConfig(**{**asdict(cfg), "full_step": False})
    if algorithm == "NM_fullstep":
        return solve_newton, SolverConfig(**{**asdict(cfg), "full_step": True})
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


def bench(problem: str, algorithm: str, cfg: SolverConfig | None = None, n_starts: int = 100,
          seed: int = 0, workers: int = 1, cone: Cone | None = None, **overrides) -> BenchResult:
    """Run ``algorithm`` from ``n_starts`` random points; ``cone`` replaces the instance's cone."""
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    P, K = make_example(problem, **overrides)
    if cone is not None:
        if cone.m != K.m:
            raise ValueError(f"cone has dimension {cone.m}, problem {problem!r} has {K.m}")
        K = cone
    solve, cfg = _solver_for(algorithm, cfg or SolverConfig())
    x0s = start_points(P, n_starts, seed)

    def one(i):
        t0 = time.perf_counter()
        run = solve(P, K, cfg, x0s[i])
        return StartRecord(i, x0s[i], run, time.perf_counter() - t0)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            starts = list(pool.map(one, range(n_starts)))
    else:
        starts = [one(i) for i in range(n_starts)]

    ok = [s for s in starts if s.run.status is Status.CONVERGED]
    failures = dict(Counter(s.run.status.value for s in starts if s.run.status is not Status.CONVERGED))
    iters = summarize([s.run.iterations for s in ok]) if ok else None
    if ok:
        tmin, tmax, tmean, tmed, tmode, tsd = summarize([s.time_s for s in ok], integer_mode=True)
        times = (tmin, tmax, tmean, tmed, float(math.ceil(tmode)), tsd)
    else:
        times = None
    return BenchResult(problem, seed, BenchStats(algorithm, n_starts, iters, times, failures), starts)


# ---------------------------------------------------------------------------
# reports


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def trace_header(n: int, include_time: bool = True) -> list[str]:
    cols = ["k"] + [f"x{i + 1}" for i in range(n)] + ["u_norm", "phi", "t", "varsigma"]
    return cols + ["elapsed"] if include_time else cols


def trace_rows(run: RunRecord, include_time: bool = True) -> list[list[str]]:
    rows = []
    for rec in run.trace:
        row = [str(rec.k)] + [_num(v) for v in rec.x]
        row += [_num(rec.u_norm), _num(rec.phi), _num(rec.t), _num(rec.varsigma_val)]
        if include_time:
            row.append(_num(rec.elapsed))
        rows.append(row)
    return rows


def bench_header(n: int) -> list[str]:
    return ["start_index"] + [f"x0_{i + 1}" for i in range(n)] + ["status", "iterations", "time_s"]


def bench_rows(result: BenchResult) -> list[list[str]]:
    return [[str(s.start_index)] + [_num(v) for v in s.x0]
            + [s.run.status.value, str(s.run.iterations), _num(s.time_s)]
            for s in result.starts]


def bench_to_dict(result: BenchResult) -> dict:
    return {
        "problem": result.problem,
        "seed": result.seed,
        "stats": asdict(result.stats),
        "starts": [{"start_index": s.start_index, "x0": s.x0.tolist(), "time_s": s.time_s,
                    "run": s.run.to_dict()} for s in result.starts],
    }


def emit(report, fmt: str, path) -> Path:
    """Write a :class:`RunRecord` or :class:`BenchResult` as ``csv`` or ``json``."""
    path = Path(path)
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(report, RunRecord):
        payload = report.to_dict()
        header, rows = trace_header(len(report.x0)), trace_rows(report)
    elif isinstance(report, BenchResult):
        payload = bench_to_dict(report)
        n = len(report.starts[0].x0) if report.starts else 0
        header, rows = bench_header(n), bench_rows(report)
    else:
        raise TypeError(f"cannot emit {type(report).__name__}")
    try:
        with open(path, "w", newline="") as fh:
            if fmt == "json":
                json.dump(payload, fh, indent=1)
            else:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"could not write report to {path}: {exc}") from exc
    return path


def load_run(path) -> RunRecord:
    with open(path) as fh:
        return RunRecord.from_dict(json.load(fh))
