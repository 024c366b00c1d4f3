import csv
import json
import math
from collections import Counter

import numpy as np
import pytest

from setnewton.bench import bench, emit, load_run, start_points, summarize
from setnewton.cli import main
from setnewton.problem import make_example
from setnewton.solver import SolverConfig, solve_newton


def naive_summary(values):
    s = sorted(values)
    n = len(s)
    med = s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2
    counts = Counter(round(v) for v in values)
    mode = min(v for v in counts if counts[v] == max(counts.values()))
    mean = sum(values) / n
    sd = math.sqrt(sum((v - mean) ** 2 for v in values) / n)
    return (s[0], s[-1], mean, med, mode, sd)


def test_summarize_examples():
    assert summarize([1, 2, 2, 3]) == pytest.approx((1, 3, 2, 2, 2, math.sqrt(0.5)))
    assert summarize([5]) == (5, 5, 5, 5, 5, 0)
    assert summarize([2, 2, 2]) == (2, 2, 2, 2, 2, 0)
    assert summarize([3, 1, 3, 1])[4] == 1
    with pytest.raises(ValueError):
        summarize([])


def test_summarize_matches_naive_reference():
    rng = np.random.default_rng(0)
    for _ in range(200):
        vals = rng.integers(0, 20, size=int(rng.integers(1, 30))).tolist()
        assert summarize(vals) == pytest.approx(naive_summary(vals))


def test_start_points_are_keyed_by_index():
    P, _ = make_example("ex5_1")
    a, b = start_points(P, 5, 3), start_points(P, 8, 3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(np.all(x >= -4) and np.all(x <= 4) for x in b)
    assert not np.array_equal(start_points(P, 1, 4)[0], a[0])


def test_bench_single_start_and_invariants():
    res = bench("ex5_3", "SD", n_starts=1, seed=2)
    it = res.stats.iterations
    assert it[0] == it[1] == it[2] == it[3] == it[4] and it[5] == 0
    res = bench("ex5_1", "SD", n_starts=10)
    mn, mx, _, med, _, sd = res.stats.iterations
    assert mn <= med <= mx and sd >= 0
    assert res.stats.successes + sum(res.stats.failures.values()) == 10


def test_bench_rejects_bad_arguments():
    with pytest.raises(ValueError):
        bench("ex5_1", "NM", n_starts=0)
    with pytest.raises(ValueError):
        bench("ex5_1", "Newton", n_starts=1)


def test_bench_is_thread_independent():
    a = bench("ex5_2", "NM", n_starts=12, seed=5, workers=1)
    b = bench("ex5_2", "NM", n_starts=12, seed=5, workers=4)
    for s, t in zip(a.starts, b.starts):
        assert np.array_equal(s.run.x_final, t.run.x_final) and s.run.iterations == t.run.iterations


def test_emit_formats(tmp_path):
    P, K = make_example("ex5_5")
    run = solve_newton(P, K, SolverConfig(full_step=True), [-5.0, -5.0])
    path = emit(run, "csv", tmp_path / "trace.csv")
    rows = list(csv.DictReader(open(path)))
    assert [r["k"] for r in rows] == ["0", "1"]
    assert (float(rows[0]["x1"]), float(rows[0]["x2"])) == (-5.0, -5.0)
    assert (float(rows[1]["x1"]), float(rows[1]["x2"])) == (-1.0, -1.0)
    assert list(rows[0]) == ["k", "x1", "x2", "u_norm", "phi", "t", "varsigma", "elapsed"]
    back = load_run(emit(run, "json", tmp_path / "trace.json"))
    assert back.to_dict() == run.to_dict()

    res = bench("ex5_1", "NM_fullstep", n_starts=7)
    lines = list(csv.reader(open(emit(res, "csv", tmp_path / "bench.csv"))))
    assert len(lines) == 8
    assert lines[0] == ["start_index", "x0_1", "x0_2", "status", "iterations", "time_s"]
    data = json.load(open(emit(res, "json", tmp_path / "bench.json")))
    assert len(data["starts"]) == 7 and data["stats"]["n_starts"] == 7

    with pytest.raises(ValueError):
        emit(run, "xml", tmp_path / "x")
    with pytest.raises(OSError, match="missing"):
        emit(run, "csv", tmp_path / "missing" / "trace.csv")


def test_cli_solve_and_bench(tmp_path, capsys):
    out = tmp_path / "run.json"
    assert main(["solve", "--problem", "ex5_5", "--algo", "nm-full", "--x0", "-5", "-5",
                 "--out", str(out), "--format", "json"]) == 0
    assert "status=Converged updates=1" in capsys.readouterr().out
    assert load_run(out).iterations == 2

    csv_out = tmp_path / "b.csv"
    assert main(["bench", "--problem", "ex5_1", "--algo", "nm-full", "--starts", "5",
                 "--workers", "2", "--out", str(csv_out)]) == 0
    assert "NM_fullstep" in capsys.readouterr().out
    assert len(csv_out.read_text().splitlines()) == 6


def test_cli_custom_cone(tmp_path):
    cone = tmp_path / "cone.json"
    cone.write_text(json.dumps({"m": 2, "rows": [[1, 0], [1, 1]], "e": [1, 1]}))
    assert main(["solve", "--problem", "ex5_1", "--cone", str(cone), "--x0", "1", "1"]) == 0
    cone.write_text(json.dumps({"m": 3, "rows": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "e": [1, 1, 1]}))
    assert main(["solve", "--problem", "ex5_1", "--cone", str(cone)]) == 2


def test_cli_check_and_list(capsys):
    assert main(["check", "--problem", "ex5_5", "--points", "3"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["list"]) == 0
    assert "ex5_7" in capsys.readouterr().out


def test_cli_errors():
    with pytest.raises(SystemExit) as info:
        main(["solve", "--problem", "nope"])
    assert info.value.code != 0
    assert main(["solve", "--problem", "ex5_1", "--beta", "2"]) == 2
    assert main(["solve", "--problem", "ex5_1", "--x0", "1", "2", "3"]) == 2


def test_ex5_1_sd_mean_iterations():
    res = bench("ex5_1", "SD", n_starts=100, seed=0, workers=4)
    assert not res.stats.failures
    assert abs(res.stats.iterations[2] - 11.48) <= 0.3 * 11.48
