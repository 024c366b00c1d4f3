import json

import numpy as np
import pytest

import setnewton.solver as solver
from setnewton.cone import Cone, leq
from setnewton.minimal import decompose
from setnewton.direction import newton_direction
from setnewton.problem import make_example
from setnewton.solver import (LineSearchFailure, RunRecord, SolverConfig, Status, armijo_step,
                              convergence_order, descent_audit, solve_newton, solve_sd)

from helpers import one_dim_square

R1 = Cone.nonnegative_orthant(1)


def test_config_validation():
    for bad in ({"beta": 0.0}, {"beta": 1.0}, {"nu": 1.5}, {"eps": 0.0}, {"max_iter": 0}):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


def test_armijo_hand_cases():
    P, cfg = one_dim_square(), SolverConfig()
    assert armijo_step(P, R1, [1.0], (0,), [0.0], cfg) == 1.0
    assert armijo_step(P, R1, [1.0], (0,), [-1.0], cfg) == 1.0
    # (1-2t)^2 <= 1-2t needs t <= 1/2, first reached at q=2
    assert armijo_step(P, R1, [1.0], (0,), [-2.0], cfg) == pytest.approx(0.54 ** 2)


def test_armijo_failure_on_ascent_direction():
    with pytest.raises(LineSearchFailure) as info:
        armijo_step(one_dim_square(), R1, [1.0], (0,), [1.0], SolverConfig(q_max=20))
    assert info.value.margin < 0


def test_armijo_accepts_unit_step_on_ex5_5():
    P, K = make_example("ex5_5")
    x = np.array([-5.0, -5.0])
    a, out, _ = newton_direction(P, K, x, decompose(P, K, x))
    assert armijo_step(P, K, x, a, out.u, SolverConfig(beta=1e-4)) == 1.0
    assert armijo_step(P, K, x, a, out.u, SolverConfig()) == 1.0


def test_ex5_5_full_step_run():
    P, K = make_example("ex5_5")
    run = solve_newton(P, K, SolverConfig(full_step=True), [-5.0, -5.0])
    assert run.status is Status.CONVERGED and run.algorithm == "NM_fullstep"
    assert run.iterations == 2 and run.updates == 1
    assert np.allclose(run.trace[1].x, [-1.0, -1.0], atol=1e-12)
    assert run.trace[-1].t is None and run.trace[-1].u_norm < 1e-4
    assert descent_audit(P, K, run).passed
    order = convergence_order(run)
    assert order == {"linear_ratios": [], "quad_ratios": []}


def test_stationary_start():
    P = one_dim_square()
    for solve in (solve_newton, solve_sd):
        run = solve(P, R1, SolverConfig(), [0.0])
        assert run.status is Status.CONVERGED and run.updates == 0 and run.iterations == 1
        assert descent_audit(P, R1, run).passed and descent_audit(P, R1, run).steps == []


def test_ex5_1_runs():
    # frozen from this implementation; see the acceptance suite for the published comparison
    P, K = make_example("ex5_1")
    nm = solve_newton(P, K, SolverConfig(), [0.5102, 1.0])
    sd = solve_sd(P, K, SolverConfig(), [0.5102, 1.0])
    assert nm.status is Status.CONVERGED and nm.updates == 1
    assert np.linalg.norm(nm.x_final) < 1e-12
    assert sd.status is Status.CONVERGED and sd.updates == 9
    assert all(r.t == pytest.approx(0.54 ** 2) for r in sd.trace[:-1])
    for run in (nm, sd):
        assert descent_audit(P, K, run).passed


def test_iterate_invariants_and_armijo_recheck():
    P, K = make_example("ex5_3")
    run = solve_sd(P, K, SolverConfig(), [3.0, -2.0])
    assert run.status is Status.CONVERGED
    for rec in run.trace[:-1]:
        assert rec.phi < 0 and rec.u_norm >= run.config.eps
    assert run.trace[-1].u_norm < run.config.eps
    report = descent_audit(P, K, run)
    assert report.passed and all(s.armijo_ok for s in report.steps)


def test_ex5_4_sd_stalls():
    P, K = make_example("ex5_4")
    run = solve_sd(P, K, SolverConfig(), [2.13])
    assert run.status is Status.CONVERGED and run.updates == 0
    assert abs(run.x_final[0] - 2.13) < 1e-6


def test_max_iterations_status():
    P, K = make_example("ex5_1")
    run = solve_sd(P, K, SolverConfig(max_iter=2), [3.0, 3.0])
    assert run.status is Status.MAX_ITERATIONS and run.iterations == 2


def test_fault_injection_is_flagged(monkeypatch):
    P, K = make_example("ex5_1")
    real = solver.armijo_step
    monkeypatch.setattr(solver, "armijo_step", lambda *a, **k: 2.0 * real(*a, **k))
    run = solve_newton(P, K, SolverConfig(max_iter=5), [0.5102, 1.0])
    report = descent_audit(P, K, run)
    assert not report.passed and report.failures()


def test_convergence_order_ratios():
    P, K = make_example("ex5_1")
    run = solve_sd(P, K, SolverConfig(), [3.0, 2.0])
    ratios = convergence_order(run)["linear_ratios"]
    assert ratios and ratios[-1] < 1
    const = RunRecord(SolverConfig(), "c", "SD", np.zeros(1))
    const.trace = [solver.IterateRecord(k, np.array([0.0]), 1, (0,), np.zeros(1), 0.0, 0.0, 0.0, 0.0, 0.0)
                   for k in range(4)]
    assert convergence_order(const, np.array([1.0]))["linear_ratios"] == [1.0, 1.0, 1.0]


def test_run_json_round_trip():
    P, K = make_example("ex5_3")
    run = solve_newton(P, K, SolverConfig(), [1.0, 2.0])
    back = RunRecord.from_dict(json.loads(json.dumps(run.to_dict())))
    assert back.to_dict() == run.to_dict()


def test_strict_descent_relation_on_trace():
    P, K = make_example("ex5_2")
    run = solve_newton(P, K, SolverConfig(), [3.0])
    for rec in run.trace[:-1]:
        for i in rec.tuple:
            assert leq(K, P.values(rec.x + rec.t * rec.u)[i],
                       P.values(rec.x)[i] + 0.5 * rec.t * (P.jac(i, rec.x) @ rec.u) + 1e-12)
