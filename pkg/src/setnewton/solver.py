"""Outer iterations: Newton and steepest-descent loops with a cone Armijo rule."""

from __future__ import annotations

import enum
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .cone import Cone, leq, lower_set_less, varsigma
from .direction import (INNER_MAX_ITER, INNER_TOL, InnerSolverError, StrongConvexityError,
                        newton_direction, sd_direction)
from .minimal import DEFAULT_PARTITION_CAP, TIE_TOL, PartitionBlowUp, decompose
from .problem import ProblemInstance, evaluate_family, jacobian


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    LINE_SEARCH_FAILURE = "LineSearchFailure"
    INNER_FAILURE = "InnerFailure"
    PARTITION_BLOW_UP = "PartitionBlowUp"


class LineSearchFailure(RuntimeError):
    def __init__(self, margin: float, q_max: int):
        super().__init__(f"no step nu^q with q <= {q_max} satisfies the Armijo condition "
                         f"(best margin {margin:.3g})")
        self.margin = margin


@dataclass
class SolverConfig:
    beta: float = 0.5
    nu: float = 0.54
    eps: float = 1e-3
    max_iter: int = 100
    full_step: bool = False
    q_max: int = 60
    inner_tol: float = INNER_TOL
    inner_max_iter: int = INNER_MAX_ITER
    partition_cap: int = DEFAULT_PARTITION_CAP
    tie_tol: float = TIE_TOL

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if not 0 < self.nu < 1:
            raise ValueError("nu must lie in (0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1 or self.q_max < 1:
            raise ValueError("max_iter and q_max must be at least 1")


@dataclass(eq=False)
class IterateRecord:
    k: int
    x: np.ndarray
    w: int
    tuple: tuple[int, ...]
    u: np.ndarray
    u_norm: float
    phi: float
    t: float | None
    varsigma_val: float
    elapsed: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x"] = self.x.tolist()
        d["u"] = self.u.tolist()
        d["tuple"] = list(self.tuple)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "IterateRecord":
        d = dict(d)
        d["x"] = np.array(d["x"], dtype=float)
        d["u"] = np.array(d["u"], dtype=float)
        d["tuple"] = tuple(d["tuple"])
        return cls(**d)


@dataclass(eq=False)
class RunRecord:
    config: SolverConfig
    problem: str
    algorithm: str
    x0: np.ndarray
    trace: list[IterateRecord] = field(default_factory=list)
    status: Status = Status.MAX_ITERATIONS
    regular: bool | None = None
    message: str = ""

    @property
    def x_final(self) -> np.ndarray:
        if not self.trace:
            return self.x0
        last = self.trace[-1]
        return last.x if last.t is None else last.x + last.t * last.u

    @property
    def updates(self) -> int:
        return sum(rec.t is not None for rec in self.trace)

    @property
    def iterations(self) -> int:
        """Trace length; the terminal stationarity check counts as an iteration."""
        return len(self.trace)

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "problem": self.problem,
            "algorithm": self.algorithm,
            "x0": self.x0.tolist(),
            "status": self.status.value,
            "regular": self.regular,
            "message": self.message,
            "trace": [rec.to_dict() for rec in self.trace],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            config=SolverConfig(**d["config"]),
            problem=d["problem"],
            algorithm=d["algorithm"],
            x0=np.array(d["x0"], dtype=float),
            trace=[IterateRecord.from_dict(r) for r in d["trace"]],
            status=Status(d["status"]),
            regular=d["regular"],
            message=d.get("message", ""),
        )


def _armijo_margin(K: Cone, f_new, f_old, slopes, beta, t) -> float:
    rhs = f_old + beta * t * slopes
    return float(np.min((rhs - f_new) @ K.rows.T))


def armijo_step(P: ProblemInstance, K: Cone, x, a, u, cfg: SolverConfig) -> float:
    """Largest ``nu^q`` with ``f^{a_j}(x + t u) <= f^{a_j}(x) + beta t J_j u`` for every ``j``."""
    x = P.check_point(x)
    u = np.asarray(u, dtype=float)
    idx = list(a)
    f_old = evaluate_family(P, x)[idx]
    slopes = np.array([jacobian(P, i, x) @ u for i in idx])
    best = -np.inf
    for q in range(cfg.q_max + 1):
        t = cfg.nu ** q
        f_new = evaluate_family(P, x + t * u)[idx]
        margin = _armijo_margin(K, f_new, f_old, slopes, cfg.beta, t)
        if margin >= -K.tol_membership:
            return t
        best = max(best, margin)
    raise LineSearchFailure(best, cfg.q_max)


def _run(P: ProblemInstance, K: Cone, cfg: SolverConfig, x0, algorithm: str) -> RunRecord:
    find_direction = sd_direction if algorithm == "SD" else newton_direction
    x = P.check_point(x0).copy()
    run = RunRecord(cfg, P.name, algorithm, x.copy())
    start = time.perf_counter()
    dec = None
    for k in range(cfg.max_iter):
        values = evaluate_family(P, x)
        dec = decompose(P, K, x, cfg.tie_tol, values)
        try:
            a, out, phi = find_direction(P, K, x, dec, cfg.partition_cap,
                                         cfg.inner_tol, cfg.inner_max_iter)
        except PartitionBlowUp as exc:
            run.status, run.message = Status.PARTITION_BLOW_UP, str(exc)
            break
        except (StrongConvexityError, InnerSolverError) as exc:
            run.status, run.message = Status.INNER_FAILURE, f"tuple {exc.tuple}: {exc}"
            break
        rec = IterateRecord(k, x.copy(), dec.w, a, out.u, out.u_norm, phi, None,
                            varsigma(K, values), time.perf_counter() - start)
        run.trace.append(rec)
        if out.u_norm < cfg.eps:
            run.status = Status.CONVERGED
            break
        if cfg.full_step:
            t = 1.0
        else:
            try:
                t = armijo_step(P, K, x, a, out.u, cfg)
            except LineSearchFailure as exc:
                run.status, run.message = Status.LINE_SEARCH_FAILURE, str(exc)
                break
        rec.t = t
        x = x + t * out.u
    else:
        run.status = Status.MAX_ITERATIONS
    if dec is not None:
        run.regular = dec.regular
    return run


def solve_newton(P: ProblemInstance, K: Cone, cfg: SolverConfig, x0) -> RunRecord:
    return _run(P, K, cfg, x0, "NM_fullstep" if cfg.full_step else "NM")


def solve_sd(P: ProblemInstance, K: Cone, cfg: SolverConfig, x0) -> RunRecord:
    return _run(P, K, cfg, x0, "SD")


@dataclass
class AuditStep:
    k: int
    set_descent: bool
    merit_ok: bool
    merit_slack: float
    armijo_ok: bool


@dataclass
class AuditReport:
    steps: list[AuditStep]

    @property
    def passed(self) -> bool:
        return all(s.set_descent and s.merit_ok for s in self.steps)

    def failures(self) -> list[AuditStep]:
        return [s for s in self.steps if not (s.set_descent and s.merit_ok)]


def descent_audit(P: ProblemInstance, K: Cone, run: RunRecord, merit_slack: float = 1e-9) -> AuditReport:
    """Recheck every accepted step of a run.

    For each consecutive pair of iterates: strict lower-set descent
    ``F(x_{k+1}) < F(x_k)``, the merit recursion
    ``varsigma(F(x_{k+1})) <= varsigma(F(x_k)) + beta t_k phi_k``, and the
    Armijo inequality for the chosen tuple.
    """
    steps = []
    for rec, nxt in zip(run.trace, run.trace[1:]):
        F_old = evaluate_family(P, rec.x)
        F_new = evaluate_family(P, nxt.x)
        bound = varsigma(K, F_old) + run.config.beta * rec.t * rec.phi
        slack = bound - varsigma(K, F_new)
        idx = list(rec.tuple)
        slopes = np.array([jacobian(P, i, rec.x) @ rec.u for i in idx])
        armijo = all(
            leq(K, F_new[i], F_old[i] + run.config.beta * rec.t * s)
            for i, s in zip(idx, slopes))
        steps.append(AuditStep(rec.k, lower_set_less(K, F_new, F_old, strict=True),
                               slack >= -merit_slack, float(slack), armijo))
    return AuditReport(steps)


def convergence_order(run: RunRecord, xbar=None) -> dict[str, list[float]]:
    """Observed ratios ``e_{k+1}/e_k`` and ``e_{k+1}/e_k^2`` with ``e_k = ||x_k - xbar||``."""
    xs = [rec.x for rec in run.trace]
    if len(xs) < 3:
        return {"linear_ratios": [], "quad_ratios": []}
    xbar = xs[-1] if xbar is None else np.asarray(xbar, dtype=float)
    err = [float(np.linalg.norm(x - xbar)) for x in xs]
    lin, quad = [], []
    for e0, e1 in zip(err, err[1:]):
        if e0 < 1e-12:
            continue
        lin.append(e1 / e0)
        quad.append(e1 / e0 ** 2)
    return {"linear_ratios": lin, "quad_ratios": quad}
