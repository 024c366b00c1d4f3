"""Set-valued objectives given by finite families of vector functions.

``F(x) = {f^1(x), ..., f^p(x)}`` with every ``f^i: R^n -> R^m`` twice
continuously differentiable.  Indices are 0-based throughout the package;
the label ``f^{k}`` used for the built-in instances corresponds to index
``k - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .cone import Cone


class OracleError(ValueError):
    """An oracle returned non-finite output, or was called with bad arguments."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A family ``{f^i}`` with analytic value, Jacobian and Hessian oracles.

    ``values(x)`` returns all ``p`` values at once as a ``(p, m)`` array;
    ``jac(i, x)`` returns the ``(m, n)`` Jacobian of ``f^i`` and
    ``hess(i, x)`` the ``(m, n, n)`` stack of component Hessians.
    """

    name: str
    n: int
    m: int
    p: int
    values: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[int, np.ndarray], np.ndarray]
    hess: Callable[[int, np.ndarray], np.ndarray]
    sample_box: tuple[np.ndarray, np.ndarray]
    rho_hint: float | None = None
    quadratic: bool = False

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise OracleError(f"{self.name}: expected x of dimension {self.n}, got {x.size}")
        return x

    def check_index(self, i: int) -> int:
        if not 0 <= int(i) < self.p:
            raise OracleError(f"{self.name}: index {i} outside [0, {self.p})", index=i)
        return int(i)


def _finite(P: ProblemInstance, arr: np.ndarray, what: str, i: int | None = None) -> np.ndarray:
    if np.all(np.isfinite(arr)):
        return arr
    if i is None:
        bad = np.flatnonzero(~np.all(np.isfinite(arr.reshape(arr.shape[0], -1)), axis=1))
        i = int(bad[0])
    raise OracleError(f"{P.name}: non-finite {what} for f^{i + 1}", index=i)


def evaluate_family(P: ProblemInstance, x) -> np.ndarray:
    """All values ``f^i(x)`` stacked in index order, shape ``(p, m)``."""
    x = P.check_point(x)
    vals = np.asarray(P.values(x), dtype=float).reshape(P.p, P.m)
    return _finite(P, vals, "value")


def jacobian(P: ProblemInstance, i: int, x) -> np.ndarray:
    """Jacobian of ``f^i`` at ``x``; row ``l`` is the gradient of component ``l``."""
    i = P.check_index(i)
    x = P.check_point(x)
    J = np.asarray(P.jac(i, x), dtype=float).reshape(P.m, P.n)
    return _finite(P, J, "Jacobian", i)


def hessian_stack(P: ProblemInstance, i: int, x) -> np.ndarray:
    """The ``m`` component Hessians of ``f^i`` at ``x``, shape ``(m, n, n)``."""
    i = P.check_index(i)
    x = P.check_point(x)
    H = np.asarray(P.hess(i, x), dtype=float).reshape(P.m, P.n, P.n)
    return _finite(P, H, "Hessian", i)


@dataclass
class FDReport:
    max_rel_err_jac: float
    max_rel_err_hess: float
    nonfinite: bool = False


def fd_check(P: ProblemInstance, x, h: float = 1e-5) -> FDReport:
    """Compare the derivative oracles against central differences at ``x``.

    Jacobians are checked against differences of the values, Hessians against
    differences of the analytic Jacobians.  Errors are entrywise and relative
    to ``max(1, |oracle entry|)``.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    x = P.check_point(x)
    jac_err = 0.0
    hess_err = 0.0
    nonfinite = False
    for i in range(P.p):
        J = jacobian(P, i, x)
        H = hessian_stack(P, i, x)
        J_fd = np.empty_like(J)
        H_fd = np.empty_like(H)
        for k in range(P.n):
            step = np.zeros(P.n)
            step[k] = h
            fp = np.asarray(P.values(x + step), dtype=float).reshape(P.p, P.m)[i]
            fm = np.asarray(P.values(x - step), dtype=float).reshape(P.p, P.m)[i]
            J_fd[:, k] = (fp - fm) / (2 * h)
            Jp = np.asarray(P.jac(i, x + step), dtype=float).reshape(P.m, P.n)
            Jm = np.asarray(P.jac(i, x - step), dtype=float).reshape(P.m, P.n)
            H_fd[:, :, k] = (Jp - Jm) / (2 * h)
        if not (np.all(np.isfinite(J_fd)) and np.all(np.isfinite(H_fd))):
            nonfinite = True
            continue
        jac_err = max(jac_err, float(np.max(np.abs(J_fd - J) / np.maximum(1.0, np.abs(J)))))
        hess_err = max(hess_err, float(np.max(np.abs(H_fd - H) / np.maximum(1.0, np.abs(H)))))
    return FDReport(jac_err, hess_err, nonfinite)


# ---------------------------------------------------------------------------
# generic quadratic families


def quadratic_family(name, const, lin, quad, sample_box=None, rho_hint=None) -> ProblemInstance:
    """Family with ``f^i_l(x) = const[i,l] + lin[i,l] . x + 0.5 x' quad[i,l] x``.

    ``const`` has shape ``(p, m)``, ``lin`` ``(p, m, n)``, ``quad`` ``(p, m, n, n)``
    (symmetrized on construction).
    """
    const = np.array(const, dtype=float)
    lin = np.array(lin, dtype=float)
    quad = np.array(quad, dtype=float)
    quad = 0.5 * (quad + np.swapaxes(quad, -1, -2))
    p, m, n = lin.shape
    if sample_box is None:
        sample_box = (-np.ones(n), np.ones(n))

    def values(x):
        return const + lin @ x + 0.5 * np.einsum("pmij,i,j->pm", quad, x, x)

    def jac(i, x):
        return lin[i] + quad[i] @ x

    def hess(i, x):
        return quad[i]

    return ProblemInstance(name, n, m, p, values, jac, hess,
                           _box(sample_box), rho_hint=rho_hint, quadratic=True)


def _box(box) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = box
    return np.atleast_1d(np.asarray(lo, dtype=float)), np.atleast_1d(np.asarray(hi, dtype=float))


def _square(lo, hi, n=2):
    return np.full(n, float(lo)), np.full(n, float(hi))


# ---------------------------------------------------------------------------
# built-in instances


def _ex5_1(p: int = 20):
    theta = 2 * np.pi * np.arange(p) / p
    offset = np.column_stack([0.5 * np.sin(theta), 0.5 * np.cos(theta)])
    scale = np.array([1.0, 2.0])

    def values(x):
        return offset + scale * (x @ x)

    def jac(i, x):
        return 2 * np.outer(scale, x)

    def hess(i, x):
        return 2 * scale[:, None, None] * np.eye(2)

    P = ProblemInstance("ex5_1", 2, 2, p, values, jac, hess, _square(-4, 4), rho_hint=2.0)
    return P, Cone.nonnegative_orthant(2)


def _ex5_2(p: int = 50):
    theta = 2 * np.pi * np.arange(p) / p
    off1 = 0.35 * np.sin(theta) * np.cos(theta)
    off2 = 0.35 * np.cos(theta)

    # 1/(1+exp(2x)) == (1 - tanh x)/2, evaluated without overflow
    def values(x):
        t = x[0]
        v1 = off1 + t * t
        v2 = off2 + 0.5 * (1 - np.tanh(t)) + np.cos(2 * t)
        return np.column_stack([v1, v2])

    def jac(i, x):
        t = x[0]
        th = np.tanh(t)
        return np.array([[2 * t], [-0.5 * (1 - th * th) - 2 * np.sin(2 * t)]])

    def hess(i, x):
        t = x[0]
        th = np.tanh(t)
        return np.array([[[2.0]], [[th * (1 - th * th) - 4 * np.cos(2 * t)]]])

    P = ProblemInstance("ex5_2", 1, 2, p, values, jac, hess, _box(([0.77], [6.3])))
    return P, Cone.nonnegative_orthant(2)


def _ex5_3(p: int = 14):
    theta = 2 * np.pi * np.arange(p) / p
    offset = np.column_stack([0.25 * np.sin(theta), 0.25 * np.cos(theta), np.arange(1, p + 1)])
    scale = np.array([1.0, 4.0, 1.0])

    def values(x):
        return offset + scale * (x @ x)

    def jac(i, x):
        return 2 * np.outer(scale, x)

    def hess(i, x):
        return 2 * scale[:, None, None] * np.eye(2)

    P = ProblemInstance("ex5_3", 2, 3, p, values, jac, hess, _square(-3, 4), rho_hint=2.0)
    return P, Cone.nonnegative_orthant(3)


def _ex5_4(p: int = 30):
    c = np.arange(p) / 30.0

    def values(x):
        t2 = x[0] ** 2
        y = t2 - 4
        return np.column_stack([t2 + c, np.full(p, y * np.sin(y)) + c, c * t2])

    def jac(i, x):
        t = x[0]
        y = t * t - 4
        g1 = np.sin(y) + y * np.cos(y)
        return np.array([[2 * t], [2 * t * g1], [2 * c[i] * t]])

    def hess(i, x):
        t = x[0]
        y = t * t - 4
        g1 = np.sin(y) + y * np.cos(y)
        g2 = 2 * np.cos(y) - y * np.sin(y)
        return np.array([[[2.0]], [[4 * t * t * g2 + 2 * g1]], [[2 * c[i]]]])

    P = ProblemInstance("ex5_4", 1, 3, p, values, jac, hess, _box(([1.54], [2.16])))
    return P, Cone.nonnegative_orthant(3)


def _grid(s: float) -> np.ndarray:
    k = np.arange(int(np.ceil(2 * s - 1e-12)))
    return np.append(-1.0 + k / s, 1.0)


def _ex5_5(s: float = 4.5, p: int | None = None):
    U = _grid(s)
    # row-major over U x U: index a*len(U) + b  <->  (U[a], U[b])
    shifts = np.array([(ua, ub) for ua in U for ub in U])
    if p is not None:
        shifts = shifts[:p]
    anchors = np.array([[0.0, 8.0], [0.0, 0.0], [8.0, 0.0]])
    centers = anchors[None, :, :] + shifts[:, None, :]  # (p, 3, 2)
    count = len(shifts)

    def values(x):
        d = x - centers
        return 0.5 * np.einsum("pcj,pcj->pc", d, d)

    def jac(i, x):
        return x - centers[i]

    def hess(i, x):
        return np.broadcast_to(np.eye(2), (3, 2, 2)).copy()

    P = ProblemInstance("ex5_5", 2, 3, count, values, jac, hess, _square(-50, 50),
                        rho_hint=1.0, quadratic=True)
    return P, Cone.nonnegative_orthant(3)


def _ex5_6(p: int = 4):
    d = (np.arange(1, p + 1) - 3) / 2.0

    def values(x):
        t = x[0]
        return np.column_stack([2 * t * t + d + 4 * t, 0.5 * t * np.cos(t) - d * np.sin(t)])

    def jac(i, x):
        t = x[0]
        return np.array([[4 * t + 4],
                         [0.5 * np.cos(t) - 0.5 * t * np.sin(t) - d[i] * np.cos(t)]])

    def hess(i, x):
        t = x[0]
        return np.array([[[4.0]],
                         [[-np.sin(t) - 0.5 * t * np.cos(t) + d[i] * np.sin(t)]]])

    P = ProblemInstance("ex5_6", 1, 2, p, values, jac, hess, _box(([2.3350], [4.4010])))
    return P, Cone([[5.0, -1.0], [-9.0, 10.0]], [1.0, 1.0])


def most_interior_direction(rows) -> np.ndarray:
    """Direction ``e`` with ``||e||_inf = 1`` maximizing ``min_i a_i . e``."""
    rows = np.asarray(rows, dtype=float)
    r, m = rows.shape
    # variables (e, s): maximize s subject to rows @ e >= s, -1 <= e <= 1
    cost = np.zeros(m + 1)
    cost[-1] = -1.0
    res = linprog(cost, A_ub=np.hstack([-rows, np.ones((r, 1))]), b_ub=np.zeros(r),
                  bounds=[(-1, 1)] * m + [(None, None)], method="highs")
    if not res.success or res.x[-1] <= 0:
        raise ValueError("cone has empty interior")
    e = res.x[:m]
    return e / np.max(np.abs(e))


def _ex5_7(p: int = 100):
    theta = 2 * np.pi * np.arange(p) / p
    k1 = 0.25 * np.cos(theta) * np.sin(theta) ** 2
    k2 = 0.25 * np.cos(theta) ** 2 * np.sin(theta)

    def values(x):
        a, b = x
        E = np.exp(a + b)
        v1 = a * a + np.sin(a) + a * a * np.cos(b) + E + b * b
        v2 = 2 * a * a + b * b * np.cos(a) + np.cos(b) + E + 2 * b * b
        return np.column_stack([v1 + k1, v2 + k2])

    def jac(i, x):
        a, b = x
        E = np.exp(a + b)
        return np.array([
            [2 * a + np.cos(a) + 2 * a * np.cos(b) + E, -a * a * np.sin(b) + E + 2 * b],
            [4 * a - b * b * np.sin(a) + E, 2 * b * np.cos(a) - np.sin(b) + E + 4 * b],
        ])

    def hess(i, x):
        a, b = x
        E = np.exp(a + b)
        h1 = [[2 - np.sin(a) + 2 * np.cos(b) + E, -2 * a * np.sin(b) + E],
              [-2 * a * np.sin(b) + E, -a * a * np.cos(b) + E + 2]]
        h2 = [[4 - b * b * np.cos(a) + E, -2 * b * np.sin(a) + E],
              [-2 * b * np.sin(a) + E, 2 * np.cos(a) - np.cos(b) + E + 4]]
        return np.array([h1, h2])

    rows = [[2.0, -6.0], [-6.0, 7.0]]
    P = ProblemInstance("ex5_7", 2, 2, p, values, jac, hess, _square(-1, 1))
    return P, Cone(rows, most_interior_direction(rows))


EXAMPLES = {
    "ex5_1": _ex5_1,
    "ex5_2": _ex5_2,
    "ex5_3": _ex5_3,
    "ex5_4": _ex5_4,
    "ex5_5": _ex5_5,
    "ex5_6": _ex5_6,
    "ex5_7": _ex5_7,
}


def make_example(name: str, **overrides) -> tuple[ProblemInstance, Cone]:
    """Build one of the registered instances together with its ordering cone.

    ``overrides`` are forwarded to the builder: every instance accepts ``p``
    (family size); ``ex5_5`` also accepts the grid parameter ``s``.
    """
    try:
        builder = EXAMPLES[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(EXAMPLES)}") from None
    return builder(**overrides)
