"""Newton and steepest-descent directions for the set problem.

For a fixed tuple ``a`` the Newton subproblem is

    min_u  max_j psi_e(J_j u + 0.5 [u' H_{j,l} u]_l),

and with a polyhedral cone ``psi_e`` is a max of linear functionals, so
the objective is a max of convex quadratics ``q_k(u) = c_k.u + 0.5 u'Q_k u``,
one per (class, cone row) pair.  It is solved through its concave dual
over the simplex of piece weights ``mu``:

    theta(mu) = min_u sum_k mu_k q_k(u) = -0.5 c(mu)' Q(mu)^{-1} c(mu),

whose maximizer gives ``u = -Q(mu)^{-1} c(mu)``.  The difference
``xi(u) - theta(mu)`` is a certificate of suboptimality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .cone import Cone, gerstewitz
from .minimal import DEFAULT_PARTITION_CAP, MinimalDecomposition, partition_tuples
from .problem import ProblemInstance, hessian_stack, jacobian

INNER_TOL = 1e-10
INNER_MAX_ITER = 500
TUPLE_TIE_TOL = 1e-12


class StrongConvexityError(RuntimeError):
    """The aggregated curvature of the subproblem is not positive definite."""

    def __init__(self, message: str, piece=None, tuple_=None):
        super().__init__(message)
        self.piece = piece
        self.tuple = tuple_


class InnerSolverError(RuntimeError):
    def __init__(self, message: str, best_gap: float, tuple_=None):
        super().__init__(message)
        self.best_gap = best_gap
        self.tuple = tuple_


@dataclass(frozen=True, eq=False)
class QuadraticPiece:
    linear: np.ndarray
    curvature: np.ndarray
    origin: tuple[int, int]  # (class position j, cone row i)


@dataclass(eq=False)
class DirectionOutcome:
    u: np.ndarray
    xi: float
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gap: float = 0.0
    inner_iters: int = 0

    @property
    def u_norm(self) -> float:
        return float(np.linalg.norm(self.u))


# ---------------------------------------------------------------------------
# pieces


def build_pieces(K: Cone, jacs, hessians=None) -> list[QuadraticPiece]:
    """Quadratic pieces for the tuple whose Jacobians/Hessians are given.

    With ``hessians=None`` every piece gets identity curvature, which is the
    steepest-descent subproblem.
    """
    S = K.scaled_rows
    pieces = []
    for j, J in enumerate(jacs):
        C = S @ J
        if hessians is None:
            Q = np.broadcast_to(np.eye(J.shape[1]), (S.shape[0],) + (J.shape[1],) * 2)
        else:
            Q = np.einsum("rl,lab->rab", S, hessians[j])
            Q = 0.5 * (Q + np.swapaxes(Q, 1, 2))
        for i in range(S.shape[0]):
            pieces.append(QuadraticPiece(C[i], np.array(Q[i]), (j, i)))
    return pieces


def _stack(pieces):
    C = np.array([pc.linear for pc in pieces])
    Q = np.array([pc.curvature for pc in pieces])
    return C, Q


def piece_values(C, Q, u) -> np.ndarray:
    return C @ u + 0.5 * np.einsum("a,kab,b->k", u, Q, u)


def _cholesky(Q: np.ndarray):
    try:
        return np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        pass
    n = Q.shape[0]
    jitter = 1e-12 * np.trace(Q) / n
    if jitter > 0:
        for _ in range(3):
            try:
                return np.linalg.cholesky(Q + jitter * np.eye(n))
            except np.linalg.LinAlgError:
                jitter *= 10
    return None


def _chol_solve(L, b):
    return np.linalg.solve(L.T, np.linalg.solve(L, b))


def _psd(Q: np.ndarray) -> bool:
    lam = np.linalg.eigvalsh(Q)
    return lam[0] >= -1e-12 * max(1.0, abs(lam[-1]))


class _Dual:
    """The dual function of one minimax-of-quadratics subproblem."""

    def __init__(self, C, Q):
        self.C = C
        self.Q = Q

    def at(self, mu):
        """Return ``(u, cholesky factor)`` at ``mu`` or ``(None, None)`` if not PD."""
        L = _cholesky(np.tensordot(mu, self.Q, axes=1))
        if L is None:
            return None, None
        return -_chol_solve(L, mu @ self.C), L

    def line_search(self, mu, d, gmax, u0, L0):
        """Maximize ``theta(mu + g d)`` over ``g in [0, gmax]``.

        ``theta`` is concave along the segment; its derivative is
        ``sum_k d_k q_k(u(g))`` and its second derivative
        ``-v' Q^{-1} v`` with ``v = dC + dQ u``.
        """
        dC = d @ self.C
        dQ = np.tensordot(d, self.Q, axes=1)

        def slope(u):
            return dC @ u + 0.5 * u @ dQ @ u

        def curvature(u, L):
            v = dC + dQ @ u
            return v @ _chol_solve(L, v)

        s0 = slope(u0)
        if s0 <= 0:
            return 0.0
        u_hi, _ = self.at(mu + gmax * d)
        if u_hi is not None and slope(u_hi) >= 0:
            return gmax
        lo, hi = 0.0, gmax
        g, u, L, s = 0.0, u0, L0, s0
        for _ in range(60):
            c = curvature(u, L)
            trial = g + s / c if c > 0 else hi
            if not lo < trial < hi:
                trial = 0.5 * (lo + hi)
            u_t, L_t = self.at(mu + trial * d)
            if u_t is None:
                hi = trial
                continue
            s_t = slope(u_t)
            if s_t > 0:
                lo = trial
            else:
                hi = trial
            g, u, L, s = trial, u_t, L_t, s_t
            if abs(s) <= 1e-15 * (1.0 + abs(dC @ u)) or hi - lo <= 1e-15 * gmax:
                break
        if g > 0 and 0.5 * (mu + g * d) @ self.C @ u >= 0.5 * mu @ self.C @ u0:
            return g
        return lo


def _start(dual: _Dual, P: int):
    """Best single-piece starting weights, or uniform weights if no piece is PD."""
    best = None
    for k in range(P):
        mu = np.zeros(P)
        mu[k] = 1.0
        u, L = dual.at(mu)
        if u is None:
            continue
        theta = 0.5 * dual.C[k] @ u
        if best is None or theta > best[0]:
            best = (theta, mu, u, L)
    if best is not None:
        return best[1], best[2], best[3]
    mu = np.full(P, 1.0 / P)
    u, L = dual.at(mu)
    return mu, u, L


def _face_newton(C, Q, support, u, iters: int = 30):
    """Newton's method on the optimality system restricted to ``support``.

    Unknowns are ``u``, the weights on the support and the common level
    ``t``; equations are ``sum mu_k grad q_k(u) = 0``, ``q_k(u) = t`` and
    ``sum mu_k = 1``.  Returns weights on the support (possibly negative)
    or ``None`` if the iteration does not settle.
    """
    Cs, Qs = C[support], Q[support]
    s, n = Cs.shape
    mu = np.full(s, 1.0 / s)
    t = float(np.max(piece_values(Cs, Qs, u)))
    for _ in range(iters):
        grads = Cs + Qs @ u  # (s, n)
        r = np.concatenate([mu @ grads, piece_values(Cs, Qs, u) - t, [mu.sum() - 1.0]])
        if np.max(np.abs(r)) <= 1e-15 * (1.0 + np.max(np.abs(grads))):
            return mu
        Jac = np.zeros((n + s + 1, n + s + 1))
        Jac[:n, :n] = np.tensordot(mu, Qs, axes=1)
        Jac[:n, n:n + s] = grads.T
        Jac[n:n + s, :n] = grads
        Jac[n:n + s, -1] = -1.0
        Jac[-1, n:n + s] = 1.0
        step = np.linalg.lstsq(Jac, -r, rcond=None)[0]
        u = u + step[:n]
        mu = mu + step[n:n + s]
        t = t + step[-1]
        if not np.all(np.isfinite(step)):
            return None
    return mu


def _polish(dual: _Dual, mu, u):
    """Try to jump to the optimum of the current face; drop pieces whose weight turns negative."""
    support = list(np.flatnonzero(mu > 0))
    while support:
        w = _face_newton(dual.C, dual.Q, support, u)
        if w is None:
            return None
        if np.all(w >= 0):
            full = np.zeros_like(mu)
            full[support] = w
            return full / full.sum()
        support.pop(int(np.argmin(w)))
    return None


def solve_pieces(pieces, tol: float = INNER_TOL, max_iter: int = INNER_MAX_ITER) -> DirectionOutcome:
    """Minimize ``max_k q_k(u)`` by away-step Frank-Wolfe on the dual.

    Raises :class:`StrongConvexityError` when no positive definite
    aggregate curvature can be formed, and :class:`InnerSolverError` when
    the duality gap does not fall below ``tol``.
    """
    C, Q = _stack(pieces)
    P, n = C.shape

    # a piece that vanishes identically with PSD curvature certifies u = 0
    scale = max(1.0, float(np.max(np.abs(C))))
    for k in range(P):
        if np.max(np.abs(C[k])) <= 1e-15 * scale and _psd(Q[k]):
            mu = np.zeros(P)
            mu[k] = 1.0
            return DirectionOutcome(np.zeros(n), 0.0, mu, 0.0, 0)

    dual = _Dual(C, Q)
    mu, u, L = _start(dual, P)
    if u is None:
        worst = int(np.argmin([np.linalg.eigvalsh(Qk)[0] for Qk in Q]))
        raise StrongConvexityError(
            f"strong convexity violated: no positive definite combination of curvatures "
            f"(piece {pieces[worst].origin} has eigenvalue {np.linalg.eigvalsh(Q[worst])[0]:.3g})",
            piece=pieces[worst])

    best = None
    for it in range(max_iter + 1):
        q = piece_values(C, Q, u)
        xi = float(np.max(q))
        theta = float(mu @ q)
        gap = max(xi - theta, 0.0)
        if best is None or gap < best.gap:
            best = DirectionOutcome(u.copy(), xi, mu.copy(), gap, it)
        if gap <= tol or it == max_iter:
            break
        k_fw = int(np.argmax(q))
        active = np.flatnonzero(mu > 0)
        k_aw = int(active[np.argmin(q[active])])
        if q[k_fw] - theta >= theta - q[k_aw] or mu[k_aw] >= 1.0:
            d = -mu.copy()
            d[k_fw] += 1.0
            gmax = 1.0
            away = False
        else:
            away = True
            d = mu.copy()
            d[k_aw] -= 1.0
            gmax = mu[k_aw] / (1.0 - mu[k_aw])
        g = dual.line_search(mu, d, gmax, u, L)
        if g <= 0.0:
            break
        mu = mu + g * d
        if away and g == gmax:
            mu[k_aw] = 0.0
        mu = np.maximum(mu, 0.0)
        mu /= mu.sum()
        u, L = dual.at(mu)
        polished = _polish(dual, mu, u)
        if polished is not None:
            u_p, L_p = dual.at(polished)
            if u_p is not None:
                q_p = piece_values(C, Q, u_p)
                if np.max(q_p) - polished @ q_p < gap:
                    mu, u, L = polished, u_p, L_p
    if best.gap > tol:
        raise InnerSolverError(
            f"dual solver stopped with gap {best.gap:.3g} > {tol:.3g}", best_gap=best.gap)
    if best.xi > 0.0:
        # roundoff near a stationary point; u = 0 is feasible with value 0
        return DirectionOutcome(np.zeros(n), 0.0, best.weights, best.gap, best.inner_iters)
    return best


# ---------------------------------------------------------------------------
# subproblems at a point


def _derivatives(P: ProblemInstance, x, a, with_hessian=True):
    jacs = [jacobian(P, i, x) for i in a]
    hess = [hessian_stack(P, i, x) for i in a] if with_hessian else None
    return jacs, hess


def xi(P: ProblemInstance, K: Cone, x, a, u) -> float:
    """``max_j psi_e`` of the second-order model of ``f^{a_j}`` along ``u``."""
    x = P.check_point(x)
    u = np.asarray(u, dtype=float)
    best = -np.inf
    for i in a:
        model = jacobian(P, i, x) @ u + 0.5 * np.einsum("a,lab,b->l", u, hessian_stack(P, i, x), u)
        best = max(best, float(gerstewitz(K, model)))
    return best


def direction_for_tuple(P: ProblemInstance, K: Cone, x, a, tol: float = INNER_TOL,
                        max_iter: int = INNER_MAX_ITER) -> DirectionOutcome:
    x = P.check_point(x)
    jacs, hess = _derivatives(P, x, a)
    try:
        return solve_pieces(build_pieces(K, jacs, hess), tol, max_iter)
    except (StrongConvexityError, InnerSolverError) as exc:
        exc.tuple = tuple(a)
        raise


def oracle_pieces(pieces, starts=None, scale: float = 1.0) -> DirectionOutcome:
    """Derivative-free minimization of ``max_k q_k`` by restarted Nelder-Mead."""
    C, Q = _stack(pieces)
    n = C.shape[1]

    def fun(u):
        return float(np.max(piece_values(C, Q, u)))

    if starts is None:
        starts = [np.zeros(n)]
        for k in range(n):
            for sign in (1.0, -1.0):
                s = np.zeros(n)
                s[k] = sign * scale
                starts.append(s)
    best_u, best_f = np.zeros(n), fun(np.zeros(n))
    evals = 0
    for s in starts:
        u, f = np.asarray(s, dtype=float), fun(s)
        for _ in range(50):
            res = minimize(fun, u, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000,
                                    "adaptive": n > 2})
            evals += res.nfev
            improved = res.fun < f - 1e-15 * (1 + abs(f))
            u, f = res.x, min(f, res.fun)
            if not improved:
                break
        if f < best_f:
            best_u, best_f = u, f
    return DirectionOutcome(best_u, best_f, np.zeros(0), float("nan"), evals)


def direction_oracle(P: ProblemInstance, K: Cone, x, a, max_dim: int = 6) -> DirectionOutcome:
    """Independent check of :func:`direction_for_tuple` by simplex search."""
    x = P.check_point(x)
    if P.n > max_dim:
        raise ValueError(f"oracle limited to n <= {max_dim}, got n={P.n}")
    jacs, hess = _derivatives(P, x, a)
    return oracle_pieces(build_pieces(K, jacs, hess))


def _best_over_tuples(P, K, x, dec, cap, with_hessian, tol, max_iter):
    x = P.check_point(x)
    cache = {}
    best_a, best = None, None
    for a in partition_tuples(dec, cap):
        for i in a:
            if i not in cache:
                cache[i] = (jacobian(P, i, x), hessian_stack(P, i, x) if with_hessian else None)
        jacs = [cache[i][0] for i in a]
        hess = [cache[i][1] for i in a] if with_hessian else None
        try:
            out = solve_pieces(build_pieces(K, jacs, hess), tol, max_iter)
        except (StrongConvexityError, InnerSolverError) as exc:
            exc.tuple = tuple(a)
            raise
        if best is None or out.xi < best.xi - TUPLE_TIE_TOL:
            best_a, best = tuple(a), out
    return best_a, best, min(best.xi, 0.0)


def newton_direction(P: ProblemInstance, K: Cone, x, dec: MinimalDecomposition,
                     cap: int = DEFAULT_PARTITION_CAP, tol: float = INNER_TOL,
                     max_iter: int = INNER_MAX_ITER):
    """Minimize the Newton subproblem over all partition tuples.

    Returns ``(tuple, outcome, phi)``; ``phi`` is the optimal value, never positive.
    """
    return _best_over_tuples(P, K, x, dec, cap, True, tol, max_iter)


def sd_direction(P: ProblemInstance, K: Cone, x, dec: MinimalDecomposition,
                 cap: int = DEFAULT_PARTITION_CAP, tol: float = INNER_TOL,
                 max_iter: int = INNER_MAX_ITER):
    """Steepest-descent analogue: ``max_j psi_e(J_j u) + 0.5 ||u||^2`` over tuples."""
    return _best_over_tuples(P, K, x, dec, cap, False, tol, max_iter)
