"""Shared generators for the test suite."""

import numpy as np

from setnewton.cone import Cone
from setnewton.problem import quadratic_family

EX56_ROWS = [[5.0, -1.0], [-9.0, 10.0]]


def sample_cones():
    return [Cone.nonnegative_orthant(2), Cone.nonnegative_orthant(3), Cone(EX56_ROWS, [1.0, 1.0])]


def random_subproblem(rng, n_max=3, m_max=3, w_max=3):
    """Jacobians and strongly convex Hessian stacks for one random tuple."""
    n, m, w = (int(rng.integers(1, k + 1)) for k in (n_max, m_max, w_max))
    K = Cone.nonnegative_orthant(m)
    jacs = [rng.normal(size=(m, n)) for _ in range(w)]
    hess = []
    for _ in range(w):
        stack = []
        for _ in range(m):
            B = rng.normal(size=(n, n))
            stack.append(B @ B.T + 0.5 * np.eye(n))
        hess.append(np.array(stack))
    return K, jacs, hess


def one_dim_square():
    """``f(x) = x^2`` with ``n = m = p = 1``."""
    return quadratic_family("square", [[0.0]], [[[0.0]]], [[[[2.0]]]], rho_hint=2.0)
