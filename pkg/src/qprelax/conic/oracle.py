"""Exhaustive basic-solution enumeration for tiny LPs.

Independent of any LP solver: it only uses dense linear algebra, so it can
referee the HiGHS path.  Limits keep the combinatorics small (at most
C(14, 8) = 3003 subsets).
"""

from itertools import combinations

import numpy as np
from scipy.linalg import null_space

from ..errors import TooLarge
from ..extreal import ExtReal

MAX_VARS = 8
MAX_ROWS = 14


def _rank(A, tol):
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int((s > tol * max(s[0], 1.0)).sum())


def brute_force_lp(prog, tol=1e-9):
    """Return ``(value, point)`` of an LP by vertex and ray enumeration.

    ``value`` is in minimization form: ``inf`` if infeasible, ``-inf`` if
    unbounded (``point`` is then a feasible vertex or ``None``).
    """
    if not prog.is_lp:
        raise TooLarge("enumeration oracle handles LPs only")
    n = prog.num_vars
    A_eq, b_eq, A_ub, b_ub = prog.A_eq, prog.b_eq, prog.A_ub, prog.b_ub
    if n > MAX_VARS or A_eq.shape[0] + A_ub.shape[0] > MAX_ROWS:
        raise TooLarge(f"{n} variables, {A_eq.shape[0] + A_ub.shape[0]} "
                       f"constraints exceed {MAX_VARS}/{MAX_ROWS}")
    c = prog.c

    # Directions along which every constraint is constant.  Restrict to the
    # orthogonal complement so that the remaining polyhedron is pointed.
    lineality = null_space(np.vstack([A_eq, A_ub])) if n else np.zeros((0, 0))
    free_slope = lineality.shape[1] and np.abs(lineality.T @ c).max() > tol
    A_eq = np.vstack([A_eq, lineality.T])
    b_eq = np.concatenate([b_eq, np.zeros(lineality.shape[1])])

    def feasible(x):
        scale = 1.0 + np.abs(x).max(initial=0.0)
        if A_eq.shape[0] and np.abs(A_eq @ x - b_eq).max() > 1e-7 * scale:
            return False
        return not (A_ub.shape[0] and (A_ub @ x - b_ub).max() > 1e-7 * scale)

    best, best_x = np.inf, None
    rows = range(A_ub.shape[0])
    for k in range(0, n + 1):
        for active in combinations(rows, k):
            A = np.vstack([A_eq, A_ub[list(active)]])
            if _rank(A, tol) < n:
                continue
            b = np.concatenate([b_eq, b_ub[list(active)]])
            x = np.linalg.lstsq(A, b, rcond=None)[0]
            if not feasible(x):
                continue
            val = float(c @ x)
            if val < best:
                best, best_x = val, x
    if best_x is None:
        return np.inf, None
    if free_slope:
        return -np.inf, best_x
    # Extreme rays of {A_eq d = 0, A_ub d <= 0}: one-dimensional solution
    # sets of the equalities plus n-1 active homogeneous rows.
    for k in range(0, n):
        for active in combinations(rows, k):
            A = np.vstack([A_eq, A_ub[list(active)]])
            basis = null_space(A) if A.shape[0] else np.eye(n)
            if basis.shape[1] != 1:
                continue
            d = basis[:, 0]
            for ray in (d, -d):
                if A_ub.shape[0] and (A_ub @ ray).max() > tol:
                    continue
                if c @ ray < -tol:
                    return -np.inf, best_x
    return best + prog.c0, best_x


def brute_force_lp_value(prog):
    """Optimal value of ``prog`` in its native sense (extended real)."""
    value, _ = brute_force_lp(prog)
    return ExtReal.of(prog.native_value(value))
