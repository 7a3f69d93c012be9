"""Solve contract for :class:`ConicProgram`.

Two backends sit behind :func:`solve`: HiGHS (through ``scipy.optimize``)
for programs without PSD blocks and Clarabel for the rest.  A status other
than ``OPTIMAL`` is only reported together with a certificate that has been
re-checked here, independently of the backend's own verdict:

* ``UNBOUNDED``: a primal feasible point plus a unit-norm ray ``r`` with
  ``A_eq r = 0``, ``A_ub r <= 0``, PSD blocks of ``r`` PSD and ``c @ r < 0``.
* ``INFEASIBLE``: for LPs, a positive optimal value of the elastic phase-one
  LP; for conic programs, a Farkas vector ``z`` in the dual cone with
  ``A^T z = 0`` and ``b^T z < 0``.

Dual conventions (minimization form): the Lagrangian is
``c@v + c0 - dual_eq@(A_eq v - b_eq) + dual_ub@(A_ub v - b_ub) - sum <E_k, V_k>``
with ``dual_ub >= 0`` and ``E_k`` PSD, so stationarity reads
``c = A_eq^T dual_eq - A_ub^T dual_ub + sum grad <E_k, V_k>``.
"""

import enum
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..errors import SolverFailure
from ..extreal import ExtReal

SQRT2 = np.sqrt(2.0)


class Status(enum.Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolveOptions:
    tol: float = 1e-9          # backend optimality / feasibility target
    max_iter: int = 500
    feas_tol: float = 1e-7     # acceptance bound on the scaled primal residual
    dual_tol: float = 1e-6     # acceptance bound on the scaled dual residual
    gap_tol: float = 1e-6      # acceptance bound on the relative duality gap
    ray_tol: float = 1e-9      # certificate bound after normalization
    # Clarabel's default static KKT regularization (1e-8) limits accuracy on
    # programs without a strictly feasible point; these values do not.
    static_reg: float = 1e-12
    static_reg_proportional: float = 1e-14
    polish: bool = True        # Newton refinement of optimal conic pairs


@dataclass
class SolveResult:
    status: Status
    objective: float                      # minimization form; +-inf if no optimum
    sense: str = "min"
    primal: np.ndarray = None
    dual_eq: np.ndarray = None
    dual_ub: np.ndarray = None
    dual_psd: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    certificate: dict = field(default_factory=dict)
    message: str = ""
    solve_time: float = 0.0

    @property
    def value(self):
        """Optimal value in the program's native sense (extended real)."""
        if self.status is Status.NUMERICAL_FAILURE:
            return None
        obj = -self.objective if self.sense == "max" else self.objective
        return ExtReal.of(obj)

    @property
    def ok(self):
        return self.status is Status.OPTIMAL


def solve(prog, opts=None):
    opts = opts or SolveOptions()
    start = time.perf_counter()
    if prog.num_vars == 0:
        result = _solve_empty(prog, opts)
    elif prog.is_lp:
        result = _solve_lp(prog, opts)
    else:
        result = _solve_conic(prog, opts)
    result.sense = prog.sense
    result.solve_time = time.perf_counter() - start
    return result


def _solve_empty(prog, opts):
    # no variables: the constraints are constants, checked directly
    bad_eq = np.abs(prog.b_eq).max(initial=0.0) > opts.feas_tol
    bad_ub = (-prog.b_ub).max(initial=0.0) > opts.feas_tol
    v = np.zeros(0)
    if bad_eq or bad_ub:
        return SolveResult(Status.INFEASIBLE, np.inf, primal=v,
                           certificate={"constant_rows": True},
                           message="constant constraint violated")
    return SolveResult(Status.OPTIMAL, float(prog.c0), primal=v,
                       dual_eq=np.zeros(prog.A_eq.shape[0]),
                       dual_ub=np.zeros(prog.A_ub.shape[0]),
                       residuals={"primal_feas": 0.0, "dual_feas": 0.0,
                                  "gap": 0.0},
                       message="no variables")


# ---------------------------------------------------------------- residuals
def _dual_residuals(prog, x, lam, mu, psd_duals):
    grad = prog.c - prog.A_eq.T @ lam + prog.A_ub.T @ mu
    dual_obj = prog.b_eq @ lam - prog.b_ub @ mu + prog.c0
    cone_viol = max(0.0, -float(mu.min())) if mu.size else 0.0
    for blk, E in zip(prog.psd_blocks, psd_duals):
        k = blk.size
        weight = 2.0 - np.eye(k)
        for i in range(k):
            for j in range(i, k):
                grad[blk.index[i, j]] -= weight[i, j] * E[i, j]
        cone_viol = max(cone_viol, -float(np.linalg.eigvalsh(E)[0]))
    return grad, dual_obj, cone_viol


def _residuals(prog, x, lam, mu, psd_duals):
    viol = prog.violations(x)
    primal_feas = max(viol.values(), default=0.0)
    grad, dual_obj, cone_viol = _dual_residuals(prog, x, lam, mu, psd_duals)
    dual_feas = max(float(np.abs(grad).max()) if grad.size else 0.0, cone_viol)
    pobj = prog.objective_value(x)
    gap = abs(pobj - dual_obj) / (1.0 + abs(pobj))
    scale = 1.0 + max(np.abs(prog.b_eq).max(initial=0.0),
                      np.abs(prog.b_ub).max(initial=0.0))
    cscale = 1.0 + np.abs(prog.c).max(initial=0.0)
    return {"primal_feas": primal_feas / scale, "dual_feas": dual_feas / cscale,
            "gap": gap, "dual_objective": dual_obj}


def _accept(residuals, opts):
    return (residuals["primal_feas"] <= opts.feas_tol
            and residuals["dual_feas"] <= opts.dual_tol
            and residuals["gap"] <= opts.gap_tol)


# ------------------------------------------------------------------ LP path
def _linprog(c, A_ub, b_ub, A_eq, b_eq, bounds, opts):
    kw = {}
    if A_ub.shape[0]:
        kw.update(A_ub=A_ub, b_ub=b_ub)
    if A_eq.shape[0]:
        kw.update(A_eq=A_eq, b_eq=b_eq)
    return linprog(c, bounds=bounds, method="highs",
                   options={"primal_feasibility_tolerance": opts.tol,
                            "dual_feasibility_tolerance": opts.tol,
                            "presolve": True}, **kw)


def _solve_lp(prog, opts):
    n = prog.num_vars
    res = _linprog(prog.c, prog.A_ub, prog.b_ub, prog.A_eq, prog.b_eq,
                   (None, None), opts)
    if res.status == 0:
        x = res.x
        lam = (res.eqlin.marginals if prog.A_eq.shape[0] else np.zeros(0))
        mu = (-res.ineqlin.marginals if prog.A_ub.shape[0] else np.zeros(0))
        residuals = _residuals(prog, x, lam, mu, [])
        status = Status.OPTIMAL if _accept(residuals, opts) else \
            Status.NUMERICAL_FAILURE
        return SolveResult(status, prog.objective_value(x)
                           if status is Status.OPTIMAL else np.nan,
                           primal=x, dual_eq=lam, dual_ub=mu,
                           residuals=residuals, message=res.message)
    # Non-optimal exit: decide feasibility first, then look for a ray.
    violation, point = lp_phase_one(prog, opts)
    if violation > opts.feas_tol:
        return SolveResult(Status.INFEASIBLE, np.inf,
                           certificate={"kind": "phase_one",
                                        "min_violation": violation},
                           message=res.message)
    ray = lp_improving_ray(prog, opts)
    if ray is not None:
        return SolveResult(Status.UNBOUNDED, -np.inf, primal=point,
                           certificate={"kind": "ray", "ray": ray,
                                        "slope": float(prog.c @ ray),
                                        "point": point},
                           message=res.message)
    return SolveResult(Status.NUMERICAL_FAILURE, np.nan,
                       message=f"uncertified backend status: {res.message}")


def lp_phase_one(prog, opts=None):
    """Minimum total constraint violation and a minimizer.

    Elastic form: ``A_eq v + p - q = b_eq``, ``A_ub v - t <= b_ub`` with
    ``p, q, t >= 0``; always feasible and bounded below by zero.
    """
    opts = opts or SolveOptions()
    n, me, mu = prog.num_vars, prog.A_eq.shape[0], prog.A_ub.shape[0]
    c = np.concatenate([np.zeros(n), np.ones(2 * me + mu)])
    A_eq = np.hstack([prog.A_eq, np.eye(me), -np.eye(me), np.zeros((me, mu))])
    A_ub = np.hstack([prog.A_ub, np.zeros((mu, 2 * me)), -np.eye(mu)])
    bounds = [(None, None)] * n + [(0, None)] * (2 * me + mu)
    res = _linprog(c, A_ub, prog.b_ub, A_eq, prog.b_eq, bounds, opts)
    if res.status != 0:
        raise SolverFailure(f"phase-one LP failed: {res.message}")
    return float(res.fun), res.x[:n]


def lp_improving_ray(prog, opts=None):
    """Unit-norm recession direction with negative slope, or ``None``."""
    opts = opts or SolveOptions()
    n = prog.num_vars
    res = _linprog(prog.c, prog.A_ub, np.zeros(prog.A_ub.shape[0]),
                   prog.A_eq, np.zeros(prog.A_eq.shape[0]),
                   [(-1.0, 1.0)] * n, opts)
    if res.status != 0 or res.fun >= -opts.ray_tol:
        return None
    ray = res.x / np.linalg.norm(res.x)
    if verify_ray(prog, ray, opts.ray_tol):
        return ray
    return None


def verify_ray(prog, ray, tol):
    """True iff ``ray`` (unit norm) is an improving recession direction."""
    ray = np.asarray(ray, dtype=float)
    ray = ray / np.linalg.norm(ray)
    if prog.A_eq.shape[0] and np.abs(prog.A_eq @ ray).max() > tol:
        return False
    if prog.A_ub.shape[0] and (prog.A_ub @ ray).max() > tol:
        return False
    for blk in prog.psd_blocks:
        if np.linalg.eigvalsh(ray[blk.index])[0] < -tol:
            return False
    return float(prog.c @ ray) <= -tol


# --------------------------------------------------------------- conic path
def _svec_rows(blk):
    """(variable index, weight) pairs of svec(V) in Clarabel's ordering."""
    out = []
    for j in range(blk.size):
        for i in range(j + 1):
            out.append((blk.index[i, j], 1.0 if i == j else SQRT2))
    return out


def _smat(vec, k):
    mat = np.zeros((k, k))
    pos = 0
    for j in range(k):
        for i in range(j + 1):
            val = vec[pos] if i == j else vec[pos] / SQRT2
            mat[i, j] = mat[j, i] = val
            pos += 1
    return mat


def _clarabel_data(prog):
    n = prog.num_vars
    psd_rows = []
    for blk in prog.psd_blocks:
        rows = np.zeros((blk.size * (blk.size + 1) // 2, n))
        for r, (idx, w) in enumerate(_svec_rows(blk)):
            rows[r, idx] = -w
        psd_rows.append(rows)
    A = np.vstack([prog.A_eq, prog.A_ub] + psd_rows)
    b = np.concatenate([prog.b_eq, prog.b_ub,
                        np.zeros(sum(r.shape[0] for r in psd_rows))])
    return A, b


def _trivial_rows(prog, A, b, tol=1e-12):
    """Rows of the linear part that read ``0 = 0`` or ``0 <= b, b >= 0``.

    Face-reduced programs produce such rows (up to rounding) for every
    constraint implied by the parametrization; handing them to the
    interior-point solver only hurts its conditioning.
    """
    me, mu = prog.A_eq.shape[0], prog.A_ub.shape[0]
    scale = tol * max(1.0, np.abs(A).max(initial=0.0))
    empty = np.abs(A[:me + mu]).max(axis=1, initial=0.0) <= scale
    drop = np.zeros(A.shape[0], dtype=bool)
    drop[:me] = empty[:me] & (np.abs(b[:me]) <= scale)
    drop[me:me + mu] = empty[me:] & (b[me:me + mu] >= -scale)
    return drop


def _cones(num_eq, num_ub, prog):
    import clarabel
    cones = []
    if num_eq:
        cones.append(clarabel.ZeroConeT(num_eq))
    if num_ub:
        cones.append(clarabel.NonnegativeConeT(num_ub))
    cones.extend(clarabel.PSDTriangleConeT(blk.size)
                 for blk in prog.psd_blocks)
    return cones


# Settings tried in order until one yields an accepted (or certified) result.
CLARABEL_ATTEMPTS = (
    {},
    {"equilibrate_enable": False},
    {"static_regularization_constant": 1e-8,
     "static_regularization_proportional": np.finfo(float).eps ** 2},
)


def _run_clarabel(prog, c, opts, overrides=None):
    """Run Clarabel; returns (solution, x, z, A, b) with ``z`` re-expanded
    to the full row set (zero on rows dropped as trivial)."""
    import clarabel
    A, b = _clarabel_data(prog)
    me, mu = prog.A_eq.shape[0], prog.A_ub.shape[0]
    drop = _trivial_rows(prog, A, b)
    A_run = A[~drop].copy()
    A_run[np.abs(A_run) <= 1e-14 * max(1.0, np.abs(A).max(initial=0.0))] = 0.0
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = opts.max_iter
    settings.tol_gap_abs = opts.tol
    settings.tol_gap_rel = opts.tol
    settings.tol_feas = opts.tol
    settings.tol_ktratio = 1e-7
    settings.tol_infeas_abs = opts.tol
    settings.tol_infeas_rel = opts.tol
    settings.static_regularization_constant = opts.static_reg
    settings.static_regularization_proportional = opts.static_reg_proportional
    for key, val in (overrides or {}).items():
        setattr(settings, key, val)
    n = prog.num_vars
    cones = _cones(int((~drop[:me]).sum()), int((~drop[me:me + mu]).sum()),
                   prog)
    solver = clarabel.DefaultSolver(sp.csc_matrix((n, n)),
                                    np.asarray(c, float), sp.csc_matrix(A_run),
                                    b[~drop], cones, settings)
    sol = solver.solve()
    z = np.zeros(A.shape[0])
    z[~drop] = np.asarray(sol.z)
    return sol, np.asarray(sol.x), z, A, b


def _split_dual(prog, z):
    me, mu = prog.A_eq.shape[0], prog.A_ub.shape[0]
    lam = -np.asarray(z[:me])
    mult = np.asarray(z[me:me + mu])
    pos = me + mu
    mats = []
    for blk in prog.psd_blocks:
        size = blk.size * (blk.size + 1) // 2
        mats.append(_smat(z[pos:pos + size], blk.size))
        pos += size
    return lam, mult, mats


def _solve_conic(prog, opts):
    failures = []
    for overrides in CLARABEL_ATTEMPTS:
        result = _conic_attempt(prog, opts, overrides)
        if result.status is Status.OPTIMAL and opts.polish:
            _apply_polish(prog, result)
        if result.status is not Status.NUMERICAL_FAILURE:
            return result
        failures.append(result)
    result = failures[0]
    result.message = "; ".join(f.message for f in failures)
    return result


def _apply_polish(prog, result):
    """Replace an optimal pair by its polished version when that is better."""
    from .polish import polish
    try:
        v, lam, mu, mats, res = polish(prog, result)
    except np.linalg.LinAlgError:
        return
    old = result.residuals
    keys = ("primal_feas", "dual_feas", "gap")
    if max(res[k] for k in keys) >= max(old[k] for k in keys):
        return
    result.primal, result.dual_eq, result.dual_ub, result.dual_psd = (
        v, lam, mu, mats)
    result.objective = prog.objective_value(v)
    result.residuals = res
    result.message += " (polished)"


def _conic_attempt(prog, opts, overrides):
    sol, x, z, A, b = _run_clarabel(prog, prog.c, opts, overrides)
    status = str(sol.status)
    if status in ("Solved", "AlmostSolved", "MaxIterations",
                  "InsufficientProgress"):
        lam, mu, mats = _split_dual(prog, z)
        residuals = _residuals(prog, x, lam, mu, mats)
        if _accept(residuals, opts):
            return SolveResult(Status.OPTIMAL, prog.objective_value(x),
                               primal=x, dual_eq=lam, dual_ub=mu,
                               dual_psd=mats, residuals=residuals,
                               message=status)
        return SolveResult(Status.NUMERICAL_FAILURE, np.nan, primal=x,
                           dual_eq=lam, dual_ub=mu, dual_psd=mats,
                           residuals=residuals,
                           message=f"{status}: residuals above tolerance")
    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        measure = farkas_measure(prog, A, b, z)
        if (measure["stationarity"] <= opts.ray_tol
                and measure["cone"] <= opts.ray_tol
                and measure["slope"] <= -opts.ray_tol):
            return SolveResult(Status.INFEASIBLE, np.inf,
                               certificate={"kind": "farkas",
                                            "z": z / np.linalg.norm(z),
                                            **measure},
                               message=status)
        return SolveResult(Status.NUMERICAL_FAILURE, np.nan,
                           certificate={"kind": "farkas_rejected", **measure},
                           message=f"{status}: certificate rejected")
    if status in ("DualInfeasible", "AlmostDualInfeasible"):
        ray = x / np.linalg.norm(x)
        if verify_ray(prog, ray, opts.ray_tol):
            point = conic_feasible_point(prog, opts)
            if point is not None:
                return SolveResult(Status.UNBOUNDED, -np.inf, primal=point,
                                   certificate={"kind": "ray", "ray": ray,
                                                "slope": float(prog.c @ ray),
                                                "point": point},
                                   message=status)
        return SolveResult(Status.NUMERICAL_FAILURE, np.nan,
                           certificate={"kind": "ray_rejected", "ray": ray},
                           message=f"{status}: certificate rejected")
    return SolveResult(Status.NUMERICAL_FAILURE, np.nan, message=status)


def farkas_measure(prog, A, b, z):
    """Normalized checks of ``z in K*, A^T z = 0, b^T z < 0``."""
    z = z / np.linalg.norm(z)
    me, mu = prog.A_eq.shape[0], prog.A_ub.shape[0]
    stationarity = float(np.abs(A.T @ z).max()) if A.shape[1] else 0.0
    cone = max(0.0, -float(z[me:me + mu].min())) if mu else 0.0
    pos = me + mu
    for blk in prog.psd_blocks:
        size = blk.size * (blk.size + 1) // 2
        cone = max(cone, -float(np.linalg.eigvalsh(
            _smat(z[pos:pos + size], blk.size))[0]))
        pos += size
    return {"stationarity": stationarity, "cone": cone,
            "slope": float(b @ z)}


def conic_feasible_point(prog, opts):
    """A primal feasible point (zero objective solve), or ``None``."""
    sol, x, _, _, _ = _run_clarabel(prog, np.zeros(prog.num_vars), opts)
    if str(sol.status) not in ("Solved", "AlmostSolved"):
        return None
    viol = max(prog.violations(x).values(), default=0.0)
    return x if viol <= opts.feas_tol else None
