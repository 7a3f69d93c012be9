"""KKT checks, optimality certificates and the lifting constructions.

Everything here is plain numpy evaluated on candidate points, independent of
the program builders, so that solver output is checked against formulas
rather than against the same matrices that produced it.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .builders import RPLUS_GROUPS, build_R, build_SRR, build_SRRD
from .conic import SolveOptions, Status, solve
from .errors import ResidualTooLarge, TooLarge
from .matrixops import h_pinv_factor, in_dual_cone_Kstar, min_eig

FEAS_TOL = 1e-7
CERT_TOL = 1e-6
VALUE_TOL = 1e-5


@dataclass
class KktPoint:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray


@dataclass
class RltDualCert:
    u: np.ndarray
    w: np.ndarray
    R: np.ndarray
    S: np.ndarray


@dataclass
class SdpDualCert:
    u: np.ndarray
    S: np.ndarray
    beta: float
    b: np.ndarray
    B: np.ndarray

    @property
    def L(self):
        n = self.b.size
        out = np.empty((n + 1, n + 1))
        out[0, 0] = self.beta
        out[0, 1:] = out[1:, 0] = self.b
        out[1:, 1:] = self.B
        return out


@dataclass
class LiftedPoint:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    M_xy: np.ndarray
    M_xz: np.ndarray
    M_yz: np.ndarray

    def moment_matrix(self):
        """``[[1, v^T], [v, big]]`` with ``v = (x, y, z)``."""
        v = np.concatenate([self.x, self.y, self.z])
        top = np.concatenate([[1.0], v])
        big = np.block([[self.X, self.M_xy, self.M_xz],
                        [self.M_xy.T, self.Y, self.M_yz],
                        [self.M_xz.T, self.M_yz.T, self.Z]])
        return np.block([[top[None, :]], [v[:, None], big]])

    def schur_block(self):
        """``big - v v^T``; PSD iff the moment matrix is."""
        v = np.concatenate([self.x, self.y, self.z])
        W = self.moment_matrix()
        return W[1:, 1:] - np.outer(v, v)

    @classmethod
    def rank_one(cls, pt):
        x, y, z = (np.asarray(a, dtype=float) for a in (pt.x, pt.y, pt.z))
        return cls(x, y, z, np.outer(x, x), np.outer(y, y), np.outer(z, z),
                   np.outer(x, y), np.outer(x, z), np.outer(y, z))


@dataclass
class ViolationReport:
    groups: dict
    tol: float
    values: dict = field(default_factory=dict)

    @property
    def overall(self):
        return max(self.groups.values(), default=0.0)

    @property
    def passed(self):
        return self.overall <= self.tol

    def to_text(self, title=""):
        lines = [title] if title else []
        width = max((len(k) for k in self.groups), default=0)
        for name, viol in self.groups.items():
            flag = "ok" if viol <= self.tol else "FAIL"
            lines.append(f"  {name:<{width}}  {viol:.3e}  {flag}")
        lines.append(f"  {'overall':<{width}}  {self.overall:.3e}  "
                     f"{'pass' if self.passed else 'FAIL'} (tol {self.tol:g})")
        return "\n".join(lines)


def _absmax(a):
    a = np.asarray(a, dtype=float)
    return float(np.abs(a).max()) if a.size else 0.0


def _negpart(a):
    a = np.asarray(a, dtype=float)
    return float(max(0.0, -a.min())) if a.size else 0.0


def products_matrix(inst, x, X):
    """``G^T X G - G^T x g^T - g x^T G + g g^T``."""
    G, g = inst.G, inst.g
    Gx = G.T @ x
    return G.T @ X @ G - np.outer(Gx, g) - np.outer(g, Gx) + np.outer(g, g)


# ----------------------------------------------------------------------- KKT
def check_kkt(inst, pt, tol=FEAS_TOL):
    Q, c, G, g, H, h = inst.Q, inst.c, inst.G, inst.g, inst.H, inst.h
    x, y, z = (np.asarray(a, dtype=float) for a in (pt.x, pt.y, pt.z))
    slack = g - G.T @ x
    groups = {
        "kkt1_stationarity": _absmax(Q @ x + c + G @ y + H @ z),
        "kkt2_primal_ineq": _negpart(slack),
        "kkt3_primal_eq": _absmax(H.T @ x - h),
        "kkt4_complementarity": abs(float(y @ slack)),
        "kkt5_dual_sign": _negpart(y),
        "kkt_objective_identity": abs(float(x @ Q @ x + c @ x + g @ y
                                            + h @ z)),
    }
    return ViolationReport(groups, tol)


def find_kkt_points_smallscale(inst, tol=1e-8):
    """One KKT point per consistent active set (least-norm representative)."""
    n, m, p = inst.n, inst.m, inst.p
    if m > 6 or p > 2 or n > 3:
        raise TooLarge(f"active-set enumeration limited to n<=3, m<=6, p<=2 "
                       f"(got n={n}, m={m}, p={p})")
    Q, c, G, g, H, h = inst.Q, inst.c, inst.G, inst.g, inst.H, inst.h
    found = []
    for k in range(m + 1):
        for active in itertools.combinations(range(m), k):
            act = list(active)
            Ga = G[:, act]
            # unknowns (x, y_A, z)
            top = np.hstack([Q, Ga, H])
            mid = np.hstack([Ga.T, np.zeros((k, k + p))])
            bot = np.hstack([H.T, np.zeros((p, k + p))])
            A = np.vstack([top, mid, bot])
            rhs = np.concatenate([-c, g[act], h])
            sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
            if _absmax(A @ sol - rhs) > tol * (1.0 + _absmax(rhs)):
                continue
            y = np.zeros(m)
            y[act] = sol[n:n + k]
            pt = KktPoint(sol[:n], y, sol[n + k:])
            if not check_kkt(inst, pt, tol * 100).passed:
                continue
            if any(np.allclose(pt.x, q.x, atol=1e-6)
                   and np.allclose(pt.y, q.y, atol=1e-6) for q in found):
                continue
            found.append(pt)
    return found


# ------------------------------------------------------- RLT optimality
def check_rlt_opt(inst, x, X, cert, tol=CERT_TOL):
    G, g, H, h = inst.G, inst.g, inst.H, inst.h
    u, w, R, S = cert.u, cert.w, cert.R, cert.S
    groups = {
        "opt_c": _absmax(-G @ u + H @ w - R.T @ h - G @ S @ g - inst.c),
        "opt_Q": _absmax(R.T @ H.T + H @ R + G @ S @ G.T - inst.Q),
        "opt_u": _negpart(u),
        "opt_S": _negpart(S),
        "opt_cs1": abs(float(u @ (g - G.T @ x))),
        "opt_cs2": abs(float(np.sum(S * products_matrix(inst, x, X)))),
    }
    return ViolationReport(groups, tol)


def rlt_dual_value(inst, cert):
    return float(-cert.u @ inst.g + cert.w @ inst.h
                 - 0.5 * inst.g @ cert.S @ inst.g)


def _sym_from_upper_duals(D):
    """Multipliers of an upper-triangle ``>= 0`` group as the scaled ``S``.

    A row for ``i < j`` multiplies ``N_ij`` once, which is half of the
    symmetric pairing; the factor 2 is the scaling of ``S`` built into the
    dual objective ``-g^T S g / 2``.
    """
    U = np.triu(D)
    return U + U.T


def rlt_cert_from_solution(prog, vmap, result):
    """``(x, X, RltDualCert)`` from an optimal solve of the RLT relaxation."""
    x = vmap.value(result.primal, "x")
    X = vmap.value(result.primal, "X")
    u = prog.group_dual(result, RPLUS_GROUPS[0])
    w = prog.group_dual(result, RPLUS_GROUPS[1])
    R = prog.group_dual(result, RPLUS_GROUPS[2])
    S = _sym_from_upper_duals(prog.group_dual(result, RPLUS_GROUPS[3]))
    return x, X, RltDualCert(u, w, R, S)


# ------------------------------------------------------- SDP optimality
def check_sdp_opt(inst, face, x, X, cert, tol=CERT_TOL):
    G, g = inst.G, inst.g
    u, S, beta, b, B = cert.u, cert.S, cert.beta, cert.b, cert.B
    kstar = (0.0 if in_dual_cone_Kstar(cert.L, face, 0.0)
             else -min_eig(face.U.T @ cert.L @ face.U))
    groups = {
        "opt_c": _absmax(-G @ u - G @ S @ g + b - inst.c),
        "opt_Q": _absmax(G @ S @ G.T + B - inst.Q),
        "opt_u": _negpart(u),
        "opt_S": _negpart(S),
        "opt_Kstar": kstar,
        "opt_cs1": abs(float(u @ (g - G.T @ x))),
        "opt_cs2": abs(float(np.sum(S * products_matrix(inst, x, X)))),
        "opt_cs3": abs(float(beta + 2 * b @ x + np.sum(B * X))),
    }
    return ViolationReport(groups, tol)


def sdp_dual_value(inst, cert):
    return float(-cert.u @ inst.g - 0.5 * inst.g @ cert.S @ inst.g
                 - 0.5 * cert.beta)


def sdp_cert_from_srr(inst, face, prog, vmap, result):
    """``(x, X, SdpDualCert, consistency)`` from one optimal face-reduced solve.

    The multiplier ``lam`` of ``T_00 = 1`` gives ``beta = -2 lam``; the
    inequality multipliers give ``u`` and ``S``, and ``b``, ``B`` follow; ``consistency`` measures how far the
    solver's PSD multiplier is from ``U^T (L / 2) U``.
    """
    G, g, c, Q = inst.G, inst.g, inst.c, inst.Q
    x = vmap.value(result.primal, "x")
    X = vmap.value(result.primal, "X")
    u = prog.group_dual(result, RPLUS_GROUPS[0])
    S = _sym_from_upper_duals(prog.group_dual(result, RPLUS_GROUPS[3]))
    lam = float(prog.group_dual(result, "T_corner"))
    # the constants of the inequality rows stay on the right-hand side, so
    # only the corner multiplier enters the corner of L
    beta = -2.0 * lam
    b = c + G @ u + G @ S @ g
    B = Q - G @ S @ G.T
    cert = SdpDualCert(u, S, float(beta), b, B)
    consistency = np.inf
    if result.dual_psd:
        consistency = _absmax(result.dual_psd[0]
                              - face.U.T @ (0.5 * cert.L) @ face.U)
    return x, X, cert, consistency


def sdp_cert_from_srrd(vmap, result):
    v = result.primal
    return SdpDualCert(vmap.value(v, "u"), vmap.value(v, "S"),
                       float(vmap.value(v, "beta")), vmap.value(v, "b"),
                       vmap.value(v, "B"))


def recover_zW(inst, face, x, X, cert, tol=CERT_TOL):
    F = h_pinv_factor(inst.H)
    B, b = cert.B, cert.b
    z = -F @ (B @ x + b)
    W = F @ (B @ X + np.outer(b, x))
    residuals = {
        "rel_betar": abs(float(-b @ x + inst.h @ z - cert.beta)),
        "rel_zr": _absmax(B @ x + b + inst.H @ z),
        "rel_Wr": _absmax(B @ X + np.outer(b, x) - inst.H @ W),
        "rel_csr": abs(float(np.sum(B * (X - np.outer(x, x))))),
    }
    bad = {k: v for k, v in residuals.items() if v > tol}
    if bad:
        raise ResidualTooLarge(
            "recovery relations violated: " + ", ".join(
                f"{k}={v:.2e}" for k, v in bad.items()), residuals)
    return {"z": z, "W": W, "residuals": residuals}


# ---------------------------------------------------------------- lifting
def _common_y(inst, x, X, S, u):
    G, g = inst.G, inst.g
    s = g - G.T @ x
    y = S @ s + u
    Y = (S @ products_matrix(inst, x, X) @ S + np.outer(S @ s, u)
         + np.outer(u, S @ s) + np.outer(u, u))
    M_xy = np.outer(x, g) @ S - X @ G @ S + np.outer(x, u)
    return y, Y, M_xy


def lift_rlt(inst, x, X, cert):
    x, X = np.asarray(x, dtype=float), np.asarray(X, dtype=float)
    G, g = inst.G, inst.g
    u, w, R, S = cert.u, cert.w, cert.R, cert.S
    y, Y, M_xy = _common_y(inst, x, X, S, u)
    z = -R @ x - w
    Z = (R @ X @ R.T + np.outer(R @ x, w) + np.outer(w, R @ x)
         + np.outer(w, w))
    M_xz = -X @ R.T - np.outer(x, w)
    Sg = S @ g
    SGt = S @ G.T
    M_yz = (-np.outer(Sg, R @ x) - np.outer(Sg, w) + SGt @ X @ R.T
            + np.outer(SGt @ x, w) - np.outer(u, R @ x) - np.outer(u, w))
    return LiftedPoint(x, y, z, X, Y, Z, M_xy, M_xz, M_yz)


def lift_sdprlt(inst, face, x, X, cert):
    x, X = np.asarray(x, dtype=float), np.asarray(X, dtype=float)
    G, g = inst.G, inst.g
    u, S, b, B = cert.u, cert.S, cert.b, cert.B
    F = h_pinv_factor(inst.H)
    y, Y, M_xy = _common_y(inst, x, X, S, u)
    Bx_b = B @ x + b
    z = -F @ Bx_b
    Z = F @ (B @ X @ B.T + np.outer(B @ x, b) + np.outer(b, B @ x)
             + np.outer(b, b)) @ F.T
    M_xz = -X @ B.T @ F.T - np.outer(x, b) @ F.T
    Sg = S @ g
    SGt = S @ G.T
    M_yz = (-np.outer(Sg, B @ x) @ F.T - np.outer(Sg, b) @ F.T
            + SGt @ X @ B.T @ F.T + np.outer(SGt @ x, b) @ F.T
            - np.outer(u, B @ x) @ F.T - np.outer(u, b) @ F.T)
    return LiftedPoint(x, y, z, X, Y, Z, M_xy, M_xz, M_yz)


def lifting_factor(inst, cert):
    """``A = [I; -S G^T; -F B]`` with ``big - v v^T = A (X - x x^T) A^T``."""
    F = h_pinv_factor(inst.H)
    return np.vstack([np.eye(inst.n), -cert.S @ inst.G.T, -F @ cert.B])


# ------------------------------------------------------ lifted feasibility
def rplus_residuals(inst, pt):
    """Signed values of the fifteen constraint groups at a lifted point."""
    Q, c, G, g, H, h = inst.Q, inst.c, inst.G, inst.g, inst.H, inst.h
    x, y, z, X, Y, Z = pt.x, pt.y, pt.z, pt.X, pt.Y, pt.Z
    Mxy, Mxz, Myz = pt.M_xy, pt.M_xz, pt.M_yz
    comp = np.outer(y, g) - Mxy.T @ G
    return dict(zip(RPLUS_GROUPS, (
        G.T @ x - g,
        H.T @ x - h,
        H.T @ X - np.outer(h, x),
        products_matrix(inst, x, X),
        Q @ x + c + G @ y + H @ z,
        H.T @ Mxy - np.outer(h, y),
        H.T @ Mxz - np.outer(h, z),
        Q @ X + np.outer(c, x) + G @ Mxy.T + H @ Mxz.T,
        Q @ Mxy + np.outer(c, y) + G @ Y + H @ Myz.T,
        Q @ Mxz + np.outer(c, z) + G @ Myz + H @ Z,
        np.diag(comp),
        comp,
        y,
        Y,
        np.array(float(np.sum(Q * X) + c @ x + g @ y + h @ z)),
    )))


# orientation of each group: "le" (<= 0), "eq" (= 0), "ge" (>= 0)
_RPLUS_KINDS = ("le", "eq", "eq", "ge", "eq", "eq", "eq", "eq", "eq", "eq",
                "eq", "ge", "ge", "ge", "eq")


def check_feasible_Rplus(inst, pt, tol=CERT_TOL):
    vals = rplus_residuals(inst, pt)
    groups = {}
    for (name, val), kind in zip(vals.items(), _RPLUS_KINDS):
        if kind == "eq":
            groups[name] = _absmax(val)
        elif kind == "le":
            groups[name] = _negpart(-np.asarray(val))
        else:
            groups[name] = _negpart(val)
    return ViolationReport(groups, tol, values=vals)


def check_feasible_SRplus(inst, pt, tol=CERT_TOL):
    report = check_feasible_Rplus(inst, pt, tol)
    block = pt.schur_block()
    report.groups["16_psd"] = max(0.0, -min_eig(block)) if block.size else 0.0
    return report


def lifted_objective(inst, pt):
    return float(0.5 * np.sum(inst.Q * pt.X) + inst.c @ pt.x)


# ---------------------------------------------------------------- pipelines
@dataclass
class Stage:
    name: str
    passed: bool
    detail: str = ""
    report: ViolationReport = None
    stop: bool = False     # certified non-optimal status ends the branch

    def to_text(self):
        tag = "stop" if self.stop else ("pass" if self.passed else "FAIL")
        head = f"[{tag}] {self.name}"
        if self.detail:
            head += f": {self.detail}"
        if self.report is not None:
            head += "\n" + self.report.to_text()
        return head


@dataclass
class PipelineReport:
    branch: str
    stages: list = field(default_factory=list)
    solver_failure: bool = False
    lifted: LiftedPoint = None
    value: float = None

    @property
    def passed(self):
        return bool(self.stages) and all(s.passed for s in self.stages)

    @property
    def stopped(self):
        return any(s.stop for s in self.stages)

    @property
    def failed_stage(self):
        return next((s.name for s in self.stages if not s.passed), None)

    def add(self, name, passed, detail="", report=None):
        self.stages.append(Stage(name, bool(passed), detail, report))
        return passed

    def to_text(self):
        lines = [f"== {self.branch} =="]
        lines += [s.to_text() for s in self.stages]
        return "\n".join(lines)


def _solve_stage(rep, name, prog, opts):
    res = solve(prog, opts)
    status = res.status
    if status is Status.OPTIMAL:
        rep.add(name, True, f"optimal value={res.value}")
        return res
    if status is Status.NUMERICAL_FAILURE:
        rep.solver_failure = True
        rep.add(name, False, f"numerical failure ({res.message})")
        return None
    rep.stages.append(Stage(name, True, f"{status.name.lower()} "
                            f"(certified); branch stops", stop=True))
    return None


def certify_rlt(inst, tol=CERT_TOL, opts=None):
    """Solve (R), extract its LP dual certificate, lift, check the lift."""
    rep = PipelineReport("RLT")
    opts = opts or SolveOptions()
    prog, vmap = build_R(inst)
    res = _solve_stage(rep, "solve R", prog, opts)
    if res is None:
        return rep
    x, X, cert = rlt_cert_from_solution(prog, vmap, res)
    rep.value = float(res.value)
    report = check_rlt_opt(inst, x, X, cert, tol)
    rep.add("check_rlt_opt", report.passed, "", report)
    gap = abs(rlt_dual_value(inst, cert) - rep.value)
    rep.add("dual value", gap <= VALUE_TOL, f"|dual - primal| = {gap:.2e}")
    pt = lift_rlt(inst, x, X, cert)
    rep.lifted = pt
    report = check_feasible_Rplus(inst, pt, tol)
    rep.add("lift_rlt feasibility", report.passed, "", report)
    diff = abs(lifted_objective(inst, pt) - rep.value)
    rep.add("lifted objective", diff <= VALUE_TOL, f"difference {diff:.2e}")
    return rep


def certify_sdp(inst, face, tol=CERT_TOL, opts=None, dual_source="srr"):
    """Solve (SRR), take the certificate from its duals or from (SRRD),
    verify optimality, recover ``(z, W)``, lift and check the lift."""
    rep = PipelineReport("SDP-RLT")
    opts = opts or SolveOptions()
    prog, vmap = build_SRR(inst, face)
    res = _solve_stage(rep, "solve SRR", prog, opts)
    if res is None:
        return rep
    rep.value = float(res.value)
    if dual_source == "srrd":
        dprog, dmap = build_SRRD(inst, face)
        dres = _solve_stage(rep, "solve SRRD", dprog, opts)
        if dres is None:
            return rep
        x = vmap.value(res.primal, "x")
        X = vmap.value(res.primal, "X")
        cert = sdp_cert_from_srrd(dmap, dres)
    else:
        x, X, cert, consistency = sdp_cert_from_srr(inst, face, prog, vmap,
                                                    res)
        rep.add("PSD multiplier consistency", consistency <= tol,
                f"|E - U^T (L/2) U| = {consistency:.2e}")
    report = check_sdp_opt(inst, face, x, X, cert, tol)
    rep.add("check_sdp_opt", report.passed, "", report)
    gap = abs(sdp_dual_value(inst, cert) - rep.value)
    rep.add("dual value", gap <= VALUE_TOL, f"|dual - primal| = {gap:.2e}")
    try:
        out = recover_zW(inst, face, x, X, cert, tol)
        rep.add("recover_zW", True, ", ".join(
            f"{k}={v:.2e}" for k, v in out["residuals"].items()))
    except ResidualTooLarge as exc:
        rep.add("recover_zW", False, str(exc))
    pt = lift_sdprlt(inst, face, x, X, cert)
    rep.lifted = pt
    report = check_feasible_SRplus(inst, pt, tol)
    rep.add("lift_sdprlt feasibility", report.passed, "", report)
    factor = lifting_factor(inst, cert)
    dev = _absmax(pt.schur_block() - factor @ (X - np.outer(x, x)) @ factor.T)
    rep.add("PSD block factorization", dev <= tol,
            f"|block - A (X - x x^T) A^T| = {dev:.2e}")
    diff = abs(lifted_objective(inst, pt) - rep.value)
    rep.add("lifted objective", diff <= VALUE_TOL, f"difference {diff:.2e}")
    return rep

