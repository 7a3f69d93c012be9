"""Builders for the RLT / SDP-RLT relaxations, their duals and KKT lifts.

Every builder returns ``(ConicProgram, VariableMap)``.  Matrix inequalities
on symmetric expressions are imposed on the upper triangle; general square
or rectangular matrix relations are imposed on every entry.
"""

import enum

import numpy as np
from scipy.linalg import null_space

from .conic import ProgramBuilder, bmat, inner, outer

# constraint-group names of the KKT-augmented RLT problem, in order
RPLUS_GROUPS = (
    "1_primal_ineq",
    "2_primal_eq",
    "3_eq_products",
    "4_ineq_products",
    "5_stationarity",
    "6_eq_y_products",
    "7_eq_z_products",
    "8_stationarity_x",
    "9_stationarity_y",
    "10_stationarity_z",
    "11_complementarity_diag",
    "12_complementarity_products",
    "13_dual_sign",
    "14_dual_products",
    "15_objective_identity",
)


class ProblemKind(enum.Enum):
    R = "r"
    RD = "rd"
    Rplus = "rplus"
    SR = "sr"
    SRR = "srr"
    SRRD = "srrd"
    SRplus = "srplus"

    @property
    def needs_face(self):
        return self in (ProblemKind.SRR, ProblemKind.SRRD)


def linearized_products(inst, x, X):
    """Linearization of ``(g - G^T x)(g - G^T x)^T``."""
    G, g = inst.G, inst.g
    Gx = G.T @ x
    return G.T @ X @ G - outer(Gx, g) - outer(g, Gx) + np.outer(g, g)


def _rlt_core(bld, inst, x, X):
    """Constraint groups 1-4 shared by every primal RLT-type problem."""
    bld.add_le(RPLUS_GROUPS[0], inst.G.T @ x, inst.g)
    bld.add_eq(RPLUS_GROUPS[1], inst.H.T @ x, inst.h)
    bld.add_eq(RPLUS_GROUPS[2], inst.H.T @ X - outer(inst.h, x))
    bld.add_ge(RPLUS_GROUPS[3], linearized_products(inst, x, X),
               entries="upper")


def _objective(inst, x, X):
    return 0.5 * inner(inst.Q, X) + inst.c @ x


def build_R(inst):
    bld = ProgramBuilder("R")
    x = bld.variable("x", inst.n)
    X = bld.variable("X", (inst.n, inst.n), symmetric=True)
    _rlt_core(bld, inst, x, X)
    bld.minimize(_objective(inst, x, X))
    return bld.build()


def build_RD(inst):
    n, m, p = inst.n, inst.m, inst.p
    G, g, H, h = inst.G, inst.g, inst.H, inst.h
    bld = ProgramBuilder("RD")
    u = bld.variable("u", m)
    w = bld.variable("w", p)
    R = bld.variable("R", (p, n))
    S = bld.variable("S", (m, m), symmetric=True)
    bld.add_eq("c_equation", -(G @ u) + H @ w - R.T @ h - G @ S @ g, inst.c)
    bld.add_eq("Q_equation", R.T @ H.T + H @ R + G @ S @ G.T, inst.Q,
               entries="upper")
    bld.add_ge("u_nonneg", u)
    bld.add_ge("S_nonneg", S, entries="upper")
    bld.maximize(-(g @ u) + h @ w - 0.5 * (g @ S @ g))
    return bld.build()


def _kkt_variables(bld, inst):
    n, m, p = inst.n, inst.m, inst.p
    return dict(
        x=bld.variable("x", n), y=bld.variable("y", m), z=bld.variable("z", p),
        X=bld.variable("X", (n, n), symmetric=True),
        Y=bld.variable("Y", (m, m), symmetric=True),
        Z=bld.variable("Z", (p, p), symmetric=True),
        M_xy=bld.variable("M_xy", (n, m)), M_xz=bld.variable("M_xz", (n, p)),
        M_yz=bld.variable("M_yz", (m, p)))


def _kkt_groups(bld, inst, v):
    Q, c, G, g, H, h = inst.Q, inst.c, inst.G, inst.g, inst.H, inst.h
    x, y, z, X, Y, Z = v["x"], v["y"], v["z"], v["X"], v["Y"], v["Z"]
    Mxy, Mxz, Myz = v["M_xy"], v["M_xz"], v["M_yz"]
    names = RPLUS_GROUPS
    _rlt_core(bld, inst, x, X)
    bld.add_eq(names[4], Q @ x + c + G @ y + H @ z)
    bld.add_eq(names[5], H.T @ Mxy - outer(h, y))
    bld.add_eq(names[6], H.T @ Mxz - outer(h, z))
    bld.add_eq(names[7], Q @ X + outer(c, x) + G @ Mxy.T + H @ Mxz.T)
    bld.add_eq(names[8], Q @ Mxy + outer(c, y) + G @ Y + H @ Myz.T)
    bld.add_eq(names[9], Q @ Mxz + outer(c, z) + G @ Myz + H @ Z)
    comp = outer(y, g) - Mxy.T @ G
    bld.add_eq(names[10], comp, entries="diag")
    bld.add_ge(names[11], comp)
    bld.add_ge(names[12], y)
    bld.add_ge(names[13], Y, entries="upper")
    bld.add_eq(names[14], inner(Q, X) + c @ x + g @ y + h @ z)
    bld.minimize(_objective(inst, x, X))


def build_Rplus(inst):
    bld = ProgramBuilder("Rplus")
    v = _kkt_variables(bld, inst)
    _kkt_groups(bld, inst, v)
    return bld.build()


def build_SR(inst):
    n = inst.n
    bld = ProgramBuilder("SR")
    x = bld.variable("x", n)
    X = bld.variable("X", (n, n), symmetric=True)
    _rlt_core(bld, inst, x, X)
    M = bld.psd_block("M", n + 1)
    bld.add_eq("M_corner", M[0, 0], 1.0)
    bld.add_eq("M_column", M[1:, 0] - x)
    bld.add_eq("M_lower", M[1:, 1:] - X, entries="upper")
    bld.minimize(_objective(inst, x, X))
    return bld.build()


def build_SRR(inst, face):
    """Face-restricted SDP-RLT: ``[[1, x^T], [x, X]] = U T U^T``, ``T`` PSD.

    ``x`` and ``X`` are eliminated as affine functions of ``T`` and exposed
    through the variable map as derived expressions.
    """
    n, U = inst.n, face.U
    bld = ProgramBuilder("SRR")
    T = bld.psd_block("T", U.shape[1])
    M = U @ T @ U.T
    x, X = M[1:, 0], M[1:, 1:]
    bld.define("x", x)
    bld.define("X", X)
    bld.define("M", M)
    bld.add_eq("T_corner", T[0, 0], 1.0)
    bld.add_le(RPLUS_GROUPS[0], inst.G.T @ x, inst.g)
    bld.add_ge(RPLUS_GROUPS[3], linearized_products(inst, x, X),
               entries="upper")
    bld.minimize(_objective(inst, x, X))
    return bld.build()


def build_SRRD(inst, face):
    n, m = inst.n, inst.m
    G, g, U = inst.G, inst.g, face.U
    bld = ProgramBuilder("SRRD")
    u = bld.variable("u", m)
    S = bld.variable("S", (m, m), symmetric=True)
    beta = bld.variable("beta")
    b = bld.variable("b", n)
    B = bld.variable("B", (n, n), symmetric=True)
    E = bld.psd_block("E", U.shape[1])
    L = bmat([[beta, b.reshape(1, n)], [b.reshape(n, 1), B]])
    bld.define("L", L)
    bld.add_eq("c_equation", -(G @ u) - G @ S @ g + b, inst.c)
    bld.add_eq("Q_equation", G @ S @ G.T + B, inst.Q, entries="upper")
    bld.add_eq("E_link", E - U.T @ L @ U, entries="upper")
    bld.add_ge("u_nonneg", u)
    bld.add_ge("S_nonneg", S, entries="upper")
    bld.maximize(-(g @ u) - 0.5 * (g @ S @ g) - 0.5 * beta)
    return bld.build()


def kkt_moment_matrix(v, n, m, p):
    """``[[1, x^T, y^T, z^T], [x, X, M_xy, M_xz], ...]`` as one expression."""
    x, y, z = v["x"], v["y"], v["z"]
    Mxy, Mxz, Myz = v["M_xy"], v["M_xz"], v["M_yz"]
    return bmat([
        [1.0, x.reshape(1, n), y.reshape(1, m), z.reshape(1, p)],
        [x.reshape(n, 1), v["X"], Mxy, Mxz],
        [y.reshape(m, 1), Mxy.T, v["Y"], Myz],
        [z.reshape(p, 1), Mxz.T, Myz.T, v["Z"]],
    ])


def kkt_face_rows(inst):
    """Rows ``r`` with ``W r^T = 0`` for every feasible moment matrix ``W``.

    Stationarity groups 5 and 8-10 say ``[c Q G H]`` annihilates ``W``; the
    equality groups 2, 3, 6 and 7 say the same of ``[-h H^T 0 0]``.
    """
    n, m, p = inst.n, inst.m, inst.p
    stat = np.hstack([inst.c[:, None], inst.Q, inst.G, inst.H])
    eq = np.hstack([-inst.h[:, None], inst.H.T, np.zeros((p, m + p))])
    return np.vstack([stat, eq])


def build_SRplus(inst, reduce_face=True):
    """KKT-augmented SDP-RLT problem.

    With ``reduce_face`` the moment matrix is parametrized as
    ``W = U_W T U_W^T`` (``T`` PSD, ``U_W`` an orthonormal basis of the null
    space of :func:`kkt_face_rows`), which restores strict feasibility of
    the PSD block without changing the feasible set.  Otherwise ``W`` is a
    free PSD block tied to the lifted variables by equalities.
    """
    n, m, p = inst.n, inst.m, inst.p
    bld = ProgramBuilder("SRplus")
    if not reduce_face:
        v = _kkt_variables(bld, inst)
        _kkt_groups(bld, inst, v)
        W = bld.psd_block("W", 1 + n + m + p)
        bld.add_eq("W_link", W - kkt_moment_matrix(v, n, m, p),
                   entries="upper")
        return bld.build()
    Uw = null_space(kkt_face_rows(inst))
    T = bld.psd_block("T", max(Uw.shape[1], 1))
    if Uw.shape[1] == 0:
        Uw = np.zeros((1 + n + m + p, 1))
    W = Uw @ T @ Uw.T
    ix, iy, iz = (slice(1, 1 + n), slice(1 + n, 1 + n + m),
                  slice(1 + n + m, 1 + n + m + p))
    v = {}
    for name, rows, cols in (("x", ix, 0), ("y", iy, 0), ("z", iz, 0),
                             ("X", ix, ix), ("Y", iy, iy), ("Z", iz, iz),
                             ("M_xy", ix, iy), ("M_xz", ix, iz),
                             ("M_yz", iy, iz)):
        v[name] = W[rows, cols]
        bld.define(name, v[name])
    bld.define("W", W)
    bld.add_eq("W_corner", W[0, 0], 1.0)
    _kkt_groups(bld, inst, v)
    return bld.build()


_BUILDERS = {
    ProblemKind.R: build_R, ProblemKind.RD: build_RD,
    ProblemKind.Rplus: build_Rplus, ProblemKind.SR: build_SR,
    ProblemKind.SRplus: build_SRplus,
}


def build(kind, inst, face=None):
    kind = ProblemKind(kind)
    if kind is ProblemKind.SRR:
        return build_SRR(inst, face)
    if kind is ProblemKind.SRRD:
        return build_SRRD(inst, face)
    return _BUILDERS[kind](inst)
