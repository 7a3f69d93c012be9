"""Null-space bases, face matrices and cone membership tests.

With ``P`` an orthonormal basis of null(H^T) and ``x0`` a Slater point,

    U = [[1, 0], [x0, P]]        V = [[h^T], [-H]]

the face cone is ``K = {U T U^T : T PSD}`` and its dual is
``K* = {L : U^T L U PSD}``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import ConvergenceFailure, DegenerateFace, RankMismatch

PSD_TOL = 1e-8


@dataclass(frozen=True)
class FaceData:
    P: np.ndarray
    U: np.ndarray
    V: np.ndarray
    x0: np.ndarray

    @property
    def n(self):
        return self.P.shape[0]

    @property
    def p(self):
        return self.V.shape[1]


def min_eig(M):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.inf
    try:
        return float(np.linalg.eigvalsh((M + M.T) / 2.0)[0])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def null_space_basis(H, tol=1e-9):
    H = np.asarray(H, dtype=float)
    n, p = H.shape
    if p == 0:
        return np.eye(n)
    P = null_space(H.T, rcond=tol)
    if P.shape[1] != n - p:
        raise RankMismatch(f"null space of H^T has dimension {P.shape[1]}, "
                           f"expected {n - p}")
    return P


def build_face_data(inst, x0, tol=1e-9):
    n, p = inst.n, inst.p
    x0 = np.asarray(x0, dtype=float).reshape(n)
    P = null_space_basis(inst.H, tol)
    U = np.zeros((n + 1, n - p + 1))
    U[0, 0] = 1.0
    U[1:, 0] = x0
    U[1:, 1:] = P
    V = np.vstack([inst.h[None, :], -inst.H])
    if p:
        smin = np.linalg.svd(np.hstack([U, V]), compute_uv=False)[-1]
        if smin <= tol:
            raise DegenerateFace(f"[U V] is singular (sigma_min = {smin:.3g})")
    return FaceData(P, U, V, x0)


def h_pinv_factor(H):
    """``(H^T H)^{-1} H^T``; the 0 x n matrix when ``p = 0``."""
    H = np.asarray(H, dtype=float)
    n, p = H.shape
    if p == 0:
        return np.zeros((0, n))
    s = np.linalg.svd(H, compute_uv=False)
    if (s > 1e-9 * max(s[0], 1.0)).sum() != p:
        raise RankMismatch("H must have full column rank")
    return np.linalg.solve(H.T @ H, H.T)


def in_cone_K(M, face, tol=PSD_TOL):
    M = np.asarray(M, dtype=float)
    U, V = face.U, face.V
    if min_eig(U.T @ M @ U) < -tol:
        return False
    if V.shape[1] == 0:
        return True
    return bool(np.abs(U.T @ M @ V).max() <= tol
                and np.abs(V.T @ M @ V).max() <= tol)


def in_dual_cone_Kstar(L, face, tol=PSD_TOL):
    L = np.asarray(L, dtype=float)
    return min_eig(face.U.T @ L @ face.U) >= -tol
