"""Newton polishing of an approximate conic primal-dual pair.

Interior-point iterates satisfy complementarity only up to the stopping
tolerance ``eps``, so products ``V E`` of primal and dual PSD blocks are of
order ``sqrt(eps)``.  Quantities derived from such products (lifted points,
recovered multipliers) inherit that error.

Here the active inequality rows are read off the iterate (slack smaller than
multiplier) and the optimality conditions

    A_eq v = b_eq,   A_act v = b_act,
    c - A_eq^T lam + A_act^T mu - sum_k D_k(E_k) = 0,
    (V_k E_k + E_k V_k) / 2 = 0                      for every PSD block

are solved by least-squares Newton steps from the iterate.  Either side may
be non-unique, and then its least-norm Newton update can leave the cone.  So
two candidates are formed: the Newton primal with the solver's dual projected
(least-norm correction) onto the stationarity equations, restricted to the
null space of the polished ``V_k``; and symmetrically the Newton dual with
the solver's primal projected onto the primal equations, restricted to the
null space of the polished ``E_k``.  The one with smaller residuals is
returned; callers compare it with the original before accepting.
"""

import numpy as np

from .solve import _residuals


def _units(k):
    """Upper-triangle index pairs with their symmetric unit matrices."""
    out = []
    for a in range(k):
        for b in range(a, k):
            unit = np.zeros((k, k))
            unit[a, b] = unit[b, a] = 1.0
            out.append(((a, b), unit))
    return out


def _upper(mat):
    return mat[np.triu_indices(mat.shape[0])]


class _Layout:
    def __init__(self, prog, active):
        self.prog = prog
        self.active = active
        self.n = prog.num_vars
        self.me = prog.A_eq.shape[0]
        self.na = int(active.sum())
        self.sizes = [blk.size * (blk.size + 1) // 2 for blk in prog.psd_blocks]
        self.total = self.n + self.me + self.na + sum(self.sizes)
        self.units = [_units(blk.size) for blk in prog.psd_blocks]
        # unit matrix of each variable inside each block
        self.var_units = []
        for blk in prog.psd_blocks:
            per = {}
            for (a, b), _ in _units(blk.size):
                q = int(blk.index[a, b])
                per.setdefault(q, np.zeros((blk.size, blk.size)))
                per[q][a, b] = per[q][b, a] = 1.0
            self.var_units.append(per)

    def split(self, z):
        n, me, na = self.n, self.me, self.na
        v, lam, mu = z[:n], z[n:n + me], z[n + me:n + me + na]
        mats, pos = [], n + me + na
        for blk, size in zip(self.prog.psd_blocks, self.sizes):
            E = np.zeros((blk.size, blk.size))
            E[np.triu_indices(blk.size)] = z[pos:pos + size]
            mats.append(E + np.triu(E, 1).T)
            pos += size
        return v, lam, mu, mats

    def join(self, v, lam, mu, mats):
        return np.concatenate([v, lam, mu] + [_upper(E) for E in mats])

    def residual(self, z):
        prog, act = self.prog, self.active
        v, lam, mu, mats = self.split(z)
        grad = prog.c - prog.A_eq.T @ lam + prog.A_ub[act].T @ mu
        comp = []
        for blk, E, units in zip(prog.psd_blocks, mats, self.units):
            for (a, b), unit in units:
                grad[blk.index[a, b]] -= np.sum(unit * E)
            V = prog.block_matrix(v, blk)
            comp.append(_upper(V @ E + E @ V) / 2.0)
        return np.concatenate([prog.A_eq @ v - prog.b_eq,
                               prog.A_ub[act] @ v - prog.b_ub[act], grad]
                              + comp)

    def jacobian(self, z):
        prog, act = self.prog, self.active
        n, me, na = self.n, self.me, self.na
        v, _, _, mats = self.split(z)
        nrows = me + na + n + sum(self.sizes)
        J = np.zeros((nrows, self.total))
        J[:me, :n] = prog.A_eq
        J[me:me + na, :n] = prog.A_ub[act]
        r0 = me + na
        J[r0:r0 + n, n:n + me] = -prog.A_eq.T
        J[r0:r0 + n, n + me:n + me + na] = prog.A_ub[act].T
        col = n + me + na
        row = r0 + n
        for blk, E, units, var_units, size in zip(
                prog.psd_blocks, mats, self.units, self.var_units, self.sizes):
            V = prog.block_matrix(v, blk)
            for j, ((a, b), unit) in enumerate(units):
                J[r0 + int(blk.index[a, b]), col + j] -= 1.0 if a == b else 2.0
                J[row:row + size, col + j] = _upper(V @ unit + unit @ V) / 2.0
            for q, unit in var_units.items():
                J[row:row + size, q] += _upper(unit @ E + E @ unit) / 2.0
            col += size
            row += size
        return J


def polish(prog, result, max_steps=12):
    """Return ``(primal, dual_eq, dual_ub, dual_psd, residuals)``."""
    v0 = np.asarray(result.primal, dtype=float)
    mu0 = np.asarray(result.dual_ub, dtype=float)
    active = (prog.b_ub - prog.A_ub @ v0) < mu0
    # dimension of the dual range: non-positive eigenvalues of V - E
    dual_ranks = [int((np.linalg.eigvalsh(prog.block_matrix(v0, blk) - E)
                       <= 0).sum())
                  for blk, E in zip(prog.psd_blocks, result.dual_psd)]
    lay = _Layout(prog, active)
    z = lay.join(v0, result.dual_eq, mu0[active], result.dual_psd)
    F = lay.residual(z)
    best = float(np.abs(F).max(initial=0.0))
    for _ in range(max_steps):
        step = np.linalg.lstsq(lay.jacobian(z), -F, rcond=None)[0]
        trial = z + step
        F_trial = lay.residual(trial)
        err = float(np.abs(F_trial).max(initial=0.0))
        if not err < best:
            break
        z, F, best = trial, F_trial, err
        if best <= 1e-15 * (1.0 + np.abs(z).max()):
            break
    v_new, lam_new, mu_act, mats_new = lay.split(z)
    mu_new = np.zeros_like(mu0)
    mu_new[active] = mu_act
    candidates = []
    lam, mu, mats = _project_dual(prog, result, active, v_new, dual_ranks)
    candidates.append((v_new, lam, mu, mats))
    v = _project_primal(prog, v0, active, mats_new, dual_ranks)
    candidates.append((v, lam_new, mu_new, mats_new))
    scored = []
    for cand in candidates:
        res = _residuals(prog, *cand)
        worst = max(res["primal_feas"], res["dual_feas"], res["gap"])
        scored.append((worst, cand, res))
    _, best_cand, res = min(scored, key=lambda item: item[0])
    return (*best_cand, res)


def _project_primal(prog, v0, active, dual_mats, dual_ranks):
    n = prog.num_vars
    rows = [prog.A_eq, prog.A_ub[active]]
    rhs = [prog.b_eq, prog.b_ub[active]]
    for blk, E, r in zip(prog.psd_blocks, dual_mats, dual_ranks):
        k = blk.size
        Qd = np.linalg.eigh(E)[1][:, k - r:] if r else np.zeros((k, 0))
        for col in Qd.T:
            block = np.zeros((k, n))
            for i in range(k):
                np.add.at(block[i], blk.index[i], col)
            rows.append(block)
            rhs.append(np.zeros(k))
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    return v0 + np.linalg.lstsq(A, b - A @ v0, rcond=None)[0]


def _project_dual(prog, result, active, v, dual_ranks):
    n = prog.num_vars
    cols = [prog.A_eq.T, -prog.A_ub[active].T]
    start = [result.dual_eq, result.dual_ub[active]]
    bases = []
    for blk, E, r in zip(prog.psd_blocks, result.dual_psd, dual_ranks):
        Qd = np.linalg.eigh(prog.block_matrix(v, blk))[1][:, :max(r, 0)]
        bases.append(Qd)
        Et = Qd.T @ E @ Qd
        basis, coords = [], []
        for a in range(Qd.shape[1]):
            for b in range(a, Qd.shape[1]):
                unit = np.outer(Qd[:, a], Qd[:, b])
                if a != b:
                    unit = unit + unit.T
                grad = np.zeros(n)
                np.add.at(grad, blk.index.ravel(), unit.ravel())
                basis.append(grad)
                coords.append(Et[a, b])
        cols.append(np.array(basis).T if basis else np.zeros((n, 0)))
        start.append(np.array(coords))
    J = np.hstack(cols)
    zeta = np.concatenate(start)
    zeta = zeta + np.linalg.lstsq(J, prog.c - J @ zeta, rcond=None)[0]
    me, na = prog.A_eq.shape[0], int(active.sum())
    lam = zeta[:me]
    mu = np.zeros(prog.A_ub.shape[0])
    mu[active] = zeta[me:me + na]
    mats, pos = [], me + na
    for Qd in bases:
        r = Qd.shape[1]
        Et = np.zeros((r, r))
        Et[np.triu_indices(r)] = zeta[pos:pos + r * (r + 1) // 2]
        Et = Et + np.triu(Et, 1).T
        pos += r * (r + 1) // 2
        mats.append(Qd @ Et @ Qd.T)
    return lam, mu, mats
