"""QP instance data, Slater-point validation, example families and generators.

The quadratic program is

    min  1/2 x^T Q x + c^T x   s.t.  G^T x <= g,  H^T x = h

with ``x`` in R^n, ``m`` inequalities and ``p`` equalities.  Either block may
be empty (``m = 0`` or ``p = 0``); empty matrices keep their zero dimension
so that every formula downstream applies unchanged.
"""

import enum
import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

import numpy as np
from scipy.optimize import linprog

from .errors import InstanceFormatError, SolverFailure
from .extreal import NEG, POS, ExtReal

RANK_RTOL = 1e-9


def _frozen(a, shape):
    a = np.array(a, dtype=float).reshape(shape)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QpInstance:
    Q: np.ndarray
    c: np.ndarray
    G: np.ndarray
    g: np.ndarray
    H: np.ndarray
    h: np.ndarray
    name: str = ""

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        if n < 1:
            raise ValueError("an instance needs at least one variable")
        g = np.asarray(self.g, dtype=float).ravel()
        h = np.asarray(self.h, dtype=float).ravel()
        Q = np.asarray(self.Q, dtype=float).reshape(n, n)
        if not np.array_equal(Q, Q.T):
            raise ValueError("Q must be symmetric")
        object.__setattr__(self, "Q", _frozen(Q, (n, n)))
        object.__setattr__(self, "c", _frozen(c, (n,)))
        object.__setattr__(self, "G", _frozen(self.G, (n, g.size)))
        object.__setattr__(self, "g", _frozen(g, (g.size,)))
        object.__setattr__(self, "H", _frozen(self.H, (n, h.size)))
        object.__setattr__(self, "h", _frozen(h, (h.size,)))

    @property
    def n(self):
        return self.c.shape[0]

    @property
    def m(self):
        return self.g.shape[0]

    @property
    def p(self):
        return self.h.shape[0]

    def objective(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.Q @ x + self.c @ x)

    def is_feasible(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        ok_ineq = self.m == 0 or (self.G.T @ x - self.g).max() <= tol
        ok_eq = self.p == 0 or np.abs(self.H.T @ x - self.h).max() <= tol
        return bool(ok_ineq and ok_eq)

    def __eq__(self, other):
        if not isinstance(other, QpInstance):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("Q", "c", "G", "g", "H", "h"))

    __hash__ = None


def numerical_rank(A, rtol=RANK_RTOL):
    """Singular values below ``rtol * max(sigma_max, 1)`` count as zero."""
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int((s > rtol * max(s[0], 1.0)).sum())


@dataclass(frozen=True)
class SlaterReport:
    feasible: bool
    rank_H: int
    slater_point: np.ndarray = None
    margin: float = -np.inf
    messages: tuple = ()

    @property
    def satisfied(self):
        """Full assumption: Slater point exists and H has full rank p < n."""
        return not self.messages


def _lp(c, A_ub, b_ub, A_eq, b_eq, bounds):
    kw = {}
    if A_ub.shape[0]:
        kw.update(A_ub=A_ub, b_ub=b_ub)
    if A_eq.shape[0]:
        kw.update(A_eq=A_eq, b_eq=b_eq)
    return linprog(c, bounds=bounds, method="highs", **kw)


def validate_assumption1(inst, tol=1e-9):
    """Look for a strictly feasible point and check the rank of ``H``.

    Stage one maximizes the uniform slack ``t`` (capped at 1).  Stage two
    returns the least 1-norm point achieving that slack, which makes the
    reported point canonical (e.g. the origin whenever it is optimal).
    """
    n, m, p = inst.n, inst.m, inst.p
    rank_H = numerical_rank(inst.H)
    messages = []
    if rank_H != p:
        messages.append(f"H has numerical rank {rank_H}, expected p = {p}")
    if p >= n:
        messages.append(f"need p < n, got p = {p}, n = {n}")

    A_ub = np.hstack([inst.G.T, np.ones((m, 1))])
    A_eq = np.hstack([inst.H.T, np.zeros((p, 1))])
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    res = _lp(cost, A_ub, inst.g, A_eq, inst.h,
              [(None, None)] * n + [(None, 1.0)])
    if res.status == 2:
        messages.append("feasible set is empty")
        return SlaterReport(False, rank_H, None, -np.inf, tuple(messages))
    if res.status != 0:
        raise SolverFailure(f"slack LP failed: {res.message}")
    t_star = -res.fun
    if t_star < -tol:
        messages.append("feasible set is empty")
        return SlaterReport(False, rank_H, None, -np.inf, tuple(messages))
    if t_star <= tol:
        messages.append("no strictly feasible point")
        return SlaterReport(True, rank_H, None, t_star, tuple(messages))

    # x = x+ - x-, minimize the 1-norm at the optimal slack level
    level = t_star * (1.0 - 1e-9)
    cost = np.ones(2 * n)
    A2 = np.hstack([inst.G.T, -inst.G.T])
    E2 = np.hstack([inst.H.T, -inst.H.T])
    res2 = _lp(cost, A2, inst.g - level, E2, inst.h, [(0, None)] * (2 * n))
    x0 = res2.x[:n] - res2.x[n:] if res2.status == 0 else res.x[:n]
    margin = float((inst.g - inst.G.T @ x0).min()) if m else np.inf
    return SlaterReport(True, rank_H, x0, margin, tuple(messages))


# ---------------------------------------------------------------- families
class ExampleFamily(enum.Enum):
    EX1 = "EX1"
    EX2 = "EX2"
    EX3 = "EX3"
    EX4 = "EX4"


_G_STRIP = np.array([[1.0, -1.0], [1.0, -1.0]])
_G_ORTHANT = -np.eye(2)


def example_family(fam, alpha):
    fam = ExampleFamily(fam)
    a = float(alpha)
    empty_H, empty_h = np.zeros((2, 0)), np.zeros(0)
    if fam is ExampleFamily.EX1:
        Q, c, G, g = np.ones((2, 2)), [-a, -a], _G_STRIP, [2.0, 2.0]
    elif fam is ExampleFamily.EX2:
        Q, c, G, g = np.eye(2), [-a, -a], _G_STRIP, [2.0, 2.0]
    elif fam is ExampleFamily.EX3:
        Q, c, G, g = -np.eye(2), [a, a], _G_STRIP, [2.0, 2.0]
    else:
        Q, c, G, g = -np.eye(2), [-a, -1.0 + a], _G_ORTHANT, [0.0, 0.0]
    return QpInstance(Q, c, G, g, empty_H, empty_h,
                      name=f"{fam.value}(alpha={a!r})")


@dataclass(frozen=True)
class ClosedFormValues:
    nu_star: ExtReal
    nu_R: ExtReal
    nu_Rplus: ExtReal
    nu_SR: ExtReal
    nu_SRplus: ExtReal
    nu_Rplus_is_reference_data: bool = False


def _piecewise(a, lo, left, mid, right):
    if a <= -lo:
        return left(a)
    if a >= lo:
        return right(a)
    return mid(a)


def closed_form_values(fam, alpha):
    """Known optimal values of the example families as extended reals."""
    fam = ExampleFamily(fam)
    a = float(alpha)
    f = ExtReal.of
    if fam is ExampleFamily.EX1:
        star = f(_piecewise(a, 2.0, lambda t: 2 * t + 2, lambda t: -t * t / 2,
                            lambda t: -2 * t + 2))
        rlt = f(_piecewise(a, 2.0, lambda t: 2 * t + 2, lambda t: -2.0,
                           lambda t: -2 * t + 2))
        return ClosedFormValues(star, rlt, rlt, star, star)
    if fam is ExampleFamily.EX2:
        star = f(_piecewise(a, 1.0, lambda t: 2 * t + 1, lambda t: -t * t,
                            lambda t: -2 * t + 1))
        rplus = f(_piecewise(a, 1.0, lambda t: 2 * t + 1, lambda t: -1.0,
                             lambda t: -2 * t + 1))
        return ClosedFormValues(star, NEG, rplus, star, star,
                                nu_Rplus_is_reference_data=True)
    if fam is ExampleFamily.EX3:
        rplus = f(2 * a - 1 if a < 0 else (-1.0 if a == 0 else -2 * a - 1))
        return ClosedFormValues(NEG, NEG, rplus, NEG, rplus)
    return ClosedFormValues(NEG, NEG, POS, NEG, POS)


# --------------------------------------------------------------- generator
def random_bounded_instance(n, m_extra, p, seed):
    """Random instance whose feasible set lies in the box [-1, 1]^n.

    Extra cuts ``a^T x <= b`` keep ``b >= 1`` so the origin stays strictly
    feasible with slack at least 1 in every row; equalities pass through
    the origin (``h = 0``).
    """
    if n < 1 or not 0 <= p < n:
        raise ValueError("need n >= 1 and 0 <= p < n")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    Q = (A + A.T) / 2.0
    c = rng.standard_normal(n)
    cols, rhs = [np.eye(n), -np.eye(n)], [np.ones(2 * n)]
    for _ in range(m_extra):
        a = rng.standard_normal(n)
        b = np.abs(a).sum() * rng.uniform(0.3, 0.9)
        if b >= 1.0:
            cols.append(a[:, None])
            rhs.append([b])
    G = np.hstack(cols)
    g = np.concatenate(rhs)
    H = rng.standard_normal((n, p))
    return QpInstance(Q, c, G, g, H, np.zeros(p),
                      name=f"random(n={n},m_extra={m_extra},p={p},seed={seed})")


# --------------------------------------------------------------------- IO
def _decimal(s, field):
    try:
        return float(Decimal(str(s).strip()))
    except (InvalidOperation, ValueError) as exc:
        raise InstanceFormatError(f"{field}: {s!r} is not a decimal") from exc


def _vector(doc, key, size):
    vals = doc.get(key, [])
    if len(vals) != size:
        raise InstanceFormatError(f"{key}: expected {size} entries, "
                                  f"got {len(vals)}")
    return np.array([_decimal(v, key) for v in vals])


def _matrix(doc, key, rows, cols):
    data = doc.get(key, [[] for _ in range(rows)])
    if len(data) != rows or any(len(r) != cols for r in data):
        raise InstanceFormatError(f"{key}: expected {rows}x{cols} rows")
    return np.array([[_decimal(v, key) for v in r] for r in data]
                    ).reshape(rows, cols)


def _q_matrix(rows, n):
    lengths = [len(r) for r in rows]
    if len(rows) != n:
        raise InstanceFormatError(f"Q: expected {n} rows")
    Q = np.zeros((n, n))
    if lengths == [n - i for i in range(n)]:
        for i, r in enumerate(rows):
            for k, v in enumerate(r):
                Q[i, i + k] = Q[i + k, i] = _decimal(v, "Q")
        return Q
    if lengths != [n] * n:
        raise InstanceFormatError("Q: give n full rows or upper-triangle rows")
    Q = np.array([[_decimal(v, "Q") for v in r] for r in rows])
    if not np.array_equal(Q, Q.T):
        raise InstanceFormatError("Q: full rows must form a symmetric matrix")
    return Q


def instance_from_dict(doc):
    if "family" in doc:
        fam = doc["family"]
        try:
            return example_family(ExampleFamily(fam["id"]),
                                  _decimal(fam["alpha"], "alpha"))
        except (KeyError, ValueError) as exc:
            raise InstanceFormatError(f"bad family record: {fam!r}") from exc
    try:
        n, m, p = int(doc["n"]), int(doc.get("m", 0)), int(doc.get("p", 0))
    except (KeyError, ValueError) as exc:
        raise InstanceFormatError("n, m, p must be integers") from exc
    if n < 1 or m < 0 or p < 0:
        raise InstanceFormatError("need n >= 1, m >= 0, p >= 0")
    Q = _q_matrix(doc.get("Q", []), n)
    return QpInstance(Q, _vector(doc, "c", n), _matrix(doc, "G", n, m),
                      _vector(doc, "g", m), _matrix(doc, "H", n, p),
                      _vector(doc, "h", p), name=doc.get("name", ""))


def instance_to_dict(inst):
    def fmt(v):
        return repr(float(v))
    return {
        "name": inst.name, "n": inst.n, "m": inst.m, "p": inst.p,
        "Q": [[fmt(v) for v in inst.Q[i, i:]] for i in range(inst.n)],
        "c": [fmt(v) for v in inst.c],
        "G": [[fmt(v) for v in row] for row in inst.G],
        "g": [fmt(v) for v in inst.g],
        "H": [[fmt(v) for v in row] for row in inst.H],
        "h": [fmt(v) for v in inst.h],
    }


def load_instance(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc
    return instance_from_dict(doc)


def save_instance(inst, path):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=1)
        fh.write("\n")
