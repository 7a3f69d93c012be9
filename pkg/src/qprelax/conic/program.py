"""Solver-agnostic conic program representation and a small builder.

A :class:`ConicProgram` is always a minimization over a flat vector ``v``::

    min  c @ v + c0
    s.t. A_eq @ v == b_eq
         A_ub @ v <= b_ub
         smat(v[block]) PSD       for every registered PSD block

Maximization problems are negated when built; ``sense`` records the native
direction so that reported values can be flipped back.
"""

from dataclasses import dataclass, field

import numpy as np

from .expr import Affine, as_affine


@dataclass(frozen=True)
class ConstraintGroup:
    """Rows of one named constraint family.

    ``entries`` lists the multi-indices of the expression that produced a row
    (in row order); ``shape`` is the shape of that expression.  For ``ge``
    groups the rows are stored negated, but duals are reported for the
    original orientation, so every inequality multiplier is nonnegative.
    """
    name: str
    kind: str                  # "eq", "le" or "ge"
    rows: slice
    shape: tuple
    entries: tuple

    @property
    def size(self):
        return self.rows.stop - self.rows.start

    @property
    def matrix(self):
        return "A_eq" if self.kind == "eq" else "A_ub"


@dataclass(frozen=True)
class PsdBlock:
    name: str
    index: np.ndarray          # k x k symmetric map into the variable vector

    @property
    def size(self):
        return self.index.shape[0]


@dataclass(frozen=True)
class ConicProgram:
    name: str
    sense: str
    c: np.ndarray
    c0: float
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    psd_blocks: tuple
    var_names: tuple
    groups: tuple = field(default=())

    @property
    def num_vars(self):
        return self.c.shape[0]

    @property
    def num_scalar_vars(self):
        in_blocks = sum(blk.size * (blk.size + 1) // 2
                        for blk in self.psd_blocks)
        return self.num_vars - in_blocks

    @property
    def psd_block_sizes(self):
        return [blk.size for blk in self.psd_blocks]

    @property
    def is_lp(self):
        return not self.psd_blocks

    def group(self, name):
        for grp in self.groups:
            if grp.name == name:
                return grp
        raise KeyError(name)

    def objective_value(self, v):
        """Objective of ``v`` in the minimization form."""
        return float(self.c @ v + self.c0)

    def native_value(self, min_form):
        return -min_form if self.sense == "max" else min_form

    def block_matrix(self, v, block):
        return np.asarray(v)[block.index]

    def group_values(self, v, name):
        """Constraint expression values (lhs - rhs, original orientation)."""
        grp = self.group(name)
        A, b = (self.A_eq, self.b_eq) if grp.kind == "eq" else (self.A_ub,
                                                                self.b_ub)
        vals = A[grp.rows] @ v - b[grp.rows]
        if grp.kind == "ge":
            vals = -vals
        return _scatter(vals, grp)

    def group_dual(self, result, name):
        """Multipliers of one group, scattered back into expression shape."""
        grp = self.group(name)
        duals = result.dual_eq if grp.kind == "eq" else result.dual_ub
        return _scatter(duals[grp.rows], grp)

    def violations(self, v):
        """Largest violation per constraint group plus PSD blocks."""
        out = {}
        for grp in self.groups:
            vals = self.group_values(v, grp.name)
            if grp.kind == "eq":
                viol = np.abs(vals)
            elif grp.kind == "le":
                viol = np.maximum(vals, 0.0)
            else:
                viol = np.maximum(-vals, 0.0)
            out[grp.name] = float(viol.max()) if viol.size else 0.0
        for blk in self.psd_blocks:
            mat = self.block_matrix(v, blk)
            out[f"psd:{blk.name}"] = max(0.0, -float(np.linalg.eigvalsh(mat)[0]))
        return out


def _scatter(vals, grp):
    out = np.zeros(grp.shape)
    for val, idx in zip(vals, grp.entries):
        out[idx] = val
    return out


class VariableMap:
    """Where each semantic variable of a built problem lives.

    ``index`` maps names to integer arrays into the flat variable vector
    (symmetric matrices share one index per unordered pair).  ``exprs``
    holds quantities that are affine functions of the variables rather than
    variables themselves, e.g. ``x`` and ``X`` in the face-reduced problem.
    """

    def __init__(self, index, exprs=None):
        self.index = dict(index)
        self.exprs = dict(exprs or {})

    def __contains__(self, name):
        return name in self.index or name in self.exprs

    def __getitem__(self, name):
        return self.index[name]

    def names(self):
        return list(self.index) + list(self.exprs)

    def value(self, v, name):
        v = np.asarray(v, dtype=float)
        if name in self.index:
            return v[self.index[name]]
        return self.exprs[name].evaluate(v)

    def values(self, v):
        return {name: self.value(v, name) for name in self.names()}

    def point(self, nvars, **values):
        """Flat vector with the given named variables set (others zero)."""
        v = np.zeros(nvars)
        for name, val in values.items():
            v[self.index[name]] = np.asarray(val, dtype=float)
        return v


class ProgramBuilder:
    """Incrementally declares variables and constraint groups."""

    def __init__(self, name):
        self.name = name
        self._nv = 0
        self._names = []
        self._index = {}
        self._psd = []
        self._eq = []           # (group name, coef rows, rhs)
        self._ub = []
        self._groups = []
        self._exprs = {}
        self._objective = None
        self._sense = "min"

    @property
    def nvars(self):
        return self._nv

    def _allocate(self, name, count, labels):
        if name in self._index:
            raise ValueError(f"variable {name!r} declared twice")
        start = self._nv
        self._nv += count
        self._names.extend(labels)
        return np.arange(start, start + count)

    def variable(self, name, shape=(), symmetric=False):
        """Declare a real array variable; returns its expression."""
        shape = tuple(np.atleast_1d(shape)) if shape != () else ()
        if symmetric:
            k = shape[0]
            if shape != (k, k):
                raise ValueError("symmetric variables must be square")
            pairs = [(i, j) for i in range(k) for j in range(i, k)]
            ids = self._allocate(name, len(pairs),
                                 [f"{name}[{i},{j}]" for i, j in pairs])
            index = np.zeros((k, k), dtype=int)
            for idx, (i, j) in zip(ids, pairs):
                index[i, j] = index[j, i] = idx
        else:
            cells = list(np.ndindex(*shape)) if shape else [()]
            labels = [f"{name}[{','.join(map(str, c))}]" if c else name
                      for c in cells]
            index = self._allocate(name, len(cells), labels).reshape(shape)
        self._index[name] = index
        return self.expr(name)

    def psd_block(self, name, k):
        if k < 1:
            raise ValueError("PSD blocks need side length >= 1")
        expr = self.variable(name, (k, k), symmetric=True)
        self._psd.append(PsdBlock(name, self._index[name]))
        return expr

    def expr(self, name):
        return Affine.from_indices(self._index[name], self._nv)

    def define(self, name, expr):
        """Register a named derived expression for the variable map."""
        self._exprs[name] = expr

    def _add(self, kind, group, lhs, rhs, entries):
        expr = as_affine(lhs, self._nv) - rhs
        expr = expr.padded(max(expr.nvars, self._nv))
        shape = expr.shape
        if entries is None:
            cells = list(np.ndindex(*shape)) if shape else [()]
        elif entries == "upper":
            k = shape[0]
            cells = [(i, j) for i in range(k) for j in range(i, k)]
        elif entries == "diag":
            cells = [(i, i) for i in range(shape[0])]
        else:
            cells = [tuple(np.atleast_1d(c)) for c in entries]
        coef = np.array([expr.coef[c] for c in cells]).reshape(len(cells),
                                                                expr.nvars)
        rhs_vals = -np.array([expr.const[c] for c in cells], dtype=float)
        if kind == "ge":
            coef, rhs_vals = -coef, -rhs_vals
        store = self._eq if kind == "eq" else self._ub
        if any(g == group for g, _, _ in self._eq + self._ub):
            raise ValueError(f"constraint group {group!r} declared twice")
        store.append((group, coef, rhs_vals))
        self._groups.append((group, kind, shape, tuple(cells)))

    def add_eq(self, group, lhs, rhs=0.0, entries=None):
        self._add("eq", group, lhs, rhs, entries)

    def add_le(self, group, lhs, rhs=0.0, entries=None):
        self._add("le", group, lhs, rhs, entries)

    def add_ge(self, group, lhs, rhs=0.0, entries=None):
        self._add("ge", group, lhs, rhs, entries)

    def minimize(self, expr):
        self._objective, self._sense = as_affine(expr), "min"

    def maximize(self, expr):
        self._objective, self._sense = -as_affine(expr), "max"

    def build(self):
        nv = self._nv

        def stack(store):
            if not store:
                return np.zeros((0, nv)), np.zeros(0)
            rows = [np.pad(coef, ((0, 0), (0, nv - coef.shape[1])))
                    for _, coef, _ in store]
            return (np.vstack(rows),
                    np.concatenate([rhs for _, _, rhs in store]))

        A_eq, b_eq = stack(self._eq)
        A_ub, b_ub = stack(self._ub)
        offsets = {"eq": 0, "ub": 0}
        groups = []
        for name, kind, shape, cells in self._groups:
            key = "eq" if kind == "eq" else "ub"
            start = offsets[key]
            offsets[key] += len(cells)
            groups.append(ConstraintGroup(name, kind,
                                          slice(start, start + len(cells)),
                                          shape, cells))
        obj = (self._objective if self._objective is not None
               else Affine.constant(0.0)).padded(nv)
        prog = ConicProgram(
            name=self.name, sense=self._sense,
            c=obj.coef.reshape(nv).copy(), c0=float(obj.const),
            A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub,
            psd_blocks=tuple(self._psd), var_names=tuple(self._names),
            groups=tuple(groups))
        exprs = {k: e.padded(nv) for k, e in self._exprs.items()}
        return prog, VariableMap(self._index, exprs)


def dump_program(prog, path):
    """Write a human-readable constraint listing (debugging aid only)."""
    names = prog.var_names

    def term_list(row):
        terms = [f"{coef:+.12g} {names[j]}" for j, coef in enumerate(row)
                 if coef != 0.0]
        return " ".join(terms) if terms else "0"

    lines = [f"# program {prog.name} ({prog.sense}imize, listed as min)",
             f"# {prog.num_vars} variables, {prog.A_eq.shape[0]} equalities, "
             f"{prog.A_ub.shape[0]} inequalities, PSD blocks "
             f"{prog.psd_block_sizes}",
             f"objective: {term_list(prog.c)} {prog.c0:+.12g}"]
    for grp in prog.groups:
        A, b = (prog.A_eq, prog.b_eq) if grp.kind == "eq" else (prog.A_ub,
                                                                prog.b_ub)
        op = "==" if grp.kind == "eq" else "<="
        lines.append(f"[{grp.name}] ({grp.kind}, {grp.size} rows)")
        for r in range(grp.rows.start, grp.rows.stop):
            lines.append(f"  {term_list(A[r])} {op} {b[r]:.12g}")
    for blk in prog.psd_blocks:
        lines.append(f"[psd:{blk.name}] side {blk.size}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
