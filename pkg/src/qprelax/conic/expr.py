"""Array-valued affine expressions over a flat variable vector.

An :class:`Affine` of shape ``s`` stores a coefficient tensor of shape
``s + (nvars,)`` and a constant of shape ``s``; its value at ``v`` is
``coef @ v + const``.  Only products with constant numpy arrays are
supported, which is all the relaxation builders need: every constraint of
the lifted problems is linear in the lifted variables.
"""

import numpy as np


class Affine:
    # Makes ``ndarray @ Affine`` and ``ndarray + Affine`` dispatch to the
    # reflected operators below instead of broadcasting elementwise.
    __array_ufunc__ = None

    def __init__(self, coef, const=None):
        coef = np.asarray(coef, dtype=float)
        if const is None:
            const = np.zeros(coef.shape[:-1])
        const = np.asarray(const, dtype=float)
        if coef.shape[:-1] != const.shape:
            raise ValueError(
                f"coefficient shape {coef.shape} does not match constant "
                f"shape {const.shape}")
        self.coef = coef
        self.const = const

    @classmethod
    def constant(cls, value, nvars=0):
        value = np.asarray(value, dtype=float)
        return cls(np.zeros(value.shape + (nvars,)), value)

    @classmethod
    def from_indices(cls, index, nvars):
        """One-hot expression picking ``v[index]`` (``index`` any int array)."""
        index = np.asarray(index, dtype=int)
        coef = np.zeros(index.shape + (nvars,))
        if index.size:
            flat = coef.reshape(-1, nvars)
            flat[np.arange(index.size), index.ravel()] = 1.0
        return cls(coef)

    @property
    def shape(self):
        return self.const.shape

    @property
    def ndim(self):
        return self.const.ndim

    @property
    def nvars(self):
        return self.coef.shape[-1]

    def padded(self, nvars):
        if nvars == self.nvars:
            return self
        if nvars < self.nvars:
            raise ValueError("cannot shrink the variable space")
        pad = [(0, 0)] * (self.coef.ndim - 1) + [(0, nvars - self.nvars)]
        return Affine(np.pad(self.coef, pad), self.const)

    def evaluate(self, v):
        v = np.asarray(v, dtype=float)
        return self.coef @ v[:self.nvars] + self.const

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Affine):
            nv = max(self.nvars, other.nvars)
            return self.padded(nv), other.padded(nv)
        return self, Affine.constant(np.broadcast_to(other, self.shape),
                                     self.nvars)

    def __add__(self, other):
        a, b = self._coerce(other)
        if a.shape != b.shape:
            raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
        return Affine(a.coef + b.coef, a.const + b.const)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.coef, -self.const)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if isinstance(scalar, Affine) or np.ndim(scalar) != 0:
            raise TypeError("Affine supports only scalar multiplication")
        return Affine(self.coef * scalar, self.const * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if isinstance(other, Affine):
            raise TypeError("product of two affine expressions is not affine")
        other = np.asarray(other, dtype=float)
        coef = np.moveaxis(np.moveaxis(self.coef, -1, 0) @ other, 0, -1)
        return Affine(coef, self.const @ other)

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=float)
        coef = np.tensordot(other, self.coef, axes=([-1], [0]))
        return Affine(coef, other @ self.const)

    # -- structure ----------------------------------------------------------
    @property
    def T(self):
        if self.ndim < 2:
            return self
        return Affine(np.swapaxes(self.coef, 0, 1), self.const.T)

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return Affine(self.coef[key], self.const[key])

    def diag(self):
        coef = np.diagonal(self.coef, axis1=0, axis2=1).T
        return Affine(coef, np.diag(self.const))

    def sum(self):
        axes = tuple(range(self.ndim))
        return Affine(self.coef.sum(axis=axes), self.const.sum())

    def reshape(self, *shape):
        return Affine(self.coef.reshape(shape + (self.nvars,)),
                      self.const.reshape(shape))

    def __repr__(self):
        return f"Affine(shape={self.shape}, nvars={self.nvars})"


def as_affine(value, nvars=0):
    return value if isinstance(value, Affine) else Affine.constant(value, nvars)


def outer(a, b):
    """Outer product ``a b^T`` where at most one factor is an expression."""
    if isinstance(a, Affine) and isinstance(b, Affine):
        raise TypeError("outer product of two expressions is not affine")
    if isinstance(a, Affine):
        b = np.asarray(b, dtype=float)
        return Affine(np.einsum("iv,j->ijv", a.coef, b), np.outer(a.const, b))
    if isinstance(b, Affine):
        a = np.asarray(a, dtype=float)
        return Affine(np.einsum("i,jv->ijv", a, b.coef), np.outer(a, b.const))
    return np.outer(a, b)


def inner(a, b):
    """Trace inner product ``<a, b>``; returns a scalar expression."""
    if isinstance(a, Affine):
        a, b = b, a
    a = np.asarray(a, dtype=float)
    if not isinstance(b, Affine):
        return float(np.sum(a * np.asarray(b)))
    axes = tuple(range(a.ndim))
    return Affine(np.tensordot(a, b.coef, axes=(axes, axes)),
                  np.sum(a * b.const))


def bmat(blocks):
    """Assemble a 2-D block matrix from expressions and constant arrays."""
    nv = max((blk.nvars for row in blocks for blk in row
              if isinstance(blk, Affine)), default=0)
    rows_coef, rows_const = [], []
    for row in blocks:
        row = [as_affine(blk, nv).padded(nv) for blk in row]
        row = [blk if blk.ndim == 2 else blk.reshape(*_as_2d(blk.shape))
               for blk in row]
        rows_coef.append(np.concatenate([blk.coef for blk in row], axis=1))
        rows_const.append(np.concatenate([blk.const for blk in row], axis=1))
    return Affine(np.concatenate(rows_coef, axis=0),
                  np.concatenate(rows_const, axis=0))


def _as_2d(shape):
    if len(shape) == 0:
        return (1, 1)
    raise ValueError("bmat blocks must be 2-D or scalar; reshape vectors "
                     "explicitly")
