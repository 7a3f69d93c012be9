"""Tagged extended reals for optimal values of infeasible/unbounded problems."""

import math
from dataclasses import dataclass
from functools import total_ordering

FINITE = "finite"
NEG_INF = "-inf"
POS_INF = "+inf"


@total_ordering
@dataclass(frozen=True)
class ExtReal:
    kind: str
    value: float = 0.0

    @classmethod
    def of(cls, x):
        if isinstance(x, ExtReal):
            return x
        x = float(x)
        if math.isnan(x):
            raise ValueError("NaN is not an extended real")
        if x == math.inf:
            return POS
        if x == -math.inf:
            return NEG
        return cls(FINITE, x)

    @property
    def is_finite(self):
        return self.kind == FINITE

    def __float__(self):
        if self.kind == POS_INF:
            return math.inf
        if self.kind == NEG_INF:
            return -math.inf
        return self.value

    def __eq__(self, other):
        try:
            return float(self) == float(ExtReal.of(other))
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other):
        return float(self) < float(ExtReal.of(other))

    def __hash__(self):
        return hash(float(self))

    def __neg__(self):
        return ExtReal.of(-float(self))

    def __str__(self):
        return self.kind if not self.is_finite else repr(self.value)


POS = ExtReal(POS_INF)
NEG = ExtReal(NEG_INF)


def close(a, b, tol):
    """Equal infinities, or finite values within ``tol``."""
    a, b = ExtReal.of(a), ExtReal.of(b)
    if a.is_finite and b.is_finite:
        return abs(a.value - b.value) <= tol
    return a.kind == b.kind
