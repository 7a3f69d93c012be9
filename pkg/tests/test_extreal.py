import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qprelax.extreal import NEG, POS, ExtReal, close

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_of_maps_infinities_to_tags():
    assert ExtReal.of(-math.inf) == NEG
    assert ExtReal.of(math.inf) == POS
    assert ExtReal.of(2.5).is_finite
    assert str(NEG) == "-inf" and str(POS) == "+inf"


def test_nan_rejected():
    with pytest.raises(ValueError):
        ExtReal.of(float("nan"))


@given(finite, finite)
def test_total_order_matches_floats(a, b):
    assert (ExtReal.of(a) < ExtReal.of(b)) == (a < b)
    assert NEG < ExtReal.of(a) < POS


def test_close():
    assert close(NEG, -math.inf, 1e-9)
    assert not close(NEG, POS, 1e-9)
    assert close(1.0, 1.0 + 1e-7, 1e-6)
    assert not close(1.0, NEG, 1e-6)
    assert -ExtReal.of(3.0) == ExtReal.of(-3.0)
