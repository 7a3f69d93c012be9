import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from qprelax.errors import InstanceFormatError
from qprelax.extreal import NEG, POS
from qprelax.instances import (ExampleFamily, QpInstance, closed_form_values,
                               example_family, instance_from_dict,
                               instance_to_dict, load_instance,
                               random_bounded_instance, save_instance,
                               validate_assumption1)

EX1, EX2, EX3, EX4 = ExampleFamily


def interval():
    return QpInstance(np.array([[-1.0]]), [0.0], [[1.0, -1.0]], [1.0, 0.0],
                      np.zeros((1, 0)), [], name="interval")


def test_instance_shapes_and_empty_blocks():
    inst = QpInstance(np.eye(2), [1, 2], np.zeros((2, 0)), [],
                      np.zeros((2, 0)), [])
    assert (inst.n, inst.m, inst.p) == (2, 0, 0)
    assert inst.G.shape == (2, 0) and inst.H.shape == (2, 0)
    assert inst.objective([1.0, 1.0]) == pytest.approx(4.0)


def test_asymmetric_q_rejected():
    with pytest.raises(ValueError):
        QpInstance([[1, 2], [0, 1]], [0, 0], np.zeros((2, 0)), [],
                   np.zeros((2, 0)), [])


def test_arrays_are_read_only():
    inst = interval()
    with pytest.raises(ValueError):
        inst.Q[0, 0] = 5.0


def test_example_family_matrices():
    ex1 = example_family(EX1, 1)
    assert_array_equal(ex1.Q, [[1, 1], [1, 1]])
    assert_array_equal(ex1.c, [-1, -1])
    assert_array_equal(ex1.G, [[1, -1], [1, -1]])
    assert_array_equal(ex1.g, [2, 2])
    assert ex1.p == 0
    ex2 = example_family(EX2, 0)
    assert_array_equal(ex2.Q, np.eye(2))
    assert_array_equal(ex2.c, [0, 0])
    ex4 = example_family(EX4, 0)
    assert_array_equal(ex4.Q, -np.eye(2))
    assert_array_equal(ex4.c, [0, -1])
    assert_array_equal(ex4.G, -np.eye(2))
    assert_array_equal(ex4.g, [0, 0])


def test_closed_form_examples():
    v = closed_form_values(EX1, 0)
    assert (float(v.nu_star), float(v.nu_R), float(v.nu_Rplus)) == (0, -2, -2)
    v = closed_form_values(EX2, 3)
    assert float(v.nu_star) == -5 and v.nu_R == NEG
    assert float(v.nu_Rplus) == -5 and v.nu_Rplus_is_reference_data
    v = closed_form_values(EX3, 0)
    assert v.nu_star == NEG and v.nu_R == NEG and float(v.nu_Rplus) == -1
    for alpha in (-1.0, 0.0, 2.5):
        v = closed_form_values(EX4, alpha)
        assert (v.nu_star, v.nu_R, v.nu_Rplus) == (NEG, NEG, POS)


@pytest.mark.parametrize("fam,breaks", [(EX1, (-2.0, 2.0)),
                                        (EX2, (-1.0, 1.0))])
def test_closed_form_continuous_at_breakpoints(fam, breaks):
    for b in breaks:
        for field in ("nu_star", "nu_R", "nu_Rplus", "nu_SR"):
            left = getattr(closed_form_values(fam, b - 1e-9), field)
            mid = getattr(closed_form_values(fam, b), field)
            right = getattr(closed_form_values(fam, b + 1e-9), field)
            if mid.is_finite:
                assert abs(float(left) - float(mid)) < 1e-6
                assert abs(float(right) - float(mid)) < 1e-6


def test_validate_example1():
    rep = validate_assumption1(example_family(EX1, 0.3))
    assert rep.satisfied and rep.feasible
    assert_allclose(rep.slater_point, [0, 0], atol=1e-9)
    assert rep.margin == pytest.approx(2.0)


def test_validate_flags_p_equal_n():
    inst = QpInstance([[1.0]], [0.0], np.zeros((1, 0)), [], [[1.0]], [0.0])
    rep = validate_assumption1(inst)
    assert rep.rank_H == 1
    assert not rep.satisfied
    assert any("p < n" in msg for msg in rep.messages)


def test_validate_interval_midpoint():
    rep = validate_assumption1(interval())
    assert rep.satisfied
    assert_allclose(rep.slater_point, [0.5], atol=1e-6)
    assert rep.margin == pytest.approx(0.5, abs=1e-6)


def test_validate_empty_and_flat_sets():
    empty = QpInstance([[1.0]], [0.0], [[1.0, -1.0]], [-1.0, -1.0],
                       np.zeros((1, 0)), [])
    rep = validate_assumption1(empty)
    assert not rep.feasible and not rep.satisfied
    flat = QpInstance([[1.0]], [0.0], [[1.0, -1.0]], [0.0, 0.0],
                      np.zeros((1, 0)), [])
    rep = validate_assumption1(flat)
    assert rep.feasible and rep.slater_point is None


def test_random_instance_box():
    inst = random_bounded_instance(2, 0, 0, 7)
    assert inst.m == 4
    assert_array_equal(inst.G, np.hstack([np.eye(2), -np.eye(2)]))
    assert_array_equal(inst.g, np.ones(4))
    inst = random_bounded_instance(3, 2, 1, 1)
    assert inst.p == 1 and 6 <= inst.m <= 8
    assert_array_equal(inst.h, [0.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 3), st.integers(0, 2),
       st.integers(0, 10**6))
def test_random_instance_properties(n, m_extra, p, seed):
    p = min(p, n - 1)
    a = random_bounded_instance(n, m_extra, p, seed)
    b = random_bounded_instance(n, m_extra, p, seed)
    assert a == b
    assert_array_equal(a.Q, a.Q.T)
    rep = validate_assumption1(a)
    assert rep.satisfied and rep.rank_H == p
    assert_allclose(rep.slater_point, np.zeros(n), atol=1e-7)
    assert rep.margin >= 1.0 - 1e-7


decimal_text = st.decimals(min_value=-1000, max_value=1000, places=6,
                           allow_nan=False, allow_infinity=False).map(str)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_file_roundtrip_exact(tmp_path_factory, data):
    n = data.draw(st.integers(1, 3))
    m = data.draw(st.integers(0, 2))
    doc = {"n": n, "m": m, "p": 0,
           "Q": [[data.draw(decimal_text) for _ in range(n - i)]
                 for i in range(n)],
           "c": [data.draw(decimal_text) for _ in range(n)],
           "G": [[data.draw(decimal_text) for _ in range(m)]
                 for _ in range(n)],
           "g": [data.draw(decimal_text) for _ in range(m)]}
    inst = instance_from_dict(doc)
    path = tmp_path_factory.mktemp("io") / "inst.json"
    save_instance(inst, path)
    again = load_instance(path)
    assert again == inst
    assert instance_to_dict(again) == instance_to_dict(inst)


def test_family_shorthand_and_errors(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"family": {"id": "EX4", "alpha": "0.5"}}))
    assert load_instance(path) == example_family(EX4, 0.5)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InstanceFormatError):
        load_instance(bad)
    with pytest.raises(InstanceFormatError):
        instance_from_dict({"n": 2, "c": ["1"]})
    with pytest.raises(InstanceFormatError):
        instance_from_dict({"family": {"id": "EX9", "alpha": "0"}})
