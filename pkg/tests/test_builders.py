import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import null_space

from qprelax.builders import (RPLUS_GROUPS, ProblemKind, build, build_R,
                              build_RD, build_Rplus, build_SR, build_SRplus,
                              build_SRR, build_SRRD, kkt_face_rows)
from qprelax.certify import find_kkt_points_smallscale
from qprelax.conic import Status, solve
from qprelax.instances import (ExampleFamily, QpInstance, example_family,
                               random_bounded_instance, validate_assumption1)
from qprelax.matrixops import build_face_data

EX1, EX2, EX3, EX4 = ExampleFamily


def interval():
    return QpInstance([[-1.0]], [0.0], [[1.0, -1.0]], [1.0, 0.0],
                      np.zeros((1, 0)), [])


def face_of(inst):
    return build_face_data(inst, validate_assumption1(inst).slater_point)


def value(prog):
    res = solve(prog)
    assert res.status is Status.OPTIMAL, res.message
    return float(res.value)


def test_R_dimensions_example1():
    prog, vmap = build_R(example_family(EX1, 0))
    assert prog.num_vars == 5
    assert prog.A_ub.shape[0] == 2 + 3
    assert prog.A_eq.shape[0] == 0
    assert prog.is_lp


def test_R_interval_products():
    prog, vmap = build_R(interval())
    x, X = vmap["x"][0], vmap["X"][0, 0]
    rows = prog.A_ub[prog.group("4_ineq_products").rows]
    rhs = prog.b_ub[prog.group("4_ineq_products").rows]
    # stored as -N <= 0 with N the linearized products (upper triangle)
    got = sorted((tuple(-r[[x, X]]), -b) for r, b in zip(rows, rhs))
    # (1-x)^2 >= 0, (1-x) x >= 0, x^2 >= 0; constants moved to the right
    want = sorted([((-2.0, 1.0), -1.0), ((1.0, -1.0), 0.0),
                   ((0.0, 1.0), 0.0)])
    assert got == want


@pytest.mark.parametrize("seed", range(5))
def test_rank_one_points_feasible_for_R_and_SR(seed):
    inst = random_bounded_instance(3, 2, seed % 2, seed)
    rng = np.random.default_rng(seed)
    P = null_space(inst.H.T) if inst.p else np.eye(3)
    x = P @ rng.uniform(-0.3, 0.3, P.shape[1])
    assert inst.is_feasible(x)
    prog, vmap = build_R(inst)
    v = vmap.point(prog.num_vars, x=x, X=np.outer(x, x))
    assert max(prog.violations(v).values()) <= 1e-12
    prog, vmap = build_SR(inst)
    M = np.outer(np.r_[1.0, x], np.r_[1.0, x])
    v = vmap.point(prog.num_vars, x=x, X=np.outer(x, x), M=M)
    assert max(prog.violations(v).values()) <= 1e-12


def test_RD_infeasible_example2():
    prog, _ = build_RD(example_family(EX2, 0))
    assert solve(prog).status is Status.INFEASIBLE


def test_RD_without_constraints():
    for c, status in (([0.0, 0.0], Status.OPTIMAL),
                      ([1.0, 0.0], Status.INFEASIBLE)):
        inst = QpInstance(np.zeros((2, 2)), c, np.zeros((2, 0)), [],
                          np.zeros((2, 0)), [])
        assert solve(build_RD(inst)[0]).status is status


def test_Rplus_group_sizes():
    prog, _ = build_Rplus(example_family(EX1, 0))
    sizes = {g.name: g.size for g in prog.groups}
    assert list(sizes) == list(RPLUS_GROUPS)
    for name in ("2_primal_eq", "3_eq_products", "6_eq_y_products",
                 "7_eq_z_products", "10_stationarity_z"):
        assert sizes[name] == 0
    assert sizes["1_primal_ineq"] == 2 and sizes["4_ineq_products"] == 3
    assert sizes["5_stationarity"] == 2 and sizes["8_stationarity_x"] == 4
    assert sizes["9_stationarity_y"] == 4
    assert sizes["11_complementarity_diag"] == 2
    assert sizes["12_complementarity_products"] == 4
    assert sizes["13_dual_sign"] == 2 and sizes["14_dual_products"] == 3
    assert sizes["15_objective_identity"] == 1


def test_Rplus_examples():
    assert value(build_Rplus(example_family(EX1, 0))[0]) == pytest.approx(-2)
    for alpha in (-1.0, 0.0, 1.0):
        res = solve(build_Rplus(example_family(EX4, alpha))[0])
        assert res.status is Status.INFEASIBLE


def test_SR_interval():
    assert value(build_SR(interval())[0]) == pytest.approx(-0.5, abs=1e-7)


@pytest.mark.parametrize("fam,alpha,expected", [(EX1, 0.0, 0.0),
                                                (EX2, 0.0, 0.0),
                                                (EX3, 0.0, -1.0)])
def test_SRplus_examples(fam, alpha, expected):
    inst = example_family(fam, alpha)
    for reduce_face in (True, False):
        got = value(build_SRplus(inst, reduce_face=reduce_face)[0])
        assert got == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("seed", range(6))
def test_SR_SRR_SRRD_agree(seed):
    inst = random_bounded_instance(2 + seed % 3, 2, seed % 2, seed)
    face = face_of(inst)
    sr = value(build_SR(inst)[0])
    srr = value(build_SRR(inst, face)[0])
    srrd = value(build_SRRD(inst, face)[0])
    assert srr == pytest.approx(sr, abs=1e-6)
    assert srrd == pytest.approx(srr, abs=1e-6)


def test_SRR_size_and_strict_feasibility():
    for seed in range(6):
        inst = random_bounded_instance(3, 2, seed % 3, seed)
        face = face_of(inst)
        prog, vmap = build_SRR(inst, face)
        k = inst.n - inst.p + 1
        assert prog.psd_block_sizes == [k]
        T = np.diag(np.r_[1.0, np.full(k - 1, 1e-3)])
        v = vmap.point(prog.num_vars, T=T)
        assert min(-prog.group_values(v, "1_primal_ineq")) > 0
        upper = np.triu_indices(inst.m)
        assert min(prog.group_values(v, "4_ineq_products")[upper]) > 0


def test_SRRD_without_inequalities():
    inst = QpInstance(np.eye(2), [1.0, -1.0], np.zeros((2, 0)), [],
                      np.array([[1.0], [0.0]]), [0.5])
    prog, vmap = build_SRRD(inst, face_of(inst))
    res = solve(prog)
    assert res.status is Status.OPTIMAL
    assert_allclose(vmap.value(res.primal, "b"), inst.c, atol=1e-9)
    assert_allclose(vmap.value(res.primal, "B"), inst.Q, atol=1e-9)


def test_kkt_rank_one_embedding():
    for seed in range(8):
        inst = random_bounded_instance(2, 0, seed % 2, seed)
        for pt in find_kkt_points_smallscale(inst):
            w = np.concatenate([[1.0], pt.x, pt.y, pt.z])
            W = np.outer(w, w)
            prog, vmap = build_Rplus(inst)
            n, m, p = inst.n, inst.m, inst.p
            v = vmap.point(prog.num_vars, x=pt.x, y=pt.y, z=pt.z,
                           X=W[1:1 + n, 1:1 + n],
                           Y=W[1 + n:1 + n + m, 1 + n:1 + n + m],
                           Z=W[1 + n + m:, 1 + n + m:],
                           M_xy=W[1:1 + n, 1 + n:1 + n + m],
                           M_xz=W[1:1 + n, 1 + n + m:],
                           M_yz=W[1 + n:1 + n + m, 1 + n + m:])
            assert max(prog.violations(v).values()) <= 1e-8
            prog, vmap = build_SRplus(inst)
            Uw = null_space(kkt_face_rows(inst))
            v = vmap.point(prog.num_vars, T=Uw.T @ W @ Uw)
            assert max(prog.violations(v).values()) <= 1e-8


@pytest.mark.parametrize("seed", range(4))
def test_monotone_and_ordering(seed):
    inst = random_bounded_instance(2 + seed % 2, 1, seed % 2, seed)
    r = value(build_R(inst)[0])
    rplus = value(build_Rplus(inst)[0])
    sr = value(build_SR(inst)[0])
    srplus = value(build_SRplus(inst)[0])
    assert r <= rplus + 1e-6 and sr <= srplus + 1e-6
    assert r <= sr + 1e-6


def test_build_dispatch():
    inst = example_family(EX1, 1.0)
    face = face_of(inst)
    for kind in ProblemKind:
        prog, vmap = build(kind, inst, face)
        assert prog.name.lower() == kind.value
        assert kind.needs_face == (kind in (ProblemKind.SRR,
                                            ProblemKind.SRRD))
