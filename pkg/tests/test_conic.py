import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qprelax.builders import build_R, build_RD, build_SR
from qprelax.conic import (ProgramBuilder, SolveOptions, Status,
                           brute_force_lp, brute_force_lp_value, dump_program,
                           solve, verify_ray)
from qprelax.conic.polish import polish
from qprelax.errors import TooLarge
from qprelax.extreal import NEG
from qprelax.instances import QpInstance, random_bounded_instance

solve_module = sys.modules["qprelax.conic.solve"]


def scalar_lp(sign):
    bld = ProgramBuilder("lp")
    x = bld.variable("x")
    bld.add_ge("x_nonneg", x)
    bld.minimize(sign * x)
    return bld.build()[0]


def test_lp_optimal_and_unbounded():
    res = solve(scalar_lp(1.0))
    assert res.status is Status.OPTIMAL
    assert float(res.value) == pytest.approx(0.0)
    res = solve(scalar_lp(-1.0))
    assert res.status is Status.UNBOUNDED
    assert res.value == NEG
    cert = res.certificate
    assert cert["kind"] == "ray" and cert["slope"] <= -1e-9
    assert verify_ray(scalar_lp(-1.0), cert["ray"], 1e-9)


def test_lp_infeasible():
    bld = ProgramBuilder("lp")
    x = bld.variable("x")
    bld.add_ge("lo", x, 1.0)
    bld.add_le("hi", x, 0.0)
    bld.minimize(x)
    res = solve(bld.build()[0])
    assert res.status is Status.INFEASIBLE
    assert res.certificate["kind"] == "phase_one"


def test_psd_example():
    bld = ProgramBuilder("sdp")
    X = bld.psd_block("X", 2)
    bld.add_eq("corner", X[0, 0], 1.0)
    bld.minimize(X[0, 0] + X[1, 1])
    prog, vmap = bld.build()
    res = solve(prog)
    assert res.status is Status.OPTIMAL
    assert float(res.value) == pytest.approx(1.0, abs=1e-7)
    assert res.residuals["gap"] <= 1e-6


def test_psd_unbounded_and_infeasible():
    # X01 -> -inf as X11 grows, yet no improving ray exists (a PSD ray with
    # zero corner has zero off-diagonal); without a certificate the solver
    # must not claim unboundedness, nor an optimum
    bld = ProgramBuilder("sdp")
    X = bld.psd_block("X", 2)
    bld.add_eq("corner", X[0, 0], 1.0)
    bld.minimize(X[0, 1])
    assert solve(bld.build()[0]).status is Status.NUMERICAL_FAILURE
    bld = ProgramBuilder("sdp")
    X = bld.psd_block("X", 2)
    bld.add_eq("corner", X[0, 0], 1.0)
    bld.minimize(-X[1, 1])
    res = solve(bld.build()[0])
    assert res.status is Status.UNBOUNDED
    assert res.certificate["slope"] < 0
    bld = ProgramBuilder("sdp")
    X = bld.psd_block("X", 2)
    bld.add_eq("corner", X[0, 0], -1.0)
    bld.minimize(X[1, 1])
    res = solve(bld.build()[0])
    assert res.status is Status.INFEASIBLE
    assert res.certificate["kind"] == "farkas"


def test_brute_force_examples():
    # min -X/2 over the RLT products of 0 <= x <= 1
    inst = QpInstance([[-1.0]], [0.0], [[1.0, -1.0]], [1.0, 0.0],
                      np.zeros((1, 0)), [])
    prog, vmap = build_R(inst)
    value, point = brute_force_lp(prog)
    assert value == pytest.approx(-0.5)
    assert_allclose(vmap.value(point, "x"), [1.0])
    assert_allclose(vmap.value(point, "X"), [[1.0]])
    bld = ProgramBuilder("t")
    x = bld.variable("x")
    bld.add_ge("lo", x, 3.0)
    bld.minimize(x)
    assert float(brute_force_lp_value(bld.build()[0])) == pytest.approx(3.0)
    assert brute_force_lp_value(scalar_lp(-1.0)) == NEG


def test_brute_force_limits():
    inst = random_bounded_instance(4, 2, 0, 0)
    with pytest.raises(TooLarge):
        brute_force_lp(build_R(inst)[0])
    with pytest.raises(TooLarge):
        brute_force_lp(build_SR(random_bounded_instance(1, 0, 0, 0))[0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_lp_oracle_agreement(nv, rows, seed):
    rng = np.random.default_rng(seed)
    bld = ProgramBuilder("rand")
    v = bld.variable("v", nv)
    A = rng.integers(-3, 4, size=(rows, nv)).astype(float)
    b = rng.integers(-2, 4, size=rows).astype(float)
    bld.add_le("rows", A @ v, b)
    bld.minimize(rng.integers(-2, 3, size=nv).astype(float) @ v)
    prog = bld.build()[0]
    res = solve(prog)
    ref = brute_force_lp_value(prog)
    assert res.status is not Status.NUMERICAL_FAILURE
    if ref.is_finite:
        assert res.status is Status.OPTIMAL
        assert float(res.value) == pytest.approx(float(ref), abs=1e-6)
    else:
        assert res.value == ref


def test_weak_duality_random_samples():
    rng = np.random.default_rng(5)
    inst = random_bounded_instance(2, 1, 0, 11)
    rd, rd_map = build_RD(inst)
    dual_res = solve(rd)
    assert dual_res.status is Status.OPTIMAL
    dual_val = float(dual_res.value)
    prog, vmap = build_R(inst)
    for _ in range(50):
        x = rng.uniform(-1, 1, inst.n)
        if not inst.is_feasible(x):
            continue
        X = np.outer(x, x)
        v = vmap.point(prog.num_vars, x=x, X=X)
        assert max(prog.violations(v).values()) <= 1e-12
        assert prog.objective_value(v) >= dual_val - 1e-9


def test_polish_reaches_exact_complementarity():
    inst = random_bounded_instance(3, 2, 1, 9)
    prog, _ = build_SR(inst)
    raw = solve(prog, SolveOptions(polish=False))
    v, lam, mu, mats, res = polish(prog, raw)
    V = prog.block_matrix(v, prog.psd_blocks[0])
    assert np.abs(V @ mats[0]).max() <= 1e-12
    assert res["primal_feas"] <= 1e-12 and res["dual_feas"] <= 1e-12
    polished = solve(prog)
    assert "polished" in polished.message
    assert float(polished.value) == pytest.approx(float(raw.value), abs=1e-7)


def test_dump_program(tmp_path):
    prog, _ = build_R(random_bounded_instance(2, 0, 0, 1))
    path = tmp_path / "r.txt"
    dump_program(prog, path)
    text = path.read_text()
    assert "[4_ineq_products] (ge, 10 rows)" in text
    assert "X[0,1]" in text


def test_clarabel_attempts_fall_through(monkeypatch):
    calls = []
    real = solve_module._conic_attempt

    def flaky(prog, opts, overrides):
        calls.append(overrides)
        if len(calls) == 1:
            return solve_module.SolveResult(Status.NUMERICAL_FAILURE, np.nan,
                                            message="forced")
        return real(prog, opts, overrides)

    monkeypatch.setattr(solve_module, "_conic_attempt", flaky)
    res = solve(build_SR(random_bounded_instance(2, 0, 0, 2))[0])
    assert res.status is Status.OPTIMAL and len(calls) == 2
