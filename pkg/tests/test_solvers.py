from types import SimpleNamespace

import numpy as np
import pytest

from trsketch.exceptions import DimensionError, WrongSolverError
from trsketch.model import TrsInstance, build_projected, generate_instance
from trsketch.projector import sample_projector
from trsketch.solvers import (
    Status,
    fullness,
    kkt_residual,
    lift_and_check,
    solve_ball_qp,
    solve_convex,
    solve_local,
    solve_oracle_small,
)
from trsketch.solvers.grid import grid_search


def _inst(c, A=None, b=None, Q=None, radius=1.0):
    c = np.asarray(c, dtype=float)
    A = np.zeros((0, c.size)) if A is None else np.asarray(A, dtype=float)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float)
    return TrsInstance(c=c, A=A, b=b, Q=Q, radius=radius)


def _independent_kkt(inst, rep):
    # written from the optimality conditions, separately from the library helper
    x, y, mu = rep.solution, rep.multipliers, rep.ball_multiplier
    q = np.zeros((inst.n, inst.n)) if inst.Q is None else inst.Q
    g = 2 * q @ x + inst.c + inst.A.T @ y + mu * x
    slack = inst.A @ x - inst.b
    parts = [np.abs(g).max(), max(0.0, slack.max(initial=0.0)), max(0.0, np.linalg.norm(x) - inst.radius),
             max(0.0, -y.min(initial=0.0)), max(0.0, -mu), np.abs(y * slack).max(initial=0.0),
             abs(mu * (np.linalg.norm(x) - inst.radius))]
    return max(parts)


# ---- ball-constrained QP -------------------------------------------------


def test_ball_qp_linear_closed_form():
    c = np.array([3.0, -4.0])
    rep = solve_ball_qp(np.zeros((2, 2)), c, 2.0)
    np.testing.assert_allclose(rep.solution, -2.0 * c / 5.0, atol=1e-12)
    assert rep.objective == pytest.approx(-10.0, abs=1e-8)
    assert rep.status is Status.OPTIMAL


def test_ball_qp_hard_case():
    rep = solve_ball_qp(np.diag([-1.0, 1.0]), np.zeros(2), 1.0)
    assert rep.objective == pytest.approx(-1.0, abs=1e-8)
    # the sign tie-break makes the first nonzero component positive
    np.testing.assert_allclose(rep.solution, [1.0, 0.0], atol=1e-8)


def test_ball_qp_interior_and_boundary():
    # Q = I, c = (-1, 0): x = -c/2 = (0.5, 0) is interior
    rep = solve_ball_qp(np.eye(2), np.array([-1.0, 0.0]), 1.0)
    np.testing.assert_allclose(rep.solution, [0.5, 0.0], atol=1e-12)
    assert rep.ball_multiplier == pytest.approx(0.0, abs=1e-12)
    # Q = diag(1, 2), c = (-4, 0): (2 + mu) x1 = 4 on the unit sphere gives mu = 2, f = -3
    rep = solve_ball_qp(np.diag([1.0, 2.0]), np.array([-4.0, 0.0]), 1.0)
    np.testing.assert_allclose(rep.solution, [1.0, 0.0], atol=1e-10)
    assert rep.ball_multiplier == pytest.approx(2.0, abs=1e-8)
    assert rep.objective == pytest.approx(-3.0, abs=1e-10)


def test_ball_qp_boundary_equality_case():
    # Q = I, c = (-2, 0): unconstrained minimizer (1, 0) sits on the sphere
    rep = solve_ball_qp(np.eye(2), np.array([-2.0, 0.0]), 1.0)
    np.testing.assert_allclose(rep.solution, [1.0, 0.0], atol=1e-10)
    assert rep.objective == pytest.approx(-1.0, abs=1e-10)


def test_ball_qp_near_hard_case_is_continuous():
    # c slightly off the orthogonal complement of the bottom eigenvector
    for delta in (1e-3, 1e-6, 1e-9):
        rep = solve_ball_qp(np.diag([-1.0, 1.0]), np.array([-delta, 0.0]), 1.0)
        assert rep.objective == pytest.approx(-1.0 - delta, abs=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_ball_qp_matches_coarse_grid_in_six_dimensions(seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((6, 6))
    q, c = (g + g.T) / 4, 0.5 * rng.standard_normal(6)
    problem = SimpleNamespace(Q=q, c=c, A=np.zeros((0, 6)), b=np.zeros(0), radius=1.0)
    ref = grid_search(problem, 0.2)
    rep = solve_ball_qp(q, c, 1.0)
    assert rep.objective <= ref.objective + 1e-9
    assert abs(rep.objective - ref.objective) <= 2e-3


def test_ball_qp_not_worse_than_local():
    rng = np.random.default_rng(11)
    for _ in range(5):
        g = rng.standard_normal((5, 5))
        inst = _inst(rng.standard_normal(5), Q=(g + g.T) / 2)
        glob = solve_ball_qp(inst.Q, inst.c, 1.0)
        loc = solve_local(inst, starts=8, seed=1)
        assert glob.objective <= loc.objective + 1e-9
        assert loc.objective - glob.objective <= 1e-6


# ---- convex path ---------------------------------------------------------


def test_convex_closed_forms():
    assert solve_convex(_inst([-1.0, 0.0])).objective == pytest.approx(-1.0, abs=1e-8)
    rep = solve_convex(_inst([-1.0, 0.0], A=[[1.0, 0.0]], b=[0.5]))
    assert rep.status is Status.OPTIMAL
    assert rep.objective == pytest.approx(-0.5, abs=1e-8)


def test_convex_detects_infeasibility():
    rep = solve_convex(_inst([1.0, 0.0], A=[[1.0, 0.0]], b=[-2.0]))
    assert rep.status is Status.INFEASIBLE
    assert any("Farkas" in line for line in rep.log)


def test_convex_refuses_indefinite_and_bad_tol():
    inst = _inst([1.0, 0.0], Q=np.diag([-1.0, 1.0]))
    with pytest.raises(WrongSolverError, match="solve_local"):
        solve_convex(inst)
    with pytest.raises(ValueError):
        solve_convex(_inst([1.0, 0.0]), tol=1.0)


@pytest.mark.parametrize("model", ["linear", "quadratic"])
def test_convex_report_invariants(model):
    inst = generate_instance(60, 30, model, rank_k=4, seed=2)
    rep = solve_convex(inst, tol=1e-8)
    assert rep.status is Status.OPTIMAL
    assert rep.kkt_residual <= 1e-8
    assert rep.max_linear_violation <= 1e-8 and rep.ball_violation <= 1e-8
    assert rep.objective == pytest.approx(inst.objective(rep.solution), rel=1e-12)
    assert abs(_independent_kkt(inst, rep) - rep.kkt_residual) <= 1e-10


def test_convex_agrees_with_grid_on_small_instances():
    for i in range(8):
        n = 2 + i % 2
        inst = generate_instance(n, 3, "quadratic" if i % 4 < 2 else "linear", rank_k=n, seed=100 + i)
        ref = solve_oracle_small(inst, grid_step=0.01)
        rep = solve_convex(inst)
        assert abs(rep.objective - ref.objective) <= 1e-3


def test_grid_polish_reaches_a_corner_optimum():
    # optimum on the ball with two active halfspaces, where a long projected step
    # needs many alternating-projection sweeps
    inst = generate_instance(3, 3, "linear", seed=526)
    ref = solve_oracle_small(inst, grid_step=0.01)
    rep = solve_convex(inst)
    assert abs(rep.objective - ref.objective) <= 1e-8
    assert np.all(inst.A @ ref.solution <= inst.b + 1e-12)


def test_convex_on_projected_instance():
    inst = generate_instance(80, 20, "linear", seed=5)
    p = sample_projector(80, 10, "orthonormal-rows", seed=1)
    minus = build_projected(inst, p, 0.1, "minus")
    plus = build_projected(inst, p, 0.1, "plus")
    r_minus, r_plus = solve_convex(minus), solve_convex(plus)
    assert r_minus.ok and r_plus.ok
    # the minus set is inside the plus set
    assert r_plus.objective <= r_minus.objective + 1e-9


def test_kkt_residual_helper_zero_at_optimum():
    # min -x1 over x1 <= 0.5 in the unit ball: x = (0.5, 0), y = 1, mu = 0
    res = kkt_residual(None, np.array([-1.0, 0.0]), np.array([[1.0, 0.0]]), np.array([0.5]), 1.0,
                       np.array([0.5, 0.0]), np.array([1.0]), 0.0)
    assert res == pytest.approx(0.0, abs=1e-15)


# ---- local path and grid oracle -----------------------------------------


def test_local_hard_case_and_status():
    inst = _inst([0.0, 0.0], Q=np.diag([-1.0, 1.0]))
    rep = solve_local(inst, starts=4, seed=0)
    assert rep.status is Status.LOCAL_OPTIMAL
    assert rep.objective == pytest.approx(-1.0, abs=1e-7)


def test_local_is_seed_deterministic_and_flags_infeasible():
    inst = generate_instance(10, 5, "quadratic", rank_k=3, seed=2, signature="indefinite")
    a, b = solve_local(inst, seed=4), solve_local(inst, seed=4)
    assert np.array_equal(a.solution, b.solution)
    bad = _inst([1.0, 0.0], A=[[1.0, 0.0]], b=[-2.0], Q=np.diag([-1.0, 1.0]))
    assert solve_local(bad).status is Status.INFEASIBLE
    with pytest.raises(WrongSolverError):
        solve_local(_inst([1.0, 0.0]))


def test_local_matches_grid_on_indefinite_small_instances():
    for seed in range(4):
        inst = generate_instance(3, 4, "quadratic", rank_k=2, seed=seed, signature="indefinite")
        ref = solve_oracle_small(inst, grid_step=0.02)
        rep = solve_local(inst, seed=seed)
        if ref.status is Status.INFEASIBLE:
            continue
        assert rep.objective <= ref.objective + 1e-3


def test_grid_oracle_closed_form_and_refusals():
    rep = solve_oracle_small(_inst([0.0, -1.0]), grid_step=0.01)
    np.testing.assert_allclose(rep.solution, [0.0, 1.0], atol=1e-6)
    assert rep.objective == pytest.approx(-1.0, abs=1e-6)
    with pytest.raises(ValueError):
        solve_oracle_small(_inst(np.ones(4)))
    with pytest.raises(ValueError):
        solve_oracle_small(_inst([1.0, 0.0]), grid_step=0.5)


def test_grid_oracle_infeasible_agrees_with_convex():
    inst = _inst([1.0, 0.0], A=[[1.0, 0.0]], b=[-2.0])
    assert solve_oracle_small(inst, grid_step=0.05).status is Status.INFEASIBLE
    assert solve_convex(inst).status is Status.INFEASIBLE


# ---- fullness -------------------------------------------------------------


def test_fullness_analytic_cases():
    assert fullness(_inst([1.0, 0.0])).r == pytest.approx(1.0, abs=1e-6)
    half = fullness(_inst([1.0, 0.0, 0.0], A=[[1.0, 0.0, 0.0]], b=[0.0]))
    assert half.r == pytest.approx(0.5, abs=1e-6)
    np.testing.assert_allclose(half.center, [-0.5, 0.0, 0.0], atol=1e-6)
    slab = fullness(_inst([1.0, 0.0], A=[[1.0, 0.0], [-1.0, 0.0]], b=[0.3, 0.3]))
    assert slab.r == pytest.approx(0.3, abs=1e-6)
    # cap {x1 <= -0.5}: centre (-t, 0) with 1 - t = t - 0.5, so r = 0.25
    cap = fullness(_inst([1.0, 0.0], A=[[1.0, 0.0]], b=[-0.5]))
    assert cap.r == pytest.approx(0.25, abs=1e-6)


def test_fullness_certifies_its_ball():
    inst = generate_instance(40, 30, seed=6)
    res = fullness(inst)
    assert res.converged
    assert np.all(inst.A @ res.center + res.r <= inst.b + res.residual + 1e-12)
    assert np.linalg.norm(res.center) + res.r <= 1.0 + res.residual + 1e-12


def test_fullness_handles_non_unit_rows():
    assert fullness(_inst([1.0, 0.0], A=[[2.0, 0.0]], b=[0.0])).r == pytest.approx(0.5, abs=1e-6)


def test_fullness_empty_set():
    res = fullness(_inst([1.0, 0.0], A=[[1.0, 0.0]], b=[-1.5]))
    assert res.r == 0.0 and not res.converged


def test_fullness_meets_generator_target_and_is_monotone():
    for seed in range(5):
        inst = generate_instance(30, 20, fullness_target=0.12, seed=seed)
        r_all = fullness(inst).r
        assert r_all >= 0.12 - 1e-6
        fewer = TrsInstance(c=inst.c, A=inst.A[:10], b=inst.b[:10])
        assert fullness(fewer).r >= r_all - 1e-7


# ---- lifting ----------------------------------------------------------------


def test_lift_of_zero_and_dimension_checks():
    inst = generate_instance(20, 5, seed=1)
    p = sample_projector(20, 4, seed=0)
    res = lift_and_check(inst, p, np.zeros(4))
    assert res.feasible == bool(np.all(inst.b >= 0))
    assert res.objective_in_original == 0.0
    with pytest.raises(DimensionError):
        lift_and_check(inst, p, np.zeros(5))


def test_orthonormal_lift_of_minus_solution_is_feasible():
    inst = generate_instance(100, 30, seed=3)
    p = sample_projector(100, 15, "orthonormal-rows", seed=3)
    rep = solve_convex(build_projected(inst, p, 0.1, "minus"))
    res = lift_and_check(inst, p, rep)
    assert res.feasible
    assert res.objective_in_original == pytest.approx(rep.objective, rel=1e-10)
