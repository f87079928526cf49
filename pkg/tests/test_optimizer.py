"""PSO correctness on standard functions and the three design-cost
strategies with their replay oracles."""

import numpy as np
import pytest

from robowalk.human import build_default_human
from robowalk.gait import run_simulation, synthesize_gait
from robowalk.robot import RobotParams
from robowalk.optimizer import (
    CostWeights,
    EvaluatedSample,
    GaitCostContext,
    OptimizerError,
    ParameterBounds,
    PsoConfig,
    Strategy,
    cost_strategy1,
    cost_strategy2,
    cost_strategy3,
    fit_check,
    optimize,
    pso_minimize,
)

MODEL = build_default_human()


@pytest.fixture(scope="module")
def left_window():
    gait = synthesize_gait(MODEL)
    idx = gait.ssp_indices("left")
    return gait.window(idx[0], idx[-1] + 1)


@pytest.fixture(scope="module")
def short_window(left_window):
    return left_window.window(10, 22)


def sphere(x):
    return float(x @ x)


def rosenbrock(x):
    return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)


# -- PSO ----------------------------------------------------------------------

def test_pso_sphere_four_dim():
    res = pso_minimize(sphere, None,
                       PsoConfig(population=30, max_iterations=200, seed=1),
                       lo=[-5.0] * 4, hi=[5.0] * 4)
    assert res.best_cost <= 1e-6
    assert res.evaluations == 30 * 201


def test_pso_rosenbrock_two_dim():
    res = pso_minimize(rosenbrock, None,
                       PsoConfig(population=40, max_iterations=500, seed=1),
                       lo=[-5.0] * 2, hi=[5.0] * 2)
    assert res.best_cost <= 1e-3


def test_pso_same_seed_bitwise_identical():
    cfg = PsoConfig(population=15, max_iterations=40, seed=9)
    a = pso_minimize(sphere, None, cfg, lo=[-3.0] * 3, hi=[3.0] * 3)
    b = pso_minimize(sphere, None, cfg, lo=[-3.0] * 3, hi=[3.0] * 3)
    assert np.array_equal(a.cost_history, b.cost_history)
    assert np.array_equal(a.param_history, b.param_history)
    assert a.best_cost == b.best_cost


def test_pso_worker_count_invariance():
    kw = dict(population=12, max_iterations=25, seed=4)
    a = pso_minimize(sphere, None, PsoConfig(**kw, workers=1),
                     lo=[-2.0] * 4, hi=[2.0] * 4)
    b = pso_minimize(sphere, None, PsoConfig(**kw, workers=4),
                     lo=[-2.0] * 4, hi=[2.0] * 4)
    assert np.array_equal(a.cost_history, b.cost_history)
    assert np.array_equal(a.best_params, b.best_params)


def test_pso_history_monotone_and_bounded():
    res = pso_minimize(rosenbrock, None,
                       PsoConfig(population=10, max_iterations=60, seed=3),
                       lo=[-2.0, -1.0], hi=[2.0, 3.0])
    assert np.all(np.diff(res.cost_history) <= 0.0)
    for x in res.param_history:
        assert np.all(x >= [-2.0, -1.0]) and np.all(x <= [2.0, 3.0])


def test_pso_all_nonfinite_initialization_raises():
    with pytest.raises(OptimizerError):
        pso_minimize(lambda x: float("nan"), None,
                     PsoConfig(population=5, max_iterations=3, seed=0),
                     lo=[0.0], hi=[1.0])


def test_config_validation():
    with pytest.raises(OptimizerError):
        PsoConfig(population=1)
    with pytest.raises(OptimizerError):
        ParameterBounds(L=(0.5, 0.4))
    with pytest.raises(OptimizerError):
        CostWeights(w1=0.0, w2=0.0, w3=0.0)
    with pytest.raises(OptimizerError):
        CostWeights(w_penalty=-1.0)


# -- strategy 1 ---------------------------------------------------------------

def test_strategy1_zero_cost():
    s = EvaluatedSample(True, 0.0, f_horizontal=0.0, tm_stance=0.0)
    assert cost_strategy1(s, CostWeights()) == 0.0


def test_strategy1_reference_sample_values():
    # reference operating point: F_hor 11.1 N, T_m -8.8 N m, unit weights
    s = EvaluatedSample(True, 0.0, f_horizontal=11.1, tm_stance=-8.8)
    assert cost_strategy1(s, CostWeights(1.0, 1.0)) == pytest.approx(19.9)


def test_strategy1_linear_in_w1():
    s = EvaluatedSample(True, 0.0, f_horizontal=7.0, tm_stance=-3.0)
    c1 = cost_strategy1(s, CostWeights(1.0, 1.0))
    c2 = cost_strategy1(s, CostWeights(2.0, 1.0))
    assert c2 - c1 == pytest.approx(7.0)


def test_strategy1_infeasible_penalty():
    s = EvaluatedSample(False, 0.05)
    assert cost_strategy1(s, CostWeights(w_penalty=1e4)) == pytest.approx(500.0)


# -- strategies 2 and 3 -------------------------------------------------------

def test_strategy2_single_sample_degenerate(short_window):
    one = short_window.window(0, 1)
    ctx = GaitCostContext(MODEL, one, p=0.33)
    params = RobotParams()
    w = CostWeights()
    total = cost_strategy2(one, MODEL, params, w, context=ctx)
    design = np.array([params.L, params.r, params.R, params.theta_opt])
    per = cost_strategy1(ctx.evaluate_design(design)[0], w)
    assert total == pytest.approx(per, rel=1e-15)


def test_strategy2_brute_force_summation_oracle(short_window):
    ctx = GaitCostContext(MODEL, short_window, p=0.33)
    params = RobotParams()
    w = CostWeights(0.7, 1.3)
    total = cost_strategy2(short_window, MODEL, params, w, context=ctx)
    design = np.array([params.L, params.r, params.R, params.theta_opt])
    brute = 0.0
    for s in ctx.evaluate_design(design):
        brute += cost_strategy1(s, w)
    assert total == pytest.approx(brute, rel=1e-12)


def test_strategy2_k_identical_samples(short_window):
    from robowalk.gait import GaitTrajectory
    k = 7
    one = short_window.samples[3]
    tag = short_window.phases[3]
    repeated = GaitTrajectory(short_window.dt, (one,) * k, (tag,) * k)
    params = RobotParams()
    w = CostWeights()
    single = cost_strategy2(repeated.window(0, 1), MODEL, params, w)
    total = cost_strategy2(repeated, MODEL, params, w)
    assert total == pytest.approx(k * single, rel=1e-12)


def test_strategy3_null_robot_zero_motor_cost(short_window):
    ghost = RobotParams(m1=1e-12, m2=1e-12)
    cost = cost_strategy3(short_window, MODEL, ghost,
                          CostWeights(0.0, 1.0, 1.0), p=0.0)
    assert cost <= 1e-9


def test_strategy3_knee_replay_oracle(short_window):
    # weights (1,0,0) against the stance knee torques from the full
    # simulation pipeline
    params = RobotParams()
    w = CostWeights(1.0, 0.0, 0.0)
    # w3=0 allowed since w1 > 0
    total = cost_strategy3(short_window, MODEL, params, w, p=0.33)
    report = run_simulation(MODEL, params, short_window, p=0.33)
    replay = 0.0
    for row in report.rows:
        knee = row.tau[2] if row.stance == "right" else row.tau[5]
        replay += abs(knee)
    assert total == pytest.approx(replay, rel=1e-12)


def test_strategy3_equivalence_to_strategy2_on_motor_terms(short_window):
    ctx = GaitCostContext(MODEL, short_window, p=0.33)
    rng = np.random.default_rng(2)
    for _ in range(3):
        design = [rng.uniform(0.35, 0.7), rng.uniform(0.35, 0.7),
                  rng.uniform(0.15, 0.5), rng.uniform(0.2, 0.9)]
        pp = RobotParams().with_design(*design)
        c3 = cost_strategy3(short_window, MODEL, pp,
                            CostWeights(0.0, 0.8, 0.8), context=ctx)
        c2 = cost_strategy2(short_window, MODEL, pp,
                            CostWeights(0.0, 0.8), context=ctx)
        assert c3 == pytest.approx(c2, rel=1e-12, abs=1e-12)


def test_penalty_monotone_for_infeasible(short_window):
    ctx = GaitCostContext(MODEL, short_window, p=0.33)
    unreachable = RobotParams().with_design(0.26, 0.26, 0.2, 0.5)
    costs = [cost_strategy3(short_window, MODEL, unreachable,
                            CostWeights(1, 1, 1, wp), context=ctx)
             for wp in (1e2, 1e3, 1e4)]
    assert costs[0] < costs[1] < costs[2]


# -- fit check ----------------------------------------------------------------

def test_fit_check_default_robot(left_window):
    ok, violation = fit_check(RobotParams(), MODEL, left_window)
    assert ok
    assert violation == 0.0


def test_fit_check_unreachable(left_window):
    ok, violation = fit_check(RobotParams(L=0.26, r=0.26), MODEL, left_window)
    assert not ok
    assert violation > 0.0


def test_fit_check_exact_boundary(left_window):
    # legs sized so the farthest target sits exactly at full extension
    ctx = GaitCostContext(MODEL, left_window)
    dist = max(np.linalg.norm(p.ankle_kin[side][0] - p.anchor_kin[0])
               for p in ctx.samples for side in ("left", "right"))
    params = RobotParams(L=dist / 2, r=dist / 2)
    ok, violation = fit_check(params, MODEL, left_window)
    assert not ok  # the reach margin excludes the boundary itself
    assert violation > 0.0


# -- campaigns ----------------------------------------------------------------

def test_optimize_per_sample_record_count(short_window):
    cfg = PsoConfig(population=6, max_iterations=4, seed=2)
    results = optimize(Strategy.PER_SAMPLE, short_window, MODEL, config=cfg)
    assert len(results) == short_window.n_data
    for res in results:
        assert np.all(np.diff(res.cost_history) <= 0.0)


def test_optimize_whole_gait_beats_intuitive_baseline(short_window):
    w = CostWeights()
    cfg = PsoConfig(population=12, max_iterations=20, seed=5)
    res = optimize(Strategy.WHOLE_GAIT, short_window, MODEL,
                   weights=w, config=cfg)
    baseline = RobotParams()  # intuitive default design
    base_cost = cost_strategy2(short_window, MODEL, baseline, w)
    assert res.best_cost < base_cost


def test_optimize_deterministic(short_window):
    cfg = PsoConfig(population=8, max_iterations=6, seed=13)
    a = optimize(Strategy.WHOLE_GAIT, short_window, MODEL, config=cfg)
    b = optimize(Strategy.WHOLE_GAIT, short_window, MODEL, config=cfg)
    assert np.array_equal(a.cost_history, b.cost_history)
    assert np.array_equal(a.best_params, b.best_params)


def test_optimize_requires_ssp_samples():
    static = synthesize_gait(MODEL, step_length=0.0)
    with pytest.raises(OptimizerError):
        optimize(Strategy.WHOLE_GAIT, static, MODEL,
                 config=PsoConfig(population=4, max_iterations=2, seed=0))
