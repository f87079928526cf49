"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line with the measured numbers
(run with `pytest -s` to see them on success).  Tolerances are pinned
here and nowhere else.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from robowalk.human import (
    COORD_INDEX,
    NDOF,
    BodyParams,
    GeneralizedCoordinates,
    GeneralizedState,
    build_default_human,
    cog,
    detect_contact,
    forward_kinematics,
    point_jacobian,
    standing_state,
)
from robowalk.dynamics import (
    joint_loads,
    rnea,
    solve_dsp,
    solve_ssp,
    verify_newton_vs_rnea,
)
from robowalk.gait import (
    GaitTrajectory,
    run_simulation,
    synthesize_gait,
)
from robowalk.robot import (
    LegMode,
    RobotParams,
    derive_geometry,
    inverse_kinematics,
    leg_dynamics,
    leg_forward,
    solve_leg_state,
)
from robowalk.optimizer import (
    CostWeights,
    GaitCostContext,
    PsoConfig,
    Strategy,
    cost_strategy2,
    cost_strategy3,
    optimize,
    pso_minimize,
)

HUMAN = build_default_human()
G = 9.81
HUMAN_WEIGHT = 75.14 * G          # 737.1234 N
SYSTEM_WEIGHT = (75.14 + 8.0) * G  # 815.6034 N


def report(criterion, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def gait():
    return synthesize_gait(HUMAN)


@pytest.fixture(scope="module")
def left_window(gait):
    idx = gait.ssp_indices("left")
    return gait.window(idx[0], idx[-1] + 1)


def static_ssp_state():
    q = standing_state(HUMAN).q.values.copy()
    q[COORD_INDEX["q_kR"]] = -0.6
    q[COORD_INDEX["q_aR"]] = 0.6
    return GeneralizedState.static(GeneralizedCoordinates(q))


def test_criterion_1_newton_vs_rnea():
    t0 = time.perf_counter()
    rep = verify_newton_vs_rnea(HUMAN, samples=100, seed=1)
    elapsed = time.perf_counter() - t0
    ok = rep.max_error <= 1e-10 and elapsed < 2.0
    report(1, ok, f"Newton-vs-RNEA max discrepancy {rep.max_error:.3e} "
                  f"(<= 1e-10) over 100 random states in {elapsed:.2f} s (< 2 s)")


def test_criterion_2_static_equilibrium_without_robot():
    state = static_ssp_state()
    sol = solve_ssp(HUMAN, state)
    fx, fz, _ = sol.contacts[0].wrench
    loads = joint_loads(HUMAN, state, sol)
    pelvis = float(np.max(np.abs(loads.pelvis)))
    ok = (abs(fz - HUMAN_WEIGHT) <= 1e-6 and abs(fx) <= 1e-8
          and pelvis <= 1e-8)
    report(2, ok, f"static SSP floor F_z {fz:.7f} N vs {HUMAN_WEIGHT:.7f} N "
                  f"(|dF| {abs(fz - HUMAN_WEIGHT):.1e} <= 1e-6), "
                  f"|F_x| {abs(fx):.1e} <= 1e-8, "
                  f"virtual pelvis loads {pelvis:.1e} <= 1e-8")


def test_criterion_3_control_strategy_closure():
    params = RobotParams()
    geo = derive_geometry(params.L, params.R, params.theta_opt, params.theta_R)
    leg = solve_leg_state(params, ((0.0, 0.85), (0, 0), (0, 0)),
                          ((0.08, 0.10), (0, 0), (0, 0)))
    stance = leg_dynamics(params, geo, leg, LegMode.STANCE,
                          p=0.10, w_human=HUMAN_WEIGHT)
    swing = leg_dynamics(params, geo, leg, LegMode.SWING)
    fz_sum = stance.seat_force[1]
    ok = (abs(fz_sum - 0.10 * HUMAN_WEIGHT) <= 1e-9
          and stance.residual <= 1e-9 * (1 + 0.10 * HUMAN_WEIGHT)
          and swing.tm == 0.0)
    report(3, ok, f"stance F_z1+F_z2 {fz_sum:.9f} N vs "
                  f"{0.10 * HUMAN_WEIGHT:.9f} N (residual "
                  f"{stance.residual:.1e} <= 1e-9), swing T_m {swing.tm} == 0")


def test_criterion_4_weight_conservation_with_robot():
    state = static_ssp_state()
    one = GaitTrajectory(0.01, (state,)).with_phases(HUMAN)
    worst = 0.0
    for p in (0.0, 0.10, 0.25, 0.33, 0.50):
        rep = run_simulation(HUMAN, RobotParams(), one, p=p)
        fz = rep.rows[0].contact[1]
        worst = max(worst, abs(fz - SYSTEM_WEIGHT))
    ok = worst <= 1e-6
    report(4, ok, f"static floor F_z with robot = {SYSTEM_WEIGHT:.4f} N for "
                  f"p in [0, 0.5], worst |dF| {worst:.1e} <= 1e-6")


def test_criterion_5_kinematics():
    rng = np.random.default_rng(12)
    params = RobotParams()
    worst_ik = 0.0
    for _ in range(1000):
        anchor = rng.uniform(-1, 1, 2)
        dist = rng.uniform(abs(params.L - params.r) + 1e-3,
                           params.L + params.r - 1e-3)
        ang = rng.uniform(-np.pi, np.pi)
        ankle = anchor + dist * np.array([np.sin(ang), -np.cos(ang)])
        _, _, t1, t2 = inverse_kinematics(params, anchor, ankle)
        _, back = leg_forward(params, anchor, t1, t2)
        worst_ik = max(worst_ik, float(np.linalg.norm(back - ankle)))

    h = 1e-4
    worst_jac = 0.0
    for _ in range(3):
        q = np.concatenate([rng.uniform(-0.3, 0.3, 2) + [0, 0.9],
                            rng.uniform(-0.6, 0.6, 8)])
        qc = GeneralizedCoordinates(q)
        for body, local in (("foot_r", [0.1, -0.05]), ("trunk", [0.0, 0.4])):
            jac = point_jacobian(HUMAN, qc, body, local)
            for j in range(NDOF):
                qp, qm = q.copy(), q.copy()
                qp[j] += h
                qm[j] -= h

                def pose(qq):
                    lk = forward_kinematics(
                        HUMAN, GeneralizedState.static(
                            GeneralizedCoordinates(qq)))[body]
                    return np.array([*lk.world_point(local), lk.angle])

                fd = (pose(qp) - pose(qm)) / (2 * h)
                worst_jac = max(worst_jac, float(np.max(np.abs(jac[:, j] - fd))))
        jc = cog(HUMAN, GeneralizedState.static(qc)).jacobian
        for j in range(NDOF):
            qp, qm = q.copy(), q.copy()
            qp[j] += h
            qm[j] -= h
            fd = (cog(HUMAN, GeneralizedState.static(GeneralizedCoordinates(qp))).position
                  - cog(HUMAN, GeneralizedState.static(GeneralizedCoordinates(qm))).position) / (2 * h)
            worst_jac = max(worst_jac, float(np.max(np.abs(jc[:, j] - fd))))

    # robot 2x2 jacobian of the chain closure vs finite differences
    from robowalk.robot import _leg_jacobian
    for _ in range(5):
        t1 = rng.uniform(-0.8, 0.8)
        t2 = rng.uniform(-2.4, -0.3)
        jac = _leg_jacobian(params, t1, t2)
        for j, (d1, d2) in enumerate(((h, 0.0), (0.0, h))):
            _, fp = leg_forward(params, (0, 0), t1 + d1, t2 + d2)
            _, fm = leg_forward(params, (0, 0), t1 - d1, t2 - d2)
            fd = (fp - fm) / (2 * h)
            worst_jac = max(worst_jac, float(np.max(np.abs(jac[:, j] - fd))))

    ok = worst_ik <= 1e-12 and worst_jac <= 1e-6
    report(5, ok, f"IK/FK round trip worst {worst_ik:.2e} m (<= 1e-12) over "
                  f"1000 targets; worst Jacobian-vs-FD error {worst_jac:.2e} "
                  f"(<= 1e-6)")


def test_criterion_6_dsp_minimum_norm():
    foot = BodyParams(HUMAN.foot_r.mass, HUMAN.foot_r.length, 0.0,
                      HUMAN.foot_r.inertia_cog)
    model = replace(HUMAN, foot_r=foot, foot_l=foot, heel_back=0.125)
    q = standing_state(model).q.values.copy()
    q[COORD_INDEX["q_aR"]] = -np.deg2rad(2.0)
    q[COORD_INDEX["q_aL"]] = np.deg2rad(2.0)
    state = GeneralizedState.static(GeneralizedCoordinates(q))
    sol = solve_dsp(model, state)
    fzl = sol.contact_for("left").wrench[1]
    fzr = sol.contact_for("right").wrench[1]

    # dense pinned-oracle minimality
    from robowalk.dynamics import _contact_jacobian, _D
    contact = detect_contact(model, state.q)
    links = forward_kinematics(model, state)
    jl = _contact_jacobian(model, links, contact.contact_for("left"))
    jr = _contact_jacobian(model, links, contact.contact_for("right"))
    a = np.hstack([_D, jl.T, jr.T])
    b = rnea(model, state)
    x = np.concatenate([sol.tau, sol.contact_for("left").wrench,
                        sol.contact_for("right").wrench])
    rng = np.random.default_rng(6)
    min_ok = True
    for _ in range(50):
        w = rng.uniform(-300, 300, 3)
        rest = np.linalg.solve(np.hstack([_D, jr.T]), b - jl.T @ w)
        feasible = np.concatenate([rest[:7], w, rest[7:]])
        if np.linalg.norm(x) > np.linalg.norm(feasible) + 1e-9:
            min_ok = False
    ok = (sol.residual <= 1e-9 * (1 + model.weight)
          and abs(fzl - fzr) <= 1e-8 and min_ok)
    report(6, ok, f"DSP residual {sol.residual:.1e} <= 1e-9, symmetric split "
                  f"|F_zL - F_zR| {abs(fzl - fzr):.1e} <= 1e-8 "
                  f"({fzl:.4f}/{fzr:.4f} N), min-norm beats 50 pinned "
                  f"solutions: {min_ok}")


def test_criterion_7_derived_geometry_tables():
    cases = (
        ("design A", 0.45, 0.51, 28.4, 0.24, 0.47),
        ("design B", 0.30, 0.32, 20.0, 0.11, 0.26),
        ("design C", 0.44, 0.30, 34.0, 0.26, 0.40),
    )
    worst = 0.0
    rows = []
    for name, l, arc, topt_deg, exp1, exp2 in cases:
        geo = derive_geometry(l, arc, np.deg2rad(topt_deg), np.deg2rad(30.0))
        worst = max(worst, abs(geo.ll1 - exp1), abs(geo.ll2 - exp2))
        rows.append(f"{name} ll=({geo.ll1:.3f},{geo.ll2:.3f}) vs "
                    f"({exp1},{exp2})")
    ok = worst <= 0.01
    report(7, ok, f"derived geometry with theta_R=30deg: {'; '.join(rows)}; "
                  f"worst |d| {worst:.4f} <= 0.01 m")


def test_criterion_8_pso_sanity():
    t0 = time.perf_counter()
    sphere = pso_minimize(lambda x: float(x @ x), None,
                          PsoConfig(population=30, max_iterations=200, seed=1),
                          lo=[-5.0] * 4, hi=[5.0] * 4)
    rosen = pso_minimize(
        lambda x: float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2),
        None, PsoConfig(population=40, max_iterations=500, seed=1),
        lo=[-5.0] * 2, hi=[5.0] * 2)
    same_a = pso_minimize(lambda x: float(x @ x), None,
                          PsoConfig(population=12, max_iterations=30, seed=7),
                          lo=[-5.0] * 3, hi=[5.0] * 3)
    same_b = pso_minimize(lambda x: float(x @ x), None,
                          PsoConfig(population=12, max_iterations=30, seed=7,
                                    workers=4),
                          lo=[-5.0] * 3, hi=[5.0] * 3)
    elapsed = time.perf_counter() - t0
    identical = (np.array_equal(same_a.cost_history, same_b.cost_history)
                 and np.array_equal(same_a.best_params, same_b.best_params))
    ok = (sphere.best_cost <= 1e-6 and rosen.best_cost <= 1e-3
          and identical and elapsed < 10.0)
    report(8, ok, f"sphere(4D) {sphere.best_cost:.2e} <= 1e-6, "
                  f"Rosenbrock(2D) {rosen.best_cost:.2e} <= 1e-3, "
                  f"seed-identical across 1/4 workers: {identical}, "
                  f"{elapsed:.1f} s (< 10 s)")


def test_criterion_9_end_to_end_optimization(left_window):
    assert left_window.n_data == 54, "experiment needs 54 SSP samples"
    t0 = time.perf_counter()
    ctx = GaitCostContext(HUMAN, left_window, p=0.33)
    baseline = RobotParams()  # L = r = 0.55, R = 0.20 intuitive design
    weights = CostWeights()
    base_design = np.array([baseline.L, baseline.r, baseline.R,
                            baseline.theta_opt])
    base_peak_tm = max(abs(s.tm_stance)
                       for s in ctx.evaluate_design(base_design))
    base_cost2 = cost_strategy2(left_window, HUMAN, baseline, weights,
                                context=ctx)
    base_cost3 = cost_strategy3(left_window, HUMAN, baseline, weights,
                                context=ctx)

    cfg2 = PsoConfig(population=24, max_iterations=100, seed=7)
    res2 = optimize(Strategy.WHOLE_GAIT, left_window, HUMAN, weights=weights,
                    config=cfg2)
    cfg3 = PsoConfig(population=24, max_iterations=100, seed=11)
    res3 = optimize(Strategy.HUMAN_IN_LOOP, left_window, HUMAN,
                    weights=weights, config=cfg3)
    peak2 = max(abs(s.tm_stance) for s in ctx.evaluate_design(res2.best_params))
    peak3 = max(abs(s.tm_stance) for s in ctx.evaluate_design(res3.best_params))
    elapsed = time.perf_counter() - t0

    ok = (res2.best_cost < base_cost2 and res3.best_cost < base_cost3
          and peak2 <= 0.7 * base_peak_tm and peak3 <= 0.7 * base_peak_tm
          and elapsed < 300.0)
    report(9, ok,
           f"54-sample campaign: strategy-2 cost {res2.best_cost:.0f} < "
           f"baseline {base_cost2:.0f}; strategy-3 cost {res3.best_cost:.0f} "
           f"< baseline {base_cost3:.0f}; peak |T_m| {base_peak_tm:.1f} -> "
           f"{peak2:.1f}/{peak3:.1f} N m "
           f"({100 * (1 - peak2 / base_peak_tm):.0f}%/"
           f"{100 * (1 - peak3 / base_peak_tm):.0f}% cut, >= 30%); "
           f"{elapsed:.0f} s (< 300 s)")


def test_criterion_10_assist_effect(gait):
    bare = run_simulation(HUMAN, None, gait)
    assisted = run_simulation(HUMAN, RobotParams(), gait, p=0.33)
    peak_bare = bare.peak_stance_knee_compression()
    peak_assisted = assisted.peak_stance_knee_compression()
    ok = peak_assisted < peak_bare
    report(10, ok, f"peak stance-knee compression with robot "
                   f"{peak_assisted:.1f} N < without {peak_bare:.1f} N "
                   f"(p = 0.33, synthetic gait)")
