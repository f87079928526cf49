"""Constrained particle swarm optimization of the robot design vector
[L, r, R, theta_opt] under three cost strategies:

  1. per-gait-sample: |horizontal assist| + |stance motor torque|;
  2. whole-gait: strategy-1 terms summed over the single-support samples
     for one fixed design;
  3. human-model-in-the-loop: |stance knee actuation torque| from the
     full augmented inverse dynamics plus both motor torques, summed
     over the gait.

Box bounds are enforced by reflection; reach/geometry infeasibility is a
weighted additive penalty, never an exception.  Per-particle random
streams derive from (seed, iteration, particle), so results are
independent of evaluation order and worker count.
"""

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gait import (
    GaitTrajectory,
    PreparedSample,
    hri_generalized_load,
    prepare_ssp_samples,
    sample_reach_violation,
    solve_robot_sample,
)
from .human import HumanModel
from .robot import (
    GEOMETRY_EPS,
    GeometryError,
    RobotError,
    RobotParams,
    derive_geometry,
)

DESIGN_NAMES = ("L", "r", "R", "theta_opt")

# penalty magnitude charged when the leg solve itself fails inside the
# feasible reach annulus (razor-thin singular band)
SOLVE_FAILURE_VIOLATION = 0.01


class OptimizerError(RuntimeError):
    pass


class Strategy(enum.Enum):
    PER_SAMPLE = "PER_SAMPLE"
    WHOLE_GAIT = "WHOLE_GAIT"
    HUMAN_IN_LOOP = "HUMAN_IN_LOOP"


@dataclass(frozen=True)
class ParameterBounds:
    L: tuple = (0.25, 0.80)
    r: tuple = (0.25, 0.80)
    R: tuple = (0.10, 0.60)
    theta_opt: tuple = (np.deg2rad(5.0), np.deg2rad(60.0))

    def __post_init__(self):
        for name in DESIGN_NAMES:
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise OptimizerError(f"bounds for {name} need min < max")

    def arrays(self):
        lo = np.array([getattr(self, n)[0] for n in DESIGN_NAMES])
        hi = np.array([getattr(self, n)[1] for n in DESIGN_NAMES])
        return lo, hi


@dataclass(frozen=True)
class CostWeights:
    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0
    w_penalty: float = 1e4

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3, self.w_penalty) < 0:
            raise OptimizerError("weights must be non-negative")
        if self.w1 == self.w2 == self.w3 == 0:
            raise OptimizerError("at least one objective weight must be positive")


@dataclass(frozen=True)
class PsoConfig:
    population: int = 40
    max_iterations: int = 300
    inertia: float = 0.729
    cognitive: float = 1.494
    social: float = 1.494
    seed: int = 0
    velocity_clamp: float = 0.5   # fraction of the per-dimension range
    workers: int = 1

    def __post_init__(self):
        if self.population < 2:
            raise OptimizerError("population must be at least 2")
        if min(self.inertia, self.cognitive, self.social) < 0:
            raise OptimizerError("PSO coefficients must be non-negative")


@dataclass(frozen=True)
class OptimizationResult:
    best_params: np.ndarray      # design vector at the recorded optimum
    best_cost: float
    cost_history: np.ndarray     # per-iteration global best (non-increasing)
    param_history: np.ndarray    # per-iteration best design vectors
    evaluations: int


# ---------------------------------------------------------------------------
# generic PSO


def _reflect(x, v, lo, hi):
    for _ in range(8):
        below, above = x < lo, x > hi
        if not (below.any() or above.any()):
            return x, v
        x = np.where(below, 2 * lo - x, x)
        x = np.where(above, 2 * hi - x, x)
        v = np.where(below | above, -v, v)
    return np.clip(x, lo, hi), v


def pso_minimize(cost, bounds: ParameterBounds, config: PsoConfig,
                 lo=None, hi=None) -> OptimizationResult:
    """Global-best PSO over a box; deterministic for a given seed.

    `bounds` may be None when lo/hi arrays are given directly (used by the
    self-tests on standard functions).
    """
    if bounds is not None:
        lo, hi = bounds.arrays()
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    dim = lo.size
    span = hi - lo
    vmax = config.velocity_clamp * span
    n = config.population

    def evaluate(xs):
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                vals = list(pool.map(cost, xs))
        else:
            vals = [cost(x) for x in xs]
        return np.array([v if np.isfinite(v) else np.inf for v in vals])

    x = np.empty((n, dim))
    v = np.empty((n, dim))
    for i in range(n):
        rng = np.random.default_rng((config.seed, 0, i))
        x[i] = lo + rng.random(dim) * span
        v[i] = (2.0 * rng.random(dim) - 1.0) * vmax
    fx = evaluate(x)
    if not np.any(np.isfinite(fx)):
        raise OptimizerError("cost non-finite for every initial particle")
    pbest = x.copy()
    fbest = fx.copy()
    g = int(np.argmin(fbest))
    gbest, fgbest = pbest[g].copy(), float(fbest[g])

    cost_history = [fgbest]
    param_history = [gbest.copy()]
    evaluations = n

    for it in range(1, config.max_iterations + 1):
        for i in range(n):
            rng = np.random.default_rng((config.seed, it, i))
            r1 = rng.random(dim)
            r2 = rng.random(dim)
            v[i] = (config.inertia * v[i]
                    + config.cognitive * r1 * (pbest[i] - x[i])
                    + config.social * r2 * (gbest - x[i]))
            v[i] = np.clip(v[i], -vmax, vmax)
            x[i], v[i] = _reflect(x[i] + v[i], v[i], lo, hi)
        fx = evaluate(x)
        evaluations += n
        improved = fx < fbest
        pbest[improved] = x[improved]
        fbest[improved] = fx[improved]
        g = int(np.argmin(fbest))
        if fbest[g] < fgbest:
            gbest, fgbest = pbest[g].copy(), float(fbest[g])
        cost_history.append(fgbest)
        param_history.append(gbest.copy())

    return OptimizationResult(gbest, fgbest, np.array(cost_history),
                              np.array(param_history), evaluations)


# ---------------------------------------------------------------------------
# gait cost evaluation


@dataclass(frozen=True)
class EvaluatedSample:
    """One gait sample under one candidate design."""

    feasible: bool
    violation: float          # reach / geometry violation magnitude [m]
    f_horizontal: float = 0.0  # stance-leg horizontal assist on the user
    tm_left: float = 0.0
    tm_right: float = 0.0
    tm_stance: float = 0.0
    knee_torque: float = 0.0   # stance knee actuation torque (strategy 3)


def geometry_violation(L, R, theta_opt, theta_R):
    """How far the bearing triangles are from degeneracy (0 when sound)."""
    worst = 0.0
    for delta in (theta_opt, theta_opt + theta_R):
        ll = np.sqrt(max(L * L + R * R - 2 * L * R * np.cos(delta), 0.0))
        worst = max(worst, GEOMETRY_EPS - ll)
    return max(0.0, worst)


class GaitCostContext:
    """Precomputed per-sample kinematics/dynamics shared by every cost
    evaluation over one gait (the design-independent part of the pipeline)."""

    def __init__(self, human: HumanModel, gait: GaitTrajectory, p=0.33,
                 base_params: RobotParams = None):
        if gait.phases is None:
            gait = gait.with_phases(human)
        self.human = human
        self.gait = gait
        self.p = p
        self.base_params = base_params if base_params is not None else RobotParams()
        self.samples = prepare_ssp_samples(human, gait, self.base_params)
        if not self.samples:
            raise OptimizerError("gait contains no single-support samples")
        self.w_human = human.weight

    def params_for(self, design) -> RobotParams:
        return self.base_params.with_design(*design)

    def evaluate_design(self, design, need_knee=False):
        """EvaluatedSample per SSP sample for one design vector."""
        l, r, arc, topt = design
        geo_bad = geometry_violation(l, arc, topt, self.base_params.theta_R)
        try:
            params = self.params_for(design)
            geometry = derive_geometry(l, arc, topt, params.theta_R)
        except (GeometryError, RobotError):
            return [EvaluatedSample(False, max(geo_bad, GEOMETRY_EPS))
                    for _ in self.samples]
        out = []
        for prep in self.samples:
            violation = sample_reach_violation(params, prep) + geo_bad
            if violation > 0.0:
                out.append(EvaluatedSample(False, violation))
                continue
            try:
                sol = solve_robot_sample(params, geometry, prep, self.p,
                                         self.w_human, self.human.gravity)
            except RobotError:
                out.append(EvaluatedSample(False, SOLVE_FAILURE_VIOLATION))
                continue
            knee = 0.0
            if need_knee:
                b = prep.b0 - hri_generalized_load(prep, sol)
                x = np.linalg.solve(prep.a_matrix, b)
                # tau ordering [T, HR, KR, AR, HL, KL, AL]
                knee = float(x[2] if prep.stance_side == "right" else x[5])
            out.append(EvaluatedSample(
                True, 0.0,
                f_horizontal=sol.horizontal_force,
                tm_left=sol.motor_torque("left"),
                tm_right=sol.motor_torque("right"),
                tm_stance=sol.stance.tm,
                knee_torque=knee))
        return out


def cost_strategy1(sample: EvaluatedSample, weights: CostWeights) -> float:
    """Per-sample cost: horizontal assist plus stance motor torque, with
    the geometric-constraint penalty folded in additively."""
    cost = weights.w_penalty * sample.violation
    if sample.feasible:
        cost += (weights.w1 * abs(sample.f_horizontal)
                 + weights.w2 * abs(sample.tm_stance))
    return cost


def cost_strategy2(gait, human, params, weights: CostWeights, p=0.33,
                   context: GaitCostContext = None) -> float:
    """Strategy-1 terms summed over the whole gait for one design."""
    ctx = context if context is not None else GaitCostContext(
        human, gait, p, base_params=params)
    design = np.array([params.L, params.r, params.R, params.theta_opt])
    return sum(cost_strategy1(s, weights) for s in ctx.evaluate_design(design))


def cost_strategy3(gait, human, params, weights: CostWeights, p=0.33,
                   context: GaitCostContext = None) -> float:
    """Human-in-the-loop cost: stance knee torque from the augmented solve
    plus both motor torques, summed over the gait."""
    ctx = context if context is not None else GaitCostContext(
        human, gait, p, base_params=params)
    design = np.array([params.L, params.r, params.R, params.theta_opt])
    total = 0.0
    for s in ctx.evaluate_design(design, need_knee=True):
        total += weights.w_penalty * s.violation
        if s.feasible:
            total += (weights.w1 * abs(s.knee_torque)
                      + weights.w2 * abs(s.tm_left)
                      + weights.w3 * abs(s.tm_right))
    return total


def fit_check(params: RobotParams, human: HumanModel, gait: GaitTrajectory):
    """True iff every gait sample is reachable and the bearing geometry is
    sound; also returns the total violation magnitude."""
    ctx = GaitCostContext(human, gait, base_params=params)
    violation = geometry_violation(params.L, params.R, params.theta_opt,
                                   params.theta_R)
    for prep in ctx.samples:
        violation += sample_reach_violation(params, prep)
    return violation == 0.0, violation


def optimize(strategy, gait: GaitTrajectory, human: HumanModel,
             bounds: ParameterBounds = None, weights: CostWeights = None,
             config: PsoConfig = None, p=0.33,
             base_params: RobotParams = None):
    """Run one optimization campaign.

    PER_SAMPLE returns a list with one OptimizationResult per
    single-support sample; the other strategies return a single result
    over the whole gait.
    """
    strategy = Strategy(strategy)
    bounds = bounds if bounds is not None else ParameterBounds()
    weights = weights if weights is not None else CostWeights()
    config = config if config is not None else PsoConfig()
    ctx = GaitCostContext(human, gait, p, base_params=base_params)

    if strategy is Strategy.PER_SAMPLE:
        results = []
        for k, prep in enumerate(ctx.samples):
            one = _SingleSampleContext(ctx, prep)

            def cost(design, _one=one):
                return cost_strategy1(_one.evaluate(design), weights)

            results.append(pso_minimize(
                cost, bounds,
                PsoConfig(**{**config.__dict__, "seed": config.seed + k})))
        return results

    if strategy is Strategy.WHOLE_GAIT:
        def cost(design):
            return sum(cost_strategy1(s, weights)
                       for s in ctx.evaluate_design(design))
    else:
        def cost(design):
            total = 0.0
            for s in ctx.evaluate_design(design, need_knee=True):
                total += weights.w_penalty * s.violation
                if s.feasible:
                    total += (weights.w1 * abs(s.knee_torque)
                              + weights.w2 * abs(s.tm_left)
                              + weights.w3 * abs(s.tm_right))
            return total

    return pso_minimize(cost, bounds, config)


class _SingleSampleContext:
    """Restriction of a GaitCostContext to one prepared sample."""

    def __init__(self, ctx: GaitCostContext, prep: PreparedSample):
        restricted = GaitCostContext.__new__(GaitCostContext)
        restricted.__dict__.update(ctx.__dict__)
        restricted.samples = [prep]
        self._ctx = restricted

    def evaluate(self, design) -> EvaluatedSample:
        return self._ctx.evaluate_design(design)[0]


def result_table(result: OptimizationResult, theta_R) -> str:
    """Per-iteration trace: iteration, cost, design vector and the derived
    bearing distances."""
    lines = ["iteration,cost,L,r,R,theta_opt,ll1,ll2"]
    for it, (c, x) in enumerate(zip(result.cost_history, result.param_history)):
        try:
            geo = derive_geometry(x[0], x[2], x[3], theta_R)
            ll1, ll2 = geo.ll1, geo.ll2
        except GeometryError:
            ll1 = ll2 = float("nan")
        cells = [str(it), f"{c:.17g}"] + [f"{v:.17g}" for v in x]
        cells += [f"{ll1:.17g}", f"{ll2:.17g}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
