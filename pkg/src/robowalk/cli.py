"""Command-line surface.

Subcommands: verify (Newton-vs-spatial sweep check), simulate (gait
inverse dynamics with or without the robot), optimize (PSO design
campaigns) and geometry (derived bearing geometry).

Exit codes: 0 success, 1 usage error, 2 numeric/solver failure,
3 verification threshold exceeded.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, read_config
from .dynamics import DynamicsError, verify_newton_vs_rnea
from .gait import GaitError, load_gait, run_simulation, synthesize_gait, write_gait
from .human import ModelError, build_default_human, human_from_config
from .optimizer import (
    CostWeights,
    OptimizerError,
    ParameterBounds,
    PsoConfig,
    Strategy,
    optimize,
    result_table,
)
from .robot import GeometryError, RobotError, RobotParams, derive_geometry, robot_from_config

USAGE_EXIT = 1
NUMERIC_EXIT = 2
THRESHOLD_EXIT = 3

_STRATEGIES = {"1": Strategy.PER_SAMPLE, "2": Strategy.WHOLE_GAIT,
               "3": Strategy.HUMAN_IN_LOOP}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="robowalk",
                     description="Sagittal-plane human + exoskeleton dynamics "
                                 "and design optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="compare the two inverse-dynamics "
                                       "pipelines on random states")
    pv.add_argument("--samples", type=int, default=100)
    pv.add_argument("--seed", type=int, default=1)
    pv.add_argument("--threshold", type=float, default=1e-10)
    pv.add_argument("--output", type=Path, default=Path("."))
    pv.add_argument("--human", type=Path, help="human model config file")

    ps = sub.add_parser("simulate", help="inverse dynamics over a gait")
    src = ps.add_mutually_exclusive_group(required=True)
    src.add_argument("--gait", type=Path, help="gait table file")
    src.add_argument("--synthetic", action="store_true",
                     help="use the built-in synthetic gait")
    ps.add_argument("--assist", type=float, default=0.0, metavar="P",
                    help="supported bodyweight fraction (requires --robot "
                         "or uses the default robot when > 0)")
    ps.add_argument("--robot", type=Path, help="robot config file")
    ps.add_argument("--no-robot", action="store_true",
                    help="run the bare human even if --assist is set")
    ps.add_argument("--human", type=Path)
    ps.add_argument("--seat-at-pelvis", action="store_true",
                    help="apply the seat force at the pelvis instead of the CoG")
    ps.add_argument("--stride-period", type=float, default=1.35)
    ps.add_argument("--step-length", type=float, default=0.25)
    ps.add_argument("--samples", type=int, default=135)
    ps.add_argument("--output", type=Path, default=Path("."))

    po = sub.add_parser("optimize", help="PSO design campaign")
    po.add_argument("--strategy", choices=sorted(_STRATEGIES),
                    help="1 per-sample, 2 whole gait, 3 human-in-the-loop "
                         "(required here or in --campaign)")
    src = po.add_mutually_exclusive_group(required=True)
    src.add_argument("--gait", type=Path)
    src.add_argument("--synthetic", action="store_true")
    po.add_argument("--stance", choices=("left", "right", "both"),
                    default="both", help="restrict to one stance side's "
                    "single-support window")
    po.add_argument("--campaign", type=Path,
                    help="whole-campaign config (strategy, PSO settings, "
                         "assist, bounds and weight keys in one file); "
                         "explicit flags override it")
    po.add_argument("--bounds", type=Path, help="bounds config "
                    "(keys {L,r,R,theta_opt}_{min,max}, radians)")
    po.add_argument("--weights", type=Path,
                    help="weights config (keys w1 w2 w3 w_penalty)")
    po.add_argument("--seed", type=int, default=None)
    po.add_argument("--population", type=int, default=None)
    po.add_argument("--iterations", type=int, default=None)
    po.add_argument("--assist", type=float, default=None)
    po.add_argument("--robot", type=Path, help="base robot config")
    po.add_argument("--human", type=Path)
    po.add_argument("--stride-period", type=float, default=1.35)
    po.add_argument("--step-length", type=float, default=0.25)
    po.add_argument("--samples", type=int, default=135)
    po.add_argument("--output", type=Path, default=Path("."))

    pg = sub.add_parser("geometry", help="print derived bearing geometry")
    pg.add_argument("--params", type=Path, help="robot config file")
    pg.add_argument("--L", type=float)
    pg.add_argument("--R", type=float)
    pg.add_argument("--theta-opt-deg", type=float)
    pg.add_argument("--theta-R-deg", type=float)
    return parser


def _load_human(args):
    if getattr(args, "human", None):
        return human_from_config(args.human)
    return build_default_human()


def _load_gait_arg(args, human):
    if args.gait is not None:
        return load_gait(args.gait, model=human)
    return synthesize_gait(human, stride_period=getattr(args, "stride_period", 1.35),
                           step_length=getattr(args, "step_length", 0.25),
                           n_samples=getattr(args, "samples", 135))


def _bounds_from_config(path):
    cfg = read_config(path)
    kwargs = {}
    for name in ("L", "r", "R", "theta_opt"):
        lo = cfg.pop(f"{name}_min", None)
        hi = cfg.pop(f"{name}_max", None)
        default = getattr(ParameterBounds(), name)
        kwargs[name] = (default[0] if lo is None else lo,
                        default[1] if hi is None else hi)
    if cfg:
        raise OptimizerError(f"unknown bounds keys: {sorted(cfg)}")
    return ParameterBounds(**kwargs)


def _weights_from_config(path):
    cfg = read_config(path)
    known = {"w1", "w2", "w3", "w_penalty"}
    unknown = set(cfg) - known
    if unknown:
        raise OptimizerError(f"unknown weight keys: {sorted(unknown)}")
    return CostWeights(**cfg)


def _cmd_verify(args):
    human = _load_human(args)
    report = verify_newton_vs_rnea(human, samples=args.samples, seed=args.seed)
    args.output.mkdir(parents=True, exist_ok=True)
    out = args.output / "verify_errors.csv"
    out.write_text(report.to_table(), encoding="utf-8")
    print(f"max generalized-force discrepancy over {args.samples} samples: "
          f"{report.max_error:.3e}")
    print(f"error table written to {out}")
    if report.max_error > args.threshold:
        print(f"FAIL: exceeds threshold {args.threshold:.1e}", file=sys.stderr)
        return THRESHOLD_EXIT
    return 0


def _cmd_simulate(args):
    from . import plots
    human = _load_human(args)
    gait = _load_gait_arg(args, human)
    robot = None
    if not args.no_robot and (args.robot is not None or args.assist > 0.0):
        robot = (robot_from_config(args.robot) if args.robot is not None
                 else RobotParams())
    report = run_simulation(human, robot, gait, p=args.assist,
                            seat_at_pelvis=args.seat_at_pelvis)
    args.output.mkdir(parents=True, exist_ok=True)
    table = args.output / "simulation.csv"
    table.write_text(report.to_table(), encoding="utf-8")
    if args.gait is None:
        write_gait(args.output / "gait.csv", gait)
    plots.plot_knee_forces(report, args.output / "knee_forces.svg")
    plots.plot_joint_torques(report, args.output / "joint_torques.svg")
    plots.plot_torque_speed(report, args.output / "motor_torque_speed.svg")
    print(f"{len(report.rows)} single-support samples solved; "
          f"peak stance knee force {report.peak_stance_knee_force():.1f} N")
    print(f"report written to {table}")
    return 0


_CAMPAIGN_PSO_KEYS = {"population": int, "iterations": int, "inertia": float,
                      "cognitive": float, "social": float, "seed": int,
                      "velocity_clamp": float, "workers": int}
_CAMPAIGN_BOUND_KEYS = {f"{n}_{s}" for n in ("L", "r", "R", "theta_opt")
                        for s in ("min", "max")}
_CAMPAIGN_WEIGHT_KEYS = {"w1", "w2", "w3", "w_penalty"}


def _parse_campaign(path):
    cfg = read_config(path)
    known = (set(_CAMPAIGN_PSO_KEYS) | _CAMPAIGN_BOUND_KEYS
             | _CAMPAIGN_WEIGHT_KEYS | {"strategy", "assist"})
    unknown = set(cfg) - known
    if unknown:
        raise OptimizerError(f"unknown campaign keys: {sorted(unknown)}")
    return cfg


def _cmd_optimize(args):
    from . import plots
    campaign = _parse_campaign(args.campaign) if args.campaign else {}
    strategy_key = args.strategy
    if strategy_key is None and "strategy" in campaign:
        strategy_key = str(int(campaign["strategy"]))
    if strategy_key not in _STRATEGIES:
        print("robowalk optimize: a strategy (1, 2 or 3) is required via "
              "--strategy or the campaign config", file=sys.stderr)
        return USAGE_EXIT

    human = _load_human(args)
    gait = _load_gait_arg(args, human)
    if args.stance != "both":
        idx = gait.ssp_indices(args.stance)
        if not idx:
            raise OptimizerError(f"gait has no {args.stance}-stance samples")
        gait = gait.window(idx[0], idx[-1] + 1)

    if args.bounds:
        bounds = _bounds_from_config(args.bounds)
    else:
        kwargs = {}
        for name in ("L", "r", "R", "theta_opt"):
            default = getattr(ParameterBounds(), name)
            kwargs[name] = (campaign.get(f"{name}_min", default[0]),
                            campaign.get(f"{name}_max", default[1]))
        bounds = ParameterBounds(**kwargs)
    if args.weights:
        weights = _weights_from_config(args.weights)
    else:
        weights = CostWeights(**{k: campaign[k] for k in _CAMPAIGN_WEIGHT_KEYS
                                 if k in campaign})
    base = robot_from_config(args.robot) if args.robot else RobotParams()

    pso_kwargs = {}
    for key, cast in _CAMPAIGN_PSO_KEYS.items():
        field = "max_iterations" if key == "iterations" else key
        if key in campaign:
            pso_kwargs[field] = cast(campaign[key])
    for flag, field in (("population", "population"),
                        ("iterations", "max_iterations"), ("seed", "seed")):
        value = getattr(args, flag)
        if value is not None:
            pso_kwargs[field] = value
    pso_kwargs.setdefault("population", 24)
    pso_kwargs.setdefault("max_iterations", 100)
    pso_kwargs.setdefault("seed", 0)
    config = PsoConfig(**pso_kwargs)

    assist = args.assist
    if assist is None:
        assist = campaign.get("assist", 0.33)
    strategy = _STRATEGIES[strategy_key]
    result = optimize(strategy, gait, human, bounds=bounds, weights=weights,
                      config=config, p=assist, base_params=base)
    args.output.mkdir(parents=True, exist_ok=True)
    if strategy is Strategy.PER_SAMPLE:
        for k, res in enumerate(result):
            (args.output / f"trace_{k:03d}.csv").write_text(
                result_table(res, base.theta_R), encoding="utf-8")
        best = min(result, key=lambda r: r.best_cost)
        print(f"{len(result)} per-sample optimizations written")
    else:
        best = result
        (args.output / "trace.csv").write_text(
            result_table(result, base.theta_R), encoding="utf-8")
        plots.plot_parameter_trace(result, args.output / "params_trace.svg")
    l, r, arc, topt = best.best_params
    geo = derive_geometry(l, arc, topt, base.theta_R)
    print(f"best cost {best.best_cost:.6g} at L={l:.4f} r={r:.4f} R={arc:.4f} "
          f"theta_opt={np.rad2deg(topt):.2f} deg "
          f"(ll1={geo.ll1:.4f}, ll2={geo.ll2:.4f})")
    return 0


def _cmd_geometry(args):
    params = robot_from_config(args.params) if args.params else RobotParams()
    l = args.L if args.L is not None else params.L
    arc = args.R if args.R is not None else params.R
    topt = (np.deg2rad(args.theta_opt_deg) if args.theta_opt_deg is not None
            else params.theta_opt)
    theta_r = (np.deg2rad(args.theta_R_deg) if args.theta_R_deg is not None
               else params.theta_R)
    geo = derive_geometry(l, arc, topt, theta_r)
    print(f"ll1 = {geo.ll1:.6f} m")
    print(f"ll2 = {geo.ll2:.6f} m")
    print(f"theta_ll1 = {np.rad2deg(geo.theta_ll1):.4f} deg")
    print(f"theta_ll2 = {np.rad2deg(geo.theta_ll2):.4f} deg")
    return 0


_COMMANDS = {
    "verify": _cmd_verify,
    "simulate": _cmd_simulate,
    "optimize": _cmd_optimize,
    "geometry": _cmd_geometry,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DynamicsError, GaitError, GeometryError, ModelError,
            OptimizerError, RobotError, OSError) as exc:
        print(f"robowalk: {exc}", file=sys.stderr)
        return NUMERIC_EXIT


if __name__ == "__main__":
    sys.exit(main())
