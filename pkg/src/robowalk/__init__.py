"""Sagittal-plane dynamics of an augmented human + under-actuated
bodyweight-support exoskeleton, with an independent inverse-dynamics
verification pipeline and a PSO design optimizer."""

from .human import (
    BodyParams,
    ContactState,
    GeneralizedCoordinates,
    GeneralizedState,
    HumanModel,
    Phase,
    build_default_human,
    cog,
    detect_contact,
    forward_kinematics,
    human_from_config,
    point_jacobian,
    standing_state,
)
from .dynamics import (
    DynamicsSolution,
    ExternalForce,
    JointLoads,
    bias_vector,
    joint_loads,
    mass_matrix,
    newton_generalized_forces,
    rnea,
    solve_dsp,
    solve_ssp,
    verify_newton_vs_rnea,
)
from .robot import (
    DerivedGeometry,
    HriForces,
    LegMode,
    RobotLegState,
    RobotParams,
    assist_directions,
    derive_geometry,
    differential_kinematics,
    inverse_kinematics,
    leg_dynamics,
    robot_from_config,
    solve_leg_state,
)
from .gait import (
    GaitTrajectory,
    SimulationReport,
    load_gait,
    run_simulation,
    synthesize_gait,
    write_gait,
)
from .optimizer import (
    CostWeights,
    OptimizationResult,
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

__version__ = "0.1.0"
