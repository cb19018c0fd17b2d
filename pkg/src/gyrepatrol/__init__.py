"""Flow-based patrol control for minimally actuated robots in gyre-like flows."""

from gyrepatrol.control import (
    AnnulusRegion,
    BangBang,
    BangBangConfig,
    ConstantThrust,
    ControlCommand,
    HysteresisBangBang,
    NoControl,
    PendulumParams,
    WaypointController,
    averaged_thruster,
    bang_bang,
    bang_bang_hysteresis,
    pendulum_torque,
)
from gyrepatrol.dynamics import (
    CycleRecord,
    RobotModel,
    SimulationAborted,
    Trajectory,
    Workspace,
    control_effort,
    detect_cycles,
    integrate,
)
from gyrepatrol.flow import (
    DoubleGyreFlow,
    DoubleGyreParams,
    FlowField,
    GyreCenter,
    ReciprocalProfile,
    VortexFlow,
    VortexParams,
    angular_velocity,
    double_gyre_velocity,
    monotone_band,
    orbit_period,
    rigid_profile,
    vortex_velocity,
)
from gyrepatrol.geometry import (
    CircleMapParams,
    ImplicitBoundary,
    PotentialFieldParams,
    RacetrackFlow,
    ShapeNavParams,
    circle_map,
    fit_implicit_boundary,
    inverse_circle_map,
    potential_field_velocity,
    racetrack_flow,
    shape_navigation,
)

__version__ = "0.1.0"
