"""Distributed control of polygonal formations on daisy-chain topologies.

The package covers the full desk workflow: build the chain topology and
its error signals, check a target shape's spectral stability against the
uniform-angle bound, and reproduce the closed-loop behaviour with a
deterministic fixed-step simulator.  The ``polyform`` CLI wraps the same
pieces for batch experiments.
"""

from .control import (
    ControlLaw,
    MotionParams,
    PositionAnchor,
    deployment_law,
    gradient_law_3,
    mismatched_law_3,
    scale_law,
    steering_law,
    velocity_field,
)
from .errors import DegenerateConfigurationWarning, IntegrationDiverged, ScenarioError
from .geometry import (
    ErrorSignal,
    Rotation2,
    ShapeSpec,
    build_BW,
    closing_distance_error,
    line_error,
    polygon_error,
    rot,
    scaled_error,
)
from .scenario import bundled_scenario_path, load_scenario, parse_scenario
from .simulator import (
    Event,
    MetricFrame,
    RigidMotionFit,
    Scenario,
    SeededBox,
    Trajectory,
    collinearity_residual,
    convergence_time,
    fit_rigid_motion,
    polygon_chain,
    realized_angles,
    run,
    step,
    uniform_positions,
)
from .stability import (
    StabilityReport,
    assemble_A,
    assemble_C,
    classify,
    closed_form_eigs,
    numerical_eigs,
    regular_polygon_angle,
    stability_bound,
)
from .topology import (
    Topology,
    angle_incidence_matrix,
    build_daisy_chain,
    incidence_matrix,
    kron2,
    relative_positions,
)

__version__ = "0.1.0"
