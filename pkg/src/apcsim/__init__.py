"""Simulator for approximate projected consensus over time-varying digraphs."""
from .approx_proj import (AdversarialFixedAngle, AngleSchedule, ContractError, DepthSchedule, Exact,
                          RandomInCone, approx_projection, decompose, in_cone, in_upper_halfspace,
                          on_hyperplane, supporting_approx_projection)
from .config import ConfigError, ExperimentConfig, load_config
from .convex import (Ball, Box, ConvexBody, DimensionError, HalfSpace, NonConvergenceError,
                     Polyhedron, Singleton, contains, distance, project)
from .engine import NetworkState, Trace, run, simulate, step
from .network import (Digraph, GraphError, PeriodicSchedule, RandomUJSCSchedule, StaticSchedule,
                      check_phi_bound, check_ujsc, transition_product, weights_at)
from .oracle import IntersectionOracle, alternating_projection_point, distance_to_intersection, partial_sums
from .presets import PRESET_NAMES, preset

__version__ = "0.1.0"
