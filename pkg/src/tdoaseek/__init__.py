"""Source seeking with a two-receiver acoustic baseline.

Library and CLI for simulating a surface vehicle that steers toward a
submerged acoustic source using only the normalized difference of signal
arrival times at two receivers: extremum-seeking heading control, a
three-factor surge law, a measurement-envelope estimator for the unmeasurable
range and heading error, and the averaged model used to analyze the loop.
"""

from .averaged import (
    AveragedState,
    TuningInputs,
    bounds_audit,
    cost_gradient_alpha,
    integrate_averaged,
    lyapunov,
    tuning_condition,
    tuning_lhs,
)
from .config import ConfigError, ScenarioConfig, apply_overrides, load, parse_text, save, to_text
from .control import EsParams, SurgeParams
from .estimator import FilterParams, FilterState
from .geometry import BaselineGeometry, PolarPose, SourcePosition
from .plant import CartesianState, CurrentDisturbance, HighpassParams, PolarState, SingularRange
from .sim import (
    Measurement,
    NoiseModel,
    PingSchedule,
    SummaryMetrics,
    Trajectory,
    measure,
    metrics,
    refinement_study,
    simulate,
    step,
    write_trajectory_csv,
)

__version__ = "0.1.0"
