"""Second-order filter that stands in for unmeasurable range and heading error.

When the source position is unknown, neither the range r_c nor the relative
angle alpha that the surge law wants are available.  The filter below recovers
the missing information from the two quantities that are measurable: the
normalized arrival-difference measurement and the vehicle yaw rate.  Its first
state tracks the measurement lowpassed; the residual (delta - omega1 * v1)
approximates the measurement derivative, and the second state extracts the
envelope of yaw_rate * d(delta)/dt.  The sign of that envelope resolves the
drive direction, and its magnitude shrinks with range, which makes it a usable
damping input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .control import SurgeParams


@dataclass(frozen=True)
class FilterParams:
    """Filter poles omega1, omega2 (1/s) and product gain k1."""

    omega1: float
    omega2: float
    k1: float

    def __post_init__(self) -> None:
        if not self.omega1 > 0.0:
            raise ValueError("filter omega1 must be > 0")
        if not self.omega2 > 0.0:
            raise ValueError("filter omega2 must be > 0")
        if not self.k1 > 0.0:
            raise ValueError("filter k1 must be > 0")


class FilterState(NamedTuple):
    """Filter states: v1 lowpasses the measurement, v2 holds the envelope proxy."""

    v1: float
    v2: float


def filter_derivative(
    s: FilterState, delta: float, yaw_rate: float, p: FilterParams
) -> tuple[float, float]:
    """Time derivative of the filter state driven by (delta, yaw_rate)."""
    residual = delta - p.omega1 * s.v1
    return (
        -p.omega1 * s.v1 + delta,
        -p.omega2 * s.v2 + p.k1 * yaw_rate * residual,
    )


def estimated_direction(s: FilterState, dead_band: float = 1e-6) -> float:
    """Drive-direction sign from the envelope state, with a start-up dead band."""
    if s.v2 > dead_band:
        return 1.0
    if s.v2 < -dead_band:
        return -1.0
    return 0.0


def estimated_damping(s: FilterState, scale: float, p_s: SurgeParams) -> float:
    """Range-style damping factor computed from the envelope magnitude.

    ``scale * |v2|`` plays the role of a range proxy and is pushed through the
    same knee shape as the true-range damping, so the factor lives in [0, 1),
    vanishes as the envelope dies out over the source, and approaches 1 far away.
    """
    rho = scale * abs(s.v2)
    return (rho / (rho + p_s.eps)) ** p_s.q
