"""Planar geometry of a two-receiver acoustic baseline and a submerged source.

The vehicle (or virtual rigid formation) carries two receivers mounted
orthogonally to its heading, forming a baseline of length d centered on the
vehicle position.  All functions here are pure and operate in a frame with
x pointing north, y pointing east, and headings measured from +x toward +y.
The source sits below the surface plane at depth > 0, which keeps both slant
ranges strictly positive everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = (angle + math.pi) % TWO_PI - math.pi
    if wrapped == -math.pi:
        return math.pi
    return wrapped


@dataclass(frozen=True)
class SourcePosition:
    """Acoustic source location; depth is positive down (m)."""

    x: float
    y: float
    depth: float

    def __post_init__(self) -> None:
        if not self.depth > 0.0:
            raise ValueError("source depth must be > 0 (source below the surface plane)")


@dataclass(frozen=True)
class BaselineGeometry:
    """Receiver-pair pose: baseline center, heading (rad), length d (m), sound speed (m/s)."""

    x: float
    y: float
    heading: float
    d: float
    sound_speed: float = 1500.0

    def __post_init__(self) -> None:
        if not self.d > 0.0:
            raise ValueError("baseline length d must be > 0")
        if not self.sound_speed > 0.0:
            raise ValueError("sound speed must be > 0")


@dataclass(frozen=True)
class PolarPose:
    """Vehicle pose relative to the source: range, bearing, and relative angle.

    ``alpha`` is the heading error between the vehicle heading and the
    vehicle-to-source direction; alpha = 0 means the vehicle faces the source.
    ``degenerate`` flags r_c = 0, where the bearing is undefined and alpha is
    returned as 0 by convention.
    """

    r_c: float
    bearing: float
    alpha: float
    degenerate: bool = False


def receiver_positions(g: BaselineGeometry) -> tuple[tuple[float, float], tuple[float, float]]:
    """Receiver coordinates (p1, p2); receiver 1 sits starboard of the heading.

    The midpoint of the pair is the baseline center and their separation is d.
    """
    ox = -0.5 * g.d * math.sin(g.heading)
    oy = 0.5 * g.d * math.cos(g.heading)
    return (g.x + ox, g.y + oy), (g.x - ox, g.y - oy)


def slant_ranges(g: BaselineGeometry, s: SourcePosition) -> tuple[float, float]:
    """3-D distances from each surface receiver to the submerged source (m)."""
    (x1, y1), (x2, y2) = receiver_positions(g)
    r1 = math.sqrt((x1 - s.x) ** 2 + (y1 - s.y) ** 2 + s.depth**2)
    r2 = math.sqrt((x2 - s.x) ** 2 + (y2 - s.y) ** 2 + s.depth**2)
    return r1, r2


def slant_ranges_polar(r_c: float, alpha: float, d: float, depth: float) -> tuple[float, float]:
    """Closed-form slant ranges in relative polar coordinates (r_c, alpha).

    Equivalent to :func:`slant_ranges` after translating the frame so the
    source sits at the planar origin.
    """
    base = 0.25 * d * d + r_c * r_c + depth * depth
    cross = d * r_c * math.sin(alpha)
    return math.sqrt(base + cross), math.sqrt(base - cross)


def normalized_delta(g: BaselineGeometry, s: SourcePosition) -> float:
    """Normalized arrival-difference measurement: (r1 - r2) / d, in [-1, 1]."""
    r1, r2 = slant_ranges(g, s)
    return (r1 - r2) / g.d


def delta_from_polar(r_c: float, alpha: float, d: float, depth: float) -> float:
    """Noise-free normalized measurement evaluated from (r_c, alpha).

    Algebraically equal to (r1 - r2) / d but written as
    2 r_c sin(alpha) / (r1 + r2), which keeps sign and magnitude when the
    range difference is far below float resolution.
    """
    r1, r2 = slant_ranges_polar(r_c, alpha, d, depth)
    return 2.0 * r_c * math.sin(alpha) / (r1 + r2)


def delta_toa(g: BaselineGeometry, s: SourcePosition) -> float:
    """Raw arrival-time difference (s); equals normalized_delta * d / sound_speed."""
    r1, r2 = slant_ranges(g, s)
    return (r1 - r2) / g.sound_speed


def to_polar(x: float, y: float, heading: float, s: SourcePosition) -> PolarPose:
    """Range/bearing/relative-angle pose of a point with a heading, w.r.t. the source.

    At r_c = 0 the bearing is undefined; the pose is returned with
    bearing = alpha = 0 and the degenerate flag set so callers can treat the
    vehicle as already at the target.
    """
    dx = x - s.x
    dy = y - s.y
    r_c = math.hypot(dx, dy)
    if r_c == 0.0:
        return PolarPose(0.0, 0.0, 0.0, degenerate=True)
    bearing = math.atan2(dy, dx)
    alpha = wrap_angle(heading - bearing + math.pi)
    return PolarPose(r_c, bearing, alpha)


def cost(delta: float) -> float:
    """Seeking cost: delta squared.  Zero exactly when the measurement is zero."""
    return delta * delta
