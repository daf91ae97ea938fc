"""Heading and surge control laws for the source-seeking loop.

The heading channel runs a perturbation-based extremum-seeking law that
minimizes the squared normalized measurement.  The surge channel is a product
of three factors: a direction sign resolved from the measurement and relative
angle, an amplitude gate that only opens when the cost is low, and a nonlinear
damping term that slows the vehicle near the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class EsParams:
    """Extremum-seeking parameters.

    a: perturbation scaling (sqrt(rad/s)), omega: perturbation frequency
    (rad/s), k: demodulation gain (sqrt(rad/s), must be negative), h: highpass
    filter time constant (1/s).
    """

    a: float
    omega: float
    k: float
    h: float

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise ValueError("es.a must be > 0")
        if not self.omega > 0.0:
            raise ValueError("es.omega must be > 0")
        if not self.k < 0.0:
            raise ValueError("es.k must be < 0 (negative demodulation gain is required for a stable heading loop)")
        if not self.h > 0.0:
            raise ValueError("es.h must be > 0")


@dataclass(frozen=True)
class SurgeParams:
    """Surge-law parameters.

    u0: maximum surge speed (m/s), m: heading-deviation sharpness of the
    amplitude gate, eps: damping knee distance (m), q: damping power,
    mu: smooth-signum sharpness (used by the analysis path only).
    """

    u0: float
    m: float
    eps: float
    q: int
    mu: float = 100.0

    def __post_init__(self) -> None:
        if self.u0 < 0.0:
            raise ValueError("surge.u0 must be >= 0")
        if not self.m > 0.0:
            raise ValueError("surge.m must be > 0")
        if not self.eps > 0.0:
            raise ValueError("surge.eps must be > 0")
        if int(self.q) != self.q or self.q < 1:
            raise ValueError("surge.q must be a positive integer")
        if not self.mu > 0.0:
            raise ValueError("surge.mu must be > 0")


def yaw_rate_command(t: float, f: float, x_e: float, p: EsParams) -> float:
    """Extremum-seeking yaw-rate command (rad/s).

    Demodulates the highpassed cost (f - x_e * h) with sin(omega t) and adds
    the persistent perturbation a * sqrt(omega) * cos(omega t).
    """
    sqrt_w = math.sqrt(p.omega)
    wt = p.omega * t
    return p.k * (f - x_e * p.h) * sqrt_w * math.sin(wt) + p.a * sqrt_w * math.cos(wt)


def surge_amplitude(f: float, p: SurgeParams) -> float:
    """Amplitude gate u0 * (1 - tanh(m f)); full speed at f = 0, shut for large f."""
    return p.u0 * (1.0 - math.tanh(p.m * f))


def surge_direction(delta: float, alpha: float) -> float:
    """Sign of delta * sin(2 alpha): +1 drive forward, -1 reverse, 0 undecided."""
    prod = delta * math.sin(2.0 * alpha)
    if prod > 0.0:
        return 1.0
    if prod < 0.0:
        return -1.0
    return 0.0


def damping(r_c: float, p: SurgeParams) -> float:
    """Range damping r_c^q / (r_c + eps)^q in [0, 1); 0 at the target, ~1 for r_c >> eps."""
    return (r_c / (r_c + p.eps)) ** p.q


def surge_command(u_dir: float, u_amp: float, u_zeta: float) -> float:
    """Surge speed command: product of direction, amplitude, and damping factors."""
    return u_zeta * u_dir * u_amp


def smooth_sgn(x: float, mu: float) -> float:
    """Smooth signum tanh(mu x); analysis-path stand-in for the hard sign."""
    return math.tanh(mu * x)
