"""Kinematic plant models for the closed seeking loop.

Two charts of the same unicycle-plus-filter dynamics are provided: a Cartesian
chart (x, y, heading, highpass state) integrated by the simulation engine, and
a relative polar chart (range, relative angle, highpass state) used by the
analysis tools.  ``consistency_check`` integrates the closed loop in both
charts and reports how far they drift apart, which pins the integrator order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import control, geometry


class SingularRange(Exception):
    """Polar dynamics evaluated below the configured range floor."""


@dataclass(frozen=True)
class CartesianState:
    """Plant state: position (m), heading (rad), highpass filter state."""

    x: float
    y: float
    psi: float
    x_e: float


@dataclass(frozen=True)
class PolarState:
    """Relative plant state: range (m), relative angle (rad), highpass state."""

    r_c: float
    alpha: float
    x_e: float


@dataclass(frozen=True)
class HighpassParams:
    """Highpass filter time constant h (1/s)."""

    h: float

    def __post_init__(self) -> None:
        if not self.h > 0.0:
            raise ValueError("highpass h must be > 0")


@dataclass(frozen=True)
class CurrentDisturbance:
    """Constant water current (m/s) and the position/velocity reference mode.

    In ``velocity`` mode the current drifts the vehicle; in ``position`` mode
    an inner position loop is assumed to cancel it exactly, so the drift never
    reaches the kinematics.
    """

    vx: float = 0.0
    vy: float = 0.0
    reference_mode: str = "position"

    def __post_init__(self) -> None:
        if self.reference_mode not in ("velocity", "position"):
            raise ValueError("current reference_mode must be 'velocity' or 'position'")


def cartesian_derivative(
    state: CartesianState,
    u_c: float,
    yaw_rate: float,
    f: float,
    hp: HighpassParams,
    dist: CurrentDisturbance,
) -> tuple[float, float, float, float]:
    """Time derivative of the Cartesian state under the given commands."""
    if dist.reference_mode == "velocity":
        vx, vy = dist.vx, dist.vy
    else:
        vx, vy = 0.0, 0.0
    return (
        u_c * math.cos(state.psi) + vx,
        u_c * math.sin(state.psi) + vy,
        yaw_rate,
        -state.x_e * hp.h + f,
    )


def polar_derivative(
    state: PolarState,
    u_c: float,
    yaw_rate: float,
    f: float,
    hp: HighpassParams,
    r_floor: float = 1e-6,
) -> tuple[float, float, float]:
    """Time derivative of the polar state; the angle channel is singular at r_c = 0."""
    if state.r_c < r_floor:
        raise SingularRange(f"r_c={state.r_c!r} below floor {r_floor!r}; treat vehicle as at target")
    sin_a = math.sin(state.alpha)
    return (
        -u_c * math.cos(state.alpha),
        yaw_rate + (u_c / state.r_c) * sin_a,
        -state.x_e * hp.h + f,
    )


def consistency_check(
    start: CartesianState,
    source: geometry.SourcePosition,
    d: float,
    es: control.EsParams,
    surge: control.SurgeParams,
    t_end: float,
    dt: float,
) -> float:
    """Integrate the noise-free closed loop in both charts and compare.

    Both charts evaluate the same command law from their own state at every
    integration stage, so the returned maximum deviation (over time, of range
    and wrapped relative angle) measures pure integrator truncation.  Halving
    dt shrinks it by about 2**4.
    """
    hp = HighpassParams(es.h)
    depth = source.depth

    def commands(t: float, r_c: float, alpha: float, x_e: float) -> tuple[float, float, float]:
        delta = geometry.delta_from_polar(r_c, alpha, d, depth)
        f = geometry.cost(delta)
        yaw = control.yaw_rate_command(t, f, x_e, es)
        u_c = control.surge_command(
            control.surge_direction(delta, alpha),
            control.surge_amplitude(f, surge),
            control.damping(r_c, surge),
        )
        return u_c, yaw, f

    def cart_rhs(t: float, y: tuple[float, float, float, float]):
        x, yy, psi, x_e = y
        pose = geometry.to_polar(x, yy, psi, source)
        u_c, yaw, f = commands(t, pose.r_c, pose.alpha, x_e)
        return cartesian_derivative(CartesianState(x, yy, psi, x_e), u_c, yaw, f, hp, CurrentDisturbance())

    def polar_rhs(t: float, y: tuple[float, float, float]):
        r_c, alpha, x_e = y
        u_c, yaw, f = commands(t, r_c, alpha, x_e)
        return polar_derivative(PolarState(r_c, alpha, x_e), u_c, yaw, f, hp)

    pose0 = geometry.to_polar(start.x, start.y, start.psi, source)
    cart = (start.x, start.y, start.psi, start.x_e)
    polar = (pose0.r_c, pose0.alpha, start.x_e)

    worst = 0.0
    steps = int(round(t_end / dt))
    t = 0.0
    for _ in range(steps):
        cart = _rk4(cart_rhs, t, cart, dt)
        polar = _rk4(polar_rhs, t, polar, dt)
        t += dt
        pose = geometry.to_polar(cart[0], cart[1], cart[2], source)
        dev_r = abs(pose.r_c - polar[0])
        dev_a = abs(geometry.wrap_angle(pose.alpha - polar[1]))
        worst = max(worst, dev_r, dev_a)
    return worst


def _rk4(rhs, t, y, dt):
    """One classical Runge-Kutta step for a tuple-valued state."""
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, tuple(yi + 0.5 * dt * ki for yi, ki in zip(y, k1)))
    k3 = rhs(t + 0.5 * dt, tuple(yi + 0.5 * dt * ki for yi, ki in zip(y, k2)))
    k4 = rhs(t + dt, tuple(yi + dt * ki for yi, ki in zip(y, k3)))
    return tuple(
        yi + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + e) for yi, a, b, c, e in zip(y, k1, k2, k3, k4)
    )
