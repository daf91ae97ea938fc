"""Lie-bracket averaged model of the seeking loop and its analysis tools.

Averaging the high-frequency perturbed heading loop yields a slow system in
(range, relative angle, highpass state) whose angle channel descends the cost
gradient with gain a*k/2.  This module integrates that averaged system, holds
the quadratic energy monitor used to argue convergence, checks the closed-form
gain condition that makes the angle channel dissipative near the target, and
audits boundedness of the loop's vector fields over a compact box, which is
what licenses the averaging step in the first place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .control import EsParams, SurgeParams, damping, surge_amplitude, surge_command, surge_direction
from .plant import SingularRange


class UnboundedSample(Exception):
    """A bounds-audit sample evaluated to a non-finite value."""


@dataclass
class AveragedState:
    """Averaged-system state: range (m), relative angle (rad), highpass state."""

    r_c: float
    alpha: float
    x_e: float


@dataclass(frozen=True)
class TuningInputs:
    """Inputs of the surge/heading gain condition.

    delta is the half-width (rad) of the heading band inside which the surge
    is allowed to run at full amplitude; it must lie in [0, pi/2).
    """

    u0: float
    d: float
    z_t: float
    a: float
    k: float
    eps: float
    delta: float

    def __post_init__(self) -> None:
        if self.u0 < 0.0 or self.d <= 0.0 or self.z_t <= 0.0 or self.a <= 0.0 or self.eps <= 0.0:
            raise ValueError("u0 must be >= 0 and d, z_t, a, eps > 0")
        if not self.k < 0.0:
            raise ValueError("k must be < 0")
        if not 0.0 <= self.delta < 0.5 * math.pi:
            raise ValueError("delta must lie in [0, pi/2)")


def cost_gradient_alpha(r_c: float, alpha: float, d: float, depth: float) -> float:
    """Closed-form derivative of the cost with respect to the relative angle.

    Equals r_c**2 * sin(2 alpha) / (r1 * r2); agrees with finite differences
    of the squared normalized measurement.
    """
    r1, r2 = geometry.slant_ranges_polar(r_c, alpha, d, depth)
    return r_c * r_c * math.sin(2.0 * alpha) / (r1 * r2)


def _oracle_surge(r_c: float, alpha: float, d: float, depth: float, surge: SurgeParams) -> tuple[float, float]:
    """Surge command and cost evaluated from the true averaged state."""
    delta = geometry.delta_from_polar(r_c, alpha, d, depth)
    f = geometry.cost(delta)
    u_c = surge_command(surge_direction(delta, alpha), surge_amplitude(f, surge), damping(r_c, surge))
    return u_c, f


def averaged_derivative(
    z: AveragedState,
    es: EsParams,
    surge: SurgeParams,
    d: float,
    depth: float,
    r_floor: float = 1e-6,
) -> tuple[float, float, float]:
    """Time derivative of the averaged state; singular below the range floor."""
    if z.r_c < r_floor:
        raise SingularRange(f"r_c={z.r_c!r} below floor {r_floor!r}")
    u_c, f = _oracle_surge(z.r_c, z.alpha, d, depth, surge)
    grad = cost_gradient_alpha(z.r_c, z.alpha, d, depth)
    return (
        -u_c * math.cos(z.alpha),
        (u_c / z.r_c) * math.sin(z.alpha) + 0.5 * es.a * es.k * grad,
        -z.x_e * es.h + f,
    )


def lyapunov_terms(
    z: AveragedState, es: EsParams, surge: SurgeParams, d: float, depth: float
) -> tuple[float, float, float]:
    """Per-channel derivatives of the quadratic energy function (range, angle, filter)."""
    u_c, f = _oracle_surge(z.r_c, z.alpha, d, depth, surge)
    r1, r2 = geometry.slant_ranges_polar(z.r_c, z.alpha, d, depth)
    v_r = -z.r_c * u_c * math.cos(z.alpha)
    v_alpha = z.alpha * (u_c / z.r_c) * math.sin(z.alpha) + (
        0.5 * z.alpha * es.a * es.k * z.r_c * z.r_c * math.sin(2.0 * z.alpha) / (r1 * r2)
    )
    v_xe = -z.x_e * z.x_e * es.h + z.x_e * f
    return v_r, v_alpha, v_xe


def lyapunov(
    z: AveragedState, es: EsParams, surge: SurgeParams, d: float, depth: float
) -> tuple[float, float]:
    """Quadratic energy 0.5*(r^2 + alpha^2 + x_e^2) and its time derivative."""
    value = 0.5 * (z.r_c**2 + z.alpha**2 + z.x_e**2)
    return value, sum(lyapunov_terms(z, es, surge, d, depth))


def tuning_lhs(t: TuningInputs) -> float:
    """Left-hand side of the gain condition u0*(d^2 + 4 z^2) + 4 a k eps^3 cos(delta)."""
    return t.u0 * (t.d**2 + 4.0 * t.z_t**2) + 4.0 * t.a * t.k * t.eps**3 * math.cos(t.delta)


def tuning_condition(t: TuningInputs) -> bool:
    """True when the gain condition holds (angle channel dissipative near the target)."""
    return tuning_lhs(t) <= 0.0


def integrate_averaged(
    z0: AveragedState,
    es: EsParams,
    surge: SurgeParams,
    d: float,
    depth: float,
    dt: float,
    t_end: float,
    r_floor: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Fixed-step RK4 integration of the averaged system.

    Returns (t, r_c, alpha, x_e) arrays sampled every step.  Integration ends
    at t_end or when the range falls below r_floor, whichever comes first.
    """
    steps = int(round(t_end / dt))
    ts = [0.0]
    rs = [z0.r_c]
    als = [z0.alpha]
    xes = [z0.x_e]
    y = (z0.r_c, z0.alpha, z0.x_e)
    t = 0.0

    def rhs(_t: float, s: tuple[float, float, float]):
        return averaged_derivative(AveragedState(*s), es, surge, d, depth, r_floor=0.0)

    for _ in range(steps):
        if y[0] < r_floor:
            break
        k1 = rhs(t, y)
        k2 = rhs(t, (y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1], y[2] + 0.5 * dt * k1[2]))
        k3 = rhs(t, (y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1], y[2] + 0.5 * dt * k2[2]))
        k4 = rhs(t, (y[0] + dt * k3[0], y[1] + dt * k3[1], y[2] + dt * k3[2]))
        y = (
            y[0] + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y[1] + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            y[2] + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
        )
        t += dt
        ts.append(t)
        rs.append(y[0])
        als.append(y[1])
        xes.append(y[2])
    return np.asarray(ts), np.asarray(rs), np.asarray(als), np.asarray(xes)


@dataclass
class AuditReport:
    """Sampled maxima of the vector-field bounds over the audited box."""

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    samples: int

    def maxima(self) -> dict[str, float]:
        return {
            "A_1": self.a1,
            "A_2": self.a2,
            "A_3": self.a3,
            "A_4": self.a4,
            "A_5": self.a5,
            "A_6": self.a6,
        }

    def to_text(self) -> str:
        lines = [f"{name} = {value:.9g}" for name, value in self.maxima().items()]
        lines.append(f"samples = {self.samples}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AuditBox:
    """Compact sampling region: r_c in [0, r_max], alpha in [-pi, pi], |x_e| <= x_max."""

    r_max: float = 100.0
    x_max: float = 1.0

    def __post_init__(self) -> None:
        if self.r_max <= 0.0 or self.x_max <= 0.0:
            raise ValueError("audit box extents must be positive")


def bounds_audit(
    box: AuditBox,
    mu: float,
    samples: int,
    d: float = 1.0,
    depth: float = 5.0,
    u0: float = 0.5,
    m: float = 1.0,
    eps: float = 4.0,
    q: int = 1,
    a: float = 0.15,
    k: float = -1.0,
    h: float = 0.19,
    seed: int = 0,
    fd_step: float = 1e-6,
) -> AuditReport:
    """Sample the loop's vector fields over a box and report their bound maxima.

    The smooth signum tanh(mu * x) replaces the hard sign in the drift field so
    every sampled quantity is differentiable.  A_1 bounds the field magnitudes,
    A_3 their state Jacobians (finite differences), and A_5 the state Jacobian
    of the perturbation-pair bracket; A_2, A_4, A_6 bound explicit time
    dependence and are identically zero because none of the fields depends on
    time.  Raises UnboundedSample if any evaluation is non-finite.
    """
    if mu <= 0.0:
        raise ValueError("mu must be > 0")
    if samples < 8:
        raise ValueError("need at least 8 samples")

    # Grid over the box plus uniform random fill, merged into flat arrays.
    n_grid = max(2, int(round((samples / 5.0) ** (1.0 / 3.0))))
    g_r = np.linspace(0.0, box.r_max, n_grid)
    g_a = np.linspace(-math.pi, math.pi, n_grid)
    g_x = np.linspace(-box.x_max, box.x_max, n_grid)
    rr, aa, xx = (arr.ravel() for arr in np.meshgrid(g_r, g_a, g_x))
    n_rand = max(samples - rr.size, 0)
    rng = np.random.default_rng(seed)
    r = np.concatenate([rr, rng.uniform(0.0, box.r_max, n_rand)])
    al = np.concatenate([aa, rng.uniform(-math.pi, math.pi, n_rand)])
    xe = np.concatenate([xx, rng.uniform(-box.x_max, box.x_max, n_rand)])

    def fields(rv, av, xv):
        """Stacked field values b0, b1, b2 at the sample arrays; shape (3, 3, N)."""
        base = 0.25 * d * d + rv * rv + depth * depth
        cross = d * rv * np.sin(av)
        r1 = np.sqrt(base + cross)
        r2 = np.sqrt(base - cross)
        delta = 2.0 * rv * np.sin(av) / (r1 + r2)  # cancellation-free (r1 - r2) / d
        f = delta * delta
        sin2a = np.sin(2.0 * av)
        u_dir = np.tanh(mu * delta * sin2a)
        u_amp = u0 * (1.0 - np.tanh(m * f))
        u_zeta = (rv / (rv + eps)) ** q
        u_over_r = u_dir * u_amp * rv ** (q - 1) / (rv + eps) ** q
        b0 = np.stack([
            -u_zeta * u_dir * u_amp * np.cos(av),
            u_over_r * np.sin(av),
            -xv * h + f,
        ])
        zeros = np.zeros_like(rv)
        b1 = np.stack([zeros, k * (f - xv * h), zeros])
        b2 = np.stack([zeros, np.full_like(rv, a), zeros])
        return b0, b1, b2

    def bracket(rv, av, xv):
        """Perturbation-pair bracket field: only the angle row is nonzero."""
        base = 0.25 * d * d + rv * rv + depth * depth
        cross = d * rv * np.sin(av)
        r1r2 = np.sqrt((base + cross) * (base - cross))
        zeros = np.zeros_like(rv)
        return np.stack([zeros, a * k * rv * rv * np.sin(2.0 * av) / r1r2, zeros])

    def check(arr: np.ndarray, label: str) -> None:
        if not np.all(np.isfinite(arr)):
            raise UnboundedSample(f"non-finite value encountered while sampling {label}")

    b0, b1, b2 = fields(r, al, xe)
    for label, arr in (("b0", b0), ("b1", b1), ("b2", b2)):
        check(arr, label)
    a1 = max(float(np.max(np.linalg.norm(arr, axis=0))) for arr in (b0, b1, b2))

    # Jacobian maxima by central differences; base points nudged inside the box.
    hstep = fd_step
    rb = np.clip(r, hstep, box.r_max - hstep)
    xb = np.clip(xe, -box.x_max + hstep, box.x_max - hstep)

    def jac_max(func, n_fields: int, label: str) -> float:
        cols = []
        for dim in range(3):
            drv = hstep if dim == 0 else 0.0
            dav = hstep if dim == 1 else 0.0
            dxv = hstep if dim == 2 else 0.0
            hi = func(rb + drv, al + dav, xb + dxv)
            lo = func(rb - drv, al - dav, xb - dxv)
            if n_fields == 1:
                cols.append((hi - lo) / (2.0 * hstep))
            else:
                cols.append([(h_ - l_) / (2.0 * hstep) for h_, l_ in zip(hi, lo)])
        if n_fields == 1:
            jac = np.stack(cols)  # (3 cols, 3 rows, N)
            check(jac, label)
            return float(np.max(np.sqrt(np.sum(jac * jac, axis=(0, 1)))))
        worst = 0.0
        for idx in range(n_fields):
            jac = np.stack([cols[dim][idx] for dim in range(3)])
            check(jac, f"{label}[{idx}]")
            worst = max(worst, float(np.max(np.sqrt(np.sum(jac * jac, axis=(0, 1))))))
        return worst

    a3 = jac_max(fields, 3, "d(b_i)/d(state)")
    a5 = jac_max(bracket, 1, "d(bracket)/d(state)")

    return AuditReport(a1=a1, a2=0.0, a3=a3, a4=0.0, a5=a5, a6=0.0, samples=int(r.size))
