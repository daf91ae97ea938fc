import math

import numpy as np
import pytest

from tdoaseek import control as C
from tdoaseek import plant as P
from tdoaseek.geometry import SourcePosition
from tdoaseek.sim import simulate
from tests.conftest import make_config

HP = P.HighpassParams(0.19)
NO_CURRENT = P.CurrentDisturbance()


class TestCartesianDerivative:
    def test_equilibrium(self):
        state = P.CartesianState(1.0, 2.0, 0.3, 0.0)
        derivs = P.cartesian_derivative(state, 0.0, 0.0, 0.0, HP, NO_CURRENT)
        assert derivs == (0.0, 0.0, 0.0, 0.0)

    def test_forward_motion(self):
        state = P.CartesianState(0.0, 0.0, 0.0, 0.0)
        dx, dy, dpsi, dxe = P.cartesian_derivative(state, 1.0, 0.0, 0.0, HP, NO_CURRENT)
        assert dx == pytest.approx(1.0)
        assert dy == pytest.approx(0.0)

    def test_highpass_state_derivative(self):
        state = P.CartesianState(0.0, 0.0, 0.0, 1.0)
        *_, dxe = P.cartesian_derivative(state, 0.0, 0.0, 0.25, HP, NO_CURRENT)
        assert dxe == pytest.approx(0.06, rel=1e-12)

    def test_velocity_mode_adds_current(self):
        state = P.CartesianState(0.0, 0.0, 0.0, 0.0)
        drift = P.CurrentDisturbance(0.05, -0.02, "velocity")
        dx, dy, *_ = P.cartesian_derivative(state, 0.0, 0.0, 0.0, HP, drift)
        assert (dx, dy) == pytest.approx((0.05, -0.02))

    def test_position_mode_cancels_current(self):
        state = P.CartesianState(0.0, 0.0, 0.0, 0.0)
        drift = P.CurrentDisturbance(0.05, -0.02, "position")
        dx, dy, *_ = P.cartesian_derivative(state, 0.0, 0.0, 0.0, HP, drift)
        assert (dx, dy) == (0.0, 0.0)


class TestPolarDerivative:
    def test_closing_when_facing(self):
        state = P.PolarState(10.0, 0.0, 0.0)
        dr, _, _ = P.polar_derivative(state, 0.5, 0.0, 0.0, HP)
        assert dr == pytest.approx(-0.5)

    def test_broadside_holds_range(self):
        state = P.PolarState(10.0, math.pi / 2, 0.0)
        dr, _, _ = P.polar_derivative(state, 0.7, 0.0, 0.0, HP)
        assert dr == pytest.approx(0.0, abs=1e-15)

    def test_angle_coupling(self):
        state = P.PolarState(10.0, math.pi / 6, 0.0)
        _, dalpha, _ = P.polar_derivative(state, 0.5, 0.0, 0.0, HP)
        assert dalpha == pytest.approx(0.025, rel=1e-12)

    def test_singular_below_floor(self):
        with pytest.raises(P.SingularRange):
            P.polar_derivative(P.PolarState(1e-9, 0.0, 0.0), 0.1, 0.0, 0.0, HP)


class TestHighpassResponse:
    def test_exponential_settling_to_scaled_cost(self):
        # With the vehicle parked, x_e follows the linear filter solution
        # f/h + (x0 - f/h) * exp(-h t).
        f = 0.25
        h = 0.19
        hp = P.HighpassParams(h)
        state = (0.0, 0.0, 0.0, 0.0)
        dt = 0.01

        def rhs(t, y):
            return P.cartesian_derivative(P.CartesianState(*y), 0.0, 0.0, f, hp, NO_CURRENT)

        y = state
        t = 0.0
        for _ in range(3000):
            y = P._rk4(rhs, t, y, dt)
            t += dt
        expected = f / h * (1.0 - math.exp(-h * t))
        assert y[3] == pytest.approx(expected, rel=1e-9)
        assert y[0] == 0.0 and y[1] == 0.0


class TestConsistencyCheck:
    ES = C.EsParams(0.15, 2 * math.pi / 16.0, -1.0, 0.19)
    SURGE = C.SurgeParams(0.5, 100.0, 4.0, 3)
    SRC = SourcePosition(0.0, 0.0, 5.0)

    def test_static_surge_free_run(self):
        # Zero max speed pins the position bit-exactly in both charts; only the
        # heading channel integrates, and the two charts stay together to
        # rounding.
        surge0 = C.SurgeParams(0.0, 100.0, 4.0, 3)
        start = P.CartesianState(10.0, 0.0, math.pi / 2, 0.0)
        dev = P.consistency_check(start, self.SRC, 5.0, self.ES, surge0, 30.0, 0.01)
        assert dev < 1e-12

    def test_fourth_order_step_halving(self):
        start = P.CartesianState(40.0, 0.0, 1.0 - math.pi, 0.0)
        coarse = P.consistency_check(start, self.SRC, 5.0, self.ES, self.SURGE, 160.0, 0.16)
        fine = P.consistency_check(start, self.SRC, 5.0, self.ES, self.SURGE, 160.0, 0.08)
        assert fine < coarse
        assert 8.0 < coarse / fine < 32.0


class TestClosedLoopPlantInvariants:
    def test_zero_surge_keeps_position(self):
        cfg = make_config(surge_u0=0.0, sim_t_max=30.0, sim_r_stop=0.0)
        tr = simulate(cfg)
        assert np.all(tr.x_c == tr.x_c[0])
        assert np.all(tr.y_c == tr.y_c[0])

    def test_position_mode_ignores_current_bit_exactly(self):
        base = make_config(sim_t_max=40.0)
        with_current = make_config(sim_t_max=40.0, current_vx=0.05, current_reference="position")
        tr0 = simulate(base)
        tr1 = simulate(with_current)
        for name in ("x_c", "y_c", "psi", "x_e", "v1", "v2", "u_c"):
            assert np.array_equal(tr0.column(name), tr1.column(name))

    def test_velocity_mode_changes_trajectory(self):
        base = make_config(sim_t_max=40.0)
        drifting = make_config(sim_t_max=40.0, current_vx=0.05, current_reference="velocity")
        assert not np.array_equal(simulate(base).x_c, simulate(drifting).x_c)

    def test_command_lag_smooths_initial_surge(self):
        crisp = simulate(make_config(sim_t_max=20.0))
        lagged = simulate(make_config(sim_t_max=20.0, sim_command_lag=2.0))
        assert not np.array_equal(crisp.psi, lagged.psi)
        # Lagged heading rate cannot jump at t=0, so headings initially trail.
        assert abs(lagged.psi[1] - lagged.psi[0]) < abs(crisp.psi[1] - crisp.psi[0])
