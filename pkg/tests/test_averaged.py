import math

import numpy as np
import pytest

from tdoaseek import averaged as A
from tdoaseek.control import EsParams, SurgeParams
from tdoaseek.geometry import cost, delta_from_polar
from tdoaseek.plant import SingularRange

ES = EsParams(0.15, 2 * math.pi / 16.0, -1.0, 0.19)
ES_STIFF = EsParams(0.15, 2 * math.pi / 16.0, -10.0, 0.19)
SURGE = SurgeParams(0.5, 100.0, 4.0, 3)
D, Z = 5.0, 5.0


def fd_gradient(r, alpha, d, depth, step=1e-5):
    hi = cost(delta_from_polar(r, alpha + step, d, depth))
    lo = cost(delta_from_polar(r, alpha - step, d, depth))
    return (hi - lo) / (2.0 * step)


class TestCostGradient:
    def test_zero_on_axis(self):
        assert A.cost_gradient_alpha(20.0, 0.0, 1.0, 5.0) == 0.0

    def test_zero_broadside(self):
        assert A.cost_gradient_alpha(20.0, math.pi / 2, 1.0, 5.0) == pytest.approx(0.0, abs=1e-12)

    def test_matches_finite_differences(self):
        got = A.cost_gradient_alpha(20.0, math.pi / 4, 1.0, 5.0)
        ref = fd_gradient(20.0, math.pi / 4, 1.0, 5.0)
        assert got == pytest.approx(ref, rel=0.02)
        # The closed form is exact for the squared measurement, so the only
        # error left is finite-difference truncation.
        assert got == pytest.approx(ref, rel=1e-6)

    def test_random_grid(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            r = rng.uniform(5.0, 100.0)
            alpha = rng.uniform(-1.5, 1.5)
            d = rng.uniform(0.5, 10.0)
            depth = rng.uniform(0.5, 30.0)
            assert A.cost_gradient_alpha(r, alpha, d, depth) == pytest.approx(
                fd_gradient(r, alpha, d, depth), rel=1e-4, abs=1e-9
            )


class TestAveragedDerivative:
    def test_on_axis_approach_is_invariant(self):
        z = A.AveragedState(30.0, 1e-9, 0.0)
        dr, dalpha, _ = A.averaged_derivative(z, ES, SURGE, D, Z)
        assert dr < 0.0
        assert abs(dalpha) < 1e-8

    def test_heading_converges_without_surge(self):
        surge0 = SurgeParams(0.0, 100.0, 4.0, 3)
        for alpha in (0.3, 0.9, 1.4):
            z = A.AveragedState(25.0, alpha, 0.0)
            _, dalpha, _ = A.averaged_derivative(z, ES, surge0, D, Z)
            assert dalpha < 0.0

    def test_equilibrium_ray(self):
        # Exactly on the facing ray the measurement is exactly zero, so range
        # and angle freeze.  The half-turn image behaves identically to its
        # front-side twin (reverse drive compensates the flipped trig signs).
        z = A.AveragedState(12.0, 0.0, 0.0)
        dr, dalpha, _ = A.averaged_derivative(z, ES, SURGE, D, Z)
        assert dr == 0.0
        assert dalpha == 0.0
        for alpha in (1e-9, 0.3, 1.2):
            front = A.averaged_derivative(A.AveragedState(12.0, alpha, 0.0), ES, SURGE, D, Z)
            back = A.averaged_derivative(A.AveragedState(12.0, alpha - math.pi, 0.0), ES, SURGE, D, Z)
            assert back[0] == pytest.approx(front[0], abs=1e-12)

    def test_near_origin_equilibrium_family(self):
        z = A.AveragedState(1e-9, math.pi, 0.0)
        derivs = A.averaged_derivative(z, ES, SURGE, D, Z, r_floor=0.0)
        assert max(abs(v) for v in derivs) < 1e-15

    def test_singular_floor(self):
        with pytest.raises(SingularRange):
            A.averaged_derivative(A.AveragedState(1e-9, 0.3, 0.0), ES, SURGE, D, Z)


class TestLyapunov:
    def test_zero_at_origin_limit(self):
        v, _ = A.lyapunov(A.AveragedState(1e-12, 0.0, 0.0), ES, SURGE, D, Z)
        assert v == pytest.approx(0.0, abs=1e-20)

    def test_angle_term_nonpositive_on_grid(self):
        # Gain set passing the tuning condition (k=-10, eps=4, delta=0); the
        # angle channel of the energy derivative must be dissipative across
        # the sampled operating box.
        worst = -np.inf
        for r in np.linspace(5.0, 50.0, 46):
            for alpha in np.linspace(-1.55, 1.55, 63):
                if alpha == 0.0:
                    continue
                z = A.AveragedState(float(r), float(alpha), 0.0)
                _, v_alpha, _ = A.lyapunov_terms(z, ES_STIFF, SURGE, D, Z)
                worst = max(worst, v_alpha)
        assert worst <= 1e-9

    def test_angle_term_zero_broadside(self):
        for alpha in (math.pi / 2, -math.pi / 2):
            z = A.AveragedState(20.0, alpha, 0.0)
            _, v_alpha, _ = A.lyapunov_terms(z, ES_STIFF, SURGE, D, Z)
            assert abs(v_alpha) < 1e-12


class TestTuningCondition:
    def test_zero_speed_always_satisfied(self):
        t = A.TuningInputs(0.0, 5.0, 5.0, 0.15, -1.0, 4.0, 1.0)
        assert A.tuning_condition(t)

    def test_nominal_gains_fail_conservative_case(self):
        t = A.TuningInputs(0.5, 5.0, 5.0, 0.15, -1.0, 4.0, math.pi / 3)
        assert A.tuning_lhs(t) == pytest.approx(43.3, abs=1e-9)
        assert not A.tuning_condition(t)

    def test_stiff_demodulation_passes(self):
        t = A.TuningInputs(0.5, 5.0, 5.0, 0.15, -10.0, 4.0, 0.0)
        assert A.tuning_lhs(t) == pytest.approx(-321.5, abs=1e-9)
        assert A.tuning_condition(t)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            A.TuningInputs(0.5, 5.0, 5.0, 0.15, 1.0, 4.0, 0.0)
        with pytest.raises(ValueError):
            A.TuningInputs(0.5, 5.0, 5.0, 0.15, -1.0, 4.0, math.pi / 2)


class TestIntegrateAveraged:
    def test_heading_magnitude_monotone_and_range_enters_knee(self):
        z0 = A.AveragedState(40.0, 1.0, 0.0)
        _, rs, alphas, _ = A.integrate_averaged(z0, ES_STIFF, SURGE, D, Z, 0.05, 600.0)
        mags = np.abs(alphas)
        assert np.all(np.diff(mags) <= 1e-12)
        assert rs[-1] < SURGE.eps

    def test_range_floor_stops_integration(self):
        z0 = A.AveragedState(5.0, 0.05, 0.0)
        ts, rs, _, _ = A.integrate_averaged(z0, ES_STIFF, SURGE, D, Z, 0.05, 4000.0, r_floor=1.0)
        assert rs[-1] < 1.0 + 0.1
        assert ts[-1] < 4000.0


class TestBoundsAudit:
    def test_report_finite_and_time_terms_zero(self):
        rep = A.bounds_audit(A.AuditBox(100.0, 1.0), mu=100.0, samples=5000)
        values = rep.maxima()
        assert all(math.isfinite(v) for v in values.values())
        assert values["A_2"] == 0.0
        assert values["A_4"] == 0.0
        assert values["A_6"] == 0.0
        assert rep.samples >= 5000

    def test_field_magnitude_respects_analytic_bound(self):
        # With the drive amplitude off, every field row is bounded by
        # |k| * (1 + h * x_max) or the perturbation amplitude.
        rep = A.bounds_audit(A.AuditBox(100.0, 1.0), mu=100.0, samples=5000, u0=0.0, k=-1.0, h=0.19)
        assert rep.a1 <= 1.0 * (1.0 + 0.19 * 1.0) + 1e-9

    def test_report_text_layout(self):
        rep = A.bounds_audit(A.AuditBox(10.0, 1.0), mu=50.0, samples=1000)
        text = rep.to_text()
        for name in ("A_1", "A_2", "A_3", "A_4", "A_5", "A_6", "samples"):
            assert f"{name} = " in text

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            A.bounds_audit(A.AuditBox(10.0, 1.0), mu=0.0, samples=1000)
        with pytest.raises(ValueError):
            A.AuditBox(-1.0, 1.0)
