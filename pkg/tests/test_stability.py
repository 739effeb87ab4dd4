"""Unit tests for the design criterion, crossing analysis, and region chart."""

import math

import pytest

from conftest import PI2, eval_q
from delaystab.quasipoly import ModalQuasipolynomial, spectral_abscissa
from delaystab.stability import (ControlParams, ModeSpec, admissible_alpha_interval,
                                 boundary_lines, check_stabilizing,
                                 critical_delays, crossing_frequencies,
                                 distance_to_boundary, k_index, region_grid,
                                 scaled_stability_criterion)

MODE1 = ModeSpec(n=1, ell=1.0)


class TestKIndex:
    def test_paper_cases(self):
        assert k_index(MODE1, 1.5) == 1
        assert k_index(MODE1, 2.5) == 2

    def test_resonant_delays_have_no_k(self):
        for tau in (1.0, 2.0, 3.0):
            assert k_index(MODE1, tau) is None

    def test_small_tau_gives_zero(self):
        assert k_index(MODE1, 0.4) == 0

    def test_resonance_tolerance_is_relative(self):
        assert k_index(MODE1, 2.0 * (1.0 + 5e-13)) is None
        assert k_index(MODE1, 2.0 * (1.0 + 1e-9)) == 2

    def test_other_modes(self):
        assert k_index(ModeSpec(n=2, ell=1.0), 0.75) == 1
        assert k_index(ModeSpec(n=3, ell=2.0), 1.0) == 1
        assert k_index(ModeSpec(n=2, ell=1.0), 1.5) is None


class TestAdmissibleInterval:
    def test_case_tau_1_5(self):
        lo, hi = admissible_alpha_interval(MODE1, 1.5)
        assert lo == 0.0
        assert hi == pytest.approx(5.0 * PI2 / 9.0, rel=1e-12)
        assert hi == pytest.approx(5.4831, abs=1e-4)
        # both closed-loop gains of the slow/fast cases lie inside
        assert lo < 3.0 < hi and lo < 5.0 < hi

    def test_case_tau_2_5(self):
        lo, hi = admissible_alpha_interval(MODE1, 2.5)
        assert hi == 0.0
        assert lo == pytest.approx(-2.25 * PI2 / 6.25, rel=1e-12)
        assert lo == pytest.approx(-3.5531, abs=1e-4)
        assert lo < -1.7766 < hi

    def test_resonant_empty(self):
        assert admissible_alpha_interval(MODE1, 1.0) is None

    def test_even_k_interval_is_negative_side(self):
        lo, hi = admissible_alpha_interval(MODE1, 0.5)  # k = 0
        assert lo < 0.0 == hi


class TestCertificate:
    def test_satisfied_cases(self):
        c1 = check_stabilizing(MODE1, ControlParams(1.5, 5.0))
        assert c1.satisfied and c1.k == 1
        c3 = check_stabilizing(MODE1, ControlParams(2.5, -1.7766))
        assert c3.satisfied and c3.k == 2

    def test_gain_outside_interval(self):
        cert = check_stabilizing(MODE1, ControlParams(1.5, 6.0))
        assert not cert.satisfied
        assert cert.alpha_interval is not None  # interval exists, alpha outside

    def test_resonant_certificate_empty(self):
        cert = check_stabilizing(MODE1, ControlParams(1.0, 5.0))
        assert cert.k is None and cert.alpha_interval is None and not cert.satisfied

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            ControlParams(0.0, 5.0)
        with pytest.raises(ValueError):
            ControlParams(1.5, 0.0)


class TestCrossingFrequencies:
    def test_two_frequencies_inside_case_b(self):
        data = crossing_frequencies(PI2, 5.0)
        assert data.omega_plus == pytest.approx(math.sqrt(PI2 + 5.0), rel=1e-14)
        assert data.omega_minus == pytest.approx(math.sqrt(PI2 - 5.0), rel=1e-14)
        assert data.omega_plus == pytest.approx(3.8561, abs=1e-4)
        assert data.omega_minus == pytest.approx(2.2067, abs=1e-4)

    def test_case_a_boundary_single_frequency(self):
        data = crossing_frequencies(PI2, PI2)
        assert data.omega_plus == pytest.approx(math.sqrt(2.0) * math.pi, rel=1e-14)
        assert data.omega_minus is None

    def test_negative_alpha_boundary(self):
        data = crossing_frequencies(1.0, -1.0)
        assert data.omega_plus == pytest.approx(math.sqrt(2.0), rel=1e-14)
        assert data.omega_minus is None

    def test_identity_randomized(self, rng):
        for _ in range(200):
            beta = float(rng.uniform(0.1, 100.0))
            alpha = float(rng.uniform(-50, 50)) or 1.0
            data = crossing_frequencies(beta, alpha)
            assert abs(data.omega_plus**2 - (beta + abs(alpha))) <= \
                1e-12 * (beta + abs(alpha))
            if alpha * alpha < beta * beta:
                assert data.omega_minus is not None
                assert abs(beta - data.omega_minus**2 - abs(alpha)) <= 1e-12 * beta
                assert 0 < data.omega_minus < data.omega_plus


class TestCriticalDelays:
    def test_omega_plus_delays(self):
        data = critical_delays(PI2, 5.0, 2)
        w = data.omega_plus
        assert data.critical_delays_plus == pytest.approx(
            (2 * math.pi / w, 4 * math.pi / w), rel=1e-14)
        assert data.critical_delays_plus[0] == pytest.approx(1.6294, abs=1e-4)

    def test_omega_minus_delays(self):
        data = critical_delays(PI2, 5.0, 2)
        w = data.omega_minus
        assert data.critical_delays_minus == pytest.approx(
            (math.pi / w, 3 * math.pi / w), rel=1e-14)
        assert data.critical_delays_minus[0] == pytest.approx(1.4236, abs=1e-4)
        # 3*pi/omega_minus = 4.27095 (the defining residual check is below)
        assert data.critical_delays_minus[1] == pytest.approx(4.2709, abs=1e-4)

    def test_negative_alpha_first_delay(self):
        data = critical_delays(1.0, -1.0, 1)
        assert data.critical_delays_plus[0] == pytest.approx(
            math.pi / math.sqrt(2.0), rel=1e-14)

    def test_residuals_vanish(self, rng):
        for _ in range(100):
            beta = float(rng.uniform(0.1, 60.0))
            alpha = float(rng.uniform(-30, 30)) or 2.0
            data = critical_delays(beta, alpha, 3)
            for omega, taus in ((data.omega_plus, data.critical_delays_plus),
                                (data.omega_minus, data.critical_delays_minus)):
                if omega is None:
                    continue
                for tau in taus:
                    assert abs(eval_q(beta, alpha, tau, 1j * omega)) <= 1e-10


class TestScaledCriterion:
    def test_case1_scaled_cell(self):
        # (tau^2 beta, tau^2 alpha) for tau=1.5, beta=pi^2, alpha=5
        ok, k = scaled_stability_criterion(2.25 * PI2, 11.25)
        assert ok and k == 1

    def test_pinch_line_never_stable(self):
        for alpha in (0.5, -0.5, 3.0, -3.0):
            ok, _ = scaled_stability_criterion(PI2, alpha)
            assert not ok

    def test_k0_lobe(self):
        ok, k = scaled_stability_criterion(2.0, -1.0)
        assert ok and k == 0

    def test_scaling_equivalence(self, rng):
        # certificate for (mode, tau, alpha) == scaled criterion at
        # (tau^2 n^2 pi^2 / ell^2, tau^2 alpha)
        for _ in range(200):
            mode = ModeSpec(n=int(rng.integers(1, 4)), ell=float(rng.uniform(0.5, 3.0)))
            tau = float(rng.uniform(0.05, 3.0))
            alpha = float(rng.uniform(-8.0, 8.0)) or 1.0
            cert = check_stabilizing(mode, ControlParams(tau, alpha))
            scaled_ok, _ = scaled_stability_criterion(
                tau * tau * mode.n**2 * PI2 / mode.ell**2, tau * tau * alpha)
            assert cert.satisfied == scaled_ok


class TestResonanceEmptiness:
    def test_resonant_spectrum_not_strictly_stable(self):
        # whenever n*tau/ell is an integer the interval is empty and the
        # rightmost root is at or right of the imaginary axis
        for tau in (1.0, 2.0):
            assert admissible_alpha_interval(MODE1, tau) is None
            q = ModalQuasipolynomial(beta=PI2, alpha=5.0, tau=tau)
            assert spectral_abscissa(q) >= -1e-6


class TestRegionGrid:
    def test_small_grid_agrees_with_criterion(self):
        grid = region_grid((0.5, 4.5 * PI2), (-2 * PI2, 2 * PI2), 24)
        diag = math.hypot(grid.beta_tilde_axis[1] - grid.beta_tilde_axis[0],
                          grid.alpha_tilde_axis[1] - grid.alpha_tilde_axis[0])
        checked = 0
        for i, b in enumerate(grid.beta_tilde_axis):
            for j, a in enumerate(grid.alpha_tilde_axis):
                if not grid.valid[i, j]:
                    continue
                if distance_to_boundary(float(b), float(a)) < diag:
                    continue
                assert grid.analytic_stable[i, j] == (grid.counts[i, j] == 0)
                checked += 1
        assert checked > 150

    def test_case1_cell_in_first_lobe(self):
        grid = region_grid((2.2 * PI2, 2.3 * PI2), (11.0, 11.5), 8)
        assert grid.valid.all()
        assert (grid.counts == 0).all()
        assert grid.analytic_stable.all()

    def test_counts_nonnegative_and_shapes(self):
        grid = region_grid((0.5, 20.0), (-5.0, 5.0), 8)
        assert grid.counts.shape == (8, 8)
        assert (grid.counts >= 0).all()
        assert grid.analytic_stable.shape == (8, 8)

    def test_resolution_validated(self):
        with pytest.raises(ValueError):
            region_grid((0.0, 1.0), (0.0, 1.0), 4)


class TestBoundaryLines:
    def test_lines_lie_on_crossing_locus(self):
        # points on alpha~ = +-(beta~ - m^2 pi^2) have a root at i*m*pi
        rows = boundary_lines((0.0, 9 * PI2), (-4 * PI2, 4 * PI2), samples_per_line=16)
        assert rows
        for family, k, sign, b, a in rows:
            if family == "beta_minus_k2pi2" and a != 0.0:
                # scaled quasipolynomial at tau=1: Q(i k pi) = -k^2pi^2 + b + a(-1)^k
                value = -k * k * PI2 + b + a * (-1.0) ** k
                if sign * (1 if k % 2 == 0 else -1) == -1:
                    assert abs(value) <= 1e-9 * max(1.0, abs(b))

    def test_distance_metric(self):
        # on the vertical pinch line the distance vanishes
        assert distance_to_boundary(PI2, 0.1) == pytest.approx(0.0, abs=1e-12)
        assert distance_to_boundary(8.0, 0.1) == pytest.approx(0.1, abs=1e-12)
        # nearest line to (2, -1) is alpha~ = -beta~ (the omega=0 locus)
        d = distance_to_boundary(2.0, -1.0)
        assert d == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)
