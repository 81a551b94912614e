"""
Tests for EstimationService
"""

import math

import numpy as np
import pytest

from chalicelib.models import SqueezerSpectrum
from chalicelib.services.correlation_service import CorrelationService
from chalicelib.services.estimation_service import SLOPE_WINDOW, EstimationService
from chalicelib.utils.validators import DomainError, ValidationError


class TestTwinBeamEstimators:
    """Test cases for the twin-beam estimators"""

    def setup_method(self):
        self.correlations = CorrelationService()
        self.estimation_service = EstimationService(self.correlations)

    def test_mode_number_law(self):
        for n_modes in (1, 2, 4, 8, 16):
            g2 = self.correlations.g2_twin_lowgain(SqueezerSpectrum.uniform(n_modes)).value

            result = self.estimation_service.estimate_K_from_g2(g2)

            assert result.quantity == "K"
            assert result.value == pytest.approx(n_modes, abs=1e-9)

    def test_thermal_parameter_round_trip(self):
        for mu in np.round(np.arange(0.1, 0.95, 0.1), 1):
            g2 = self.correlations.g2_twin_lowgain(SqueezerSpectrum.thermal(float(mu))).value

            assert self.estimation_service.estimate_mu_from_g2(g2).value == pytest.approx(mu, abs=1e-6)

    def test_g2_outside_low_gain_domain(self):
        with pytest.raises(DomainError):
            self.estimation_service.estimate_K_from_g2(2.5)
        with pytest.raises(DomainError):
            self.estimation_service.estimate_K_from_g2(1.0)
        with pytest.raises(DomainError):
            self.estimation_service.estimate_mu_from_g2(0.9)

    def test_gain_inversion(self):
        for gain in (0.01, 0.3, 1.2):
            g11 = self.correlations.g11_twin(SqueezerSpectrum.from_gain(gain, [1.0])).value

            result = self.estimation_service.estimate_B_from_g11(g11, [1.0])

            assert result.value == pytest.approx(gain, rel=1e-8)

    def test_gain_inversion_with_multimode_distribution(self):
        lam = SqueezerSpectrum.thermal(0.5).lam
        g11 = self.correlations.g11_twin(SqueezerSpectrum.from_gain(0.7, lam)).value

        assert self.estimation_service.estimate_B_from_g11(g11, lam).value == pytest.approx(0.7, rel=1e-8)

    def test_low_gain_form_agrees_only_at_low_gain(self):
        for gain in (0.01, 0.03, 0.05):
            g11 = self.correlations.g11_twin(SqueezerSpectrum.from_gain(gain, [1.0])).value

            assert self.estimation_service.estimate_B_from_g11(g11).value == pytest.approx(gain, rel=0.01)

        g11 = self.correlations.g11_twin(SqueezerSpectrum.from_gain(1.2, [1.0])).value
        low_gain = self.estimation_service.estimate_B_from_g11(g11).value
        assert abs(low_gain - 1.2) / 1.2 > 0.05

    def test_g11_must_exceed_one(self):
        with pytest.raises(DomainError):
            self.estimation_service.estimate_B_from_g11(1.0)

    def test_g11_below_asymptote(self):
        with pytest.raises(DomainError) as exc_info:
            self.estimation_service.estimate_B_from_g11(1.5, [1.0])

        assert "g11 below high-gain asymptote" in str(exc_info.value)


class TestSingleBeamEstimators:
    """Test cases for the single-beam slope and gain estimators"""

    def setup_method(self):
        self.correlations = CorrelationService()
        self.estimation_service = EstimationService(self.correlations)

    def test_single_mode_slope_is_nine(self):
        curve = self.estimation_service.sweep_single_beam_curve([1.0], (0.1, 2.0), 16)

        assert curve.slope == pytest.approx(9.0, rel=1e-9)
        assert curve.points.shape == (16, 2)

    def test_sweep_range_is_validated(self):
        with pytest.raises(ValidationError):
            self.estimation_service.sweep_single_beam_curve([1.0], (0.0, 1.0))
        with pytest.raises(ValidationError):
            self.estimation_service.sweep_single_beam_curve([1.0], (0.5, 3.5))
        with pytest.raises(ValidationError):
            self.estimation_service.sweep_single_beam_curve([1.0], (0.1, 1.0), 4)

    def test_slope_round_trip_thermal(self):
        for mu in (0.3, 0.6, 0.9):
            lam = SqueezerSpectrum.thermal(mu).lam
            slope = self.estimation_service.sweep_single_beam_curve(lam, SLOPE_WINDOW).slope

            assert self.estimation_service.map_slope_to_mu(slope).value == pytest.approx(mu, rel=0.02)

    def test_slope_round_trip_uniform(self):
        for n_modes in (1, 2, 4):
            lam = SqueezerSpectrum.uniform(n_modes).lam
            slope = self.estimation_service.sweep_single_beam_curve(lam, SLOPE_WINDOW).slope

            assert self.estimation_service.map_slope_to_K(slope).value == pytest.approx(n_modes, rel=0.02)

    def test_slope_between_table_nodes(self):
        lam = SqueezerSpectrum.thermal(0.455).lam
        slope = self.estimation_service.sweep_single_beam_curve(lam, SLOPE_WINDOW).slope

        assert self.estimation_service.map_slope_to_mu(slope).value == pytest.approx(0.455, rel=0.02)

    def test_slope_outside_calibration(self):
        with pytest.raises(DomainError):
            self.estimation_service.map_slope_to_K(20.0)
        with pytest.raises(DomainError):
            self.estimation_service.map_slope_to_mu(1.0)

    def test_fit_slope_of_measured_points(self):
        points = [[3.5, 19.5], [4.0, 24.0], [5.0, 33.0]]

        assert self.estimation_service.fit_slope(points) == pytest.approx(9.0)

    def test_fit_slope_needs_pairs(self):
        with pytest.raises(ValidationError):
            self.estimation_service.fit_slope([[3.0, 15.0]])

    def test_single_beam_gain(self):
        g2 = self.correlations.g2_single(SqueezerSpectrum.from_gain(0.8, [1.0, 0.5])).value

        result = self.estimation_service.estimate_B_single_from_g2(g2, [1.0, 0.5])

        assert result.value == pytest.approx(0.8, rel=1e-8)

    def test_single_mode_asymptote_is_out_of_reach(self):
        with pytest.raises(DomainError) as exc_info:
            self.estimation_service.estimate_B_single_from_g2(3.0, [1.0])

        assert "g2 below high-gain asymptote" in str(exc_info.value)

    def test_single_beam_low_gain_form(self):
        result = self.estimation_service.estimate_B_single_from_g2(400.0, [1.0])

        assert result.value == pytest.approx(0.05)
        assert result.method == "B = 1/sqrt(g2)"


class TestEstimateFromMeasurements:
    """Test cases for the combined estimator"""

    def setup_method(self):
        self.correlations = CorrelationService()
        self.estimation_service = EstimationService(self.correlations)

    def test_twin_beam(self):
        spectrum = SqueezerSpectrum.thermal(0.5, B=0.02)
        measured = {
            "beam": "twin",
            "g2": self.correlations.g2_twin_lowgain(spectrum).value,
            "g11": self.correlations.g11_twin(spectrum).value,
        }

        results = {r.quantity: r.value for r in self.estimation_service.estimate_from_measurements(measured)}

        assert results["mu"] == pytest.approx(0.5, abs=1e-6)
        assert results["K"] == pytest.approx((1 + 0.25) / (1 - 0.25), rel=1e-6)
        assert results["B"] == pytest.approx(0.02, rel=1e-5)

    def test_single_beam(self):
        lam = SqueezerSpectrum.uniform(2).lam
        curve = self.estimation_service.sweep_single_beam_curve(lam, SLOPE_WINDOW)
        measured = {"beam": "single", "points": curve.points.tolist(), "g2": float(curve.points[20, 0]),
                    "lambda": lam.tolist()}

        results = {r.quantity: r.value for r in self.estimation_service.estimate_from_measurements(measured)}

        assert results["K"] == pytest.approx(2.0, rel=0.02)
        assert results["B"] == pytest.approx(curve.B[20], rel=1e-8)
        assert "slope" in results

    def test_unknown_beam(self):
        with pytest.raises(ValidationError):
            self.estimation_service.estimate_from_measurements({"beam": "triple", "g2": 1.5})

    def test_nothing_to_estimate(self):
        with pytest.raises(ValidationError):
            self.estimation_service.estimate_from_measurements({"beam": "twin"})

    def test_non_numeric_values_are_rejected(self):
        with pytest.raises(ValidationError) as exc_info:
            self.estimation_service.estimate_from_measurements({"g2": "1.5"})
        assert "measured.g2" in str(exc_info.value)

        with pytest.raises(ValidationError) as exc_info:
            self.estimation_service.estimate_from_measurements({"beam": "single", "points": [["a", 1], [2, 3]]})
        assert "measured.points[0]" in str(exc_info.value)

        with pytest.raises(ValidationError):
            self.estimation_service.estimate_from_measurements({"g11": 40.0, "lambda": [1.0, "x"]})

    def test_single_beam_g3_residual(self):
        lam = SqueezerSpectrum.uniform(3).lam
        spectrum = SqueezerSpectrum.from_gain(0.9, lam)
        measured = {
            "beam": "single",
            "g2": self.correlations.g2_single(spectrum).value,
            "g3": self.correlations.g3_single(spectrum).value,
            "lambda": lam.tolist(),
        }

        results = {r.quantity: r.value for r in self.estimation_service.estimate_from_measurements(measured)}

        assert results["B"] == pytest.approx(0.9, rel=1e-8)
        assert results["g3_residual"] == pytest.approx(0.0, abs=1e-6)

    def test_g3_needs_single_beam_and_g2(self):
        with pytest.raises(ValidationError):
            self.estimation_service.estimate_from_measurements({"beam": "twin", "g2": 1.5, "g3": 4.0})
        with pytest.raises(ValidationError):
            self.estimation_service.estimate_from_measurements({"beam": "single", "g3": 20.0})

    def test_result_document(self):
        result = self.estimation_service.estimate_K_from_g2(1.25)

        assert result.to_dict()["quantity"] == "K"
        assert math.isclose(result.to_dict()["value"], 4.0)
