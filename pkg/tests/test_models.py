"""
Tests for the immutable domain types
"""

import math

import numpy as np
import pytest

from chalicelib.models import (
    DetectorModel, EstimatedCorrelation, FrequencyGrid, JointSpectralAmplitude, PulseEnsemble,
    SqueezerSpectrum, ThermalModeFit,
)
from chalicelib.utils.validators import DomainError, ValidationError


class TestFrequencyGrid:
    """Test cases for FrequencyGrid"""

    def test_axis_values_are_start_plus_index_times_step(self):
        grid = FrequencyGrid(start_s=2.0e15, step_s=1.0e9, n_s=1001, start_i=1.0e15, step_i=3.0e9, n_i=5)

        k = np.arange(1001)
        assert np.array_equal(grid.omega_s, 2.0e15 + k * 1.0e9)
        assert grid.omega_i[-1] == 1.0e15 + 4 * 3.0e9

    def test_rejects_single_point_axis(self):
        with pytest.raises(ValidationError):
            FrequencyGrid(start_s=0.0, step_s=1.0, n_s=1, start_i=0.0, step_i=1.0, n_i=4)

    def test_rejects_non_positive_step(self):
        with pytest.raises(ValidationError):
            FrequencyGrid(start_s=0.0, step_s=0.0, n_s=4, start_i=0.0, step_i=1.0, n_i=4)

    def test_centered_grid_is_symmetric(self):
        grid = FrequencyGrid.centered(10.0, 2.0, 20.0, 4.0, 5)

        assert grid.omega_s.tolist() == [8.0, 9.0, 10.0, 11.0, 12.0]
        assert grid.span_i == pytest.approx(8.0)


class TestSqueezerSpectrum:
    """Test cases for SqueezerSpectrum"""

    def test_from_amplitudes_sorts_and_normalizes(self):
        spectrum = SqueezerSpectrum.from_amplitudes([0.3, 0.4])

        assert spectrum.r.tolist() == [0.4, 0.3]
        assert spectrum.B == pytest.approx(0.5)
        assert spectrum.lam.tolist() == pytest.approx([0.8, 0.6])

    def test_all_zero_amplitudes_are_degenerate(self):
        with pytest.raises(DomainError) as exc_info:
            SqueezerSpectrum.from_amplitudes([0.0, 0.0])

        assert "degenerate spectrum" in str(exc_info.value)

    def test_rejects_unsorted_amplitudes(self):
        with pytest.raises(ValidationError):
            SqueezerSpectrum(r=np.array([0.3, 0.4]), B=0.5, lam=np.array([0.6, 0.8]))

    def test_rejects_unnormalized_distribution(self):
        with pytest.raises(ValidationError):
            SqueezerSpectrum(r=np.array([0.5, 0.5]), B=0.5, lam=np.array([1.0, 1.0]))

    def test_rejects_amplitudes_inconsistent_with_gain(self):
        with pytest.raises(ValidationError) as exc_info:
            SqueezerSpectrum(r=np.array([0.9, 0.1]), B=5.0, lam=np.array([0.8, 0.6]))

        assert "B * lambda" in str(exc_info.value)

    def test_rejects_unsorted_distribution(self):
        with pytest.raises(ValidationError):
            SqueezerSpectrum(r=np.array([0.9, 0.1]), B=5.0, lam=np.array([0.6, 0.8]))

    def test_with_gain_keeps_amplitudes_consistent(self):
        spectrum = SqueezerSpectrum.thermal(0.4).with_gain(2.5)

        np.testing.assert_allclose(spectrum.r, 2.5 * spectrum.lam, rtol=0, atol=1e-15)

    def test_zero_gain_is_vacuum(self):
        spectrum = SqueezerSpectrum.from_gain(0.0, [1.0, 1.0])

        assert np.all(spectrum.r == 0.0)
        assert np.sum(spectrum.lam ** 2) == pytest.approx(1.0)

    def test_thermal_distribution_is_geometric_and_truncated(self):
        spectrum = SqueezerSpectrum.thermal(0.5, B=2.0)

        ratios = spectrum.lam[1:] / spectrum.lam[:-1]
        assert np.allclose(ratios, 0.5)
        assert spectrum.lam[-1] / spectrum.lam[0] >= 1e-12
        assert spectrum.lam[-1] * 0.5 / spectrum.lam[0] < 1e-12
        assert spectrum.B == 2.0

    def test_arrays_are_read_only(self):
        spectrum = SqueezerSpectrum.uniform(3)

        with pytest.raises(ValueError):
            spectrum.r[0] = 1.0

    def test_digest_depends_only_on_amplitudes(self):
        a = SqueezerSpectrum.from_gain(0.7, [2.0, 1.0])
        b = SqueezerSpectrum.from_gain(0.7, [1.0, 2.0])

        assert a.digest == b.digest
        assert a.digest != a.with_gain(0.8).digest

    def test_mean_occupations(self):
        spectrum = SqueezerSpectrum.from_amplitudes([math.asinh(1.0)])

        assert spectrum.mean_occupations[0] == pytest.approx(1.0)


class TestSmallTypes:
    """Test cases for the remaining value types"""

    def test_jsa_shape_must_match_grid(self):
        grid = FrequencyGrid.centered(0.0, 1.0, 0.0, 1.0, 4)

        with pytest.raises(ValidationError):
            JointSpectralAmplitude(grid=grid, values=np.ones((4, 3)), coupling_scale=1.0)

    def test_jsa_rejects_non_finite_entries(self):
        grid = FrequencyGrid.centered(0.0, 1.0, 0.0, 1.0, 2)

        with pytest.raises(DomainError):
            JointSpectralAmplitude(grid=grid, values=np.array([[1.0, np.nan], [0.0, 0.0]]), coupling_scale=1.0)

    def test_detector_efficiency_range(self):
        with pytest.raises(ValidationError):
            DetectorModel(efficiency_signal=0.0)
        with pytest.raises(ValidationError):
            DetectorModel(efficiency_idler=1.2)
        with pytest.raises(ValidationError):
            DetectorModel(mode="streak_camera")

    def test_thermal_fit_outside_unit_interval(self):
        with pytest.raises(DomainError):
            ThermalModeFit(mu=1.0, residual=0.0, n_used=3)

    def test_negative_stderr_rejected(self):
        with pytest.raises(ValidationError):
            EstimatedCorrelation(order="g2", value=2.0, stderr=-0.1)

    def test_pulse_ensemble_columns(self):
        ensemble = PulseEnsemble(records=[[1, 2], [3, 4]], seed=7, spectrum_hash="abc")

        assert ensemble.n_pulses == 2
        assert ensemble.n_signal.tolist() == [1, 3]
        assert ensemble.n_idler.tolist() == [2, 4]
