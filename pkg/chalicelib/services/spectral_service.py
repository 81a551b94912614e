import logging
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from chalicelib.models import DispersionModel, FrequencyGrid, JointSpectralAmplitude, PumpEnvelope
from chalicelib.utils.settings import settings
from chalicelib.utils.validators import ValidationError

logger = logging.getLogger(__name__)

PHASEMATCHING_KINDS = ("exact_sinc", "gaussian_approx")
GAUSSIAN_SINC_FACTOR = 0.193
TAYLOR_RANGE_FACTOR = 10.0
MIN_PUMP_NODES = 16
PUMP_SPAN_SIGMAS = 5.0
PREVIEW_SPAN_SIGMAS = 20.0
PREVIEW_POINTS = 256


class SpectralService:
    """Builds discretized joint spectral amplitudes for PDC and FWM sources"""

    def __init__(self, fwm_pump_nodes: Optional[int] = None, grid_points: Optional[int] = None,
                 grid_span_sigmas: Optional[float] = None):
        self.fwm_pump_nodes = fwm_pump_nodes or settings.fwm_pump_nodes
        self.grid_points = grid_points or settings.grid_points
        self.grid_span_sigmas = grid_span_sigmas or settings.grid_span_sigmas

    def phase_mismatch(self, dispersion: DispersionModel, omega_s, omega_i) -> np.ndarray:
        """
        Phase mismatch dk = k_p(w_s + w_i) - k_s(w_s) - k_i(w_i)

        Args:
            dispersion: Taylor models of pump, signal and idler
            omega_s: Signal angular frequencies (rad/s), broadcastable against omega_i
            omega_i: Idler angular frequencies (rad/s)

        Returns:
            Phase mismatch in 1/m
        """
        omega_s = np.asarray(omega_s, dtype=float)
        omega_i = np.asarray(omega_i, dtype=float)
        return (dispersion.pump.wavenumber(omega_s + omega_i)
                - dispersion.signal.wavenumber(omega_s)
                - dispersion.idler.wavenumber(omega_i))

    def phasematching(self, delta_k: np.ndarray, length: float, kind: str) -> np.ndarray:
        x = 0.5 * np.asarray(delta_k) * length
        if kind == "exact_sinc":
            # np.sinc is the normalized sinc, sin(pi x)/(pi x)
            return np.sinc(x / np.pi)
        if kind == "gaussian_approx":
            return np.exp(-GAUSSIAN_SINC_FACTOR * x ** 2)
        raise ValidationError(f"phasematching must be one of {PHASEMATCHING_KINDS}, got {kind!r}")

    def build_pdc_jsa(self, pump: PumpEnvelope, dispersion: DispersionModel, length: float,
                      grid: FrequencyGrid, phasematching: str = "exact_sinc",
                      coupling_scale: float = 1.0) -> JointSpectralAmplitude:
        """
        Joint spectral amplitude of a PDC source

        Args:
            pump: Gaussian pump envelope
            dispersion: Taylor dispersion of the three fields
            length: Medium length (m)
            grid: Signal/idler frequency grid
            phasematching: 'exact_sinc' or 'gaussian_approx'
            coupling_scale: Constant A merged with the nonlinearity and pump amplitude

        Returns:
            JSA with entries coupling_scale * alpha(w_s + w_i) * phi(w_s, w_i)
        """
        self._check_common(length, grid, coupling_scale, dispersion)
        omega_s = grid.omega_s[:, None]
        omega_i = grid.omega_i[None, :]

        logger.info(f"Building PDC JSA on {grid.n_s}x{grid.n_i} grid ({phasematching})")
        delta_k = self.phase_mismatch(dispersion, omega_s, omega_i)
        values = coupling_scale * pump(omega_s + omega_i) * self.phasematching(delta_k, length, phasematching)
        return JointSpectralAmplitude(grid=grid, values=values, coupling_scale=coupling_scale)

    def build_fwm_jsa(self, pump1: PumpEnvelope, pump2: PumpEnvelope, dispersion: DispersionModel,
                      length: float, grid: FrequencyGrid, coupling_scale: float = 1.0,
                      pump_nodes: Optional[int] = None) -> JointSpectralAmplitude:
        """
        Joint spectral amplitude of a FWM source

        f(w_s, w_i) = int dw_p alpha1(w_p) alpha2(w_s + w_i - w_p) sinc(dk L / 2), evaluated
        with the trapezoid rule. Both pumps propagate with the pump dispersion.

        Args:
            pump1: Envelope of the first pump
            pump2: Envelope of the second pump
            dispersion: Taylor dispersion of pump, signal and idler
            length: Fiber length (m)
            grid: Signal/idler frequency grid
            coupling_scale: Constant A merged with chi3 and pump amplitudes
            pump_nodes: Quadrature nodes on the pump axis (default from settings)

        Returns:
            JSA sampled on the grid
        """
        self._check_common(length, grid, coupling_scale, dispersion)
        nodes = pump_nodes or self.fwm_pump_nodes
        if nodes < MIN_PUMP_NODES:
            raise ValidationError(f"fwm_pump_nodes must be at least {MIN_PUMP_NODES}, got {nodes}")

        omega_s = grid.omega_s
        omega_i = grid.omega_i
        omega_p = self._pump_axis(pump1, pump2, omega_s, omega_i, nodes)
        k_signal = dispersion.signal.wavenumber(omega_s)
        k_idler = dispersion.idler.wavenumber(omega_i)
        k_pump1 = dispersion.pump.wavenumber(omega_p)
        alpha1 = pump1(omega_p)

        logger.info(f"Building FWM JSA on {grid.n_s}x{grid.n_i} grid with {nodes} pump nodes")
        values = np.empty((grid.n_s, grid.n_i), dtype=float)
        for row, (w_s, k_s) in enumerate(zip(omega_s, k_signal)):
            total = w_s + omega_i[:, None]
            partner = total - omega_p[None, :]
            delta_k = k_pump1[None, :] + dispersion.pump.wavenumber(partner) - k_s - k_idler[:, None]
            integrand = alpha1[None, :] * pump2(partner) * self.phasematching(delta_k, length, "exact_sinc")
            values[row] = trapezoid(integrand, x=omega_p, axis=1)

        return JointSpectralAmplitude(grid=grid, values=coupling_scale * values, coupling_scale=coupling_scale)

    def default_grid(self, pump: PumpEnvelope, dispersion: DispersionModel, length: float,
                     phasematching: str = "exact_sinc", pump2: Optional[PumpEnvelope] = None,
                     n_points: Optional[int] = None, span_sigmas: Optional[float] = None) -> FrequencyGrid:
        """
        Grid spanning +-span_sigmas RMS widths of the marginal spectra

        The marginals are measured on a coarse preview grid of +-20 pump widths around the
        signal and idler reference frequencies.
        """
        n_points = n_points or self.grid_points
        span_sigmas = span_sigmas or self.grid_span_sigmas
        half = PREVIEW_SPAN_SIGMAS * pump.width
        preview_grid = FrequencyGrid.centered(dispersion.signal.omega0, half, dispersion.idler.omega0, half,
                                              PREVIEW_POINTS)
        if pump2 is None:
            preview = self.build_pdc_jsa(pump, dispersion, length, preview_grid, phasematching)
        else:
            preview = self.build_fwm_jsa(pump, pump2, dispersion, length, preview_grid,
                                         pump_nodes=MIN_PUMP_NODES * 4)
        (center_s, width_s), (center_i, width_i) = self.marginal_widths(preview)
        logger.info(f"Marginal RMS widths: signal {width_s:.4g} rad/s, idler {width_i:.4g} rad/s")
        return FrequencyGrid.centered(center_s, span_sigmas * width_s, center_i, span_sigmas * width_i, n_points)

    def marginal_widths(self, jsa: JointSpectralAmplitude) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """(mean, RMS width) of the signal and idler marginal intensity spectra"""
        intensity = np.abs(jsa.values) ** 2
        total = intensity.sum()
        if total == 0:
            raise ValidationError("cannot measure marginals of an all-zero JSA")
        result = []
        for axis, omega in ((1, jsa.grid.omega_s), (0, jsa.grid.omega_i)):
            weights = intensity.sum(axis=axis) / total
            mean = float(np.sum(weights * omega))
            width = float(np.sqrt(np.sum(weights * (omega - mean) ** 2)))
            result.append((mean, width))
        return result[0], result[1]

    def _pump_axis(self, pump1: PumpEnvelope, pump2: PumpEnvelope, omega_s: np.ndarray,
                   omega_i: np.ndarray, nodes: int) -> np.ndarray:
        low = pump1.central_frequency - PUMP_SPAN_SIGMAS * pump1.width
        high = pump1.central_frequency + PUMP_SPAN_SIGMAS * pump1.width
        # alpha2(total - w_p) is negligible outside this window for every grid node
        partner_low = omega_s[0] + omega_i[0] - pump2.central_frequency - PUMP_SPAN_SIGMAS * pump2.width
        partner_high = omega_s[-1] + omega_i[-1] - pump2.central_frequency + PUMP_SPAN_SIGMAS * pump2.width
        if max(low, partner_low) < min(high, partner_high):
            low, high = max(low, partner_low), min(high, partner_high)
        return low + np.arange(nodes) * ((high - low) / (nodes - 1))

    def _check_common(self, length: float, grid: FrequencyGrid, coupling_scale: float,
                      dispersion: DispersionModel) -> None:
        if not length > 0:
            raise ValidationError(f"length must be positive, got {length}")
        if grid.n_s < 2 or grid.n_i < 2:
            raise ValidationError("grid needs at least 2 points per axis")
        if not coupling_scale > 0:
            raise ValidationError(f"coupling_scale must be positive, got {coupling_scale}")

        # Taylor expansions are only trusted within 10 grid spans of their reference
        checks = (
            ("signal", grid.omega_s, dispersion.signal.omega0, grid.span_s),
            ("idler", grid.omega_i, dispersion.idler.omega0, grid.span_i),
        )
        for name, omega, omega0, span in checks:
            if np.max(np.abs(omega - omega0)) > TAYLOR_RANGE_FACTOR * span:
                raise ValidationError(f"grid.{name} axis lies too far from dispersion.{name}.omega0")


# Global instance
spectral_service = SpectralService()
