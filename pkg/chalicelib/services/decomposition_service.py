import logging
import math
from typing import Tuple

import numpy as np
from scipy.linalg import svd

from chalicelib.models import (
    JointSpectralAmplitude, SchmidtModes, SqueezerSpectrum, ThermalModeFit, TRUNCATION_THRESHOLD,
)
from chalicelib.utils.validators import DomainError

logger = logging.getLogger(__name__)

FIT_THRESHOLD = 1e-6
MIN_FIT_MODES = 3


class DecompositionService:
    """Schmidt decomposition of joint spectral amplitudes into independent squeezers"""

    def schmidt_decompose(self, jsa: JointSpectralAmplitude) -> Tuple[SqueezerSpectrum, SchmidtModes]:
        """
        Decompose a JSA into squeezing amplitudes and broadband mode functions

        Args:
            jsa: Joint spectral amplitude on a uniform grid

        Returns:
            Tuple of (SqueezerSpectrum, SchmidtModes)

        Raises:
            DomainError: If the JSA has no nonzero entry
        """
        if not np.any(jsa.values):
            raise DomainError("degenerate spectrum: JSA is identically zero")

        grid = jsa.grid
        u, sigma, vh = svd(jsa.values, full_matrices=False, lapack_driver="gesdd")
        keep = sigma >= TRUNCATION_THRESHOLD * sigma[0]
        u, sigma, vh = u[:, keep], sigma[keep], vh[keep, :]

        # r_k refer to the continuum kernel, not the sampled matrix
        r = sigma * math.sqrt(grid.step_s * grid.step_i)

        # Largest-magnitude entry of each psi_k made real-positive
        peak = np.argmax(np.abs(u), axis=0)
        phase = u[peak, np.arange(u.shape[1])]
        phase = phase / np.abs(phase)
        u = u * np.conj(phase)[None, :]
        vh = vh * phase[:, None]

        psi = u.T / math.sqrt(grid.step_s)
        phi = vh / math.sqrt(grid.step_i)
        spectrum = SqueezerSpectrum.from_amplitudes(r)
        logger.info(f"Schmidt decomposition kept {spectrum.n_modes} modes, B = {spectrum.B:.6g}")
        return spectrum, SchmidtModes(psi=psi, phi=phi, grid=grid)

    def schmidt_number(self, spectrum: SqueezerSpectrum) -> float:
        """Effective number of squeezers K = 1 / sum(lambda_k^4)"""
        return float(1.0 / np.sum(spectrum.lam ** 4))

    def fit_thermal(self, spectrum: SqueezerSpectrum) -> ThermalModeFit:
        """
        Fit log(lambda_k) linearly in k; the slope is log(mu)

        Modes below 1e-6 of the leading mode are left out of the fit.

        Raises:
            DomainError: With fewer than three usable modes, or a non-decaying distribution
        """
        lam = spectrum.lam
        usable = lam >= FIT_THRESHOLD * lam[0]
        if np.count_nonzero(usable) < MIN_FIT_MODES:
            raise DomainError("insufficient modes for thermal fit")

        k = np.arange(lam.size)[usable]
        log_lam = np.log(lam[usable])
        slope, intercept = np.polyfit(k, log_lam, 1)
        residual = float(np.sqrt(np.mean((log_lam - (slope * k + intercept)) ** 2)))
        mu = float(np.exp(slope))
        if mu >= 1.0:
            logger.error(f"Thermal fit produced non-decaying mu = {mu}")
            raise DomainError(f"mode distribution is not decaying (fitted mu = {mu:.6g})")
        return ThermalModeFit(mu=mu, residual=residual, n_used=int(k.size))

    def reconstruct(self, spectrum: SqueezerSpectrum, modes: SchmidtModes) -> np.ndarray:
        """Sum_k r_k psi_k(w_s) phi_k(w_i) on the grid"""
        return (modes.psi.T * spectrum.r[None, :]) @ modes.phi

    def squeezing_db(self, spectrum: SqueezerSpectrum) -> np.ndarray:
        """Available squeezing per mode, -10 log10(exp(-2 r_k))"""
        return 20.0 * spectrum.r / math.log(10.0)


# Global instance
decomposition_service = DecompositionService()
