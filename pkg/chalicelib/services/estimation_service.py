import logging
import math
import threading
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect

from chalicelib.models import EstimationResult, SlopeCurve, SqueezerSpectrum
from chalicelib.services.correlation_service import CorrelationService, correlation_service
from chalicelib.utils.config import parse_measured
from chalicelib.utils.validators import DomainError, ValidationError

logger = logging.getLogger(__name__)

GAIN_BRACKET = (1e-6, 10.0)
SLOPE_WINDOW = (0.01, 0.3)
SLOPE_POINTS = 32
MIN_SLOPE_POINTS = 8
MAX_SWEEP_GAIN = 3.0
LOWGAIN_SINGLE_G2 = 100.0
MU_TABLE = np.round(np.arange(0.0, 0.951, 0.01), 2)
K_TABLE = np.arange(1, 41)

TWIN_DOMAIN = "twin-beam low-gain regime, 1 < g2 <= 2"


class EstimationService:
    """Inverts measured correlation values into the mode number K, thermal parameter mu and gain B"""

    def __init__(self, correlations: Optional[CorrelationService] = None):
        self.correlations = correlations or correlation_service
        self._lock = threading.Lock()
        self._mu_table: Optional[Tuple[PchipInterpolator, Tuple[float, float]]] = None
        self._k_table: Optional[Tuple[PchipInterpolator, Tuple[float, float]]] = None

    def estimate_K_from_g2(self, g2: float) -> EstimationResult:
        if not 1.0 < g2 <= 2.0:
            raise DomainError(f"g2 = {g2} outside twin-beam low-gain domain (1, 2]")
        return EstimationResult("K", 1.0 / (g2 - 1.0), "K = 1/(g2 - 1)", TWIN_DOMAIN)

    def estimate_mu_from_g2(self, g2: float) -> EstimationResult:
        if not 1.0 <= g2 <= 2.0:
            raise DomainError(f"g2 = {g2} outside twin-beam low-gain domain [1, 2]")
        mu = math.sqrt(2.0 / g2 - 1.0)
        return EstimationResult("mu", mu, "mu = sqrt(2/g2 - 1)", "thermal mode distribution, 1 <= g2 <= 2")

    def estimate_B_from_g11(self, g11: float, lam: Optional[Sequence[float]] = None) -> EstimationResult:
        """
        Optical gain from the signal/idler cross-correlation

        Without a mode distribution the low-gain form B = 1/sqrt(g11) is returned; with one,
        g11_twin(B * lambda) is inverted by bisection on [1e-6, 10].

        Raises:
            DomainError: For g11 <= 1 or a value no gain in the bracket reproduces
        """
        if not g11 > 1.0:
            raise DomainError(f"g11 = {g11} must exceed 1")
        if lam is None:
            return EstimationResult("B", 1.0 / math.sqrt(g11), "B = 1/sqrt(g11)", "low gain, g11 >> 1")
        spectrum = SqueezerSpectrum.from_gain(1.0, lam)
        value = self._invert_gain(lambda b: self.correlations.g11_twin(spectrum.with_gain(b)).value,
                                  g11, "g11 below high-gain asymptote")
        return EstimationResult("B", value, "bisection of g11_twin", "twin beam, known mode distribution")

    def estimate_B_single_from_g2(self, g2: float, lam: Sequence[float]) -> EstimationResult:
        """Single-beam gain; low-gain form above g2 = 100, bisection of g2_single otherwise"""
        if g2 > LOWGAIN_SINGLE_G2:
            return EstimationResult("B", 1.0 / math.sqrt(g2), "B = 1/sqrt(g2)", "single beam, low gain g2 > 100")
        spectrum = SqueezerSpectrum.from_gain(1.0, lam)
        value = self._invert_gain(lambda b: self.correlations.g2_single(spectrum.with_gain(b)).value,
                                  g2, "g2 below high-gain asymptote")
        return EstimationResult("B", value, "bisection of g2_single", "single beam, known mode distribution")

    def sweep_single_beam_curve(self, lam: Sequence[float], B_range: Tuple[float, float],
                                n_points: int = SLOPE_POINTS) -> SlopeCurve:
        """
        (g2, g3) of a single-beam squeezer along a linear gain grid, with the
        least-squares slope of g3 against g2
        """
        low, high = B_range
        if not (0.0 < low < high <= MAX_SWEEP_GAIN):
            raise ValidationError(f"B_range must satisfy 0 < min < max <= {MAX_SWEEP_GAIN}, got {B_range}")
        if n_points < MIN_SLOPE_POINTS:
            raise ValidationError(f"n_points must be at least {MIN_SLOPE_POINTS}, got {n_points}")
        base = SqueezerSpectrum.from_gain(1.0, lam)
        gains = np.linspace(low, high, n_points)
        points = np.array([
            (self.correlations.g2_single(base.with_gain(b)).value,
             self.correlations.g3_single(base.with_gain(b)).value)
            for b in gains
        ])
        slope = float(np.polyfit(points[:, 0], points[:, 1], 1)[0])
        return SlopeCurve(B=gains, points=points, slope=slope)

    def fit_slope(self, points: Sequence[Sequence[float]]) -> float:
        """Least-squares slope of measured (g2, g3) pairs"""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] < 2:
            raise ValidationError("points must be a list of at least two [g2, g3] pairs")
        return float(np.polyfit(points[:, 0], points[:, 1], 1)[0])

    def map_slope_to_mu(self, slope: float) -> EstimationResult:
        interpolator, (low, high) = self.slope_tables()[0]
        if not low <= slope <= high:
            raise DomainError(f"slope {slope} outside calibrated range [{low:.6g}, {high:.6g}]")
        mu = float(np.clip(interpolator(slope), 0.0, MU_TABLE[-1]))
        return EstimationResult("mu", mu, "slope table, thermal distributions",
                                f"B in {SLOPE_WINDOW}, mu <= {MU_TABLE[-1]}")

    def map_slope_to_K(self, slope: float) -> EstimationResult:
        interpolator, (low, high) = self.slope_tables()[1]
        if not low <= slope <= high:
            raise DomainError(f"slope {slope} outside calibrated range [{low:.6g}, {high:.6g}]")
        K = float(np.clip(interpolator(slope), 1.0, K_TABLE[-1]))
        return EstimationResult("K", K, "slope table, uniform distributions",
                                f"B in {SLOPE_WINDOW}, K <= {K_TABLE[-1]}")

    def slope_tables(self):
        """Slope calibration tables, built once on first use"""
        with self._lock:
            if self._mu_table is None:
                logger.info("Building single-beam slope calibration tables")
                self._mu_table = self._build_table(
                    MU_TABLE, lambda mu: SqueezerSpectrum.thermal(float(mu)).lam, "mu")
                self._k_table = self._build_table(
                    K_TABLE, lambda k: SqueezerSpectrum.uniform(int(k)).lam, "K")
        return self._mu_table, self._k_table

    def estimate_from_measurements(self, measured: Dict[str, Any]) -> List[EstimationResult]:
        """
        Run every estimator the measured document supports

        Twin beam: K and mu from g2, B from g11. Single beam: K and mu from the slope of the
        (g2, g3) points, B from g2, and with a measured g3 the residual against g3_single at
        that gain. A given 'lambda' makes the gain inversion exact; otherwise the thermal
        distribution of the estimated mu is used.

        Raises:
            ValidationError: For malformed values or a document with nothing to estimate
            DomainError: When a value lies outside its estimator's domain
        """
        measured = parse_measured(measured)
        beam = measured["beam"]
        lam = measured.get("lambda")
        results: List[EstimationResult] = []
        if beam == "twin":
            if measured.get("g3") is not None:
                raise ValidationError("measured.g3 applies to single-beam measurements only")
            mu = None
            if measured.get("g2") is not None:
                results.append(self.estimate_K_from_g2(measured["g2"]))
                mu = self.estimate_mu_from_g2(measured["g2"])
                results.append(mu)
            if measured.get("g11") is not None:
                if lam is None and mu is not None and mu.value < 1.0:
                    lam = SqueezerSpectrum.thermal(mu.value).lam
                results.append(self.estimate_B_from_g11(measured["g11"], lam))
        else:
            if measured.get("g3") is not None and measured.get("g2") is None:
                raise ValidationError("Missing measured.g2 parameter (required with measured.g3)")
            mu = None
            if measured.get("points") is not None:
                slope = self.fit_slope(measured["points"])
                results.append(EstimationResult("slope", slope, "least squares of g3 vs g2"))
                results.append(self.map_slope_to_K(slope))
                mu = self.map_slope_to_mu(slope)
                results.append(mu)
            if measured.get("g2") is not None:
                if lam is None:
                    lam = SqueezerSpectrum.thermal(mu.value).lam if mu is not None else [1.0]
                gain = self.estimate_B_single_from_g2(measured["g2"], lam)
                results.append(gain)
                if measured.get("g3") is not None:
                    predicted = self.correlations.g3_single(SqueezerSpectrum.from_gain(gain.value, lam)).value
                    results.append(EstimationResult(
                        "g3_residual", measured["g3"] - predicted, "g3 - g3_single(B lambda) at the estimated B",
                        "single beam; near 0 when (g2, g3) lies on the curve of the mode distribution"))
        if not results:
            raise ValidationError("measured values must include at least one of g2, g11, points")
        return results

    def _build_table(self, nodes: np.ndarray, distribution: Callable, name: str):
        slopes = np.array([self.sweep_single_beam_curve(distribution(x), SLOPE_WINDOW).slope for x in nodes])
        if not np.all(np.diff(slopes) < 0):
            logger.error(f"Slope table over {name} is not strictly monotone")
            raise DomainError(f"slope table over {name} is not strictly monotone")
        # slopes fall with the mode number; the interpolator needs increasing abscissae
        interpolator = PchipInterpolator(slopes[::-1], np.asarray(nodes, dtype=float)[::-1])
        return interpolator, (float(slopes[-1]), float(slopes[0]))

    def _invert_gain(self, forward: Callable[[float], float], target: float, message: str) -> float:
        low, high = GAIN_BRACKET
        f_low, f_high = forward(low) - target, forward(high) - target
        if f_high > 0:
            raise DomainError(f"{message}: {target}")
        if f_low < 0:
            raise DomainError(f"value {target} above the range reachable for B >= {low}")
        return float(bisect(lambda b: forward(b) - target, low, high, xtol=1e-15, rtol=1e-13, maxiter=400))


# Global instance
estimation_service = EstimationService()
