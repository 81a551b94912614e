import logging
import math
import re
from typing import Any, Dict, List, Sequence

import numpy as np
from scipy.special import comb, factorial, gammaln

from chalicelib.models import CorrelationValue, MeanPhoton, SqueezerSpectrum
from chalicelib.utils.validators import DomainError, ValidationError

logger = logging.getLogger(__name__)

MAX_INTRA_ORDER = 8
MAX_CROSS_ORDER = 6
MAX_SINGLE_BEAM_R = 5.0
FOCK_TAIL = 1e-12
FOCK_MAX_PAIRS = 1 << 24
BEAMS = ("twin", "single")

_INTRA_LABEL = re.compile(r"^g(\d)$")
_CROSS_LABEL = re.compile(r"^g(\d),(\d)$")


class CorrelationService:
    """Broadband multimode correlation functions of twin-beam and single-beam squeezers"""

    def mean_photon(self, spectrum: SqueezerSpectrum) -> MeanPhoton:
        """<n> = sum_k sinh^2(r_k) per beam"""
        return MeanPhoton(value=float(np.sum(spectrum.mean_occupations)))

    def g2_twin(self, spectrum: SqueezerSpectrum) -> CorrelationValue:
        s1, s2, _ = self._power_sums(spectrum, "g2")
        return CorrelationValue("g2", 1.0 + s2 / s1 ** 2, "twin")

    def g2_twin_lowgain(self, spectrum: SqueezerSpectrum) -> CorrelationValue:
        """Gain-independent limit 1 + sum(lambda_k^4) = 1 + 1/K"""
        return CorrelationValue("g2", 1.0 + float(np.sum(spectrum.lam ** 4)), "twin")

    def g11_twin(self, spectrum: SqueezerSpectrum) -> CorrelationValue:
        s1, s2, _ = self._power_sums(spectrum, "g11")
        return CorrelationValue("g11", 1.0 + 1.0 / s1 + s2 / s1 ** 2, "twin")

    def g2_single(self, spectrum: SqueezerSpectrum) -> CorrelationValue:
        s1, s2, _ = self._power_sums(spectrum, "g2")
        return CorrelationValue("g2", 1.0 + 2.0 * s2 / s1 ** 2 + 1.0 / s1, "single")

    def g3_single(self, spectrum: SqueezerSpectrum) -> CorrelationValue:
        s1, s2, s3 = self._power_sums(spectrum, "g3")
        value = (1.0 + 6.0 * s2 / s1 ** 2 + 8.0 * s3 / s1 ** 3
                 + 3.0 / s1 + 6.0 * s2 / s1 ** 3)
        return CorrelationValue("g3", value, "single")

    def gn_twin(self, spectrum: SqueezerSpectrum, n: int) -> CorrelationValue:
        """
        Normalized factorial moment <:N^n:>/<N>^n of one twin beam

        Each mode contributes thermal factorial moments m! nbar_k^m; independent modes are
        combined exactly with the falling-factorial binomial theorem.
        """
        if not 1 <= n <= MAX_INTRA_ORDER:
            raise DomainError(f"order unsupported: g{n} (1 <= n <= {MAX_INTRA_ORDER})")
        nbar = self._occupations(spectrum, f"g{n}")
        orders = np.arange(n + 1)
        per_mode = factorial(orders)[None, :] * nbar[:, None] ** orders[None, :]
        moments = self._combine_modes(per_mode)
        return CorrelationValue(f"g{n}", float(moments[n] / moments[1] ** n), "twin")

    def gnm_twin_cross(self, spectrum: SqueezerSpectrum, n: int, m: int) -> CorrelationValue:
        """
        Signal/idler cross-correlation <:N_s^n: :N_i^m:> / (<N_s>^n <N_i>^m)

        Per mode the signal and idler photon numbers are equal and thermally distributed.
        """
        if n < 0 or m < 0 or not 1 <= n + m <= MAX_CROSS_ORDER:
            raise DomainError(f"order unsupported: g{n},{m} (1 <= n + m <= {MAX_CROSS_ORDER})")
        nbar = self._occupations(spectrum, f"g{n},{m}")

        # (x)_j (x)_l = sum_t C(j,t) C(l,t) t! (x)_{j+l-t}; thermal E[(x)_q] = q! nbar^q
        rows, cols = max(n, 1) + 1, max(m, 1) + 1
        per_mode = np.zeros((nbar.size, rows, cols))
        for j in range(rows):
            for l in range(cols):
                for t in range(min(j, l) + 1):
                    q = j + l - t
                    coefficient = comb(j, t, exact=True) * comb(l, t, exact=True) * math.factorial(t)
                    per_mode[:, j, l] += coefficient * math.factorial(q) * nbar ** q
        joint = self._combine_modes_joint(per_mode)
        label = "g11" if (n, m) == (1, 1) else f"g{n},{m}"
        return CorrelationValue(label, float(joint[n, m] / (joint[1, 0] ** n * joint[0, 1] ** m)), "twin")

    def gn_single(self, spectrum: SqueezerSpectrum, n: int) -> CorrelationValue:
        """General-order single-beam correlation from per-mode squeezed-vacuum statistics"""
        if not 1 <= n <= MAX_INTRA_ORDER:
            raise DomainError(f"order unsupported: g{n} (1 <= n <= {MAX_INTRA_ORDER})")
        self._occupations(spectrum, f"g{n}")
        per_mode = np.array([self.single_beam_factorial_moments(r, n) for r in spectrum.r])
        moments = self._combine_modes(per_mode)
        return CorrelationValue(f"g{n}", float(moments[n] / moments[1] ** n), "single")

    def squeezed_vacuum_distribution(self, r: float, tail: float = FOCK_TAIL) -> np.ndarray:
        """
        Pair-number distribution P(2m) = (2m)!/(2^m m!)^2 tanh^{2m}(r) / cosh(r)

        Entry m is the probability of 2m photons; the table stops once the cumulative mass
        reaches 1 - tail.

        Raises:
            DomainError: For r > 5, where the table would grow past safe sizes
        """
        if r > MAX_SINGLE_BEAM_R:
            raise DomainError(f"tail truncation unsafe for r = {r} > {MAX_SINGLE_BEAM_R}")
        if r == 0:
            return np.array([1.0])
        log_t2 = 2.0 * math.log(math.tanh(r))
        log_norm = math.log(math.cosh(r))
        size = 64
        while size <= FOCK_MAX_PAIRS:
            m = np.arange(size)
            log_p = gammaln(2 * m + 1) - 2 * m * math.log(2.0) - 2 * gammaln(m + 1) + m * log_t2 - log_norm
            probabilities = np.exp(log_p)
            cumulative = np.cumsum(probabilities)
            if cumulative[-1] >= 1.0 - tail:
                cut = int(np.searchsorted(cumulative, 1.0 - tail)) + 1
                return probabilities[:cut]
            size *= 2
        raise DomainError(f"tail truncation unsafe for r = {r}")

    def single_beam_factorial_moments(self, r: float, order: int) -> np.ndarray:
        """E[(n)_j] for j = 0..order of one squeezed-vacuum mode, from the Fock distribution"""
        probabilities = self.squeezed_vacuum_distribution(r)
        photons = 2.0 * np.arange(probabilities.size)
        moments = np.empty(order + 1)
        falling = np.ones_like(photons)
        for j in range(order + 1):
            moments[j] = float(np.sum(probabilities * falling))
            falling = falling * (photons - j)
        return moments

    def evaluate(self, order: str, spectrum: SqueezerSpectrum, beam: str = "twin") -> CorrelationValue:
        """
        Evaluate a correlation by label

        Labels: 'gN' (intra-beam, N <= 8), 'g11' and 'gN,M' (twin cross-correlations),
        'g2_lowgain' (twin), 'mean_photon'.
        """
        if beam not in BEAMS:
            raise ValidationError(f"beam must be one of {BEAMS}, got {beam!r}")
        if order == "mean_photon":
            return CorrelationValue(order, self.mean_photon(spectrum).value, beam)
        if beam == "twin":
            if order == "g2_lowgain":
                return self.g2_twin_lowgain(spectrum)
            if order == "g2":
                return self.g2_twin(spectrum)
            if order == "g11":
                return self.g11_twin(spectrum)
            match = _CROSS_LABEL.match(order)
            if match:
                return self.gnm_twin_cross(spectrum, int(match.group(1)), int(match.group(2)))
            match = _INTRA_LABEL.match(order)
            if match:
                return self.gn_twin(spectrum, int(match.group(1)))
        else:
            if order == "g2":
                return self.g2_single(spectrum)
            if order == "g3":
                return self.g3_single(spectrum)
            match = _INTRA_LABEL.match(order)
            if match:
                return self.gn_single(spectrum, int(match.group(1)))
        raise ValidationError(f"unknown correlation order {order!r} for {beam} beam")

    def evaluate_batch(self, items: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
        """Evaluate a list of {'order', 'beam', 'spectrum'} requests into JSON-ready values"""
        results = []
        for item in items:
            value = self.evaluate(item["order"], item["spectrum"], item.get("beam", "twin"))
            results.append(value.to_dict())
        return results

    def _occupations(self, spectrum: SqueezerSpectrum, label: str) -> np.ndarray:
        nbar = spectrum.mean_occupations
        if not np.any(nbar > 0):
            raise DomainError(f"vacuum has undefined {label}")
        return nbar

    def _power_sums(self, spectrum: SqueezerSpectrum, label: str):
        nbar = self._occupations(spectrum, label)
        return float(np.sum(nbar)), float(np.sum(nbar ** 2)), float(np.sum(nbar ** 3))

    def _combine_modes(self, per_mode: np.ndarray) -> np.ndarray:
        # E[(X+Y)_a] = sum_j C(a,j) E[(X)_j] E[(Y)_{a-j}] for independent X, Y
        order = per_mode.shape[1] - 1
        binomials = comb(np.arange(order + 1)[:, None], np.arange(order + 1)[None, :])
        total = np.zeros(order + 1)
        total[0] = 1.0
        for moments in per_mode:
            total = np.array([
                np.dot(binomials[a, :a + 1] * total[:a + 1], moments[a::-1]) for a in range(order + 1)
            ])
        return total

    def _combine_modes_joint(self, per_mode: np.ndarray) -> np.ndarray:
        n, m = per_mode.shape[1] - 1, per_mode.shape[2] - 1
        size = max(n, m) + 1
        binomials = comb(np.arange(size)[:, None], np.arange(size)[None, :])
        total = np.zeros((n + 1, m + 1))
        total[0, 0] = 1.0
        for moments in per_mode:
            combined = np.empty_like(total)
            for a in range(n + 1):
                for b in range(m + 1):
                    weights = binomials[a, :a + 1][:, None] * binomials[b, :b + 1][None, :]
                    combined[a, b] = np.sum(weights * total[:a + 1, :b + 1] * moments[a::-1, b::-1])
            total = combined
        return total


# Global instance
correlation_service = CorrelationService()
