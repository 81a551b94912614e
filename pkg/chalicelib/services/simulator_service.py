import logging
import re
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

import numpy as np

from chalicelib.models import (
    DetectorModel, EstimatedCorrelation, PulseEnsemble, SqueezerSpectrum,
)
from chalicelib.services.correlation_service import CorrelationService, correlation_service
from chalicelib.utils.settings import settings
from chalicelib.utils.validators import DomainError, ValidationError

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1 << 16
JACKKNIFE_BLOCKS = 20
MIN_ESTIMATION_PULSES = 100
HBT_STREAM = 1

_INTRA_LABEL = re.compile(r"^g(\d)$")


class SimulatorService:
    """Monte-Carlo photon counting for multimode squeezers behind lossy detectors"""

    def __init__(self, workers: Optional[int] = None, correlations: Optional[CorrelationService] = None):
        self.workers = workers or settings.workers
        self.correlations = correlations or correlation_service

    def sample_twin_beam(self, spectrum: SqueezerSpectrum, detector: DetectorModel, n_pulses: int,
                         seed: int) -> PulseEnsemble:
        """
        Sample per-pulse signal/idler counts of a multimode twin beam

        Each mode draws a geometric photon number with mean sinh^2(r_k), shared by signal and
        idler; the totals are then thinned binomially with the detector efficiencies.
        """
        self._check_pulses(n_pulses)
        nbar = spectrum.mean_occupations
        nbar = nbar[nbar > 0]
        p_success = 1.0 / (1.0 + nbar)

        def block(rng: np.random.Generator, size: int) -> np.ndarray:
            pairs = np.zeros(size, dtype=np.int64)
            for p in p_success:
                pairs += rng.geometric(p, size) - 1
            return np.column_stack((
                self._thin(rng, pairs, detector.efficiency_signal),
                self._thin(rng, pairs, detector.efficiency_idler),
            ))

        logger.info(f"Sampling {n_pulses} twin-beam pulses over {nbar.size} modes with {self.workers} workers")
        records = self._run_blocks(block, n_pulses, seed)
        return PulseEnsemble(records=records, seed=seed, spectrum_hash=spectrum.digest, beam="twin")

    def sample_single_beam(self, spectrum: SqueezerSpectrum, detector: DetectorModel, n_pulses: int,
                           seed: int) -> PulseEnsemble:
        """
        Sample per-pulse counts of a multimode single-beam squeezer

        Every mode draws an even photon number by inverse CDF from its squeezed-vacuum table;
        the idler column is always zero.

        Raises:
            DomainError: If any r_k exceeds 5
        """
        self._check_pulses(n_pulses)
        tables = [np.cumsum(self.correlations.squeezed_vacuum_distribution(float(r)))
                  for r in spectrum.r if r > 0]

        def block(rng: np.random.Generator, size: int) -> np.ndarray:
            photons = np.zeros(size, dtype=np.int64)
            for cdf in tables:
                pairs = np.searchsorted(cdf, rng.random(size), side="right")
                photons += 2 * np.minimum(pairs, cdf.size - 1)
            return np.column_stack((
                self._thin(rng, photons, detector.efficiency_signal),
                np.zeros(size, dtype=np.int64),
            ))

        logger.info(f"Sampling {n_pulses} single-beam pulses over {len(tables)} modes with {self.workers} workers")
        records = self._run_blocks(block, n_pulses, seed)
        return PulseEnsemble(records=records, seed=seed, spectrum_hash=spectrum.digest, beam="single")

    def estimate_correlations(self, ensemble: PulseEnsemble, orders: Sequence[str]) -> List[EstimatedCorrelation]:
        """
        Factorial-moment estimates with 20-block jackknife errors

        'gN' uses mean[(N)_n]/mean[N]^n of the signal counts; 'g11' uses
        mean[N_s N_i]/(mean[N_s] mean[N_i]).
        """
        self._check_estimation(ensemble)
        signal = ensemble.n_signal.astype(float)
        idler = ensemble.n_idler.astype(float)
        results = []
        for order in orders:
            if order == "g11":
                if not np.any(idler):
                    raise DomainError("no counts in the idler beam")
                columns = np.column_stack((signal * idler, signal, idler))
                ratio = self._cross_ratio
            else:
                match = _INTRA_LABEL.match(order)
                if not match or int(match.group(1)) < 1:
                    raise ValidationError(f"unsupported estimator order {order!r}")
                n = int(match.group(1))
                falling = np.ones_like(signal)
                for j in range(n):
                    falling = falling * (signal - j)
                columns = np.column_stack((falling, signal))
                ratio = self._intra_ratio(n)
            value, stderr = self._jackknife(columns, ratio)
            results.append(EstimatedCorrelation(order=order, value=value, stderr=stderr))
        return results

    def hbt_click_estimate_g2(self, ensemble: PulseEnsemble, splitting: float) -> EstimatedCorrelation:
        """
        Click-detector g2 behind a beamsplitter

        Each signal photon goes to arm 2 with probability `splitting`. Returns
        P(coincidence) / (P(click 1) P(click 2)), which approaches g2 only at low flux.
        """
        if not 0.0 <= splitting <= 1.0:
            raise ValidationError(f"splitting must lie in [0, 1], got {splitting}")
        self._check_estimation(ensemble)
        counts = ensemble.n_signal

        def block(rng: np.random.Generator, start: int, size: int) -> np.ndarray:
            n = counts[start:start + size]
            arm2 = rng.binomial(n, splitting)
            return np.column_stack((n - arm2 > 0, arm2 > 0)).astype(np.int64)

        clicks = self._run_blocks(block, ensemble.n_pulses, ensemble.seed, stream=HBT_STREAM, indexed=True)
        click1, click2 = clicks[:, 0].astype(float), clicks[:, 1].astype(float)
        if not np.any(click1):
            raise DomainError("no counts in arm 1")
        if not np.any(click2):
            raise DomainError("no counts in arm 2")
        columns = np.column_stack((click1 * click2, click1, click2))
        value, stderr = self._jackknife(columns, self._cross_ratio)
        return EstimatedCorrelation(order="g2_hbt", value=value, stderr=stderr)

    def _run_blocks(self, block: Callable, n_pulses: int, seed: int, stream: int = 0,
                    indexed: bool = False) -> np.ndarray:
        # Block b always draws from the Philox stream keyed by (seed, stream, b), so the
        # result is independent of how blocks are scheduled across workers.
        starts = range(0, n_pulses, BLOCK_SIZE)

        def run(start: int) -> np.ndarray:
            sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream, start // BLOCK_SIZE))
            rng = np.random.Generator(np.random.Philox(sequence))
            size = min(BLOCK_SIZE, n_pulses - start)
            return block(rng, start, size) if indexed else block(rng, size)

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(run, starts))
        else:
            parts = [run(start) for start in starts]
        return np.concatenate(parts, axis=0)

    def _thin(self, rng: np.random.Generator, counts: np.ndarray, efficiency: float) -> np.ndarray:
        if efficiency >= 1.0:
            return counts.copy()
        return rng.binomial(counts, efficiency)

    def _jackknife(self, columns: np.ndarray, ratio: Callable[[np.ndarray], float]):
        # Leave-one-block-out means from block sums; estimate from the full sample
        n = columns.shape[0]
        blocks = np.array_split(np.arange(n), JACKKNIFE_BLOCKS)
        block_sums = np.array([columns[index].sum(axis=0) for index in blocks])
        block_sizes = np.array([index.size for index in blocks], dtype=float)
        total = block_sums.sum(axis=0)

        value = ratio(total / n)
        replicas = np.array([ratio((total - s) / (n - size)) for s, size in zip(block_sums, block_sizes)])
        variance = (JACKKNIFE_BLOCKS - 1) / JACKKNIFE_BLOCKS * np.sum((replicas - replicas.mean()) ** 2)
        return float(value), float(np.sqrt(variance))

    def _intra_ratio(self, n: int) -> Callable[[np.ndarray], float]:
        def ratio(means: np.ndarray) -> float:
            return means[0] / means[1] ** n
        return ratio

    @staticmethod
    def _cross_ratio(means: np.ndarray) -> float:
        return means[0] / (means[1] * means[2])

    def _check_pulses(self, n_pulses: int) -> None:
        if n_pulses < 1:
            raise ValidationError(f"n_pulses must be at least 1, got {n_pulses}")

    def _check_estimation(self, ensemble: PulseEnsemble) -> None:
        if ensemble.n_pulses < MIN_ESTIMATION_PULSES:
            raise ValidationError(f"estimators need at least {MIN_ESTIMATION_PULSES} pulses, got {ensemble.n_pulses}")
        if not np.any(ensemble.n_signal):
            raise DomainError("no counts")


# Global instance
simulator_service = SimulatorService()
