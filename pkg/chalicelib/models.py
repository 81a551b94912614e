"""
Domain types shared by the services.

All types are immutable after construction. Arrays are stored as read-only numpy
arrays so a value handed to several threads cannot be modified by any of them.
"""

import hashlib
import math
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np

from chalicelib.utils.validators import DomainError, ValidationError

NORMALIZATION_TOLERANCE = 1e-10
AMPLITUDE_TOLERANCE = 1e-10
TRUNCATION_THRESHOLD = 1e-12


def _frozen(values: Any, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform signal/idler angular-frequency axes (rad/s)"""

    start_s: float
    step_s: float
    n_s: int
    start_i: float
    step_i: float
    n_i: int

    def __post_init__(self):
        if self.n_s < 2 or self.n_i < 2:
            raise ValidationError(f"grid needs at least 2 points per axis, got {self.n_s} x {self.n_i}")
        if not (self.step_s > 0 and self.step_i > 0):
            raise ValidationError("grid steps must be positive")

    @classmethod
    def centered(cls, center_s: float, half_span_s: float, center_i: float, half_span_i: float,
                 n: int) -> "FrequencyGrid":
        if n < 2:
            raise ValidationError(f"grid needs at least 2 points per axis, got {n}")
        return cls(
            start_s=center_s - half_span_s, step_s=2.0 * half_span_s / (n - 1), n_s=n,
            start_i=center_i - half_span_i, step_i=2.0 * half_span_i / (n - 1), n_i=n,
        )

    @property
    def omega_s(self) -> np.ndarray:
        # start + k*step per node, never a running sum
        return self.start_s + np.arange(self.n_s) * self.step_s

    @property
    def omega_i(self) -> np.ndarray:
        return self.start_i + np.arange(self.n_i) * self.step_i

    @property
    def span_s(self) -> float:
        return self.step_s * (self.n_s - 1)

    @property
    def span_i(self) -> float:
        return self.step_i * (self.n_i - 1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "start_s": self.start_s, "step_s": self.step_s, "n_s": self.n_s,
            "start_i": self.start_i, "step_i": self.step_i, "n_i": self.n_i,
        }


@dataclass(frozen=True)
class PumpEnvelope:
    """Gaussian pump amplitude A_p exp[-(w - mu_p)^2 / (2 sigma_p^2)]"""

    amplitude: float
    central_frequency: float
    width: float

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValidationError(f"pump amplitude must be positive, got {self.amplitude}")
        if not self.width > 0:
            raise ValidationError(f"pump width must be positive, got {self.width}")

    def __call__(self, omega: np.ndarray) -> np.ndarray:
        # The printed envelope has a positive exponent; only the decaying one is a pulse.
        detuning = (omega - self.central_frequency) / self.width
        return self.amplitude * np.exp(-0.5 * detuning ** 2)


@dataclass(frozen=True)
class FieldDispersion:
    """Second-order Taylor model of k(w) around a reference frequency"""

    omega0: float
    k0: float = 0.0
    k1: float = 0.0
    k2: float = 0.0

    def wavenumber(self, omega: np.ndarray) -> np.ndarray:
        nu = omega - self.omega0
        return self.k0 + self.k1 * nu + 0.5 * self.k2 * nu ** 2


@dataclass(frozen=True)
class DispersionModel:
    pump: FieldDispersion
    signal: FieldDispersion
    idler: FieldDispersion

    @property
    def is_symmetric(self) -> bool:
        s, i = self.signal, self.idler
        return (s.omega0, s.k0, s.k1, s.k2) == (i.omega0, i.k0, i.k1, i.k2)


@dataclass(frozen=True, eq=False)
class JointSpectralAmplitude:
    grid: FrequencyGrid
    values: np.ndarray
    coupling_scale: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_s, self.grid.n_i):
            raise ValidationError(
                f"JSA shape {values.shape} does not match grid {(self.grid.n_s, self.grid.n_i)}")
        if not np.all(np.isfinite(values)):
            raise DomainError("JSA contains non-finite entries")
        object.__setattr__(self, "values", _frozen(values, complex))

    @property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def scaled(self, factor: float) -> "JointSpectralAmplitude":
        return JointSpectralAmplitude(self.grid, self.values * factor, self.coupling_scale * factor)


@dataclass(frozen=True, eq=False)
class SqueezerSpectrum:
    """Descending squeezing amplitudes r_k = B * lambda_k with sum(lambda_k^2) = 1"""

    r: np.ndarray
    B: float
    lam: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        if r.ndim != 1 or r.shape != lam.shape or r.size == 0:
            raise ValidationError("r and lambda must be non-empty 1-d arrays of equal length")
        if np.any(r < 0) or np.any(lam < 0):
            raise ValidationError("squeezing amplitudes must be non-negative")
        if np.any(np.diff(r) > 0):
            raise ValidationError("squeezing amplitudes must be sorted descending")
        if np.any(np.diff(lam) > 0):
            raise ValidationError("mode distribution must be sorted descending")
        if abs(float(np.sum(lam ** 2)) - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValidationError("mode distribution must satisfy sum(lambda^2) = 1")
        if np.max(np.abs(r - float(self.B) * lam)) > AMPLITUDE_TOLERANCE * max(1.0, float(self.B)):
            raise ValidationError(f"squeezing amplitudes must equal B * lambda, got B = {self.B}")
        object.__setattr__(self, "r", _frozen(r))
        object.__setattr__(self, "lam", _frozen(lam))
        object.__setattr__(self, "B", float(self.B))

    @classmethod
    def from_amplitudes(cls, r: Sequence[float]) -> "SqueezerSpectrum":
        r = np.sort(np.asarray(r, dtype=float))[::-1]
        if np.any(r < 0):
            raise ValidationError("squeezing amplitudes must be non-negative")
        gain = math.sqrt(float(np.sum(r ** 2)))
        if gain == 0.0:
            raise DomainError("degenerate spectrum: all squeezing amplitudes are zero")
        return cls(r=r, B=gain, lam=r / gain)

    @classmethod
    def from_gain(cls, B: float, lam: Sequence[float]) -> "SqueezerSpectrum":
        if B < 0:
            raise ValidationError(f"optical gain must be non-negative, got {B}")
        lam = np.sort(np.asarray(lam, dtype=float))[::-1]
        if np.any(lam < 0):
            raise ValidationError("mode distribution must be non-negative")
        norm = math.sqrt(float(np.sum(lam ** 2)))
        if norm == 0.0:
            raise DomainError("degenerate spectrum: mode distribution is all zero")
        lam = lam / norm
        return cls(r=B * lam, B=B, lam=lam)

    @classmethod
    def thermal(cls, mu: float, B: float = 1.0) -> "SqueezerSpectrum":
        """lambda_k = sqrt(1 - mu^2) mu^k, truncated once mu^k drops below 1e-12"""
        if not 0.0 <= mu < 1.0:
            raise ValidationError(f"thermal parameter must lie in [0, 1), got {mu}")
        if mu == 0.0:
            return cls.from_gain(B, [1.0])
        n_modes = int(math.floor(math.log(TRUNCATION_THRESHOLD) / math.log(mu))) + 1
        lam = math.sqrt(1.0 - mu ** 2) * mu ** np.arange(n_modes)
        return cls.from_gain(B, lam)

    @classmethod
    def uniform(cls, n_modes: int, B: float = 1.0) -> "SqueezerSpectrum":
        if n_modes < 1:
            raise ValidationError(f"uniform distribution needs at least one mode, got {n_modes}")
        return cls.from_gain(B, np.ones(n_modes))

    def with_gain(self, B: float) -> "SqueezerSpectrum":
        return SqueezerSpectrum(r=B * self.lam, B=B, lam=self.lam)

    @property
    def n_modes(self) -> int:
        return int(self.r.size)

    @property
    def mean_occupations(self) -> np.ndarray:
        return np.sinh(self.r) ** 2

    @property
    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.r, dtype="<f8").tobytes()).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        return {"r": self.r.tolist(), "B": self.B, "lambda": self.lam.tolist()}


@dataclass(frozen=True, eq=False)
class SchmidtModes:
    """Quadrature-orthonormal mode functions psi_k(w_s) (rows of psi) and phi_k(w_i)"""

    psi: np.ndarray
    phi: np.ndarray
    grid: FrequencyGrid

    def __post_init__(self):
        object.__setattr__(self, "psi", _frozen(self.psi, complex))
        object.__setattr__(self, "phi", _frozen(self.phi, complex))


@dataclass(frozen=True)
class ThermalModeFit:
    mu: float
    residual: float
    n_used: int

    def __post_init__(self):
        if not 0.0 <= self.mu < 1.0:
            raise DomainError(f"fitted thermal parameter {self.mu} outside [0, 1)")


@dataclass(frozen=True)
class CorrelationValue:
    order: str
    value: float
    beam: str = "twin"

    def to_dict(self) -> Dict[str, Any]:
        return {"order": self.order, "beam": self.beam, "value": self.value}


@dataclass(frozen=True)
class MeanPhoton:
    value: float


@dataclass(frozen=True)
class EstimationResult:
    quantity: str
    value: float
    method: str
    valid_domain_note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "quantity": self.quantity,
            "value": self.value,
            "method": self.method,
            "valid_domain_note": self.valid_domain_note,
        }


@dataclass(frozen=True, eq=False)
class SlopeCurve:
    B: np.ndarray
    points: np.ndarray
    slope: float

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] < 8:
            raise ValidationError("slope curve needs at least 8 (g2, g3) points")
        if np.any(np.diff(self.B) <= 0):
            raise ValidationError("slope curve points must be ordered by increasing gain")
        object.__setattr__(self, "B", _frozen(self.B))
        object.__setattr__(self, "points", _frozen(points))


@dataclass(frozen=True)
class DetectorModel:
    efficiency_signal: float = 1.0
    efficiency_idler: float = 1.0
    mode: str = "number_resolving"

    def __post_init__(self):
        for name in ("efficiency_signal", "efficiency_idler"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValidationError(f"{name} must lie in (0, 1], got {value}")
        if self.mode not in ("number_resolving", "hbt_click"):
            raise ValidationError(f"unknown detector mode {self.mode!r}")


@dataclass(frozen=True, eq=False)
class PulseEnsemble:
    """Per-pulse (n_signal, n_idler) counts after detector loss"""

    records: np.ndarray
    seed: int
    spectrum_hash: str
    beam: str = "twin"

    def __post_init__(self):
        records = np.asarray(self.records, dtype=np.int64)
        if records.ndim != 2 or records.shape[1] != 2:
            raise ValidationError("records must be an (n_pulses, 2) array")
        object.__setattr__(self, "records", _frozen(records, np.int64))

    @property
    def n_pulses(self) -> int:
        return int(self.records.shape[0])

    @property
    def n_signal(self) -> np.ndarray:
        return self.records[:, 0]

    @property
    def n_idler(self) -> np.ndarray:
        return self.records[:, 1]


@dataclass(frozen=True)
class EstimatedCorrelation:
    order: str
    value: float
    stderr: float

    def __post_init__(self):
        if self.stderr < 0:
            raise ValidationError("standard error must be non-negative")

    def to_dict(self) -> Dict[str, Any]:
        return {"order": self.order, "value": self.value, "stderr": self.stderr}
