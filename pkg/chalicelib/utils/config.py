import hashlib
import json
import logging
from typing import Any, Dict, Mapping, Optional

import numpy as np

from chalicelib.models import (
    DetectorModel, DispersionModel, FieldDispersion, FrequencyGrid, JointSpectralAmplitude,
    PumpEnvelope, SqueezerSpectrum,
)
from chalicelib.utils.validators import (
    ValidationError, validate_integer, validate_known_keys, validate_number, validate_positive,
    validate_request_body,
)

logger = logging.getLogger(__name__)

_PUMP = {"amplitude": None, "central_frequency": None, "width": None}
_FIELD = {"omega0": None, "k0": None, "k1": None, "k2": None}
_SPECTRUM = {"r": None, "B": None, "lambda": None, "thermal_mu": None, "uniform_K": None}
_MEASURED = {"g2": None, "g3": None, "g11": None, "points": None, "lambda": None, "beam": None}

# None marks a leaf; nested dicts list the keys allowed inside a block
RUN_CONFIG_SCHEMA: Dict[str, Any] = {
    "seed": None,
    "source": None,
    "pump": _PUMP,
    "pump2": _PUMP,
    "dispersion": {"pump": _FIELD, "signal": _FIELD, "idler": _FIELD},
    "grid": {"start_s": None, "step_s": None, "n_s": None, "start_i": None, "step_i": None, "n_i": None,
             "n": None, "span_sigmas": None},
    "length": None,
    "phasematching": None,
    "coupling_scale": None,
    "fwm_pump_nodes": None,
    "jsa_file": None,
    "spectrum": _SPECTRUM,
    "beam": None,
    "correlations": {"orders": None, "beam": None},
    "detector": {"efficiency_signal": None, "efficiency_idler": None, "mode": None},
    "simulation": {"n_pulses": None, "workers": None, "orders": None, "hbt_splitting": None,
                   "write_records": None},
    "sweep": {"kind": None, "B_min": None, "B_max": None, "n_points": None, "lambda": None,
              "thermal_mu": None, "uniform_K": None, "K_values": None, "mu_values": None},
    "measured": _MEASURED,
    "output": {"dir": None},
}

SOURCES = ("pdc", "fwm", "explicit")


def load_run_config(path: str) -> Dict[str, Any]:
    """
    Read and schema-check a run configuration

    Raises:
        OSError: If the file cannot be read
        ValidationError: If it is not a JSON object or holds unknown keys
    """
    with open(path, "r", encoding="utf-8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as e:
            raise ValidationError(f"config is not valid JSON: {e}")
    validate_run_config(document)
    return document


def validate_run_config(document: Any, schema: Mapping[str, Any] = RUN_CONFIG_SCHEMA, path: str = "") -> None:
    if not isinstance(document, dict):
        raise ValidationError(f"{path or 'config'} must be a JSON object")
    validate_known_keys(document, schema.keys(), path)
    for key, sub_schema in schema.items():
        if sub_schema is not None and key in document:
            validate_run_config(document[key], sub_schema, f"{path}.{key}" if path else key)
    source = document.get("source")
    if not path and source is not None and source not in SOURCES:
        raise ValidationError(f"source must be one of {SOURCES}, got {source!r}")


def config_digest(document: Mapping[str, Any]) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_pump(block: Mapping[str, Any], path: str) -> PumpEnvelope:
    validate_request_body(block, ["central_frequency", "width"], path)
    return PumpEnvelope(
        amplitude=validate_positive(block.get("amplitude", 1.0), f"{path}.amplitude"),
        central_frequency=validate_number(block["central_frequency"], f"{path}.central_frequency"),
        width=validate_positive(block["width"], f"{path}.width"),
    )


def parse_dispersion(block: Mapping[str, Any]) -> DispersionModel:
    validate_request_body(block, ["pump", "signal", "idler"], "dispersion")
    fields = {}
    for name in ("pump", "signal", "idler"):
        field = block[name]
        path = f"dispersion.{name}"
        validate_request_body(field, ["omega0"], path)
        fields[name] = FieldDispersion(
            omega0=validate_number(field["omega0"], f"{path}.omega0"),
            k0=validate_number(field.get("k0", 0.0), f"{path}.k0"),
            k1=validate_number(field.get("k1", 0.0), f"{path}.k1"),
            k2=validate_number(field.get("k2", 0.0), f"{path}.k2"),
        )
    return DispersionModel(**fields)


def parse_grid(block: Optional[Mapping[str, Any]]) -> Optional[FrequencyGrid]:
    """Explicit grid, or None when the block asks for the automatic marginal-based grid"""
    if block is None or "start_s" not in block:
        return None
    validate_request_body(block, ["start_s", "step_s", "n_s", "start_i", "step_i", "n_i"], "grid")
    return FrequencyGrid(
        start_s=validate_number(block["start_s"], "grid.start_s"),
        step_s=validate_positive(block["step_s"], "grid.step_s"),
        n_s=validate_integer(block["n_s"], "grid.n_s", minimum=2),
        start_i=validate_number(block["start_i"], "grid.start_i"),
        step_i=validate_positive(block["step_i"], "grid.step_i"),
        n_i=validate_integer(block["n_i"], "grid.n_i", minimum=2),
    )


def parse_spectrum(block: Mapping[str, Any], path: str = "spectrum") -> SqueezerSpectrum:
    """
    Squeezer spectrum from one of: {r}, {B, lambda}, {B, thermal_mu}, {B, uniform_K}
    """
    if not isinstance(block, dict):
        raise ValidationError(f"{path} must be a JSON object")
    validate_known_keys(block, _SPECTRUM.keys(), path)
    if block.get("r") is not None:
        return SqueezerSpectrum.from_amplitudes(_number_list(block["r"], f"{path}.r"))
    validate_request_body(block, ["B"], path)
    gain = validate_number(block["B"], f"{path}.B")
    if block.get("lambda") is not None:
        return SqueezerSpectrum.from_gain(gain, _number_list(block["lambda"], f"{path}.lambda"))
    if block.get("thermal_mu") is not None:
        return SqueezerSpectrum.thermal(validate_number(block["thermal_mu"], f"{path}.thermal_mu"), gain)
    if block.get("uniform_K") is not None:
        return SqueezerSpectrum.uniform(validate_integer(block["uniform_K"], f"{path}.uniform_K", 1), gain)
    raise ValidationError(f"Missing {path}.r, {path}.lambda, {path}.thermal_mu or {path}.uniform_K parameter")


def parse_detector(block: Optional[Mapping[str, Any]]) -> DetectorModel:
    block = block or {}
    return DetectorModel(
        efficiency_signal=validate_number(block.get("efficiency_signal", 1.0), "detector.efficiency_signal"),
        efficiency_idler=validate_number(block.get("efficiency_idler", 1.0), "detector.efficiency_idler"),
        mode=block.get("mode", "number_resolving"),
    )


def parse_jsa_document(document: Mapping[str, Any]) -> JointSpectralAmplitude:
    """JSA from the JSON export format {grid, coupling_scale, values: {re, im}}"""
    validate_request_body(document, ["grid", "values"], "jsa_file")
    grid = parse_grid(document["grid"])
    if grid is None:
        raise ValidationError("Missing jsa_file.grid.start_s parameter")
    values = document["values"]
    validate_request_body(values, ["re", "im"], "jsa_file.values")
    matrix = np.asarray(values["re"], dtype=float) + 1j * np.asarray(values["im"], dtype=float)
    return JointSpectralAmplitude(grid=grid, values=matrix,
                                  coupling_scale=float(document.get("coupling_scale", 1.0)))


def _number_list(values: Any, name: str):
    if not isinstance(values, list) or not values:
        raise ValidationError(f"{name} must be a non-empty list of numbers")
    return [validate_number(v, name) for v in values]


def parse_measured(block: Any, path: str = "measured") -> Dict[str, Any]:
    """
    Type-check a measured document {g2, g3, g11, points, lambda, beam}

    Returns:
        Copy of the block with numbers as floats and points as [g2, g3] float pairs

    Raises:
        ValidationError: For unknown keys, non-numeric values or malformed points
    """
    if not isinstance(block, dict):
        raise ValidationError(f"{path} must be a JSON object")
    validate_known_keys(block, _MEASURED.keys(), path)
    measured: Dict[str, Any] = {"beam": block.get("beam", "twin")}
    if measured["beam"] not in ("twin", "single"):
        raise ValidationError(f"{path}.beam must be 'twin' or 'single', got {measured['beam']!r}")
    for key in ("g2", "g3", "g11"):
        if block.get(key) is not None:
            measured[key] = validate_number(block[key], f"{path}.{key}")
    if block.get("lambda") is not None:
        measured["lambda"] = _number_list(block["lambda"], f"{path}.lambda")
    if block.get("points") is not None:
        points = block["points"]
        if not isinstance(points, list) or not points:
            raise ValidationError(f"{path}.points must be a non-empty list of [g2, g3] pairs")
        pairs = []
        for index, pair in enumerate(points):
            name = f"{path}.points[{index}]"
            if not isinstance(pair, list) or len(pair) != 2:
                raise ValidationError(f"{name} must be a [g2, g3] pair")
            pairs.append([validate_number(value, name) for value in pair])
        measured["points"] = pairs
    return measured
