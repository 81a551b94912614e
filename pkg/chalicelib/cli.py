"""
Command-line front end.

    python -m chalicelib.cli <jsa|decompose|correlations|estimate|simulate|sweep> --config run.json

Exit codes: 0 success, 2 configuration error, 3 domain error, 4 I/O error.
"""

import argparse
import copy
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from botocore.exceptions import BotoCoreError, ClientError

from chalicelib.models import SqueezerSpectrum
from chalicelib.services.correlation_service import correlation_service
from chalicelib.services.decomposition_service import decomposition_service
from chalicelib.services.estimation_service import (
    MU_TABLE, K_TABLE, SLOPE_WINDOW, estimation_service,
)
from chalicelib.services.export_service import ExportService
from chalicelib.services.simulator_service import SimulatorService
from chalicelib.services.spectral_service import spectral_service
from chalicelib.utils.config import (
    config_digest, load_run_config, parse_detector, parse_dispersion, parse_grid, parse_jsa_document,
    parse_pump, parse_spectrum, validate_run_config,
)
from chalicelib.utils.settings import settings
from chalicelib.utils.validators import (
    DomainError, ValidationError, validate_integer, validate_number, validate_positive,
    validate_request_body,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4

DEFAULT_ORDERS = {"twin": ["g2", "g3", "g11"], "single": ["g2", "g3"]}


class Run:
    """Effective configuration of one command invocation"""

    def __init__(self, config: Dict[str, Any], out: str, quiet: bool):
        self.config = config
        self.digest = config_digest(config)
        self.export = ExportService(out)
        self.quiet = quiet

    def say(self, message: str) -> None:
        if not self.quiet:
            print(message)


def build_jsa(config: Dict[str, Any]):
    """JSA of the configured PDC or FWM source"""
    source = config.get("source")
    if source not in ("pdc", "fwm"):
        raise ValidationError("jsa requires a spectral source (source = 'pdc' or 'fwm')")
    validate_request_body(config, ["pump", "dispersion", "length"])
    pump = parse_pump(config["pump"], "pump")
    dispersion = parse_dispersion(config["dispersion"])
    length = validate_positive(config["length"], "length")
    coupling = validate_positive(config.get("coupling_scale", 1.0), "coupling_scale")
    phasematching = config.get("phasematching", "exact_sinc")
    pump2 = None
    if source == "fwm":
        pump2 = parse_pump(config.get("pump2", config["pump"]), "pump2")

    grid = parse_grid(config.get("grid"))
    if grid is None:
        grid_block = config.get("grid") or {}
        grid = spectral_service.default_grid(
            pump, dispersion, length, phasematching, pump2=pump2,
            n_points=validate_integer(grid_block.get("n", settings.grid_points), "grid.n", 2),
            span_sigmas=validate_positive(grid_block.get("span_sigmas", settings.grid_span_sigmas),
                                          "grid.span_sigmas"),
        )
    if source == "pdc":
        return spectral_service.build_pdc_jsa(pump, dispersion, length, grid, phasematching, coupling)
    nodes = validate_integer(config.get("fwm_pump_nodes", settings.fwm_pump_nodes), "fwm_pump_nodes")
    return spectral_service.build_fwm_jsa(pump, pump2, dispersion, length, grid, coupling, nodes)


def resolve_spectrum(config: Dict[str, Any]) -> SqueezerSpectrum:
    """Explicit spectrum block, a stored JSA, or the decomposition of the configured source"""
    if config.get("source", "explicit") == "explicit" and config.get("jsa_file") is None:
        validate_request_body(config, ["spectrum"])
        return parse_spectrum(config["spectrum"])
    spectrum, _ = decomposition_service.schmidt_decompose(load_jsa(config))
    return spectrum


def load_jsa(config: Dict[str, Any]):
    if config.get("jsa_file") is not None:
        with open(config["jsa_file"], "r", encoding="utf-8") as handle:
            try:
                document = json.load(handle)
            except json.JSONDecodeError as e:
                raise ValidationError(f"jsa_file is not valid JSON: {e}")
        return parse_jsa_document(document)
    return build_jsa(config)


def cmd_jsa(run: Run) -> List[str]:
    jsa = build_jsa(run.config)
    grid = jsa.grid
    run.say(f"grid {grid.n_s}x{grid.n_i}: signal [{grid.omega_s[0]:.6e}, {grid.omega_s[-1]:.6e}] rad/s, "
            f"idler [{grid.omega_i[0]:.6e}, {grid.omega_i[-1]:.6e}] rad/s")
    run.say(f"frobenius norm {jsa.frobenius_norm:.12e}")
    return [
        run.export.write_csv("jsa.csv", ["omega_s", "omega_i", "re", "im"], run.export.jsa_rows(jsa), run.digest),
        run.export.write_json("jsa.json", run.export.jsa_document(jsa), run.digest),
    ]


def cmd_decompose(run: Run) -> List[str]:
    spectrum, modes = decomposition_service.schmidt_decompose(load_jsa(run.config))
    document = {
        **spectrum.to_dict(),
        "K": decomposition_service.schmidt_number(spectrum),
        "squeezing_db": decomposition_service.squeezing_db(spectrum),
        "mu": None,
        "residual": None,
    }
    try:
        fit = decomposition_service.fit_thermal(spectrum)
        document.update(mu=fit.mu, residual=fit.residual)
    except DomainError as e:
        logger.warning(f"Thermal fit skipped: {e}")
        document["thermal_fit_error"] = str(e)
    run.say(f"{spectrum.n_modes} modes, B = {spectrum.B:.9g}, K = {document['K']:.9g}")
    header = ["k", "omega", "re", "im"]
    return [
        run.export.write_json("spectrum.json", document, run.digest),
        run.export.write_csv("modes_signal.csv", header, run.export.mode_rows(modes, "signal"), run.digest),
        run.export.write_csv("modes_idler.csv", header, run.export.mode_rows(modes, "idler"), run.digest),
    ]


def cmd_correlations(run: Run) -> List[str]:
    config = run.config
    spectrum = resolve_spectrum(config)
    block = config.get("correlations") or {}
    beam = block.get("beam", config.get("beam", "twin"))
    orders = block.get("orders") or DEFAULT_ORDERS.get(beam, DEFAULT_ORDERS["twin"])
    values = correlation_service.evaluate_batch(
        [{"order": order, "beam": beam, "spectrum": spectrum} for order in orders])
    return [run.export.write_json("correlations.json", values, run.digest)]


def cmd_estimate(run: Run) -> List[str]:
    validate_request_body(run.config, ["measured"])
    results = estimation_service.estimate_from_measurements(run.config["measured"])
    for result in results:
        run.say(f"{result.quantity} = {result.value:.9g} ({result.method})")
    return [run.export.write_json("estimates.json", [r.to_dict() for r in results], run.digest)]


def cmd_simulate(run: Run) -> List[str]:
    config = run.config
    spectrum = resolve_spectrum(config)
    detector = parse_detector(config.get("detector"))
    block = config.get("simulation") or {}
    beam = config.get("beam", "twin")
    n_pulses = validate_integer(block.get("n_pulses", 100000), "simulation.n_pulses", 1)
    workers = validate_integer(block.get("workers", settings.workers), "simulation.workers", 1)
    seed = validate_integer(config.get("seed", 0), "seed", 0)
    simulator = SimulatorService(workers=workers)

    if beam == "twin":
        ensemble = simulator.sample_twin_beam(spectrum, detector, n_pulses, seed)
    elif beam == "single":
        ensemble = simulator.sample_single_beam(spectrum, detector, n_pulses, seed)
    else:
        raise ValidationError(f"beam must be 'twin' or 'single', got {beam!r}")

    orders = block.get("orders") or DEFAULT_ORDERS[beam]
    estimates = simulator.estimate_correlations(ensemble, orders)
    document = run.export.estimates_document(ensemble, estimates)
    document["closed_form"] = [correlation_service.evaluate(order, spectrum, beam).value for order in orders]
    if detector.mode == "hbt_click" or block.get("hbt_splitting") is not None:
        splitting = validate_number(block.get("hbt_splitting", 0.5), "simulation.hbt_splitting")
        hbt = simulator.hbt_click_estimate_g2(ensemble, splitting)
        document["hbt"] = hbt.to_dict()

    paths = [run.export.write_json("summary.json", document, run.digest)]
    if block.get("write_records", True):
        paths.append(run.export.write_csv("ensemble.csv", ["pulse_index", "n_signal", "n_idler"],
                                          run.export.ensemble_rows(ensemble), run.digest))
    for estimate in estimates:
        run.say(f"{estimate.order} = {estimate.value:.6g} +- {estimate.stderr:.2g}")
    return paths


def cmd_sweep(run: Run) -> List[str]:
    block = run.config.get("sweep")
    if block is None:
        raise ValidationError("Missing sweep parameter")
    validate_request_body(block, ["kind"], "sweep")
    kind = block["kind"]
    handlers: Dict[str, Callable[[Run, Dict[str, Any]], List[str]]] = {
        "twin_modes": _sweep_twin_modes,
        "twin_thermal": _sweep_twin_thermal,
        "twin_gain": _sweep_twin_gain,
        "single_curve": _sweep_single_curve,
        "single_slope_map": _sweep_single_slope_map,
        "single_gain": _sweep_single_gain,
    }
    if kind not in handlers:
        raise ValidationError(f"sweep.kind must be one of {sorted(handlers)}, got {kind!r}")
    return handlers[kind](run, block)


def _sweep_twin_modes(run: Run, block: Dict[str, Any]) -> List[str]:
    rows = []
    for K in block.get("K_values") or list(range(1, 21)):
        g2 = correlation_service.g2_twin_lowgain(SqueezerSpectrum.uniform(validate_integer(K, "sweep.K_values", 1))).value
        rows.append((K, g2, 1.0 / (g2 - 1.0)))
    return [run.export.write_csv("sweep_twin_modes.csv", ["K", "g2", "K_from_g2"], rows, run.digest)]


def _sweep_twin_thermal(run: Run, block: Dict[str, Any]) -> List[str]:
    rows = []
    for mu in block.get("mu_values") or [round(0.1 * i, 1) for i in range(10)]:
        spectrum = SqueezerSpectrum.thermal(validate_number(mu, "sweep.mu_values"))
        g2 = correlation_service.g2_twin_lowgain(spectrum).value
        rows.append((mu, decomposition_service.schmidt_number(spectrum), g2,
                     estimation_service.estimate_mu_from_g2(g2).value))
    return [run.export.write_csv("sweep_twin_thermal.csv", ["mu", "K", "g2", "mu_from_g2"], rows, run.digest)]


def _sweep_twin_gain(run: Run, block: Dict[str, Any]) -> List[str]:
    base = _sweep_distribution(block)
    rows = []
    for gain in _gain_grid(block):
        spectrum = base.with_gain(gain)
        g11 = correlation_service.g11_twin(spectrum).value
        rows.append((gain, g11, correlation_service.g2_twin(spectrum).value, 1.0 / np.sqrt(g11)))
    return [run.export.write_csv("sweep_twin_gain.csv", ["B", "g11", "g2", "B_lowgain"], rows, run.digest)]


def _sweep_single_curve(run: Run, block: Dict[str, Any]) -> List[str]:
    base = _sweep_distribution(block)
    gains = _gain_grid(block)
    curve = estimation_service.sweep_single_beam_curve(base.lam, (gains[0], gains[-1]), len(gains))
    rows = [(b, g2, g3) for b, (g2, g3) in zip(curve.B, curve.points)]
    return [
        run.export.write_csv("sweep_single_curve.csv", ["B", "g2", "g3"], rows, run.digest),
        run.export.write_json("sweep_single_curve.json", {"slope": curve.slope, "n_points": len(rows)}, run.digest),
    ]


def _sweep_single_slope_map(run: Run, block: Dict[str, Any]) -> List[str]:
    rows = []
    for mu in MU_TABLE:
        lam = SqueezerSpectrum.thermal(float(mu)).lam
        rows.append(("mu", float(mu), estimation_service.sweep_single_beam_curve(lam, SLOPE_WINDOW).slope))
    for K in K_TABLE:
        lam = SqueezerSpectrum.uniform(int(K)).lam
        rows.append(("K", int(K), estimation_service.sweep_single_beam_curve(lam, SLOPE_WINDOW).slope))
    return [run.export.write_csv("sweep_single_slope_map.csv", ["table", "parameter", "slope"], rows, run.digest)]


def _sweep_single_gain(run: Run, block: Dict[str, Any]) -> List[str]:
    base = _sweep_distribution(block)
    rows = []
    for gain in _gain_grid(block):
        g2 = correlation_service.g2_single(base.with_gain(gain)).value
        rows.append((gain, g2, 1.0 / np.sqrt(g2)))
    return [run.export.write_csv("sweep_single_gain.csv", ["B", "g2", "B_lowgain"], rows, run.digest)]


def _sweep_distribution(block: Dict[str, Any]) -> SqueezerSpectrum:
    if block.get("lambda") is not None:
        return parse_spectrum({"B": 1.0, "lambda": block["lambda"]}, "sweep")
    if block.get("thermal_mu") is not None:
        return SqueezerSpectrum.thermal(validate_number(block["thermal_mu"], "sweep.thermal_mu"))
    if block.get("uniform_K") is not None:
        return SqueezerSpectrum.uniform(validate_integer(block["uniform_K"], "sweep.uniform_K", 1))
    return SqueezerSpectrum.uniform(1)


def _gain_grid(block: Dict[str, Any]) -> np.ndarray:
    low = validate_positive(block.get("B_min", 0.01), "sweep.B_min")
    high = validate_positive(block.get("B_max", 3.0), "sweep.B_max")
    n_points = validate_integer(block.get("n_points", 64), "sweep.n_points", 2)
    if not low < high:
        raise ValidationError(f"sweep.B_min must be below sweep.B_max, got {low} >= {high}")
    return np.linspace(low, high, n_points)


COMMANDS = {
    "jsa": cmd_jsa,
    "decompose": cmd_decompose,
    "correlations": cmd_correlations,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="squeezer", description="Multimode squeezing characterization toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", required=True, help="run configuration (JSON)")
        sub.add_argument("--out", default=None, help="output directory or s3://bucket/prefix")
        sub.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sub.add_argument("--quiet", action="store_true")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else settings.log_level)

    try:
        config = load_run_config(args.config)
        config = copy.deepcopy(config)
        if args.seed is not None:
            config["seed"] = args.seed
        validate_run_config(config)
        out = args.out or (config.get("output") or {}).get("dir") or "."
        run = Run(config, out, args.quiet)
        for path in COMMANDS[args.command](run):
            run.say(f"wrote {path}")
        return EXIT_OK
    except ValidationError as e:
        logger.error(f"Configuration error: {str(e)}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as e:
        logger.error(f"Domain error: {str(e)}")
        print(f"domain error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (OSError, ClientError, BotoCoreError) as e:
        logger.error(f"I/O error: {str(e)}")
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
