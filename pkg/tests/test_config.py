"""
Tests for run configuration handling, validators and settings
"""

import json

import pytest

from chalicelib.utils.config import (
    config_digest, load_run_config, parse_detector, parse_grid, parse_jsa_document, parse_spectrum,
    validate_run_config,
)
from chalicelib.utils.settings import Settings
from chalicelib.utils.validators import (
    ValidationError, create_error_response, validate_integer, validate_request_body, validate_s3_path,
)


class TestValidators:
    """Test cases for validation utilities"""

    def test_validate_s3_path_valid(self):
        bucket, prefix = validate_s3_path("s3://test-bucket/runs/2024/")

        assert bucket == "test-bucket"
        assert prefix == "runs/2024"

    def test_validate_s3_path_bucket_only(self):
        assert validate_s3_path("s3://test-bucket") == ("test-bucket", "")

    def test_validate_s3_path_invalid(self):
        with pytest.raises(ValidationError):
            validate_s3_path("invalid-path")

    def test_validate_request_body_names_dotted_key(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_request_body({"omega0": 1.0}, ["omega0", "k1"], "dispersion.pump")

        assert "dispersion.pump.k1" in str(exc_info.value)

    def test_validate_integer_rejects_bool_and_float(self):
        with pytest.raises(ValidationError):
            validate_integer(True, "seed")
        with pytest.raises(ValidationError):
            validate_integer(1.5, "seed")
        with pytest.raises(ValidationError):
            validate_integer(0, "n_pulses", minimum=1)

    def test_create_error_response(self):
        response = create_error_response("Domain error", "vacuum", "domain", 422)

        assert response.status_code == 422
        assert response.body == {"error": "Domain error", "details": "vacuum", "type": "domain"}


class TestRunConfig:
    """Test cases for RunConfig loading and parsing"""

    def test_unknown_top_level_key(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_run_config({"seed": 1, "colour": "blue"})

        assert "colour" in str(exc_info.value)

    def test_unknown_nested_key_names_path(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_run_config({"pump": {"central_frequency": 1.0, "width": 1.0, "phase": 0.0}})

        assert "pump.phase" in str(exc_info.value)

    def test_unknown_source(self):
        with pytest.raises(ValidationError):
            validate_run_config({"source": "opo"})

    def test_load_run_config(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"source": "explicit", "spectrum": {"r": [0.1]}}))

        assert load_run_config(str(path))["spectrum"] == {"r": [0.1]}

    def test_load_run_config_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{not json")

        with pytest.raises(ValidationError):
            load_run_config(str(path))

    def test_load_run_config_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_run_config(str(tmp_path / "missing.json"))

    def test_digest_ignores_key_order(self):
        a = {"seed": 1, "spectrum": {"B": 0.5, "lambda": [1.0]}}
        b = {"spectrum": {"lambda": [1.0], "B": 0.5}, "seed": 1}

        assert config_digest(a) == config_digest(b)
        assert config_digest(a) != config_digest({**a, "seed": 2})
        assert len(config_digest(a)) == 64

    def test_parse_spectrum_forms(self):
        assert parse_spectrum({"r": [0.2, 0.1]}).n_modes == 2
        assert parse_spectrum({"B": 0.5, "lambda": [1.0, 1.0]}).r.tolist() == pytest.approx([0.5 / 2 ** 0.5] * 2)
        assert parse_spectrum({"B": 1.0, "uniform_K": 4}).n_modes == 4
        assert parse_spectrum({"B": 1.0, "thermal_mu": 0.0}).n_modes == 1

    def test_parse_spectrum_needs_a_distribution(self):
        with pytest.raises(ValidationError):
            parse_spectrum({"B": 1.0})

    def test_parse_spectrum_rejects_strings(self):
        with pytest.raises(ValidationError):
            parse_spectrum({"r": ["0.1"]})

    def test_parse_grid_auto_when_no_start(self):
        assert parse_grid(None) is None
        assert parse_grid({"n": 64}) is None

    def test_parse_grid_explicit(self):
        grid = parse_grid({"start_s": 1.0, "step_s": 0.5, "n_s": 3, "start_i": 2.0, "step_i": 0.25, "n_i": 4})

        assert grid.omega_s.tolist() == [1.0, 1.5, 2.0]
        assert grid.n_i == 4

    def test_parse_detector_defaults(self):
        detector = parse_detector(None)

        assert detector.efficiency_signal == 1.0
        assert detector.mode == "number_resolving"

    def test_parse_jsa_document(self):
        document = {
            "grid": {"start_s": 0.0, "step_s": 1.0, "n_s": 2, "start_i": 0.0, "step_i": 1.0, "n_i": 2},
            "coupling_scale": 2.0,
            "values": {"re": [[1.0, 0.0], [0.0, 1.0]], "im": [[0.0, 0.5], [0.0, 0.0]]},
        }

        jsa = parse_jsa_document(document)

        assert jsa.values[0, 1] == 0.5j
        assert jsa.coupling_scale == 2.0


class TestSettings:
    """Test cases for environment-backed settings"""

    def test_defaults(self):
        settings = Settings(environ={})

        assert settings.workers == 1
        assert settings.grid_points == 128
        assert settings.grid_span_sigmas == 4.0
        assert settings.fwm_pump_nodes == 256
        assert settings.log_level == "INFO"

    def test_environment_overrides(self):
        settings = Settings(environ={"SQUEEZER_WORKERS": "4", "SQUEEZER_LOG_LEVEL": "debug",
                                     "AWS_REGION_NAME": "us-east-1"})

        assert settings.workers == 4
        assert settings.log_level == "DEBUG"
        assert settings.region_name == "us-east-1"
