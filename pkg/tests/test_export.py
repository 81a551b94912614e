"""
Tests for ExportService
"""

import json
from unittest.mock import Mock

import numpy as np
import pytest
from botocore.exceptions import ClientError

from chalicelib.models import EstimatedCorrelation, FrequencyGrid, JointSpectralAmplitude, PulseEnsemble
from chalicelib.services.export_service import ExportService
from chalicelib.utils.validators import ValidationError


class TestRendering:
    """Test cases for CSV/JSON rendering"""

    def setup_method(self):
        self.export_service = ExportService()

    def test_csv_starts_with_digest_then_header(self):
        content = self.export_service.render_csv(["K", "g2"], [(1, 2.0), (3, 1.0 / 3.0)], "abc123")

        lines = content.splitlines()
        assert lines[0] == "# config_digest=abc123"
        assert lines[1] == "K,g2"
        assert lines[2] == "1,2.0"
        assert float(lines[3].split(",")[1]) == 1.0 / 3.0

    def test_csv_numbers_round_trip(self):
        value = 0.1 + 0.2
        content = self.export_service.render_csv(["x"], [(np.float64(value),)])

        assert float(content.splitlines()[1]) == value

    def test_json_is_sorted_and_carries_digest(self):
        content = self.export_service.render_json({"b": np.float64(1.5), "a": np.arange(3)}, "d1")

        document = json.loads(content)
        assert document == {"a": [0, 1, 2], "b": 1.5, "config_digest": "d1"}
        assert content.index('"a"') < content.index('"b"')

    def test_json_list_is_wrapped(self):
        document = json.loads(self.export_service.render_json([1, 2], "d2"))

        assert document == {"config_digest": "d2", "items": [1, 2]}

    def test_rendering_is_deterministic(self):
        document = {"values": np.linspace(0.0, 1.0, 7), "n": 7}

        assert self.export_service.render_json(document, "x") == self.export_service.render_json(document, "x")

    def test_jsa_document(self):
        grid = FrequencyGrid.centered(0.0, 1.0, 0.0, 1.0, 2)
        jsa = JointSpectralAmplitude(grid=grid, values=np.array([[1 + 2j, 0], [0, 1]]), coupling_scale=0.5)

        document = json.loads(self.export_service.render_json(self.export_service.jsa_document(jsa)))

        assert document["values"]["re"] == [[1.0, 0.0], [0.0, 1.0]]
        assert document["values"]["im"][0][0] == 2.0
        assert document["grid"]["n_s"] == 2
        assert document["coupling_scale"] == 0.5

    def test_estimates_document(self):
        ensemble = PulseEnsemble(records=np.zeros((4, 2)), seed=9, spectrum_hash="h")
        estimates = [EstimatedCorrelation("g2", 2.0, 0.1)]

        document = self.export_service.estimates_document(ensemble, estimates)

        assert document == {"orders": ["g2"], "values": [2.0], "stderr": [0.1], "n_pulses": 4, "seed": 9,
                            "spectrum_hash": "h"}


class TestLocalWrite:
    """Test cases for writing to a local directory"""

    def test_write_creates_directory(self, tmp_path):
        export_service = ExportService(str(tmp_path / "out" / "run1"))

        path = export_service.write_json("spectrum.json", {"B": 1.0}, "d")

        assert json.loads(open(path, encoding="utf-8").read())["B"] == 1.0

    def test_unwritable_target(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        export_service = ExportService(str(blocker / "sub"))

        with pytest.raises(OSError):
            export_service.write_csv("a.csv", ["x"], [(1,)])


class TestS3Write:
    """Test cases for writing to an S3 prefix"""

    def setup_method(self):
        self.s3_client = Mock()
        self.export_service = ExportService("s3://test-bucket/runs/42", s3_client=self.s3_client)

    def test_put_object(self):
        path = self.export_service.write_csv("sweep.csv", ["K"], [(1,)], "d")

        assert path == "s3://test-bucket/runs/42/sweep.csv"
        self.s3_client.put_object.assert_called_once()
        kwargs = self.s3_client.put_object.call_args.kwargs
        assert kwargs["Bucket"] == "test-bucket"
        assert kwargs["Key"] == "runs/42/sweep.csv"
        assert kwargs["Body"] == b"# config_digest=d\nK\n1\n"
        assert kwargs["ContentType"] == "text/csv"

    def test_same_bytes_as_local(self, tmp_path):
        local = ExportService(str(tmp_path))
        path = local.write_json("a.json", {"x": 0.1}, "d")

        self.export_service.write_json("a.json", {"x": 0.1}, "d")

        assert self.s3_client.put_object.call_args.kwargs["Body"] == open(path, "rb").read()

    def test_upload_failure_is_io_error(self):
        self.s3_client.put_object.side_effect = ClientError(
            {"Error": {"Code": "AccessDenied", "Message": "Access Denied"}}, "PutObject")

        with pytest.raises(OSError) as exc_info:
            self.export_service.write_json("a.json", {})

        assert "s3://test-bucket/runs/42/a.json" in str(exc_info.value)

    def test_invalid_bucket(self):
        with pytest.raises(ValidationError):
            ExportService("s3:///prefix", s3_client=Mock())
