import csv
import io
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from botocore.exceptions import BotoCoreError, ClientError

from chalicelib.models import (
    EstimatedCorrelation, JointSpectralAmplitude, PulseEnsemble, SchmidtModes,
)
from chalicelib.utils.aws_clients import aws_clients
from chalicelib.utils.validators import validate_s3_path

logger = logging.getLogger(__name__)


def _number(value: Any) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    # repr is the shortest round-trip form and does not depend on the locale
    return repr(float(value))


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


class ExportService:
    """Renders CSV/JSON artifacts and writes them to a local directory or an S3 prefix"""

    def __init__(self, target: str = ".", s3_client=None):
        self.target = target
        self.is_s3 = target.startswith("s3://")
        if self.is_s3:
            self.bucket, self.prefix = validate_s3_path(target)
            self.s3_client = s3_client or aws_clients.s3_client

    def render_csv(self, header: Sequence[str], rows: Iterable[Sequence[Any]], digest: Optional[str] = None) -> str:
        buffer = io.StringIO()
        if digest:
            buffer.write(f"# config_digest={digest}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _number(v) for v in row])
        return buffer.getvalue()

    def render_json(self, document: Any, digest: Optional[str] = None) -> str:
        document = _plain(document)
        if digest and isinstance(document, dict):
            document = {**document, "config_digest": digest}
        elif digest:
            document = {"config_digest": digest, "items": document}
        return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def write(self, name: str, content: str) -> str:
        """
        Write one artifact

        Args:
            name: File name relative to the target
            content: Rendered text

        Returns:
            Local path or s3:// URI of the artifact
        """
        data = content.encode("utf-8")
        if self.is_s3:
            key = f"{self.prefix}/{name}" if self.prefix else name
            try:
                self.s3_client.put_object(Bucket=self.bucket, Key=key, Body=data,
                                          ContentType=self._content_type(name))
            except (ClientError, BotoCoreError) as e:
                logger.error(f"Error uploading {name} to S3: {str(e)}")
                raise OSError(f"Failed to upload {name} to s3://{self.bucket}/{key}: {str(e)}")
            path = f"s3://{self.bucket}/{key}"
        else:
            os.makedirs(self.target, exist_ok=True)
            path = os.path.join(self.target, name)
            with open(path, "wb") as handle:
                handle.write(data)
        logger.info(f"Wrote {path}")
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]],
                  digest: Optional[str] = None) -> str:
        return self.write(name, self.render_csv(header, rows, digest))

    def write_json(self, name: str, document: Any, digest: Optional[str] = None) -> str:
        return self.write(name, self.render_json(document, digest))

    def jsa_rows(self, jsa: JointSpectralAmplitude):
        omega_s, omega_i = jsa.grid.omega_s, jsa.grid.omega_i
        for a, w_s in enumerate(omega_s):
            for b, w_i in enumerate(omega_i):
                value = jsa.values[a, b]
                yield w_s, w_i, value.real, value.imag

    def jsa_document(self, jsa: JointSpectralAmplitude) -> Dict[str, Any]:
        return {
            "grid": jsa.grid.to_dict(),
            "coupling_scale": jsa.coupling_scale,
            "values": {"re": jsa.values.real, "im": jsa.values.imag},
        }

    def mode_rows(self, modes: SchmidtModes, axis: str):
        functions, omega = (modes.psi, modes.grid.omega_s) if axis == "signal" else (modes.phi, modes.grid.omega_i)
        for k, row in enumerate(functions):
            for w, value in zip(omega, row):
                yield k, w, value.real, value.imag

    def ensemble_rows(self, ensemble: PulseEnsemble):
        for index, (n_signal, n_idler) in enumerate(ensemble.records):
            yield index, n_signal, n_idler

    def estimates_document(self, ensemble: PulseEnsemble, estimates: List[EstimatedCorrelation]) -> Dict[str, Any]:
        return {
            "orders": [e.order for e in estimates],
            "values": [e.value for e in estimates],
            "stderr": [e.stderr for e in estimates],
            "n_pulses": ensemble.n_pulses,
            "seed": ensemble.seed,
            "spectrum_hash": ensemble.spectrum_hash,
        }

    @staticmethod
    def _content_type(name: str) -> str:
        return "application/json" if name.endswith(".json") else "text/csv"
