import boto3
from typing import Optional

from chalicelib.utils.settings import settings

class AWSClients:
    """Centralized AWS clients configuration"""

    def __init__(self, region_name: Optional[str] = None):
        self.region_name = region_name or settings.region_name
        self._s3_client = None

    @property
    def s3_client(self):
        """S3 client, created on first use so local runs never touch AWS"""
        if self._s3_client is None:
            self._s3_client = boto3.client("s3", region_name=self.region_name)
        return self._s3_client

# Global instance
aws_clients = AWSClients()
