import os
from typing import Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

class Settings:
    """Process-wide defaults read from the environment"""

    def __init__(self, environ: Optional[dict] = None):
        env = os.environ if environ is None else environ
        self.workers = int(env.get("SQUEEZER_WORKERS", "1"))
        self.log_level = env.get("SQUEEZER_LOG_LEVEL", "INFO").upper()
        self.grid_points = int(env.get("SQUEEZER_GRID_POINTS", "128"))
        self.grid_span_sigmas = float(env.get("SQUEEZER_GRID_SPAN_SIGMAS", "4.0"))
        self.fwm_pump_nodes = int(env.get("SQUEEZER_FWM_PUMP_NODES", "256"))
        self.region_name = env.get("AWS_REGION_NAME", "eu-west-1")

# Global instance
settings = Settings()
