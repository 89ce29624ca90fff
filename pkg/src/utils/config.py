"""
Configuration settings for the phase-space toolkit.
"""

import os
from pathlib import Path
from typing import Optional


class Config:
    """Configuration class for toolkit settings."""

    # Project paths
    PROJECT_ROOT = Path(__file__).parent.parent.parent
    OUTPUT_DIR = PROJECT_ROOT / "output"
    LOGS_DIR = PROJECT_ROOT / "logs"
    CONFIG_DIR = PROJECT_ROOT / "config"

    # Environment variable capping the worker pool (overrides the config file)
    ENV_MAX_WORKERS = "PHASESPACE_MAX_WORKERS"

    # Numerical tolerances shared by validation and the verify suite
    TOLERANCES = {
        "structure": 1e-10,
        "hermitian": 1e-10,
        "density_eigen": 1e-10,
        "imag_symbol": 1e-10,
        "two_body_symmetry": 1e-10,
        "one_body_chain": 1e-10,
        "husimi_floor": -1e-10,
        "occupancy": 1e-10,
    }

    # Propagator defaults
    ENGINE_SETTINGS = {
        "engine": "spectral_moyal",
        "integrator": "rk4",
        "dt": 1e-3,
        "steps": 1000,
        "stride": 100,
        # ||H|| * dt above this triggers a stability warning for rk4
        "rk4_stability_limit": 0.1,
    }

    # Coherent frame defaults; width None means sqrt(N / 4 pi)
    FRAME_SETTINGS = {
        "sigma": None,
    }

    BENCH_SETTINGS = {
        "sizes": [15, 23, 31, 47, 63],
        "repeats": 5,
        "steps": 2,
        "max_workers": 1,
    }

    # Output naming patterns
    FILE_PATTERNS = {
        "symbol": "symbol_{label}.csv",
        "snapshot": "snapshot_{index:05d}.csv",
        "manifest": "manifest.json",
        "transport_snapshot": "transport_{index:05d}.csv",
        "bench": "bench_report.csv",
        "verify": "verify_report.csv",
        "correlation": "correlation_{label}.csv",
        "logs": "phasespace_{date}.log",
    }

    # Logging settings
    LOGGING_SETTINGS = {
        "level": "INFO",
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        "to_file": False,
    }

    # Floating point format for every CSV written
    CSV_FLOAT_FORMAT = "%.17g"

    @classmethod
    def ensure_directories(cls, *extra: Path):
        """Ensure all required directories exist."""
        directories = [cls.OUTPUT_DIR, cls.LOGS_DIR, *extra]
        for directory in directories:
            Path(directory).mkdir(parents=True, exist_ok=True)

    @classmethod
    def get_file_path(cls, file_type: str, directory: Optional[Path] = None, **fields) -> Path:
        """
        Get file path for a specific output type.

        Args:
            file_type: Key into FILE_PATTERNS
            directory: Target directory, defaults to OUTPUT_DIR (LOGS_DIR for logs)
            **fields: Values substituted into the pattern

        Returns:
            Path object for the file
        """
        if file_type == "logs" and "date" not in fields:
            from datetime import datetime
            fields["date"] = datetime.now().strftime("%Y-%m-%d")

        pattern = cls.FILE_PATTERNS.get(file_type, f"{file_type}.csv")
        filename = pattern.format(**fields)

        if directory is not None:
            return Path(directory) / filename
        if file_type == "logs":
            return cls.LOGS_DIR / filename
        return cls.OUTPUT_DIR / filename

    @classmethod
    def default_frame_sigma(cls, n: int) -> float:
        """Frame width symmetric between the position and momentum axes."""
        import math

        sigma = cls.FRAME_SETTINGS.get("sigma")
        if sigma is not None:
            return float(sigma)
        return math.sqrt(n / (4.0 * math.pi))

    @classmethod
    def max_workers(cls, configured: Optional[int] = None) -> int:
        """
        Resolve the worker-pool size.

        The environment variable wins over the config value; both fall back to 1.
        """
        raw = os.environ.get(cls.ENV_MAX_WORKERS)
        if raw:
            try:
                value = int(raw)
            except ValueError:
                raise ValueError(f"{cls.ENV_MAX_WORKERS} must be an integer, got {raw!r}")
            if value < 1:
                raise ValueError(f"{cls.ENV_MAX_WORKERS} must be positive, got {value}")
            return value
        if configured is None:
            return 1
        return max(1, int(configured))


# Create default configuration instance
config = Config()
