"""
Fractal Lq Toolkit - Configuration Settings
Version: 1.0.0
"""

import os
from dotenv import load_dotenv

from utils.errors import ConfigError

# Load environment variables
load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(float(raw))
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}")


class Settings:
    """Toolkit settings from environment variables"""

    # Capacity (atoms, words, cells)
    CAPACITY = _int_env('FRACTAL_LQ_CAPACITY', 2 ** 24)

    # Measures
    MERGE_TOLERANCE = _float_env('FRACTAL_LQ_MERGE_TOLERANCE', 2.0 ** -48)
    DENSE_SCALE_CAP = _int_env('FRACTAL_LQ_DENSE_SCALE_CAP', 34)
    SPARSE_SCALE_CAP = _int_env('FRACTAL_LQ_SPARSE_SCALE_CAP', 60)
    DIRECT_CONV_LIMIT = _int_env('FRACTAL_LQ_DIRECT_CONV_LIMIT', 2 ** 22)
    FFT_MAX_LENGTH = _int_env('FRACTAL_LQ_FFT_MAX_LENGTH', 2 ** 26)
    FFT_CLAMP = 1e-14

    # Search
    NODE_BUDGET = _int_env('FRACTAL_LQ_NODE_BUDGET', 10 ** 9)

    # Execution
    THREADS = _int_env('FRACTAL_LQ_THREADS', 1)
    DEBUG_MODE = os.getenv('DEBUG_MODE', 'False').lower() == 'true'

    # Spectra
    DEFAULT_Q_GRID = [1.01, 1.1, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 20.0]

    # Output
    FORMAT_VERSION = 1
    FLOAT_FORMAT = '%.12g'

    @classmethod
    def validate(cls):
        """Validate settings"""
        problems = []

        if cls.CAPACITY < 1:
            problems.append(f"FRACTAL_LQ_CAPACITY must be positive (got {cls.CAPACITY})")
        if not 0 < cls.MERGE_TOLERANCE <= 1e-6:
            problems.append(f"FRACTAL_LQ_MERGE_TOLERANCE must lie in (0, 1e-6] (got {cls.MERGE_TOLERANCE})")
        if not 0 <= cls.DENSE_SCALE_CAP <= cls.SPARSE_SCALE_CAP <= 62:
            problems.append("scale caps must satisfy 0 <= dense cap <= sparse cap <= 62")
        if cls.DIRECT_CONV_LIMIT < 1:
            problems.append("FRACTAL_LQ_DIRECT_CONV_LIMIT must be positive")
        if cls.FFT_MAX_LENGTH < 2:
            problems.append("FRACTAL_LQ_FFT_MAX_LENGTH must be at least 2")
        if cls.NODE_BUDGET < 1:
            problems.append("FRACTAL_LQ_NODE_BUDGET must be positive")
        if cls.THREADS < 1:
            problems.append("FRACTAL_LQ_THREADS must be at least 1")

        if problems:
            raise ConfigError(f"Invalid settings: {'; '.join(problems)}")

        return True


settings = Settings()
