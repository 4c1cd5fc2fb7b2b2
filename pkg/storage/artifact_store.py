"""
Fractal Lq Toolkit - Artifact Store
Version: 1.0.0
"""

import json
import logging
import math
import os
import tempfile
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from config.settings import settings
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


def to_jsonable(value):
    """Plain JSON values: numpy scalars unwrapped, Fractions and non-finite floats as strings"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, Fraction):
        return str(value)
    return value


def dumps(payload: dict) -> str:
    document = dict(to_jsonable(payload))
    document.setdefault('format_version', settings.FORMAT_VERSION)
    return json.dumps(document, sort_keys=True, indent=2) + '\n'


class _Transaction:
    """Writes staged in temporary files next to their targets"""

    def __init__(self, directory: Path):
        self.directory = directory
        self._staged: List[tuple] = []

    def _stage(self, name: str, text: str) -> Path:
        target = self.directory / name
        fd, temp = tempfile.mkstemp(prefix=f".{name}.", suffix='.tmp', dir=self.directory)
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        self._staged.append((Path(temp), target))
        return target

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        text = frame.to_csv(index=False, float_format=settings.FLOAT_FORMAT, lineterminator='\n')
        return self._stage(name, text)

    def write_json(self, name: str, payload: dict) -> Path:
        return self._stage(name, dumps(payload))

    def commit(self):
        for temp, target in self._staged:
            os.replace(temp, target)
            logger.debug(f"wrote {target}")
        self._staged = []

    def rollback(self):
        for temp, _ in self._staged:
            try:
                temp.unlink()
            except FileNotFoundError:
                pass
        self._staged = []


class ArtifactStore:
    """Output directory with all-or-nothing artifact writes"""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)

    @contextmanager
    def transaction(self):
        """Stage writes; rename them into place on success, drop them on any error"""
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cannot create output directory {self.out_dir}: {e}")
        txn = _Transaction(self.out_dir)
        try:
            yield txn
            txn.commit()
        except BaseException:
            txn.rollback()
            raise

    def read_json(self, name: str) -> dict:
        with open(self.out_dir / name, encoding='utf-8') as handle:
            return json.load(handle)


class GoldenStore:
    """Reference payloads for regression checks"""

    def __init__(self, directory):
        self.directory = Path(directory)

    def path(self, name: str) -> Path:
        return self.directory / f"{name}.json"

    def load(self, name: str) -> Optional[Dict]:
        path = self.path(name)
        if not path.exists():
            return None
        with open(path, encoding='utf-8') as handle:
            return json.load(handle)

    def check_or_record(self, name: str, payload: dict) -> Dict:
        """Stored reference for name; records payload first when none exists"""
        stored = self.load(name)
        if stored is not None:
            return stored
        logger.info(f"recording golden file {self.path(name)}")
        with ArtifactStore(self.directory).transaction() as txn:
            txn.write_json(self.path(name).name, payload)
        return json.loads(dumps(payload))
