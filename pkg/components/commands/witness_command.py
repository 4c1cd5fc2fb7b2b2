"""
Fractal Lq Toolkit - Witness Command
Version: 1.0.0
"""

import logging
from typing import Optional

import numpy as np
import pandas as pd

from components.commands.base import command_runner, print_summary
from components.commands.sources import build_grid_measure
from services.addcomb import inverse_witness
from storage.artifact_store import ArtifactStore
from utils.validators import validate_config

logger = logging.getLogger(__name__)


@command_runner('witness')
def run_witness(config: dict, store: ArtifactStore, threads: Optional[int] = None,
                seed: Optional[int] = None) -> int:
    """Structured sets extracted from a pair of 2^-m measures, clause by clause"""
    config = validate_config('witness', config)
    rng = np.random.default_rng(config['seed'] if seed is None else seed)
    m, D = config['m'], config['D']
    mu = build_grid_measure(config['mu'], m, D, rng)
    nu = build_grid_measure(config['nu'], m, D, rng)

    report = inverse_witness(mu, nu, config['q'], D, config['delta'],
                             center=config['center'], collapse_b=config['collapse_b'])
    frame = pd.DataFrame({'s': range(len(report.R_a)), 'R_a': report.R_a, 'R_b': report.R_b},
                         columns=['s', 'R_a', 'R_b'])
    with store.transaction() as txn:
        txn.write_csv('witness.csv', frame)
        txn.write_json('witness.json', {'command': 'witness', 'm': m, **report.to_json()})

    clauses = pd.DataFrame([{'clause': c.name, 'measured': c.measured, 'bound': c.bound, 'pass': c.passes}
                            for c in report.clauses], columns=['clause', 'measured', 'bound', 'pass'])
    print_summary(clauses, title=report.label)
    return 0
