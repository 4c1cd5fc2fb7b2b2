"""
Fractal Lq Toolkit - Separation Command
Version: 1.0.0
"""

import logging
from typing import Optional

import pandas as pd

from components.commands.base import command_runner, print_summary
from components.commands.sources import build_source
from services.models import Model, NonHomIFS
from services.separation import (
    ifs_separation_profile, separation_profile, separation_service, superexp_scan,
)
from storage.artifact_store import ArtifactStore
from utils.errors import BudgetError, ConfigError
from utils.exact import parse_real
from utils.validators import validate_config

logger = logging.getLogger(__name__)

POLY_COLUMNS = ['n', 'min_value', 'exact_value', 'log2_rate', 'exact_zero', 'nodes']


def _poly_rows(rows) -> list:
    return [{
        'n': n,
        'min_value': float(result.value),
        'exact_value': str(result.value),
        'log2_rate': result.log2_rate(n),
        'exact_zero': result.exact_zero,
        'nodes': result.nodes,
    } for n, result in rows]


def _run_poly(config: dict, store: ArtifactStore):
    mode = config['mode'] if config['mode'] != 'auto' else (
        'exact' if parse_real(config['lambda']).is_exact else 'float')
    try:
        rows = separation_service.minima_by_degree(config['coefficients'], config['lambda'],
                                                   config['n_max'], mode=mode, budget=config['budget'])
    except BudgetError as e:
        progress = e.best_so_far or {}
        completed = _poly_rows(progress.get('completed', []))
        best = progress.get('best')
        with store.transaction() as txn:
            txn.write_json('separation.json', {
                'command': 'separation', 'kind': 'poly', 'status': 'budget_exhausted',
                'n': progress.get('n'), 'best_so_far': None if best is None else str(best),
                'nodes': e.nodes, 'rows': completed,
            })
        print_summary(pd.DataFrame([{'n': progress.get('n'), 'best_so_far': str(best), 'nodes': e.nodes}]),
                      title='node budget exhausted')
        raise
    frame = pd.DataFrame(_poly_rows(rows), columns=POLY_COLUMNS)
    payload = {'command': 'separation', 'kind': 'poly', 'status': 'complete', 'mode': mode,
               'lambda': str(config['lambda']), 'coefficients': [str(c) for c in config['coefficients']],
               'minima': [result.to_json() for _, result in rows]}
    return frame, payload


@command_runner('separation')
def run_separation(config: dict, store: ArtifactStore, threads: Optional[int] = None,
                   seed: Optional[int] = None) -> int:
    """Polynomial minima, separation profiles or scans over lambda"""
    config = validate_config('separation', config)
    if threads:
        separation_service.threads = threads
    kind = config['kind']

    if kind == 'poly':
        frame, payload = _run_poly(config, store)
    elif kind == 'scan':
        mode = config['mode'] if config['mode'] != 'exact' else 'auto'
        results = superexp_scan(config['coefficients'], config['lambda_grid'], config['n_max'],
                                mode=mode, budget=config['budget'])
        frame = pd.DataFrame(results, columns=['lambda', 'log2_rate'])
        payload = {'command': 'separation', 'kind': 'scan', 'n': config['n_max'],
                   'rows': frame.to_dict(orient='records')}
    else:
        source = build_source(config['source'])
        if kind == 'profile':
            if not isinstance(source, Model):
                raise ConfigError("config key 'source' must describe a model for kind 'profile'")
            mode = config['mode'] if config['mode'] != 'auto' else 'exact'
            profile = separation_profile(source, config['x'] if config['x'] is not None else source.default_state(),
                                         config['n_max'], config['R'], mode=mode)
        else:
            if not isinstance(source, NonHomIFS):
                raise ConfigError("config key 'source' must describe a nonhom IFS for kind 'ifs'")
            profile = ifs_separation_profile(source, config['n_max'], config['R'])
        frame = profile.to_frame()
        payload = {'command': 'separation', 'kind': kind, **profile.to_json()}

    with store.transaction() as txn:
        txn.write_csv('separation.csv', frame)
        txn.write_json('separation.json', payload)
    print_summary(frame)
    return 0
