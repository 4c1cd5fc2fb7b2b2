"""
Fractal Lq Toolkit - Spectrum Command
Version: 1.0.0
"""

import logging
from typing import Optional

import numpy as np
import pandas as pd

from components.commands.base import command_runner, print_summary
from components.commands.sources import build_source
from config.settings import settings
from services.models import Model, NonHomIFS, symbolic_tau
from services.spectra import (
    frostman_exponent, reports_to_frame, spectrum_service, summary_frame, tau_tilde,
)
from storage.artifact_store import ArtifactStore
from utils.validators import validate_config

logger = logging.getLogger(__name__)


def _nonhom_frame(ifs: NonHomIFS, q_grid, m_max: int) -> pd.DataFrame:
    rows = []
    for q in q_grid:
        root = tau_tilde(ifs, q)
        rows.append({'q': q, 'm': m_max, 'symbolic_tau': symbolic_tau(ifs, q, m_max),
                     'tau_tilde': root.tau, 'dimension': root.dimension, 'residual': root.residual})
    return pd.DataFrame(rows, columns=['q', 'm', 'symbolic_tau', 'tau_tilde', 'dimension', 'residual'])


@command_runner('spectrum')
def run_spectrum(config: dict, store: ArtifactStore, threads: Optional[int] = None,
                 seed: Optional[int] = None) -> int:
    """Empirical tau(q) and D(mu, q) over the q-grid, with theoretical values for models"""
    config = validate_config('spectrum', config)
    source = build_source(config['source'])
    q_grid = sorted(config['q_grid'] or settings.DEFAULT_Q_GRID)
    m_min, m_max = config['m_min'], config['m_max']

    if isinstance(source, NonHomIFS):
        frame = _nonhom_frame(source, q_grid, m_max)
        with store.transaction() as txn:
            txn.write_csv('spectrum.csv', frame)
            txn.write_json('spectrum.json', {'command': 'spectrum', 'source': config['source'],
                                             'rows': frame.to_dict(orient='records')})
        print_summary(frame)
        return 0

    if isinstance(source, Model) and config['states'] > 1:
        states = source.sample_states(config['states'])
    else:
        states = [config['x']]

    frames = []
    per_state = []
    for index, x in enumerate(states):
        reports = spectrum_service.run_grid(source, q_grid, m_min, m_max, x=x, threads=threads)
        frame = reports_to_frame(reports)
        if len(states) > 1:
            frame.insert(0, 'state', index)
        frames.append(frame)
        per_state.append(reports)

    summary = summary_frame(per_state[0])
    if len(states) > 1:
        summary['dimension'] = [float(np.median([reports[i].lq_dimension for reports in per_state]))
                                for i in range(len(q_grid))]

    payload = {
        'command': 'spectrum',
        'source': config['source'],
        'm_range': [m_min, m_max],
        'states': [repr(x) for x in states],
        'reports': [[r.to_json() for r in reports] for reports in per_state],
        'summary': summary.to_dict(orient='records'),
    }
    if config['frostman']:
        report = frostman_exponent(source, m_min, m_max, x=states[0])
        payload['frostman'] = {'per_scale': report.per_scale, 'slope': report.slope, 'r2': report.r2}

    with store.transaction() as txn:
        txn.write_csv('spectrum.csv', pd.concat(frames, ignore_index=True))
        txn.write_json('spectrum.json', payload)
    print_summary(summary)
    logger.info(f"spectrum: {len(q_grid)} q values over m={m_min}..{m_max}")
    return 0
