"""
Fractal Lq Toolkit - Geometry Commands
Version: 1.0.0
"""

import logging
import math
from typing import Optional

import pandas as pd

from components.commands.base import command_runner, print_summary
from services.geometry import (
    PlanarMeasure, cantor_cells, exponent_fit, intersection_scan, planar_attractor,
    planar_stage_measure, project_measure, resolve_parameter, slice_count, sumset_dimension,
)
from services.models import make_projection, theoretical_dimension
from services.spectra import spectrum_service
from storage.artifact_store import ArtifactStore
from utils.exact import parse_real
from utils.validators import validate_config

logger = logging.getLogger(__name__)


def _fit_summary(fit, **extra) -> pd.DataFrame:
    return pd.DataFrame([{'slope': fit.slope, 'r2': fit.r2, 'stable': fit.stable, **extra}])


@command_runner('intersect')
def run_intersect(config: dict, store: ArtifactStore, threads: Optional[int] = None,
                  seed: Optional[int] = None) -> int:
    """Covering counts of A cap (t A + u) for a base-p Cantor set A"""
    config = validate_config('intersect', config)
    scan = intersection_scan(config['base'], config['digits'], config['t'], config['u'], config['depths'])
    frame = pd.DataFrame([{'eps': r['eps'], 'count': r['count']} for r in scan.rows], columns=['eps', 'count'])
    payload = {'command': 'intersect', 'base': config['base'], 'digits': config['digits'],
               't': str(config['t']), 'u': str(config['u']), **scan.to_json()}
    with store.transaction() as txn:
        txn.write_csv('intersect.csv', frame)
        txn.write_json('intersect.json', payload)
    print_summary(_fit_summary(scan.fit, bound=scan.bound, non_increasing=scan.non_increasing))
    return 0


def _slice_direction(config: dict):
    if config['direction'] is not None:
        return [resolve_parameter(v) for v in config['direction']]
    if config['slope'] is not None:
        return [1.0, resolve_parameter(config['slope'])]
    return [1.0, 0.0]


@command_runner('slice')
def run_slice(config: dict, store: ArtifactStore, threads: Optional[int] = None,
              seed: Optional[int] = None) -> int:
    """Largest slice count over the offsets at eps = lambda^k, with exponent fit"""
    config = validate_config('slice', config)
    lam = resolve_parameter(config['lambda'])
    translations = [[resolve_parameter(v) for v in point] for point in config['translations']]
    cells = planar_attractor(lam, config['alpha'], translations, config['depth'])
    direction = _slice_direction(config)

    counts = []
    for k in sorted(set(config['eps_depths'])):
        eps = lam ** k
        count = max(slice_count(cells, direction, offset, eps) for offset in config['offsets'])
        counts.append((eps, count))
        logger.debug(f"slice eps=lam^{k}: {count} cells")
    fit = exponent_fit(counts)

    dimension = math.log(len(translations)) / math.log(1.0 / lam)
    bound = max(dimension - 1.0, 0.0)
    frame = pd.DataFrame(counts, columns=['eps', 'count'])
    payload = {'command': 'slice', 'direction': direction, 'offsets': [str(o) for o in config['offsets']],
               'similarity_dimension': dimension, 'bound': bound, 'fit': fit.to_json()}
    with store.transaction() as txn:
        txn.write_csv('slice.csv', frame)
        txn.write_json('slice.json', payload)
    print_summary(_fit_summary(fit, bound=bound))
    return 0


@command_runner('sumset')
def run_sumset(config: dict, store: ArtifactStore, threads: Optional[int] = None,
               seed: Optional[int] = None) -> int:
    """Box-counting dimension of A + B for two Cantor sets"""
    config = validate_config('sumset', config)
    a = cantor_cells(config['a']['base'], config['a']['digits'], config['a']['depth'])
    b = cantor_cells(config['b']['base'], config['b']['digits'], config['b']['depth'])
    eps_grid = [2.0 ** -k for k in sorted(set(config['eps_exponents']))]
    fit = sumset_dimension(a, b, eps_grid)

    expected = min(a.dimension + b.dimension, 1.0)
    frame = pd.DataFrame(fit.points, columns=['eps', 'count'])
    payload = {'command': 'sumset', 'dim_a': a.dimension, 'dim_b': b.dimension,
               'expected': expected, 'fit': fit.to_json()}
    with store.transaction() as txn:
        txn.write_csv('sumset.csv', frame)
        txn.write_json('sumset.json', payload)
    print_summary(_fit_summary(fit, expected=expected))
    return 0


@command_runner('project')
def run_project(config: dict, store: ArtifactStore, threads: Optional[int] = None,
                seed: Optional[int] = None) -> int:
    """L^q dimensions of projections of a planar self-similar measure"""
    config = validate_config('project', config)
    lam = resolve_parameter(config['lambda'])
    atoms = [((resolve_parameter(x), resolve_parameter(y)), parse_real(mass).value)
             for (x, y), mass in config['planar_delta']]
    depth = int(math.ceil(config['m_max'] * math.log(2.0) / math.log(1.0 / lam)))
    stage = planar_stage_measure(lam, config['alpha'], PlanarMeasure.from_pairs(atoms), depth)
    model = make_projection(config['planar_delta'], config['lambda'], config['alpha'])
    q_grid = sorted(config['q_grid'])
    expected = {q: theoretical_dimension(model, q) for q in q_grid}

    rows = []
    for direction in config['directions']:
        vector = [resolve_parameter(v) for v in direction]
        projected = project_measure(stage, vector)
        reports = spectrum_service.run_grid(projected, q_grid, config['m_min'], config['m_max'], threads=threads)
        for report in reports:
            rows.append({'direction_x': vector[0], 'direction_y': vector[1], 'q': report.q,
                         'dimension': report.lq_dimension, 'theoretical': expected[report.q],
                         'overlaps': projected.overlaps})

    frame = pd.DataFrame(rows, columns=['direction_x', 'direction_y', 'q', 'dimension', 'theoretical', 'overlaps'])
    payload = {'command': 'project', 'lambda': str(config['lambda']), 'alpha': str(config['alpha']),
               'depth': depth, 'rows': frame.to_dict(orient='records')}
    with store.transaction() as txn:
        txn.write_csv('project.csv', frame)
        txn.write_json('project.json', payload)
    print_summary(frame)
    return 0
