"""
End-to-end tests for the command line application
"""

import json
import math

import pandas as pd
import pytest

from app import main
from config.settings import settings

MIDDLE_THIRDS = {'type': 'selfsimilar', 'delta': {'atoms': [[0, 0.5], [1, 0.5]]}, 'lambda': '1/3'}
GASKET = [[0, 0], [0.5, 0], [0, 0.5]]


@pytest.fixture
def run(tmp_path, artifact_dir):
    """Write the config, run one command and return the exit code"""

    def invoke(command, config, *extra):
        path = tmp_path / f"{command}.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        return main([command, '--config', str(path), '--out', str(artifact_dir), *extra])

    return invoke


def read_json(directory, name):
    return json.loads((directory / name).read_text())


class TestSpectrumCommand:
    CONFIG = {'source': MIDDLE_THIRDS, 'q_grid': [2.0, 3.0], 'm_min': 4, 'm_max': 8}

    def test_writes_csv_and_json(self, run, artifact_dir, capsys):
        assert run('spectrum', self.CONFIG) == 0
        frame = pd.read_csv(artifact_dir / 'spectrum.csv')
        assert list(frame.columns) == ['q', 'm', 'tau_single', 'tau_regression', 'dimension', 'theoretical']
        assert len(frame) == 10
        payload = read_json(artifact_dir, 'spectrum.json')
        assert payload['format_version'] == settings.FORMAT_VERSION
        assert payload['m_range'] == [4, 8]
        assert 'dimension' in capsys.readouterr().out

    def test_output_is_deterministic(self, run, artifact_dir, tmp_path):
        assert run('spectrum', self.CONFIG) == 0
        first = (artifact_dir / 'spectrum.csv').read_bytes()
        assert run('spectrum', self.CONFIG, '--threads', '3') == 0
        assert (artifact_dir / 'spectrum.csv').read_bytes() == first

    def test_frostman_block(self, run, artifact_dir):
        assert run('spectrum', {**self.CONFIG, 'frostman': True}) == 0
        assert 'frostman' in read_json(artifact_dir, 'spectrum.json')

    def test_nonhomogeneous_source(self, run, artifact_dir):
        config = {'source': {'type': 'nonhom', 'maps': [['1/2', 0], ['1/4', '1/2']], 'weights': ['1/2', '1/2']},
                  'q_grid': [2.0], 'm_max': 6}
        assert run('spectrum', config) == 0
        frame = pd.read_csv(artifact_dir / 'spectrum.csv')
        assert frame['tau_tilde'][0] == pytest.approx(math.log2((math.sqrt(17) - 1) / 2), abs=1e-9)


class TestExitCodes:
    def test_malformed_json(self, run, artifact_dir):
        assert run('spectrum', '{"source": ') == 2
        assert not artifact_dir.exists() or list(artifact_dir.iterdir()) == []

    def test_missing_config_file(self, artifact_dir):
        assert main(['spectrum', '--config', '/nonexistent/config.json', '--out', str(artifact_dir)]) == 2

    def test_unknown_key(self, run, artifact_dir):
        assert run('spectrum', {**TestSpectrumCommand.CONFIG, 'colour': 'red'}) == 2
        assert not artifact_dir.exists() or list(artifact_dir.iterdir()) == []

    def test_bad_thread_count(self, run):
        assert run('spectrum', TestSpectrumCommand.CONFIG, '--threads', '0') == 2

    def test_capacity(self, run, override_settings, artifact_dir):
        override_settings(CAPACITY=10)
        assert run('intersect', {'base': 3, 'digits': [0, 2], 't': 1, 'depths': [4, 5, 6]}) == 3
        assert not artifact_dir.exists() or list(artifact_dir.iterdir()) == []

    def test_budget_exhaustion_keeps_best_so_far(self, run, artifact_dir):
        config = {'kind': 'poly', 'lambda': '1/3', 'n_max': 12, 'budget': 20}
        assert run('separation', config) == 4
        payload = read_json(artifact_dir, 'separation.json')
        assert payload['status'] == 'budget_exhausted'
        assert payload['best_so_far'] == f"1/{3 ** payload['n']}"
        assert len(payload['rows']) == payload['n'] - 1
        assert not (artifact_dir / 'separation.csv').exists()


class TestSeparationCommand:
    def test_poly(self, run, artifact_dir):
        assert run('separation', {'kind': 'poly', 'lambda': '1/2', 'n_max': 4}) == 0
        frame = pd.read_csv(artifact_dir / 'separation.csv')
        assert frame['exact_value'].tolist() == ['1/2', '1/4', '1/8', '1/16']

    def test_profile(self, run, artifact_dir):
        source = {'type': 'selfsimilar', 'delta': {'atoms': [[-1, 0.5], [1, 0.5]]}, 'lambda': '(sqrt(5)-1)/2'}
        assert run('separation', {'kind': 'profile', 'source': source, 'n_max': 4}) == 0
        assert read_json(artifact_dir, 'separation.json')['verdict'] == 'fails at n=3'

    def test_scan(self, run, artifact_dir):
        config = {'kind': 'scan', 'lambda_grid': ['1/2', '(sqrt(5)-1)/2'], 'n_max': 4}
        assert run('separation', config) == 0
        rows = read_json(artifact_dir, 'separation.json')['rows']
        assert rows[0]['log2_rate'] == pytest.approx(-1.0)
        assert rows[1]['log2_rate'] == '-inf'


class TestGeometryCommands:
    def test_intersect(self, run, artifact_dir):
        assert run('intersect', {'base': 3, 'digits': [0, 2], 't': 1, 'depths': [3, 4, 5, 6]}) == 0
        frame = pd.read_csv(artifact_dir / 'intersect.csv')
        assert frame['count'].tolist() == [20, 40, 80, 160]
        assert read_json(artifact_dir, 'intersect.json')['t'] == '1'

    def test_slice(self, run, artifact_dir):
        config = {'lambda': '1/2', 'translations': GASKET, 'depth': 6, 'offsets': [0.3],
                  'eps_depths': [2, 3, 4, 5]}
        assert run('slice', config) == 0
        payload = read_json(artifact_dir, 'slice.json')
        assert payload['bound'] == pytest.approx(math.log(3) / math.log(2) - 1)
        assert len(pd.read_csv(artifact_dir / 'slice.csv')) == 4

    def test_sumset(self, run, artifact_dir):
        cantor = {'base': 3, 'digits': [0, 2], 'depth': 8}
        config = {'a': cantor, 'b': cantor, 'eps_exponents': list(range(4, 13))}
        assert run('sumset', config) == 0
        payload = read_json(artifact_dir, 'sumset.json')
        assert payload['expected'] == 1.0
        assert payload['fit']['slope'] == pytest.approx(1.0, abs=0.02)

    def test_project(self, run, artifact_dir):
        config = {'lambda': '1/3', 'planar_delta': [[[0, 0], '1/3'], [[1, 0], '1/3'], [[0, 1], '1/3']],
                  'directions': [[1, 'sqrt2']], 'q_grid': [2.0], 'm_max': 8}
        assert run('project', config) == 0
        frame = pd.read_csv(artifact_dir / 'project.csv')
        assert list(frame.columns) == ['direction_x', 'direction_y', 'q', 'dimension', 'theoretical', 'overlaps']
        assert frame['theoretical'][0] == pytest.approx(1.0)


class TestWitnessCommand:
    def test_uniform_pair(self, run, artifact_dir):
        config = {'m': 8, 'D': 2, 'delta': 0.5, 'mu': {'type': 'uniform'}, 'nu': {'type': 'uniform'}}
        assert run('witness', config) == 0
        payload = read_json(artifact_dir, 'witness.json')
        assert 'not implemented' in payload['label']
        assert all(clause['pass'] for clause in payload['clauses'])
        assert list(pd.read_csv(artifact_dir / 'witness.csv').columns) == ['s', 'R_a', 'R_b']

    def test_seeded_random_measures_repeat(self, run, artifact_dir):
        config = {'m': 8, 'D': 2, 'mu': {'type': 'random', 'size': 40}, 'nu': {'type': 'random', 'size': 30}}
        assert run('witness', config, '--seed', '7') == 0
        first = (artifact_dir / 'witness.json').read_text()
        assert run('witness', config, '--seed', '7') == 0
        assert (artifact_dir / 'witness.json').read_text() == first


DETERMINISM_CASES = {
    'spectrum': {'source': MIDDLE_THIRDS, 'q_grid': [2.0], 'm_min': 4, 'm_max': 7},
    'separation': {'kind': 'poly', 'lambda': '2/5', 'n_max': 5},
    'intersect': {'base': 3, 'digits': [0, 2], 't': 'sqrt2', 'depths': [4, 5, 6]},
    'slice': {'lambda': '1/2', 'translations': GASKET, 'depth': 5, 'offsets': [0.3, 0.45],
              'eps_depths': [2, 3, 4]},
    'sumset': {'a': {'base': 3, 'digits': [0, 2], 'depth': 6}, 'b': {'base': 4, 'digits': [0, 3], 'depth': 5},
               'eps_exponents': [4, 5, 6, 7]},
    'witness': {'m': 8, 'D': 2, 'mu': {'type': 'random', 'size': 40}, 'nu': {'type': 'random', 'size': 30}},
    'project': {'lambda': '1/3', 'planar_delta': [[[0, 0], '1/3'], [[1, 0], '1/3'], [[0, 1], '1/3']],
                'directions': [[1, 'sqrt2'], [1, 0]], 'q_grid': [2.0], 'm_max': 7},
}


class TestDeterminism:
    @pytest.mark.parametrize('command', sorted(DETERMINISM_CASES))
    def test_repeated_runs_are_byte_identical(self, command, tmp_path):
        config_path = tmp_path / f"{command}.json"
        config_path.write_text(json.dumps(DETERMINISM_CASES[command]))
        outputs = []
        for attempt in ('first', 'second'):
            out = tmp_path / attempt
            assert main([command, '--config', str(config_path), '--out', str(out), '--seed', '11']) == 0
            outputs.append({path.name: path.read_bytes() for path in sorted(out.iterdir())})
        assert outputs[0] == outputs[1]
        assert sorted(outputs[0]) == [f"{command}.csv", f"{command}.json"]
