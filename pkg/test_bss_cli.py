import json
import os

import pandas as pd
import pytest

from bss_cli import dispatch, main, version_string

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')
SINGLE = os.path.join(CONFIG_DIR, 'single.toml')


def _read_json(path):
    with open(path, encoding='utf-8') as fh:
        return json.load(fh)


def test_limits_single_spec(tmp_path):
    """Una singularidad: π_k = δ_0 y τ² para cada v pedido."""
    out = tmp_path / 'limits.json'
    code = dispatch(['limits', '--spec', SINGLE, '--k', '2', '--delta-n', '0.001', '--out', str(out)])
    assert code == 0
    doc = _read_json(out)
    assert doc['pi_k'] == [{'theta': 0.0, 'weight': 1.0}]
    assert [row['v'] for row in doc['tau']] == [1, 2]
    assert 'lambda' not in doc


def test_limits_lambda_only(tmp_path):
    out = tmp_path / 'lambda.json'
    assert dispatch(['limits', '--k', '1', '--lambda', '--hurst', '0.5', '--out', str(out)]) == 0
    doc = _read_json(out)
    assert doc['lambda'][0][0] == pytest.approx(2.0)
    assert doc['lambda'][1][1] == pytest.approx(3.0)


def test_limits_with_lambda_from_spec(tmp_path):
    out = tmp_path / 'both.json'
    assert dispatch(['limits', '--spec', SINGLE, '--k', '2', '--lambda', '--out', str(out)]) == 0
    doc = _read_json(out)
    assert doc['lambda']['H'] == pytest.approx(1.0 / 3.0)


def test_invalid_spec_exits_with_validation_code(capsys):
    code = dispatch(['limits', '--spec', os.path.join(CONFIG_DIR, 'bad.toml'), '--k', '1', '--verbose', 'json'])
    assert code == 1
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert payload['error'] == 'validation'
    assert payload['diagnostics'][0].startswith('exponent_range')


def test_usage_errors_exit_with_one(capsys):
    assert dispatch(['limits', '--spec', SINGLE, '--k', '1', '--bogus']) == 1
    assert dispatch(['limits', '--spec', SINGLE, '--k', '0']) == 1
    assert dispatch(['limits', '--k', '1']) == 1
    assert dispatch(['limits', '--k', '1', '--lambda', '--hurst', '0.8']) == 1
    assert dispatch(['estimate', '--in', 'missing.csv', '--k', '2']) == 1
    assert dispatch(['estimate', '--in', 'x.csv', '--k', '2', '--null-alpha', '0.7']) == 1
    err = capsys.readouterr().err
    assert '❌ validation error' in err


def test_version(capsys):
    assert main(['--version']) == 0
    assert capsys.readouterr().out.strip() == version_string()
    assert version_string().startswith('bss ')


def test_simulate_then_estimate(tmp_path):
    csv_path = tmp_path / 'path.csv'
    code = dispatch([
        'simulate', '--spec', SINGLE, '--delta-n', str(2.0 ** -8), '--horizon', '0.25',
        '--seed', '3', '--threads', '1', '--out', str(csv_path),
    ])
    assert code == 0
    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == ['t', 'X', 'sigma']
    assert len(frame) == 65

    again = tmp_path / 'again.csv'
    dispatch([
        'simulate', '--spec', SINGLE, '--delta-n', str(2.0 ** -8), '--horizon', '0.25',
        '--seed', '3', '--threads', '1', '--out', str(again),
    ])
    pd.testing.assert_frame_equal(frame, pd.read_csv(again))

    est = tmp_path / 'estimate.json'
    code = dispatch(['estimate', '--in', str(csv_path), '--k', '2', '--null-alpha', '-0.1666',
                     '--spec', SINGLE, '--out', str(est)])
    assert code == 0
    doc = _read_json(est)
    lo, hi = doc['ci_95']
    assert lo < doc['alpha_hat'] < hi
    assert doc['horizon_checked'] is True
    assert doc['t_stat'] is not None


def test_experiment_command(tmp_path):
    config = tmp_path / 'lln.toml'
    config.write_text(
        'kind = "LLN"\n'
        f'spec = {json.dumps(SINGLE)}\n'
        'k = 2\n'
        'deltas = [0.015625]\n'
        'horizon = 0.25\n'
        'replications = 2\n'
        'output = "out"\n',
        encoding='utf-8',
    )
    code = dispatch(['experiment', '--config', str(config), '--seed', '5', '--replications', '3',
                     '--threads', '1'])
    assert code == 0
    doc = _read_json(tmp_path / 'out' / 'report.json')
    assert doc['metadata']['master_seed'] == 5
    assert doc['metadata']['config']['replications'] == 3
    frame = pd.read_csv(tmp_path / 'out' / 'replications.csv')
    assert len(frame) == 3 * 2


def test_experiment_failure_in_workers_exits_with_two(tmp_path, capsys):
    """Réplicas que fallan en procesos de joblib: exit code 2 con la semilla en el mensaje."""
    config = tmp_path / 'coverage.toml'
    config.write_text(
        'kind = "Coverage"\n'
        f'spec = {json.dumps(SINGLE)}\n'
        'sigma = "const:0"\n'
        'k = 2\n'
        'deltas = [0.015625]\n'
        'horizon = 0.25\n'
        'replications = 4\n'
        'output = "out"\n',
        encoding='utf-8',
    )
    code = dispatch(['experiment', '--config', str(config), '--threads', '2', '--verbose', 'json'])
    assert code == 2
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert payload['error'] == 'numerical'
    assert payload['operation'] == 'replication'
    assert 'seed' in payload['message']
    assert not (tmp_path / 'out' / 'report.json').exists()
