import csv
import json

import pytest

from app import EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, build_parser, parse_n, run
from harness import CSV_COLUMNS


def read_rows(path):
    with open(path, newline='', encoding='utf-8') as f:
        return list(csv.DictReader(f))


def test_parse_n():
    assert parse_n('inf') is None
    assert parse_n('12') == 12
    args = build_parser().parse_args(['simulate', '--N', 'inf', '--M', '5'])
    assert args.N is None
    assert args.M == 5


def test_limits_command(tmp_path):
    out = tmp_path / 'limits.csv'
    assert run(['--out', str(out), 'limits', '--rho', '1.0']) == EXIT_OK
    rows = read_rows(out)
    assert list(rows[0].keys()) == CSV_COLUMNS
    assert any(r['statistic'] == 'mu_rho=1' for r in rows)


def test_excursion_command(tmp_path):
    out = tmp_path / 'exc.csv'
    assert run(['--out', str(out), 'excursion', '--N', '10', '--n', '1', '5', '50']) == EXIT_OK
    rows = read_rows(out)
    assert all(r['pass'] in ('true', '') for r in rows)
    assert run(['--out', str(out), 'excursion', '--x', '3', '--n', '4', '9']) == EXIT_OK


def test_exact_lifetime_command(tmp_path):
    out = tmp_path / 'exact.json'
    code = run(['--format', 'json', '--out', str(out), 'exact-lifetime', '--N', '5', '--M', '3',
                '--x0', '2', '--y0', '1'])
    assert code == EXIT_OK
    data = json.load(open(out, encoding='utf-8'))
    rows = {c['statistic']: c for c in data['comparisons']}
    assert rows['P_lambda_eq_y0']['observed'] == pytest.approx(1.0)
    assert data['passed'] is True


@pytest.mark.parametrize("method", ["dp", "renewal", "brute"])
def test_exact_lifetime_methods(tmp_path, method):
    out = tmp_path / f'{method}.csv'
    code = run(['--out', str(out), 'exact-lifetime', '--N', '4', '--M', '3', '--method', method])
    assert code == EXIT_OK


def test_simulate_with_trace(tmp_path, capsys):
    out = tmp_path / 'sim.csv'
    code = run(['--seed', '5', '--threads', '1', '--out', str(out), 'simulate', '--N', '6', '--M', '4',
                '--runs', '300', '--trace'])
    assert code == EXIT_OK
    assert 'absorvido' in capsys.readouterr().out
    rows = read_rows(out)
    assert rows[0]['statistic'] == 'mean_lambda'
    assert rows[0]['seed_root'] == '5'


def test_simulate_is_reproducible(tmp_path):
    a, b = tmp_path / 'a.csv', tmp_path / 'b.csv'
    args = ['simulate', '--N', 'inf', '--M', '10', '--runs', '200']
    assert run(['--seed', '3', '--threads', '1', '--out', str(a)] + args) == EXIT_OK
    assert run(['--seed', '3', '--threads', '4', '--out', str(b)] + args) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_invalid_model_exit_code(tmp_path):
    assert run(['--out', str(tmp_path / 'x.csv'), 'simulate', '--N', '2', '--M', '3']) == EXIT_CONFIG


def test_unknown_config_key_exit_code(tmp_path):
    cfg = tmp_path / 'cfg.json'
    cfg.write_text(json.dumps({'bogus': 1}))
    assert run(['--config', str(cfg), '--out', str(tmp_path / 'x.csv'), 'limits']) == EXIT_CONFIG


def test_budget_exit_code(tmp_path):
    code = run(['--budget', '10', '--out', str(tmp_path / 'x.csv'), 'exact-lifetime', '--N', '50', '--M', '100'])
    assert code == EXIT_BUDGET


def test_report_converts_json_to_csv(tmp_path):
    source = tmp_path / 'limits.json'
    assert run(['--format', 'json', '--out', str(source), 'limits', '--rho', '0.5']) == EXIT_OK
    target = tmp_path / 'limits.csv'
    assert run(['--out', str(target), 'report', '--input', str(source)]) == EXIT_OK
    rows = read_rows(target)
    data = json.load(open(source, encoding='utf-8'))
    assert len(rows) == len(data['comparisons'])


def test_report_missing_input(tmp_path):
    code = run(['--out', str(tmp_path / 'x.csv'), 'report', '--input', str(tmp_path / 'nao.json')])
    assert code == EXIT_CONFIG
