import csv
import json

import numpy as np
import pytest
from scipy import stats

from extensions import init_extensions, shutdown_extensions
from harness import (CSV_COLUMNS, Comparison, ExperimentConfig, ExperimentHarness, RegimeReport, emit_report,
                     ks_statistic, load_config, load_report, run_confined, run_critical, run_meagre,
                     sweep_phase_diagram)
from limit_laws import critical_mu, critical_variance
from utils import ConfigError, EmptySampleError, campaign_state, reset_campaign_state


def small_config(**kwargs) -> ExperimentConfig:
    base = dict(meagre_cells=[], confined_cells=[], synthetic=None, critical_cells=[], critical_mc=None,
                critical_rho_sweep=[], threads=1, seed_root=4242)
    base.update(kwargs)
    return ExperimentConfig(**base).validate()


def one_row_report() -> RegimeReport:
    report = RegimeReport(regime='meagre', seed_root=7)
    report.comparisons.append(Comparison(regime='meagre', N=None, M=500, x0=1, y0=500, runs=100,
                                         statistic='mean_lambda_over_M', observed=2.0123456789012345,
                                         theoretical=2.0, tolerance=0.05, passed=True, seed_root=7,
                                         oracle='limit_laws.g_mean'))
    return report


# ============================================================
# KS
# ============================================================

def test_ks_single_sample_at_median():
    assert ks_statistic([0.0], lambda x: 0.5) == pytest.approx(0.5)


def test_ks_samples_below_support():
    assert ks_statistic([-1e6] * 10, lambda x: float(stats.expon.cdf(x))) == pytest.approx(1.0)


def test_ks_empty_sample():
    with pytest.raises(EmptySampleError):
        ks_statistic([], lambda x: 0.0)


def test_ks_against_scipy():
    rng = np.random.default_rng(7)
    samples = rng.exponential(size=1000)
    ks = ks_statistic(samples, lambda x: float(stats.expon.cdf(x)))
    assert ks == pytest.approx(stats.kstest(samples, 'expon').statistic, abs=1e-12)
    assert ks <= 0.0613


# ============================================================
# Configuracao
# ============================================================

def test_load_config_precedence(tmp_path):
    path = tmp_path / 'cfg.json'
    path.write_text(json.dumps({'seed_root': 11, 'threads': 2, 'tolerances': {'meagre_mean': 0.01}}))
    cfg = load_config(str(path), {'seed_root': 99, 'threads': None})
    assert cfg.seed_root == 99
    assert cfg.threads == 2
    assert cfg.tol('meagre_mean') == 0.01
    assert cfg.tol('confined_ks') == 0.07


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / 'cfg.json'
    path.write_text(json.dumps({'seed': 1}))
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text(json.dumps({'tolerances': {'nao_existe': 1.0}}))
    with pytest.raises(ConfigError):
        load_config(str(path))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'ausente.json'))


def test_regime_constraints():
    with pytest.raises(ConfigError):
        small_config(meagre_cells=[{'N': 10, 'M': 100, 'x0': 1, 'y0': 100, 'runs': 10}])
    with pytest.raises(ConfigError):
        small_config(confined_cells=[{'N': 100, 'M': 100, 'runs': 10}])
    with pytest.raises(ConfigError):
        small_config(critical_cells=[{'rho': -1.0, 'N': 40}])
    with pytest.raises(ConfigError):
        small_config(regime='outro')
    assert small_config(meagre_cells=[{'N': None, 'M': 100, 'x0': 1, 'y0': 100, 'runs': 10}])


# ============================================================
# Relatorios
# ============================================================

def test_empty_report_is_header_only(tmp_path):
    path = emit_report(RegimeReport(regime='sweep', seed_root=1), 'csv', str(tmp_path / 'r.csv'))
    assert open(path, encoding='utf-8').read() == ','.join(CSV_COLUMNS) + '\n'


def test_one_row_report(tmp_path):
    path = emit_report(one_row_report(), 'csv', str(tmp_path / 'r.csv'))
    with open(path, newline='', encoding='utf-8') as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1
    assert list(rows[0].keys()) == CSV_COLUMNS
    assert rows[0]['N'] == 'inf'
    assert rows[0]['pass'] == 'true'
    assert rows[0]['runtime_ms'] == '0'
    assert float(rows[0]['observed']) == 2.0123456789012345


def test_csv_and_json_agree(tmp_path):
    report = one_row_report()
    csv_path = emit_report(report, 'csv', str(tmp_path / 'r.csv'))
    json_path = emit_report(report, 'json', str(tmp_path / 'r.json'))
    with open(csv_path, newline='', encoding='utf-8') as f:
        row = next(csv.DictReader(f))
    data = json.load(open(json_path, encoding='utf-8'))
    comparison = data['comparisons'][0]
    assert float(row['observed']) == comparison['observed']
    assert float(row['theoretical']) == comparison['theoretical']
    assert comparison['oracle'] == 'limit_laws.g_mean'


def test_emission_is_byte_identical(tmp_path):
    a = emit_report(one_row_report(), 'csv', str(tmp_path / 'a.csv'))
    b = emit_report(one_row_report(), 'csv', str(tmp_path / 'b.csv'))
    assert open(a, 'rb').read() == open(b, 'rb').read()


def test_json_report_round_trip(tmp_path):
    report = one_row_report()
    path = emit_report(report, 'json', str(tmp_path / 'r.json'))
    loaded = load_report(path)
    assert loaded.comparisons == report.comparisons
    assert loaded.passed


def test_emit_rejects_unknown_format(tmp_path):
    with pytest.raises(ConfigError):
        emit_report(one_row_report(), 'xml', str(tmp_path / 'r.xml'))


def test_failed_comparison_marks_report():
    cfg = small_config()
    harness = ExperimentHarness(cfg)
    report = RegimeReport(regime='meagre', seed_root=cfg.seed_root)
    harness.compare(report, 'x', 1.5, 1.0, 0.1, 'teste')
    harness.compare(report, 'y', 1.0, None, None, 'teste', informational=True)
    assert not report.passed
    assert len(report.failures) == 1
    assert report.comparisons[1].passed is None
    assert any('FALHOU' in entry['message'] for entry in campaign_state['logs'])


# ============================================================
# Campanhas
# ============================================================

def test_meagre_mean_small_cell():
    cfg = small_config(meagre_cells=[{'N': None, 'M': 50, 'x0': 1, 'y0': 50, 'runs': 2000}])
    report = run_meagre(cfg)
    rows = {c.statistic: c for c in report.comparisons}
    assert rows['mean_lambda_over_M'].passed
    assert rows['exact_mean_lambda_over_M'].observed == pytest.approx(2.0, rel=1e-12)
    assert 'variance_lambda_over_M_minus_1' in rows
    assert all(c.oracle for c in report.comparisons)


def test_meagre_far_start_concentrates():
    cfg = small_config(meagre_cells=[{'N': 2000, 'M': 500, 'x0': 1000, 'y0': 500, 'runs': 200}])
    report = run_meagre(cfg)
    rows = {c.statistic: c for c in report.comparisons}
    assert rows['fraction_at_u'].observed == 1.0
    assert report.passed


def test_critical_exact_parts():
    cfg = small_config(critical_cells=[{'rho': 1.0, 'N': 40}], critical_rho_sweep=[0.25, 1.0, 4.0])
    report = run_critical(cfg)
    assert report.passed
    statistics = [c.statistic for c in report.comparisons]
    assert 'exact_mean_lambda_over_M' in statistics
    assert 'mu_monotone_min_ratio' in statistics
    assert sum(s.startswith('mgf_at_s=') for s in statistics) == 3


def test_confined_renewal_is_deterministic_across_threads():
    cfg = small_config(confined_cells=[{'N': 8, 'M': 128, 'runs': 60, 'sampler': 'renewal'}])
    shutdown_extensions()
    serial = run_confined(cfg).to_dict()
    try:
        init_extensions(4)
        parallel = run_confined(cfg).to_dict()
    finally:
        shutdown_extensions()
    assert serial == parallel


def test_confined_moment_checks():
    cfg = small_config(confined_cells=[{'N': 8, 'M': 128, 'runs': 60, 'sampler': 'renewal'}])
    rows = {c.statistic: c for c in run_confined(cfg).comparisons}
    assert rows['theta_over_confined_scale'].passed
    assert rows['conditional_mean_excursion'].passed
    assert rows['conditional_variance_excursion'].passed
    assert rows['condition_quantity'].passed


def test_sweep_records_budget_skips():
    cfg = small_config(sweep_N=[50], sweep_ratios=[0.005, 1.0], budget=2000)
    report = sweep_phase_diagram(cfg)
    assert len(report.skipped) == 1
    assert report.skipped[0]['M'] == 2500
    assert report.passed
    informational = [c for c in report.comparisons if c.passed is None]
    assert {c.statistic for c in informational} == {'curve_mean_lambda_over_M', 'curve_theta'}


def test_sweep_critical_cell():
    cfg = small_config(sweep_N=[50], sweep_ratios=[1.0])
    rows = {c.statistic: c for c in sweep_phase_diagram(cfg).comparisons}
    assert rows['critical_mean_lambda_over_M'].passed


@pytest.mark.slow
def test_meagre_campaign_at_desk_scale():
    cfg = small_config(meagre_cells=[{'N': None, 'M': 500, 'x0': 1, 'y0': 500, 'runs': 20000}])
    rows = {c.statistic: c for c in run_meagre(cfg).comparisons}
    assert 1.9 <= rows['mean_lambda_over_M'].observed <= 2.1
    assert 1.2 <= rows['variance_lambda_over_M_minus_1'].observed <= 1.47


@pytest.mark.slow
def test_confined_campaign_at_desk_scale():
    cfg = small_config(confined_cells=[{'N': 8, 'M': 128, 'runs': 500, 'sampler': 'renewal'}],
                       synthetic={'N': 30, 'M': 9000, 'p': 1e-4, 'runs': 1000})
    report = run_confined(cfg)
    rows = {c.statistic: c for c in report.comparisons}
    assert rows['ks_exponential'].observed <= 0.07 + 1e-3
    assert rows['synthetic_ks_exponential'].observed <= 0.05 + 1e-3


@pytest.mark.slow
def test_renewal_structure():
    cfg = small_config(renewal_runs=100_000)
    report = ExperimentHarness(cfg).run_renewal_structure()
    assert len(report.comparisons) == 10
    assert report.passed


@pytest.mark.slow
def test_full_validate_campaign():
    cfg = ExperimentConfig(regime='validate', threads=1).validate()
    report = ExperimentHarness(cfg).run()
    assert report.passed, [c.statistic for c in report.failures]


def test_error_log_is_capped():
    reset_campaign_state('validate', 0)
    harness = ExperimentHarness(small_config())
    for i in range(250):
        harness.log_message(f"erro {i}", "error")
    assert len(campaign_state['error_logs']) == 200
    assert campaign_state['error_logs'][-1]['message'] == 'erro 249'


def test_critical_monte_carlo_against_limit_law():
    cfg = small_config(critical_mc={'rho': 1.0, 'N': 20, 'runs': 200})
    rows = {c.statistic: c for c in run_critical(cfg).comparisons}
    mean_row = rows['mc_mean_vs_limit_law']
    var_row = rows['mc_variance_vs_limit_law']
    assert mean_row.theoretical == pytest.approx(1 + critical_mu(1.0))
    assert var_row.theoretical == pytest.approx(critical_variance(1.0))
    assert mean_row.tolerance > cfg.tol('critical_mc_limit_mean')
    assert var_row.tolerance > cfg.tol('critical_mc_limit_variance')
    assert var_row.oracle == 'limit_laws.critical_variance'
    assert mean_row.passed and var_row.passed
    assert rows['mc_mean_lambda_over_M'].passed
