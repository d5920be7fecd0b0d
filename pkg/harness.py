"""
Campanhas de reproducao dos tres regimes (capacidade escassa, critico,
espaco confinado), varredura do diagrama de fases, estatistica KS e emissao
de relatorios CSV/JSON.
"""
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from config import (CONFINED_THRESHOLD, DEFAULT_TOLERANCES, HORIZON_CAP, MEAGRE_THRESHOLD, OUTPUT_DIR,
                    SEED_ROOT, THREADS, WORK_BUDGET, logger)
from excursion_analytics import (exit_moments, exit_pmf_cosine, exit_pmf_dp, one_sided_tail,
                                 tail_expansion)
from extensions import get_threads, parallel_map, run_stream
from lifetime_engine import (brute_force_pmf, compound_mgf, excursion_law, expected_lifetime_exact,
                             extinction_prob, lifetime_moments_exact, lifetime_pmf_dp)
from limit_laws import (confined_scale, critical_G, critical_mgf, critical_mu, critical_s_rho, critical_variance,
                        dm_moments, find_t0, g_mean, kummer_K, levy_G, meagre_atom_mass, script_I, theta_H,
                        theta_H_integral, theta_H_remainder)
from utils import (BudgetExceeded, ConfigError, EmptySampleError, campaign_state, format_number,
                   read_json_file, reset_campaign_state, sample_mean, sample_variance, standard_error,
                   write_csv_file, write_json_file)
from walk_model import ModelParams, initial_state, simulate_batch

CSV_COLUMNS = ['regime', 'N', 'M', 'x0', 'y0', 'runs', 'statistic', 'observed', 'theoretical',
               'tolerance', 'pass', 'seed_root', 'runtime_ms']

REGIMES = ('meagre', 'critical', 'confined', 'validate', 'sweep')

# Celulas padrao das campanhas
DEFAULT_MEAGRE_CELLS = [
    {'N': None, 'M': 500, 'x0': 1, 'y0': 500, 'runs': 20000},
    {'N': None, 'M': 400, 'x0': 20, 'y0': 400, 'runs': 4000},
    {'N': 2000, 'M': 500, 'x0': 1000, 'y0': 500, 'runs': 1000},
]
DEFAULT_CONFINED_CELLS = [{'N': 8, 'M': 128, 'runs': 500, 'sampler': 'renewal'}]
DEFAULT_SYNTHETIC = {'N': 30, 'M': 9000, 'p': 1e-4, 'runs': 1000}
DEFAULT_CRITICAL_CELLS = [{'rho': 1.0, 'N': 40}]
DEFAULT_CRITICAL_MC = {'rho': 1.0, 'N': 20, 'runs': 200}
DEFAULT_SWEEP_N = [50, 100, 200]
DEFAULT_SWEEP_RATIOS = [0.005, 0.01, 0.1, 0.5, 1.0, 2.0]

# a >= este valor (x0^2/M) conta como "a infinito" na campanha escassa
A_INFINITE_PROXY = 100.0
DIRECT_THETA_MIN = 1e-6


# ============================================================
# Configuracao
# ============================================================

@dataclass
class ExperimentConfig:
    regime: str = 'validate'
    seed_root: int = SEED_ROOT
    threads: int = THREADS
    budget: int = WORK_BUDGET
    horizon_cap: int = HORIZON_CAP
    out: Optional[str] = None
    format: str = 'csv'
    record_runtime: bool = False
    meagre_cells: List[Dict] = field(default_factory=lambda: [dict(c) for c in DEFAULT_MEAGRE_CELLS])
    meagre_threshold: float = MEAGRE_THRESHOLD
    confined_cells: List[Dict] = field(default_factory=lambda: [dict(c) for c in DEFAULT_CONFINED_CELLS])
    confined_threshold: float = CONFINED_THRESHOLD
    synthetic: Optional[Dict] = field(default_factory=lambda: dict(DEFAULT_SYNTHETIC))
    critical_cells: List[Dict] = field(default_factory=lambda: [dict(c) for c in DEFAULT_CRITICAL_CELLS])
    critical_mgf_points: List[float] = field(default_factory=lambda: [-1.0, -0.25])
    critical_rho_sweep: List[float] = field(default_factory=lambda: [0.25, 1.0, 4.0])
    critical_mc: Optional[Dict] = field(default_factory=lambda: dict(DEFAULT_CRITICAL_MC))
    sweep_N: List[int] = field(default_factory=lambda: list(DEFAULT_SWEEP_N))
    sweep_ratios: List[float] = field(default_factory=lambda: list(DEFAULT_SWEEP_RATIOS))
    renewal_runs: int = 100000
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def tol(self, name: str) -> float:
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])

    def validate(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"Regime desconhecido: {self.regime} (esperado um de {REGIMES})")
        if self.format not in ('csv', 'json'):
            raise ConfigError(f"Formato desconhecido: {self.format}")
        if self.threads < 1 or self.budget < 1:
            raise ConfigError("threads e budget devem ser positivos")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"Tolerancias desconhecidas: {sorted(unknown)}")
        for cell in self.meagre_cells:
            _check_cell(cell, ('N', 'M', 'x0', 'y0', 'runs'))
            N, M = cell['N'], cell['M']
            if N is not None and M / N ** 2 > self.meagre_threshold:
                raise ConfigError(f"Celula escassa com M/N^2 = {M / N ** 2:.4g} > {self.meagre_threshold}")
        for cell in self.confined_cells:
            _check_cell(cell, ('N', 'M', 'runs'))
            if cell['N'] is None or cell['M'] / cell['N'] ** 2 < self.confined_threshold:
                raise ConfigError(f"Celula confinada exige M/N^2 >= {self.confined_threshold}: {cell}")
            if cell.get('sampler', 'auto') not in ('auto', 'direct', 'renewal'):
                raise ConfigError(f"Amostrador desconhecido: {cell.get('sampler')}")
        for cell in self.critical_cells:
            if cell.get('rho', 0) <= 0 or not cell.get('N') or cell['N'] < 3:
                raise ConfigError(f"Celula critica invalida: {cell}")
        return self


def _check_cell(cell: Dict, keys: Sequence[str]):
    missing = [k for k in keys if k not in cell]
    if missing:
        raise ConfigError(f"Celula sem campos {missing}: {cell}")
    N = cell['N']
    if N is not None and N < 3:
        raise ConfigError(f"N deve ser infinito (null) ou >= 3: {cell}")
    if cell.get('runs', 1) < 1 or cell['M'] < 1:
        raise ConfigError(f"runs e M devem ser >= 1: {cell}")


def load_config(path: Optional[str] = None, overrides: Optional[Dict] = None) -> ExperimentConfig:
    data: Dict = {}
    if path:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Nao foi possivel carregar config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} deve ser um objeto JSON plano")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Chaves desconhecidas em {path}: {sorted(unknown)}")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    if 'tolerances' in data:
        merged = dict(DEFAULT_TOLERANCES)
        merged.update(data['tolerances'])
        data['tolerances'] = merged
    return ExperimentConfig(**data).validate()


# ============================================================
# Relatorio
# ============================================================

@dataclass
class Comparison:
    regime: str
    N: Optional[int]
    M: Optional[int]
    x0: Optional[int]
    y0: Optional[int]
    runs: Optional[int]
    statistic: str
    observed: Optional[float]
    theoretical: Optional[float]
    tolerance: Optional[float]
    passed: Optional[bool]
    seed_root: int
    runtime_ms: int = 0
    oracle: str = ''
    mode: str = 'relative'

    def to_row(self) -> Dict[str, str]:
        return {
            'regime': self.regime,
            'N': 'inf' if self.N is None and self.M is not None else format_number(self.N),
            'M': format_number(self.M),
            'x0': format_number(self.x0),
            'y0': format_number(self.y0),
            'runs': format_number(self.runs),
            'statistic': self.statistic,
            'observed': format_number(self.observed),
            'theoretical': format_number(self.theoretical),
            'tolerance': format_number(self.tolerance),
            'pass': format_number(self.passed),
            'seed_root': format_number(self.seed_root),
            'runtime_ms': format_number(self.runtime_ms),
        }


@dataclass
class RegimeReport:
    regime: str
    seed_root: int
    comparisons: List[Comparison] = field(default_factory=list)
    skipped: List[Dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.comparisons)

    @property
    def failures(self) -> List[Comparison]:
        return [c for c in self.comparisons if c.passed is False]

    def extend(self, other: 'RegimeReport'):
        self.comparisons.extend(other.comparisons)
        self.skipped.extend(other.skipped)

    def to_dict(self) -> Dict:
        return {
            'regime': self.regime,
            'seed_root': self.seed_root,
            'passed': self.passed,
            'comparisons': [asdict(c) for c in self.comparisons],
            'skipped': list(self.skipped),
        }


def report_from_dict(data: Dict) -> RegimeReport:
    def _num(v):
        if isinstance(v, str):
            return float(v)
        return v
    comparisons = []
    for c in data.get('comparisons', []):
        c = dict(c)
        for key in ('observed', 'theoretical', 'tolerance'):
            c[key] = _num(c.get(key))
        comparisons.append(Comparison(**c))
    return RegimeReport(regime=data['regime'], seed_root=data['seed_root'], comparisons=comparisons,
                        skipped=list(data.get('skipped', [])))


def emit_report(report: RegimeReport, format: str = 'csv', path: Optional[str] = None) -> str:
    if format not in ('csv', 'json'):
        raise ConfigError(f"Formato desconhecido: {format}")
    if path is None:
        path = os.path.join(OUTPUT_DIR, f"{report.regime}_report.{format}")
    elif not os.path.dirname(path):
        path = os.path.join(OUTPUT_DIR, path)
    if format == 'csv':
        write_csv_file(path, CSV_COLUMNS, [c.to_row() for c in report.comparisons])
    else:
        write_json_file(path, report.to_dict())
    logger.info(f"Relatorio '{report.regime}' gravado em {path} ({len(report.comparisons)} linhas)")
    return path


# ============================================================
# Estatisticas
# ============================================================

def ks_statistic(samples: Sequence[float], cdf: Callable[[float], float]) -> float:
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = xs.size
    if n == 0:
        raise EmptySampleError("ks_statistic recebeu amostra vazia")
    F = np.array([float(cdf(x)) for x in xs])
    i = np.arange(1, n + 1, dtype=np.float64)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _judge(observed: float, theoretical: float, tolerance: float, mode: str) -> bool:
    if observed is None or (isinstance(observed, float) and math.isnan(observed)):
        return False
    if mode == 'relative':
        return abs(observed - theoretical) <= tolerance * abs(theoretical)
    if mode == 'absolute':
        return abs(observed - theoretical) <= tolerance
    if mode == 'upper':
        return observed <= theoretical + tolerance
    if mode == 'lower':
        return observed >= theoretical - tolerance
    if mode == 'greater':
        return observed > theoretical
    raise ValueError(f"modo de comparacao desconhecido: {mode}")


# ============================================================
# Campanhas
# ============================================================

# sorteios de nivel de modulo: rodam dentro do pool de processos
def _renewal_draw(seed_root: int, theta: float, M: int, support: np.ndarray, probs: np.ndarray,
                  index: int) -> float:
    rng = run_stream(seed_root, index)
    kappa = int(rng.geometric(theta)) - 1
    if kappa == 0:
        return float(M)
    counts = rng.multinomial(kappa, probs)
    return float(M + np.dot(counts, support))


def _geometric_sum_draw(seed_root: int, p: float, support: np.ndarray, probs: np.ndarray, index: int) -> float:
    rng = run_stream(seed_root, 1_000_000 + index)
    K = int(rng.geometric(p))
    counts = rng.multinomial(K, probs)
    return float(np.dot(counts, support))


class ExperimentHarness:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.seed_root = config.seed_root

    def log_message(self, message, level="info"):
        timestamp = datetime.now().strftime("%H:%M:%S")
        log_entry = {'timestamp': timestamp, 'message': message, 'level': level}
        campaign_state['logs'].append(log_entry)
        if len(campaign_state['logs']) > 500:
            campaign_state['logs'] = campaign_state['logs'][-500:]
        if level == 'error':
            campaign_state['error_logs'].append(log_entry)
            if len(campaign_state['error_logs']) > 200:
                campaign_state['error_logs'] = campaign_state['error_logs'][-200:]
        if level == 'warning':
            logger.warning(message)
        elif level == 'error':
            logger.error(message)
        else:
            logger.info(f"{level.upper()}: {message}")

    def _elapsed(self, started: float) -> int:
        if not self.config.record_runtime:
            return 0
        return int(round((time.perf_counter() - started) * 1000))

    def compare(self, report: RegimeReport, statistic: str, observed, theoretical, tolerance,
                oracle: str, mode: str = 'relative', cell: Optional[Dict] = None,
                started: Optional[float] = None, informational: bool = False) -> Comparison:
        cell = cell or {}
        passed = None if informational else _judge(observed, theoretical, tolerance, mode)
        row = Comparison(
            regime=report.regime, N=cell.get('N'), M=cell.get('M'), x0=cell.get('x0'),
            y0=cell.get('y0'), runs=cell.get('runs'), statistic=statistic,
            observed=None if observed is None else float(observed),
            theoretical=None if theoretical is None else float(theoretical),
            tolerance=None if tolerance is None else float(tolerance),
            passed=passed, seed_root=self.seed_root,
            runtime_ms=self._elapsed(started) if started is not None else 0,
            oracle=oracle, mode=mode)
        report.comparisons.append(row)
        if passed is False:
            campaign_state['progress']['failed'] += 1
            self.log_message(f"FALHOU {statistic}: observado={observed}, teorico={theoretical}, "
                             f"tolerancia={tolerance} ({oracle})", "warning")
        elif passed:
            campaign_state['progress']['passed'] += 1
        return row

    # ------------------------------------------------------------
    # Capacidade escassa
    # ------------------------------------------------------------
    def run_meagre(self) -> RegimeReport:
        cfg = self.config
        report = RegimeReport(regime='meagre', seed_root=self.seed_root)
        for cell in cfg.meagre_cells:
            started = time.perf_counter()
            N, M, x0, y0, runs = cell['N'], cell['M'], cell['x0'], cell['y0'], cell['runs']
            params = ModelParams(N=N, M=M)
            start = initial_state(params, x0, y0)
            self.log_message(f"Escassa: N={N}, M={M}, inicio=({x0},{y0}), {runs} execucoes")
            samples = simulate_batch(params, start, runs, self.seed_root, horizon_cap=cfg.horizon_cap)
            ratios = np.array([s.lam / M for s in samples], dtype=np.float64)
            depth = x0 if N is None else min(x0, N - x0)
            a = 0.0 if depth == 1 else depth ** 2 / M
            u = y0 / M

            self.compare(report, 'mean_lambda_over_M', sample_mean(ratios), g_mean(a, u),
                         cfg.tol('meagre_mean'), 'limit_laws.g_mean', cell=cell, started=started)
            self.compare(report, 'stderr_lambda_over_M', standard_error(ratios), None, None, 'utils.standard_error',
                         cell=cell, started=started, informational=True)
            if N is None or N > x0 + M + 1:
                exact_mean = expected_lifetime_exact(N, M, start) / M
                self.compare(report, 'exact_mean_lambda_over_M', exact_mean, g_mean(a, u),
                             cfg.tol('meagre_mean'), 'lifetime_engine.expected_lifetime_exact', cell=cell,
                             started=started)
            if a == 0.0 and y0 == M:
                v = dm_moments(2)
                self.compare(report, 'variance_lambda_over_M_minus_1', sample_variance(ratios - 1.0),
                             float(v[2] - v[1] ** 2), cfg.tol('meagre_variance'), 'limit_laws.dm_moments',
                             cell=cell, started=started)
            elif a >= A_INFINITE_PROXY:
                frac = float(np.mean((ratios >= 0.99 * u) & (ratios <= u)))
                self.compare(report, 'fraction_at_u', frac, 1.0, 1.0 - cfg.tol('meagre_concentration'),
                             'limit_laws.g_mean', mode='lower', cell=cell, started=started)
            else:
                atom = float(np.mean([s.kappa == 0 for s in samples]))
                target = meagre_atom_mass(a, u)
                band = cfg.tol('meagre_atom') + 4 * math.sqrt(max(target * (1 - target), 1e-12) / runs)
                self.compare(report, 'atom_mass_at_u', atom, target, band, 'limit_laws.meagre_atom_mass',
                             mode='absolute', cell=cell, started=started)
            campaign_state['progress']['done'] += 1
        return report

    # ------------------------------------------------------------
    # Espaco confinado
    # ------------------------------------------------------------
    def _renewal_lifetimes(self, N: int, M: int, runs: int) -> np.ndarray:
        """lambda a partir de (1, M): M + soma de kappa excursoes condicionais, kappa ~ Geo(theta) em {0,1,..}."""
        law = excursion_law(N, M)
        theta = law.theta
        cond = law.conditional()
        support = np.flatnonzero(cond)
        probs = cond[support] / np.sum(cond[support])
        draw = partial(_renewal_draw, self.seed_root, theta, M, support, probs)
        return np.array(parallel_map(draw, range(runs)))

    def run_confined(self) -> RegimeReport:
        cfg = self.config
        report = RegimeReport(regime='confined', seed_root=self.seed_root)
        for cell in cfg.confined_cells:
            started = time.perf_counter()
            N, M, runs = cell['N'], cell['M'], cell['runs']
            law = excursion_law(N, M)
            theta = law.theta
            mu, var = law.conditional_mean(), law.conditional_variance()
            sampler = cell.get('sampler', 'auto')
            direct_work = runs * expected_lifetime_exact(N, M, initial_state(ModelParams(N, M), 1, M))
            if sampler == 'auto':
                sampler = 'direct' if theta >= DIRECT_THETA_MIN and direct_work <= cfg.budget else 'renewal'
                if sampler == 'renewal':
                    self.log_message(f"Celula N={N}, M={M}: simulacao direta inviavel, usando renovacao", "warning")
            if sampler == 'direct' and direct_work > cfg.budget:
                raise BudgetExceeded(f"Celula confinada N={N}, M={M}: simulacao direta inviavel",
                                     work=direct_work, budget=cfg.budget)
            if sampler == 'renewal' and float(runs) * len(law.durations.masses) > cfg.budget:
                raise BudgetExceeded(f"Celula confinada N={N}, M={M}: nenhum amostrador cabe no orcamento",
                                     work=float(runs) * len(law.durations.masses), budget=cfg.budget)
            self.log_message(f"Confinada: N={N}, M={M}, theta={theta:.4e}, amostrador={sampler}, {runs} replicas")

            if sampler == 'direct':
                params = ModelParams(N=N, M=M)
                samples = simulate_batch(params, initial_state(params, 1, M), runs, self.seed_root,
                                         horizon_cap=cfg.horizon_cap)
                lifetimes = np.array([s.lam for s in samples], dtype=np.float64)
            else:
                lifetimes = self._renewal_lifetimes(N, M, runs)

            scale = confined_scale(N, M)
            ks = ks_statistic(scale * lifetimes, lambda x: stats.expon.cdf(x))
            row_cell = {'N': N, 'M': M, 'x0': 1, 'y0': M, 'runs': runs}
            # lattice: lambda inteiro, espacamento "scale" na escala reduzida
            self.compare(report, 'ks_exponential', ks, 0.0, cfg.tol('confined_ks') + scale,
                         'scipy.stats.expon.cdf', mode='upper', cell=row_cell, started=started)
            self.compare(report, 'theta_over_confined_scale', extinction_prob(N, M, 1, M) * N / 4.0
                         / math.exp(M * math.log(math.cos(math.pi / N))), 1.0, 0.02,
                         'lifetime_engine.extinction_prob', cell=row_cell, started=started)
            self.compare(report, 'conditional_mean_excursion', mu, float(N), cfg.tol('critical_mean'),
                         'excursion_analytics.exit_moments', cell=row_cell, started=started)
            self.compare(report, 'conditional_variance_excursion', var, exit_moments(N, 1)[1],
                         cfg.tol('critical_mean'), 'excursion_analytics.exit_moments', cell=row_cell,
                         started=started)
            self.compare(report, 'condition_quantity', var * theta / mu ** 2, 0.0,
                         cfg.tol('condition_quantity'), 'lifetime_engine.excursion_law', mode='upper',
                         cell=row_cell, started=started)
            campaign_state['progress']['done'] += 1

        if cfg.synthetic:
            report.extend(self.run_synthetic_exponential())
        return report

    def run_synthetic_exponential(self) -> RegimeReport:
        """Soma geometrica de excursoes exatas: p Z / mu contra Exp(1)."""
        cfg = self.config
        syn = cfg.synthetic
        report = RegimeReport(regime='confined', seed_root=self.seed_root)
        started = time.perf_counter()
        N, M, p, runs = syn['N'], syn['M'], syn['p'], syn['runs']
        law = excursion_law(N, M)
        cond = law.conditional()
        support = np.flatnonzero(cond)
        probs = cond[support] / np.sum(cond[support])
        mu = float(np.dot(probs, support))
        var = float(np.dot(probs, support.astype(np.float64) ** 2)) - mu * mu
        Z = np.array(parallel_map(partial(_geometric_sum_draw, self.seed_root, p, support, probs), range(runs)))
        ks = ks_statistic(p * Z / mu, lambda x: stats.expon.cdf(x))
        cell = {'N': N, 'M': M, 'runs': runs}
        self.compare(report, 'synthetic_ks_exponential', ks, 0.0, cfg.tol('synthetic_ks') + p / mu,
                     'scipy.stats.expon.cdf', mode='upper', cell=cell, started=started)
        self.compare(report, 'synthetic_condition_quantity', var * p / mu ** 2, 0.0,
                     cfg.tol('condition_quantity'), 'lifetime_engine.excursion_law', mode='upper',
                     cell=cell, started=started)
        return report

    # ------------------------------------------------------------
    # Caso critico
    # ------------------------------------------------------------
    def run_critical(self) -> RegimeReport:
        cfg = self.config
        report = RegimeReport(regime='critical', seed_root=self.seed_root)
        for cell in cfg.critical_cells:
            started = time.perf_counter()
            rho, N = cell['rho'], cell['N']
            M = max(1, int(round(rho * N * N)))
            row_cell = {'N': N, 'M': M, 'x0': 1, 'y0': M}
            start = initial_state(ModelParams(N, M), 1, M)
            mu = critical_mu(rho)
            self.log_message(f"Critico: rho={rho}, N={N}, M={M}, mu={mu:.6g}")
            self.compare(report, 'exact_mean_lambda_over_M', expected_lifetime_exact(N, M, start) / M, 1.0 + mu,
                         cfg.tol('critical_mean'), 'limit_laws.critical_mu', cell=row_cell, started=started)
            s_rho = critical_s_rho(rho)
            for s in list(cfg.critical_mgf_points) + [0.5 * s_rho]:
                observed = compound_mgf(N, M, s / M) * math.exp(s * (M + 1) / M)
                self.compare(report, f'mgf_at_s={s:.6g}', observed, math.exp(s) * critical_mgf(rho, s),
                             cfg.tol('critical_mgf'), 'limit_laws.critical_mgf', cell=row_cell, started=started)
            campaign_state['progress']['done'] += 1

        rhos = sorted(cfg.critical_rho_sweep)
        if len(rhos) >= 2:
            mus = [critical_mu(r) for r in rhos]
            ratio = min(b / a for a, b in zip(mus, mus[1:]))
            self.compare(report, 'mu_monotone_min_ratio', ratio, 1.0, 0.0, 'limit_laws.critical_mu',
                         mode='greater')

        mc = cfg.critical_mc
        if mc:
            started = time.perf_counter()
            rho, N, runs = mc['rho'], mc['N'], mc['runs']
            M = max(1, int(round(rho * N * N)))
            params = ModelParams(N, M)
            start = initial_state(params, 1, M)
            samples = simulate_batch(params, start, runs, self.seed_root, horizon_cap=cfg.horizon_cap)
            ratios = np.array([s.lam / M for s in samples], dtype=np.float64)
            exact_mean, exact_var = lifetime_moments_exact(N, M, start)
            theory = exact_mean / M
            band = max(cfg.tol('critical_mc_mean'), 4 * math.sqrt(exact_var) / M / math.sqrt(runs) / theory)
            mc_cell = {'N': N, 'M': M, 'x0': 1, 'y0': M, 'runs': runs}
            mean, var = sample_mean(ratios), sample_variance(ratios)
            self.compare(report, 'mc_mean_lambda_over_M', mean, theory, band,
                         'lifetime_engine.lifetime_moments_exact', cell=mc_cell, started=started)

            # contra a lei limite phi_rho: lambda/M -> 1 + Z, E Z = mu, Var Z = G''(0) + mu^2
            limit_mean, limit_var = 1.0 + critical_mu(rho), critical_variance(rho)
            self.compare(report, 'mc_mean_vs_limit_law', mean, limit_mean,
                         cfg.tol('critical_mc_limit_mean') + 4 * standard_error(ratios) / limit_mean,
                         'limit_laws.critical_mu', cell=mc_cell, started=started)
            fourth = float(np.mean((ratios - mean) ** 4))
            se_var = math.sqrt(max(fourth - var * var, 0.0) / runs)
            self.compare(report, 'mc_variance_vs_limit_law', var, limit_var,
                         cfg.tol('critical_mc_limit_variance') + 4 * se_var / limit_var,
                         'limit_laws.critical_variance', cell=mc_cell, started=started)
        return report

    # ------------------------------------------------------------
    # Diagrama de fases
    # ------------------------------------------------------------
    def sweep_phase_diagram(self) -> RegimeReport:
        cfg = self.config
        report = RegimeReport(regime='sweep', seed_root=self.seed_root)
        for N in cfg.sweep_N:
            for r in cfg.sweep_ratios:
                started = time.perf_counter()
                M = max(1, int(round(r * N * N)))
                cell = {'N': N, 'M': M, 'x0': 1, 'y0': M}
                work = float(N) * M
                if work > cfg.budget:
                    campaign_state['progress']['skipped'] += 1
                    report.skipped.append({'N': N, 'M': M, 'reason': 'budget', 'work': work})
                    self.log_message(f"Celula N={N}, M={M} pulada: trabalho {work:.3g} acima do orcamento",
                                     "warning")
                    continue
                ratio = M / N ** 2
                theta = excursion_law(N, M).theta
                mean = expected_lifetime_exact(N, M, initial_state(ModelParams(N, M), 1, M)) / M
                self.compare(report, 'curve_mean_lambda_over_M', mean, 1.0 + critical_mu(ratio), None,
                             'limit_laws.critical_mu', cell=cell, started=started, informational=True)
                self.compare(report, 'curve_theta', theta, 4.0 / N * theta_H(ratio), None,
                             'limit_laws.theta_H', cell=cell, started=started, informational=True)
                if ratio <= 0.01:
                    low, high = cfg.tol('sweep_meagre_low'), cfg.tol('sweep_meagre_high')
                    self.compare(report, 'meagre_mean_lambda_over_M', mean, 0.5 * (low + high), 0.5 * (high - low),
                                 'limit_laws.g_mean', mode='absolute', cell=cell, started=started)
                    self.compare(report, 'theta_sqrtM_sqrt_pi_over_2', theta * math.sqrt(M * math.pi / 2), 1.0,
                                 cfg.tol('meagre_mean'), 'excursion_analytics.one_sided_tail', cell=cell,
                                 started=started)
                if abs(ratio - 1.0) < 1e-9:
                    self.compare(report, 'critical_mean_lambda_over_M', mean, 1.0 + critical_mu(1.0),
                                 cfg.tol('sweep_critical'), 'limit_laws.critical_mu', cell=cell, started=started)
                campaign_state['progress']['done'] += 1
        return report

    # ------------------------------------------------------------
    # Verificacoes exatas
    # ------------------------------------------------------------
    def run_exact_checks(self) -> RegimeReport:
        report = RegimeReport(regime='validate', seed_root=self.seed_root)
        exact = self.config.tol('exact')

        started = time.perf_counter()
        worst = 0.0
        for N in (3, 4, 5):
            for M in range(1, 5):
                params = ModelParams(N, M)
                for x in range(N + 1):
                    for e in range(M + 1):
                        start = initial_state(params, x, e)
                        brute = brute_force_pmf(N, M, start, 40)
                        dp = lifetime_pmf_dp(N, M, start, horizon=40)
                        worst = max(worst, brute.total_variation(dp))
        self.compare(report, 'max_tv_bruteforce_vs_dp', worst, 0.0, 1e-12,
                     'lifetime_engine.brute_force_pmf', mode='upper', started=started)

        started = time.perf_counter()
        worst = 0.0
        for N in range(3, 51):
            table = exit_pmf_dp(N, 1, 500)
            cos = np.array([exit_pmf_cosine(N, n) for n in range(1, 501)])
            worst = max(worst, float(np.max(np.abs(cos - table.pmf[1:]))))
        self.compare(report, 'max_abs_cosine_vs_dp', worst, 0.0, 1e-12,
                     'excursion_analytics.exit_pmf_dp', mode='upper', started=started)

        started = time.perf_counter()
        worst = 0.0
        for N in (5, 10, 20, 30):
            n_max = int(math.ceil(7.5 * N * N)) + 10
            for x in range(1, N):
                table = exit_pmf_dp(N, x, n_max)
                mean, var = exit_moments(N, x)
                worst = max(worst, abs(table.mean() / mean - 1), abs(table.variance() / var - 1) if var else 0.0)
        self.compare(report, 'max_rel_moment_error', worst, 0.0, 1e-8, 'excursion_analytics.exit_moments',
                     mode='upper', started=started)

        started = time.perf_counter()
        ns = np.unique(np.geomspace(1e3, 1e5, 400).astype(int))
        sup = max(abs(math.sqrt(n) * one_sided_tail(int(n)) - math.sqrt(2 / math.pi)) for n in ns)
        self.compare(report, 'sup_sqrt_n_tail_error', sup, 0.0, 0.02, 'excursion_analytics.one_sided_tail',
                     mode='upper', started=started)

        started = time.perf_counter()
        misses = 0
        for N in (20, 50, 100):
            for k0 in (1, 2, 3):
                for y in (0.5, 1, 2, 5, 20):
                    if not tail_expansion(N, k0, int(y * N * N)).contained:
                        misses += 1
        self.compare(report, 'tail_bracket_misses', misses, 0.0, 0.0, 'excursion_analytics.tail_expansion',
                     mode='upper', started=started)

        self.compare(report, 't0', find_t0(), 0.8540326566, 1e-8, 'limit_laws.find_t0', mode='absolute')
        grid = np.linspace(-10, 2, 49)
        worst = max(abs(math.exp(t) - script_I(t) - kummer_K(t)) for t in grid)
        self.compare(report, 'kummer_identity_error', worst, 0.0, exact, 'limit_laws.script_I', mode='upper')
        printed = ['1', '7/3', '41/5', '4033/105', '14167/63', '1824719/1155']
        matches = sum(str(m) == p for m, p in zip(dm_moments(6)[1:], printed))
        self.compare(report, 'dm_moment_table_matches', matches, 6.0, 0.0, 'limit_laws.dm_moments',
                     mode='absolute')

        y = 1e-4
        self.compare(report, 'theta_small_y', 2 * theta_H(y) * math.sqrt(2 * math.pi * y), 1.0, 0.01,
                     'limit_laws.theta_H')
        self.compare(report, 'theta_large_y', theta_H(3.0) / math.exp(-3 * math.pi ** 2 / 2), 1.0, 1e-6,
                     'limit_laws.theta_H')
        self.compare(report, 'theta_integral', theta_H_integral(10.0) + theta_H_remainder(10.0), 0.25, 1e-6,
                     'limit_laws.theta_H_integral', mode='absolute')

        M = 10_000
        self.compare(report, 'meagre_extinction_scaled',
                     math.sqrt(M) * math.sqrt(math.pi / 2) * extinction_prob(None, M, 1, M), 1.0, 0.02,
                     'lifetime_engine.extinction_prob', cell={'N': None, 'M': M, 'x0': 1, 'y0': M})
        N, M = 20, 4000
        self.compare(report, 'confined_extinction_scaled',
                     extinction_prob(N, M, 1, M) * N / (4 * math.cos(math.pi / N) ** M), 1.0, 0.02,
                     'lifetime_engine.extinction_prob', cell={'N': N, 'M': M, 'x0': 1, 'y0': M})

        h = 1e-4
        for rho in (0.5, 1.0):
            fd = (critical_G(rho, h) - critical_G(rho, -h)) / (2 * h)
            self.compare(report, f'G_prime_at_0_rho={rho:g}', fd, critical_mu(rho), 1e-6,
                         'limit_laws.critical_mu', mode='absolute')
        self.compare(report, 'levy_representation_G', levy_G(1.0, 0.5), critical_G(1.0, 0.5), 1e-6,
                     'limit_laws.levy_density_m', mode='absolute')

        report.extend(self.run_renewal_structure())
        return report

    def run_renewal_structure(self, N: int = 4, M: int = 3) -> RegimeReport:
        """P(kappa >= k) simulado contra (1 - theta_z)(1 - theta)^{k-1}."""
        runs = self.config.renewal_runs
        report = RegimeReport(regime='validate', seed_root=self.seed_root)
        started = time.perf_counter()
        params = ModelParams(N, M)
        start = initial_state(params, 1, M)
        samples = simulate_batch(params, start, runs, self.seed_root, horizon_cap=self.config.horizon_cap)
        kappas = np.array([s.kappa for s in samples])
        theta_z = extinction_prob(N, M, 1, M)
        theta = excursion_law(N, M).theta
        cell = {'N': N, 'M': M, 'x0': 1, 'y0': M, 'runs': runs}
        for k in range(1, 11):
            target = (1 - theta_z) * (1 - theta) ** (k - 1)
            observed = float(np.mean(kappas >= k))
            band = 4 * math.sqrt(target * (1 - target) / runs) + 1e-12
            self.compare(report, f'P_kappa_ge_{k}', observed, target, band, 'lifetime_engine.extinction_prob',
                         mode='absolute', cell=cell, started=started)
        return report

    def run(self) -> RegimeReport:
        regime = self.config.regime
        reset_campaign_state(regime, 0)
        started = time.perf_counter()
        self.log_message(f"Campanha '{regime}' iniciada (seed_root={self.seed_root}, processos={get_threads()})")
        try:
            if regime == 'meagre':
                report = self.run_meagre()
            elif regime == 'confined':
                report = self.run_confined()
            elif regime == 'critical':
                report = self.run_critical()
            elif regime == 'sweep':
                report = self.sweep_phase_diagram()
            else:
                report = self.run_exact_checks()
                for part in (self.run_meagre(), self.run_confined(), self.run_critical()):
                    report.extend(part)
                report.regime = 'validate'
        finally:
            campaign_state['running'] = False
        self.log_message("=== RESULTADO ===")
        self.log_message(f"{len(report.comparisons)} comparacoes, {len(report.failures)} falha(s), "
                         f"{len(report.skipped)} celula(s) pulada(s) em {time.perf_counter() - started:.1f}s")
        return report


def run_meagre(config: ExperimentConfig) -> RegimeReport:
    return ExperimentHarness(config).run_meagre()


def run_confined(config: ExperimentConfig) -> RegimeReport:
    return ExperimentHarness(config).run_confined()


def run_critical(config: ExperimentConfig) -> RegimeReport:
    return ExperimentHarness(config).run_critical()


def sweep_phase_diagram(config: ExperimentConfig) -> RegimeReport:
    return ExperimentHarness(config).sweep_phase_diagram()


def load_report(path: str) -> RegimeReport:
    return report_from_dict(read_json_file(path))
