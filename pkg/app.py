"""
CLI do laboratorio de tempo de vida do passeio com energia.

    python app.py [--seed S] [--threads T] [--budget B] [--out ARQ] [--format csv|json]
                  [--config ARQ.json] [--timing] <subcomando> [opcoes]

Subcomandos: simulate, excursion, exact-lifetime, limits, validate, sweep, report.
Codigos de saida: 0 tudo passou, 1 alguma comparacao falhou, 2 erro de
configuracao, 3 orcamento/horizonte excedido.
"""
import argparse
import math
import sys
import time
from typing import List, Optional

from config import logger
from excursion_analytics import (exit_moments, exit_pmf_cosine, exit_pmf_dp, exit_tail_cosine, one_sided_pmf,
                                 one_sided_tail_from)
from extensions import init_extensions, run_stream, shutdown_extensions
from harness import ExperimentConfig, ExperimentHarness, RegimeReport, emit_report, load_config, load_report
from lifetime_engine import (brute_force_pmf, excursion_law, expected_lifetime_exact, extinction_prob,
                             lifetime_moments_exact, lifetime_pmf_dp, renewal_pmf, survival_certificate)
from limit_laws import (critical_mu, critical_s_rho, dm_moments, find_t0, g_mean, meagre_atom_mass, theta_H,
                        theta_H_integral_closed)
from utils import (BudgetExceeded, ConfigError, DomainError, HorizonExceeded, ModelError, ReportIOError,
                   sample_mean, sample_variance)
from walk_model import ModelParams, initial_state, make_coin, simulate_batch, walk_path

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def parse_n(value: str) -> Optional[int]:
    if value.lower() in ('inf', 'infinity', 'none'):
        return None
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"N deve ser inteiro ou 'inf' (recebido {value})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Tempo de vida de um passeio aleatorio com energia recarregada na fronteira.")
    parser.add_argument("--seed", type=int, default=None, dest="seed_root", help="seed_root das execucoes.")
    parser.add_argument("--threads", type=int, default=None, help="Numero de processos do pool.")
    parser.add_argument("--budget", type=float, default=None, help="Orcamento de trabalho (atualizacoes de celula).")
    parser.add_argument("--out", type=str, default=None, help="Arquivo de saida do relatorio.")
    parser.add_argument("--format", choices=["csv", "json"], default=None, help="Formato do relatorio.")
    parser.add_argument("--config", type=str, default=None, help="Arquivo JSON com ExperimentConfig.")
    parser.add_argument("--timing", action="store_true", help="Registra runtime_ms real nas linhas.")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo do tempo de vida lambda.")
    p.add_argument("--N", type=parse_n, default=None, help="Largura do intervalo ou 'inf'.")
    p.add_argument("--M", type=int, required=True, help="Capacidade de energia.")
    p.add_argument("--x0", type=int, default=1)
    p.add_argument("--y0", type=int, default=None, help="Energia inicial (padrao: M).")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--trace", action="store_true", help="Imprime uma trajetoria passo a passo.")

    p = sub.add_parser("excursion", help="Lei exata do tempo de saida tau_{0,N}.")
    p.add_argument("--N", type=parse_n, default=None)
    p.add_argument("--x", type=int, default=1)
    p.add_argument("--n", type=int, nargs="+", required=True, help="Tempos onde avaliar pmf e cauda.")

    p = sub.add_parser("exact-lifetime", help="Lei exata de lambda.")
    p.add_argument("--N", type=parse_n, default=None)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--x0", type=int, default=1)
    p.add_argument("--y0", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--method", choices=["dp", "renewal", "brute"], default="dp")

    p = sub.add_parser("limits", help="Avalia as leis limite.")
    p.add_argument("--rho", type=float, nargs="*", default=[0.25, 1.0, 4.0])
    p.add_argument("--a", type=float, nargs="*", default=[0.0, 1.0])

    p = sub.add_parser("validate", help="Campanhas de reproducao.")
    p.add_argument("--regime", choices=["validate", "meagre", "critical", "confined"], default="validate")

    sub.add_parser("sweep", help="Varredura do diagrama de fases.")

    p = sub.add_parser("report", help="Reemite um relatorio JSON existente.")
    p.add_argument("--input", type=str, required=True)
    return parser


def config_from_args(args, regime: str = 'validate') -> ExperimentConfig:
    overrides = {
        'regime': regime,
        'seed_root': args.seed_root,
        'threads': args.threads,
        'budget': int(args.budget) if args.budget is not None else None,
        'out': args.out,
        'format': args.format,
        'record_runtime': True if args.timing else None,
    }
    return load_config(args.config, overrides)


# ============================================================
# Subcomandos
# ============================================================

def cmd_simulate(args, cfg: ExperimentConfig, harness: ExperimentHarness) -> RegimeReport:
    started = time.perf_counter()
    params = ModelParams(N=args.N, M=args.M)
    y0 = args.M if args.y0 is None else args.y0
    start = initial_state(params, args.x0, y0)
    cell = {'N': args.N, 'M': args.M, 'x0': args.x0, 'y0': y0, 'runs': args.runs}
    report = RegimeReport(regime='simulate', seed_root=cfg.seed_root)

    if args.trace:
        path = walk_path(params, start, make_coin(run_stream(cfg.seed_root, 0)))
        for t, state in enumerate(path):
            mark = "\tabsorvido" if state.absorbed else ""
            print(f"{t}\t{state.x}\t{state.e}{mark}")

    samples = simulate_batch(params, start, args.runs, cfg.seed_root, horizon_cap=cfg.horizon_cap)
    lam = [s.lam for s in samples]
    mean, var = lifetime_moments_exact(args.N, args.M, start)
    band = 4 * math.sqrt(var / args.runs) + 1e-9
    harness.compare(report, 'mean_lambda', sample_mean(lam), mean, band,
                    'lifetime_engine.lifetime_moments_exact', mode='absolute', cell=cell, started=started)
    if args.runs >= 2:
        harness.compare(report, 'variance_lambda', sample_variance(lam), var, None,
                        'lifetime_engine.lifetime_moments_exact', cell=cell, started=started, informational=True)
    harness.compare(report, 'mean_kappa', sample_mean([s.kappa for s in samples]), None, None,
                    'walk_model.simulate_batch', cell=cell, started=started, informational=True)
    return report


def cmd_excursion(args, cfg: ExperimentConfig, harness: ExperimentHarness) -> RegimeReport:
    started = time.perf_counter()
    N, x = args.N, args.x
    report = RegimeReport(regime='excursion', seed_root=cfg.seed_root)
    table = exit_pmf_dp(N, x, max(args.n), budget=cfg.budget)
    cell = {'N': N, 'x0': x}
    exact = cfg.tol('exact')
    for n in args.n:
        if N is not None and x == 1:
            harness.compare(report, f'pmf_n={n}', float(table.pmf[n]), exit_pmf_cosine(N, n), exact,
                            'excursion_analytics.exit_pmf_cosine', mode='absolute', cell=cell, started=started)
            harness.compare(report, f'tail_n={n}', table.tail(n), exit_tail_cosine(N, n), exact,
                            'excursion_analytics.exit_tail_cosine', mode='absolute', cell=cell, started=started)
        elif N is None or N > x + n:
            theory = one_sided_pmf(n) if x == 1 else None
            harness.compare(report, f'pmf_n={n}', float(table.pmf[n]), theory, exact if theory is not None else None,
                            'excursion_analytics.one_sided_pmf', mode='absolute', cell=cell, started=started,
                            informational=theory is None)
            harness.compare(report, f'tail_n={n}', table.tail(n), one_sided_tail_from(x, n), exact,
                            'excursion_analytics.one_sided_tail_from', mode='absolute', cell=cell, started=started)
        else:
            harness.compare(report, f'pmf_n={n}', float(table.pmf[n]), None, None, 'excursion_analytics.exit_pmf_dp',
                            cell=cell, started=started, informational=True)
            harness.compare(report, f'tail_n={n}', table.tail(n), None, None, 'excursion_analytics.exit_pmf_dp',
                            cell=cell, started=started, informational=True)
    if N is not None:
        mean, var = exit_moments(N, x)
        harness.compare(report, 'exit_mean', mean, None, None, 'excursion_analytics.exit_moments', cell=cell,
                        started=started, informational=True)
        harness.compare(report, 'exit_variance', var, None, None, 'excursion_analytics.exit_moments', cell=cell,
                        started=started, informational=True)
    return report


def cmd_exact_lifetime(args, cfg: ExperimentConfig, harness: ExperimentHarness) -> RegimeReport:
    started = time.perf_counter()
    N, M = args.N, args.M
    y0 = M if args.y0 is None else args.y0
    start = initial_state(ModelParams(N=N, M=M), args.x0, y0)
    cell = {'N': N, 'M': M, 'x0': args.x0, 'y0': y0}
    report = RegimeReport(regime='exact-lifetime', seed_root=cfg.seed_root)

    if args.method == 'brute':
        law = brute_force_pmf(N, M, start, args.horizon or 40)
    elif args.method == 'renewal':
        horizon = args.horizon or int(10 * expected_lifetime_exact(N, M, start)) + M + 2
        law = renewal_pmf(N, M, start, horizon, budget=cfg.budget)
    else:
        law = lifetime_pmf_dp(N, M, start, horizon=args.horizon, budget=cfg.budget)

    mean, var = lifetime_moments_exact(N, M, start)
    complete = law.residual < 1e-12
    harness.compare(report, 'mean_lambda', law.mean(), mean, 1e-8 if complete else None,
                    'lifetime_engine.expected_lifetime_exact', cell=cell, started=started,
                    informational=not complete)
    harness.compare(report, 'variance_lambda', law.variance(), var, 1e-6 if complete else None,
                    'lifetime_engine.lifetime_moments_exact', cell=cell, started=started,
                    informational=not complete)
    if args.method == 'dp':
        harness.compare(report, 'residual', law.residual, survival_certificate(M, law.horizon), 1e-12,
                        'lifetime_engine.survival_certificate', mode='upper', cell=cell, started=started)
    if start.e >= 1 and ModelParams(N=N, M=M).is_interior(args.x0):
        harness.compare(report, 'P_lambda_eq_y0', float(law.pmf[y0]) if y0 <= law.horizon else 0.0,
                        extinction_prob(N, M, args.x0, y0), 1e-10, 'lifetime_engine.extinction_prob',
                        mode='absolute', cell=cell, started=started)
    harness.compare(report, 'theta', excursion_law(N, M).theta, None, None, 'lifetime_engine.excursion_law',
                    cell=cell, started=started, informational=True)
    return report


def cmd_limits(args, cfg: ExperimentConfig, harness: ExperimentHarness) -> RegimeReport:
    report = RegimeReport(regime='limits', seed_root=cfg.seed_root)
    harness.compare(report, 't0', find_t0(), None, None, 'limit_laws.find_t0', informational=True)
    v = dm_moments(2)
    harness.compare(report, 'dm_mean', float(v[1]), None, None, 'limit_laws.dm_moments', informational=True)
    harness.compare(report, 'dm_variance', float(v[2] - v[1] ** 2), None, None, 'limit_laws.dm_moments',
                    informational=True)
    for a in args.a:
        harness.compare(report, f'g_mean_a={a:g}', g_mean(a, 1.0), None, None, 'limit_laws.g_mean',
                        informational=True)
        if a > 0:
            harness.compare(report, f'atom_mass_a={a:g}', meagre_atom_mass(a, 1.0), None, None,
                            'limit_laws.meagre_atom_mass', informational=True)
    for rho in args.rho:
        harness.compare(report, f'mu_rho={rho:g}', critical_mu(rho), None, None, 'limit_laws.critical_mu',
                        informational=True)
        harness.compare(report, f's_rho={rho:g}', critical_s_rho(rho), None, None, 'limit_laws.critical_s_rho',
                        informational=True)
        harness.compare(report, f'H_rho={rho:g}', theta_H(rho), None, None, 'limit_laws.theta_H',
                        informational=True)
        harness.compare(report, f'int_H_rho={rho:g}', theta_H_integral_closed(rho), None, None,
                        'limit_laws.theta_H_integral_closed', informational=True)
    return report


# ============================================================
# Main
# ============================================================

def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == 'report':
            cfg = config_from_args(args)
            report = load_report(args.input)
            path = emit_report(report, cfg.format, cfg.out)
            print(path)
            return EXIT_OK if report.passed else EXIT_FAILED

        regime = args.regime if args.command == 'validate' else ('sweep' if args.command == 'sweep' else 'validate')
        cfg = config_from_args(args, regime)
        init_extensions(cfg.threads)
        harness = ExperimentHarness(cfg)

        if args.command == 'simulate':
            report = cmd_simulate(args, cfg, harness)
        elif args.command == 'excursion':
            report = cmd_excursion(args, cfg, harness)
        elif args.command == 'exact-lifetime':
            report = cmd_exact_lifetime(args, cfg, harness)
        elif args.command == 'limits':
            report = cmd_limits(args, cfg, harness)
        else:
            report = harness.run()

        path = emit_report(report, cfg.format, cfg.out)
        print(path)
        if not report.passed:
            logger.error(f"{len(report.failures)} comparacao(oes) falharam")
            return EXIT_FAILED
        return EXIT_OK
    except (ConfigError, ModelError, DomainError) as e:
        logger.error(f"Erro de configuracao: {e}")
        return EXIT_CONFIG
    except (BudgetExceeded, HorizonExceeded) as e:
        logger.error(f"Orcamento excedido: {e}")
        return EXIT_BUDGET
    except ReportIOError as e:
        logger.error(f"Erro de escrita em {e.path}: {e}")
        return EXIT_CONFIG
    finally:
        shutdown_extensions()


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
