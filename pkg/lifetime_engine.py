"""
Lei exata do tempo de vida lambda: programacao dinamica da cadeia completa,
decomposicao em renovacao (kappa geometrico + excursoes i.i.d.), probabilidades
de extincao, momentos exatos e oraculo racional por enumeracao.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from config import WORK_BUDGET, logger
from excursion_analytics import (exit_pmf_dp, exit_tail_cosine, exit_tail_dp, one_sided_tail,
                                 one_sided_tail_from)
from utils import BudgetExceeded, DomainError, ModelError, check_budget
from walk_model import ModelParams, WalkerState, effective_params

DP_TOLERANCE = 1e-14

# Envelope do oraculo por enumeracao
BRUTE_MAX_N = 6
BRUTE_MAX_M = 6
BRUTE_MAX_HORIZON = 40


@dataclass(frozen=True)
class DefectivePmf:
    masses: np.ndarray  # masses[n] = massa no valor n
    defect: float

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    def moment(self, k: int) -> float:
        n = np.arange(len(self.masses), dtype=np.float64)
        return float(np.sum(n ** k * self.masses))


@dataclass(frozen=True)
class ExcursionLaw:
    durations: DefectivePmf

    @property
    def theta(self) -> float:
        return self.durations.defect

    def conditional(self) -> np.ndarray:
        return self.durations.masses / (1.0 - self.theta)

    def conditional_mean(self) -> float:
        return self.durations.moment(1) / (1.0 - self.theta)

    def conditional_variance(self) -> float:
        m1 = self.conditional_mean()
        return self.durations.moment(2) / (1.0 - self.theta) - m1 * m1

    @property
    def support_max(self) -> int:
        nz = np.flatnonzero(self.durations.masses)
        return int(nz[-1]) if nz.size else 0


@dataclass(frozen=True)
class LifetimeLaw:
    pmf: np.ndarray
    residual: float
    provenance: str
    exact_mean: Optional[float] = None
    exact_pmf: Optional[Tuple[Fraction, ...]] = field(default=None, repr=False)

    @property
    def horizon(self) -> int:
        return len(self.pmf) - 1

    def mean(self) -> float:
        n = np.arange(len(self.pmf), dtype=np.float64)
        return float(np.sum(n * self.pmf))

    def variance(self) -> float:
        n = np.arange(len(self.pmf), dtype=np.float64)
        m1 = np.sum(n * self.pmf)
        return float(np.sum(n * n * self.pmf) - m1 * m1)

    def total_variation(self, other: 'LifetimeLaw') -> float:
        size = max(len(self.pmf), len(other.pmf))
        p = np.zeros(size)
        q = np.zeros(size)
        p[:len(self.pmf)] = self.pmf
        q[:len(other.pmf)] = other.pmf
        return 0.5 * (float(np.sum(np.abs(p - q))) + abs(self.residual - other.residual))


def survival_certificate(M: int, n: int) -> float:
    """Cota geometrica para P(lambda > n): cada bloco de M+1 passos mata com prob. >= 2^{-M}."""
    blocks = n // (M + 1)
    return math.exp(blocks * math.log1p(-2.0 ** (-M)))


def _check_params(N: Optional[int], M: int) -> ModelParams:
    params = ModelParams(N=N, M=M)
    if N is not None and N < 3:
        raise ModelError(f"N deve ser >= 3 (recebido {N})")
    return params


def _check_start(params: ModelParams, start: WalkerState):
    start.validate(params)


def extinction_prob(N: Optional[int], M: int, x: int, y: int) -> float:
    params = _check_params(N, M)
    if not params.is_interior(x):
        raise ModelError(f"x deve ser interior (recebido {x})")
    if y < 1 or y > M:
        raise ModelError(f"y fora de [1, M]: y={y}, M={M}")
    # fronteira N inalcancavel em y passos: cauda de um lado
    if N is None or N > x + y:
        return one_sided_tail(y) if x == 1 else one_sided_tail_from(x, y)
    if x == 1:
        return exit_tail_cosine(N, y)
    return exit_tail_dp(N, x, y)


def excursion_law(N: Optional[int], M: int) -> ExcursionLaw:
    _check_params(N, M)
    table = exit_pmf_dp(N, 1, M)
    masses = np.zeros(M + 2)
    masses[2:M + 2] = table.pmf[1:M + 1]
    return ExcursionLaw(durations=DefectivePmf(masses=masses, defect=table.tail_remainder))


def first_excursion_law(N: Optional[int], M: int, x: int, y: int) -> ExcursionLaw:
    """Lei de nu_1 a partir de (x, y) interior; defeito = theta_z."""
    params = _check_params(N, M)
    if not params.is_interior(x):
        raise ModelError(f"x deve ser interior (recebido {x})")
    if y == 0:
        return ExcursionLaw(durations=DefectivePmf(masses=np.zeros(1), defect=1.0))
    table = exit_pmf_dp(N, x, y)
    masses = np.array(table.pmf, copy=True)
    masses[0] = 0.0
    return ExcursionLaw(durations=DefectivePmf(masses=masses, defect=table.tail_remainder))


# ============================================================
# Programacao dinamica da cadeia completa
# ============================================================

def lifetime_pmf_dp(N: Optional[int], M: int, start: WalkerState, horizon: Optional[int] = None,
                    tol: float = DP_TOLERANCE, budget: int = WORK_BUDGET) -> LifetimeLaw:
    params = _check_params(N, M)
    _check_start(params, start)
    eff = effective_params(params, start.x)
    L = eff.N
    cells = (L + 1) * (M + 1)
    if horizon is not None:
        check_budget(float(cells) * horizon, budget, f"lifetime_pmf_dp(N={N}, M={M}, horizon={horizon})")
        max_steps = horizon
    else:
        max_steps = max(1, budget // cells)

    P = np.zeros((L + 1, M + 1))
    P[start.x, start.e] = 1.0
    new = np.empty_like(P)
    pmf = [0.0]
    if eff.is_interior(start.x) and start.e == 0:
        pmf[0] = 1.0
        P[start.x, 0] = 0.0
    residual = float(P.sum())

    n = 0
    while n < max_steps and (horizon is not None or residual >= tol):
        n += 1
        new.fill(0.0)
        inner = 0.5 * P[1:L, 1:]
        new[0:L - 1, 0:M] += inner
        new[2:L + 1, 0:M] += inner
        new[1, M] += P[0].sum()
        new[L - 1, M] += P[L].sum()
        dead = float(new[1:L, 0].sum())
        new[1:L, 0] = 0.0
        pmf.append(dead)
        P, new = new, P
        residual = float(P.sum())

    if horizon is None and residual >= tol:
        raise BudgetExceeded(f"lifetime_pmf_dp(N={N}, M={M}): residuo {residual:.3e} apos {n} passos",
                             work=float(cells) * n, budget=budget)
    certificate = survival_certificate(M, n)
    if residual > certificate + 1e-12:
        logger.warning(f"Residuo {residual:.3e} acima do certificado {certificate:.3e} (N={N}, M={M})")
    return LifetimeLaw(pmf=np.array(pmf), residual=residual, provenance='dp')


# ============================================================
# Renovacao: kappa geometrico + excursoes i.i.d.
# ============================================================

def _renewal_sequence(law: ExcursionLaw, length: int) -> np.ndarray:
    """U[n] = soma_k D^{*k}[n], pela equacao de renovacao (convolucao direta)."""
    D = law.durations.masses
    top = len(D) - 1
    U = np.zeros(length + 1)
    U[0] = 1.0
    for n in range(1, length + 1):
        k = min(n, top)
        if k >= 1:
            U[n] = np.dot(D[1:k + 1], U[n - 1::-1][:k])
    return U


def sigma_kappa_pmf(N: Optional[int], M: int, length: int) -> np.ndarray:
    """Lei de sigma_kappa para a cadeia que entra pela fronteira."""
    law = excursion_law(N, M)
    return law.theta * _renewal_sequence(law, length)


def renewal_pmf(N: Optional[int], M: int, start: WalkerState, horizon: int,
                budget: int = WORK_BUDGET) -> LifetimeLaw:
    params = _check_params(N, M)
    _check_start(params, start)
    check_budget(float(M + 2) * horizon, budget, f"renewal_pmf(N={N}, M={M}, horizon={horizon})")
    pmf = np.zeros(horizon + 1)
    if params.is_boundary(start.x):
        length = horizon - (M + 1)
        if length >= 0:
            pmf[M + 1:] = sigma_kappa_pmf(N, M, length)
    else:
        first = first_excursion_law(N, M, start.x, start.e)
        if start.e <= horizon:
            pmf[start.e] += first.theta
        # lambda = M + 1 + nu_1 + sigma', nu_1 >= 1
        length = horizon - (M + 2)
        if length >= 0 and start.e >= 1:
            sigma = sigma_kappa_pmf(N, M, length)
            F = first.durations.masses[1:]
            conv = np.convolve(F, sigma)[:length + 1]
            pmf[M + 2:M + 2 + len(conv)] += conv
    residual = max(0.0, 1.0 - float(np.sum(pmf)))
    return LifetimeLaw(pmf=pmf, residual=residual, provenance='renewal',
                       exact_mean=expected_lifetime_exact(N, M, start))


def expected_lifetime_exact(N: Optional[int], M: int, start: WalkerState) -> float:
    params = _check_params(N, M)
    _check_start(params, start)
    law = excursion_law(N, M)
    theta = law.theta
    # Wald: E[sigma_kappa] = E[kappa] E[nu | nu < inf] = soma n D[n] / theta
    renewal_mean = law.durations.moment(1) / theta
    if params.is_boundary(start.x):
        return M + 1 + renewal_mean
    y = start.e
    if y == 0:
        return 0.0
    first = first_excursion_law(N, M, start.x, y)
    theta_z = first.theta
    return (theta_z * y + (1 - theta_z) * (M + 1) + first.durations.moment(1)
            + (1 - theta_z) * renewal_mean)


def lifetime_moments_exact(N: Optional[int], M: int, start: WalkerState) -> Tuple[float, float]:
    params = _check_params(N, M)
    _check_start(params, start)
    law = excursion_law(N, M)
    theta = law.theta
    m1 = law.conditional_mean()
    var_y = law.conditional_variance()
    e_kappa = (1 - theta) / theta
    var_kappa = (1 - theta) / theta ** 2
    e_s = e_kappa * m1
    var_s = e_kappa * var_y + var_kappa * m1 * m1

    if params.is_boundary(start.x):
        return M + 1 + e_s, var_s
    y = start.e
    if y == 0:
        return 0.0, 0.0
    first = first_excursion_law(N, M, start.x, y)
    theta_z = first.theta
    if theta_z >= 1.0:
        return float(y), 0.0
    v1 = first.durations.moment(1) / (1 - theta_z)
    v2 = first.durations.moment(2) / (1 - theta_z)
    e_a = M + 1 + v1 + e_s
    e_a2 = (v2 - v1 * v1) + var_s + e_a * e_a
    mean = theta_z * y + (1 - theta_z) * e_a
    second = theta_z * y * y + (1 - theta_z) * e_a2
    return mean, second - mean * mean


def compound_mgf(N: Optional[int], M: int, s: float) -> float:
    law = excursion_law(N, M)
    n = np.arange(len(law.durations.masses), dtype=np.float64)
    with np.errstate(over='ignore'):
        weighted = float(np.sum(np.exp(s * n) * law.durations.masses))
    if not weighted < 1.0:
        raise DomainError(f"compound_mgf fora do dominio: (1-theta)psi(s) = {weighted:.6g} >= 1 em s={s}",
                          boundary=weighted)
    return law.theta / (1.0 - weighted)


# ============================================================
# Oraculo racional
# ============================================================

def brute_force_pmf(N: int, M: int, start: WalkerState, horizon: int) -> LifetimeLaw:
    if N is None or N > BRUTE_MAX_N or M > BRUTE_MAX_M or horizon > BRUTE_MAX_HORIZON:
        raise BudgetExceeded(f"brute_force_pmf fora do envelope (N<={BRUTE_MAX_N}, M<={BRUTE_MAX_M}, "
                             f"horizonte<={BRUTE_MAX_HORIZON}): N={N}, M={M}, horizonte={horizon}")
    params = _check_params(N, M)
    _check_start(params, start)
    exact = _brute_explore(N, M, start.x, start.e, horizon)
    residual = 1 - sum(exact)
    return LifetimeLaw(pmf=np.array([float(p) for p in exact]), residual=float(residual),
                       provenance='brute-force', exact_pmf=exact)


_HALF = Fraction(1, 2)


# busca em profundidade; caminhos que chegam ao mesmo estado com o mesmo
# tempo restante sao agregados
@lru_cache(maxsize=None)
def _brute_explore(N: int, M: int, x: int, e: int, left: int) -> Tuple[Fraction, ...]:
    if 0 < x < N and e == 0:
        return (Fraction(1),) + (Fraction(0),) * left
    if left == 0:
        return (Fraction(0),)
    if x == 0 or x == N:
        child = _brute_explore(N, M, 1 if x == 0 else N - 1, M, left - 1)
        return (Fraction(0),) + child
    down = _brute_explore(N, M, x - 1, e - 1, left - 1)
    up = _brute_explore(N, M, x + 1, e - 1, left - 1)
    return (Fraction(0),) + tuple(_HALF * (a + b) for a, b in zip(down, up))

