"""
Leis exatas e assintoticas dos tempos de saida de um passeio aleatorio simples:
tau_0 (um lado) e tau_{0,N} (intervalo {0..N}).
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import special, stats

from config import WORK_BUDGET, logger
from utils import ModelError, check_budget

MIN_N_EXPANSION = 8


@dataclass(frozen=True)
class ExitLawTable:
    N: int
    x: int
    # pmf[n] = P_x(tau = n) para n = 0..n_max (pmf[0] so e 1 quando x esta na fronteira)
    pmf: np.ndarray
    tail_remainder: float
    exit_at_N: float = 0.0

    @property
    def n_max(self) -> int:
        return len(self.pmf) - 1

    def tail(self, n: int) -> float:
        """P_x(tau > n) para n <= n_max."""
        return float(np.sum(self.pmf[n + 1:])) + self.tail_remainder

    def mean(self) -> float:
        n = np.arange(len(self.pmf), dtype=np.float64)
        return float(np.sum(n * self.pmf))

    def variance(self) -> float:
        n = np.arange(len(self.pmf), dtype=np.float64)
        m1 = np.sum(n * self.pmf)
        return float(np.sum(n * n * self.pmf) - m1 * m1)


@dataclass(frozen=True)
class TailExpansion:
    N: int
    k0: int
    n: int
    S0: float
    delta_bound: float
    estimate: float
    lower: float
    upper: float
    exact: float
    contained: bool


def exit_pmf_dp(N: Optional[int], x: int, n_max: int, budget: int = WORK_BUDGET) -> ExitLawTable:
    if n_max < 1:
        raise ModelError(f"n_max deve ser >= 1 (recebido {n_max})")
    if x < 0 or (N is not None and x > N):
        raise ModelError(f"Inicio fora do intervalo: x={x}, N={N}")
    if N is not None and N < 2:
        raise ModelError(f"N invalido: {N}")

    pmf = np.zeros(n_max + 1)
    if x == 0 or x == N:
        pmf[0] = 1.0
        return ExitLawTable(N=N, x=x, pmf=pmf, tail_remainder=0.0, exit_at_N=1.0 if x == N else 0.0)

    # Fronteira oposta inalcancavel em n_max passos: intervalo reduzido e exato
    width = x + n_max + 1
    L = width if N is None else min(N, width)
    check_budget(float(L) * n_max, budget, f"exit_pmf_dp(N={N}, x={x}, n_max={n_max})")

    w = np.zeros(L + 1)
    w[x] = 1.0
    nw = np.empty_like(w)
    exit_at_N = 0.0
    for n in range(1, n_max + 1):
        half = 0.5 * w[1:L]
        nw.fill(0.0)
        nw[0:L - 1] += half
        nw[2:L + 1] += half
        pmf[n] = nw[0] + nw[L]
        if L == N:
            exit_at_N += nw[L]
        nw[0] = 0.0
        nw[L] = 0.0
        w, nw = nw, w
    return ExitLawTable(N=N, x=x, pmf=pmf, tail_remainder=float(np.sum(w)), exit_at_N=float(exit_at_N))


def exit_tail_dp(N: Optional[int], x: int, n: int, budget: int = WORK_BUDGET) -> float:
    if n == 0:
        return 0.0 if (x == 0 or x == N) else 1.0
    return exit_pmf_dp(N, x, n, budget=budget).tail_remainder


def _angles(N: int, m: int) -> np.ndarray:
    k = np.arange(1, m + 1, dtype=np.float64)
    return math.pi * (2.0 * k - 1.0) / N


def trig_sum_S0(N: int, m: int, n: int) -> float:
    return float(np.sum(np.power(np.cos(_angles(N, m)), n)))


def exit_pmf_cosine(N: int, n: int) -> float:
    if N < 2:
        raise ModelError(f"N invalido: {N}")
    if n < 1:
        return 0.0
    theta = _angles(N, math.ceil((N - 1) / 2))
    return float(2.0 / N * np.sum(np.power(np.cos(theta), n - 1) * np.sin(theta) ** 2))


def exit_tail_cosine(N: int, n: int) -> float:
    if N < 2:
        raise ModelError(f"N invalido: {N}")
    if n <= 0:
        return 1.0
    m = math.ceil((N - 1) / 2)
    return 2.0 / N * (trig_sum_S0(N, m, n) + trig_sum_S0(N, m, n + 1))


def one_sided_pmf(n: int) -> float:
    """P_1(tau_0 = n); zero em argumentos pares."""
    if n < 1 or n % 2 == 0:
        return 0.0
    m = (n - 1) // 2
    log_p = (special.gammaln(2 * m + 1) - 2 * special.gammaln(m + 1)
             - (1 + 2 * m) * math.log(2.0) - math.log(m + 1))
    return float(math.exp(log_p))


def one_sided_tail(n: int) -> float:
    """P_1(tau_0 > n) = 2^{-2m} binom(2m, m) com m = ceil(n/2)."""
    if n < 0:
        return 1.0
    m = (n + 1) // 2
    log_c = special.gammaln(2 * m + 1) - 2 * special.gammaln(m + 1) - 2 * m * math.log(2.0)
    return float(math.exp(log_c))


def one_sided_tail_from(x: int, n: int) -> float:
    # reflexao: P_x(tau_0 > n) = P(-x < S_n <= x), S_n = 2B - n com B ~ Bin(n, 1/2)
    if x <= 0:
        return 0.0
    if n <= 0:
        return 1.0
    hi = stats.binom.cdf((n + x) // 2, n, 0.5)
    lo = stats.binom.cdf((n - x) // 2, n, 0.5)
    return float(hi - lo)


def exit_moments(N: int, x: int) -> Tuple[float, float]:
    if x < 0 or x > N:
        raise ModelError(f"Inicio fora do intervalo: x={x}, N={N}")
    d = float(x * (N - x))
    return d, d / 3.0 * (x * x + (N - x) ** 2 - 2)


def delta_bound(N: int, k0: int, n: int) -> float:
    pi2 = math.pi ** 2
    return (4 * pi2 * k0 ** 2 / N ** 2
            + 2 * (1 + N ** 2 / (4 * pi2 * n * k0)) * math.exp(-2 * pi2 * n * k0 ** 2 / N ** 2))


def tail_expansion(N: int, k0: int, n: int) -> TailExpansion:
    if N < MIN_N_EXPANSION:
        raise ModelError(f"tail_expansion exige N >= {MIN_N_EXPANSION} (recebido {N})")
    if k0 < 1 or k0 > math.ceil((N - 1) / 2):
        raise ModelError(f"k0 fora de [1, m_N]: k0={k0}, N={N}")
    if n < 1:
        raise ModelError(f"n deve ser >= 1 (recebido {n})")
    s0 = trig_sum_S0(N, k0, n)
    bound = delta_bound(N, k0, n)
    estimate = 4.0 / N * s0
    lower, upper = estimate * (1 - bound), estimate * (1 + bound)
    exact = exit_tail_cosine(N, n)
    contained = lower <= exact <= upper
    if not contained:
        logger.warning(f"Cauda exata fora do intervalo: N={N}, k0={k0}, n={n}, "
                       f"exata={exact:.6e}, intervalo=[{lower:.6e}, {upper:.6e}]")
    return TailExpansion(N=N, k0=k0, n=n, S0=s0, delta_bound=bound, estimate=estimate,
                         lower=lower, upper=upper, exact=exact, contained=contained)


def tail_scaled_H(N: int, y: float) -> float:
    if y <= 0:
        raise ModelError(f"y deve ser > 0 (recebido {y})")
    return N / 4.0 * exit_tail_cosine(N, int(math.floor(y * N * N)))


def brownian_first_passage_prob(a: float, u: float) -> float:
    """P(a * tau_1 < u) para o tempo de chegada browniano ao nivel 1."""
    if a <= 0:
        return 1.0
    return 2.0 * float(stats.norm.sf(math.sqrt(a / u)))
