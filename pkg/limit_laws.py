"""
Leis limite e funcoes especiais: I(t), Kummer K(t), t0, DM(1/2), lei 1/2-estavel,
g(a, u), funcao teta H, caso critico G / phi_rho / mu(rho) / m_rho e a escala
do regime confinado.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable, List, Optional

import numpy as np
from scipy import integrate, optimize, stats

from utils import DomainError, ModelError

SERIES_RTOL = 1e-16
QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 200
# abaixo deste y, H e avaliada pela serie transformada (Jacobi)
H_SWITCH = 0.25
T0_BRACKET = (0.5, 1.0)
BISECT_XTOL = 1e-13

PI2 = math.pi ** 2


# ============================================================
# I(t), K(t), t0 e DM(1/2)
# ============================================================

def _power_series(t: float, coef: Callable[[int], float]) -> float:
    """soma_{l>=1} coef(l) t^l / l!, parando quando o termo cai abaixo da tolerancia relativa
    e os termos ja decrescem geometricamente (razao <= 1/2, resto <= termo)."""
    acc = 0.0
    power = 1.0
    l = 0
    while True:
        l += 1
        power *= t / l
        term = coef(l) * power
        acc += term
        if l > 2 * abs(t) and abs(term) <= SERIES_RTOL * max(abs(acc), 1e-300):
            return acc
        if l > 10_000:
            return acc


def script_I(t: float) -> float:
    return _power_series(t, lambda l: 2.0 * l / (2 * l - 1))


def script_I_quad(t: float) -> float:
    # u = v^2 remove a singularidade u^{-1/2} em 0
    value, _ = integrate.quad(lambda v: math.exp(t * v * v), 0.0, 1.0,
                              epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    return 2.0 * t * value


def kummer_K(t: float) -> float:
    return 1.0 - _power_series(t, lambda l: 1.0 / (2 * l - 1))


@lru_cache(maxsize=1)
def find_t0() -> float:
    lo, hi = T0_BRACKET
    return float(optimize.bisect(kummer_K, lo, hi, xtol=BISECT_XTOL, maxiter=200))


def dm_mgf(t: float) -> float:
    t0 = find_t0()
    if t >= t0:
        raise DomainError(f"MGF de DM(1/2) so existe para t < t0 = {t0:.10f} (recebido {t})", boundary=t0)
    return 1.0 / kummer_K(t)


def dm_moments(k_max: int) -> List[Fraction]:
    """[u_0, u_1, ..., u_kmax] pela recursao racional exata."""
    if k_max < 1:
        raise ModelError(f"k_max deve ser >= 1 (recebido {k_max})")
    moments = [Fraction(1)]
    for k in range(1, k_max + 1):
        moments.append(sum(Fraction(comb(k, j), 2 * j - 1) * moments[k - j] for j in range(1, k + 1)))
    return moments


@dataclass(frozen=True)
class DmDistribution:
    t0: float
    moments: tuple

    def mgf(self, t: float) -> float:
        return dm_mgf(t)

    @property
    def mean(self) -> float:
        return float(self.moments[1])

    @property
    def variance(self) -> float:
        return float(self.moments[2] - self.moments[1] ** 2)


def dm_law(k_max: int = 6) -> DmDistribution:
    return DmDistribution(t0=find_t0(), moments=tuple(dm_moments(k_max)))


# ============================================================
# Normal, lei 1/2-estavel e g(a, u)
# ============================================================

def norm_cdf(z: float) -> float:
    return float(stats.norm.cdf(z))


def norm_sf(z: float) -> float:
    return float(stats.norm.sf(z))


def norm_pdf(z: float) -> float:
    return float(stats.norm.pdf(z))


def stable_half_tail(t: float) -> float:
    """P(tau_1 > t) = 2 Phi(t^{-1/2}) - 1."""
    if t <= 0:
        raise DomainError(f"t deve ser > 0 (recebido {t})", boundary=0.0)
    return float(stats.levy.sf(t))


def stable_half_cdf(t: float) -> float:
    if t <= 0:
        return 0.0
    return float(stats.levy.cdf(t))


def stable_half_density(t: float) -> float:
    if t <= 0:
        raise DomainError(f"t deve ser > 0 (recebido {t})", boundary=0.0)
    return float(stats.levy.pdf(t))


def g_mean(a: float, u: float) -> float:
    if a < 0 or not 0 < u <= 1:
        raise DomainError(f"g(a, u) exige a >= 0 e 0 < u <= 1 (recebido a={a}, u={u})")
    if math.isinf(a):
        return u
    z = math.sqrt(a / u)
    return u + (4 - 2 * u - 2 * a) * norm_sf(z) + math.sqrt(2 * a * u / math.pi) * math.exp(-a / (2 * u))


def g_mean_da(a: float, u: float) -> float:
    if a <= 0 or not 0 < u <= 1:
        raise DomainError(f"dg/da exige a > 0 e 0 < u <= 1 (recebido a={a}, u={u})")
    z = math.sqrt(a / u)
    return -2 * (1 - u) / math.sqrt(a * u) * norm_pdf(z) - 2 * norm_sf(z)


def meagre_atom_mass(a: float, u: float) -> float:
    """Massa do atomo em u do limite de lambda/M: P(a tau_1 >= u) = 2 Phi(sqrt(a/u)) - 1."""
    if a <= 0:
        return 0.0
    if math.isinf(a):
        return 1.0
    return 1.0 - 2.0 * norm_sf(math.sqrt(a / u))


# ============================================================
# Funcao teta H
# ============================================================

def _check_y(y: float):
    if y <= 0:
        raise DomainError(f"H so definida para y > 0 (recebido {y})", boundary=0.0)


def _odd_terms(y: float) -> np.ndarray:
    # termos h_k(y), decrescentes em k; corta quando ficam desprezaveis
    count = int(math.ceil(0.5 + 0.5 * math.sqrt(2 * 40 * math.log(10) / (PI2 * y)))) + 1
    k = np.arange(1, count + 1, dtype=np.float64)
    return np.exp(-PI2 * (2 * k - 1) ** 2 * y / 2)


def _dual_terms(y: float) -> np.ndarray:
    count = int(math.ceil(math.sqrt(2 * y * 40 * math.log(10)))) + 1
    m = np.arange(1, count + 1, dtype=np.float64)
    return np.where(m % 2 == 1, -1.0, 1.0) * np.exp(-m * m / (2 * y))


def theta_H(y: float) -> float:
    _check_y(y)
    if y >= H_SWITCH:
        return float(np.sum(_odd_terms(y)))
    # H(y) = (2 pi y)^{-1/2} [1/2 + soma_m (-1)^m e^{-m^2/(2y)}]
    return (0.5 + float(np.sum(_dual_terms(y)))) / math.sqrt(2 * math.pi * y)


def theta_H_derivative(y: float) -> float:
    _check_y(y)
    if y >= H_SWITCH:
        k = np.arange(1, len(_odd_terms(y)) + 1, dtype=np.float64)
        return float(-PI2 / 2 * np.sum((2 * k - 1) ** 2 * _odd_terms(y)))
    terms = _dual_terms(y)
    m = np.arange(1, len(terms) + 1, dtype=np.float64)
    B = 0.5 + float(np.sum(terms))
    dB = float(np.sum(terms * m * m / (2 * y * y)))
    return (-0.5 * y ** -1.5 * B + y ** -0.5 * dB) / math.sqrt(2 * math.pi)


def theta_H_integral(y_hi: float, epsrel: float = QUAD_EPSREL) -> float:
    """integral_0^{y_hi} H, com y = w^2 (integrando limitado em w = 0)."""
    _check_y(y_hi)
    w_hi = math.sqrt(y_hi)
    points = [math.sqrt(H_SWITCH)] if w_hi > math.sqrt(H_SWITCH) else None
    value, _ = integrate.quad(lambda w: 2 * w * theta_H(w * w), 0.0, w_hi, points=points,
                              epsabs=QUAD_EPSABS, epsrel=epsrel, limit=QUAD_LIMIT)
    return float(value)


def theta_H_remainder(y_hi: float) -> float:
    """integral_{y_hi}^inf H = soma_k 2 h_k(y_hi) / (pi^2 (2k-1)^2)."""
    _check_y(y_hi)
    terms = _odd_terms(y_hi)
    k = np.arange(1, len(terms) + 1, dtype=np.float64)
    return float(np.sum(2 * terms / (PI2 * (2 * k - 1) ** 2)))


def theta_H_integral_closed(y_hi: float) -> float:
    return 0.25 - theta_H_remainder(y_hi)


# ============================================================
# Caso critico
# ============================================================

def _check_rho(rho: float):
    if rho <= 0:
        raise DomainError(f"rho deve ser > 0 (recebido {rho})", boundary=0.0)


def critical_G(rho: float, s: float, epsrel: float = QUAD_EPSREL) -> float:
    _check_rho(rho)
    if s == 0:
        return 0.0
    h_rho = theta_H(rho)
    # v = w^2: a singularidade v^{-1/2} de H(v rho) some
    value, _ = integrate.quad(lambda w: 2 * w * math.exp(s * w * w) * (theta_H(w * w * rho) - h_rho),
                              0.0, 1.0, epsabs=QUAD_EPSABS, epsrel=epsrel, limit=QUAD_LIMIT)
    return s / h_rho * value


def critical_s_rho(rho: float) -> float:
    _check_rho(rho)
    hi = 1.0
    while critical_G(rho, hi) < 1.0:
        hi *= 2.0
    return float(optimize.bisect(lambda s: critical_G(rho, s) - 1.0, 0.0, hi, xtol=BISECT_XTOL, maxiter=200))


def critical_mgf(rho: float, s: float) -> float:
    g = critical_G(rho, s)
    if g >= 1.0:
        s_rho = critical_s_rho(rho)
        raise DomainError(f"phi_rho so existe para s < s_rho = {s_rho:.10f} (recebido {s})", boundary=s_rho)
    return 1.0 / (1.0 - g)


def critical_mu(rho: float, epsrel: float = QUAD_EPSREL) -> float:
    _check_rho(rho)
    return theta_H_integral(rho, epsrel=epsrel) / (rho * theta_H(rho)) - 1.0


def levy_density_m(rho: float, x: float) -> float:
    _check_rho(rho)
    if x < 0 or x > 1:
        return 0.0
    if x == 0:
        return math.inf
    return -rho * x * theta_H_derivative(rho * x) / theta_H(rho)


def levy_G(rho: float, s: float) -> float:
    """integral_0^inf (e^{sx} - 1) m_rho(x) / x dx, com x = w^2."""
    _check_rho(rho)

    def integrand(w: float) -> float:
        return 2 * math.expm1(s * w * w) * levy_density_m(rho, w * w) / w

    value, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    return float(value)


def critical_G2(rho: float) -> float:
    """G''(0) = integral_0^1 x m_rho(x) dx."""
    _check_rho(rho)
    value, _ = integrate.quad(lambda w: 2 * w ** 3 * levy_density_m(rho, w * w), 0.0, 1.0,
                              epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    return float(value)


def critical_variance(rho: float) -> float:
    # phi = 1/(1 - G), G(0) = 0: Var = G''(0) + G'(0)^2
    return critical_G2(rho) + critical_mu(rho) ** 2


@dataclass(frozen=True)
class CriticalLaw:
    rho: float
    s_rho: float
    mu: float
    variance: float

    def mgf(self, s: float) -> float:
        return critical_mgf(self.rho, s)


def critical_law(rho: float) -> CriticalLaw:
    return CriticalLaw(rho=rho, s_rho=critical_s_rho(rho), mu=critical_mu(rho), variance=critical_variance(rho))


# ============================================================
# Regime confinado
# ============================================================

def confined_scale(N: int, M: int) -> float:
    if N < 3 or M < 0:
        raise ModelError(f"confined_scale exige N >= 3 e M >= 0 (recebido N={N}, M={M})")
    return 4.0 / N ** 2 * math.exp(M * math.log(math.cos(math.pi / N)))


def confined_scale_expform(N: int, M: int) -> float:
    if N < 3 or M < 0:
        raise ModelError(f"confined_scale exige N >= 3 e M >= 0 (recebido N={N}, M={M})")
    return 4.0 / N ** 2 * math.exp(-PI2 * M / (2.0 * N ** 2))


# ============================================================
# Handles avaliaveis
# ============================================================

@dataclass(frozen=True)
class LimitLawHandle:
    name: str
    mgf: Callable[[float], float]
    moments: Optional[Callable[[int], List]] = None
    cdf: Optional[Callable[[float], float]] = None
    tail: Optional[Callable[[float], float]] = None


def dm_handle() -> LimitLawHandle:
    return LimitLawHandle(name='dm_half', mgf=dm_mgf, moments=dm_moments)


def stable_half_handle() -> LimitLawHandle:
    def _no_mgf(t: float) -> float:
        if t > 0:
            raise DomainError("A lei 1/2-estavel nao tem MGF para t > 0", boundary=0.0)
        return math.exp(-math.sqrt(-2.0 * t))
    return LimitLawHandle(name='stable_half', mgf=_no_mgf, cdf=stable_half_cdf, tail=stable_half_tail)


def exponential_handle() -> LimitLawHandle:
    def _mgf(t: float) -> float:
        if t >= 1:
            raise DomainError(f"MGF de Exp(1) exige t < 1 (recebido {t})", boundary=1.0)
        return 1.0 / (1.0 - t)
    return LimitLawHandle(name='exponential', mgf=_mgf,
                          moments=lambda k: [math.factorial(j) for j in range(k + 1)],
                          cdf=lambda x: float(stats.expon.cdf(x)),
                          tail=lambda x: float(stats.expon.sf(x)))


def critical_handle(rho: float) -> LimitLawHandle:
    def _moments(k_max: int) -> List[float]:
        if k_max > 2:
            raise ModelError(f"phi_rho: momentos so ate a ordem 2 (pedido {k_max})")
        mu = critical_mu(rho)
        return [1.0, mu, critical_G2(rho) + 2 * mu * mu][:k_max + 1]

    return LimitLawHandle(name=f'critical_rho={rho:g}', mgf=lambda s: critical_mgf(rho, s), moments=_moments)
