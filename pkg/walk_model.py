from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from config import HORIZON_CAP, logger
from extensions import parallel_map, run_stream, seed_token
from utils import HorizonExceeded, ModelError, WorkbenchError

# Tamanho do bloco de passos sorteados de uma vez dentro de uma excursao
STEP_CHUNK = 256


@dataclass(frozen=True)
class ModelParams:
    N: Optional[int]
    M: int

    def __post_init__(self):
        if self.N is not None:
            if self.N == 2:
                raise ModelError("N = 2 nao tem extincao certa; use N >= 3")
            if self.N < 2:
                raise ModelError(f"N invalido: {self.N}")
        if self.M < 1:
            raise ModelError(f"Capacidade M invalida: {self.M}")

    @property
    def infinite(self) -> bool:
        return self.N is None

    def is_boundary(self, x: int) -> bool:
        return x == 0 or (self.N is not None and x == self.N)

    def is_interior(self, x: int) -> bool:
        return x > 0 and (self.N is None or x < self.N)


@dataclass(frozen=True)
class WalkerState:
    x: int
    e: int
    absorbed: bool = False

    def validate(self, params: ModelParams):
        if self.x < 0 or (params.N is not None and self.x > params.N):
            raise ModelError(f"Posicao fora do intervalo: x={self.x}, N={params.N}")
        if self.e < 0 or self.e > params.M:
            raise ModelError(f"Energia fora de [0, M]: e={self.e}, M={params.M}")
        if self.absorbed != (params.is_interior(self.x) and self.e == 0):
            raise ModelError(f"Flag absorbed inconsistente em {self}")


def effective_params(params: ModelParams, x0: int) -> ModelParams:
    """Intervalo finito equivalente quando N e infinito."""
    if not params.infinite:
        return params
    return ModelParams(N=params.M + x0 + 2, M=params.M)


def initial_state(params: ModelParams, x: int, e: int) -> WalkerState:
    state = WalkerState(x=x, e=e, absorbed=params.is_interior(x) and e == 0)
    state.validate(params)
    return state


def transition_step(params: ModelParams, state: WalkerState, coin: Callable[[], int]) -> WalkerState:
    if state.x == 0:
        return WalkerState(x=1, e=params.M)
    if params.N is not None and state.x == params.N:
        return WalkerState(x=params.N - 1, e=params.M)
    if state.e == 0:
        return WalkerState(x=state.x, e=0, absorbed=True)
    x = state.x + (1 if coin() else -1)
    e = state.e - 1
    return WalkerState(x=x, e=e, absorbed=params.is_interior(x) and e == 0)


def make_coin(rng: np.random.Generator) -> Callable[[], int]:
    return lambda: int(rng.integers(0, 2))


def walk_path(params: ModelParams, start: WalkerState, coin: Callable[[], int],
              max_steps: int = 10_000) -> List[WalkerState]:
    start.validate(params)
    path = [start]
    state = start
    while not state.absorbed and len(path) <= max_steps:
        state = transition_step(params, state, coin)
        path.append(state)
    return path


@dataclass(frozen=True)
class LifetimeSample:
    lam: int
    kappa: int
    excursions: Tuple[int, ...]
    extinction_x: int
    seed: int = 0

    def sigma(self) -> List[int]:
        out, acc = [], 0
        for nu in self.excursions:
            acc += nu
            out.append(acc)
        return out

    def to_dict(self) -> dict:
        return {
            'lambda': self.lam,
            'kappa': self.kappa,
            'excursions': list(self.excursions),
            'extinction_x': self.extinction_x,
            'seed': self.seed,
        }


def _check_sample(params: ModelParams, start: WalkerState, sample: LifetimeSample):
    M = params.M
    if sample.kappa >= 1 and sample.lam != M + 1 + sum(sample.excursions):
        raise WorkbenchError(f"Amostra inconsistente: lambda={sample.lam} != M+1+sigma_kappa")
    if sample.kappa == 0 and params.is_interior(start.x) and sample.lam != start.e:
        raise WorkbenchError(f"Amostra inconsistente: kappa=0 mas lambda={sample.lam} != y={start.e}")
    if any(nu < 1 or nu > M + 1 for nu in sample.excursions):
        raise WorkbenchError(f"Excursao fora de [1, M+1]: {sample.excursions}")


def simulate_lifetime(params: ModelParams, start: WalkerState,
                      seed: Union[int, np.random.Generator],
                      horizon_cap: int = HORIZON_CAP) -> LifetimeSample:
    start.validate(params)
    if start.absorbed:
        raise ModelError(f"Estado inicial ja absorvido: {start}")
    if isinstance(seed, np.random.Generator):
        rng, token = seed, 0
    else:
        token = int(seed)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(token)))
    eff = effective_params(params, start.x)
    N, M = eff.N, eff.M

    x, e, t = start.x, start.e, 0
    last_visit = 0
    excursions = []
    while True:
        if x == 0 or x == N:
            if t > 0:
                excursions.append(t - last_visit)
            last_visit = t
            x = 1 if x == 0 else N - 1
            e = M
            t += 1
            continue
        if e == 0:
            break
        k = min(e, STEP_CHUNK)
        steps = 2 * rng.integers(0, 2, size=k, dtype=np.int64) - 1
        path = x + np.cumsum(steps)
        hits = np.flatnonzero((path == 0) | (path == N))
        if hits.size:
            i = int(hits[0])
            t += i + 1
            e -= i + 1
            x = int(path[i])
        else:
            t += k
            e -= k
            x = int(path[-1])
        if t > horizon_cap:
            raise HorizonExceeded(f"Horizonte de {horizon_cap} passos excedido (N={N}, M={M})",
                                  steps=t, cap=horizon_cap)

    sample = LifetimeSample(lam=t, kappa=len(excursions), excursions=tuple(excursions),
                            extinction_x=x, seed=token)
    _check_sample(eff, start, sample)
    return sample


def _batch_run(params: ModelParams, start: WalkerState, seed_root: int, horizon_cap: int,
               index: int) -> LifetimeSample:
    rng = run_stream(seed_root, index)
    try:
        sample = simulate_lifetime(params, start, rng, horizon_cap=horizon_cap)
    except HorizonExceeded as e:
        raise HorizonExceeded(f"Execucao {index}: {e}", steps=e.steps, cap=e.cap,
                              run_index=index) from e
    return replace(sample, seed=seed_token(seed_root, index))


def simulate_batch(params: ModelParams, start: WalkerState, n_runs: int, seed_root: int,
                   horizon_cap: int = HORIZON_CAP) -> List[LifetimeSample]:
    if n_runs < 1:
        raise ModelError(f"n_runs deve ser >= 1 (recebido {n_runs})")
    samples = parallel_map(partial(_batch_run, params, start, seed_root, horizon_cap), range(n_runs))
    logger.info(f"Lote concluido: {n_runs} execucoes (N={params.N}, M={params.M}, "
                f"inicio=({start.x},{start.e}), seed_root={seed_root})")
    return samples


def derived_seed_sample(params: ModelParams, start: WalkerState, seed_root: int,
                        index: int = 0) -> LifetimeSample:
    """Uma execucao isolada com a mesma semente que simulate_batch usaria."""
    sample = simulate_lifetime(params, start, run_stream(seed_root, index))
    return replace(sample, seed=seed_token(seed_root, index))
