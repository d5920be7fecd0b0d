import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from extensions import get_executor, get_threads, init_extensions, run_stream, shutdown_extensions
from lifetime_engine import brute_force_pmf, lifetime_moments_exact, lifetime_pmf_dp
from utils import HorizonExceeded, ModelError, WorkbenchError
from walk_model import (LifetimeSample, ModelParams, WalkerState, derived_seed_sample, effective_params,
                        initial_state, make_coin, simulate_batch, simulate_lifetime, transition_step,
                        walk_path)


def always(bit):
    return lambda: bit


@pytest.mark.parametrize("N, M", [(2, 5), (1, 5), (0, 5), (10, 0)])
def test_model_params_rejects_degenerate(N, M):
    with pytest.raises(ModelError):
        ModelParams(N=N, M=M)


def test_model_params_infinite():
    params = ModelParams(N=None, M=7)
    assert params.infinite
    assert params.is_boundary(0)
    assert params.is_interior(10 ** 9)


def test_effective_params_for_infinite_interval():
    assert effective_params(ModelParams(N=None, M=10), 3).N == 15
    finite = ModelParams(N=9, M=10)
    assert effective_params(finite, 3) is finite


@pytest.mark.parametrize("x, e", [(-1, 2), (6, 2), (2, -1), (2, 5)])
def test_initial_state_rejects_out_of_range(x, e):
    with pytest.raises(ModelError):
        initial_state(ModelParams(N=5, M=4), x, e)


def test_inconsistent_absorbed_flag():
    params = ModelParams(N=5, M=4)
    with pytest.raises(ModelError):
        WalkerState(x=2, e=0, absorbed=False).validate(params)
    with pytest.raises(ModelError):
        WalkerState(x=0, e=0, absorbed=True).validate(params)


def test_transition_step_rules():
    params = ModelParams(N=5, M=4)
    assert transition_step(params, WalkerState(0, 0), always(0)) == WalkerState(1, 4)
    assert transition_step(params, WalkerState(5, 2), always(1)) == WalkerState(4, 4)
    assert transition_step(params, WalkerState(2, 3), always(1)) == WalkerState(3, 2)
    assert transition_step(params, WalkerState(2, 3), always(0)) == WalkerState(1, 2)
    assert transition_step(params, WalkerState(2, 1), always(1)) == WalkerState(3, 0, absorbed=True)
    assert transition_step(params, WalkerState(2, 0), always(1)) == WalkerState(2, 0, absorbed=True)
    # o passo que chega na fronteira com energia zero nao absorve
    assert transition_step(params, WalkerState(1, 1), always(0)) == WalkerState(0, 0)


def test_absorbed_state_is_fixed():
    params = ModelParams(N=5, M=4)
    dead = WalkerState(3, 0, absorbed=True)
    assert transition_step(params, dead, always(1)) == dead


def test_walk_path_until_absorption():
    params = ModelParams(N=5, M=3)
    path = walk_path(params, initial_state(params, 1, 3), always(1))
    assert [(s.x, s.e) for s in path] == [(1, 3), (2, 2), (3, 1), (4, 0)]
    assert path[-1].absorbed


def test_walk_path_respects_max_steps():
    params = ModelParams(N=5, M=3)
    # sempre para baixo: oscila entre 1 e 0 sem morrer
    path = walk_path(params, initial_state(params, 1, 3), always(0), max_steps=50)
    assert len(path) == 51
    assert not path[-1].absorbed


def test_sample_sigma_and_dict():
    sample = LifetimeSample(lam=16, kappa=3, excursions=(2, 3, 4), extinction_x=2, seed=9)
    assert sample.sigma() == [2, 5, 9]
    assert sample.to_dict()['lambda'] == 16


def test_simulate_lifetime_is_reproducible():
    params = ModelParams(N=None, M=40)
    start = initial_state(params, 1, 40)
    a = simulate_lifetime(params, start, 1234)
    b = simulate_lifetime(params, start, 1234)
    assert a == b
    assert a.seed == 1234


def test_simulate_lifetime_decomposition():
    params = ModelParams(N=12, M=30)
    start = initial_state(params, 4, 17)
    for index in range(200):
        s = simulate_lifetime(params, start, run_stream(99, index))
        if s.kappa == 0:
            assert s.lam == 17
        else:
            assert s.lam == 30 + 1 + sum(s.excursions)
            assert all(2 <= nu <= 31 for nu in s.excursions[1:])
        assert 0 < s.extinction_x < 12


def test_boundary_start_enters_interior():
    params = ModelParams(N=6, M=3)
    s = simulate_lifetime(params, initial_state(params, 0, 0), 5)
    assert s.lam >= 4
    assert s.lam == 3 + 1 + sum(s.excursions)


def test_simulate_rejects_absorbed_start():
    params = ModelParams(N=6, M=3)
    with pytest.raises(ModelError):
        simulate_lifetime(params, initial_state(params, 2, 0), 5)


def test_horizon_cap():
    params = ModelParams(N=None, M=50)
    start = initial_state(params, 1, 50)
    with pytest.raises(HorizonExceeded) as err:
        simulate_lifetime(params, start, 7, horizon_cap=10)
    assert err.value.cap == 10
    with pytest.raises(HorizonExceeded) as err:
        simulate_batch(params, start, 3, 7, horizon_cap=10)
    assert err.value.run_index == 0
    assert isinstance(err.value, WorkbenchError)


def test_batch_serial_equals_parallel():
    params = ModelParams(N=9, M=20)
    start = initial_state(params, 1, 20)
    shutdown_extensions()
    serial = simulate_batch(params, start, 64, 2024)
    try:
        init_extensions(4)
        assert isinstance(get_executor(), ProcessPoolExecutor)
        assert get_threads() == 4
        parallel = simulate_batch(params, start, 64, 2024)
    finally:
        shutdown_extensions()
    assert serial == parallel


def test_derived_seed_matches_batch():
    params = ModelParams(N=9, M=20)
    start = initial_state(params, 3, 11)
    batch = simulate_batch(params, start, 5, 77)
    assert derived_seed_sample(params, start, 77, index=3) == batch[3]
    assert len({s.seed for s in batch}) == 5


def test_batch_mean_matches_exact():
    params = ModelParams(N=None, M=2)
    start = initial_state(params, 1, 2)
    runs = 4000
    lam = [s.lam for s in simulate_batch(params, start, runs, 31)]
    mean, var = lifetime_moments_exact(None, 2, start)
    assert mean == pytest.approx(4.0, rel=1e-12)
    assert abs(sum(lam) / runs - mean) < 4 * math.sqrt(var / runs)


def test_batch_rejects_zero_runs():
    params = ModelParams(N=9, M=20)
    with pytest.raises(ModelError):
        simulate_batch(params, initial_state(params, 1, 20), 0, 1)


def test_interior_step_is_fair_coin():
    params = ModelParams(N=5, M=3)
    coin = make_coin(run_stream(2718, 0))
    draws = 100_000
    ups = 0
    for _ in range(draws):
        nxt = transition_step(params, WalkerState(2, 2), coin)
        assert nxt.x in (1, 3) and nxt.e == 1
        ups += nxt.x == 3
    assert abs(ups / draws - 0.5) <= 3 * math.sqrt(0.25 / draws)


@pytest.mark.slow
def test_lifetime_law_on_three_sites():
    params = ModelParams(N=3, M=1)
    runs = 100_000
    lam = np.array([s.lam for s in simulate_batch(params, initial_state(params, 1, 1), runs, 1618)])
    assert np.all(lam % 2 == 1)
    for k in range(6):
        p = 2.0 ** -(k + 1)
        freq = np.mean(lam == 2 * k + 1)
        assert abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / runs)


def test_death_before_boundary_on_three_sites():
    params = ModelParams(N=3, M=2)
    runs = 20_000
    kappas = np.array([s.kappa for s in simulate_batch(params, initial_state(params, 1, 2), runs, 31415)])
    assert abs(np.mean(kappas == 0) - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / runs)


def small_starts():
    for N in (3, 4, 5):
        for M in (1, 2, 3, 4):
            for x in range(N + 1):
                for e in range(M + 1):
                    if 0 < x < N and e == 0:
                        continue
                    yield N, M, x, e


@pytest.mark.slow
@pytest.mark.parametrize("N, M, x, e", list(small_starts()))
def test_simulation_agrees_with_brute_force(N, M, x, e):
    params = ModelParams(N=N, M=M)
    start = initial_state(params, x, e)
    runs = 2000
    lam = np.array([s.lam for s in simulate_batch(params, start, runs, 1000 * N + 100 * M + 10 * x + e)])
    exact = brute_force_pmf(N, M, start, 40)
    # DKW: sup |F_n - F| <= 2.5/sqrt(n) falha com prob < 1e-5; vale na janela do oraculo
    empirical = np.array([np.mean(lam <= n) for n in range(41)])
    assert np.max(np.abs(empirical - np.cumsum(exact.pmf))) <= 2.5 / math.sqrt(runs)
    full = lifetime_pmf_dp(N, M, start)
    assert abs(lam.mean() - full.mean()) <= 4 * math.sqrt(full.variance() / runs)
