from concurrent.futures import ProcessPoolExecutor

import numpy as np

from config import THREADS, logger

# module-level globals set by init_extensions
executor = None
_threads = 1


def init_extensions(threads: int = THREADS):
    """Pool de processos: as funcoes passadas a parallel_map precisam ser de nivel de modulo."""
    global executor, _threads
    shutdown_extensions()
    _threads = max(1, int(threads))
    if _threads > 1:
        executor = ProcessPoolExecutor(max_workers=_threads)
    logger.info(f"Pool de execucao iniciado com {_threads} processo(s)")
    return {'executor': executor, 'threads': _threads}


def shutdown_extensions():
    global executor
    if executor is not None:
        executor.shutdown(wait=True)
        executor = None


def get_threads() -> int:
    return _threads


def get_executor():
    return executor


def parallel_map(fn, items):
    """map ordenado; serial quando nao ha pool."""
    items = list(items)
    if executor is None:
        return [fn(item) for item in items]
    chunksize = max(1, len(items) // (4 * _threads))
    return list(executor.map(fn, items, chunksize=chunksize))


def run_stream(seed_root: int, index: int) -> np.random.Generator:
    # Philox e baseado em contador: fluxos independentes por (seed_root, index)
    ss = np.random.SeedSequence([int(seed_root), int(index)])
    return np.random.Generator(np.random.Philox(ss))


def seed_token(seed_root: int, index: int) -> int:
    ss = np.random.SeedSequence([int(seed_root), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
