import os
import csv
import json
import math
from datetime import datetime
from fractions import Fraction
from typing import Dict, List, Sequence

import numpy as np

# Excecoes, serializadores e helpers compartilhados pelos modulos


class WorkbenchError(Exception):
    pass


class ModelError(WorkbenchError, ValueError):
    pass


class DomainError(WorkbenchError, ValueError):
    def __init__(self, message: str, boundary=None):
        super().__init__(message)
        self.boundary = boundary


class BudgetExceeded(WorkbenchError):
    def __init__(self, message: str, work=None, budget=None):
        super().__init__(message)
        self.work = work
        self.budget = budget


class HorizonExceeded(WorkbenchError):
    def __init__(self, message: str, steps=None, cap=None, run_index=None):
        super().__init__(message)
        self.steps = steps
        self.cap = cap
        self.run_index = run_index


class ConfigError(WorkbenchError):
    pass


class EmptySampleError(WorkbenchError, ValueError):
    pass


class ReportIOError(WorkbenchError, OSError):
    def __init__(self, message: str, path: str = ''):
        super().__init__(message)
        self.path = path


def check_budget(work: float, budget: int, what: str):
    if work > budget:
        raise BudgetExceeded(f"{what}: trabalho {work:.3g} excede o orcamento {budget:.3g}",
                             work=work, budget=budget)


def to_json_safe(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return 'nan'
        if math.isinf(v):
            return 'inf' if v > 0 else '-inf'
        return v
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [to_json_safe(v) for v in value.tolist()]
    if isinstance(value, datetime):
        return value.isoformat()
    if isinstance(value, dict):
        return {str(k): to_json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)):
        return [to_json_safe(v) for v in list(value)]
    if value is None or isinstance(value, (int, str)):
        return value
    return str(value)


def format_number(value) -> str:
    """17 algarismos significativos: ida e volta exata para binary64."""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return 'nan'
    if math.isinf(v):
        return 'inf' if v > 0 else '-inf'
    return f"{v:.17g}"


# ============================================================
# Estatisticas agregadas (soma em pares via numpy, ordem fixa)
# ============================================================

def sample_mean(values: Sequence[float]) -> float:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptySampleError("Amostra vazia")
    return float(np.sum(arr) / arr.size)


def sample_variance(values: Sequence[float]) -> float:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise EmptySampleError("Variancia exige ao menos 2 valores")
    mean = np.sum(arr) / arr.size
    return float(np.sum((arr - mean) ** 2) / (arr.size - 1))


def standard_error(values: Sequence[float]) -> float:
    return math.sqrt(sample_variance(values) / len(values))


# ============================================================
# Escrita de relatorios
# ============================================================

def write_json_file(path: str, payload: dict):
    try:
        folder = os.path.dirname(path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(to_json_safe(payload), f, ensure_ascii=False, indent=2, sort_keys=False)
            f.write('\n')
    except OSError as e:
        raise ReportIOError(f"Nao foi possivel escrever {path}: {e}", path=path) from e


def write_csv_file(path: str, columns: List[str], rows: List[Dict]):
    try:
        folder = os.path.dirname(path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                writer.writerow([row.get(c, '') for c in columns])
    except OSError as e:
        raise ReportIOError(f"Nao foi possivel escrever {path}: {e}", path=path) from e


def read_json_file(path: str) -> dict:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except OSError as e:
        raise ReportIOError(f"Nao foi possivel ler {path}: {e}", path=path) from e


# Estado global das campanhas (logs e progresso)
campaign_state = {
    'running': False,
    'regime': None,
    'progress': {'cells': 0, 'done': 0, 'passed': 0, 'failed': 0, 'skipped': 0},
    'logs': [],
    'error_logs': []
}


def reset_campaign_state(regime: str, cells: int):
    campaign_state['running'] = True
    campaign_state['regime'] = regime
    campaign_state['progress'] = {'cells': cells, 'done': 0, 'passed': 0, 'failed': 0, 'skipped': 0}
    campaign_state['logs'] = []
    campaign_state['error_logs'] = []
