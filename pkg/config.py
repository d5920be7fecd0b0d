import os
from dotenv import load_dotenv
import logging

load_dotenv()

_log_handlers = [logging.StreamHandler()]
if os.getenv('LOG_TO_FILE', '').lower() in ('1', 'true', 'yes'):
    _log_handlers.append(logging.FileHandler('app.log'))
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=_log_handlers
)
logger = logging.getLogger(__name__)

SEED_ROOT = int(os.getenv('LIFETIME_SEED_ROOT', '20240611'))
THREADS = int(os.getenv('LIFETIME_THREADS', '4'))
# unidades: atualizacoes elementares de celula (N * passos, N * M * passos)
WORK_BUDGET = int(float(os.getenv('LIFETIME_WORK_BUDGET', '2e9')))
HORIZON_CAP = int(float(os.getenv('LIFETIME_HORIZON_CAP', '1e10')))
OUTPUT_DIR = os.getenv('LIFETIME_OUTPUT_DIR', 'resultados')

# Tolerancias de tamanho finito (escolhas de engenharia, nao taxas teoricas)
DEFAULT_TOLERANCES = {
    'meagre_mean': 0.05,
    'meagre_variance': 0.10,
    'meagre_atom': 0.02,
    'meagre_concentration': 0.95,
    'confined_ks': 0.07,
    'synthetic_ks': 0.05,
    'condition_quantity': 0.05,
    'critical_mean': 0.05,
    'critical_mgf': 0.05,
    'critical_mc_mean': 0.10,
    'critical_mc_limit_mean': 0.15,
    'critical_mc_limit_variance': 0.30,
    'sweep_meagre_low': 1.8,
    'sweep_meagre_high': 2.2,
    'sweep_critical': 0.10,
    'exact': 1e-10,
}

MEAGRE_THRESHOLD = 0.05
CONFINED_THRESHOLD = 1.5
