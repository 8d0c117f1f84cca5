"""
Configuración de entorno centralizada de SonoDiff.

Carga las variables de entorno desde el archivo .env y expone
constantes con valores por defecto para rutas, logging y Celery.

Los hiperparámetros del modelo NO viven acá: esos se leen del archivo
YAML de la corrida (ver src/cli/run_config.py). El entorno solo puede
sobreescribir rutas e infraestructura, nunca valores que cambien
el resultado numérico de un experimento.
"""

import logging
import os

from dotenv import load_dotenv

# Con este path explícito siempre encuentra el .env sin importar desde dónde se ejecute el programa.
load_dotenv(dotenv_path=os.path.join(os.path.dirname(__file__), '..', '..', '.env'))

# =============================================================================
# Rutas
# =============================================================================
# Raíz del dataset con layout <raiz>/<tipo_maquina>/{train,test}/<clip>.wav
DATASET_ROOT = os.getenv("SONODIFF_DATASET_ROOT", "")

# Directorio donde se crean los directorios de corrida (checkpoints, logs, snapshots)
OUTPUT_DIR = os.getenv("SONODIFF_OUTPUT_DIR", "runs")

# Caché de residuos x - x̂ por clip que consume el barrido de AF
CACHE_DIR = os.getenv("SONODIFF_CACHE_DIR", "")

# =============================================================================
# Logging
# =============================================================================
LOG_LEVEL = getattr(logging, os.getenv("SONODIFF_LOG_LEVEL", "INFO").upper(), logging.INFO)


def _niveles_por_componente(texto: str) -> dict:
    """Parsea "puntuacion=DEBUG,entrenamiento=WARNING" en {componente: nivel}. Ignora pares mal formados."""
    niveles = {}
    for par in texto.split(","):
        componente, _, nivel = par.partition("=")
        nivel = getattr(logging, nivel.strip().upper(), None)
        if componente.strip() and isinstance(nivel, int):
            niveles[componente.strip()] = nivel
    return niveles


LOG_LEVELS_POR_COMPONENTE = _niveles_por_componente(os.getenv("SONODIFF_LOG_LEVELS", ""))

# =============================================================================
# Celery (solo para --backend celery)
# =============================================================================
REDIS_HOST = os.getenv("REDIS_HOST", "localhost")
REDIS_PORT = int(os.getenv("REDIS_PORT", 6379))  # int() porque getenv devuelve strings
REDIS_DB   = int(os.getenv("REDIS_DB", 0))
REDIS_URL  = f"redis://{REDIS_HOST}:{REDIS_PORT}/{REDIS_DB}"

CELERY_BROKER_URL     = os.getenv("CELERY_BROKER_URL", REDIS_URL)
CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND", REDIS_URL)

# Con eager las tareas se ejecutan en el mismo proceso: útil para tests
# y para depurar sin levantar Redis ni workers.
CELERY_TASK_ALWAYS_EAGER = os.getenv("CELERY_TASK_ALWAYS_EAGER", "false").lower() in ("1", "true", "yes")

# Timeout por clip al esperar resultados de los workers
CELERY_RESULT_TIMEOUT_SECONDS = int(os.getenv("CELERY_RESULT_TIMEOUT_SECONDS", 3600))

# Checkpoints que cada proceso worker mantiene cargados a la vez (LRU)
WORKER_MODELS_CACHED = int(os.getenv("SONODIFF_WORKER_MODELS_CACHED", 4))
