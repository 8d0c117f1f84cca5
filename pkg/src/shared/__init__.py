"""
Módulo compartido con configuraciones y utilidades usadas por todos los componentes.
"""

# Exponemos las configuraciones de entorno más usadas
from .config import (
    DATASET_ROOT,
    OUTPUT_DIR,
    CACHE_DIR,
    LOG_LEVEL,
)

# Exponemos la función para obtener loggers configurados
from .logger import obtener_logger

from .exceptions import (
    ErrorSonoDiff,
    ErrorConfiguracion,
    ErrorAudio,
    FrecuenciaIncompatible,
    ClipDemasiadoCorto,
    FormaIncompatible,
    PasoFueraDeRango,
    SigmaInvalido,
    ForwardNoRegistrado,
    EntrenamientoDivergente,
    ErrorDataset,
    ErrorCheckpoint,
    ErrorEvaluacion,
    CacheVacia,
)

__all__ = [
    'DATASET_ROOT', 'OUTPUT_DIR', 'CACHE_DIR', 'LOG_LEVEL',
    'obtener_logger',
    'ErrorSonoDiff', 'ErrorConfiguracion', 'ErrorAudio', 'FrecuenciaIncompatible',
    'ClipDemasiadoCorto', 'FormaIncompatible', 'PasoFueraDeRango', 'SigmaInvalido',
    'ForwardNoRegistrado', 'EntrenamientoDivergente', 'ErrorDataset',
    'ErrorCheckpoint', 'ErrorEvaluacion', 'CacheVacia',
]
