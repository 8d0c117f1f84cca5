"""
CLI de SonoDiff: configuración de la corrida, comandos y presentación.
"""

from src.cli.run_config import (
    RunConfig,
    EvaluationConfig,
    PathsConfig,
    PRESET_TOY,
    cargar_run_config,
    run_config_desde_dict,
)

__all__ = [
    "RunConfig", "EvaluationConfig", "PathsConfig", "PRESET_TOY",
    "cargar_run_config", "run_config_desde_dict",
]
