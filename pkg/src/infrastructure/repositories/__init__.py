"""
Repositorios de acceso a datos en disco.
Cada módulo encapsula el formato de un tipo de artefacto:
corridas de entrenamiento, manifiestos, puntajes y caché de residuos, imágenes.
El resto del sistema no sabe cómo se serializan esos archivos.
"""

from src.infrastructure.repositories.checkpoints import (
    FORMATO_CHECKPOINT,
    ruta_checkpoint,
    guardar_checkpoint,
    cargar_checkpoint,
    listar_checkpoints,
    ultimo_checkpoint,
    guardar_config,
    cargar_config,
    RegistroEntrenamiento,
)

from src.infrastructure.repositories.manifiestos import (
    ARCHIVO_MANIFIESTO,
    guardar_manifiesto,
    cargar_manifiesto,
    cargar_mapa_etiquetas,
)

from src.infrastructure.repositories.puntuaciones import (
    COLUMNAS_PUNTAJES,
    fila_de_puntaje,
    guardar_puntajes,
    cargar_puntajes,
    registros_evaluacion,
    guardar_residuos,
    iterar_residuos,
)

from src.infrastructure.repositories.imagenes import (
    escala_compartida,
    a_grises,
    guardar_pgm,
    guardar_matriz_csv,
    exportar_figura,
)

__all__ = [
    "FORMATO_CHECKPOINT",
    "ruta_checkpoint",
    "guardar_checkpoint",
    "cargar_checkpoint",
    "listar_checkpoints",
    "ultimo_checkpoint",
    "guardar_config",
    "cargar_config",
    "RegistroEntrenamiento",
    "ARCHIVO_MANIFIESTO",
    "guardar_manifiesto",
    "cargar_manifiesto",
    "cargar_mapa_etiquetas",
    "COLUMNAS_PUNTAJES",
    "fila_de_puntaje",
    "guardar_puntajes",
    "cargar_puntajes",
    "registros_evaluacion",
    "guardar_residuos",
    "iterar_residuos",
    "escala_compartida",
    "a_grises",
    "guardar_pgm",
    "guardar_matriz_csv",
    "exportar_figura",
]
