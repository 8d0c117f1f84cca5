"""
Paquete de infraestructura de SonoDiff.

Estructura interna:
  repositories/ → lectura y escritura de artefactos en disco
                  (checkpoints, manifiestos, puntajes, caché de residuos, imágenes)

Todo se re-exporta desde aquí para que el resto del sistema
importe desde src.infrastructure sin conocer la estructura interna.
Si en el futuro se reorganiza internamente, los imports externos no se rompen.
"""

from src.infrastructure.repositories import (
    FORMATO_CHECKPOINT,
    ruta_checkpoint,
    guardar_checkpoint,
    cargar_checkpoint,
    listar_checkpoints,
    ultimo_checkpoint,
    guardar_config,
    cargar_config,
    RegistroEntrenamiento,
    ARCHIVO_MANIFIESTO,
    guardar_manifiesto,
    cargar_manifiesto,
    cargar_mapa_etiquetas,
    COLUMNAS_PUNTAJES,
    fila_de_puntaje,
    guardar_puntajes,
    cargar_puntajes,
    registros_evaluacion,
    guardar_residuos,
    iterar_residuos,
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
