"""
Repositorio de puntuaciones y de la caché de residuos.

  scores.csv                  una fila por clip puntuado
  <cache>/<clip>.npz          residuos x − x̂ (n_ventanas, W, W) de un clip + metadatos

La caché la escribe `score` y la lee `sweep`, que recalcula puntajes AF
sin volver a correr la difusión.
"""

from pathlib import Path

import numpy as np
import pandas as pd

from src.evaluation import ScoreRecord
from src.scoring import CachedResiduals
from src.shared.exceptions import CacheVacia, ErrorDataset, ErrorEvaluacion
from src.shared.logger import obtener_logger

logger = obtener_logger("puntuacion")

COLUMNAS_PUNTAJES = [
    "clip_id", "machine_type", "section", "domain", "label", "score", "method",
    "k_fraction", "use_relu", "calls_per_window", "wall_ms", "duration_s", "rtf", "seed",
]
_METADATOS_CACHE = ("clip_id", "machine_type", "section", "domain", "label")


def fila_de_puntaje(clip_score, meta, seed: int) -> dict:
    """Fila del CSV a partir de un ClipScore y el ClipMeta del clip."""
    return {
        "clip_id": clip_score.clip_id,
        "machine_type": meta.machine_type,
        "section": meta.section,
        "domain": meta.domain,
        "label": meta.label,
        "score": clip_score.score,
        "method": clip_score.method,
        "k_fraction": clip_score.k_fraction,
        "use_relu": clip_score.use_relu,
        "calls_per_window": clip_score.calls_per_window,
        "wall_ms": round(clip_score.wall_ms, 3),
        "duration_s": clip_score.duration_s,
        "rtf": clip_score.rtf,
        "seed": seed,
    }


def guardar_puntajes(filas: list, path) -> Path:
    destino = Path(path)
    try:
        destino.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(filas, columns=COLUMNAS_PUNTAJES).to_csv(destino, index=False)
    except OSError as e:
        raise ErrorDataset(f"No se pudo escribir '{destino}': {e}") from e
    logger.info(f"{len(filas)} puntajes escritos en {destino}")
    return destino


def cargar_puntajes(path) -> pd.DataFrame:
    origen = Path(path)
    if not origen.is_file():
        raise ErrorDataset(f"No existe el archivo de puntajes '{origen}'")
    tabla = pd.read_csv(origen, dtype={"section": str, "clip_id": str})
    faltantes = [c for c in ("clip_id", "score") if c not in tabla.columns]
    if faltantes:
        raise ErrorDataset(f"A '{origen}' le faltan columnas: {faltantes}")
    return tabla


def registros_evaluacion(puntajes: pd.DataFrame, manifiesto: pd.DataFrame | None = None) -> list:
    """
    ScoreRecords para evaluar. Si hay manifiesto, sus etiquetas y dominios
    mandan sobre los del CSV de puntajes.

    :raises ErrorEvaluacion: si ningún clip puntuado aparece en el manifiesto
    """
    tabla = puntajes
    if manifiesto is not None:
        columnas = ["clip_id", "machine_type", "section", "domain", "label"]
        tabla = puntajes[["clip_id", "score"]].merge(manifiesto[columnas], on="clip_id", how="inner")
        if tabla.empty:
            raise ErrorEvaluacion("Ningún clip de los puntajes aparece en el manifiesto")
        if len(tabla) < len(puntajes):
            logger.warning(f"{len(puntajes) - len(tabla)} clips puntuados no están en el manifiesto")

    return [
        ScoreRecord(
            clip_id=str(fila["clip_id"]), machine_type=str(fila["machine_type"]),
            section=str(fila["section"]), domain=str(fila["domain"]),
            label=str(fila["label"]), score=float(fila["score"]),
        )
        for fila in tabla.to_dict("records")
    ]


# =============================================================================
# Caché de residuos
# =============================================================================

def _archivo_cache(cache_dir, clip_id: str) -> Path:
    return Path(cache_dir) / (clip_id.replace("/", "__") + ".npz")


def guardar_residuos(cache_dir, residuos: np.ndarray, meta) -> Path:
    destino = _archivo_cache(cache_dir, meta.clip_id)
    try:
        destino.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(
            destino,
            residuals=np.asarray(residuos, dtype=np.float32),
            **{clave: np.array(getattr(meta, clave)) for clave in _METADATOS_CACHE},
        )
    except OSError as e:
        raise ErrorDataset(f"No se pudo escribir la caché '{destino}': {e}") from e
    return destino


def iterar_residuos(cache_dir, machine_types: list | None = None):
    """
    Recorre la caché de a un clip por vez, en orden de archivo (agrupado por
    máquina). Los residuos de un clip se leen recién cuando se lo pide.

    :raises CacheVacia: directorio inexistente o sin archivos .npz
    """
    directorio = Path(cache_dir)
    archivos = sorted(directorio.glob("*.npz")) if directorio.is_dir() else []
    if not archivos:
        raise CacheVacia(f"No hay residuos cacheados en '{directorio}'")
    logger.info(f"{len(archivos)} archivos en la caché '{directorio}'")
    return _clips_cacheados(archivos, machine_types)


def _clips_cacheados(archivos: list, machine_types: list | None):
    for archivo in archivos:
        with np.load(archivo, allow_pickle=False) as datos:
            meta = {clave: str(datos[clave]) for clave in _METADATOS_CACHE}
            if machine_types and meta["machine_type"] not in machine_types:
                continue
            residuos = datos["residuals"]
        yield CachedResiduals(residuals=residuos, **meta)
