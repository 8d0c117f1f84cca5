"""
Exportación de matrices F×T como imágenes PGM (P5) y CSV.

Cada par de imágenes que se compara (original / reconstrucción, mapa MAE /
mapa AF) comparte la misma escala de intensidad, así el brillo es
comparable entre ambas. Las frecuencias bajas quedan abajo.
"""

from pathlib import Path

import numpy as np
import pandas as pd
from PIL import Image

from src.shared.exceptions import ErrorDataset
from src.shared.logger import obtener_logger

logger = obtener_logger("visualizacion")


def escala_compartida(*matrices) -> tuple:
    return (float(min(np.min(m) for m in matrices)), float(max(np.max(m) for m in matrices)))


def a_grises(matriz: np.ndarray, escala: tuple) -> np.ndarray:
    """Lleva la matriz a uint8 en [0, 255] según (mínimo, máximo); una escala nula da negro."""
    minimo, maximo = escala
    if maximo <= minimo:
        return np.zeros(matriz.shape, dtype=np.uint8)
    normalizada = (np.asarray(matriz, dtype=np.float64) - minimo) / (maximo - minimo)
    return np.round(np.clip(normalizada, 0.0, 1.0) * 255).astype(np.uint8)


def guardar_pgm(matriz: np.ndarray, path, escala: tuple) -> Path:
    destino = Path(path)
    try:
        destino.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(np.flipud(a_grises(matriz, escala))).save(destino, format="PPM")
    except OSError as e:
        raise ErrorDataset(f"No se pudo escribir '{destino}': {e}") from e
    return destino


def guardar_matriz_csv(matriz: np.ndarray, path) -> Path:
    destino = Path(path)
    tabla = pd.DataFrame(np.asarray(matriz), columns=[f"t{i}" for i in range(matriz.shape[1])])
    try:
        destino.parent.mkdir(parents=True, exist_ok=True)
        tabla.to_csv(destino, index_label="mel", float_format="%.6f")
    except OSError as e:
        raise ErrorDataset(f"No se pudo escribir '{destino}': {e}") from e
    return destino


def exportar_figura(out_dir, original: np.ndarray, reconstruccion: np.ndarray,
                    mapa_mae: np.ndarray, mapa_af: np.ndarray, prefijo: str = "") -> list:
    """
    Escribe las cuatro vistas de un clip: original.pgm, reconstruction.pgm,
    mae_map.pgm y af_map.pgm, cada una con su CSV.
    """
    directorio = Path(out_dir)
    pares = [
        (("original", original), ("reconstruction", reconstruccion)),
        (("mae_map", mapa_mae), ("af_map", mapa_af)),
    ]
    escritos = []
    for par in pares:
        escala = escala_compartida(*(m for _, m in par))
        for nombre, matriz in par:
            escritos.append(guardar_pgm(matriz, directorio / f"{prefijo}{nombre}.pgm", escala))
            escritos.append(guardar_matriz_csv(matriz, directorio / f"{prefijo}{nombre}.csv"))
    logger.info(f"Figura exportada en {directorio}")
    return escritos
