"""
Repositorio de manifiestos de dataset (CSV).

Columnas obligatorias: clip_id, path, machine_type, section, domain, split, label.
Los manifiestos del corpus sintético agregan la verdad de terreno de cada
anomalía: kind, band_lo_hz, band_hi_hz, onset_s, offset_s.
"""

from pathlib import Path

import pandas as pd

from src.shared.exceptions import ErrorDataset
from src.shared.logger import obtener_logger

logger = obtener_logger("dataset")

ARCHIVO_MANIFIESTO = "manifest.csv"
COLUMNAS_OBLIGATORIAS = ["clip_id", "path", "machine_type", "section", "domain", "split", "label"]


def guardar_manifiesto(manifiesto: pd.DataFrame, path) -> Path:
    destino = Path(path)
    try:
        destino.parent.mkdir(parents=True, exist_ok=True)
        manifiesto.to_csv(destino, index=False)
    except OSError as e:
        raise ErrorDataset(f"No se pudo escribir el manifiesto '{destino}': {e}") from e
    logger.info(f"Manifiesto con {len(manifiesto)} clips escrito en {destino}")
    return destino


def cargar_manifiesto(path) -> pd.DataFrame:
    """
    :raises ErrorDataset: archivo inexistente o sin las columnas obligatorias
    """
    origen = Path(path)
    if not origen.is_file():
        raise ErrorDataset(f"No existe el manifiesto '{origen}'")
    # section como texto: "00" no es el número 0
    manifiesto = pd.read_csv(origen, dtype={"section": str, "clip_id": str, "path": str})
    faltantes = [c for c in COLUMNAS_OBLIGATORIAS if c not in manifiesto.columns]
    if faltantes:
        raise ErrorDataset(f"Al manifiesto '{origen}' le faltan columnas: {faltantes}")
    return manifiesto


def cargar_mapa_etiquetas(path) -> dict:
    """
    Lee un CSV file,domain,label que completa etiquetas de clips cuyo nombre
    no las trae. Devuelve nombre de archivo → {"domain": ..., "label": ...}.
    """
    origen = Path(path)
    if not origen.is_file():
        raise ErrorDataset(f"No existe el mapa de etiquetas '{origen}'")
    tabla = pd.read_csv(origen, dtype=str)
    if "file" not in tabla.columns:
        raise ErrorDataset(f"El mapa de etiquetas '{origen}' necesita una columna 'file'")
    mapa = {}
    for fila in tabla.to_dict("records"):
        mapa[fila["file"]] = {k: v for k, v in fila.items() if k in ("domain", "label") and isinstance(v, str)}
    return mapa
