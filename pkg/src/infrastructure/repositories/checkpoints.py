"""
Repositorio de corridas de entrenamiento.

Layout de un directorio de corrida:
  run_dir/ckpt_{step}.bin       checkpoint (torch.save de un dict)
  run_dir/config.yaml           snapshot de la configuración
  run_dir/training_log.csv      step, loss, wall_ms

El checkpoint embebe FORMATO_CHECKPOINT: un archivo de otra versión se
rechaza en lugar de cargarse a medias.
"""

import os
import re
from pathlib import Path

import pandas as pd
import torch
import yaml

from src.shared.exceptions import ErrorCheckpoint
from src.shared.logger import obtener_logger

logger = obtener_logger("checkpoints")

FORMATO_CHECKPOINT = 1

ARCHIVO_CONFIG = "config.yaml"
ARCHIVO_LOG = "training_log.csv"
COLUMNAS_LOG = ["step", "loss", "wall_ms"]

_PATRON_CHECKPOINT = re.compile(r"^ckpt_(\d+)\.bin$")


def ruta_checkpoint(run_dir, step: int) -> Path:
    return Path(run_dir) / f"ckpt_{step}.bin"


def guardar_checkpoint(run_dir, step: int, contenido: dict) -> Path:
    """
    Escribe el checkpoint del paso dado. Se escribe a un temporal y se
    renombra, así un corte a mitad de escritura no deja un archivo truncado
    con el nombre definitivo.
    """
    destino = ruta_checkpoint(run_dir, step)
    temporal = destino.with_suffix(".tmp")
    try:
        destino.parent.mkdir(parents=True, exist_ok=True)
        torch.save({"format_version": FORMATO_CHECKPOINT, "step": step, **contenido}, temporal)
        os.replace(temporal, destino)
    except OSError as e:
        raise ErrorCheckpoint(f"No se pudo escribir el checkpoint '{destino}': {e}") from e

    logger.info(f"Checkpoint guardado: {destino}")
    return destino


def cargar_checkpoint(path, map_location="cpu") -> dict:
    """
    :raises ErrorCheckpoint: archivo ilegible o de otra versión de formato
    """
    try:
        contenido = torch.load(path, map_location=map_location, weights_only=True)
    except (OSError, RuntimeError, EOFError) as e:
        raise ErrorCheckpoint(f"No se pudo leer el checkpoint '{path}': {e}") from e

    version = contenido.get("format_version") if isinstance(contenido, dict) else None
    if version != FORMATO_CHECKPOINT:
        raise ErrorCheckpoint(
            f"'{path}' tiene formato {version}, esta versión lee el formato {FORMATO_CHECKPOINT}"
        )
    return contenido


def listar_checkpoints(run_dir) -> list:
    """Checkpoints del directorio ordenados por paso."""
    directorio = Path(run_dir)
    if not directorio.is_dir():
        return []
    encontrados = []
    for archivo in directorio.iterdir():
        coincidencia = _PATRON_CHECKPOINT.match(archivo.name)
        if coincidencia:
            encontrados.append((int(coincidencia.group(1)), archivo))
    return [archivo for _, archivo in sorted(encontrados)]


def ultimo_checkpoint(run_dir) -> Path | None:
    checkpoints = listar_checkpoints(run_dir)
    return checkpoints[-1] if checkpoints else None


def guardar_config(run_dir, config: dict) -> Path:
    destino = Path(run_dir) / ARCHIVO_CONFIG
    try:
        destino.parent.mkdir(parents=True, exist_ok=True)
        with open(destino, "w", encoding="utf-8") as f:
            yaml.safe_dump(config, f, sort_keys=False, allow_unicode=True)
    except OSError as e:
        raise ErrorCheckpoint(f"No se pudo escribir '{destino}': {e}") from e
    return destino


def cargar_config(run_dir) -> dict:
    origen = Path(run_dir) / ARCHIVO_CONFIG
    if not origen.is_file():
        raise ErrorCheckpoint(f"La corrida '{run_dir}' no tiene {ARCHIVO_CONFIG}")
    with open(origen, encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


class RegistroEntrenamiento:
    """
    Log de entrenamiento en CSV. Las filas se acumulan en memoria y se
    agregan al archivo en cada flush (el trainer hace flush junto con
    cada checkpoint).
    """

    def __init__(self, run_dir):
        self.ruta = Path(run_dir) / ARCHIVO_LOG
        self.pendientes = []

    def agregar(self, step: int, loss: float, wall_ms: float) -> None:
        self.pendientes.append({"step": step, "loss": loss, "wall_ms": wall_ms})

    def flush(self) -> None:
        if not self.pendientes:
            return
        try:
            self.ruta.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame(self.pendientes, columns=COLUMNAS_LOG).to_csv(
                self.ruta, mode="a", header=not self.ruta.exists(), index=False
            )
        except OSError as e:
            raise ErrorCheckpoint(f"No se pudo escribir el log '{self.ruta}': {e}") from e
        self.pendientes = []

    def leer(self) -> pd.DataFrame:
        if not self.ruta.exists():
            return pd.DataFrame(columns=COLUMNAS_LOG)
        return pd.read_csv(self.ruta)

    def truncar(self, hasta_step: int) -> None:
        """Descarta filas posteriores a hasta_step (al reanudar desde un checkpoint anterior)."""
        self.pendientes = [fila for fila in self.pendientes if fila["step"] <= hasta_step]
        if self.ruta.exists():
            log = self.leer()
            log[log["step"] <= hasta_step].to_csv(self.ruta, index=False)
