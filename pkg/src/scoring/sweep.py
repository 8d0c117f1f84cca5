"""
Barrido de parámetros del filtro de anomalías sobre residuos cacheados.

Para cada máquina y cada combinación (K, ReLU) se recalculan los puntajes
de todos los clips a partir de los residuos guardados por `score` y se
evalúan sAUC, tAUC y pAUC. No se vuelve a correr la difusión.
"""

from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from src.evaluation import ScoreRecord, auc, machine_metrics
from src.scoring.pipeline import rescore_residuals
from src.shared.exceptions import CacheVacia, ErrorEvaluacion
from src.shared.logger import obtener_logger

logger = obtener_logger("puntuacion")

PASO_K = 0.03
COLUMNAS_SWEEP = ["machine_type", "k_fraction", "use_relu", "s_auc", "t_auc", "p_auc", "auc"]


@dataclass
class CachedResiduals:
    clip_id: str
    machine_type: str
    section: str
    domain: str
    label: str
    residuals: np.ndarray


def default_k_grid(step: float = PASO_K) -> list:
    """0.03, 0.06, …, 0.99."""
    n = int(round(1.0 / step))
    return [round(i * step, 2) for i in range(1, n + 1) if i * step <= 1.0 + 1e-9]


def af_sweep(entries, k_values: list | None = None, relu_options=(False, True),
             p: float = 0.1, convention: str = "domain_pure", aggregation: str = "mean") -> pd.DataFrame:
    """
    Tabla de métricas por (máquina, K, ReLU).

    entries puede ser un iterador: cada clip se puntúa con toda la grilla
    apenas se lee y sus residuos no se retienen.

    La columna auc es el AUC de la máquina con todos los dominios juntos.
    Las métricas de un dominio sin datos quedan en NaN.

    :raises CacheVacia: si no hay residuos para recalcular
    """
    k_values = default_k_grid() if k_values is None else list(k_values)
    combinaciones = [(use_relu, k) for use_relu in relu_options for k in k_values]

    # máquina → [(entrada sin residuos, {(relu, K): puntaje})]
    por_maquina = {}
    for entrada in entries:
        if entrada.label not in ("normal", "anomaly"):
            continue
        puntajes = {
            (use_relu, k): rescore_residuals(entrada.residuals, k, use_relu, aggregation)
            for use_relu, k in combinaciones
        }
        por_maquina.setdefault(entrada.machine_type, []).append((replace(entrada, residuals=None), puntajes))
    if not por_maquina:
        raise CacheVacia("No hay residuos cacheados con etiqueta para barrer")

    filas = []
    for maquina in sorted(por_maquina):
        grupo = por_maquina[maquina]
        logger.info(f"Barriendo {maquina}: {len(grupo)} clips, {len(combinaciones)} combinaciones")
        for use_relu, k in combinaciones:
            registros = [
                ScoreRecord(
                    clip_id=e.clip_id, machine_type=maquina, section=e.section,
                    domain=e.domain, label=e.label, score=puntajes[(use_relu, k)],
                )
                for e, puntajes in grupo
            ]
            filas.append(_fila(maquina, k, use_relu, registros, p, convention))

    return pd.DataFrame(filas, columns=COLUMNAS_SWEEP)


def _fila(maquina: str, k: float, use_relu: bool, registros: list, p: float, convention: str) -> dict:
    fila = {"machine_type": maquina, "k_fraction": k, "use_relu": use_relu}
    try:
        fila.update(machine_metrics(registros, p, convention))
    except ErrorEvaluacion as e:
        logger.warning(f"{maquina} K={k} relu={use_relu}: {e}")
        fila.update({"s_auc": np.nan, "t_auc": np.nan, "p_auc": np.nan})

    normales = [r.score for r in registros if r.label == "normal"]
    anomalos = [r.score for r in registros if r.label == "anomaly"]
    fila["auc"] = auc(normales, anomalos) if normales and anomalos else np.nan
    return fila
