"""
Métricas de evaluación estilo DCASE.

  auc:   formulación de Mann-Whitney (empates valen 0.5), vía roc_auc_score
  pauc:  AUC contra los ⌈p·N⌉ normales con puntaje más alto (FPR ≤ p)
  hmean: media armónica de todas las métricas por máquina

Convenciones para sAUC/tAUC:
  domain_pure: normales del dominio vs anómalos del mismo dominio (default)
  mixed:       normales del dominio vs todos los anómalos de la máquina
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import hmean as scipy_hmean
from sklearn.metrics import roc_auc_score

from src.shared.exceptions import ErrorEvaluacion
from src.shared.logger import obtener_logger

logger = obtener_logger("evaluacion")

P_DEFAULT = 0.1
CONVENCIONES = ("domain_pure", "mixed")
DOMINIOS = ("source", "target")


@dataclass
class ScoreRecord:
    clip_id: str
    machine_type: str
    section: str
    domain: str
    label: str
    score: float


@dataclass
class MetricReport:
    # máquina → {"s_auc", "t_auc", "p_auc"}; NaN cuando el dominio no tiene datos
    per_machine: dict = field(default_factory=dict)
    # máquina → {"n_source_normal": n, "n_source_anomaly": n, ...}
    counts: dict = field(default_factory=dict)
    excluded: dict = field(default_factory=dict)
    hmean: float = float("nan")

    def to_frame(self) -> pd.DataFrame:
        filas = []
        for maquina, metricas in self.per_machine.items():
            filas.append({"machine_type": maquina, **metricas, **self.counts.get(maquina, {})})
        tabla = pd.DataFrame(filas)
        resumen = pd.DataFrame([{"machine_type": "all", "hmean": self.hmean}])
        return pd.concat([tabla, resumen], ignore_index=True)


def _validar_listas(normales, anomalos) -> tuple:
    normales = np.asarray(normales, dtype=np.float64).ravel()
    anomalos = np.asarray(anomalos, dtype=np.float64).ravel()
    if normales.size == 0 or anomalos.size == 0:
        raise ErrorEvaluacion(
            f"Se necesitan puntajes normales y anómalos (recibidos {normales.size} y {anomalos.size})"
        )
    return normales, anomalos


def auc(normal_scores, anomaly_scores) -> float:
    """Fracción de pares (normal, anómalo) con el anómalo por encima; empates 0.5."""
    normales, anomalos = _validar_listas(normal_scores, anomaly_scores)
    etiquetas = np.concatenate([np.zeros(normales.size), np.ones(anomalos.size)])
    return float(roc_auc_score(etiquetas, np.concatenate([normales, anomalos])))


def pauc(normal_scores, anomaly_scores, p: float = P_DEFAULT) -> float:
    """AUC restringido a FPR ∈ [0, p], normalizado a [0, 1]."""
    if not 0 < p <= 1:
        raise ErrorEvaluacion(f"p debe estar en (0, 1] (recibido {p})")
    normales, anomalos = _validar_listas(normal_scores, anomaly_scores)
    # el margen evita que p·N = 3.0000000004 pida un normal de más
    m = max(1, math.ceil(p * normales.size - 1e-9))
    peores = np.sort(normales)[::-1][:m]
    return auc(peores, anomalos)


def hmean(values) -> float:
    valores = np.asarray(values, dtype=np.float64).ravel()
    if valores.size == 0:
        raise ErrorEvaluacion("hmean de una lista vacía")
    if np.any(valores < 0):
        raise ErrorEvaluacion("hmean requiere valores no negativos")
    if np.any(valores == 0):
        return 0.0
    return float(scipy_hmean(valores))


def _separar(registros: list) -> dict:
    celdas = defaultdict(list)
    for r in registros:
        celdas[(r.domain, r.label)].append(r.score)
    return celdas


def machine_metrics(registros: list, p: float = P_DEFAULT, convention: str = "domain_pure") -> dict:
    """
    sAUC, tAUC y pAUC de los registros de una sola máquina.
    Un dominio sin ningún registro deja su métrica en NaN.

    :raises ErrorEvaluacion: si un dominio presente no tiene normales o anómalos
    """
    if convention not in CONVENCIONES:
        raise ErrorEvaluacion(f"Convención desconocida: '{convention}'")
    celdas = _separar(registros)
    todos_anomalos = celdas[("source", "anomaly")] + celdas[("target", "anomaly")]
    todos_normales = celdas[("source", "normal")] + celdas[("target", "normal")]

    metricas = {}
    for dominio, clave in (("source", "s_auc"), ("target", "t_auc")):
        normales = celdas[(dominio, "normal")]
        anomalos = celdas[(dominio, "anomaly")] if convention == "domain_pure" else todos_anomalos
        if not normales and not celdas[(dominio, "anomaly")]:
            metricas[clave] = float("nan")
            continue
        if not normales or not anomalos:
            raise ErrorEvaluacion(
                f"Celda incompleta en {dominio}: {len(normales)} normales, {len(anomalos)} anómalos"
            )
        metricas[clave] = auc(normales, anomalos)
    metricas["p_auc"] = pauc(todos_normales, todos_anomalos, p)
    return metricas


def evaluate(records: list, p: float = P_DEFAULT, convention: str = "domain_pure") -> MetricReport:
    """
    Métricas por máquina y hmean global.

    Registros con etiqueta desconocida se ignoran. Una máquina con una celda
    incompleta se excluye con un warning y queda registrada en report.excluded.
    """
    por_maquina = defaultdict(list)
    ignorados = 0
    for r in records:
        if r.label not in ("normal", "anomaly") or r.domain not in DOMINIOS:
            ignorados += 1
            continue
        por_maquina[r.machine_type].append(r)
    if ignorados:
        logger.warning(f"Se ignoraron {ignorados} registros sin etiqueta o dominio conocido")

    reporte = MetricReport()
    for maquina in sorted(por_maquina):
        registros = por_maquina[maquina]
        celdas = _separar(registros)
        reporte.counts[maquina] = {
            f"n_{dominio}_{etiqueta}": len(celdas[(dominio, etiqueta)])
            for dominio in DOMINIOS for etiqueta in ("normal", "anomaly")
        }
        try:
            reporte.per_machine[maquina] = machine_metrics(registros, p, convention)
        except ErrorEvaluacion as e:
            logger.warning(f"Máquina '{maquina}' excluida: {e}")
            reporte.excluded[maquina] = str(e)

    if not reporte.per_machine:
        raise ErrorEvaluacion("Ninguna máquina tiene datos suficientes para evaluar")

    valores = [v for metricas in reporte.per_machine.values() for v in metricas.values() if not math.isnan(v)]
    reporte.hmean = hmean(valores)
    return reporte
