"""
Métricas DCASE: AUC, AUC parcial, sAUC/tAUC y media armónica.
"""

from src.evaluation.metrics import (
    ScoreRecord,
    MetricReport,
    auc,
    pauc,
    hmean,
    machine_metrics,
    evaluate,
)

__all__ = [
    "ScoreRecord", "MetricReport",
    "auc", "pauc", "hmean", "machine_metrics", "evaluate",
]
