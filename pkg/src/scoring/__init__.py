"""
Puntuación de anomalías: filtro de anomalías (TopK), MAE, puntuación de
clips completos y barrido de parámetros sobre residuos cacheados.
"""

from src.scoring.anomaly_filter import (
    AFConfig,
    AnomalyMap,
    K_FRACTION_DEFAULT,
    k_for,
    activation,
    topk_scores,
    af_score,
    mae_score,
)
from src.scoring.pipeline import (
    ScoringConfig,
    ClipScore,
    window_seeds,
    aggregate,
    score_clip,
    score_clips,
    overlap_average,
    localization_iou,
    rescore_residuals,
)
from src.scoring.sweep import CachedResiduals, default_k_grid, af_sweep

__all__ = [
    "AFConfig", "AnomalyMap", "K_FRACTION_DEFAULT",
    "k_for", "activation", "topk_scores", "af_score", "mae_score",
    "ScoringConfig", "ClipScore", "window_seeds", "aggregate",
    "score_clip", "score_clips", "overlap_average", "localization_iou", "rescore_residuals",
    "CachedResiduals", "default_k_grid", "af_sweep",
]
