"""
Tareas distribuidas de Celery para SonoDiff.

  - puntuar_clip: lee un WAV, lo puntúa con el checkpoint indicado y
    devuelve el ClipScore serializado. Si se pasa un directorio de caché,
    el worker escribe ahí los residuos del clip.

Los workers deben ver el mismo sistema de archivos que la CLI: las tareas
reciben rutas, no audio ni pesos.
"""

from functools import lru_cache

from src.audio import FeatureConfig, load_fbank
from src.dataset import ClipMeta
from src.diffusion import DiffusionConfig, build_schedule
from src.infrastructure import guardar_residuos
from src.scoring import AFConfig, ScoringConfig, score_clip
from src.shared.config import WORKER_MODELS_CACHED
from src.shared.logger import obtener_logger
from src.training import load_params
from src.workers.celery_app import celery_app

logger = obtener_logger("worker")

# Modelos ya cargados en este proceso, por ruta de checkpoint; los menos usados se descartan
@lru_cache(maxsize=WORKER_MODELS_CACHED)
def _modelo(checkpoint: str):
    logger.info(f"Cargando checkpoint {checkpoint}")
    return load_params(checkpoint)


@celery_app.task(bind=True)
def puntuar_clip(self, checkpoint: str, meta: dict, config: dict, seed: int,
                 cache_dir: str = "") -> dict:
    """
    Puntúa un clip de test.

    :param meta: ClipMeta.to_dict() del clip
    :param config: secciones features, diffusion, af y scoring de la corrida
    :return: ClipScore.to_dict()
    """
    clip = ClipMeta.from_dict(meta)
    try:
        feature_cfg = FeatureConfig(**config["features"])
        diff_cfg = DiffusionConfig(**config["diffusion"])
        feature, duracion = load_fbank(clip.path, feature_cfg, clip_id=clip.clip_id)
        resultado = score_clip(
            feature, _modelo(checkpoint), diff_cfg, build_schedule(diff_cfg),
            AFConfig(**config["af"]), hop=feature_cfg.test_hop,
            scoring=ScoringConfig(**config["scoring"]), seed=seed,
            machine_type=clip.machine_type, duration_s=duracion,
            keep_residuals=bool(cache_dir),
        )
        if cache_dir:
            guardar_residuos(cache_dir, resultado.residuals, clip)

    except OSError as e:
        # disco compartido momentáneamente no disponible
        logger.error(f"[task_id={self.request.id}] Error de E/S con {clip.clip_id}: {e}")
        raise self.retry(exc=e, countdown=5, max_retries=3)

    logger.info(
        f"[task_id={self.request.id}] {clip.clip_id}: score {resultado.score:.6f}, "
        f"{resultado.calls_per_window} llamadas por ventana, {resultado.wall_ms:.0f} ms"
    )
    return resultado.to_dict()
