"""
Puntuación de clips completos.

Cada clip se corta en ventanas con el hop de test, cada ventana se
corrompe hasta t̂ y se reconstruye con el muestreador configurado, y el
puntaje del clip es la agregación (media por defecto) de los puntajes
por ventana.

Cada ventana usa su propia semilla, derivada de (semilla global, clip,
índice de ventana): el resultado de un clip no depende del orden ni del
paralelismo con que se procesen los demás.
"""

import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from src.audio import FBankFeature, slide_windows
from src.denoiser import DenoiserParams, as_denoiser
from src.diffusion import DiffusionConfig, NoiseSchedule, reconstruct
from src.scoring.anomaly_filter import (
    AFConfig,
    AnomalyMap,
    activation,
    af_score,
    mae_score,
    topk_scores,
)
from src.shared.exceptions import ErrorConfiguracion
from src.shared.logger import obtener_logger

logger = obtener_logger("puntuacion")

METODOS = ("af", "mae")
AGREGACIONES = ("mean", "max")


@dataclass(frozen=True)
class ScoringConfig:
    method: str = "af"
    aggregation: str = "mean"
    test_hop: int = 5
    batch_size: int = 32

    def __post_init__(self):
        if self.method not in METODOS:
            raise ErrorConfiguracion(f"scoring.method desconocido: '{self.method}'")
        if self.aggregation not in AGREGACIONES:
            raise ErrorConfiguracion(f"scoring.aggregation desconocida: '{self.aggregation}'")
        if self.test_hop < 1 or self.batch_size < 1:
            raise ErrorConfiguracion("scoring.test_hop y scoring.batch_size deben ser >= 1")


@dataclass
class ClipScore:
    clip_id: str
    score: float
    window_scores: np.ndarray
    method: str
    k_fraction: float | None = None
    use_relu: bool | None = None
    machine_type: str | None = None
    calls_per_window: int = 0
    seeds: list = field(default_factory=list)
    wall_ms: float = 0.0
    duration_s: float = 0.0
    maps: list = field(default_factory=list, repr=False)
    residuals: np.ndarray | None = field(default=None, repr=False)
    n_frames: int = 0

    @property
    def rtf(self) -> float:
        """Tiempo de inferencia sobre duración del audio."""
        return (self.wall_ms / 1000.0) / self.duration_s if self.duration_s > 0 else float("nan")

    def to_dict(self) -> dict:
        """Versión serializable a JSON (sin mapas ni residuos), para los workers."""
        return {
            "clip_id": self.clip_id,
            "score": self.score,
            "window_scores": self.window_scores.tolist(),
            "method": self.method,
            "k_fraction": self.k_fraction,
            "use_relu": self.use_relu,
            "machine_type": self.machine_type,
            "calls_per_window": self.calls_per_window,
            "seeds": list(self.seeds),
            "wall_ms": self.wall_ms,
            "duration_s": self.duration_s,
            "n_frames": self.n_frames,
        }

    @classmethod
    def from_dict(cls, datos: dict) -> "ClipScore":
        return cls(**{**datos, "window_scores": np.asarray(datos["window_scores"], dtype=np.float64)})


def window_seeds(seed: int, clip_id: str, n_windows: int) -> list:
    """Una semilla por ventana, derivada de forma estable de (seed, clip, índice)."""
    base = [int(seed), zlib.crc32(clip_id.encode("utf-8"))]
    return [int(np.random.SeedSequence(base + [i]).generate_state(1)[0]) for i in range(n_windows)]


def aggregate(window_scores: np.ndarray, aggregation: str = "mean") -> float:
    return float(np.max(window_scores) if aggregation == "max" else np.mean(window_scores))


def score_clip(f: FBankFeature, model, diff: DiffusionConfig, sched: NoiseSchedule, af: AFConfig,
               hop: int = 5, scoring: ScoringConfig | None = None, seed: int = 0,
               machine_type: str | None = None, duration_s: float = 0.0,
               keep_maps: bool = False, keep_residuals: bool = False) -> ClipScore:
    """
    Puntaje de anomalía de un clip.

    :param model: DenoiserParams (se usan los pesos EMA) o una función ε̂(x_t, t)
    :param hop: hop de ventaneo en frames (5 en test)
    :param keep_maps: guarda un AnomalyMap por ventana para visualizar
    :param keep_residuals: guarda los residuos (n, W, W) en float32 para el barrido de AF
    """
    scoring = scoring or ScoringConfig(test_hop=hop)
    denoiser = as_denoiser(model, use_ema=True) if isinstance(model, DenoiserParams) else model
    af_maquina = af.for_machine(machine_type)

    inicio = time.perf_counter()
    ventanas = slide_windows(f, f.n_mels, hop)
    semillas = window_seeds(seed, f.clip_id, len(ventanas))

    puntajes, mapas, residuos = [], [], []
    llamadas = 0
    for desde in range(0, len(ventanas), scoring.batch_size):
        hasta = desde + scoring.batch_size
        lote = ventanas.windows[desde:hasta]
        rec = reconstruct(lote, diff, sched, denoiser, seed=semillas[desde:hasta])
        llamadas = rec.denoiser_calls

        for i, (x, x_hat) in enumerate(zip(lote, rec.x_hat)):
            origen = int(ventanas.origin_frames[desde + i])
            if scoring.method == "mae":
                puntajes.append(mae_score(x, x_hat))
                mapa = None
            else:
                puntaje, mapa = af_score(x, x_hat, af_maquina, window_origin=origen)
                puntajes.append(puntaje)
            if keep_maps:
                if mapa is None:
                    residuo = x.astype(np.float64) - x_hat
                    mapa = AnomalyMap(residual=residuo, filtered=np.abs(residuo), window_origin=origen)
                mapas.append(mapa)
            if keep_residuals:
                residuo = np.asarray(x, dtype=np.float64) - np.asarray(x_hat, dtype=np.float64)
                residuos.append(residuo.astype(np.float32))

    window_scores = np.asarray(puntajes, dtype=np.float64)
    wall_ms = (time.perf_counter() - inicio) * 1000.0
    logger.debug(f"{f.clip_id}: {len(ventanas)} ventanas, {llamadas} llamadas por ventana, {wall_ms:.0f} ms")

    return ClipScore(
        clip_id=f.clip_id,
        score=aggregate(window_scores, scoring.aggregation),
        window_scores=window_scores,
        method=scoring.method,
        k_fraction=af_maquina.k_fraction if scoring.method == "af" else None,
        use_relu=af_maquina.use_relu if scoring.method == "af" else None,
        machine_type=machine_type,
        calls_per_window=llamadas,
        seeds=semillas,
        wall_ms=wall_ms,
        duration_s=duration_s,
        maps=mapas,
        residuals=np.stack(residuos) if keep_residuals else None,
        n_frames=f.n_frames,
    )


def score_clips(features: list, model, diff: DiffusionConfig, sched: NoiseSchedule, af: AFConfig,
                scoring: ScoringConfig, seed: int = 0, jobs: int = 1,
                on_scored: Callable[[int, ClipScore], None] | None = None, **kwargs) -> list:
    """
    Puntúa varios clips en un pool de threads. features es una lista de
    (FBankFeature, machine_type, duration_s); el resultado respeta ese orden.

    :param on_scored: se llama con (índice, ClipScore) apenas termina cada clip,
        en el thread que lo puntuó; puede vaciar los residuos después de guardarlos
    """
    def puntuar(indice_item):
        indice, (feature, maquina, duracion) = indice_item
        resultado = score_clip(feature, model, diff, sched, af, hop=scoring.test_hop, scoring=scoring,
                               seed=seed, machine_type=maquina, duration_s=duracion, **kwargs)
        if on_scored is not None:
            on_scored(indice, resultado)
        return resultado

    items = list(enumerate(features))
    if jobs <= 1:
        return [puntuar(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(puntuar, items))


def overlap_average(maps: list, n_frames: int, attribute: str = "filtered") -> np.ndarray:
    """
    Une mapas por ventana en una matriz F×T promediando donde las ventanas
    se superponen. Las columnas de padding (más allá de n_frames) se descartan.
    """
    if not maps:
        raise ErrorConfiguracion("overlap_average requiere al menos un mapa")
    alto, ancho = getattr(maps[0], attribute).shape
    largo = max(n_frames, max(m.window_origin for m in maps) + ancho)
    acumulado = np.zeros((alto, largo))
    cobertura = np.zeros(largo)
    for mapa in maps:
        acumulado[:, mapa.window_origin:mapa.window_origin + ancho] += getattr(mapa, attribute)
        cobertura[mapa.window_origin:mapa.window_origin + ancho] += 1
    return (acumulado / np.maximum(cobertura, 1))[:, :n_frames]


def localization_iou(anomaly_map: np.ndarray, mask: np.ndarray, threshold_fraction: float = 0.5) -> float:
    """
    IoU entre la región brillante del mapa (valores ≥ threshold_fraction · máximo)
    y la máscara de verdad de terreno. Un mapa todo en cero no predice nada.
    """
    anomaly_map = np.asarray(anomaly_map, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if anomaly_map.shape != mask.shape:
        raise ErrorConfiguracion(f"Mapa {anomaly_map.shape} y máscara {mask.shape} no coinciden")

    maximo = anomaly_map.max()
    prediccion = anomaly_map >= threshold_fraction * maximo if maximo > 0 else np.zeros_like(mask)
    union = np.logical_or(prediccion, mask).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(prediccion, mask).sum() / union)


def rescore_residuals(residuals: np.ndarray, k_fraction: float, use_relu: bool,
                      aggregation: str = "mean") -> float:
    """Puntaje AF de un clip a partir de sus residuos cacheados, sin volver a difundir."""
    d = activation(residuals.astype(np.float64).reshape(len(residuals), -1), use_relu)
    return aggregate(topk_scores(d, k_fraction), aggregation)
