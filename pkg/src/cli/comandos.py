"""
Comandos de la CLI de SonoDiff.

Cada cmd_* recibe argumentos ya resueltos (sin argparse) y devuelve lo que
produjo, para poder llamarlo desde tests o desde otro script. La CLI
(src/cli/cli.py) se encarga de parsear, mostrar y traducir errores a
códigos de salida.

Se entrena un modelo por tipo de máquina. Un directorio de corrida queda así:

  <output_dir>/<corrida>/config.yaml
  <output_dir>/<corrida>/<máquina>/config.yaml
  <output_dir>/<corrida>/<máquina>/ckpt_<paso>.bin
  <output_dir>/<corrida>/<máquina>/training_log.csv
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from src.audio import load_fbank, slide_windows
from src.dataset import SynthSpec, filtrar, ground_truth_mask, parse_filename, scan_dataset, synth_generate
from src.denoiser import UNetConfig
from src.diffusion import build_schedule, schedule_table
from src.evaluation import evaluate
from src.infrastructure import (
    ARCHIVO_MANIFIESTO,
    cargar_checkpoint,
    cargar_config,
    cargar_manifiesto,
    cargar_mapa_etiquetas,
    cargar_puntajes,
    exportar_figura,
    fila_de_puntaje,
    guardar_config,
    guardar_manifiesto,
    guardar_puntajes,
    guardar_residuos,
    iterar_residuos,
    listar_checkpoints,
    registros_evaluacion,
    ultimo_checkpoint,
)
from src.cli.run_config import RunConfig, cargar_run_config, run_config_desde_dict
from src.scoring import (
    AnomalyMap,
    ClipScore,
    af_sweep,
    default_k_grid,
    localization_iou,
    overlap_average,
    score_clip,
    score_clips,
)
from src.shared.config import CELERY_RESULT_TIMEOUT_SECONDS
from src.shared.exceptions import ErrorCheckpoint, ErrorConfiguracion, ErrorDataset, ErrorEvaluacion
from src.shared.logger import obtener_logger
from src.training import load_params, train_loop

logger = obtener_logger("cli")

BACKENDS = ("local", "celery")
SAMPLERS_BENCH = ("ddpm", "ddim")
CORRIDA_DEFAULT = "default"


# =============================================================================
# Helpers
# =============================================================================

def _raiz_dataset(rc: RunConfig, dataset=None) -> Path:
    raiz = dataset or rc.paths.dataset_root
    if not raiz:
        raise ErrorDataset("No se indicó el dataset (--dataset o SONODIFF_DATASET_ROOT)")
    return Path(raiz)


def _clips(rc: RunConfig, raiz: Path, machine_types=None) -> list:
    etiquetas = cargar_mapa_etiquetas(rc.paths.label_map) if rc.paths.label_map else None
    return scan_dataset(raiz, machine_types=machine_types, etiquetas=etiquetas)


def _directorio_corrida(rc: RunConfig, corrida: str) -> Path:
    return Path(rc.paths.output_dir or ".") / corrida


def resolver_checkpoints(checkpoint, machine_types: list) -> dict:
    """
    Máquina → checkpoint. Acepta un archivo ckpt_*.bin (se usa para todas
    las máquinas), el directorio de una máquina, o el directorio de una
    corrida con un subdirectorio por máquina (se toma el último checkpoint).

    :raises ErrorCheckpoint: si alguna máquina no tiene checkpoint
    """
    ruta = Path(checkpoint)
    if ruta.is_file():
        return {m: ruta for m in machine_types}
    if not ruta.is_dir():
        raise ErrorCheckpoint(f"No existe el checkpoint '{ruta}'")
    if listar_checkpoints(ruta):
        return {m: ultimo_checkpoint(ruta) for m in machine_types}

    resueltos = {}
    for maquina in machine_types:
        ultimo = ultimo_checkpoint(ruta / maquina)
        if ultimo is None:
            raise ErrorCheckpoint(f"La corrida '{ruta}' no tiene checkpoints para '{maquina}'")
        resueltos[maquina] = ultimo
    return resueltos


def config_de_corrida(checkpoint, config_path=None, toy: bool = False) -> RunConfig:
    """
    Configuración para puntuar: la del archivo indicado o, si no hay,
    el snapshot config.yaml guardado junto al checkpoint.
    """
    if config_path is not None:
        return cargar_run_config(config_path, toy=toy)
    ruta = Path(checkpoint)
    candidatos = [ruta.parent] if ruta.is_file() else [ruta, ruta.parent]
    for directorio in candidatos:
        if (directorio / "config.yaml").is_file():
            logger.info(f"Usando la configuración guardada en '{directorio}'")
            return run_config_desde_dict(cargar_config(directorio))
    logger.warning(f"No hay config.yaml junto a '{ruta}', se usan los defaults")
    return cargar_run_config(None, toy=toy)


def verificar_compatibilidad(rc: RunConfig, checkpoint) -> None:
    """
    :raises ErrorConfiguracion: si la arquitectura o el T del checkpoint no
        coinciden con la configuración (el U-Net no podría cargar esos pesos)
    """
    eco = cargar_checkpoint(checkpoint).get("config", {})
    try:
        unet_ckpt = UNetConfig(**eco["unet"])
        total_ckpt = int(eco["diffusion"]["total_steps"])
    except (KeyError, TypeError) as e:
        raise ErrorCheckpoint(f"El checkpoint '{checkpoint}' no trae su configuración: {e}") from e
    if unet_ckpt != rc.unet:
        raise ErrorConfiguracion(
            f"El checkpoint '{checkpoint}' es de otro U-Net (input {unet_ckpt.input_size}, "
            f"base {unet_ckpt.base_channels}) que la configuración (input {rc.unet.input_size}, "
            f"base {rc.unet.base_channels})"
        )
    if total_ckpt != rc.diffusion.total_steps:
        raise ErrorConfiguracion(
            f"El checkpoint se entrenó con T={total_ckpt}, la configuración usa T={rc.diffusion.total_steps}"
        )


def _config_para_worker(rc: RunConfig) -> dict:
    completo = rc.to_dict()
    return {s: completo[s] for s in ("features", "diffusion", "af", "scoring")}


def _puntuar_local(rc: RunConfig, clips: list, model, jobs: int, cache_dir: str) -> list:
    entradas = []
    for clip in clips:
        feature, duracion = load_fbank(clip.path, rc.features, clip_id=clip.clip_id)
        entradas.append((feature, clip.machine_type, duracion))

    def a_cache(indice: int, puntaje: ClipScore) -> None:
        # cada clip se escribe al terminar: los residuos no se acumulan en memoria
        guardar_residuos(cache_dir, puntaje.residuals, clips[indice])
        puntaje.residuals = None

    return score_clips(
        entradas, model, rc.diffusion, build_schedule(rc.diffusion), rc.af, rc.scoring,
        seed=rc.seed, jobs=jobs, keep_residuals=bool(cache_dir),
        on_scored=a_cache if cache_dir else None,
    )


def _puntuar_celery(rc: RunConfig, clips: list, checkpoint: Path, cache_dir: str) -> list:
    # import diferido: --backend local no necesita broker
    from src.workers.tasks import puntuar_clip

    config = _config_para_worker(rc)
    pendientes = [
        puntuar_clip.delay(str(checkpoint), clip.to_dict(), config, rc.seed, cache_dir)
        for clip in clips
    ]
    # se reúnen en el orden de envío
    return [ClipScore.from_dict(p.get(timeout=CELERY_RESULT_TIMEOUT_SECONDS)) for p in pendientes]


def puntuar_dataset(rc: RunConfig, clips: list, checkpoints: dict, jobs: int = 1,
                    backend: str = "local", cache_dir: str = "") -> list:
    """
    Puntúa los clips (agrupados por máquina, cada una con su modelo) y
    devuelve [(ClipMeta, ClipScore)] en el orden de clips.
    """
    if backend not in BACKENDS:
        raise ErrorConfiguracion(f"Backend desconocido: '{backend}'")

    resultados = {}
    for maquina in sorted({c.machine_type for c in clips}):
        grupo = [c for c in clips if c.machine_type == maquina]
        checkpoint = checkpoints[maquina]
        verificar_compatibilidad(rc, checkpoint)
        logger.info(f"Puntuando {len(grupo)} clips de '{maquina}' con {checkpoint} ({backend})")

        if backend == "celery":
            puntajes = _puntuar_celery(rc, grupo, checkpoint, cache_dir)
        else:
            puntajes = _puntuar_local(rc, grupo, load_params(checkpoint), jobs, cache_dir)

        for clip, puntaje in zip(grupo, puntajes):
            resultados[clip.clip_id] = (clip, puntaje)

    return [resultados[c.clip_id] for c in clips]


# =============================================================================
# generate
# =============================================================================

def cmd_generate(spec: SynthSpec, out) -> pd.DataFrame:
    """Genera el corpus sintético y su manifiesto en <out>/manifest.csv."""
    manifiesto = synth_generate(spec, out)
    guardar_manifiesto(manifiesto, Path(out) / ARCHIVO_MANIFIESTO)
    return manifiesto


# =============================================================================
# train
# =============================================================================

def cmd_train(rc: RunConfig, dataset=None, machine_types=None, corrida: str = CORRIDA_DEFAULT,
              resume: bool = False, device: str = "cpu") -> dict:
    """
    Entrena un modelo por tipo de máquina con los clips de train.

    :return: máquina → ruta del checkpoint final
    :raises ErrorDataset: dataset inexistente o máquina sin clips de train
    """
    raiz = _raiz_dataset(rc, dataset)
    clips = filtrar(_clips(rc, raiz, machine_types), split="train")
    run_dir = _directorio_corrida(rc, corrida)
    guardar_config(run_dir, rc.to_dict())

    maquinas = sorted({c.machine_type for c in clips})
    if not maquinas:
        raise ErrorDataset(f"'{raiz}' no tiene clips de entrenamiento")

    checkpoints = {}
    for maquina in maquinas:
        lotes = []
        for clip in filtrar(clips, machine_type=maquina):
            feature, _ = load_fbank(clip.path, rc.features, clip_id=clip.clip_id)
            lotes.append(slide_windows(feature, rc.features.window, rc.features.train_hop))

        directorio = run_dir / maquina
        desde = ultimo_checkpoint(directorio) if resume else None
        if resume and desde is None:
            logger.warning(f"'{maquina}': no hay checkpoint para reanudar, se entrena desde cero")

        logger.info(f"Entrenando '{maquina}' con {len(lotes)} clips en {directorio}")
        checkpoints[maquina] = train_loop(
            lotes, rc.train, rc.unet, rc.diffusion, directorio,
            resume_from=desde, config_snapshot=rc.to_dict(), device=device,
        )
    return checkpoints


# =============================================================================
# score
# =============================================================================

def cmd_score(rc: RunConfig, checkpoint, out, dataset=None, machine_types=None, jobs: int = 1,
              backend: str = "local", cache_dir: str | None = None) -> pd.DataFrame:
    """
    Puntúa todos los clips de test y escribe el CSV de puntajes.

    :param cache_dir: si no está vacío, guarda los residuos para `sweep`;
        None usa paths.cache_dir
    """
    raiz = _raiz_dataset(rc, dataset)
    clips = filtrar(_clips(rc, raiz, machine_types), split="test")
    if not clips:
        raise ErrorDataset(f"'{raiz}' no tiene clips de test")
    cache_dir = rc.paths.cache_dir if cache_dir is None else cache_dir

    checkpoints = resolver_checkpoints(checkpoint, sorted({c.machine_type for c in clips}))
    resultados = puntuar_dataset(rc, clips, checkpoints, jobs=jobs, backend=backend, cache_dir=cache_dir)

    filas = [fila_de_puntaje(puntaje, clip, rc.seed) for clip, puntaje in resultados]
    guardar_puntajes(filas, out)
    return pd.DataFrame(filas)


# =============================================================================
# eval
# =============================================================================

def cmd_eval(scores, manifest=None, p: float = 0.1, convention: str = "domain_pure", out=None):
    """
    Evalúa un CSV de puntajes. Con manifiesto, las etiquetas salen de él.

    :return: MetricReport
    """
    manifiesto = cargar_manifiesto(manifest) if manifest else None
    reporte = evaluate(registros_evaluacion(cargar_puntajes(scores), manifiesto), p=p, convention=convention)
    if out:
        destino = Path(out)
        destino.parent.mkdir(parents=True, exist_ok=True)
        reporte.to_frame().to_csv(destino, index=False)
        logger.info(f"Reporte escrito en {destino}")
    return reporte


# =============================================================================
# sweep
# =============================================================================

def cmd_sweep(rc: RunConfig, out, cache_dir=None, machine_types=None, step: float | None = None) -> pd.DataFrame:
    """Barre K y ReLU sobre los residuos cacheados por `score`."""
    directorio = cache_dir or rc.paths.cache_dir
    if not directorio:
        raise ErrorConfiguracion("No se indicó el directorio de caché (--cache o SONODIFF_CACHE_DIR)")
    entradas = iterar_residuos(directorio, machine_types)
    tabla = af_sweep(
        entradas,
        k_values=default_k_grid(step) if step else None,
        p=rc.evaluation.p,
        convention=rc.evaluation.convention,
        aggregation=rc.scoring.aggregation,
    )
    destino = Path(out)
    destino.parent.mkdir(parents=True, exist_ok=True)
    tabla.to_csv(destino, index=False)
    logger.info(f"Barrido de {len(tabla)} filas escrito en {destino}")
    return tabla


# =============================================================================
# viz
# =============================================================================

def _verdad_de(manifest, clip_id: str) -> dict | None:
    if not manifest:
        return None
    manifiesto = cargar_manifiesto(manifest)
    if "band_lo_hz" not in manifiesto.columns:
        return None
    filas = manifiesto[manifiesto["clip_id"] == clip_id]
    if filas.empty or pd.isna(filas.iloc[0]["band_lo_hz"]):
        return None
    return filas.iloc[0].to_dict()


def cmd_viz(rc: RunConfig, clip, checkpoint, out_dir, manifest=None) -> dict:
    """
    Exporta original, reconstrucción, mapa MAE y mapa AF de un clip.

    El clip debe estar en <raiz>/<máquina>/<split>/. Si hay manifiesto con
    verdad de terreno para el clip, se informa el IoU de localización.
    """
    ruta = Path(clip)
    if not ruta.is_file():
        raise ErrorDataset(f"No existe el clip '{ruta}'")
    meta = parse_filename(ruta, ruta.parent.parent.name, ruta.parent.name)
    ckpt = resolver_checkpoints(checkpoint, [meta.machine_type])[meta.machine_type]
    verificar_compatibilidad(rc, ckpt)

    feature, duracion = load_fbank(ruta, rc.features, clip_id=meta.clip_id)
    resultado = score_clip(
        feature, load_params(ckpt), rc.diffusion, build_schedule(rc.diffusion), rc.af,
        hop=rc.features.test_hop, scoring=replace(rc.scoring, method="af"), seed=rc.seed,
        machine_type=meta.machine_type, duration_s=duracion, keep_maps=True,
    )

    residuo = overlap_average(resultado.maps, feature.n_frames, attribute="residual")
    absolutos = [AnomalyMap(residual=np.abs(m.residual), filtered=m.filtered, window_origin=m.window_origin)
                 for m in resultado.maps]
    mapa_mae = overlap_average(absolutos, feature.n_frames, attribute="residual")
    mapa_af = overlap_average(resultado.maps, feature.n_frames, attribute="filtered")

    archivos = exportar_figura(out_dir, feature.values, feature.values - residuo, mapa_mae, mapa_af)
    salida = {"clip_id": meta.clip_id, "score": resultado.score, "files": archivos, "iou": None}

    verdad = _verdad_de(manifest, meta.clip_id)
    if verdad is not None:
        mascara = ground_truth_mask(verdad, rc.features, feature.n_frames)
        salida["iou"] = localization_iou(mapa_af, mascara)
    return salida


# =============================================================================
# bench
# =============================================================================

def _metricas_o_nan(filas: list, rc: RunConfig) -> dict:
    tabla = pd.DataFrame(filas)
    try:
        reporte = evaluate(registros_evaluacion(tabla), p=rc.evaluation.p, convention=rc.evaluation.convention)
    except ErrorEvaluacion as e:
        logger.warning(f"Sin métricas para el benchmark: {e}")
        return {"s_auc": np.nan, "t_auc": np.nan, "p_auc": np.nan, "hmean": np.nan}
    por_metrica = {
        m: float(np.nanmean([v[m] for v in reporte.per_machine.values()])) for m in ("s_auc", "t_auc", "p_auc")
    }
    return {**por_metrica, "hmean": reporte.hmean}


def cmd_bench(rc: RunConfig, checkpoint, out, dataset=None, machine_types=None, jobs: int = 1) -> tuple:
    """
    Puntúa el test con DDPM y con DDIM (misma semilla) y compara llamadas
    al denoiser, tiempo y RTF. Escribe además scores_<muestreador>.csv.

    :return: (tabla por muestreador, cocientes ddpm/ddim)
    """
    raiz = _raiz_dataset(rc, dataset)
    clips = filtrar(_clips(rc, raiz, machine_types), split="test")
    if not clips:
        raise ErrorDataset(f"'{raiz}' no tiene clips de test")
    checkpoints = resolver_checkpoints(checkpoint, sorted({c.machine_type for c in clips}))
    destino = Path(out)

    filas = []
    for sampler in SAMPLERS_BENCH:
        rc_sampler = replace(rc, diffusion=replace(rc.diffusion, sampler=sampler))
        resultados = puntuar_dataset(rc_sampler, clips, checkpoints, jobs=jobs)
        puntajes = [fila_de_puntaje(puntaje, clip, rc.seed) for clip, puntaje in resultados]
        guardar_puntajes(puntajes, destino.parent / f"scores_{sampler}.csv")

        wall_s = sum(p.wall_ms for _, p in resultados) / 1000.0
        audio_s = sum(p.duration_s for _, p in resultados)
        filas.append({
            "sampler": sampler,
            "calls_per_window": resultados[0][1].calls_per_window,
            "wall_s": wall_s,
            "audio_s": audio_s,
            "rtf": wall_s / audio_s if audio_s > 0 else np.nan,
            **_metricas_o_nan(puntajes, rc),
        })

    tabla = pd.DataFrame(filas)
    ddpm, ddim = tabla.iloc[0], tabla.iloc[1]
    cocientes = {
        "calls": ddpm["calls_per_window"] / ddim["calls_per_window"],
        "wall": ddpm["wall_s"] / ddim["wall_s"] if ddim["wall_s"] > 0 else np.nan,
        "rtf": ddpm["rtf"] / ddim["rtf"] if ddim["rtf"] > 0 else np.nan,
    }
    destino.parent.mkdir(parents=True, exist_ok=True)
    tabla.to_csv(destino, index=False)
    logger.info(f"Benchmark escrito en {destino}")
    return tabla, cocientes


# =============================================================================
# schedule
# =============================================================================

def cmd_schedule(rc: RunConfig, out) -> pd.DataFrame:
    """Exporta t, β, α, ᾱ y β̃ del schedule configurado."""
    tabla = pd.DataFrame(schedule_table(build_schedule(rc.diffusion)))
    destino = Path(out)
    destino.parent.mkdir(parents=True, exist_ok=True)
    tabla.to_csv(destino, index=False)
    return tabla
