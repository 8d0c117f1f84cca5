"""
Tests de la tarea Celery de puntuación, en modo eager (sin broker).
"""

import pandas as pd
import pytest

from src.cli.comandos import cmd_score, config_de_corrida
from src.dataset import scan_dataset
from src.scoring import ClipScore
from src.workers import celery_app
from src.shared.config import WORKER_MODELS_CACHED
from src.workers import tasks
from src.workers.tasks import puntuar_clip


@pytest.fixture
def eager():
    anterior = celery_app.conf.task_always_eager
    celery_app.conf.task_always_eager = True
    yield
    celery_app.conf.task_always_eager = anterior


def test_tarea_devuelve_un_clip_score_serializado(eager, corrida_tiny, tmp_path):
    rc = config_de_corrida(corrida_tiny["run"])
    clip = [c for c in scan_dataset(corrida_tiny["corpus"]) if c.split == "test"][0]
    config = {s: rc.to_dict()[s] for s in ("features", "diffusion", "af", "scoring")}

    datos = puntuar_clip.delay(str(corrida_tiny["checkpoint"]), clip.to_dict(), config, rc.seed,
                               str(tmp_path / "cache")).get()
    puntaje = ClipScore.from_dict(datos)
    assert puntaje.clip_id == clip.clip_id
    assert puntaje.calls_per_window == 5
    assert len(puntaje.window_scores) == len(puntaje.seeds)
    assert len(list((tmp_path / "cache").glob("*.npz"))) == 1


def test_backend_celery_igual_a_local(eager, corrida_tiny, tmp_path):
    rc = config_de_corrida(corrida_tiny["run"])
    cmd_score(rc, corrida_tiny["run"], tmp_path / "local.csv", backend="local", cache_dir="")
    cmd_score(rc, corrida_tiny["run"], tmp_path / "celery.csv", backend="celery", cache_dir="")
    local = pd.read_csv(tmp_path / "local.csv")
    distribuido = pd.read_csv(tmp_path / "celery.csv")
    assert local["clip_id"].tolist() == distribuido["clip_id"].tolist()
    assert local["score"].tolist() == distribuido["score"].tolist()


@pytest.fixture
def modelos_contados(monkeypatch):
    """Reemplaza la carga de checkpoints por una que registra cada lectura."""
    cargados = []

    def cargar(ruta):
        cargados.append(ruta)
        return object()

    monkeypatch.setattr(tasks, "load_params", cargar)
    tasks._modelo.cache_clear()
    yield cargados
    tasks._modelo.cache_clear()


def test_modelo_se_carga_una_vez_por_proceso(modelos_contados):
    assert tasks._modelo("runs/a/ckpt_10.bin") is tasks._modelo("runs/a/ckpt_10.bin")
    assert modelos_contados == ["runs/a/ckpt_10.bin"]


def test_modelos_en_memoria_acotados(modelos_contados):
    rutas = [f"runs/m{i}/ckpt_10.bin" for i in range(WORKER_MODELS_CACHED + 3)]
    for ruta in rutas:
        tasks._modelo(ruta)
    assert tasks._modelo.cache_info().currsize == WORKER_MODELS_CACHED

    # el primero ya fue descartado y se vuelve a leer
    tasks._modelo(rutas[0])
    assert modelos_contados.count(rutas[0]) == 2
