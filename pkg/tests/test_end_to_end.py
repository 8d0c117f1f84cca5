"""
Experimentos de escritorio de extremo a extremo con el preset toy.

Entrenan 2000 pasos por corpus: se excluyen por defecto, correr con
`pytest -m slow`.
"""

from dataclasses import replace

import numpy as np
import pytest

from src.cli.comandos import cmd_bench, cmd_generate, cmd_score, cmd_train, cmd_viz
from src.cli.run_config import cargar_run_config
from src.dataset import SynthSpec
from src.evaluation import auc
from src.infrastructure import cargar_manifiesto

pytestmark = pytest.mark.slow


def _corrida(base, kind: str, monkeypatch):
    monkeypatch.setenv("SONODIFF_OUTPUT_DIR", str(base / "runs"))
    corpus = base / "corpus"
    cmd_generate(SynthSpec(anomaly_kind=kind, seed=1), corpus)
    rc = cargar_run_config(None, toy=True)
    rc = replace(rc, paths=replace(rc.paths, dataset_root=str(corpus)))
    cmd_train(rc)
    return rc, corpus, base / "runs" / "default"


def _auc_de(tabla) -> float:
    return auc(tabla.loc[tabla["label"] == "normal", "score"], tabla.loc[tabla["label"] == "anomaly", "score"])


def test_tono_agregado_se_detecta(tmp_path, monkeypatch):
    rc, corpus, run = _corrida(tmp_path, "added_tone", monkeypatch)
    tabla = cmd_score(rc, run, tmp_path / "scores.csv", cache_dir="")
    assert _auc_de(tabla) >= 0.9

    # localización sobre los clips anómalos
    manifiesto = cargar_manifiesto(corpus / "manifest.csv")
    anomalos = manifiesto[manifiesto["label"] == "anomaly"]
    ious = [
        cmd_viz(rc, corpus / fila["path"], run, tmp_path / "viz" / str(i), manifest=corpus / "manifest.csv")["iou"]
        for i, fila in enumerate(anomalos.to_dict("records"))
    ]
    assert np.mean(np.asarray(ious) > 0.3) >= 0.8


def test_banda_eliminada_af_con_relu_supera_a_mae(tmp_path, monkeypatch):
    rc, _, run = _corrida(tmp_path, "dropped_band", monkeypatch)
    con_af = replace(rc, af=replace(rc.af, k_fraction=0.1, use_relu=True))
    sin_af = replace(rc, scoring=replace(rc.scoring, method="mae"))
    auc_af = _auc_de(cmd_score(con_af, run, tmp_path / "af.csv", cache_dir=""))
    auc_mae = _auc_de(cmd_score(sin_af, run, tmp_path / "mae.csv", cache_dir=""))
    assert auc_af >= auc_mae


def test_ddim_es_mas_rapido_que_ddpm(tmp_path, monkeypatch):
    rc, _, run = _corrida(tmp_path, "added_tone", monkeypatch)
    tabla, cocientes = cmd_bench(rc, run, tmp_path / "bench.csv", jobs=1)
    assert tabla["calls_per_window"].tolist() == [280, 70]
    assert cocientes["calls"] == 4.0
    assert cocientes["wall"] >= 2.0
