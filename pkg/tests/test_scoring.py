"""
Tests de puntuación: filtro de anomalías, MAE, puntuación de clips y barrido.
"""

import math

import numpy as np
import pytest
import torch

from src.audio import FBankFeature, slide_windows
from src.diffusion import DiffusionConfig
from src.evaluation import auc
from src.scoring import (
    AFConfig,
    AnomalyMap,
    CachedResiduals,
    ScoringConfig,
    af_score,
    af_sweep,
    default_k_grid,
    k_for,
    localization_iou,
    mae_score,
    overlap_average,
    rescore_residuals,
    score_clip,
    score_clips,
    topk_scores,
    window_seeds,
)
from src.shared.exceptions import CacheVacia, ErrorConfiguracion, FormaIncompatible


# =============================================================================
# AFConfig
# =============================================================================

@pytest.mark.parametrize("k", [0.0, -0.1, 1.5])
def test_af_config_k_invalido(k):
    with pytest.raises(ErrorConfiguracion):
        AFConfig(k_fraction=k)


def test_af_config_tabla_por_maquina():
    cfg = AFConfig(per_machine={"fan": {"k_fraction": 0.3, "use_relu": True}, "valve": {"use_relu": False}})
    assert cfg.for_machine("fan") == AFConfig(k_fraction=0.3, use_relu=True)
    assert cfg.for_machine("valve") == AFConfig(k_fraction=0.1, use_relu=False)
    assert cfg.for_machine("gearbox") == AFConfig()
    assert cfg.for_machine(None) == AFConfig()


def test_af_config_tabla_con_claves_desconocidas():
    with pytest.raises(ErrorConfiguracion):
        AFConfig(per_machine={"fan": {"k": 0.3}})


def test_k_nunca_es_cero():
    assert k_for(0.001, 4) == 1
    assert k_for(0.5, 4) == 2
    assert k_for(1.0, 256) == 256


# =============================================================================
# af_score / mae_score
# =============================================================================

def test_af_residuo_nulo():
    x = np.random.default_rng(0).random((8, 8))
    puntaje, mapa = af_score(x, x.copy(), AFConfig())
    assert puntaje == 0.0
    assert not mapa.filtered.any()


def test_af_ejemplo_diagonal():
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    puntaje, mapa = af_score(x, np.zeros((2, 2)), AFConfig(k_fraction=0.5, use_relu=True))
    assert puntaje == 0.5
    np.testing.assert_array_equal(mapa.filtered, x)


def test_mae_ejemplo_diagonal():
    assert mae_score(np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros((2, 2))) == 0.5
    assert mae_score(np.ones((3, 3)), np.ones((3, 3))) == 0.0


def test_relu_ignora_sobreestimacion():
    rng = np.random.default_rng(1)
    x = rng.random((16, 16))
    x_hat = x + 0.1 + rng.random((16, 16))
    puntaje, _ = af_score(x, x_hat, AFConfig(k_fraction=0.1, use_relu=True))
    assert puntaje == 0.0
    assert mae_score(x, x_hat) > 0.1


def test_formas_distintas():
    with pytest.raises(FormaIncompatible):
        af_score(np.zeros((4, 4)), np.zeros((4, 5)), AFConfig())
    with pytest.raises(FormaIncompatible):
        mae_score(np.zeros((4, 4)), np.zeros((5, 4)))


def test_af_contra_ordenamiento_completo():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        x, x_hat = rng.random((16, 16)), rng.random((16, 16))
        k_fraction = float(rng.uniform(0.01, 1.0))
        use_relu = bool(rng.integers(2))
        puntaje, mapa = af_score(x, x_hat, AFConfig(k_fraction=k_fraction, use_relu=use_relu))

        d = (np.maximum(x - x_hat, 0.0) if use_relu else np.abs(x - x_hat)).ravel()
        k = max(1, round(k_fraction * 256))
        esperado = np.sort(d)[-k:].sum() / 256 if k < 256 else np.mean(d)
        assert puntaje == pytest.approx(esperado, rel=1e-12, abs=1e-15)

        seleccion = mapa.filtered[mapa.filtered != 0]
        assert seleccion.size <= math.ceil(k_fraction * 256)
        top = np.sort(d)[-k:]
        np.testing.assert_array_equal(np.sort(seleccion), top[top != 0])


def test_k_uno_sin_relu_es_mae():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x, x_hat = rng.random((16, 16)), rng.random((16, 16))
        puntaje, _ = af_score(x, x_hat, AFConfig(k_fraction=1.0))
        assert puntaje == pytest.approx(mae_score(x, x_hat), rel=1e-12, abs=1e-15)


def test_af_invariante_a_permutaciones():
    rng = np.random.default_rng(4)
    x, x_hat = rng.random((16, 16)), rng.random((16, 16))
    perm = rng.permutation(256)
    cfg = AFConfig(k_fraction=0.2, use_relu=True)
    original, _ = af_score(x, x_hat, cfg)
    permutado, _ = af_score(x.ravel()[perm].reshape(16, 16), x_hat.ravel()[perm].reshape(16, 16), cfg)
    assert permutado == pytest.approx(original, rel=1e-12)


def test_af_escala_lineal():
    rng = np.random.default_rng(5)
    x, x_hat = rng.random((16, 16)), rng.random((16, 16))
    cfg = AFConfig(k_fraction=0.15)
    base, _ = af_score(x, x_hat, cfg)
    escalado, _ = af_score(3.0 * x, 3.0 * x_hat, cfg)
    assert escalado == pytest.approx(3.0 * base, rel=1e-12)


def test_af_monotono():
    rng = np.random.default_rng(6)
    x, x_hat = rng.random((16, 16)), rng.random((16, 16))
    cfg = AFConfig(k_fraction=0.1, use_relu=True)
    base, mapa = af_score(x, x_hat, cfg)
    # aumentar el residuo en los píxeles seleccionados
    x_mayor = x + 0.5 * (mapa.filtered > 0)
    mayor, _ = af_score(x_mayor, x_hat, cfg)
    assert mayor >= base


def test_topk_filas_independientes():
    d = np.array([[4.0, 3.0, 2.0, 1.0], [1.0, 1.0, 1.0, 1.0]])
    np.testing.assert_allclose(topk_scores(d, 0.5), [7.0 / 4, 2.0 / 4])


# =============================================================================
# Puntuación de clips
# =============================================================================

def _feature(n_mels, n_frames, seed=0, clip_id="clip"):
    valores = np.random.default_rng(seed).random((n_mels, n_frames)).astype(np.float32)
    return FBankFeature(values=valores, clip_id=clip_id)


def _oraculo(x0: np.ndarray, sched):
    """Predice el ruido exacto que separa x_t de x0."""
    objetivo = torch.as_tensor(x0)

    def denoiser(x_t, t):
        ab = float(sched.alpha_bar[t])
        return (x_t - math.sqrt(ab) * objetivo) / math.sqrt(1.0 - ab)

    return denoiser


class DenoiserCero:
    def __init__(self):
        self.llamadas = 0

    def __call__(self, x, t):
        self.llamadas += 1
        return torch.zeros_like(x)


def test_clip_de_una_ventana(diff_cfg, sched):
    f = _feature(16, 16)
    resultado = score_clip(f, DenoiserCero(), diff_cfg, sched, AFConfig(), hop=5)
    assert resultado.window_scores.shape == (1,)
    assert resultado.score == resultado.window_scores[0]
    assert resultado.calls_per_window == 70
    assert resultado.method == "af"
    assert resultado.k_fraction == 0.1 and resultado.use_relu is False


def test_oraculo_puntua_cero(diff_cfg, sched):
    f = _feature(16, 26, seed=1)
    ventanas = slide_windows(f, 16, 5).windows
    resultado = score_clip(f, _oraculo(ventanas, sched), diff_cfg, sched, AFConfig(), hop=5)
    assert len(resultado.window_scores) == 3
    assert resultado.score == pytest.approx(0.0, abs=1e-3)


def test_oraculo_puntua_cero_con_mae(diff_cfg, sched):
    f = _feature(16, 16, seed=2)
    scoring = ScoringConfig(method="mae")
    resultado = score_clip(f, _oraculo(f.values, sched), diff_cfg, sched, AFConfig(), scoring=scoring)
    assert resultado.method == "mae"
    assert resultado.k_fraction is None
    assert resultado.score == pytest.approx(0.0, abs=1e-3)


def test_llamadas_ddpm(sched):
    diff = DiffusionConfig(sampler="ddpm")
    resultado = score_clip(_feature(16, 16), DenoiserCero(), diff, sched, AFConfig())
    assert resultado.calls_per_window == 280


def test_clip_determinista(diff_cfg, sched):
    f = _feature(16, 40, seed=3)
    denoiser = DenoiserCero()
    a = score_clip(f, denoiser, diff_cfg, sched, AFConfig(), seed=7)
    b = score_clip(f, denoiser, diff_cfg, sched, AFConfig(), seed=7)
    np.testing.assert_array_equal(a.window_scores, b.window_scores)
    assert a.seeds == b.seeds


def test_lote_no_cambia_puntajes(diff_cfg, sched):
    f = _feature(16, 40, seed=4)
    chico = score_clip(f, DenoiserCero(), diff_cfg, sched, AFConfig(), scoring=ScoringConfig(batch_size=2))
    grande = score_clip(f, DenoiserCero(), diff_cfg, sched, AFConfig(), scoring=ScoringConfig(batch_size=64))
    np.testing.assert_allclose(chico.window_scores, grande.window_scores, rtol=1e-6)


def test_agregacion_max(diff_cfg, sched):
    f = _feature(16, 40, seed=5)
    resultado = score_clip(f, DenoiserCero(), diff_cfg, sched, AFConfig(),
                           scoring=ScoringConfig(aggregation="max"))
    assert resultado.score == resultado.window_scores.max()


def test_mapas_y_residuos(diff_cfg, sched):
    f = _feature(16, 26, seed=6)
    resultado = score_clip(f, DenoiserCero(), diff_cfg, sched, AFConfig(),
                           keep_maps=True, keep_residuals=True)
    assert len(resultado.maps) == 3
    assert [m.window_origin for m in resultado.maps] == [0, 5, 10]
    assert resultado.residuals.shape == (3, 16, 16)
    assert resultado.residuals.dtype == np.float32
    assert rescore_residuals(resultado.residuals, 0.1, False) == pytest.approx(resultado.score, rel=1e-5)


def test_rtf(diff_cfg, sched):
    resultado = score_clip(_feature(16, 16), DenoiserCero(), diff_cfg, sched, AFConfig(), duration_s=2.0)
    assert resultado.rtf == pytest.approx(resultado.wall_ms / 2000.0)


def test_score_clips_respeta_orden(diff_cfg, sched):
    features = [(_feature(16, 20, seed=i, clip_id=f"c{i}"), "fan", 2.0) for i in range(4)]
    scoring = ScoringConfig()
    secuencial = score_clips(features, DenoiserCero(), diff_cfg, sched, AFConfig(), scoring, jobs=1)
    paralelo = score_clips(features, DenoiserCero(), diff_cfg, sched, AFConfig(), scoring, jobs=3)
    assert [r.clip_id for r in paralelo] == ["c0", "c1", "c2", "c3"]
    assert [r.score for r in paralelo] == [r.score for r in secuencial]


def test_score_clips_avisa_cada_clip_al_terminar(diff_cfg, sched):
    features = [(_feature(16, 20, seed=i, clip_id=f"c{i}"), "fan", 2.0) for i in range(3)]
    vistos = {}

    def vaciar(indice, puntaje):
        vistos[indice] = (puntaje.clip_id, puntaje.residuals.dtype)
        puntaje.residuals = None

    resultados = score_clips(features, DenoiserCero(), diff_cfg, sched, AFConfig(), ScoringConfig(),
                             jobs=2, keep_residuals=True, on_scored=vaciar)
    assert vistos == {i: (f"c{i}", np.float32) for i in range(3)}
    assert all(r.residuals is None for r in resultados)


def test_semillas_por_ventana():
    a = window_seeds(0, "clip_a", 5)
    assert a == window_seeds(0, "clip_a", 5)
    assert len(set(a)) == 5
    assert a != window_seeds(0, "clip_b", 5)
    assert a != window_seeds(1, "clip_a", 5)
    assert window_seeds(0, "clip_a", 3) == a[:3]


# =============================================================================
# Mapas
# =============================================================================

def test_overlap_promedia_superposiciones():
    mapas = [
        AnomalyMap(residual=np.ones((2, 4)), filtered=np.ones((2, 4)), window_origin=0),
        AnomalyMap(residual=np.ones((2, 4)), filtered=3 * np.ones((2, 4)), window_origin=2),
    ]
    unido = overlap_average(mapas, n_frames=5)
    np.testing.assert_allclose(unido[0], [1, 1, 2, 2, 3])
    assert unido.shape == (2, 5)


def test_iou():
    mascara = np.zeros((4, 4), dtype=bool)
    mascara[:2, :2] = True
    mapa = np.zeros((4, 4))
    mapa[:2, :2] = 1.0
    assert localization_iou(mapa, mascara) == 1.0
    mapa[:2, 2:] = 1.0
    assert localization_iou(mapa, mascara) == 0.5
    assert localization_iou(np.zeros((4, 4)), mascara) == 0.0


def test_iou_formas_distintas():
    with pytest.raises(ErrorConfiguracion):
        localization_iou(np.zeros((4, 4)), np.zeros((4, 5), dtype=bool))


# =============================================================================
# Barrido
# =============================================================================

def test_grilla_de_k():
    grilla = default_k_grid()
    assert len(grilla) == 33
    assert grilla[0] == 0.03 and grilla[-1] == 0.99


def _entradas_monotonas(maquinas=("fan",), n=6, seed=0):
    """Residuos anómalos uniformemente mayores que los normales."""
    rng = np.random.default_rng(seed)
    entradas = []
    for maquina in maquinas:
        for dominio in ("source", "target"):
            for etiqueta, desde in (("normal", 0.0), ("anomaly", 0.2)):
                for i in range(n):
                    entradas.append(CachedResiduals(
                        clip_id=f"{maquina}_{dominio}_{etiqueta}_{i}", machine_type=maquina,
                        section="00", domain=dominio, label=etiqueta,
                        residuals=desde + 0.1 * rng.random((2, 8, 8)),
                    ))
    return entradas


def test_sweep_filas_por_maquina():
    tabla = af_sweep(_entradas_monotonas(("fan", "valve")))
    assert len(tabla) == 2 * 66
    assert (tabla.groupby("machine_type").size() == 66).all()
    assert set(tabla["use_relu"]) == {False, True}


def test_sweep_monotono_auc_uno():
    tabla = af_sweep(_entradas_monotonas())
    for columna in ("auc", "s_auc", "t_auc", "p_auc"):
        assert (tabla[columna] == 1.0).all()


def test_sweep_k_uno_reproduce_mae():
    entradas = _entradas_monotonas(seed=1)
    # mezclar los residuos para que la métrica no sea trivial
    rng = np.random.default_rng(9)
    for e in entradas:
        e.residuals = rng.normal(size=e.residuals.shape)
    tabla = af_sweep(entradas, k_values=[1.0], relu_options=(False,))

    mae = {e.clip_id: float(np.mean(np.abs(e.residuals))) for e in entradas}
    normales = [mae[e.clip_id] for e in entradas if e.label == "normal"]
    anomalos = [mae[e.clip_id] for e in entradas if e.label == "anomaly"]
    assert tabla["auc"].iloc[0] == pytest.approx(auc(normales, anomalos), abs=1e-12)


def test_sweep_acepta_un_iterador_de_una_pasada():
    entradas = _entradas_monotonas(("fan", "valve"))
    de_lista = af_sweep(entradas, k_values=[0.1, 0.5])
    de_iterador = af_sweep(iter(entradas), k_values=[0.1, 0.5])
    assert de_iterador.equals(de_lista)
    # los residuos del llamador quedan intactos
    assert all(e.residuals is not None for e in entradas)


def test_sweep_cache_vacia():
    with pytest.raises(CacheVacia):
        af_sweep([])


def test_sweep_ignora_etiquetas_desconocidas():
    entradas = _entradas_monotonas()
    entradas[0].label = "unknown"
    tabla = af_sweep(entradas, k_values=[0.1])
    assert len(tabla) == 2
