"""
Tests del núcleo de difusión: schedules, difusión directa, steppers y reconstrucción.
"""

import numpy as np
import pytest
import torch

from src.diffusion import (
    DiffusionConfig,
    NoiseSchedule,
    build_schedule,
    ddim_step,
    ddim_timesteps,
    ddpm_sigma,
    ddpm_step,
    forward_diffuse,
    reconstruct,
    sigmoid_alpha_bar,
)
from src.shared.exceptions import ErrorConfiguracion, PasoFueraDeRango, SigmaInvalido


def _schedule_a_mano(alpha_bar: list, alpha: list | None = None) -> NoiseSchedule:
    """Schedule mínimo con valores elegidos a mano (índice 0 incluido)."""
    ab = np.asarray(alpha_bar, dtype=np.float64)
    a = np.asarray(alpha if alpha is not None else np.concatenate([[1.0], ab[1:] / ab[:-1]]), dtype=np.float64)
    beta = 1.0 - a
    return NoiseSchedule(beta=beta, alpha=a, alpha_bar=ab, beta_tilde=np.zeros_like(ab))


@pytest.fixture(scope="module", params=["linear", "sigmoid"])
def schedule(request):
    return build_schedule(DiffusionConfig(schedule_kind=request.param))


# =============================================================================
# Configuración
# =============================================================================

@pytest.mark.parametrize("kwargs", [
    {"reverse_start": 0},
    {"reverse_start": 1001},
    {"ddim_interval": 0},
    {"reverse_start": 10, "ddim_interval": 11},
    {"schedule_kind": "cosine"},
    {"sampler": "euler"},
])
def test_diffusion_config_invalida(kwargs):
    with pytest.raises(ErrorConfiguracion):
        DiffusionConfig(**kwargs)


# =============================================================================
# Schedules
# =============================================================================

def test_schedule_lineal_extremos():
    sched = build_schedule(DiffusionConfig(schedule_kind="linear"))
    assert sched.beta[1] == pytest.approx(1e-4)
    assert sched.beta[1000] == pytest.approx(1e-2)
    assert sched.alpha_bar[0] == 1.0


def test_sigmoid_extremos_normalizados():
    assert sigmoid_alpha_bar(0.0) == pytest.approx(1.0, abs=1e-15)
    assert sigmoid_alpha_bar(1.0) == pytest.approx(0.0, abs=1e-15)


def test_alpha_bar_es_producto_acumulado(schedule):
    producto = 1.0
    for t in range(1, schedule.total_steps + 1):
        producto *= 1.0 - schedule.beta[t]
        assert schedule.alpha_bar[t] == pytest.approx(producto, abs=1e-9)


def test_schedule_monotono(schedule):
    assert np.all(np.diff(schedule.alpha_bar) < 0)
    assert np.all(schedule.beta_tilde >= 0)
    assert np.all(schedule.beta_tilde <= schedule.beta + 1e-15)


def test_schedule_es_de_solo_lectura(schedule):
    with pytest.raises(ValueError):
        schedule.alpha_bar[3] = 0.5


# =============================================================================
# Difusión directa
# =============================================================================

def test_forward_escalar_a_mano():
    sched = _schedule_a_mano([1.0, 0.64])
    muestra = forward_diffuse(np.array([0.5]), 1, sched, np.array([1.0]))
    assert muestra.x_t[0] == pytest.approx(1.0)
    assert muestra.eps[0] == 1.0


def test_forward_casos_borde():
    x0 = np.array([0.2, 0.7])
    ruido = np.array([-1.3, 0.4])
    sin_ruido = _schedule_a_mano([1.0, 1.0], alpha=[1.0, 1.0])
    solo_ruido = _schedule_a_mano([1.0, 0.0], alpha=[1.0, 0.0])
    np.testing.assert_allclose(forward_diffuse(x0, 1, sin_ruido, ruido).x_t, x0)
    np.testing.assert_allclose(forward_diffuse(x0, 1, solo_ruido, ruido).x_t, ruido)


@pytest.mark.parametrize("t", [0, 1001])
def test_forward_t_fuera_de_rango(t):
    sched = build_schedule(DiffusionConfig())
    with pytest.raises(PasoFueraDeRango):
        forward_diffuse(np.zeros((4, 4)), t, sched, np.zeros((4, 4)))


@pytest.mark.parametrize("t", [1, 280, 1000])
def test_forward_estadistico(t):
    sched = build_schedule(DiffusionConfig())
    rng = np.random.default_rng(7)
    n, x0 = 200_000, 0.3
    x_t = forward_diffuse(np.full(n, x0), t, sched, rng.standard_normal(n)).x_t

    media = np.sqrt(sched.alpha_bar[t]) * x0
    desvio = np.sqrt(1.0 - sched.alpha_bar[t])
    assert abs(x_t.mean() - media) < 4 * desvio / np.sqrt(n)
    assert abs(x_t.std() - desvio) < 4 * desvio / np.sqrt(2 * n)


def test_forward_timestep_por_elemento():
    sched = build_schedule(DiffusionConfig())
    x0 = torch.rand(3, 8, 8)
    ruido = torch.randn(3, 8, 8)
    ts = torch.tensor([1, 500, 1000])
    x_t = forward_diffuse(x0, ts, sched, ruido).x_t
    for i, t in enumerate(ts.tolist()):
        esperado = forward_diffuse(x0[i], t, sched, ruido[i]).x_t
        torch.testing.assert_close(x_t[i], esperado)


# =============================================================================
# Steppers
# =============================================================================

def test_ddpm_identidad():
    sched = NoiseSchedule(beta=np.zeros(2), alpha=np.ones(2), alpha_bar=np.array([1.0, 0.5]),
                          beta_tilde=np.zeros(2))
    assert ddpm_step(0.37, 1, 0.0, sched, 0.0) == pytest.approx(0.37)


def test_ddpm_escalar_a_mano():
    sched = _schedule_a_mano([1.0, 0.5], alpha=[1.0, 0.99])
    assert ddpm_step(1.0, 1, 1.0, sched, 0.0) == pytest.approx(0.99087, abs=1e-4)


def test_ddpm_t_cero():
    sched = build_schedule(DiffusionConfig())
    with pytest.raises(PasoFueraDeRango):
        ddpm_step(np.zeros(2), 0, np.zeros(2), sched, np.zeros(2))


def test_ddpm_ultimo_paso_sin_ruido():
    sched = build_schedule(DiffusionConfig())
    x = np.ones(5)
    eps = np.full(5, 0.1)
    np.testing.assert_array_equal(
        ddpm_step(x, 1, eps, sched, np.full(5, 3.0)),
        ddpm_step(x, 1, eps, sched, np.zeros(5)),
    )


def test_ddim_escalar_a_mano():
    sched = _schedule_a_mano([1.0, 0.9, 0.5])
    assert ddim_step(1.0, 2, 1, 0.2, sched, 0.0) == pytest.approx(1.21515, abs=1e-4)


def test_ddim_oraculo_recupera_x0(schedule):
    rng = np.random.default_rng(0)
    x0 = rng.random((16, 16))
    for t in range(1, schedule.total_steps + 1):
        eps = rng.standard_normal((16, 16))
        x_t = forward_diffuse(x0, t, schedule, eps).x_t
        np.testing.assert_allclose(ddim_step(x_t, t, 0, eps, schedule), x0, atol=1e-6, err_msg=f"t={t}")


def test_ddim_equivale_a_ddpm(schedule):
    rng = np.random.default_rng(1)
    T = schedule.total_steps
    casos = 10_000
    pasos = np.concatenate([[1, T], rng.integers(1, T + 1, size=casos - 2)])
    for i, t in enumerate(pasos.tolist()):
        # mitad escalares, mitad matrices chicas de forma aleatoria
        forma = () if i % 2 == 0 else tuple(rng.integers(1, 5, size=2))
        x_t = rng.standard_normal(forma) * 3.0
        eps = rng.standard_normal(forma)
        z = rng.standard_normal(forma)
        if forma == ():
            x_t, eps, z = float(x_t), float(eps), float(z)
        sigma = ddpm_sigma(schedule, t, t - 1)
        np.testing.assert_allclose(
            ddim_step(x_t, t, t - 1, eps, schedule, sigma, z),
            ddpm_step(x_t, t, eps, schedule, z),
            rtol=1e-9, atol=1e-9, err_msg=f"t={t}",
        )


def test_ddim_sigma_invalido():
    sched = build_schedule(DiffusionConfig())
    with pytest.raises(SigmaInvalido):
        ddim_step(np.zeros(2), 10, 0, np.zeros(2), sched, sigma_t=0.5, noise=np.zeros(2))


def test_ddim_orden_de_timesteps():
    sched = build_schedule(DiffusionConfig())
    with pytest.raises(PasoFueraDeRango):
        ddim_step(np.zeros(2), 10, 10, np.zeros(2), sched)


def test_ddim_timesteps_con_resto():
    assert ddim_timesteps(10, 4) == [10, 6, 2, 0]
    assert len(ddim_timesteps(280, 4)) - 1 == 70


# =============================================================================
# Reconstrucción
# =============================================================================

class DenoiserContador:
    """Devuelve ε̂ = escala · x_t y cuenta las llamadas."""

    def __init__(self, escala: float = 0.0):
        self.escala = escala
        self.llamadas = 0
        self.timesteps = []

    def __call__(self, x, t):
        self.llamadas += 1
        self.timesteps.append(t)
        return x * self.escala


@pytest.mark.parametrize("sampler, t_hat, intervalo, esperado", [
    ("ddim", 280, 4, 70),
    ("ddpm", 280, 4, 280),
    ("ddim", 10, 4, 3),
])
def test_reconstruct_cantidad_de_llamadas(sampler, t_hat, intervalo, esperado):
    cfg = DiffusionConfig(reverse_start=t_hat, ddim_interval=intervalo, sampler=sampler)
    sched = build_schedule(cfg)
    denoiser = DenoiserContador()
    resultado = reconstruct(np.zeros((8, 8), dtype=np.float32), cfg, sched, denoiser, seed=3)
    assert resultado.denoiser_calls == esperado == denoiser.llamadas
    assert resultado.timesteps == denoiser.timesteps


def test_reconstruct_oraculo_un_paso():
    cfg = DiffusionConfig(reverse_start=280, ddim_interval=280)
    sched = build_schedule(cfg)
    x0 = torch.rand(16, 16, dtype=torch.float64, generator=torch.Generator().manual_seed(5))
    ab = float(sched.alpha_bar[280])

    def oraculo(x_t, t):
        return (x_t - np.sqrt(ab) * x0) / np.sqrt(1.0 - ab)

    resultado = reconstruct(x0, cfg, sched, oraculo, seed=11)
    assert resultado.denoiser_calls == 1
    np.testing.assert_allclose(resultado.x_hat, x0.numpy(), atol=1e-9)


@pytest.mark.parametrize("sampler", ["ddim", "ddpm"])
def test_reconstruct_determinista(sampler):
    cfg = DiffusionConfig(reverse_start=40, sampler=sampler)
    sched = build_schedule(cfg)
    x0 = np.random.default_rng(2).random((8, 8)).astype(np.float32)

    a = reconstruct(x0, cfg, sched, DenoiserContador(0.1), seed=9).x_hat
    b = reconstruct(x0, cfg, sched, DenoiserContador(0.1), seed=9).x_hat
    c = reconstruct(x0, cfg, sched, DenoiserContador(0.1), seed=10).x_hat
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_reconstruct_semilla_por_ventana():
    cfg = DiffusionConfig(reverse_start=20, sampler="ddpm")
    sched = build_schedule(cfg)
    ventanas = np.random.default_rng(4).random((3, 8, 8)).astype(np.float32)

    lote = reconstruct(ventanas, cfg, sched, DenoiserContador(0.1), seed=[7, 8, 9])
    sola = reconstruct(ventanas[1], cfg, sched, DenoiserContador(0.1), seed=8)
    assert lote.x_hat.shape == (3, 8, 8)
    assert lote.seeds == [7, 8, 9]
    np.testing.assert_allclose(lote.x_hat[1], sola.x_hat, atol=1e-6)


def test_reconstruct_semillas_insuficientes():
    cfg = DiffusionConfig(reverse_start=8)
    sched = build_schedule(cfg)
    with pytest.raises(PasoFueraDeRango):
        reconstruct(np.zeros((2, 4, 4), dtype=np.float32), cfg, sched, DenoiserContador(), seed=[1])
