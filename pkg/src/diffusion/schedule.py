"""
Schedules de ruido y difusión directa.

Las tablas β_t, α_t, ᾱ_t, β̃_t se precomputan una sola vez en float64 con
largo T+1: el índice 0 es la convención ᾱ_0 = 1 (β_0 = 0), así un paso
DDIM con t_prev = 0 devuelve exactamente la predicción de x_0.

NoiseSchedule es inmutable (los arrays quedan de solo lectura) y se puede
compartir entre threads sin copiarlo.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
from scipy.special import expit

from src.shared.exceptions import ErrorConfiguracion, PasoFueraDeRango

# Extremos del schedule lineal
BETA_INICIAL = 1e-4
BETA_FINAL = 1e-2

# Schedule sigmoid: v(u) = logistic(-(s + u(e - s)) / τ)
SIGMOID_INICIO = -3.0
SIGMOID_FIN = 3.0
SIGMOID_TAU = 1.0

# Cotas para que ningún paso sea degenerado
BETA_MIN = 1e-5
BETA_MAX = 0.999

SCHEDULES = ("linear", "sigmoid")
SAMPLERS = ("ddpm", "ddim")


@dataclass(frozen=True)
class DiffusionConfig:
    """T, t̂, tipo de schedule, intervalo Δ de DDIM y muestreador."""
    total_steps: int = 1000
    reverse_start: int = 280
    schedule_kind: str = "sigmoid"
    ddim_interval: int = 4
    sampler: str = "ddim"
    # σ_t = eta · σ_t^DDPM en los pasos DDIM; 0 es el caso determinista
    ddim_eta: float = 0.0

    def __post_init__(self):
        if self.total_steps < 1:
            raise ErrorConfiguracion(f"diffusion.total_steps debe ser >= 1 (recibido {self.total_steps})")
        if not 0 < self.reverse_start <= self.total_steps:
            raise ErrorConfiguracion(
                f"diffusion.reverse_start debe estar en (0, {self.total_steps}] (recibido {self.reverse_start})"
            )
        if not 1 <= self.ddim_interval <= self.reverse_start:
            raise ErrorConfiguracion(
                f"diffusion.ddim_interval debe estar en [1, reverse_start] (recibido {self.ddim_interval})"
            )
        if self.schedule_kind not in SCHEDULES:
            raise ErrorConfiguracion(f"diffusion.schedule_kind desconocido: '{self.schedule_kind}'")
        if self.sampler not in SAMPLERS:
            raise ErrorConfiguracion(f"diffusion.sampler desconocido: '{self.sampler}'")
        if self.ddim_eta < 0:
            raise ErrorConfiguracion("diffusion.ddim_eta debe ser >= 0")


@dataclass(frozen=True)
class NoiseSchedule:
    """Tablas indexadas por timestep, largo T+1."""
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    beta_tilde: np.ndarray

    @property
    def total_steps(self) -> int:
        return len(self.beta) - 1


@dataclass
class NoisySample:
    """x_t junto con el ruido ε que lo generó (objetivo del entrenamiento)."""
    x_t: object
    t: object
    eps: object


def sigmoid_alpha_bar(u, start: float = SIGMOID_INICIO, end: float = SIGMOID_FIN,
                      tau: float = SIGMOID_TAU):
    """
    ᾱ(u) del schedule sigmoid para u ∈ [0, 1], con extremos normalizados:
    ᾱ(0) = 1 y ᾱ(1) = 0 exactos.
    """
    def v(x):
        return expit(-(start + x * (end - start)) / tau)

    v0, v1 = v(0.0), v(1.0)
    return (v(np.asarray(u, dtype=np.float64)) - v1) / (v0 - v1)


def build_schedule(cfg: DiffusionConfig) -> NoiseSchedule:
    """
    Construye las tablas del schedule.

    linear:  β_t interpolado linealmente de 1e-4 a 1e-2 en T pasos.
    sigmoid: ᾱ muestreado en u = t/T, β_t = 1 − ᾱ_t/ᾱ_{t−1} acotado a [1e-5, 0.999].

    En ambos casos ᾱ se recalcula como producto acumulado de (1 − β) ya
    acotado, para que la identidad ᾱ_t = Π(1 − β_i) valga exacta.
    """
    T = cfg.total_steps

    if cfg.schedule_kind == "linear":
        betas = np.linspace(BETA_INICIAL, BETA_FINAL, T, dtype=np.float64)
    else:
        ab = sigmoid_alpha_bar(np.arange(T + 1, dtype=np.float64) / T)
        with np.errstate(divide="ignore", invalid="ignore"):
            betas = 1.0 - ab[1:] / ab[:-1]
        betas = np.clip(np.nan_to_num(betas, nan=BETA_MAX), BETA_MIN, BETA_MAX)

    beta = np.concatenate([[0.0], betas])
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)

    beta_tilde = np.zeros_like(beta)
    beta_tilde[1:] = (1.0 - alpha_bar[:-1]) / (1.0 - alpha_bar[1:]) * beta[1:]

    for tabla in (beta, alpha, alpha_bar, beta_tilde):
        tabla.setflags(write=False)

    return NoiseSchedule(beta=beta, alpha=alpha, alpha_bar=alpha_bar, beta_tilde=beta_tilde)


def _coeficiente(tabla: np.ndarray, t, como):
    """
    Extrae tabla[t] con la forma y el tipo adecuados para operar con `como`.
    Con t entero devuelve un float; con un vector de timesteps devuelve
    un array/tensor con dimensiones extra para broadcasting por elemento.
    """
    if isinstance(t, (int, np.integer)):
        return float(tabla[int(t)])

    indices = t.cpu().numpy() if isinstance(t, torch.Tensor) else np.asarray(t)
    valores = tabla[indices].reshape(indices.shape + (1,) * (como.ndim - indices.ndim))
    if isinstance(como, torch.Tensor):
        return torch.as_tensor(valores, dtype=como.dtype, device=como.device)
    return valores.astype(como.dtype, copy=False)


def _validar_rango(t, minimo: int, maximo: int, operacion: str) -> None:
    if isinstance(t, (int, np.integer)):
        bajo = alto = int(t)
    else:
        indices = t.cpu().numpy() if isinstance(t, torch.Tensor) else np.asarray(t)
        bajo, alto = int(indices.min()), int(indices.max())
    if bajo < minimo or alto > maximo:
        raise PasoFueraDeRango(f"{operacion}: t debe estar en [{minimo}, {maximo}] (recibido {bajo}..{alto})")


def forward_diffuse(x0, t, sched: NoiseSchedule, noise) -> NoisySample:
    """
    x_t = √ᾱ_t · x_0 + √(1 − ᾱ_t) · ε

    Acepta arrays de numpy o tensores de torch. t puede ser un entero o un
    vector con un timestep por elemento del batch (primer eje de x0).
    El ruido lo provee quien llama, para que el resultado sea reproducible.
    """
    _validar_rango(t, 1, sched.total_steps, "forward_diffuse")
    if noise.shape != x0.shape:
        raise PasoFueraDeRango(f"forward_diffuse: ruido {tuple(noise.shape)} vs x0 {tuple(x0.shape)}")

    ab = _coeficiente(sched.alpha_bar, t, x0)
    if isinstance(ab, float):
        x_t = x0 * math.sqrt(ab) + noise * math.sqrt(1.0 - ab)
    else:
        raiz = torch.sqrt if isinstance(ab, torch.Tensor) else np.sqrt
        x_t = x0 * raiz(ab) + noise * raiz(1.0 - ab)

    return NoisySample(x_t=x_t, t=t, eps=noise)


def schedule_table(sched: NoiseSchedule):
    """Filas (t, β, α, ᾱ, β̃) para exportar el schedule a CSV."""
    return [
        {
            "t": t,
            "beta": float(sched.beta[t]),
            "alpha": float(sched.alpha[t]),
            "alpha_bar": float(sched.alpha_bar[t]),
            "beta_tilde": float(sched.beta_tilde[t]),
        }
        for t in range(sched.total_steps + 1)
    ]
