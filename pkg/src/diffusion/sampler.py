"""
Pasos inversos (DDPM y DDIM) y reconstrucción de ventanas.

Los steppers son funciones puras: operan igual sobre floats, arrays de
numpy o tensores de torch, porque solo combinan la entrada con
coeficientes escalares tomados del schedule.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import torch

from src.diffusion.schedule import DiffusionConfig, NoiseSchedule, forward_diffuse
from src.shared.exceptions import PasoFueraDeRango, SigmaInvalido

# Margen numérico al comparar σ² con 1 − ᾱ_prev
TOLERANCIA_SIGMA = 1e-12

# ε̂ = denoiser(x_t, t): recibe un batch (B, W, W) y un timestep entero
Denoiser = Callable[[torch.Tensor, int], torch.Tensor]


@dataclass
class Reconstruction:
    """Resultado de reconstruct: x̂_0 más la metadata de la corrida."""
    x_hat: np.ndarray
    denoiser_calls: int
    timesteps: list = field(default_factory=list)
    seeds: list = field(default_factory=list)


def _validar_t(t: int, sched: NoiseSchedule, operacion: str, minimo: int = 1) -> None:
    if not minimo <= t <= sched.total_steps:
        raise PasoFueraDeRango(f"{operacion}: t={t} fuera de [{minimo}, {sched.total_steps}]")


def ddpm_step(x_t, t: int, eps_hat, sched: NoiseSchedule, z=None):
    """
    x_{t−1} = (1/√α_t)(x_t − ((1−α_t)/√(1−ᾱ_t))·ε̂) + √β̃_t·z

    En t = 1 el término de ruido se anula sin importar z.
    """
    _validar_t(t, sched, "ddpm_step")

    alpha = float(sched.alpha[t])
    alpha_bar = float(sched.alpha_bar[t])

    media = (x_t - eps_hat * ((1.0 - alpha) / math.sqrt(1.0 - alpha_bar))) / math.sqrt(alpha)
    if t == 1 or z is None:
        return media
    return media + z * math.sqrt(float(sched.beta_tilde[t]))


def ddpm_sigma(sched: NoiseSchedule, t: int, t_prev: int) -> float:
    """σ_t que hace que un paso DDIM de t a t_prev coincida con el de DDPM."""
    ab_t = float(sched.alpha_bar[t])
    ab_prev = float(sched.alpha_bar[t_prev])
    return math.sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * math.sqrt(1.0 - ab_t / ab_prev)


def ddim_step(x_t, t: int, t_prev: int, eps_hat, sched: NoiseSchedule,
              sigma_t: float = 0.0, noise=None):
    """
    Paso DDIM de t a t_prev.

    x0̂ = (x_t − √(1−ᾱ_t)·ε̂)/√ᾱ_t
    salida = √ᾱ_prev·x0̂ + √(1−ᾱ_prev−σ²)·ε̂ + σ·ruido

    :raises SigmaInvalido: si σ² > 1 − ᾱ_prev
    """
    _validar_t(t, sched, "ddim_step")
    if not 0 <= t_prev < t:
        raise PasoFueraDeRango(f"ddim_step: se requiere 0 <= t_prev < t (t={t}, t_prev={t_prev})")
    if sigma_t < 0:
        raise SigmaInvalido(f"σ_t debe ser >= 0 (recibido {sigma_t})")

    ab_t = float(sched.alpha_bar[t])
    ab_prev = float(sched.alpha_bar[t_prev])

    resto = 1.0 - ab_prev - sigma_t ** 2
    if resto < -TOLERANCIA_SIGMA:
        raise SigmaInvalido(
            f"σ_t²={sigma_t ** 2:.3e} supera 1 − ᾱ_{t_prev}={1.0 - ab_prev:.3e}"
        )

    x0_pred = (x_t - eps_hat * math.sqrt(1.0 - ab_t)) / math.sqrt(ab_t)
    salida = x0_pred * math.sqrt(ab_prev) + eps_hat * math.sqrt(max(0.0, resto))
    if sigma_t > 0:
        if noise is None:
            raise SigmaInvalido("σ_t > 0 requiere un ruido explícito")
        salida = salida + noise * sigma_t
    return salida


def ddim_timesteps(reverse_start: int, interval: int) -> list:
    """
    Subsecuencia {t̂, t̂−Δ, t̂−2Δ, …} seguida de 0.
    Cuando t̂ no es múltiplo de Δ el último salto cubre el resto.
    """
    return list(range(reverse_start, 0, -interval)) + [0]


def _generadores(semillas: Sequence[int]) -> list:
    return [torch.Generator().manual_seed(int(s)) for s in semillas]


def _ruido(generadores: list, forma: tuple, dtype) -> torch.Tensor:
    """Un tensor de ruido por ventana, cada uno con su propio generador."""
    return torch.stack([torch.randn(forma, generator=g, dtype=dtype) for g in generadores])


def reconstruct(x0, cfg: DiffusionConfig, sched: NoiseSchedule, denoiser: Denoiser,
                seed: int | Sequence[int]) -> Reconstruction:
    """
    Corrompe x0 hasta t̂ con una sola difusión directa y lo reconstruye
    iterando el muestreador configurado hasta t = 0.

    x0 puede ser una ventana (W, W) o un batch (B, W, W). seed es un entero
    o una semilla por ventana; cada ventana usa su propio generador, así el
    resultado de una ventana no depende de con cuáles se agrupe.
    """
    tensor = torch.as_tensor(np.asarray(x0) if not isinstance(x0, torch.Tensor) else x0)
    una_ventana = tensor.ndim == 2
    if una_ventana:
        tensor = tensor.unsqueeze(0)

    semillas = [int(seed)] * tensor.shape[0] if isinstance(seed, (int, np.integer)) else [int(s) for s in seed]
    if len(semillas) != tensor.shape[0]:
        raise PasoFueraDeRango(f"Se recibieron {len(semillas)} semillas para {tensor.shape[0]} ventanas")

    generadores = _generadores(semillas)
    forma = tuple(tensor.shape[1:])

    t_hat = cfg.reverse_start
    x = forward_diffuse(tensor, t_hat, sched, _ruido(generadores, forma, tensor.dtype)).x_t

    llamadas = 0
    with torch.no_grad():
        if cfg.sampler == "ddpm":
            visitados = list(range(t_hat, 0, -1))
            for t in visitados:
                eps_hat = denoiser(x, t)
                llamadas += 1
                z = _ruido(generadores, forma, tensor.dtype) if t > 1 else None
                x = ddpm_step(x, t, eps_hat, sched, z)
        else:
            secuencia = ddim_timesteps(t_hat, cfg.ddim_interval)
            visitados = secuencia[:-1]
            for t, t_prev in zip(secuencia[:-1], secuencia[1:]):
                eps_hat = denoiser(x, t)
                llamadas += 1
                sigma = cfg.ddim_eta * ddpm_sigma(sched, t, t_prev) if cfg.ddim_eta > 0 else 0.0
                ruido = _ruido(generadores, forma, tensor.dtype) if sigma > 0 else None
                x = ddim_step(x, t, t_prev, eps_hat, sched, sigma, ruido)

    x_hat = x.detach().cpu().numpy()
    if una_ventana:
        x_hat = x_hat[0]

    return Reconstruction(x_hat=x_hat, denoiser_calls=llamadas, timesteps=visitados, seeds=semillas)
