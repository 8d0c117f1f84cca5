"""
Núcleo de difusión: schedules, difusión directa y muestreadores DDPM/DDIM.
"""

from src.diffusion.schedule import (
    DiffusionConfig,
    NoiseSchedule,
    NoisySample,
    build_schedule,
    forward_diffuse,
    sigmoid_alpha_bar,
    schedule_table,
)
from src.diffusion.sampler import (
    Denoiser,
    Reconstruction,
    ddpm_step,
    ddpm_sigma,
    ddim_step,
    ddim_timesteps,
    reconstruct,
)

__all__ = [
    "DiffusionConfig", "NoiseSchedule", "NoisySample",
    "build_schedule", "forward_diffuse", "sigmoid_alpha_bar", "schedule_table",
    "Denoiser", "Reconstruction",
    "ddpm_step", "ddpm_sigma", "ddim_step", "ddim_timesteps", "reconstruct",
]
