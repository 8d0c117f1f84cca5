"""
Red de predicción de ruido (U-Net con embedding de timestep y auto-atención).
"""

from src.denoiser.unet import UNet, UNetConfig, timestep_embedding
from src.denoiser.params import (
    DenoiserParams,
    init_params,
    parameter_count,
    forward,
    backward,
    as_denoiser,
)

__all__ = [
    "UNet", "UNetConfig", "timestep_embedding",
    "DenoiserParams", "init_params", "parameter_count",
    "forward", "backward", "as_denoiser",
]
