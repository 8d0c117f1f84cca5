"""
Entrenamiento del denoiser: paso de Adam, EMA, loop con checkpoints y reanudación.
"""

from src.training.trainer import (
    TrainConfig,
    TrainState,
    MuestreadorDeLotes,
    new_train_state,
    train_step,
    ema_update,
    train_loop,
    save_checkpoint,
    load_params,
    resume,
)

__all__ = [
    "TrainConfig", "TrainState", "MuestreadorDeLotes",
    "new_train_state", "train_step", "ema_update", "train_loop",
    "save_checkpoint", "load_params", "resume",
]
