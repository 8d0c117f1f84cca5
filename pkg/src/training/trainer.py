"""
Entrenamiento del denoiser.

Minimiza ‖ε − ε_θ(x_t, t)‖² sobre ventanas de clips normales con Adam y
mantiene la copia EMA de los pesos, que es la que se usa para puntuar.

Un solo thread es dueño del TrainState: los checkpoints se escriben desde
el loop de entrenamiento. Todo el azar (t, ε, orden de los lotes) sale de
generadores guardados en el checkpoint, por eso una corrida reanudada
sigue exactamente la misma trayectoria que una sin interrumpir.
"""

import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from src.denoiser import DenoiserParams, UNetConfig, backward, forward, init_params
from src.diffusion import DiffusionConfig, NoiseSchedule, build_schedule, forward_diffuse
from src.infrastructure.repositories.checkpoints import (
    RegistroEntrenamiento,
    cargar_checkpoint,
    guardar_checkpoint,
    guardar_config,
)
from src.shared.exceptions import (
    EntrenamientoDivergente,
    ErrorCheckpoint,
    ErrorConfiguracion,
    ErrorDataset,
    FormaIncompatible,
)
from src.shared.logger import obtener_logger

logger = obtener_logger("entrenamiento")

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

# Pérdidas recientes que se conservan en el estado
LARGO_HISTORIAL = 1000


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    ema_rate: float = 0.995
    total_steps: int = 64000
    batch_size: int = 24
    seed: int = 0
    checkpoint_every: int = 5000
    # norma máxima del gradiente; None = sin recorte
    grad_clip: float | None = None
    log_every: int = 100

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ErrorConfiguracion(f"train.learning_rate debe ser > 0 (recibido {self.learning_rate})")
        if not 0 < self.ema_rate < 1:
            raise ErrorConfiguracion(f"train.ema_rate debe estar en (0, 1) (recibido {self.ema_rate})")
        if self.batch_size < 1:
            raise ErrorConfiguracion("train.batch_size debe ser >= 1")
        if self.total_steps < 1:
            raise ErrorConfiguracion("train.total_steps debe ser >= 1")
        if self.checkpoint_every < 1 or self.log_every < 1:
            raise ErrorConfiguracion("train.checkpoint_every y train.log_every deben ser >= 1")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ErrorConfiguracion("train.grad_clip debe ser > 0 o null")


@dataclass
class TrainState:
    params: DenoiserParams
    optimizer: torch.optim.Adam
    generator: torch.Generator
    step: int = 0
    loss_history: list = field(default_factory=list)

    @property
    def optimizer_moments(self) -> dict:
        """nombre del peso → (primer momento, segundo momento)."""
        estado = self.optimizer.state
        momentos = {}
        for nombre, peso in self.params.model.named_parameters():
            if peso in estado:
                momentos[nombre] = (estado[peso]["exp_avg"], estado[peso]["exp_avg_sq"])
            else:
                momentos[nombre] = (torch.zeros_like(peso), torch.zeros_like(peso))
        return momentos


def new_train_state(params: DenoiserParams, cfg: TrainConfig) -> TrainState:
    optimizer = torch.optim.Adam(
        params.model.parameters(), lr=cfg.learning_rate, betas=ADAM_BETAS, eps=ADAM_EPS
    )
    return TrainState(
        params=params,
        optimizer=optimizer,
        generator=torch.Generator().manual_seed(cfg.seed),
        step=params.step,
    )


# =============================================================================
# Paso de entrenamiento
# =============================================================================

def ema_update(params: DenoiserParams, rate: float) -> DenoiserParams:
    """ema ← rate·ema + (1 − rate)·pesos, elemento a elemento."""
    with torch.no_grad():
        for ema, peso in zip(params.ema_model.parameters(), params.model.parameters()):
            ema.mul_(rate).add_(peso, alpha=1.0 - rate)
    return params


def train_step(state: TrainState, batch, sched: NoiseSchedule, cfg: TrainConfig):
    """
    Un paso de Adam sobre la loss de denoising.

    t ~ U{1..T} y ε ~ N(0, I) se sortean por elemento del batch.

    :param batch: ventanas (B, W, W) de clips normales
    :return: (estado, loss)
    :raises EntrenamientoDivergente: si la loss no es finita
    """
    p = state.params
    x0 = torch.as_tensor(np.asarray(batch), dtype=p.dtype)
    if x0.ndim != 3:
        raise FormaIncompatible(f"El batch debe ser (B, W, W), se recibió {tuple(x0.shape)}")
    x0 = x0.unsqueeze(1)

    t = torch.randint(1, sched.total_steps + 1, (x0.shape[0],), generator=state.generator)
    eps = torch.randn(x0.shape, generator=state.generator, dtype=x0.dtype)
    x_t = forward_diffuse(x0, t, sched, eps).x_t

    eps_hat = forward(p, x_t.to(p.device), t.to(p.device), record=True)
    diferencia = eps_hat - eps.to(p.device)
    loss = float(diferencia.pow(2).mean())
    if not math.isfinite(loss):
        p.registro = None
        raise EntrenamientoDivergente(f"Loss no finita en el paso {state.step + 1}: {loss}")

    # ∂L/∂ε̂ de la media de cuadrados
    gradientes = backward(p, 2.0 * diferencia / diferencia.numel())
    for nombre, peso in p.model.named_parameters():
        peso.grad = gradientes[nombre]
    if cfg.grad_clip is not None:
        torch.nn.utils.clip_grad_norm_(p.model.parameters(), cfg.grad_clip)

    state.optimizer.step()
    state.optimizer.zero_grad(set_to_none=True)
    ema_update(p, cfg.ema_rate)

    state.step += 1
    p.step = state.step
    state.loss_history.append(loss)
    del state.loss_history[:-LARGO_HISTORIAL]
    return state, loss


# =============================================================================
# Lotes
# =============================================================================

class MuestreadorDeLotes:
    """
    Entrega lotes de ventanas recorriendo permutaciones sucesivas del
    conjunto (una por época). Un lote que cruza el fin de una época se
    completa con el principio de la siguiente.
    """

    def __init__(self, ventanas: np.ndarray, batch_size: int, seed: int):
        self.ventanas = ventanas
        self.batch_size = batch_size
        self.generador = torch.Generator().manual_seed(seed + 1)
        self.orden = torch.randperm(len(ventanas), generator=self.generador)
        self.posicion = 0
        self.epoca = 0

    def siguiente(self) -> np.ndarray:
        indices = []
        while len(indices) < self.batch_size:
            if self.posicion == len(self.orden):
                self.orden = torch.randperm(len(self.ventanas), generator=self.generador)
                self.posicion = 0
                self.epoca += 1
            tomar = min(self.batch_size - len(indices), len(self.orden) - self.posicion)
            indices.extend(self.orden[self.posicion:self.posicion + tomar].tolist())
            self.posicion += tomar
        return self.ventanas[indices]

    def estado(self) -> dict:
        return {
            "generator": self.generador.get_state(),
            "order": self.orden.clone(),
            "position": self.posicion,
            "epoch": self.epoca,
        }

    def restaurar(self, estado: dict) -> None:
        self.generador.set_state(estado["generator"])
        self.orden = estado["order"].clone()
        self.posicion = int(estado["position"])
        self.epoca = int(estado["epoch"])


def _reunir_ventanas(dataset, lado: int) -> np.ndarray:
    """Acepta un array (N, W, W) o un iterable de WindowBatch."""
    if isinstance(dataset, np.ndarray):
        ventanas = dataset
    else:
        lotes = [lote.windows for lote in dataset if len(lote)]
        ventanas = np.concatenate(lotes, axis=0) if lotes else np.empty((0, lado, lado), dtype=np.float32)

    if len(ventanas) == 0:
        raise ErrorDataset("El conjunto de entrenamiento está vacío")
    if ventanas.shape[1:] != (lado, lado):
        raise FormaIncompatible(
            f"Las ventanas miden {ventanas.shape[1:]}, el U-Net espera ({lado}, {lado})"
        )
    return ventanas.astype(np.float32, copy=False)


# =============================================================================
# Checkpoints
# =============================================================================

def _a_listas(valor):
    """Tuplas → listas, para que el eco de configuración se pueda volcar con yaml.safe_dump."""
    if isinstance(valor, dict):
        return {k: _a_listas(v) for k, v in valor.items()}
    if isinstance(valor, (list, tuple)):
        return [_a_listas(v) for v in valor]
    return valor


def _eco_config(cfg: TrainConfig, unet_cfg: UNetConfig, diff_cfg: DiffusionConfig) -> dict:
    return _a_listas({"train": asdict(cfg), "unet": asdict(unet_cfg), "diffusion": asdict(diff_cfg)})


def save_checkpoint(state: TrainState, run_dir, configs: dict,
                    muestreador: MuestreadorDeLotes | None = None) -> Path:
    p = state.params
    contenido = {
        "config": configs,
        "weights": p.model.state_dict(),
        "ema_weights": p.ema_model.state_dict(),
        "optimizer": state.optimizer.state_dict(),
        "generator": state.generator.get_state(),
        "loss_history": list(state.loss_history),
    }
    if muestreador is not None:
        contenido["sampler"] = muestreador.estado()
    return guardar_checkpoint(run_dir, state.step, contenido)


def load_params(path, device: str = "cpu") -> DenoiserParams:
    """Reconstruye el denoiser (pesos y EMA) de un checkpoint, para puntuar."""
    contenido = cargar_checkpoint(path, map_location=device)
    try:
        unet_cfg = UNetConfig(**contenido["config"]["unet"])
        total_steps = int(contenido["config"]["diffusion"]["total_steps"])
        params = init_params(unet_cfg, seed=0, total_steps=total_steps, device=device)
        params.model.load_state_dict(contenido["weights"])
        params.ema_model.load_state_dict(contenido["ema_weights"])
    except (KeyError, TypeError, RuntimeError) as e:
        raise ErrorCheckpoint(f"Checkpoint '{path}' incompatible: {e}") from e
    params.step = int(contenido["step"])
    return params


def resume(path, cfg: TrainConfig, muestreador: MuestreadorDeLotes | None = None,
           device: str = "cpu") -> TrainState:
    """Restaura pesos, EMA, momentos de Adam, generadores e historial."""
    contenido = cargar_checkpoint(path, map_location=device)
    params = load_params(path, device=device)
    state = new_train_state(params, cfg)
    try:
        state.optimizer.load_state_dict(contenido["optimizer"])
        state.generator.set_state(contenido["generator"])
        if muestreador is not None and "sampler" in contenido:
            muestreador.restaurar(contenido["sampler"])
    except (KeyError, ValueError, RuntimeError) as e:
        raise ErrorCheckpoint(f"No se pudo restaurar el estado de '{path}': {e}") from e
    state.step = params.step
    state.loss_history = list(contenido.get("loss_history", []))
    return state


# =============================================================================
# Loop
# =============================================================================

def train_loop(dataset, cfg: TrainConfig, unet_cfg: UNetConfig, diff_cfg: DiffusionConfig,
               run_dir, resume_from=None, config_snapshot: dict | None = None,
               device: str = "cpu") -> Path:
    """
    Entrena hasta cfg.total_steps y devuelve la ruta del checkpoint final.

    :param dataset: ventanas (N, W, W) o iterable de WindowBatch, solo de clips normales
    :param resume_from: checkpoint desde el que continuar
    :param config_snapshot: configuración completa a guardar en config.yaml;
        por defecto se guardan las secciones train, unet y diffusion
    """
    run_dir = Path(run_dir)
    ventanas = _reunir_ventanas(dataset, unet_cfg.input_size)
    sched = build_schedule(diff_cfg)
    configs = _eco_config(cfg, unet_cfg, diff_cfg)
    muestreador = MuestreadorDeLotes(ventanas, cfg.batch_size, cfg.seed)
    registro = RegistroEntrenamiento(run_dir)

    if resume_from is not None:
        state = resume(resume_from, cfg, muestreador, device=device)
        registro.truncar(state.step)
        logger.info(f"Reanudando desde '{resume_from}' (paso {state.step})")
    else:
        params = init_params(unet_cfg, cfg.seed, total_steps=diff_cfg.total_steps, device=device)
        state = new_train_state(params, cfg)
        guardar_config(run_dir, config_snapshot if config_snapshot is not None else configs)

    logger.info(
        f"Entrenando {len(ventanas)} ventanas de {unet_cfg.input_size}×{unet_cfg.input_size}, "
        f"{cfg.total_steps} pasos, batch {cfg.batch_size}"
    )

    ultimo = None
    while state.step < cfg.total_steps:
        inicio = time.perf_counter()
        state, loss = train_step(state, muestreador.siguiente(), sched, cfg)
        registro.agregar(state.step, loss, (time.perf_counter() - inicio) * 1000.0)

        if state.step % cfg.log_every == 0:
            recientes = state.loss_history[-cfg.log_every:]
            logger.info(f"Paso {state.step}/{cfg.total_steps} · loss media {np.mean(recientes):.4f}")
        if state.step % cfg.checkpoint_every == 0:
            registro.flush()
            ultimo = save_checkpoint(state, run_dir, configs, muestreador)

    registro.flush()
    if ultimo is None or state.step % cfg.checkpoint_every != 0:
        ultimo = save_checkpoint(state, run_dir, configs, muestreador)
    return ultimo
