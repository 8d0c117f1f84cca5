"""
Parámetros del denoiser: pesos entrenables, copia EMA y contador de pasos.

forward/backward exponen el modelo como una función con gradientes
explícitos: el trainer llama forward(record=True), calcula el gradiente de
la loss respecto de la salida y lo pasa a backward, que devuelve un
gradiente por peso.
"""

import copy
from dataclasses import dataclass, field

import torch

from src.denoiser.unet import UNet, UNetConfig, inicializar_pesos
from src.shared.exceptions import FormaIncompatible, ForwardNoRegistrado, PasoFueraDeRango


@dataclass
class DenoiserParams:
    cfg: UNetConfig
    model: UNet
    ema_model: UNet
    step: int = 0
    total_steps: int = 1000
    registro: torch.Tensor | None = field(default=None, repr=False)

    @property
    def weights(self) -> dict:
        return dict(self.model.named_parameters())

    @property
    def ema_weights(self) -> dict:
        return dict(self.ema_model.named_parameters())

    @property
    def dtype(self) -> torch.dtype:
        return next(self.model.parameters()).dtype

    @property
    def device(self) -> torch.device:
        return next(self.model.parameters()).device


def init_params(cfg: UNetConfig, seed: int, total_steps: int = 1000,
                dtype: torch.dtype = torch.float32, device: str = "cpu") -> DenoiserParams:
    """
    Inicialización determinista a partir de la semilla, sin tocar el RNG
    global de torch. La copia EMA arranca igual a los pesos.
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        modelo = UNet(cfg)
        inicializar_pesos(modelo)

    modelo = modelo.to(device=device, dtype=dtype)
    ema = copy.deepcopy(modelo).requires_grad_(False).eval()
    return DenoiserParams(cfg=cfg, model=modelo, ema_model=ema, total_steps=total_steps)


def parameter_count(p: DenoiserParams) -> int:
    return sum(w.numel() for w in p.model.parameters())


def _validar_entrada(p: DenoiserParams, x_t: torch.Tensor, t) -> torch.Tensor:
    lado = p.cfg.input_size
    if x_t.ndim != 4 or tuple(x_t.shape[1:]) != (1, lado, lado):
        raise FormaIncompatible(f"Se esperaba un batch (B, 1, {lado}, {lado}), se recibió {tuple(x_t.shape)}")

    t = torch.as_tensor(t, device=x_t.device)
    if t.ndim == 0:
        t = t.expand(x_t.shape[0])
    if t.shape != (x_t.shape[0],):
        raise FormaIncompatible(f"t debe tener un timestep por elemento del batch ({x_t.shape[0]}), forma {tuple(t.shape)}")
    if int(t.min()) < 0 or int(t.max()) > p.total_steps:
        raise PasoFueraDeRango(f"t fuera de [0, {p.total_steps}]: {int(t.min())}..{int(t.max())}")
    return t


def forward(p: DenoiserParams, x_t: torch.Tensor, t, use_ema: bool = False,
            record: bool = False) -> torch.Tensor:
    """
    ε̂ = ε_θ(x_t, t) para un batch (B, 1, W, W).

    :param use_ema: usa la copia EMA (la puntuación usa siempre EMA)
    :param record: guarda el grafo para un backward posterior
    """
    t = _validar_entrada(p, x_t, t)
    modelo = p.ema_model if use_ema else p.model
    x_t = x_t.to(device=p.device, dtype=p.dtype)

    if record:
        if use_ema:
            raise ForwardNoRegistrado("No se registra el forward de la copia EMA (no tiene gradientes)")
        salida = modelo(x_t, t)
        p.registro = salida
        return salida.detach()

    with torch.no_grad():
        return modelo(x_t, t)


def backward(p: DenoiserParams, grad_out: torch.Tensor) -> dict:
    """
    Gradiente de la loss respecto de cada peso, dado ∂L/∂ε̂.
    Consume el forward registrado: dos backward seguidos requieren dos forward.

    :return: nombre del peso → gradiente (misma forma que el peso)
    """
    if p.registro is None:
        raise ForwardNoRegistrado("backward llamado sin un forward(record=True) previo")
    salida, p.registro = p.registro, None

    if grad_out.shape != salida.shape:
        raise FormaIncompatible(f"grad_out {tuple(grad_out.shape)} no coincide con la salida {tuple(salida.shape)}")

    nombres, pesos = zip(*p.model.named_parameters())
    grads = torch.autograd.grad(
        salida, pesos, grad_outputs=grad_out.to(salida.dtype), allow_unused=True
    )
    return {
        nombre: torch.zeros_like(peso) if g is None else g
        for nombre, peso, g in zip(nombres, pesos, grads)
    }


def as_denoiser(p: DenoiserParams, use_ema: bool = True):
    """
    Adapta los parámetros al contrato de reconstruct: ventanas (B, W, W) y un
    timestep entero, devolviendo ε̂ con la misma forma y dtype de entrada.
    """
    def denoiser(x: torch.Tensor, t: int) -> torch.Tensor:
        eps = forward(p, x.unsqueeze(1), int(t), use_ema=use_ema)
        return eps.squeeze(1).to(device=x.device, dtype=x.dtype)

    return denoiser
