"""
U-Net de predicción de ruido ε_θ(x_t, t).

Disposición (la del U-Net de DDPM):
  embedding sinusoidal de t → MLP de dos capas → se suma en cada bloque residual
  encoder: por etapa, 2 bloques residuales (+ atención si la resolución está
           en attention_resolutions) y downsample ×2 salvo en la última
  medio:   bloque residual, atención (solo si la resolución más baja está en
           attention_resolutions), bloque residual
  decoder: por etapa, 3 bloques residuales que concatenan un skip cada uno,
           upsample ×2 salvo en la primera
  salida:  GroupNorm → SiLU → conv 3×3 a un canal, inicializada en cero
"""

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from src.shared.exceptions import ErrorConfiguracion

BLOQUES_ENCODER = 2
BLOQUES_DECODER = 3


@dataclass(frozen=True)
class UNetConfig:
    base_channels: int = 64
    channel_multipliers: tuple = (1, 2, 4, 8)
    attention_heads: int = 4
    attention_resolutions: tuple = (32,)
    input_size: int = 128
    time_embed_dim: int | None = None
    groups_per_norm: int = 8

    def __post_init__(self):
        # Los YAML traen listas: se normalizan a tuplas para que el config sea hasheable
        object.__setattr__(self, "channel_multipliers", tuple(int(m) for m in self.channel_multipliers))
        object.__setattr__(self, "attention_resolutions", tuple(sorted(int(r) for r in self.attention_resolutions)))
        if self.time_embed_dim is None:
            object.__setattr__(self, "time_embed_dim", 4 * self.base_channels)

        if self.base_channels < 1 or not self.channel_multipliers:
            raise ErrorConfiguracion("unet: base_channels y channel_multipliers no pueden estar vacíos")
        niveles = len(self.channel_multipliers) - 1
        if self.input_size % (2 ** niveles):
            raise ErrorConfiguracion(
                f"unet.input_size ({self.input_size}) debe ser divisible por 2^{niveles}"
            )
        resoluciones = self.resoluciones
        sobrantes = set(self.attention_resolutions) - set(resoluciones)
        if sobrantes:
            raise ErrorConfiguracion(
                f"unet.attention_resolutions {sorted(sobrantes)} no se alcanzan (resoluciones {list(resoluciones)})"
            )
        for mult in self.channel_multipliers:
            canales = mult * self.base_channels
            if canales % self.groups_per_norm:
                raise ErrorConfiguracion(
                    f"unet: {canales} canales no son divisibles en {self.groups_per_norm} grupos de normalización"
                )
            if canales % self.attention_heads:
                raise ErrorConfiguracion(
                    f"unet: {canales} canales no se reparten en {self.attention_heads} cabezas de atención"
                )

    @property
    def resoluciones(self) -> tuple:
        """Lado espacial en cada etapa del encoder."""
        return tuple(self.input_size // 2 ** i for i in range(len(self.channel_multipliers)))


def timestep_embedding(t: torch.Tensor, dim: int, max_period: float = 10000.0) -> torch.Tensor:
    """Embedding sinusoidal de transformer: [sin(t·ω_i), cos(t·ω_i)], ω_i = max_period^(−i/(dim/2))."""
    mitad = dim // 2
    frecuencias = torch.exp(
        -math.log(max_period) * torch.arange(mitad, dtype=torch.float64, device=t.device) / mitad
    )
    argumentos = t.to(torch.float64)[:, None] * frecuencias[None, :]
    emb = torch.cat([torch.sin(argumentos), torch.cos(argumentos)], dim=-1)
    if dim % 2:
        emb = F.pad(emb, (0, 1))
    return emb


class BloqueResidual(nn.Module):
    def __init__(self, entrada: int, salida: int, dim_temb: int, grupos: int):
        super().__init__()
        self.norm1 = nn.GroupNorm(grupos, entrada)
        self.conv1 = nn.Conv2d(entrada, salida, 3, padding=1)
        self.temb = nn.Linear(dim_temb, salida)
        self.norm2 = nn.GroupNorm(grupos, salida)
        self.conv2 = nn.Conv2d(salida, salida, 3, padding=1)
        self.atajo = nn.Conv2d(entrada, salida, 1) if entrada != salida else nn.Identity()

    def forward(self, x, emb):
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.temb(F.silu(emb))[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return self.atajo(x) + h


class Atencion(nn.Module):
    """Auto-atención multi-cabeza sobre las posiciones espaciales aplanadas, pre-norm y residual."""

    def __init__(self, canales: int, cabezas: int, grupos: int):
        super().__init__()
        self.cabezas = cabezas
        self.norm = nn.GroupNorm(grupos, canales)
        self.qkv = nn.Conv2d(canales, 3 * canales, 1)
        self.proyeccion = nn.Conv2d(canales, canales, 1)

    def forward(self, x):
        b, c, h, w = x.shape
        qkv = self.qkv(self.norm(x)).reshape(b, 3, self.cabezas, c // self.cabezas, h * w)
        # (b, cabezas, d, n) → (b, cabezas, n, d)
        q, k, v = (m.transpose(-1, -2) for m in qkv.unbind(1))
        salida = F.scaled_dot_product_attention(q, k, v)
        return x + self.proyeccion(salida.transpose(-1, -2).reshape(b, c, h, w))


class Downsample(nn.Module):
    def __init__(self, canales: int):
        super().__init__()
        self.conv = nn.Conv2d(canales, canales, 3, stride=2, padding=1)

    def forward(self, x):
        return self.conv(x)


class Upsample(nn.Module):
    def __init__(self, canales: int):
        super().__init__()
        self.conv = nn.Conv2d(canales, canales, 3, padding=1)

    def forward(self, x):
        return self.conv(F.interpolate(x, scale_factor=2, mode="nearest"))


class Etapa(nn.Module):
    """Bloques residuales de una resolución, con atención opcional después de cada uno."""

    def __init__(self, bloques: list, atenciones: list | None):
        super().__init__()
        self.bloques = nn.ModuleList(bloques)
        self.atenciones = nn.ModuleList(atenciones) if atenciones else None


class UNet(nn.Module):
    def __init__(self, cfg: UNetConfig):
        super().__init__()
        self.cfg = cfg
        base, temb, grupos = cfg.base_channels, cfg.time_embed_dim, cfg.groups_per_norm

        self.tiempo = nn.Sequential(nn.Linear(base, temb), nn.SiLU(), nn.Linear(temb, temb))
        self.conv_entrada = nn.Conv2d(1, base, 3, padding=1)

        def atencion(canales, resolucion):
            if resolucion in cfg.attention_resolutions:
                return Atencion(canales, cfg.attention_heads, grupos)
            return None

        canales = base
        skips = [canales]
        self.encoder = nn.ModuleList()
        self.bajadas = nn.ModuleList()
        for nivel, mult in enumerate(cfg.channel_multipliers):
            resolucion = cfg.resoluciones[nivel]
            bloques, atenciones = [], []
            for _ in range(BLOQUES_ENCODER):
                bloques.append(BloqueResidual(canales, mult * base, temb, grupos))
                canales = mult * base
                atenciones.append(atencion(canales, resolucion))
                skips.append(canales)
            self.encoder.append(Etapa(bloques, atenciones if atenciones[0] is not None else None))
            if nivel < len(cfg.channel_multipliers) - 1:
                self.bajadas.append(Downsample(canales))
                skips.append(canales)

        self.medio1 = BloqueResidual(canales, canales, temb, grupos)
        self.medio_atencion = atencion(canales, cfg.resoluciones[-1])
        self.medio2 = BloqueResidual(canales, canales, temb, grupos)

        self.decoder = nn.ModuleList()
        self.subidas = nn.ModuleList()
        for nivel in reversed(range(len(cfg.channel_multipliers))):
            resolucion = cfg.resoluciones[nivel]
            mult = cfg.channel_multipliers[nivel]
            bloques, atenciones = [], []
            for _ in range(BLOQUES_DECODER):
                bloques.append(BloqueResidual(canales + skips.pop(), mult * base, temb, grupos))
                canales = mult * base
                atenciones.append(atencion(canales, resolucion))
            self.decoder.append(Etapa(bloques, atenciones if atenciones[0] is not None else None))
            if nivel > 0:
                self.subidas.append(Upsample(canales))

        self.norm_salida = nn.GroupNorm(grupos, canales)
        self.conv_salida = nn.Conv2d(canales, 1, 3, padding=1)

    def forward(self, x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        emb = self.tiempo(timestep_embedding(t, self.cfg.base_channels).to(x.dtype))

        h = self.conv_entrada(x)
        skips = [h]
        for nivel, etapa in enumerate(self.encoder):
            for i, bloque in enumerate(etapa.bloques):
                h = bloque(h, emb)
                if etapa.atenciones is not None:
                    h = etapa.atenciones[i](h)
                skips.append(h)
            if nivel < len(self.bajadas):
                h = self.bajadas[nivel](h)
                skips.append(h)

        h = self.medio1(h, emb)
        if self.medio_atencion is not None:
            h = self.medio_atencion(h)
        h = self.medio2(h, emb)

        for nivel, etapa in enumerate(self.decoder):
            for i, bloque in enumerate(etapa.bloques):
                h = bloque(torch.cat([h, skips.pop()], dim=1), emb)
                if etapa.atenciones is not None:
                    h = etapa.atenciones[i](h)
            if nivel < len(self.subidas):
                h = self.subidas[nivel](h)

        return self.conv_salida(F.silu(self.norm_salida(h)))


def inicializar_pesos(modelo: UNet) -> None:
    """Normal con σ = fan_in^(−1/2) en convoluciones y lineales, sesgos en cero; la conv de salida en cero."""
    for modulo in modelo.modules():
        if isinstance(modulo, (nn.Conv2d, nn.Linear)):
            fan_in = modulo.weight[0].numel()
            nn.init.normal_(modulo.weight, mean=0.0, std=fan_in ** -0.5)
            nn.init.zeros_(modulo.bias)
    nn.init.zeros_(modelo.conv_salida.weight)
    nn.init.zeros_(modelo.conv_salida.bias)
