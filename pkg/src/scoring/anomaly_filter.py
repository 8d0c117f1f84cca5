"""
Funciones de puntuación sobre el residuo x − x̂ de una ventana.

  MAE: promedio de |x − x̂| sobre todos los píxeles.
  AF:  d = ReLU(x − x̂) o |x − x̂|, se conservan los k valores más grandes
       y se divide la suma por la cantidad total de píxeles F·T.

ReLU conserva solo la energía que falta en la reconstrucción (x > x̂):
con ella, una reconstrucción que sobreestima en todos lados puntúa 0.
"""

from dataclasses import dataclass, field

import numpy as np

from src.shared.exceptions import ErrorConfiguracion, FormaIncompatible

# Default cuando la tabla por máquina no tiene entrada
K_FRACTION_DEFAULT = 0.1


@dataclass(frozen=True)
class AFConfig:
    k_fraction: float = K_FRACTION_DEFAULT
    use_relu: bool = False
    # tipo de máquina → {"k_fraction": ..., "use_relu": ...}
    per_machine: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.k_fraction <= 1:
            raise ErrorConfiguracion(f"af.k_fraction debe estar en (0, 1] (recibido {self.k_fraction})")
        for maquina, entrada in self.per_machine.items():
            desconocidas = set(entrada) - {"k_fraction", "use_relu"}
            if desconocidas:
                raise ErrorConfiguracion(f"af.per_machine.{maquina}: claves desconocidas {sorted(desconocidas)}")
            k = entrada.get("k_fraction", self.k_fraction)
            if not 0 < k <= 1:
                raise ErrorConfiguracion(f"af.per_machine.{maquina}.k_fraction fuera de (0, 1]: {k}")

    def for_machine(self, machine_type: str | None) -> "AFConfig":
        """Parámetros efectivos para un tipo de máquina (sin la tabla anidada)."""
        entrada = self.per_machine.get(machine_type, {}) if machine_type else {}
        return AFConfig(
            k_fraction=float(entrada.get("k_fraction", self.k_fraction)),
            use_relu=bool(entrada.get("use_relu", self.use_relu)),
        )


@dataclass
class AnomalyMap:
    """Residuo de una ventana y su versión filtrada (píxeles no seleccionados en cero)."""
    residual: np.ndarray
    filtered: np.ndarray
    window_origin: int = 0


def _validar_formas(x: np.ndarray, xhat: np.ndarray) -> None:
    if x.shape != xhat.shape:
        raise FormaIncompatible(f"x {x.shape} y x̂ {xhat.shape} no tienen la misma forma")


def k_for(k_fraction: float, n_pixels: int) -> int:
    """k = round(k_fraction · píxeles), nunca menor que 1."""
    return max(1, min(n_pixels, int(round(k_fraction * n_pixels))))


def activation(residual: np.ndarray, use_relu: bool) -> np.ndarray:
    return np.maximum(residual, 0.0) if use_relu else np.abs(residual)


def topk_scores(d: np.ndarray, k_fraction: float) -> np.ndarray:
    """
    Puntaje AF de cada fila de d (n, píxeles) ya activada.

    Los k seleccionados se suman en orden ascendente, igual que un sort
    completo; con k = píxeles el resultado es la media de la fila.
    """
    n_pixels = d.shape[-1]
    k = k_for(k_fraction, n_pixels)
    if k == n_pixels:
        return np.mean(d, axis=-1)
    seleccion = np.partition(d, n_pixels - k, axis=-1)[..., n_pixels - k:]
    return np.sort(seleccion, axis=-1).sum(axis=-1) / n_pixels


def af_score(x: np.ndarray, xhat: np.ndarray, cfg: AFConfig, window_origin: int = 0):
    """
    :return: (puntaje, AnomalyMap)
    :raises FormaIncompatible: si x y x̂ difieren en forma
    """
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    _validar_formas(x, xhat)

    residuo = x - xhat
    d = activation(residuo, cfg.use_relu).ravel()
    puntaje = float(topk_scores(d[None, :], cfg.k_fraction)[0])

    k = k_for(cfg.k_fraction, d.size)
    filtrado = np.zeros_like(d)
    indices = np.argpartition(d, d.size - k)[d.size - k:]
    filtrado[indices] = d[indices]

    return puntaje, AnomalyMap(
        residual=residuo, filtered=filtrado.reshape(residuo.shape), window_origin=window_origin
    )


def mae_score(x: np.ndarray, xhat: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    _validar_formas(x, xhat)
    return float(np.mean(np.abs(x - xhat)))
