"""
Configuración completa de una corrida.

El archivo YAML tiene una sección por módulo más la semilla global:

  features:   FeatureConfig      (src.audio)
  diffusion:  DiffusionConfig    (src.diffusion)
  unet:       UNetConfig         (src.denoiser)
  train:      TrainConfig        (src.training)
  af:         AFConfig           (src.scoring)
  scoring:    ScoringConfig      (src.scoring)
  evaluation: EvaluationConfig
  paths:      PathsConfig
  seed:       entero

Cada sección se valida a sí misma al construirse. Una clave que no
corresponde a ningún campo se rechaza. El entorno solo puede
sobreescribir las rutas (ver src/shared/config.py).
"""

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from src.audio import FeatureConfig
from src.denoiser import UNetConfig
from src.diffusion import DiffusionConfig
from src.evaluation.metrics import CONVENCIONES, P_DEFAULT
from src.scoring import AFConfig, ScoringConfig
from src.shared.config import CACHE_DIR, DATASET_ROOT, OUTPUT_DIR
from src.shared.exceptions import ErrorConfiguracion
from src.training import TrainConfig

# Variables de entorno que pisan la sección paths
ENTORNO_RUTAS = {
    "dataset_root": "SONODIFF_DATASET_ROOT",
    "output_dir": "SONODIFF_OUTPUT_DIR",
    "cache_dir": "SONODIFF_CACHE_DIR",
}


@dataclass(frozen=True)
class EvaluationConfig:
    p: float = P_DEFAULT
    convention: str = "domain_pure"

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ErrorConfiguracion(f"evaluation.p debe estar en (0, 1] (recibido {self.p})")
        if self.convention not in CONVENCIONES:
            raise ErrorConfiguracion(f"evaluation.convention desconocida: '{self.convention}'")


@dataclass(frozen=True)
class PathsConfig:
    dataset_root: str = DATASET_ROOT
    output_dir: str = OUTPUT_DIR
    cache_dir: str = CACHE_DIR
    # CSV file,domain,label para clips cuyo nombre no trae etiquetas
    label_map: str = ""


@dataclass(frozen=True)
class RunConfig:
    features: FeatureConfig = field(default_factory=FeatureConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    unet: UNetConfig = field(default_factory=UNetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    af: AFConfig = field(default_factory=AFConfig)
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    seed: int = 0

    def __post_init__(self):
        if self.unet.input_size != self.features.window:
            raise ErrorConfiguracion(
                f"unet.input_size ({self.unet.input_size}) debe ser igual a features.window ({self.features.window})"
            )
        if self.scoring.test_hop != self.features.test_hop:
            raise ErrorConfiguracion(
                f"scoring.test_hop ({self.scoring.test_hop}) y features.test_hop ({self.features.test_hop}) difieren"
            )
        # la semilla global manda sobre la del trainer
        if self.train.seed != self.seed:
            object.__setattr__(self, "train", replace(self.train, seed=self.seed))

    def to_dict(self) -> dict:
        return _a_listas(asdict(self))


SECCIONES = {
    "features": FeatureConfig,
    "diffusion": DiffusionConfig,
    "unet": UNetConfig,
    "train": TrainConfig,
    "af": AFConfig,
    "scoring": ScoringConfig,
    "evaluation": EvaluationConfig,
    "paths": PathsConfig,
}

# Preset de escritorio: ventanas de 32×32 y un U-Net chico; la difusión no cambia
PRESET_TOY = {
    "features": {"n_mels": 32, "window": 32, "train_hop": 32},
    "unet": {"base_channels": 16, "channel_multipliers": [1, 2], "input_size": 32, "attention_resolutions": [16]},
    "train": {"total_steps": 2000, "checkpoint_every": 500, "log_every": 50},
}


def _a_listas(valor):
    if isinstance(valor, dict):
        return {k: _a_listas(v) for k, v in valor.items()}
    if isinstance(valor, (list, tuple)):
        return [_a_listas(v) for v in valor]
    return valor


def _fusionar(base: dict, encima: dict) -> dict:
    resultado = {k: dict(v) if isinstance(v, dict) else v for k, v in base.items()}
    for clave, valor in encima.items():
        if isinstance(valor, dict) and isinstance(resultado.get(clave), dict):
            resultado[clave] = {**resultado[clave], **valor}
        else:
            resultado[clave] = valor
    return resultado


def _construir(nombre: str, cls, valores):
    if valores is None:
        return cls()
    if not isinstance(valores, dict):
        raise ErrorConfiguracion(f"La sección '{nombre}' debe ser un mapeo clave: valor")
    conocidas = {f.name for f in fields(cls)}
    desconocidas = sorted(set(valores) - conocidas)
    if desconocidas:
        raise ErrorConfiguracion(f"Claves desconocidas en '{nombre}': {desconocidas}")
    try:
        return cls(**valores)
    except TypeError as e:
        raise ErrorConfiguracion(f"Sección '{nombre}' inválida: {e}") from e


def run_config_desde_dict(datos: dict, toy: bool = False) -> RunConfig:
    """
    Construye la configuración desde un mapeo (YAML ya leído).
    Con toy=True el preset de escritorio es la base y el mapeo lo pisa.
    """
    datos = datos or {}
    desconocidas = sorted(set(datos) - set(SECCIONES) - {"seed"})
    if desconocidas:
        raise ErrorConfiguracion(f"Secciones desconocidas en la configuración: {desconocidas}")
    if toy:
        datos = _fusionar(PRESET_TOY, datos)

    secciones = {nombre: _construir(nombre, cls, datos.get(nombre)) for nombre, cls in SECCIONES.items()}
    secciones["paths"] = _rutas_de_entorno(secciones["paths"])
    return RunConfig(**secciones, seed=int(datos.get("seed", 0)))


def _rutas_de_entorno(paths: PathsConfig) -> PathsConfig:
    cambios = {campo: os.environ[var] for campo, var in ENTORNO_RUTAS.items() if os.environ.get(var)}
    return replace(paths, **cambios) if cambios else paths


def cargar_run_config(path=None, toy: bool = False) -> RunConfig:
    """
    :param path: archivo YAML; None usa los defaults
    :raises ErrorConfiguracion: archivo inexistente, YAML inválido, claves desconocidas o valores fuera de rango
    """
    datos = {}
    if path is not None:
        origen = Path(path)
        if not origen.is_file():
            raise ErrorConfiguracion(f"No existe el archivo de configuración '{origen}'")
        try:
            with open(origen, encoding="utf-8") as f:
                datos = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ErrorConfiguracion(f"'{origen}' no es YAML válido: {e}") from e
        if not isinstance(datos, dict):
            raise ErrorConfiguracion(f"'{origen}' debe contener un mapeo de secciones")
    return run_config_desde_dict(datos, toy=toy)
