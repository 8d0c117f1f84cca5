"""
Fixtures compartidas por los tests.
"""

import pytest
import yaml

from src.denoiser import UNetConfig
from src.diffusion import DiffusionConfig, build_schedule


@pytest.fixture
def toy_unet_cfg():
    """Configuración de escritorio: base 16, multiplicadores (1, 2), entrada 32, atención en 16."""
    return UNetConfig(base_channels=16, channel_multipliers=(1, 2), input_size=32, attention_resolutions=(16,))


@pytest.fixture
def tiny_unet_cfg():
    """La configuración más chica: base 8, multiplicadores (1, 2), entrada 16, atención en 8."""
    return UNetConfig(base_channels=8, channel_multipliers=(1, 2), input_size=16, attention_resolutions=(8,))


@pytest.fixture(scope="session")
def diff_cfg():
    return DiffusionConfig()


@pytest.fixture(scope="session")
def sched(diff_cfg):
    return build_schedule(diff_cfg)


# =============================================================================
# Corrida de extremo a extremo con el modelo más chico
# =============================================================================

CONFIG_TINY = {
    "features": {"n_mels": 16, "window": 16, "train_hop": 16},
    "unet": {"base_channels": 8, "channel_multipliers": [1, 2], "input_size": 16, "attention_resolutions": [8]},
    "diffusion": {"total_steps": 100, "reverse_start": 20},
    "train": {"total_steps": 4, "batch_size": 2, "checkpoint_every": 2, "log_every": 2},
    "scoring": {"batch_size": 64},
    "seed": 3,
}

VARIABLES_RUTAS = ("SONODIFF_DATASET_ROOT", "SONODIFF_OUTPUT_DIR", "SONODIFF_CACHE_DIR")


@pytest.fixture(scope="session")
def corrida_tiny(tmp_path_factory):
    """
    Corpus sintético chico + config YAML + un entrenamiento de 4 pasos.
    Devuelve un dict con las rutas: corpus, manifest, config, output, run.
    """
    from src.cli.comandos import cmd_generate, cmd_train
    from src.cli.run_config import cargar_run_config
    from src.dataset import SynthSpec

    parche = pytest.MonkeyPatch()
    for variable in VARIABLES_RUTAS:
        parche.delenv(variable, raising=False)

    base = tmp_path_factory.mktemp("corrida")
    corpus = base / "corpus"
    cmd_generate(SynthSpec(n_normal_train=3, n_normal_test=2, n_anomaly_test=2, n_target_train=1, seed=5), corpus)

    config = base / "config.yaml"
    contenido = {**CONFIG_TINY, "paths": {"dataset_root": str(corpus), "output_dir": str(base / "runs")}}
    config.write_text(yaml.safe_dump(contenido), encoding="utf-8")

    checkpoints = cmd_train(cargar_run_config(config))
    yield {
        "corpus": corpus,
        "manifest": corpus / "manifest.csv",
        "config": config,
        "output": base / "runs",
        "run": base / "runs" / "default",
        "checkpoint": checkpoints["synth"],
    }
    parche.undo()
