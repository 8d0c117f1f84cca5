"""
Datasets: descubrimiento de árboles estilo DCASE y corpus sintético de escritorio.
"""

from src.dataset.scanner import ClipMeta, clip_id_de, parse_filename, scan_dataset, filtrar
from src.dataset.synth import (
    SynthSpec,
    GroundTruth,
    TIPOS_ANOMALIA,
    clip_normal,
    perturb,
    synth_pair,
    synth_generate,
    ground_truth_mask,
)

__all__ = [
    "ClipMeta", "clip_id_de", "parse_filename", "scan_dataset", "filtrar",
    "SynthSpec", "GroundTruth", "TIPOS_ANOMALIA",
    "clip_normal", "perturb", "synth_pair", "synth_generate", "ground_truth_mask",
]
