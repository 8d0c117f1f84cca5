"""
Features de audio: decodificación WAV, FBank log-mel normalizado y ventaneo.
"""

from src.audio.features import (
    FeatureConfig,
    Waveform,
    FBankFeature,
    WindowBatch,
    load_wav,
    extract_fbank,
    load_fbank,
    slide_windows,
    stitch_windows,
    mel_filterbank,
    n_frames_for,
    normalize_minmax,
)

__all__ = [
    "FeatureConfig", "Waveform", "FBankFeature", "WindowBatch",
    "load_wav", "extract_fbank", "load_fbank", "slide_windows", "stitch_windows",
    "mel_filterbank", "n_frames_for", "normalize_minmax",
]
