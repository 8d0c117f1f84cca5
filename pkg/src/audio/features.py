"""
Extracción de features FBank para SonoDiff.

Convierte archivos WAV en matrices log-mel normalizadas a [0, 1] y las
corta en ventanas cuadradas W×W, que son las muestras x_0 sobre las que
trabaja la difusión.

Cadena de extracción:
  |STFT| (Hann de 25 ms, hop de 10 ms, FFT de 1024 puntos)
    → proyección a n_mels filtros triangulares HTK (pico 1, sin normalización slaney)
    → ln(x + 1e-10)
    → min-max por clip a [0, 1] (clip constante → todo ceros)

Todas las funciones son puras: se pueden llamar en paralelo sobre clips distintos.
"""

import math
import warnings
from dataclasses import dataclass

import librosa
import numpy as np
import soundfile as sf
from scipy.signal import get_window

from src.shared.exceptions import (
    ErrorAudio,
    ErrorConfiguracion,
    FrecuenciaIncompatible,
    ClipDemasiadoCorto,
)
from src.shared.logger import obtener_logger

logger = obtener_logger("audio")

# Piso de la compresión logarítmica
LOG_EPS = 1e-10

# Subtipos de WAV que sabemos decodificar sin pérdida de significado
SUBTIPOS_SOPORTADOS = {"PCM_16", "PCM_24", "PCM_32", "FLOAT", "DOUBLE"}


# =============================================================================
# Tipos
# =============================================================================

@dataclass(frozen=True)
class FeatureConfig:
    """Parámetros de extracción y ventaneo. Los defaults siguen el setup de 16 kHz / 128 mels."""
    sample_rate: int = 16000
    fft_size: int = 1024
    win_ms: float = 25.0
    hop_ms: float = 10.0
    n_mels: int = 128
    fmin: float = 0.0
    fmax: float = 8000.0
    window: int = 128
    train_hop: int = 128
    test_hop: int = 5

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ErrorConfiguracion(f"features.sample_rate debe ser > 0 (recibido {self.sample_rate})")
        if self.win_samples > self.fft_size:
            raise ErrorConfiguracion(
                f"La ventana de análisis ({self.win_samples} muestras) no entra en la FFT de {self.fft_size} puntos"
            )
        if self.hop_samples <= 0:
            raise ErrorConfiguracion("features.hop_ms produce un hop de 0 muestras")
        if not 0.0 <= self.fmin < self.fmax <= self.sample_rate / 2:
            raise ErrorConfiguracion(
                f"Se requiere 0 <= fmin < fmax <= Nyquist ({self.sample_rate / 2} Hz)"
            )
        if self.n_mels < 1:
            raise ErrorConfiguracion("features.n_mels debe ser >= 1")
        if self.window != self.n_mels:
            raise ErrorConfiguracion(
                f"features.window ({self.window}) debe ser igual a n_mels ({self.n_mels})"
            )
        if self.train_hop < 1 or self.test_hop < 1:
            raise ErrorConfiguracion("Los hops de ventaneo deben ser >= 1")

    @property
    def win_samples(self) -> int:
        return int(round(self.win_ms * self.sample_rate / 1000))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_ms * self.sample_rate / 1000))


@dataclass
class Waveform:
    """Audio mono con amplitudes en ±1.0."""
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.sample_rate <= 0:
            raise ErrorAudio(f"sample_rate inválido: {self.sample_rate}")
        if self.samples.ndim != 1:
            raise ErrorAudio(f"Se esperaba un solo canal, forma recibida {self.samples.shape}")
        if self.samples.size == 0:
            raise ErrorAudio("Forma de onda vacía")

    @property
    def duration(self) -> float:
        """Duración en segundos."""
        return self.samples.size / self.sample_rate


@dataclass
class FBankFeature:
    """Matriz F×T (mels × frames) normalizada a [0, 1]."""
    values: np.ndarray
    clip_id: str = ""

    @property
    def n_mels(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


@dataclass
class WindowBatch:
    """
    Ventanas W×W cortadas a lo largo del tiempo.
    valid_frames guarda el T original para poder recortar el padding.
    """
    windows: np.ndarray
    origin_frames: np.ndarray
    clip_id: str = ""
    valid_frames: int = 0

    def __len__(self) -> int:
        return self.windows.shape[0]


# =============================================================================
# Operaciones
# =============================================================================

def load_wav(path, expected_rate: int = 16000) -> Waveform:
    """
    Decodifica un WAV a mono float en ±1.0 a su frecuencia nativa.

    Los archivos estéreo se mezclan a mono con la media de los canales.
    No se resamplea: si la frecuencia no coincide con expected_rate
    se lanza FrecuenciaIncompatible.
    """
    try:
        info = sf.info(str(path))
    except (sf.LibsndfileError, RuntimeError, OSError) as e:
        raise ErrorAudio(f"No se pudo leer '{path}': {e}") from e

    if info.format != "WAV":
        raise ErrorAudio(f"'{path}' no es un archivo RIFF WAV (formato {info.format})")
    if info.subtype not in SUBTIPOS_SOPORTADOS:
        raise ErrorAudio(f"Codificación no soportada en '{path}': {info.subtype}")
    if info.samplerate != expected_rate:
        raise FrecuenciaIncompatible(
            f"sample-rate mismatch en '{path}': {info.samplerate} Hz, se esperaba {expected_rate} Hz"
        )

    datos, sr = sf.read(str(path), dtype="float32", always_2d=True)
    if datos.shape[1] > 1:
        logger.debug(f"'{path}' tiene {datos.shape[1]} canales, se mezcla a mono")
    # (muestras, canales) → mono por media de canales
    return Waveform(samples=datos.mean(axis=1), sample_rate=sr)


def mel_filterbank(cfg: FeatureConfig) -> np.ndarray:
    """
    Banco de n_mels filtros triangulares en escala HTK, pico 1 en cada centro.
    Forma (n_mels, fft_size // 2 + 1).
    """
    with warnings.catch_warnings():
        # librosa avisa de filtros vacíos cuando la resolución de la FFT es gruesa;
        # el cubrimiento de bins no depende de eso.
        warnings.simplefilter("ignore", UserWarning)
        return librosa.filters.mel(
            sr=cfg.sample_rate,
            n_fft=cfg.fft_size,
            n_mels=cfg.n_mels,
            fmin=cfg.fmin,
            fmax=cfg.fmax,
            htk=True,
            norm=None,
        )


def n_frames_for(n_samples: int, cfg: FeatureConfig) -> int:
    """T = ⌊(len − win)/hop⌋ + 1."""
    return (n_samples - cfg.win_samples) // cfg.hop_samples + 1


def extract_fbank(w: Waveform, cfg: FeatureConfig, clip_id: str = "") -> FBankFeature:
    """
    Extrae el FBank normalizado de una forma de onda.

    :raises ClipDemasiadoCorto: si la señal tiene menos muestras que una ventana de análisis.
    """
    if w.sample_rate != cfg.sample_rate:
        raise FrecuenciaIncompatible(
            f"sample-rate mismatch: forma de onda a {w.sample_rate} Hz, configuración a {cfg.sample_rate} Hz"
        )
    if w.samples.size < cfg.win_samples:
        raise ClipDemasiadoCorto(
            f"El clip '{clip_id}' tiene {w.samples.size} muestras, "
            f"se necesitan al menos {cfg.win_samples}"
        )

    y = w.samples.astype(np.float64)
    # frame() devuelve (n_frames, win) con axis=0; sin centrado ni padding
    cuadros = librosa.util.frame(y, frame_length=cfg.win_samples, hop_length=cfg.hop_samples, axis=0)
    ventana = get_window("hann", cfg.win_samples, fftbins=True)

    # La ventana de 400 muestras se completa con ceros hasta fft_size
    magnitud = np.abs(np.fft.rfft(cuadros * ventana, n=cfg.fft_size, axis=1))   # (T, bins)
    mel = mel_filterbank(cfg) @ magnitud.T                                      # (F, T)
    log_mel = np.log(mel + LOG_EPS)

    return FBankFeature(values=normalize_minmax(log_mel).astype(np.float32), clip_id=clip_id)


def load_fbank(path, cfg: FeatureConfig, clip_id: str = "") -> tuple:
    """Lee un WAV y devuelve (FBankFeature, duración en segundos)."""
    w = load_wav(path, expected_rate=cfg.sample_rate)
    return extract_fbank(w, cfg, clip_id=clip_id), w.samples.size / w.sample_rate


def normalize_minmax(valores: np.ndarray) -> np.ndarray:
    """Min-max a [0, 1]; una matriz constante se mapea a ceros."""
    minimo = valores.min()
    rango = valores.max() - minimo
    if rango <= 0:
        return np.zeros_like(valores)
    return (valores - minimo) / rango


def slide_windows(f: FBankFeature, window: int, hop: int) -> WindowBatch:
    """
    Corta ventanas window×window a lo largo del tiempo con el hop dado.

    Si la última ventana queda incompleta, el feature se extiende por
    reflexión hasta el siguiente borde de ventana completa. Un clip con
    menos de `window` frames también se extiende hasta una ventana.
    """
    if window != f.n_mels:
        raise ErrorConfiguracion(
            f"La altura de ventana ({window}) debe coincidir con la cantidad de mels ({f.n_mels})"
        )
    if hop < 1:
        raise ErrorConfiguracion(f"hop debe ser >= 1 (recibido {hop})")

    total = f.n_frames
    n_ventanas = max(1, math.ceil((total - window) / hop) + 1)
    largo = (n_ventanas - 1) * hop + window

    valores = f.values
    if largo > total:
        valores = np.pad(valores, ((0, 0), (0, largo - total)), mode="reflect")

    origenes = np.arange(n_ventanas) * hop
    # sliding_window_view devuelve vistas; copiamos para que el batch sea independiente del feature
    vistas = np.lib.stride_tricks.sliding_window_view(valores, window, axis=1)[:, ::hop, :]
    ventanas = np.ascontiguousarray(vistas.transpose(1, 0, 2))

    return WindowBatch(
        windows=ventanas,
        origin_frames=origenes,
        clip_id=f.clip_id,
        valid_frames=total,
    )


def stitch_windows(batch: WindowBatch, window_values: np.ndarray | None = None) -> np.ndarray:
    """
    Reconstruye la matriz F×T a partir de ventanas que la particionan (hop == window)
    y recorta el padding. Si se pasa window_values se usan esos valores
    (por ejemplo reconstrucciones) en lugar de las ventanas originales.
    """
    valores = batch.windows if window_values is None else window_values
    if len(batch) > 1 and np.any(np.diff(batch.origin_frames) != valores.shape[-1]):
        raise ErrorConfiguracion("stitch_windows requiere ventanas con hop igual al ancho")
    return np.concatenate(list(valores), axis=1)[:, : batch.valid_frames]
