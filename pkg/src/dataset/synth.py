"""
Corpus sintético de "máquinas" para entrenar y probar en escritorio.

Un clip normal es una suma de tonos base con jitter leve de amplitud y
fase más un piso de ruido gaussiano. Los clips del dominio target usan
los mismos tonos desafinados por un factor fijo. Un clip anómalo es su
clip normal pareado más una perturbación:

  added_tone:      tono extra en una frecuencia que no usan los normales,
                   dentro de un intervalo de tiempo
  dropped_band:    filtro notch sobre uno de los tonos base (falta energía)
  transient_click: ráfagas cortas de ruido periódicas dentro de un intervalo

Todo se deriva de la semilla: misma SynthSpec → mismos bytes.
"""

from dataclasses import dataclass
from pathlib import Path

import librosa
import numpy as np
import pandas as pd
import soundfile as sf
from scipy.signal import filtfilt, iirnotch

from src.audio import FeatureConfig
from src.dataset.scanner import clip_id_de
from src.shared.exceptions import ErrorConfiguracion, ErrorDataset
from src.shared.logger import obtener_logger

logger = obtener_logger("dataset")

TIPOS_ANOMALIA = ("added_tone", "dropped_band", "transient_click")
COLUMNAS_VERDAD = ["kind", "band_lo_hz", "band_hi_hz", "onset_s", "offset_s"]
COLUMNAS_MANIFIESTO = ["clip_id", "path", "machine_type", "section", "domain", "split", "label"]

# Amplitud total de los tonos base; deja margen para ruido y perturbaciones sin saturar PCM 16
AMPLITUD_TONOS = 0.5
FADE_S = 0.01
Q_NOTCH = 4.0
CLICK_PERIODO_S = 0.25
CLICK_DURACION_S = 0.004
# Semiancho mínimo de la banda de verdad de terreno (lóbulo principal de la Hann de 25 ms)
MEDIA_BANDA_MIN_HZ = 80.0

_CODIGO_TIPO = {"normal": 0, "anomaly": 1}
_CODIGO_DOMINIO = {"source": 0, "target": 1}
_CODIGO_SPLIT = {"train": 0, "test": 1}


@dataclass(frozen=True)
class SynthSpec:
    n_normal_train: int = 100
    n_normal_test: int = 20
    n_anomaly_test: int = 20
    base_tones: tuple = (220.0, 440.0, 880.0, 1320.0)
    anomaly_kind: str = "added_tone"
    noise_floor: float = 0.01
    seed: int = 0
    machine_type: str = "synth"
    section: str = "00"
    sample_rate: int = 16000
    duration_s: float = 2.0
    amplitude_jitter: float = 0.1
    anomaly_tone_hz: float = 3000.0
    # clips de train del dominio target (pocos, como en DCASE) y fracción del test en target
    n_target_train: int = 10
    target_fraction: float = 0.5
    target_detune: float = 0.04

    def __post_init__(self):
        object.__setattr__(self, "base_tones", tuple(float(f) for f in self.base_tones))
        if min(self.n_normal_train, self.n_normal_test, self.n_anomaly_test) < 1:
            raise ErrorConfiguracion("Las cantidades de clips deben ser >= 1")
        if self.n_target_train < 0 or not 0.0 <= self.target_fraction <= 1.0:
            raise ErrorConfiguracion("n_target_train >= 0 y target_fraction en [0, 1]")
        if self.anomaly_kind not in TIPOS_ANOMALIA:
            raise ErrorConfiguracion(f"anomaly_kind desconocido: '{self.anomaly_kind}'")
        if not self.base_tones:
            raise ErrorConfiguracion("Se necesita al menos un tono base")
        nyquist = self.sample_rate / 2
        maximo = max(self.base_tones) * (1 + self.target_detune)
        if min(self.base_tones) <= 0 or maximo >= nyquist or self.anomaly_tone_hz >= nyquist:
            raise ErrorConfiguracion(f"Las frecuencias deben estar en (0, {nyquist}) Hz")
        if self.noise_floor < 0 or self.duration_s <= 0:
            raise ErrorConfiguracion("noise_floor >= 0 y duration_s > 0")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate))


@dataclass
class GroundTruth:
    """Soporte tiempo-frecuencia de la perturbación inyectada."""
    kind: str
    band_lo_hz: float
    band_hi_hz: float
    onset_s: float
    offset_s: float

    def to_dict(self) -> dict:
        return {c: getattr(self, c) for c in COLUMNAS_VERDAD}


# =============================================================================
# Síntesis
# =============================================================================

def _rng(spec: SynthSpec, label: str, domain: str, split: str, indice: int) -> np.random.Generator:
    """Generador propio de cada clip, derivado de la semilla y de su posición en el corpus."""
    return np.random.default_rng([spec.seed, _CODIGO_TIPO[label], _CODIGO_DOMINIO[domain],
                                  _CODIGO_SPLIT[split], indice])


def tonos_de(spec: SynthSpec, domain: str) -> np.ndarray:
    factor = 1.0 + spec.target_detune if domain == "target" else 1.0
    return np.asarray(spec.base_tones) * factor


def clip_normal(spec: SynthSpec, rng: np.random.Generator, domain: str = "source") -> np.ndarray:
    t = np.arange(spec.n_samples) / spec.sample_rate
    tonos = tonos_de(spec, domain)
    amplitudes = AMPLITUD_TONOS / len(tonos) * (1 + spec.amplitude_jitter * rng.uniform(-1, 1, len(tonos)))
    fases = rng.uniform(0, 2 * np.pi, len(tonos))
    senal = (amplitudes[:, None] * np.sin(2 * np.pi * tonos[:, None] * t + fases[:, None])).sum(axis=0)
    return senal + spec.noise_floor * rng.standard_normal(spec.n_samples)


def _envolvente(spec: SynthSpec, inicio: int, fin: int) -> np.ndarray:
    """1 dentro de [inicio, fin) con rampas coseno, 0 afuera."""
    env = np.zeros(spec.n_samples)
    env[inicio:fin] = 1.0
    rampa = min(int(FADE_S * spec.sample_rate), (fin - inicio) // 2)
    if rampa > 0:
        subida = 0.5 - 0.5 * np.cos(np.linspace(0, np.pi, rampa))
        env[inicio:inicio + rampa] = subida
        env[fin - rampa:fin] = subida[::-1]
    return env


def _intervalo(spec: SynthSpec, rng: np.random.Generator) -> tuple:
    """Intervalo aleatorio que cubre entre 30% y 60% del clip."""
    largo = int(spec.n_samples * rng.uniform(0.3, 0.6))
    inicio = int(rng.integers(0, spec.n_samples - largo))
    return inicio, inicio + largo


def perturb(x: np.ndarray, spec: SynthSpec, rng: np.random.Generator, domain: str = "source") -> tuple:
    """
    Aplica la perturbación configurada a un clip normal.

    :return: (clip anómalo, GroundTruth)
    """
    sr = spec.sample_rate
    nyquist = sr / 2

    if spec.anomaly_kind == "added_tone":
        inicio, fin = _intervalo(spec, rng)
        t = np.arange(spec.n_samples) / sr
        amplitud = AMPLITUD_TONOS / len(spec.base_tones)
        tono = amplitud * np.sin(2 * np.pi * spec.anomaly_tone_hz * t + rng.uniform(0, 2 * np.pi))
        y = x + tono * _envolvente(spec, inicio, fin)
        f = spec.anomaly_tone_hz
        verdad = GroundTruth("added_tone", f - MEDIA_BANDA_MIN_HZ, f + MEDIA_BANDA_MIN_HZ, inicio / sr, fin / sr)

    elif spec.anomaly_kind == "dropped_band":
        tonos = tonos_de(spec, domain)
        f0 = float(tonos[rng.integers(len(tonos))])
        b, a = iirnotch(f0, Q_NOTCH, fs=sr)
        y = filtfilt(b, a, x)
        media = max(f0 / Q_NOTCH / 2, MEDIA_BANDA_MIN_HZ)
        verdad = GroundTruth("dropped_band", max(f0 - media, 0.0), min(f0 + media, nyquist),
                             0.0, spec.duration_s)

    else:
        inicio, fin = _intervalo(spec, rng)
        periodo = int(CLICK_PERIODO_S * sr)
        largo = int(CLICK_DURACION_S * sr)
        caida = np.exp(-np.arange(largo) / (largo / 4))
        y = x.copy()
        for desde in range(inicio, fin - largo, periodo):
            y[desde:desde + largo] += 0.5 * rng.standard_normal(largo) * caida
        verdad = GroundTruth("transient_click", 0.0, nyquist, inicio / sr, fin / sr)

    return y, verdad


def synth_pair(spec: SynthSpec, indice: int, domain: str = "source") -> tuple:
    """
    Clip anómalo de test número `indice` junto con el normal del que parte.

    :return: (normal, anómalo, GroundTruth)
    """
    rng = _rng(spec, "anomaly", domain, "test", indice)
    normal = clip_normal(spec, rng, domain)
    anomalo, verdad = perturb(normal, spec, rng, domain)
    return normal, anomalo, verdad


def _nombre(spec: SynthSpec, domain: str, split: str, label: str, indice: int) -> str:
    atributo = "noAttribute" if label == "normal" else spec.anomaly_kind.replace("_", "-")
    return f"section_{spec.section}_{domain}_{split}_{label}_{indice:04d}_{atributo}.wav"


def _plan(spec: SynthSpec) -> list:
    """(split, dominio, etiqueta, índice) de cada clip, en orden de escritura."""
    plan = [("train", "source", "normal", i) for i in range(spec.n_normal_train)]
    plan += [("train", "target", "normal", i) for i in range(spec.n_target_train)]
    for label, n in (("normal", spec.n_normal_test), ("anomaly", spec.n_anomaly_test)):
        n_target = int(round(n * spec.target_fraction))
        plan += [("test", "source", label, i) for i in range(n - n_target)]
        plan += [("test", "target", label, i) for i in range(n_target)]
    return plan


def synth_generate(spec: SynthSpec, out) -> pd.DataFrame:
    """
    Escribe el corpus en <out>/<machine_type>/{train,test}/ como WAV PCM 16 mono
    y devuelve el manifiesto (las rutas son relativas a out).

    :raises ErrorDataset: si no se puede escribir en out
    """
    raiz = Path(out)
    filas = []
    try:
        for split in ("train", "test"):
            (raiz / spec.machine_type / split).mkdir(parents=True, exist_ok=True)

        for split, domain, label, indice in _plan(spec):
            if label == "anomaly":
                _, senal, verdad = synth_pair(spec, indice, domain)
                extra = verdad.to_dict()
            else:
                senal = clip_normal(spec, _rng(spec, label, domain, split, indice), domain)
                extra = {c: np.nan for c in COLUMNAS_VERDAD}
                extra["kind"] = ""

            nombre = _nombre(spec, domain, split, label, indice)
            relativa = Path(spec.machine_type) / split / nombre
            sf.write(raiz / relativa, np.clip(senal, -1.0, 1.0), spec.sample_rate, subtype="PCM_16")

            filas.append({
                "clip_id": clip_id_de(spec.machine_type, split, Path(nombre).stem),
                "path": relativa.as_posix(),
                "machine_type": spec.machine_type,
                "section": spec.section,
                "domain": domain,
                "split": split,
                "label": label,
                **extra,
            })
    except OSError as e:
        raise ErrorDataset(f"No se pudo escribir el corpus en '{raiz}': {e}") from e

    manifiesto = pd.DataFrame(filas, columns=COLUMNAS_MANIFIESTO + COLUMNAS_VERDAD)
    logger.info(
        f"Corpus '{spec.machine_type}' ({spec.anomaly_kind}): {len(manifiesto)} clips en '{raiz}'"
    )
    return manifiesto


# =============================================================================
# Verdad de terreno en el plano del FBank
# =============================================================================

def ground_truth_mask(verdad: GroundTruth | dict, cfg: FeatureConfig, n_frames: int) -> np.ndarray:
    """
    Máscara booleana (n_mels, n_frames) del soporte de la perturbación.

    Un bin mel pertenece si su frecuencia central cae en la banda (como mínimo
    el bin más cercano al centro de la banda); un frame si su centro temporal
    cae en [onset, offset].
    """
    if isinstance(verdad, dict):
        verdad = GroundTruth(**{c: verdad[c] for c in COLUMNAS_VERDAD})

    centros = librosa.mel_frequencies(n_mels=cfg.n_mels + 2, fmin=cfg.fmin, fmax=cfg.fmax, htk=True)[1:-1]
    bandas = (centros >= verdad.band_lo_hz) & (centros <= verdad.band_hi_hz)
    if not bandas.any():
        bandas[np.argmin(np.abs(centros - (verdad.band_lo_hz + verdad.band_hi_hz) / 2))] = True

    tiempos = (np.arange(n_frames) * cfg.hop_samples + cfg.win_samples / 2) / cfg.sample_rate
    cuadros = (tiempos >= verdad.onset_s) & (tiempos <= verdad.offset_s)
    return bandas[:, None] & cuadros[None, :]
