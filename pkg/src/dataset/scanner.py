"""
Descubrimiento de datasets estilo DCASE en disco.

Layout esperado:
  <raiz>/<tipo_maquina>/train/<clip>.wav
  <raiz>/<tipo_maquina>/test/<clip>.wav

Gramática de nombres de archivo:
  section_{SS}_{dominio}_{split}_{etiqueta}_{id}_{atributos...}.wav

Los tokens de dominio y etiqueta se buscan por valor, no por posición,
así los nombres con atributos extra (o sin ellos) se siguen leyendo.
El split lo decide el directorio.
"""

from dataclasses import dataclass
from pathlib import Path

from src.shared.exceptions import ErrorDataset
from src.shared.logger import obtener_logger

logger = obtener_logger("dataset")

SPLITS = ("train", "test")
DOMINIOS = ("source", "target")
ETIQUETAS = ("normal", "anomaly")


@dataclass(frozen=True)
class ClipMeta:
    path: Path
    machine_type: str
    section: str
    domain: str
    split: str
    label: str

    @property
    def clip_id(self) -> str:
        return clip_id_de(self.machine_type, self.split, self.path.stem)

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "path": str(self.path),
            "machine_type": self.machine_type,
            "section": self.section,
            "domain": self.domain,
            "split": self.split,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, datos: dict) -> "ClipMeta":
        return cls(
            path=Path(datos["path"]), machine_type=datos["machine_type"], section=str(datos["section"]),
            domain=datos["domain"], split=datos["split"], label=datos["label"],
        )


def clip_id_de(machine_type: str, split: str, nombre: str) -> str:
    """Identificador único dentro de un dataset: <máquina>/<split>/<nombre sin extensión>."""
    return f"{machine_type}/{split}/{nombre}"


def parse_filename(nombre, machine_type: str, split: str, etiquetas: dict | None = None) -> ClipMeta:
    """
    Lee sección, dominio y etiqueta de un nombre (o ruta) de archivo.

    :param etiquetas: mapeo opcional nombre de archivo → {"domain", "label"} para
                      datasets cuyos clips de test no traen los tokens (p. ej. evaluación DCASE)
    :raises ErrorDataset: si un clip de train viene etiquetado como anómalo
    """
    ruta = Path(nombre)
    tokens = ruta.stem.split("_")

    section = "00"
    if len(tokens) >= 2 and tokens[0] == "section":
        section = tokens[1]

    domain = next((t for t in tokens if t in DOMINIOS), "unknown")
    label = next((t for t in tokens if t in ETIQUETAS), "unknown")

    if etiquetas and ruta.name in etiquetas:
        override = etiquetas[ruta.name]
        domain = override.get("domain", domain)
        label = override.get("label", label)

    if split == "train":
        if label == "anomaly":
            raise ErrorDataset(f"Clip de entrenamiento etiquetado como anómalo: {ruta.name}")
        # train es solo normal por definición
        label = "normal"
    elif label == "unknown":
        logger.warning(f"{machine_type}/{split}/{ruta.name}: sin token normal/anomaly, etiqueta desconocida")

    if domain == "unknown":
        logger.warning(f"{machine_type}/{split}/{ruta.name}: sin token source/target")

    return ClipMeta(path=ruta, machine_type=machine_type, section=section,
                    domain=domain, split=split, label=label)


def scan_dataset(root, machine_types: list | None = None, etiquetas: dict | None = None) -> list:
    """
    Recorre <root>/<máquina>/{train,test}/*.wav en orden alfabético.

    :param machine_types: si se indica, solo esas máquinas (deben existir)
    :raises ErrorDataset: raíz o máquina inexistente, máquina sin train ni test, o cero clips
    """
    raiz = Path(root)
    if not raiz.is_dir():
        raise ErrorDataset(f"No existe el directorio del dataset: '{raiz}'")

    if machine_types:
        maquinas = sorted(machine_types)
        faltantes = [m for m in maquinas if not (raiz / m).is_dir()]
        if faltantes:
            raise ErrorDataset(f"Máquinas inexistentes en '{raiz}': {faltantes}")
    else:
        maquinas = sorted(p.name for p in raiz.iterdir() if p.is_dir())

    clips = []
    for maquina in maquinas:
        presentes = [s for s in SPLITS if (raiz / maquina / s).is_dir()]
        if not presentes:
            raise ErrorDataset(f"'{raiz / maquina}' no tiene directorios train/ ni test/")
        for split in SPLITS:
            if split not in presentes:
                logger.warning(f"'{maquina}' no tiene directorio {split}/")
                continue
            for archivo in sorted((raiz / maquina / split).glob("*.wav")):
                clips.append(parse_filename(archivo, maquina, split, etiquetas))

    if not clips:
        raise ErrorDataset(f"No se encontraron clips .wav en '{raiz}'")

    logger.info(f"Dataset '{raiz}': {len(clips)} clips en {len(maquinas)} máquinas")
    return clips


def filtrar(clips: list, split: str | None = None, machine_type: str | None = None) -> list:
    return [
        c for c in clips
        if (split is None or c.split == split) and (machine_type is None or c.machine_type == machine_type)
    ]
