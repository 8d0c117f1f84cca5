"""
Logging de SonoDiff.

Todos los loggers cuelgan de uno raíz, "sonodiff": obtener_logger("puntuacion")
devuelve "sonodiff.puntuacion". El único handler (stdout, formato común) vive
en la raíz y los componentes solo heredan de ella, así que un mensaje sale
una sola vez aunque el mismo módulo se importe desde la CLI y desde un
worker de Celery.

El nivel general sale de SONODIFF_LOG_LEVEL. SONODIFF_LOG_LEVELS lo pisa por
componente, por ejemplo "puntuacion=DEBUG,entrenamiento=WARNING" para ver el
detalle por ventana sin inundar la salida con el progreso del entrenamiento.
"""

import logging
import sys

from src.shared.config import LOG_LEVEL, LOG_LEVELS_POR_COMPONENTE

RAIZ = "sonodiff"

# Cada línea de log va a verse así:
#   2026-07-15 14:32:01 [INFO] sonodiff.entrenamiento: paso 1200/64000 loss=0.0412
FORMATO_LOG = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
FORMATO_FECHA = "%Y-%m-%d %H:%M:%S"


def logger_raiz(nivel: int | None = None) -> logging.Logger:
    """
    El logger "sonodiff", con su handler a stdout instalado una sola vez.

    :param nivel: si se indica, reemplaza el nivel general
    """
    raiz = logging.getLogger(RAIZ)
    if not raiz.handlers:
        handler = logging.StreamHandler(sys.stdout)
        handler.setFormatter(logging.Formatter(FORMATO_LOG, datefmt=FORMATO_FECHA))
        raiz.addHandler(handler)
        raiz.setLevel(LOG_LEVEL)
        # el root de Python (o el de Celery) tiene sus propios handlers
        raiz.propagate = False
    if nivel is not None:
        raiz.setLevel(nivel)
    return raiz


def obtener_logger(componente: str, nivel: int | None = None) -> logging.Logger:
    """
    Logger de un componente de SonoDiff.

    :param componente: "audio", "difusion", "entrenamiento", "puntuacion", "cli", "worker", ...
    :param nivel: nivel propio del componente; sin él se usa el de
        SONODIFF_LOG_LEVELS o, si tampoco está, el de la raíz
    """
    logger_raiz()
    logger = logging.getLogger(f"{RAIZ}.{componente}")
    nivel = LOG_LEVELS_POR_COMPONENTE.get(componente) if nivel is None else nivel
    if nivel is not None:
        logger.setLevel(nivel)
    return logger
