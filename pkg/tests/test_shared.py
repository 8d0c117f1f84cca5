"""
Tests de la infraestructura compartida: logging por componente y entorno.
"""

import io
import logging

import pytest

from src.shared import logger as modulo_logger
from src.shared.config import _niveles_por_componente
from src.shared.logger import RAIZ, logger_raiz, obtener_logger


@pytest.fixture
def salida():
    """Redirige el handler de la raíz a un buffer y restaura el nivel al terminar."""
    raiz = logger_raiz()
    handler = raiz.handlers[0]
    anterior_stream, anterior_nivel = handler.stream, raiz.level
    buffer = io.StringIO()
    handler.setStream(buffer)
    yield buffer
    handler.setStream(anterior_stream)
    raiz.setLevel(anterior_nivel)


def test_componentes_cuelgan_de_la_raiz():
    logger = obtener_logger("puntuacion")
    assert logger.name == f"{RAIZ}.puntuacion"
    assert logger.parent is logging.getLogger(RAIZ)


def test_un_solo_handler_en_la_raiz():
    obtener_logger("entrenamiento")
    obtener_logger("entrenamiento")
    obtener_logger("worker")
    assert len(logging.getLogger(RAIZ).handlers) == 1
    assert not obtener_logger("entrenamiento").handlers
    assert not logging.getLogger(RAIZ).propagate


def test_mensaje_sale_una_vez_con_el_componente(salida):
    logger_raiz(logging.INFO)
    obtener_logger("puntuacion").info("clip listo")
    obtener_logger("puntuacion").info("otro clip")
    lineas = salida.getvalue().splitlines()
    assert len(lineas) == 2
    assert lineas[0].endswith("[INFO] sonodiff.puntuacion: clip listo")


def test_nivel_por_componente(salida, monkeypatch):
    monkeypatch.setattr(modulo_logger, "LOG_LEVELS_POR_COMPONENTE", {"test_detalle": logging.DEBUG})
    logger_raiz(logging.WARNING)

    obtener_logger("test_detalle").debug("por ventana")
    obtener_logger("test_general").info("progreso")
    texto = salida.getvalue()
    assert "sonodiff.test_detalle: por ventana" in texto
    assert "progreso" not in texto


def test_nivel_explicito_gana():
    assert obtener_logger("test_explicito", logging.ERROR).level == logging.ERROR


def test_parseo_de_niveles_por_componente():
    assert _niveles_por_componente("puntuacion=DEBUG, entrenamiento=warning") == {
        "puntuacion": logging.DEBUG,
        "entrenamiento": logging.WARNING,
    }
    assert _niveles_por_componente("") == {}
    assert _niveles_por_componente("sin_nivel,audio=NOEXISTE,=INFO") == {}
