"""
Configuración de la instancia Celery.

Define la conexión al broker Redis y el autodiscovery de tareas en
src.workers.tasks. No hay tareas periódicas: los workers solo reciben
clips a puntuar cuando la CLI corre con --backend celery.
"""

from celery import Celery

from src.shared.config import (
    CELERY_BROKER_URL,
    CELERY_RESULT_BACKEND,
    CELERY_TASK_ALWAYS_EAGER,
)

# Instancia principal de Celery
celery_app = Celery("sonodiff")

celery_app.conf.update(
    broker_url=CELERY_BROKER_URL,
    result_backend=CELERY_RESULT_BACKEND,
    include=["src.workers.tasks"],

    # Los resultados viajan como JSON: ClipScore.to_dict() sin mapas ni residuos
    task_serializer="json",
    result_serializer="json",
    accept_content=["json"],

    # Un clip por vez por proceso: la inferencia ya usa todos los hilos de torch
    worker_prefetch_multiplier=1,
    task_acks_late=True,

    task_always_eager=CELERY_TASK_ALWAYS_EAGER,
    # En modo eager las excepciones de la tarea se propagan al que llama
    task_eager_propagates=True,
)
