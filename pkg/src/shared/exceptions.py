"""
Excepciones del dominio de SonoDiff.

Separadas en su propio módulo para que cualquier componente
(audio, difusión, entrenamiento, CLI, workers) pueda importarlas
sin depender de los otros. La CLI traduce esta jerarquía a códigos
de salida: errores de configuración o de entrada → 2, el resto → 1.
"""


class ErrorSonoDiff(Exception):
    """Base de todas las excepciones propias del sistema."""


class ErrorConfiguracion(ErrorSonoDiff):
    """
    Se lanza cuando una sección de la configuración no pasa su validación
    o el archivo YAML trae claves desconocidas.
    """


class ErrorAudio(ErrorSonoDiff):
    """Archivo ilegible o codificación no soportada."""


class FrecuenciaIncompatible(ErrorAudio):
    """La frecuencia de muestreo del archivo no coincide con la configurada (no se resamplea)."""


class ClipDemasiadoCorto(ErrorAudio):
    """La forma de onda no alcanza para una ventana de análisis."""


class FormaIncompatible(ErrorSonoDiff):
    """Dos matrices que deberían tener la misma forma no la tienen."""


class PasoFueraDeRango(ErrorSonoDiff):
    """Un timestep de difusión cae fuera del rango válido para la operación."""


class SigmaInvalido(ErrorSonoDiff):
    """σ_t² supera 1 - ᾱ_{t_prev} en un paso DDIM (raíz de un número negativo)."""


class ForwardNoRegistrado(ErrorSonoDiff):
    """Se pidió un backward sin un forward registrado previamente."""


class EntrenamientoDivergente(ErrorSonoDiff):
    """
    La loss dejó de ser finita. Se aborta con el paso y el valor
    para que el diagnóstico no dependa de revisar el log completo.
    """


class ErrorDataset(ErrorSonoDiff):
    """Directorios faltantes, dataset vacío o metadatos inconsistentes."""


class ErrorCheckpoint(ErrorSonoDiff):
    """Checkpoint ilegible, de otra versión de formato o incompatible con la configuración."""


class ErrorEvaluacion(ErrorSonoDiff):
    """Listas de puntuaciones vacías o parámetros de métrica fuera de rango."""


class CacheVacia(ErrorSonoDiff):
    """El barrido de AF no encontró residuos cacheados para recalcular."""
