"""
Paquete raíz de SonoDiff.

Estructura interna:
  shared/          → configuración, logger y excepciones compartidos
  audio/           → decodificación WAV, FBank y ventaneo
  diffusion/       → schedules, difusión directa y muestreadores DDPM/DDIM
  denoiser/        → U-Net que predice el ruido
  training/        → loop de entrenamiento, EMA y checkpoints
  scoring/         → filtro de anomalías, puntuación de clips y barrido
  evaluation/      → AUC, pAUC, hmean y reporte por máquina
  dataset/         → escaneo de datasets y corpus sintético
  infrastructure/  → repositorios de artefactos en disco
  workers/         → puntuación distribuida con Celery
  cli/             → ejecutable con un subcomando por etapa
"""
