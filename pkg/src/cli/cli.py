"""
CLI de SonoDiff.

Un ejecutable con un subcomando por etapa del pipeline:

  generate   corpus sintético de escritorio + manifiesto
  train      un modelo por tipo de máquina
  score      puntajes de los clips de test (CSV + caché de residuos opcional)
  eval       sAUC / tAUC / pAUC por máquina y hmean
  sweep      barrido de K y ReLU sobre la caché de residuos
  viz        original, reconstrucción, mapa MAE y mapa AF de un clip
  bench      DDPM vs DDIM: llamadas, tiempo y RTF
  schedule   exporta β, α, ᾱ, β̃ a CSV

Uso: python -m src.cli <subcomando> [opciones]

Códigos de salida: 0 éxito, 1 error interno, 2 error de uso, configuración o datos de entrada.
"""

import argparse
import os
import sys

from src.cli import comandos, ui
from src.cli.run_config import cargar_run_config
from src.dataset import SynthSpec, TIPOS_ANOMALIA
from src.evaluation.metrics import CONVENCIONES, P_DEFAULT
from src.shared.exceptions import ErrorAudio, ErrorConfiguracion, ErrorDataset, ErrorSonoDiff
from src.shared.logger import obtener_logger

logger = obtener_logger("cli")

JOBS_DEFAULT = os.cpu_count() or 1


def _opciones_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="Archivo YAML de la corrida (default: valores de referencia)")
    parser.add_argument("--toy", action="store_true", help="Preset de escritorio: ventanas 32×32 y U-Net chico")


def _opciones_dataset(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", default=None, help="Raíz del dataset (default: paths.dataset_root)")
    parser.add_argument(
        "--machine", action="append", dest="machines", default=None,
        help="Tipo de máquina a procesar; se puede repetir (default: todas)"
    )


def parsear_argumentos(argv=None):
    """
    Procesa los argumentos de línea de comandos: un subparser por comando.
    argparse sale con código 2 ante un uso inválido.
    """
    parser = argparse.ArgumentParser(
        prog="sonodiff",
        description="SonoDiff — Detección no supervisada de sonidos anómalos con difusión"
    )
    sub = parser.add_subparsers(dest="comando", required=True)

    p = sub.add_parser("generate", help="Genera el corpus sintético")
    p.add_argument("--out", required=True, help="Directorio de salida")
    p.add_argument("--kind", choices=TIPOS_ANOMALIA, default="added_tone",
                   help="Perturbación de los clips anómalos (default: added_tone)")
    p.add_argument("--machine-type", default="synth", help="Nombre del tipo de máquina (default: synth)")
    p.add_argument("--n-train", type=int, default=100, help="Clips normales de train (default: 100)")
    p.add_argument("--n-normal-test", type=int, default=20, help="Clips normales de test (default: 20)")
    p.add_argument("--n-anomaly-test", type=int, default=20, help="Clips anómalos de test (default: 20)")
    p.add_argument("--seed", type=int, default=0, help="Semilla del corpus (default: 0)")

    p = sub.add_parser("train", help="Entrena un modelo por tipo de máquina")
    _opciones_config(p)
    _opciones_dataset(p)
    p.add_argument("--run", default=comandos.CORRIDA_DEFAULT,
                   help=f"Nombre de la corrida bajo paths.output_dir (default: {comandos.CORRIDA_DEFAULT})")
    p.add_argument("--resume", action="store_true", help="Continúa desde el último checkpoint de cada máquina")
    p.add_argument("--device", default="cpu", help="Dispositivo de torch (default: cpu)")

    p = sub.add_parser("score", help="Puntúa los clips de test")
    _opciones_config(p)
    _opciones_dataset(p)
    p.add_argument("--checkpoint", required=True, help="Archivo ckpt_*.bin o directorio de la corrida")
    p.add_argument("--out", required=True, help="CSV de puntajes")
    p.add_argument("--cache", default=None, help="Directorio de caché de residuos (default: paths.cache_dir)")
    p.add_argument("--jobs", type=int, default=JOBS_DEFAULT, help=f"Clips en paralelo (default: {JOBS_DEFAULT})")
    p.add_argument("--backend", choices=comandos.BACKENDS, default="local",
                   help="local: pool de threads; celery: una tarea por clip (default: local)")

    p = sub.add_parser("eval", help="Evalúa un CSV de puntajes")
    p.add_argument("--scores", required=True, help="CSV de puntajes")
    p.add_argument("--manifest", default=None, help="Manifiesto con las etiquetas (default: las del CSV)")
    p.add_argument("--p", type=float, default=P_DEFAULT, help=f"Tasa máxima de falsos positivos del pAUC (default: {P_DEFAULT})")
    p.add_argument("--convention", choices=CONVENCIONES, default="domain_pure",
                   help="Anomalías contra las que se comparan los normales de cada dominio (default: domain_pure)")
    p.add_argument("--out", default=None, help="CSV del reporte")

    p = sub.add_parser("sweep", help="Barre K y ReLU sobre la caché de residuos")
    _opciones_config(p)
    p.add_argument("--cache", default=None, help="Directorio de caché (default: paths.cache_dir)")
    p.add_argument("--machine", action="append", dest="machines", default=None, help="Tipo de máquina; se puede repetir")
    p.add_argument("--step", type=float, default=None, help="Paso de la grilla de K (default: 0.03)")
    p.add_argument("--out", required=True, help="CSV del barrido")

    p = sub.add_parser("viz", help="Exporta las cuatro vistas de un clip")
    _opciones_config(p)
    p.add_argument("--clip", required=True, help="WAV dentro de <raiz>/<máquina>/<split>/")
    p.add_argument("--checkpoint", required=True, help="Archivo ckpt_*.bin o directorio de la corrida")
    p.add_argument("--out", required=True, help="Directorio de salida")
    p.add_argument("--manifest", default=None, help="Manifiesto sintético para calcular el IoU de localización")

    p = sub.add_parser("bench", help="Compara DDPM y DDIM")
    _opciones_config(p)
    _opciones_dataset(p)
    p.add_argument("--checkpoint", required=True, help="Archivo ckpt_*.bin o directorio de la corrida")
    p.add_argument("--out", required=True, help="CSV de tiempos")
    p.add_argument("--jobs", type=int, default=JOBS_DEFAULT, help=f"Clips en paralelo (default: {JOBS_DEFAULT})")

    p = sub.add_parser("schedule", help="Exporta el schedule de difusión")
    _opciones_config(p)
    p.add_argument("--out", required=True, help="CSV del schedule")

    return parser.parse_args(argv)


def ejecutar(args) -> None:
    if args.comando == "generate":
        spec = SynthSpec(
            n_normal_train=args.n_train, n_normal_test=args.n_normal_test,
            n_anomaly_test=args.n_anomaly_test, anomaly_kind=args.kind,
            machine_type=args.machine_type, seed=args.seed,
        )
        ui.mostrar_corpus(comandos.cmd_generate(spec, args.out), args.out)

    elif args.comando == "train":
        rc = cargar_run_config(args.config, toy=args.toy)
        ui.mostrar_checkpoints(comandos.cmd_train(
            rc, dataset=args.dataset, machine_types=args.machines,
            corrida=args.run, resume=args.resume, device=args.device,
        ))

    elif args.comando == "score":
        rc = comandos.config_de_corrida(args.checkpoint, args.config, toy=args.toy)
        tabla = comandos.cmd_score(
            rc, args.checkpoint, args.out, dataset=args.dataset, machine_types=args.machines,
            jobs=args.jobs, backend=args.backend, cache_dir=args.cache,
        )
        ui.mostrar_puntajes(tabla, args.out)

    elif args.comando == "eval":
        ui.mostrar_reporte(comandos.cmd_eval(args.scores, args.manifest, args.p, args.convention, args.out))

    elif args.comando == "sweep":
        rc = cargar_run_config(args.config, toy=args.toy)
        ui.mostrar_barrido(comandos.cmd_sweep(rc, args.out, args.cache, args.machines, args.step))

    elif args.comando == "viz":
        rc = comandos.config_de_corrida(args.checkpoint, args.config, toy=args.toy)
        ui.mostrar_figura(comandos.cmd_viz(rc, args.clip, args.checkpoint, args.out, args.manifest))

    elif args.comando == "bench":
        rc = comandos.config_de_corrida(args.checkpoint, args.config, toy=args.toy)
        tabla, cocientes = comandos.cmd_bench(
            rc, args.checkpoint, args.out, dataset=args.dataset, machine_types=args.machines, jobs=args.jobs,
        )
        ui.mostrar_benchmark(tabla, cocientes)

    elif args.comando == "schedule":
        rc = cargar_run_config(args.config, toy=args.toy)
        ui.mostrar_schedule(comandos.cmd_schedule(rc, args.out), args.out)


def main(argv=None) -> int:
    args = parsear_argumentos(argv)
    try:
        ejecutar(args)
    except (ErrorConfiguracion, ErrorDataset, ErrorAudio) as e:
        logger.error(str(e))
        print(f"\n  ✘ {e}", file=sys.stderr)
        return 2
    except ErrorSonoDiff as e:
        logger.error(str(e))
        print(f"\n  ✘ {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.exception(f"Error inesperado en '{args.comando}': {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
