"""
Funciones de presentación de la CLI de SonoDiff.

Separadas de los comandos para que cualquier cambio en cómo se muestran
los resultados no afecte a lo que se calcula ni a los CSV escritos.
"""

import math


def _pct(valor) -> str:
    return "   -  " if valor is None or (isinstance(valor, float) and math.isnan(valor)) else f"{100 * valor:6.2f}"


def _titulo(texto: str) -> None:
    print("\n+----------------------------------------------------------+")
    print(f"|  {texto:<56}|")
    print("+----------------------------------------------------------+")


def mostrar_corpus(manifiesto, out) -> None:
    _titulo("CORPUS SINTÉTICO")
    print(f"  Directorio: {out}")
    conteos = manifiesto.groupby(["split", "domain", "label"]).size()
    for (split, dominio, etiqueta), n in conteos.items():
        print(f"  {split:<6} {dominio:<7} {etiqueta:<8} {n:>5}")


def mostrar_checkpoints(checkpoints: dict) -> None:
    _titulo("ENTRENAMIENTO")
    for maquina, ruta in checkpoints.items():
        print(f"  {maquina:<15} {ruta}")


def mostrar_puntajes(tabla, out) -> None:
    _titulo("PUNTUACIÓN")
    print(f"  Clips puntuados:          {len(tabla)}")
    if len(tabla):
        print(f"  Llamadas por ventana:     {int(tabla['calls_per_window'].iloc[0])}")
        print(f"  RTF medio:                {tabla['rtf'].mean():.4f}")
    print(f"  Archivo:                  {out}")


def mostrar_reporte(reporte) -> None:
    _titulo("EVALUACIÓN (%)")
    print(f"  {'MÁQUINA':<15} {'sAUC':>7} {'tAUC':>7} {'pAUC':>7}")
    print("  " + "─" * 40)
    for maquina, metricas in reporte.per_machine.items():
        print(
            f"  {maquina:<15} {_pct(metricas['s_auc']):>7} "
            f"{_pct(metricas['t_auc']):>7} {_pct(metricas['p_auc']):>7}"
        )
    print("  " + "─" * 40)
    print(f"  {'hmean':<15} {_pct(reporte.hmean):>7}")
    for maquina, motivo in reporte.excluded.items():
        print(f"  ⚠ {maquina} excluida: {motivo}")


def mostrar_barrido(tabla) -> None:
    """Mejor combinación (K, ReLU) por máquina según el AUC conjunto."""
    _titulo("BARRIDO DEL FILTRO DE ANOMALÍAS")
    print(f"  {'MÁQUINA':<15} {'K':>5} {'ReLU':>5} {'sAUC':>7} {'tAUC':>7} {'pAUC':>7}")
    print("  " + "─" * 52)
    for maquina, grupo in tabla.groupby("machine_type", sort=True):
        mejor = grupo.loc[grupo["auc"].idxmax()]
        relu = "sí" if mejor["use_relu"] else "no"
        print(
            f"  {maquina:<15} {mejor['k_fraction']:>5.2f} {relu:>5} "
            f"{_pct(mejor['s_auc']):>7} {_pct(mejor['t_auc']):>7} {_pct(mejor['p_auc']):>7}"
        )


def mostrar_figura(salida: dict) -> None:
    _titulo("VISUALIZACIÓN")
    print(f"  Clip:   {salida['clip_id']}")
    print(f"  Score:  {salida['score']:.6f}")
    if salida["iou"] is not None:
        print(f"  IoU de localización: {salida['iou']:.3f}")
    for archivo in salida["files"]:
        if archivo.suffix == ".pgm":
            print(f"    - {archivo}")


def mostrar_benchmark(tabla, cocientes: dict) -> None:
    _titulo("BENCHMARK DDPM vs DDIM")
    print(f"  {'MUESTREADOR':<12} {'LLAMADAS':>9} {'TIEMPO (s)':>11} {'RTF':>8} {'hmean':>7}")
    print("  " + "─" * 52)
    for fila in tabla.to_dict("records"):
        print(
            f"  {fila['sampler']:<12} {int(fila['calls_per_window']):>9} "
            f"{fila['wall_s']:>11.2f} {fila['rtf']:>8.4f} {_pct(fila['hmean']):>7}"
        )
    print(f"\n  Cociente de llamadas ddpm/ddim: {cocientes['calls']:.2f}")
    print(f"  Cociente de RTF ddpm/ddim:      {cocientes['rtf']:.2f}")


def mostrar_schedule(tabla, out) -> None:
    _titulo("SCHEDULE DE DIFUSIÓN")
    print(f"  T = {len(tabla) - 1}")
    print(f"  ᾱ_1 = {tabla['alpha_bar'].iloc[1]:.6f}   ᾱ_T = {tabla['alpha_bar'].iloc[-1]:.6g}")
    print(f"  Archivo: {out}")
