#!/usr/bin/env python3
"""
Script de validación del toolkit BSS.
Corre los chequeos exactos rápidos (valores cerrados conocidos) y valida los
specs de núcleo incluidos en ``configs/``.
"""

import math
import os
import sys

import numpy as np
from scipy.special import gamma

from bss_errors import BSSValidationError, NumericalFailure

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')


def validate_spec_file(spec_file: str, expect_valid: bool = True) -> bool:
    """Carga un spec TOML y compara el resultado de la validación con lo esperado."""
    print(f"\n📋 Validando spec de núcleo: {spec_file}")
    from weight_model import load_weight_spec, validate

    try:
        spec = load_weight_spec(spec_file)
    except BSSValidationError as e:
        print(f"❌ No se pudo cargar el spec: {e}")
        return False

    diags = validate(spec)
    if expect_valid and diags:
        print(f"❌ Spec rechazado: {diags[0]}")
        for line in diags[1:]:
            print(f"   - {line}")
        return False
    if not expect_valid and not diags:
        print("❌ Se esperaba un rechazo y el spec pasó la validación")
        return False

    if expect_valid:
        print(f"✅ Spec válido: {len(spec.segments) or len(spec.indicator_terms)} términos ({spec.kind.value})")
    else:
        print(f"✅ Spec rechazado como se esperaba: {diags[0]}")
    return True


def check_indicator_scaling() -> bool:
    """τ_1(Δ)² = 2Δ y π_{n,1}([−Δ, 0]) = ½ para g = 1_(0,1]."""
    print("\n📏 Probando τ² y π_n del núcleo indicador...")
    from limit_quantities import pi_n_measure, tau_sq
    from weight_model import indicator_spec

    spec = indicator_spec([(1.0, 0.0, 1.0)])
    ok = True
    for delta in (1e-2, 1e-3):
        tau2 = tau_sq(spec, 1, 1, delta).tau_sq_exact
        mass = pi_n_measure(spec, 1, 1, delta, (-delta, 0.0))
        print(f"   Δ = {delta:g}: τ² = {tau2:.12g} (esperado {2 * delta:g}), π_n([−Δ,0]) = {mass:.12g}")
        ok = ok and math.isclose(tau2, 2 * delta, rel_tol=1e-10) and abs(mass - 0.5) < 1e-10
    print("✅ Valores exactos reproducidos" if ok else "❌ Valores fuera de tolerancia")
    return ok


def check_rho_closed_form() -> bool:
    """ρ_1^{1,1}(j) = ½(|j+1|^{2H} − 2|j|^{2H} + |j−1|^{2H})."""
    print("\n🔗 Probando la correlación del ruido fraccionario...")
    from fbm_limits import rho

    j = np.arange(0, 101, dtype=float)
    ok, worst = True, 0.0
    for H in np.arange(0.1, 0.95, 0.1):
        two_h = 2 * H
        closed = 0.5 * (np.abs(j + 1) ** two_h - 2 * np.abs(j) ** two_h + np.abs(j - 1) ** two_h)
        diff = np.abs(rho(H, 1, 1, 1, j) - closed)
        # la forma cerrada pierde ~eps·(j+1)^{2H} por cancelación
        tol = 1e-12 + 4.0 * np.finfo(float).eps * (j + 1) ** two_h
        ok = ok and bool(np.all(diff <= tol))
        worst = max(worst, float(np.max(diff)))
    print(f"{'✅' if ok else '❌'} Máxima diferencia: {worst:.3g}")
    return ok


def check_lambda_brownian() -> bool:
    """λ_11(H = ½, k = 1) = 2: incrementos brownianos independientes."""
    print("\n📐 Probando Λ_1 en H = ½...")
    from fbm_limits import lambda_matrix

    lam = lambda_matrix(0.5, 1)
    ok = math.isclose(lam.lambda_11, 2.0, rel_tol=1e-12)
    print(f"{'✅' if ok else '❌'} λ_11 = {lam.lambda_11!r}")
    return ok


def check_h_norm_closed_form() -> bool:
    """‖h_0‖² para k = 1 contra Γ(α+1)²/(Γ(2α+2)·sin(π(α+½)))."""
    print("\n🧮 Probando ‖h_0‖² contra la forma cerrada...")
    from limit_quantities import h_norm_sq
    from weight_model import singular_spec

    ok = True
    for alpha in (-0.4, -1.0 / 6.0, 0.2, 0.4):
        spec = singular_spec([0.0], [alpha])
        value = h_norm_sq(spec, 0, 1, rel_tol=1e-10)
        closed = gamma(alpha + 1) ** 2 / (gamma(2 * alpha + 2) * math.sin(math.pi * (alpha + 0.5)))
        rel = abs(value - closed) / closed
        print(f"   α = {alpha:+.4f}: {value:.12g} vs {closed:.12g} (rel {rel:.2g})")
        ok = ok and rel < 1e-6
    print("✅ Normas correctas" if ok else "❌ Normas fuera de tolerancia")
    return ok


def main():
    """Función principal de validación."""
    print("=== VALIDACIÓN DEL TOOLKIT BSS ===")

    tests = [
        ("Spec single.toml", lambda: validate_spec_file(os.path.join(CONFIG_DIR, 'single.toml'))),
        ("Spec two_singularity.toml", lambda: validate_spec_file(os.path.join(CONFIG_DIR, 'two_singularity.toml'))),
        ("Spec bad.toml (rechazo)", lambda: validate_spec_file(os.path.join(CONFIG_DIR, 'bad.toml'), expect_valid=False)),
        ("τ² y π_n indicador", check_indicator_scaling),
        ("ρ forma cerrada", check_rho_closed_form),
        ("λ en H = ½", check_lambda_brownian),
        ("‖h_0‖² forma cerrada", check_h_norm_closed_form),
    ]

    results = []
    for test_name, test_func in tests:
        try:
            passed = test_func()
            results.append((test_name, passed))
        except (BSSValidationError, NumericalFailure) as e:
            print(f"\n❌ Error en prueba '{test_name}': {e}")
            results.append((test_name, False))

    # Resumen final
    print("\n\n=== RESUMEN DE VALIDACIÓN ===")
    all_passed = True
    for test_name, passed in results:
        status = "✅ PASS" if passed else "❌ FAIL"
        print(f"{status} - {test_name}")
        if not passed:
            all_passed = False

    if all_passed:
        print("\n✅ ¡Todas las pruebas pasaron! El toolkit está listo para usar.")
        print("\nPróximo paso:")
        print("python bss_cli.py limits --spec configs/single.toml --k 2 --delta-n 0.001")
    else:
        print("\n❌ Algunas pruebas fallaron. Revisa los errores arriba.")

    return 0 if all_passed else 1


if __name__ == '__main__':
    sys.exit(main())
