#!/usr/bin/env python3
"""Singular Quadrature
-------------------
Cuadratura adaptativa de Gauss–Legendre por paneles para integrandos con
singularidades algebraicas |x − p|^e (e > −1) en puntos conocidos.

- Cada panel se integra con reglas de orden n y 2n; la diferencia es la
  estimación de error del panel.
- Los paneles con error mayor que tol/n_paneles se bisecan hasta que el
  error total cumple max(rel_tol·|I|, abs_tol).
- Un panel que toca una singularidad p se integra en la variable
  u = (x − p)^{e+1}/(e+1), donde el integrando es acotado.

El integrando recibe ``(base, offset)`` con x = base + offset. Cerca de una
singularidad la base es el propio punto p y el offset la distancia, así el
integrando puede calcular |x − p| sin cancelación.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

from bss_errors import QuadratureError

DEFAULT_QUADRATURE_PARAMS = {
    'rel_tol': 1e-8,
    'abs_tol': 0.0,
    'max_panels': 20000,
    'gauss_order': 16,
}

_REGULAR, _LEFT_SINGULAR, _RIGHT_SINGULAR = 0, 1, 2

Integrand = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    n_panels: int


@lru_cache(maxsize=8)
def _gauss_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(order)
    return nodes, weights


def _merge_singular(singular: Iterable[Tuple[float, float]]) -> dict:
    """Puntos singulares coincidentes: se queda el exponente mínimo."""
    merged = {}
    for point, expo in singular:
        point, expo = float(point), float(expo)
        merged[point] = min(expo, merged.get(point, expo))
    return merged


def _needs_transform(expo: float) -> bool:
    return expo > -1 and not (expo >= 0 and float(expo).is_integer())


def _map_nodes(a, b, kind, expo, nodes, weights):
    """Nodos (base, offset) y pesos de cada panel para una regla dada."""
    x = nodes[None, :]
    w = weights[None, :]
    a = a[:, None]
    b = b[:, None]
    kind = kind[:, None]
    e1 = expo[:, None] + 1.0

    half = 0.5 * (b - a)
    base = np.broadcast_to(0.5 * (a + b), (a.shape[0], x.shape[1])).copy()
    offset = half * x
    weight = half * w

    sing = kind != _REGULAR
    if np.any(sing):
        rows = sing[:, 0]
        length = (b - a)[rows]
        ee1 = e1[rows]
        u_max = length ** ee1 / ee1
        u = 0.5 * u_max * (1.0 + x)
        t = (ee1 * u) ** (1.0 / ee1)
        jac = 0.5 * u_max * w * t ** (1.0 - ee1)
        left = (kind[rows] == _LEFT_SINGULAR)
        base[rows] = np.where(left, a[rows], b[rows])
        offset[rows] = np.where(left, t, -t)
        weight[rows] = jac
    return base, offset, weight


def _evaluate_panels(func: Integrand, a, b, kind, expo, order: int):
    lo_rule = _gauss_rule(order)
    hi_rule = _gauss_rule(2 * order)
    b1, o1, w1 = _map_nodes(a, b, kind, expo, *lo_rule)
    b2, o2, w2 = _map_nodes(a, b, kind, expo, *hi_rule)
    base = np.concatenate([b1, b2], axis=1)
    offset = np.concatenate([o1, o2], axis=1)
    values = np.asarray(func(base.ravel(), offset.ravel()), dtype=float).reshape(base.shape)

    bad = ~np.isfinite(values)
    if np.any(bad):
        # valor en el propio punto singular: se anula
        values[bad & (offset == 0)] = 0.0
        bad = ~np.isfinite(values)
        if np.any(bad):
            where = float((base + offset)[bad][0])
            raise QuadratureError('integrate_panels', f"integrand is not finite at x = {where!r}")

    q_lo = np.sum(values[:, :order] * w1, axis=1)
    q_hi = np.sum(values[:, order:] * w2, axis=1)
    return q_hi, np.abs(q_hi - q_lo)


def _initial_panels(lower: float, upper: float, breakpoints, singular: dict):
    cuts = {lower, upper}
    cuts.update(p for p in breakpoints if lower < p < upper)
    cuts.update(p for p in singular if lower < p < upper)
    cuts = sorted(cuts)

    a_list, b_list, kind_list, expo_list = [], [], [], []

    def add(a, b, kind, expo):
        a_list.append(a)
        b_list.append(b)
        kind_list.append(kind)
        expo_list.append(expo)

    for a, b in zip(cuts[:-1], cuts[1:]):
        left = singular.get(a)
        right = singular.get(b)
        left = left if left is not None and _needs_transform(left) else None
        right = right if right is not None and _needs_transform(right) else None
        if left is not None and right is not None:
            mid = 0.5 * (a + b)
            add(a, mid, _LEFT_SINGULAR, left)
            add(mid, b, _RIGHT_SINGULAR, right)
        elif left is not None:
            add(a, b, _LEFT_SINGULAR, left)
        elif right is not None:
            add(a, b, _RIGHT_SINGULAR, right)
        else:
            add(a, b, _REGULAR, 0.0)
    return (np.array(a_list), np.array(b_list), np.array(kind_list, dtype=int), np.array(expo_list))


def integrate_panels(
    func: Integrand,
    lower: float,
    upper: float,
    breakpoints: Sequence[float] = (),
    singular: Iterable[Tuple[float, float]] = (),
    rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol'],
    abs_tol: float = DEFAULT_QUADRATURE_PARAMS['abs_tol'],
    max_panels: int = DEFAULT_QUADRATURE_PARAMS['max_panels'],
    order: int = DEFAULT_QUADRATURE_PARAMS['gauss_order'],
) -> QuadratureResult:
    """∫_lower^upper func en [lower, upper] finito.

    ``singular`` son pares (punto, exponente e) con integrando ~ |x − p|^e;
    ``breakpoints`` son puntos de no-suavidad sin singularidad (bordes de
    ventanas, saltos).
    """
    lower, upper = float(lower), float(upper)
    if not (np.isfinite(lower) and np.isfinite(upper)):
        raise QuadratureError('integrate_panels', 'integration limits must be finite')
    if upper == lower:
        return QuadratureResult(0.0, 0.0, 0)
    if upper < lower:
        res = integrate_panels(func, upper, lower, breakpoints, singular, rel_tol, abs_tol, max_panels, order)
        return QuadratureResult(-res.value, res.error_estimate, res.n_panels)

    sing = _merge_singular(singular)
    a, b, kind, expo = _initial_panels(lower, upper, list(breakpoints), sing)
    est, err = _evaluate_panels(func, a, b, kind, expo, order)

    eps = np.finfo(float).eps
    while True:
        total = float(est.sum())
        total_err = float(err.sum())
        target = max(rel_tol * abs(total), abs_tol, 50 * eps * float(np.abs(est).sum()))
        if total_err <= target:
            return QuadratureResult(total, total_err, int(a.size))

        split = err > target / a.size
        n_split = int(split.sum())
        if a.size + n_split > max_panels:
            raise QuadratureError(
                'integrate_panels',
                f"tolerance {rel_tol:g} not reached with {max_panels} panels "
                f"(value {total:.6g}, error {total_err:.3g})",
            )

        sa, sb, sk, se = a[split], b[split], kind[split], expo[split]
        mid = 0.5 * (sa + sb)
        left_kind = np.where(sk == _LEFT_SINGULAR, _LEFT_SINGULAR, _REGULAR)
        right_kind = np.where(sk == _RIGHT_SINGULAR, _RIGHT_SINGULAR, _REGULAR)
        na = np.concatenate([sa, mid])
        nb = np.concatenate([mid, sb])
        nk = np.concatenate([left_kind, right_kind])
        ne = np.concatenate([se, se])
        n_est, n_err = _evaluate_panels(func, na, nb, nk, ne, order)

        keep = ~split
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        kind = np.concatenate([kind[keep], nk])
        expo = np.concatenate([expo[keep], ne])
        est = np.concatenate([est[keep], n_est])
        err = np.concatenate([err[keep], n_err])


def integrate_tail(
    func_x: Callable[[np.ndarray], np.ndarray],
    start: float,
    decay_power: float,
    **kwargs,
) -> QuadratureResult:
    """∫_start^∞ F(x) dx para F(x) ~ x^{decay_power} (decay_power < −1).

    Con y = 1/x queda ∫_0^{1/start} F(1/y)/y² dy, singular en y = 0 con
    exponente −decay_power − 2.
    """
    if not decay_power < -1:
        raise QuadratureError('integrate_tail', f"tail ~ x^{decay_power} is not integrable")
    if not start > 0:
        raise QuadratureError('integrate_tail', 'start must be positive')

    def compact(base, offset):
        y = base + offset
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = func_x(1.0 / y[pos]) / y[pos] ** 2
        return out

    return integrate_panels(
        compact, 0.0, 1.0 / start, singular=[(0.0, -decay_power - 2.0)], **kwargs
    )
