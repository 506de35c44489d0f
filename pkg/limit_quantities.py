#!/usr/bin/env python3
"""Limit Quantities
----------------
Objetos límite deterministas de la teoría de alta frecuencia:

- h_j y sus normas ‖h_j‖² (una por singularidad);
- la medida límite π_k sobre las singularidades activas;
- τ_k(vΔ_n)² exacto (cuadratura de ‖Δ_k^{n,v} g‖²) y asintótico;
- la medida empírica π_{n,k}^v de un intervalo;
- ‖g‖², el variograma R(t) y la correlación r(t) del núcleo gaussiano.

Todas las integrales se hacen con ``singular_quadrature`` sobre una malla
cortada en cada singularidad desplazada θ_i + m·vΔ_n; más allá de
``tail_start`` el integrando es exponencial y la cola es analítica.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from bss_errors import BSSValidationError, NumericalFailure
from singular_quadrature import DEFAULT_QUADRATURE_PARAMS, integrate_panels, integrate_tail
from weight_model import (
    WeightSpec,
    check_filter_args,
    combination_offset,
    filter_coefficients,
    filter_shifts,
    summarize_smoothness,
)

__all__ = [
    'DEFAULT_QUADRATURE_PARAMS',
    'LimitMeasure',
    'ScalingResult',
    'CovarianceKernel',
    'HNormReport',
    'h_function',
    'h_norm_sq',
    'h_norm_sq_report',
    'pi_k',
    'tau_sq',
    'pi_n_measure',
    'g_norm_sq',
    'variogram',
    'covariance_kernel',
    'tau_sq_from_variogram',
    'limits_document',
]


@dataclass(frozen=True)
class LimitMeasure:
    """Medida discreta π_k: átomos en θ_i (i ∈ 𝒜) con pesos ∝ ‖h_i‖²."""

    support: Tuple[float, ...]
    weights: Tuple[float, ...]
    h_norms_sq: Tuple[float, ...]
    alpha: float
    active_set: Tuple[int, ...]

    def atoms(self) -> List[Tuple[float, float]]:
        return list(zip(self.support, self.weights))

    def mass_at(self, theta: float) -> float:
        return sum(w for s, w in zip(self.support, self.weights) if s == theta)


@dataclass(frozen=True)
class ScalingResult:
    tau_sq_exact: float
    tau_sq_asymptotic: float
    delta_n: float
    k: int
    v: int
    quadrature_error_estimate: float

    @property
    def ratio(self) -> float:
        return self.tau_sq_exact / self.tau_sq_asymptotic


@dataclass(frozen=True)
class HNormReport:
    """‖h_j‖² con el detalle de la cola más allá de ``tail_radius``."""

    value: float
    error_estimate: float
    tail_radius: float
    tail_value: float
    tail_bound: float


@dataclass(frozen=True, eq=False)
class CovarianceKernel:
    """Variograma tabulado del núcleo gaussiano G.

    r(t) = 1 − R(t)/(2‖g‖²) se interpola linealmente en ``t_grid``; R se
    expone a través de la identidad R = 2‖g‖²(1 − r).
    """

    g_norm_sq: float
    t_grid: np.ndarray = field(repr=False)
    r_table: np.ndarray = field(repr=False)
    # máximo error de interpolación medido en los puntos medios
    interp_error: float = 0.0

    def _check(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if np.any(t < self.t_grid[0]) or np.any(t > self.t_grid[-1]):
            raise BSSValidationError(
                f"lag outside the tabulated range [{self.t_grid[0]}, {self.t_grid[-1]}]"
            )
        return t

    def r(self, t):
        out = np.interp(self._check(t), self.t_grid, self.r_table)
        return float(out) if np.ndim(out) == 0 else out

    def R(self, t):
        return 2.0 * self.g_norm_sq * (1.0 - self.r(t))

    def covariance(self, t):
        """c(t) = ‖g‖²·r(t)."""
        return self.g_norm_sq * self.r(t)


# ---------------------------------------------------------------------------
# Integrales de combinaciones Σ c_j g(x − s_j)
# ---------------------------------------------------------------------------

def _square_exponent(alpha: float) -> float:
    """Exponente local del cuadrado de una suma con término |x−θ|^α."""
    return 2.0 * alpha if alpha < 0 else alpha


def _params(overrides: Optional[Dict] = None) -> Dict:
    params = DEFAULT_QUADRATURE_PARAMS.copy()
    if overrides:
        params.update(overrides)
    return params


def combination_square_integral(
    spec: WeightSpec,
    coeffs: Sequence[float],
    shifts: Sequence[float],
    lower: float = -math.inf,
    upper: float = math.inf,
    rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol'],
    abs_tol: float = 0.0,
) -> Tuple[float, float]:
    """∫_lower^upper (Σ_j c_j·g(x − s_j))² dx → (valor, error estimado)."""
    params = _params()
    lo = max(lower, min(shifts))
    tail_from = spec.tail_start + max(shifts)
    hi = min(upper, tail_from)

    value, error = 0.0, 0.0
    if hi > lo:
        singular = [
            (theta + s, _square_exponent(alpha) if spec.is_singular else 0.0)
            for s in shifts
            for theta, alpha in spec.singular_points
        ]
        breakpoints = [p + s for s in shifts for p in spec.kink_points]

        def integrand(base, offset):
            return combination_offset(spec, coeffs, shifts, base, offset) ** 2

        res = integrate_panels(
            integrand, lo, hi, breakpoints=breakpoints, singular=singular,
            rel_tol=rel_tol, abs_tol=abs_tol, max_panels=params['max_panels'],
            order=params['gauss_order'],
        )
        value, error = res.value, res.error_estimate

    if upper > tail_from and spec.baseline_scale != 0.0:
        # más allá de tail_start todos los términos son c_b·e^{−λ(x − s_j)}
        lam = spec.tail_rate
        start = max(lo, tail_from)
        amp = sum(c * math.exp(lam * s) for c, s in zip(coeffs, shifts))
        scale = (spec.baseline_scale * amp) ** 2 / (2.0 * lam)
        value += scale * (math.exp(-2.0 * lam * start) - math.exp(-2.0 * lam * upper))
    return value, error


# ---------------------------------------------------------------------------
# h_j
# ---------------------------------------------------------------------------

def _check_segment(spec: WeightSpec, j: int, k: int) -> None:
    if not spec.is_singular:
        raise BSSValidationError("h functions are defined for SingularKernel specs only")
    if not 0 <= j < len(spec.segments):
        raise BSSValidationError(f"segment index j={j} out of range 0..{len(spec.segments) - 1}")
    check_filter_args(spec, k, 1)


def _h_unit(alpha: float, k: int, one_sided: bool, base, offset):
    """Σ_m a_m·|x − m|^α (o (x − m)_+^α) sin el factor f_j(θ_j)."""
    base, offset = np.broadcast_arrays(
        np.atleast_1d(np.asarray(base, dtype=float)), np.atleast_1d(np.asarray(offset, dtype=float))
    )
    x = base + offset
    out = np.zeros(x.shape)
    coeffs = filter_coefficients(k)
    far = np.abs(x) > 2 * k
    near = ~far
    if np.any(near):
        b, o = base[near], offset[near]
        acc = np.zeros(b.shape)
        for m, a in enumerate(coeffs):
            d = (b - m) + o
            live = d > 0 if one_sided else d != 0
            acc[live] += a * np.abs(d[live]) ** alpha
        out[near] = acc
    if np.any(far):
        xf = x[far]
        ok = xf > 0 if one_sided else np.ones(xf.shape, dtype=bool)
        # Σ a_m = 0: |x|^α·Σ a_m·expm1(α·log(1 − m/x)) evita la cancelación
        acc = np.zeros(xf.shape)
        for m, a in enumerate(coeffs[1:], start=1):
            acc += a * np.expm1(alpha * np.log1p(-m / xf))
        out_far = np.where(ok, np.abs(xf) ** alpha * acc, 0.0)
        out[far] = out_far
    return out


def h_function(spec: WeightSpec, j: int, k: int, x):
    """h_j(x) = f_j(θ_j)·Σ_m (−1)^m C(k,m)·|x − m|^{α_j}.

    Para j = 0 se usa la potencia unilateral (x − m)_+^{α_0}. Vale 0 en los
    propios puntos x = m.
    """
    _check_segment(spec, j, k)
    seg = spec.segments[j]
    out = seg.f_at_theta * _h_unit(seg.alpha, k, j == 0, x, 0.0).reshape(np.shape(x))
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=256)
def _h_unit_norm_sq(alpha: float, k: int, one_sided: bool, rel_tol: float) -> HNormReport:
    params = _params()
    expo = _square_exponent(alpha)
    radius = 2.0 * k
    decay = 2.0 * (alpha - k)

    def integrand(base, offset):
        return _h_unit(alpha, k, one_sided, base, offset) ** 2

    def tail_integrand(x):
        return _h_unit(alpha, k, one_sided, x, 0.0) ** 2

    if one_sided:
        lower = 0.0
        singular = [(float(m), expo) for m in range(k + 1)]
        factor = 1.0
    else:
        # h_j(k − x) = (−1)^k h_j(x): se integra la mitad derecha
        lower = 0.5 * k
        singular = [(float(m), expo) for m in range(k + 1) if m >= lower]
        factor = 2.0

    sub_tol = 0.25 * rel_tol
    near = integrate_panels(
        integrand, lower, radius, singular=singular, rel_tol=sub_tol,
        max_panels=params['max_panels'], order=params['gauss_order'],
    )
    tail = integrate_tail(
        tail_integrand, radius, decay, rel_tol=sub_tol,
        max_panels=params['max_panels'], order=params['gauss_order'],
    )
    const = float(tail_integrand(np.array([radius]))[0]) * radius ** (-decay)
    bound = const * radius ** (decay + 1.0) / abs(decay + 1.0)
    return HNormReport(
        value=factor * (near.value + tail.value),
        error_estimate=factor * (near.error_estimate + tail.error_estimate),
        tail_radius=radius,
        tail_value=factor * tail.value,
        tail_bound=factor * bound,
    )


def h_norm_sq_report(
    spec: WeightSpec, j: int, k: int, rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol']
) -> HNormReport:
    _check_segment(spec, j, k)
    if not 0 < rel_tol <= 1e-4:
        raise BSSValidationError(f"rel_tol must lie in (0, 1e-4], got {rel_tol}")
    seg = spec.segments[j]
    unit = _h_unit_norm_sq(float(seg.alpha), int(k), j == 0, float(rel_tol))
    c2 = seg.f_at_theta ** 2
    return HNormReport(
        value=c2 * unit.value,
        error_estimate=c2 * unit.error_estimate,
        tail_radius=unit.tail_radius,
        tail_value=c2 * unit.tail_value,
        tail_bound=c2 * unit.tail_bound,
    )


def h_norm_sq(
    spec: WeightSpec, j: int, k: int, rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol']
) -> float:
    """‖h_j‖² = ∫_ℝ h_j(x)² dx."""
    return h_norm_sq_report(spec, j, k, rel_tol).value


# ---------------------------------------------------------------------------
# π_k y τ²
# ---------------------------------------------------------------------------

def _indicator_jumps(spec: WeightSpec) -> List[Tuple[float, float]]:
    """(posición, a_i²) de cada extremo de un kernel indicador, ordenados."""
    jumps = []
    for term in spec.indicator_terms:
        jumps.append((term.start, term.amplitude ** 2))
        jumps.append((term.end, term.amplitude ** 2))
    return sorted(jumps)


def _indicator_filter_constant(k: int) -> float:
    """c_k = Σ_{M<k} (Σ_{m≤M} (−1)^m C(k,m))²."""
    partial = np.cumsum(filter_coefficients(k))[:k]
    return float(np.sum(partial ** 2))


def pi_k(spec: WeightSpec, k: int, rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol']) -> LimitMeasure:
    """Medida límite π_k.

    SingularKernel: átomos en θ_i, i ∈ 𝒜, con peso ‖h_i‖²/Σ_{𝒜}‖h_j‖².
    IndicatorSum: cada extremo de cada intervalo es un salto; recibe peso
    a_i²/(2Σa²) y el exponente efectivo es α = −½.
    """
    check_filter_args(spec, k, 1)
    if not spec.is_singular:
        jumps = _indicator_jumps(spec)
        total = sum(w for _, w in jumps)
        return LimitMeasure(
            support=tuple(p for p, _ in jumps),
            weights=tuple(w / total for _, w in jumps),
            h_norms_sq=tuple(w for _, w in jumps),
            alpha=-0.5,
            active_set=tuple(range(len(jumps))),
        )

    spec = spec.sorted()
    summary = summarize_smoothness(spec)
    norms = tuple(h_norm_sq(spec, j, k, rel_tol) for j in range(len(spec.segments)))
    active_total = sum(norms[i] for i in summary.active_set)
    if not active_total > 0:
        raise NumericalFailure('pi_k', 'active h-norms sum to zero')
    return LimitMeasure(
        support=tuple(spec.segments[i].theta for i in summary.active_set),
        weights=tuple(norms[i] / active_total for i in summary.active_set),
        h_norms_sq=norms,
        alpha=summary.alpha_min,
        active_set=summary.active_set,
    )


def _check_delta(spec: WeightSpec, k: int, v: int, delta_n: float) -> None:
    check_filter_args(spec, k, v)
    if not delta_n > 0:
        raise BSSValidationError(f"delta_n must be positive, got {delta_n}")
    if spec.is_singular:
        limit = min(s.half_width for s in spec.segments) / (2 * k * v)
        if not delta_n < limit:
            raise BSSValidationError(
                f"delta_n = {delta_n} must be below min half_width / (2kv) = {limit}"
            )
    elif not k * v * delta_n < spec.min_spacing:
        raise BSSValidationError(
            f"k*v*delta_n = {k * v * delta_n} must be below the smallest jump spacing {spec.min_spacing}"
        )


def tau_sq_asymptotic(spec: WeightSpec, k: int, v: int, delta_n: float,
                      rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol']) -> float:
    """(vΔ_n)^{2α+1}·Σ_{𝒜}‖h_j‖² (exacto para indicadoras con kvΔ_n chico)."""
    step = v * delta_n
    if not spec.is_singular:
        total = sum(t.amplitude ** 2 for t in spec.indicator_terms)
        return step * 2.0 * total * _indicator_filter_constant(k)
    measure = pi_k(spec, k, rel_tol)
    active_norms = sum(measure.h_norms_sq[i] for i in measure.active_set)
    return step ** (2.0 * measure.alpha + 1.0) * active_norms


def tau_sq(
    spec: WeightSpec,
    k: int,
    v: int,
    delta_n: float,
    rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol'],
) -> ScalingResult:
    """τ_k(vΔ_n)² = ‖Δ_k^{n,v} g‖² por cuadratura, junto al valor asintótico."""
    _check_delta(spec, k, v, delta_n)
    exact, err = combination_square_integral(
        spec, filter_coefficients(k), filter_shifts(k, v * delta_n), rel_tol=rel_tol
    )
    if not exact > 0:
        raise NumericalFailure('tau_sq', f"non-positive filtered norm {exact}")
    return ScalingResult(
        tau_sq_exact=exact,
        tau_sq_asymptotic=tau_sq_asymptotic(spec, k, v, delta_n, rel_tol),
        delta_n=delta_n,
        k=k,
        v=v,
        quadrature_error_estimate=err,
    )


def pi_n_measure(
    spec: WeightSpec,
    k: int,
    v: int,
    delta_n: float,
    interval: Tuple[float, float],
    rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol'],
) -> float:
    """π_{n,k}^v([a, b]): masa relativa de (Δ_k g)² en el intervalo.

    El filtro se ancla en su extremo delantero, x ↦ Δ_k g(x + k·vΔ_n), así
    la masa de cada singularidad θ queda en [θ − kvΔ_n, θ].
    """
    a, b = map(float, interval)
    if not a < b:
        raise BSSValidationError(f"interval needs a < b, got [{a}, {b}]")
    _check_delta(spec, k, v, delta_n)
    coeffs = filter_coefficients(k)
    shifts = filter_shifts(k, v * delta_n, anchor=k)
    total, _ = combination_square_integral(spec, coeffs, shifts, rel_tol=rel_tol)
    part, _ = combination_square_integral(
        spec, coeffs, shifts, lower=a, upper=b, rel_tol=rel_tol, abs_tol=1e-3 * rel_tol * total
    )
    return float(min(max(part / total, 0.0), 1.0))


# ---------------------------------------------------------------------------
# Núcleo gaussiano: ‖g‖², R, r
# ---------------------------------------------------------------------------

def g_norm_sq(spec: WeightSpec, rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol']) -> float:
    value, _ = combination_square_integral(spec, [1.0], [0.0], rel_tol=rel_tol)
    return value


def variogram(spec: WeightSpec, t: float, rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol']) -> float:
    """R(t) = ∫ (g(u + t) − g(u))² du, calculado directamente."""
    t = abs(float(t))
    if t == 0.0:
        return 0.0
    value, _ = combination_square_integral(spec, [1.0, -1.0], [-t, 0.0], rel_tol=rel_tol)
    return value


def _tabulate_variogram(spec: WeightSpec, lags: Sequence[float], rel_tol: float, n_jobs: int) -> List[float]:
    if n_jobs == 1:
        return [variogram(spec, t, rel_tol) for t in lags]
    return Parallel(n_jobs=n_jobs)(delayed(variogram)(spec, t, rel_tol) for t in lags)


def covariance_kernel(
    spec: WeightSpec,
    t_grid: Sequence[float],
    rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol'],
    n_jobs: int = 1,
    verbose: bool = False,
    interp_tol: Optional[float] = None,
    max_nodes: int = 4096,
) -> CovarianceKernel:
    """Tabula r en ``t_grid`` (no negativo y ordenado) y refina la grilla.

    En cada intervalo se compara r evaluado directamente en el punto medio
    con la interpolación lineal de sus extremos; si la diferencia supera
    ``interp_tol`` (por defecto ``rel_tol``; r está normalizada con r(0) = 1)
    el punto medio queda como nodo y ambas mitades se vuelven a revisar.
    Los nodos pedidos se conservan siempre. Si hacen falta más de
    ``max_nodes`` nodos se lanza ``NumericalFailure``.
    """
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise BSSValidationError("t_grid must be a non-empty 1-D sequence")
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise BSSValidationError("t_grid must be nonnegative and sorted")
    tol = rel_tol if interp_tol is None else float(interp_tol)
    if tol <= 0:
        raise BSSValidationError(f"interp_tol must be positive, got {tol}")

    norm = g_norm_sq(spec, rel_tol)
    scale = 2.0 * norm
    nodes = dict(zip(grid.tolist(), _tabulate_variogram(spec, grid.tolist(), rel_tol, n_jobs)))
    pending = [(a, b) for a, b in zip(grid[:-1].tolist(), grid[1:].tolist()) if b > a]
    interp_error = 0.0
    refinements = 0
    while pending:
        if len(nodes) + len(pending) > max_nodes:
            raise NumericalFailure(
                'covariance_kernel',
                f"interpolation error above {tol:g} with {len(nodes)} nodes "
                f"(max_nodes = {max_nodes}); worst interval [{pending[0][0]:.6g}, {pending[0][1]:.6g}]",
            )
        mids = [0.5 * (a + b) for a, b in pending]
        values = _tabulate_variogram(spec, mids, rel_tol, n_jobs)
        failed = []
        for (a, b), m, value in zip(pending, mids, values):
            error = abs(value - 0.5 * (nodes[a] + nodes[b])) / scale
            if not a < m < b:
                raise NumericalFailure('covariance_kernel', f"cannot split interval [{a!r}, {b!r}] any further")
            nodes[m] = value
            if error > tol:
                failed += [(a, m), (m, b)]
            else:
                interp_error = max(interp_error, error)
        pending = failed
        refinements += 1

    lags = np.array(sorted(nodes))
    r_table = 1.0 - np.array([nodes[t] for t in lags]) / scale
    if verbose:
        print(
            f"✓ Covariance kernel tabulated on {lags.size} lags after {refinements} passes "
            f"(||g||^2 = {norm:.6g}, interp error <= {interp_error:.2e})",
            file=sys.stderr,
        )
    return CovarianceKernel(g_norm_sq=norm, t_grid=lags, r_table=r_table, interp_error=interp_error)


def tau_sq_from_variogram(kernel: CovarianceKernel, k: int, v: int, delta_n: float) -> float:
    """τ² = −½·Σ_{j,j'} a_j a_{j'}·R(|j − j'|·vΔ_n)."""
    coeffs = filter_coefficients(k)
    step = v * delta_n
    total = 0.0
    for j, a in enumerate(coeffs):
        for jp, b in enumerate(coeffs):
            if j != jp:
                total += a * b * kernel.R(abs(j - jp) * step)
    return -0.5 * total


# ---------------------------------------------------------------------------
# Documento JSON del subcomando `limits`
# ---------------------------------------------------------------------------

def limits_document(
    spec: WeightSpec,
    k: int,
    deltas: Sequence[float] = (),
    vs: Sequence[int] = (1, 2),
    rel_tol: float = DEFAULT_QUADRATURE_PARAMS['rel_tol'],
) -> Dict:
    measure = pi_k(spec, k, rel_tol)
    tau_rows = []
    for delta_n in deltas:
        for v in vs:
            res = tau_sq(spec, k, v, delta_n, rel_tol)
            tau_rows.append({
                'delta_n': delta_n,
                'k': k,
                'v': v,
                'exact': res.tau_sq_exact,
                'asymptotic': res.tau_sq_asymptotic,
            })
    return {
        'alpha': measure.alpha,
        'active_set': list(measure.active_set),
        'pi_k': [{'theta': theta, 'weight': weight} for theta, weight in measure.atoms()],
        'h_norms_sq': list(measure.h_norms_sq),
        'tau': tau_rows,
    }
