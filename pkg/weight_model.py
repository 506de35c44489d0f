#!/usr/bin/env python3
"""Weight Model
--------------
Funciones de peso ``g`` de procesos BSS con varias singularidades y sus
filtros de orden k.

Cada singularidad θ_i se describe con un exponente α_i y un factor suave
f_i (polinomio en x−θ_i). Dentro de la ventana |x−θ_i| < δ_i la función es
exactamente |x−θ_i|^{α_i}·f_i(x); entre ventanas se mezcla con una curva base
b(x)=c_b·e^{−λ x} usando smoothsteps polinomiales de orden N ≥ k+1, y más
allá de ``tail_start`` coincide con b. También se soporta la familia de
indicadoras Σ a_i·1_{(θ_i^{(1)}, θ_i^{(2)}]}.

La especificación se lee y escribe en TOML::

    kind = "SingularKernel"
    tail_rate = 1.0
    max_filter_order = 2

    [[segments]]
    theta = 0.0
    alpha = -0.16666666666666666
    f_coeffs = [1.0]
    half_width = 0.4
"""

from __future__ import annotations

import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Dict, List, Sequence, Tuple

import numpy as np
import tomli_w
from numpy.polynomial import polynomial as P
from scipy.special import comb

from bss_errors import BSSValidationError, NumericalFailure

# Tolerancia absoluta para decidir α_i = α (conjunto activo).
ACTIVE_SET_TOL = 1e-12
# Grado máximo de los polinomios f_i.
MAX_F_DEGREE = 6
# Cota de robustez: α_i − α > 1/4 para i fuera del conjunto activo.
ROBUSTNESS_GAP = 0.25
# Tolerancia relativa al comparar derivadas laterales en los cortes.
SMOOTHNESS_RTOL = 1e-8


class KernelKind(str, Enum):
    SINGULAR = "SingularKernel"
    INDICATOR = "IndicatorSum"


@dataclass(frozen=True)
class SingularitySegment:
    """Singularidad θ con exponente α, factor suave f y semiancho δ."""

    theta: float
    alpha: float
    f_coeffs: Tuple[float, ...]
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, 'f_coeffs', tuple(float(c) for c in self.f_coeffs))

    @property
    def f_at_theta(self) -> float:
        return self.f_coeffs[0]

    def f_value(self, dist):
        """f evaluado a distancia ``dist`` = x − θ."""
        return P.polyval(dist, self.f_coeffs)

    def power_form(self, dist):
        """|x−θ|^α·f(x) con x−θ = ``dist``."""
        return np.abs(dist) ** self.alpha * self.f_value(dist)


@dataclass(frozen=True)
class IndicatorTerm:
    """Término a·1_{(start, end]} de un kernel indicador."""

    amplitude: float
    start: float
    end: float


@dataclass(frozen=True)
class WeightSpec:
    """Kernel g: singularidades ordenadas (o términos indicadores) + cola."""

    kind: KernelKind
    segments: Tuple[SingularitySegment, ...] = ()
    tail_rate: float = 1.0
    max_filter_order: int = 2
    indicator_terms: Tuple[IndicatorTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'kind', KernelKind(self.kind))
        object.__setattr__(self, 'segments', tuple(self.segments))
        object.__setattr__(self, 'indicator_terms', tuple(
            t if isinstance(t, IndicatorTerm) else IndicatorTerm(*t) for t in self.indicator_terms
        ))

    # ------------------------------------------------------------------
    # Geometría derivada
    # ------------------------------------------------------------------
    @property
    def is_singular(self) -> bool:
        return self.kind is KernelKind.SINGULAR

    def sorted(self) -> 'WeightSpec':
        """Copia con segmentos / términos ordenados por posición."""
        return replace(
            self,
            segments=tuple(sorted(self.segments, key=lambda s: s.theta)),
            indicator_terms=tuple(sorted(self.indicator_terms, key=lambda t: t.start)),
        )

    @property
    def thetas(self) -> List[float]:
        return [s.theta for s in self.segments]

    @property
    def alphas(self) -> List[float]:
        return [s.alpha for s in self.segments]

    @property
    def min_spacing(self) -> float:
        """min_i (θ_i − θ_{i−1}); infinito con una sola singularidad."""
        if self.is_singular:
            points = self.thetas
        else:
            points = sorted({p for t in self.indicator_terms for p in (t.start, t.end)})
        if len(points) < 2:
            return math.inf
        return float(np.min(np.diff(points)))

    @cached_property
    def blend_width(self) -> float:
        """Ancho η de las transiciones entre ventanas."""
        if not self.is_singular:
            return 0.0
        segs = self.segments
        if len(segs) == 1:
            return segs[0].half_width
        gaps = [
            (b.theta - b.half_width) - (a.theta + a.half_width)
            for a, b in zip(segs[:-1], segs[1:])
        ]
        return 0.5 * min(gaps)

    @property
    def smooth_order(self) -> int:
        return max(self.max_filter_order, 2) + 1

    @cached_property
    def tail_start(self) -> float:
        """A partir de este punto g(x) = c_b·e^{−λx} exactamente."""
        if not self.is_singular:
            return max((t.end for t in self.indicator_terms), default=0.0)
        last = self.segments[-1]
        return last.theta + last.half_width + self.blend_width

    @cached_property
    def baseline_scale(self) -> float:
        """c_b de la curva base b(x) = c_b·e^{−λx} (0 para indicadoras)."""
        if not self.is_singular:
            return 0.0
        last = self.segments[-1]
        edge = last.theta + last.half_width
        return float(last.power_form(last.half_width) * math.exp(self.tail_rate * edge))

    def baseline(self, x):
        return self.baseline_scale * np.exp(-self.tail_rate * np.asarray(x, dtype=float))

    @property
    def singular_points(self) -> List[Tuple[float, float]]:
        """Pares (posición, exponente local de g) donde g no es suave."""
        if self.is_singular:
            return [(s.theta, s.alpha) for s in self.segments]
        # saltos: exponente 0
        return [(p, 0.0) for t in self.indicator_terms for p in (t.start, t.end)]

    @cached_property
    def kink_points(self) -> List[float]:
        """Bordes de ventanas y transiciones (cortes naturales de cuadratura)."""
        if not self.is_singular:
            return []
        eta = self.blend_width
        pts = {self.tail_start}
        for i, s in enumerate(self.segments):
            pts.update({s.theta + s.half_width, s.theta + s.half_width + eta})
            if i > 0:
                pts.update({s.theta - s.half_width, s.theta - s.half_width - eta})
        return sorted(p for p in pts if p > 0)

    @cached_property
    def _smoothstep_coeffs(self) -> np.ndarray:
        n = self.smooth_order
        coeffs = np.zeros(2 * n + 2)
        for k in range(n + 1):
            coeffs[n + 1 + k] = (-1) ** k * comb(n + k, k, exact=True) * comb(2 * n + 1, n - k, exact=True)
        return coeffs

    def smoothstep(self, t):
        """Smoothstep polinomial de orden N: 0 en t ≤ 0, 1 en t ≥ 1, C^N."""
        t = np.clip(t, 0.0, 1.0)
        return P.polyval(t, self._smoothstep_coeffs)


# ---------------------------------------------------------------------------
# Evaluación
# ---------------------------------------------------------------------------

def _eval_singular(spec: WeightSpec, base: np.ndarray, offset: np.ndarray, shift: float) -> np.ndarray:
    x = (base - shift) + offset
    out = np.zeros(base.shape)
    positive = x > 0
    eta = spec.blend_width
    bump_total = np.zeros_like(out)
    for i, seg in enumerate(spec.segments):
        # distancia calculada como (base − (θ + shift)) + offset para no perder offsets pequeños
        dist = (base - (seg.theta + shift)) + offset
        adist = np.abs(dist)
        if i == 0:
            inside = positive & (dist <= seg.half_width)
            blend = positive & (dist > seg.half_width) & (dist < seg.half_width + eta)
        else:
            inside = (adist <= seg.half_width) & (adist > 0)
            blend = (adist > seg.half_width) & (adist < seg.half_width + eta)
        psi = np.zeros_like(out)
        psi[inside] = 1.0
        if eta > 0:
            psi[blend] = 1.0 - spec.smoothstep((adist[blend] - seg.half_width) / eta)
        active = psi > 0
        if np.any(active):
            out[active] += psi[active] * seg.power_form(dist[active])
        bump_total += psi
    rest = positive & (bump_total < 1.0)
    if np.any(rest):
        out[rest] += (1.0 - bump_total[rest]) * spec.baseline(x[rest])
    # convención g(θ_i) = 0
    for seg in spec.segments[1:]:
        out[((base - (seg.theta + shift)) + offset) == 0] = 0.0
    return out


def _eval_indicator(spec: WeightSpec, base: np.ndarray, offset: np.ndarray, shift: float) -> np.ndarray:
    out = np.zeros(base.shape)
    for term in spec.indicator_terms:
        after_start = ((base - (term.start + shift)) + offset) > 0
        before_end = ((base - (term.end + shift)) + offset) <= 0
        out += term.amplitude * (after_start & before_end)
    return out


def eval_g_offset(spec: WeightSpec, base, offset, shift: float = 0.0):
    """g(base + offset − shift), con las distancias a cada singularidad θ
    calculadas como (base − (θ + shift)) + offset.

    Es la forma que usa la cuadratura singular: si ``base`` es exactamente el
    punto θ + shift, la distancia es ``offset`` sin error de redondeo.
    """
    shape = np.broadcast(np.asarray(base), np.asarray(offset)).shape
    base, offset = np.broadcast_arrays(
        np.atleast_1d(np.asarray(base, dtype=float)), np.atleast_1d(np.asarray(offset, dtype=float))
    )
    if spec.is_singular:
        out = _eval_singular(spec, base, offset, float(shift))
    else:
        out = _eval_indicator(spec, base, offset, float(shift))
    return out.reshape(shape)


def eval_g(spec: WeightSpec, x):
    """Evalúa g en ``x`` (escalar o array). Total sobre ℝ; g(x)=0 para x ≤ 0."""
    out = eval_g_offset(spec, x, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def filter_coefficients(k: int) -> np.ndarray:
    """Coeficientes (−1)^j·C(k, j), j = 0..k."""
    return np.array([(-1) ** j * comb(k, j, exact=True) for j in range(k + 1)], dtype=float)


def filter_shifts(k: int, step: float, anchor: int = 0) -> List[float]:
    """Desplazamientos (j − anchor)·step de cada término del filtro.

    anchor = 0 da Δ_k g(x); anchor = k da la versión anclada en el extremo
    delantero, x ↦ Δ_k g(x + k·step).
    """
    return [(j - anchor) * step for j in range(k + 1)]


def check_filter_args(spec: WeightSpec, k: int, v: int) -> None:
    if int(k) != k or k < 1:
        raise BSSValidationError(f"filter order k must be an integer >= 1, got {k}")
    if k > spec.max_filter_order:
        raise BSSValidationError(
            f"filter order k={k} exceeds max_filter_order={spec.max_filter_order}"
        )
    if v not in (1, 2):
        raise BSSValidationError(f"frequency multiplier v must be 1 or 2, got {v}")


def combination_offset(spec: WeightSpec, coeffs: Sequence[float], shifts: Sequence[float], base, offset):
    """Σ_j c_j·g(x − s_j) en forma (base, offset)."""
    total = 0.0
    for c, s in zip(coeffs, shifts):
        total = total + c * eval_g_offset(spec, base, offset, shift=s)
    return total


def filtered_g_offset(spec: WeightSpec, k: int, step: float, base, offset, anchor: int = 0):
    """Δ_k g con paso ``step`` (= vΔ_n) en forma (base, offset)."""
    return combination_offset(spec, filter_coefficients(k), filter_shifts(k, step, anchor), base, offset)


def filtered_g(spec: WeightSpec, k: int, v: int, delta_n: float, x):
    """Filtro Δ_k^{n,v} g(x) = Σ_j (−1)^j C(k,j) g(x − v·j·Δ_n)."""
    check_filter_args(spec, k, v)
    if delta_n <= 0:
        raise BSSValidationError(f"delta_n must be positive, got {delta_n}")
    out = filtered_g_offset(spec, k, v * delta_n, x, 0.0)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Suavidad y validación
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothnessSummary:
    """α = min α_i, conjunto activo 𝒜 y chequeos de hipótesis."""

    alpha_min: float
    active_set: Tuple[int, ...]
    robustness_ok: bool
    clt_k1_ok: bool

    @property
    def hurst(self) -> float:
        return self.alpha_min + 0.5


def summarize_smoothness(spec: WeightSpec) -> SmoothnessSummary:
    if not spec.is_singular:
        raise BSSValidationError("summarize_smoothness: IndicatorSum kernels have no smoothness exponent")
    ordered = spec.sorted()
    alphas = ordered.alphas
    if not alphas:
        raise BSSValidationError("summarize_smoothness: spec has no segments")
    alpha = min(alphas)
    active = tuple(i for i, a in enumerate(alphas) if abs(a - alpha) <= ACTIVE_SET_TOL)
    robust = all(a - alpha > ROBUSTNESS_GAP for i, a in enumerate(alphas) if i not in active)
    return SmoothnessSummary(
        alpha_min=alpha,
        active_set=active,
        robustness_ok=robust,
        clt_k1_ok=all(a < 0 for a in alphas),
    )


def _structural_diagnostics(spec: WeightSpec) -> List[str]:
    diags: List[str] = []
    if spec.max_filter_order < 1 or int(spec.max_filter_order) != spec.max_filter_order:
        diags.append(f"filter_order: max_filter_order must be an integer >= 1 (got {spec.max_filter_order})")

    if not spec.is_singular:
        terms = spec.indicator_terms
        if not terms:
            diags.append("indicator: IndicatorSum needs at least one term")
        for i, t in enumerate(terms):
            if t.start < 0 or t.end <= t.start:
                diags.append(f"indicator: term {i} needs 0 <= start < end (got {t.start}, {t.end})")
            if t.amplitude == 0:
                diags.append(f"indicator: term {i} has zero amplitude")
        for i, (a, b) in enumerate(zip(terms[:-1], terms[1:])):
            if b.start <= a.end:
                diags.append(f"ordering: indicator terms {i} and {i + 1} overlap or are out of order")
        return diags

    segs = spec.segments
    if not segs:
        return diags + ["ordering: SingularKernel needs at least one segment"]
    if segs[0].theta != 0.0:
        diags.append(f"ordering: first singularity must sit at theta_0 = 0 (got {segs[0].theta})")
    for i, (a, b) in enumerate(zip(segs[:-1], segs[1:])):
        if not b.theta > a.theta:
            diags.append(f"ordering: theta_{i + 1} = {b.theta} must exceed theta_{i} = {a.theta}")
    spacing = spec.min_spacing
    for i, s in enumerate(segs):
        if not (-0.5 < s.alpha < 0.5) or s.alpha == 0:
            diags.append(f"exponent_range: alpha_{i} = {s.alpha} outside (-1/2, 0) U (0, 1/2)")
        if not s.f_coeffs or s.f_coeffs[0] == 0:
            diags.append(f"f_nonzero: f_{i}(theta_{i}) must be nonzero")
        if len(s.f_coeffs) > MAX_F_DEGREE + 1:
            diags.append(f"f_degree: f_{i} has degree {len(s.f_coeffs) - 1} > {MAX_F_DEGREE}")
        if not s.half_width > 0:
            diags.append(f"half_width: delta_{i} must be positive (got {s.half_width})")
        elif math.isfinite(spacing) and not s.half_width < 0.5 * spacing:
            diags.append(
                f"half_width: delta_{i} = {s.half_width} must be below half the minimum spacing {spacing}"
            )
    if not spec.tail_rate > 0:
        diags.append(f"tail_rate: must be positive (got {spec.tail_rate})")
    return diags


def _falling(a: float, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= a - i
    return out


def _leibniz(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Derivadas de un producto a partir de las derivadas de cada factor."""
    return np.array([
        sum(math.comb(m, j) * a[j] * b[m - j] for j in range(m + 1)) for m in range(len(a))
    ])


def g_derivatives(spec: WeightSpec, x: float, side: int, order: int) -> np.ndarray:
    """Derivadas laterales 0..order de g en ``x`` (side = −1 izquierda, +1 derecha).

    Se evalúan sobre la expresión analítica ψ_i·P_i + (1 − Σψ_i)·b que define
    g en el lado pedido, así que en los bordes de ventana y transición no hay
    error de discretización. ``x`` debe ser positivo y distinto de todo θ_i.
    """
    if not spec.is_singular:
        raise BSSValidationError("g_derivatives: only SingularKernel specs have smooth pieces")
    if side not in (-1, 1):
        raise BSSValidationError(f"side must be -1 or 1, got {side}")
    if not x > 0 or x in spec.thetas:
        raise BSSValidationError(f"g_derivatives: x = {x} must be positive and not a singularity")

    # testigo del lado pedido, antes del siguiente corte
    cuts = [0.0] + spec.thetas + spec.kink_points
    gaps = [side * (c - x) for c in cuts if side * (c - x) > 0]
    sample = x + side * 0.25 * min(gaps + [spec.blend_width])

    eta = spec.blend_width
    ms = range(order + 1)
    psi_total = np.zeros(order + 1)
    total = np.zeros(order + 1)
    for seg in spec.segments:
        d_sample = abs(sample - seg.theta)
        psi = np.zeros(order + 1)
        if d_sample <= seg.half_width:
            psi[0] = 1.0
        elif eta > 0 and d_sample < seg.half_width + eta:
            s = math.copysign(1.0, x - seg.theta)
            u = (s * (x - seg.theta) - seg.half_width) / eta
            coeffs = spec._smoothstep_coeffs
            for m in ms:
                psi[m] = -P.polyval(u, coeffs) * (s / eta) ** m
                coeffs = P.polyder(coeffs)
            psi[0] += 1.0
        else:
            continue
        d = x - seg.theta
        s, r = math.copysign(1.0, d), abs(d)
        power = np.array([s ** j * _falling(seg.alpha, j) * r ** (seg.alpha - j) for j in ms])
        f = np.array([P.polyval(d, P.polyder(seg.f_coeffs, j)) for j in ms])
        total += _leibniz(psi, _leibniz(power, f))
        psi_total += psi
    baseline = np.array([(-spec.tail_rate) ** m for m in ms]) * float(spec.baseline(x))
    weight = -psi_total
    weight[0] += 1.0
    return total + _leibniz(weight, baseline)


def _smoothness_diagnostics(spec: WeightSpec) -> List[str]:
    """Continuidad de derivadas 0..k en los bordes de ventana y transición,
    comparando las derivadas laterales analíticas."""
    diags = []
    k = spec.max_filter_order
    for p in spec.kink_points:
        scale = min([abs(p - s.theta) for s in spec.segments] + [spec.blend_width or math.inf])
        left = g_derivatives(spec, p, -1, k)
        right = g_derivatives(spec, p, 1, k)
        g_p = abs(eval_g(spec, p))
        for m in range(k + 1):
            dl, dr = left[m], right[m]
            magnitude = max(abs(dl), abs(dr)) + g_p / scale ** m + 1e-300
            if abs(dl - dr) > SMOOTHNESS_RTOL * magnitude:
                diags.append(
                    f"smoothness: derivative {m} of g jumps at x = {p:.6g} "
                    f"(left {dl:.6g}, right {dr:.6g})"
                )
    return diags


def validate(spec: WeightSpec) -> List[str]:
    """Devuelve la lista de diagnósticos (vacía si la especificación es válida).

    Cada diagnóstico empieza con el nombre de la condición violada
    (``ordering``, ``half_width``, ``exponent_range``, ``f_nonzero``, ``l2``,
    ``smoothness``...). El llamador decide si aborta.
    """
    diags = _structural_diagnostics(spec)
    if diags:
        return diags

    if spec.is_singular:
        diags.extend(_smoothness_diagnostics(spec))

    from limit_quantities import g_norm_sq  # import local: limit_quantities depende de este módulo
    try:
        norm = g_norm_sq(spec, rel_tol=1e-8)
        if not (math.isfinite(norm) and norm > 0):
            diags.append(f"l2: ||g||^2 = {norm} is not finite and positive")
    except NumericalFailure as exc:
        diags.append(f"l2: quadrature of g^2 failed ({exc})")
    return diags


def require_valid(spec: WeightSpec) -> WeightSpec:
    """Lanza BSSValidationError con todos los diagnósticos si los hay."""
    diags = validate(spec)
    if diags:
        raise BSSValidationError(f"invalid weight spec: {diags[0]}", diags)
    return spec


# ---------------------------------------------------------------------------
# Constructores de conveniencia
# ---------------------------------------------------------------------------

def singular_spec(
    thetas: Sequence[float],
    alphas: Sequence[float],
    f_values: Sequence[float] | None = None,
    half_width: float | None = None,
    tail_rate: float = 1.0,
    max_filter_order: int = 3,
) -> WeightSpec:
    """Kernel con f_i constantes; δ por defecto = 0.4·(espaciado mínimo) o 0.5."""
    thetas = [float(t) for t in thetas]
    f_values = list(f_values) if f_values is not None else [1.0] * len(thetas)
    if half_width is None:
        spacing = float(np.min(np.diff(thetas))) if len(thetas) > 1 else math.inf
        half_width = 0.4 * spacing if math.isfinite(spacing) else 0.5
    segments = tuple(
        SingularitySegment(theta=t, alpha=float(a), f_coeffs=(float(f),), half_width=half_width)
        for t, a, f in zip(thetas, alphas, f_values)
    )
    return WeightSpec(KernelKind.SINGULAR, segments, tail_rate=tail_rate, max_filter_order=max_filter_order)


def indicator_spec(terms: Sequence[Tuple[float, float, float]], max_filter_order: int = 3) -> WeightSpec:
    """Kernel Σ a_i·1_{(θ1_i, θ2_i]} a partir de tuplas (a, θ1, θ2)."""
    return WeightSpec(
        KernelKind.INDICATOR,
        indicator_terms=tuple(IndicatorTerm(*map(float, t)) for t in terms),
        max_filter_order=max_filter_order,
    )


# ---------------------------------------------------------------------------
# TOML
# ---------------------------------------------------------------------------

def weight_spec_to_dict(spec: WeightSpec) -> Dict:
    data: Dict = {
        'kind': spec.kind.value,
        'tail_rate': float(spec.tail_rate),
        'max_filter_order': int(spec.max_filter_order),
    }
    if spec.is_singular:
        data['segments'] = [
            {
                'theta': float(s.theta),
                'alpha': float(s.alpha),
                'f_coeffs': [float(c) for c in s.f_coeffs],
                'half_width': float(s.half_width),
            }
            for s in spec.segments
        ]
    else:
        data['indicator_terms'] = [
            {'amplitude': t.amplitude, 'start': t.start, 'end': t.end} for t in spec.indicator_terms
        ]
    return data


def weight_spec_from_dict(data: Dict) -> WeightSpec:
    """Construye el spec tal cual viene en la tabla, sin reordenar segmentos."""
    try:
        kind = KernelKind(data.get('kind', KernelKind.SINGULAR.value))
    except ValueError as exc:
        raise BSSValidationError(f"kind: unknown kernel kind {data.get('kind')!r}") from exc
    try:
        segments = tuple(
            SingularitySegment(
                theta=float(s['theta']),
                alpha=float(s['alpha']),
                f_coeffs=tuple(float(c) for c in s.get('f_coeffs', [1.0])),
                half_width=float(s['half_width']),
            )
            for s in data.get('segments', [])
        )
        terms = tuple(
            IndicatorTerm(float(t['amplitude']), float(t['start']), float(t['end']))
            for t in data.get('indicator_terms', [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BSSValidationError(f"spec: malformed segment table ({exc})") from exc
    spec = WeightSpec(
        kind=kind,
        segments=segments,
        tail_rate=float(data.get('tail_rate', 1.0)),
        max_filter_order=int(data.get('max_filter_order', 2)),
        indicator_terms=terms,
    )
    return spec


def load_weight_spec(path: str) -> WeightSpec:
    try:
        with open(path, 'rb') as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise BSSValidationError(f"spec: file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise BSSValidationError(f"spec: {path} is not valid TOML ({exc})") from exc
    return weight_spec_from_dict(data.get('kernel', data))


def dumps_weight_spec(spec: WeightSpec) -> str:
    return tomli_w.dumps(weight_spec_to_dict(spec))


def dump_weight_spec(spec: WeightSpec, path: str) -> None:
    with open(path, 'wb') as fh:
        tomli_w.dump(weight_spec_to_dict(spec), fh)
