#!/usr/bin/env python3
"""HF Statistics
-------------
Estadísticos observables sobre una trayectoria muestreada:

- diferencias de orden k a frecuencias Δ_n y 2Δ_n;
- variación cuadrática realizada QV y cuarticidad QQ, y sus versiones
  escaladas por τ_k(vΔ_n);
- los límites deterministas de QV (LGN) y QQ;
- el estimador α̂ = ½(log₂(QV_2/QV_1) − 1), el estadístico factible del TCL
  y el intervalo de confianza.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy import integrate, stats

from bss_errors import BSSValidationError, DegenerateInputError
from fbm_limits import ALPHA_CLAMP, LambdaMatrix, lambda_document, lambda_matrix_at_alpha_hat
from limit_quantities import pi_k, tau_sq
from simulation import IntermittencySpec, PathSample, SigmaKind
from weight_model import WeightSpec, filter_coefficients

DEFAULT_ESTIMATION_PARAMS = {
    'qv_floor': 1e-300,
    'ci_level': 0.95,
    'alpha_clamp': ALPHA_CLAMP,
    'limit_rel_tol': 1e-10,
}

PathLike = Union[PathSample, np.ndarray]


@dataclass(frozen=True, eq=False)
class QVResult:
    """QV(X, k, vΔ_n)_t con el proceso de sumas parciales opcional."""

    value: float
    k: int
    v: int
    delta_n: float
    n_terms: int
    as_process: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> Dict:
        return {'value': self.value, 'k': self.k, 'v': self.v, 'delta_n': self.delta_n, 'n_terms': self.n_terms}


@dataclass(frozen=True, eq=False)
class EstimationResult:
    alpha_hat: float
    s_n: float
    qv_1: QVResult
    qv_2: QVResult
    qq_1: float
    t_stat: Optional[float]
    ci_95: Tuple[float, float]
    lambda_used: LambdaMatrix
    clamped: bool
    horizon_checked: bool
    k: int
    t_used: float
    null_alpha: Optional[float] = None
    ci_level: float = DEFAULT_ESTIMATION_PARAMS['ci_level']

    @property
    def std_error(self) -> float:
        """Semi-ancho del intervalo dividido por el cuantil normal."""
        z = stats.norm.ppf(0.5 + 0.5 * self.ci_level)
        return (self.ci_95[1] - self.ci_95[0]) / (2.0 * z)

    def to_dict(self) -> Dict:
        return {
            'alpha_hat': self.alpha_hat,
            's_n': self.s_n,
            'qv_1': self.qv_1.to_dict(),
            'qv_2': self.qv_2.to_dict(),
            'qq_1': self.qq_1,
            't_stat': self.t_stat,
            'null_alpha': self.null_alpha,
            'ci_95': list(self.ci_95),
            'ci_level': self.ci_level,
            'lambda_used': lambda_document(self.lambda_used),
            'clamped': self.clamped,
            'horizon_checked': self.horizon_checked,
            'k': self.k,
            't_used': self.t_used,
        }


# ---------------------------------------------------------------------------
# Diferencias, QV y QQ
# ---------------------------------------------------------------------------

def _values_and_delta(path: PathLike) -> Tuple[np.ndarray, Optional[float], Optional[float]]:
    if isinstance(path, PathSample):
        return path.values, path.delta_n, path.horizon
    return np.asarray(path, dtype=float), None, None


def kth_differences(path: PathLike, k: int, v: int) -> np.ndarray:
    """Δ_{i,k}^{n,v} X = Σ_j (−1)^j C(k,j)·X_{i − vj}, i = vk … N."""
    values, _, _ = _values_and_delta(path)
    if int(k) != k or k < 1:
        raise BSSValidationError(f"filter order k must be an integer >= 1, got {k}")
    if v not in (1, 2):
        raise BSSValidationError(f"frequency multiplier v must be 1 or 2, got {v}")
    n = values.size
    if n <= v * k:
        raise BSSValidationError(f"path too short: {n} points for k={k}, v={v}")
    out = np.zeros(n - v * k)
    for j, a in enumerate(filter_coefficients(k)):
        out += a * values[v * k - v * j: n - v * j]
    return out


def _truncate(path: PathLike, t: Optional[float]) -> PathLike:
    """Recorta la trayectoria a los índices i ≤ [t/Δ_n]."""
    if t is None:
        return path
    values, delta, horizon = _values_and_delta(path)
    if delta is None:
        raise BSSValidationError("a time horizon needs a PathSample with grid metadata")
    if t > horizon + 1e-12 * max(1.0, horizon):
        raise BSSValidationError(f"t = {t} exceeds the path horizon {horizon}")
    last = int(math.floor(t / delta + 1e-9))
    return values[: last + 1]


def qv(path: PathLike, k: int, v: int, t: Optional[float] = None, as_process: bool = False) -> QVResult:
    """QV(X, k, vΔ_n)_t = Σ_{i=vk}^{[t/Δ_n]} (Δ_{i,k}^{n,v} X)²."""
    _, delta, _ = _values_and_delta(path)
    diffs = kth_differences(_truncate(path, t), k, v)
    squares = diffs ** 2
    process = np.cumsum(squares) if as_process else None
    return QVResult(float(np.sum(squares)), k, v, delta if delta is not None else float('nan'), diffs.size, process)


def qq(path: PathLike, k: int, v: int, t: Optional[float] = None) -> float:
    """QQ(X, k, vΔ_n)_t = Σ (Δ_{i,k}^{n,v} X)⁴."""
    diffs = kth_differences(_truncate(path, t), k, v)
    return float(np.sum(diffs ** 4))


def _tau_sq_value(spec: WeightSpec, k: int, v: int, delta_n: float, use_asymptotic_tau: bool) -> float:
    res = tau_sq(spec, k, v, delta_n)
    return res.tau_sq_asymptotic if use_asymptotic_tau else res.tau_sq_exact


def scaled_qv(
    path: PathSample,
    spec: WeightSpec,
    k: int,
    v: int,
    use_asymptotic_tau: bool = False,
    t: Optional[float] = None,
    tau_sq_value: Optional[float] = None,
) -> float:
    """Δ_n/τ_k(vΔ_n)²·QV(X, k, vΔ_n)_t. ``tau_sq_value`` evita recalcular τ²."""
    tau2 = tau_sq_value if tau_sq_value is not None else _tau_sq_value(spec, k, v, path.delta_n, use_asymptotic_tau)
    return path.delta_n / tau2 * qv(path, k, v, t).value


def scaled_qq(
    path: PathSample,
    spec: WeightSpec,
    k: int,
    v: int,
    t: Optional[float] = None,
    tau_sq_value: Optional[float] = None,
) -> float:
    """Δ_n/τ_k(vΔ_n)⁴·QQ(X, k, vΔ_n)_t."""
    tau2 = tau_sq_value if tau_sq_value is not None else _tau_sq_value(spec, k, v, path.delta_n, False)
    return path.delta_n / tau2 ** 2 * qq(path, k, v, t)


# ---------------------------------------------------------------------------
# Límites deterministas
# ---------------------------------------------------------------------------

def _require_evaluable(sigma: IntermittencySpec) -> None:
    if not sigma.is_evaluable:
        raise BSSValidationError("limit values need a constant or deterministic sigma, not ExpOU")


def _sigma_sq(sigma: IntermittencySpec):
    return lambda s: sigma.sigma_at(s) ** 2


def limit_qv(
    spec: WeightSpec,
    sigma: IntermittencySpec,
    k: int,
    t: float,
    rel_tol: float = DEFAULT_ESTIMATION_PARAMS['limit_rel_tol'],
) -> float:
    """∫ (∫_{−θ}^{t−θ} σ_s² ds) π_k(dθ)."""
    _require_evaluable(sigma)
    if sigma.kind is SigmaKind.CONSTANT:
        return sigma.params[0] ** 2 * t
    measure = pi_k(spec, k)
    f = _sigma_sq(sigma)
    total = 0.0
    for theta, weight in measure.atoms():
        value, _ = integrate.quad(f, -theta, t - theta, epsabs=0.0, epsrel=rel_tol, limit=200)
        total += weight * value
    return total


def limit_qq(
    spec: WeightSpec,
    sigma: IntermittencySpec,
    k: int,
    t: float,
    rel_tol: float = DEFAULT_ESTIMATION_PARAMS['limit_rel_tol'],
) -> float:
    """3∫_0^t (Σ_θ π_k(θ)·σ²_{s−θ})² ds."""
    _require_evaluable(sigma)
    if sigma.kind is SigmaKind.CONSTANT:
        return 3.0 * sigma.params[0] ** 4 * t
    atoms = pi_k(spec, k).atoms()
    f = _sigma_sq(sigma)

    def integrand(s):
        return sum(w * f(s - theta) for theta, w in atoms) ** 2

    value, _ = integrate.quad(integrand, 0.0, t, epsabs=0.0, epsrel=rel_tol, limit=200)
    return 3.0 * value


# ---------------------------------------------------------------------------
# Estimación de α
# ---------------------------------------------------------------------------

def estimate_alpha(
    path: PathSample,
    k: int,
    t_used: Optional[float] = None,
    known_spec: Optional[WeightSpec] = None,
    null_alpha: Optional[float] = None,
    ci_level: float = DEFAULT_ESTIMATION_PARAMS['ci_level'],
) -> EstimationResult:
    """α̂ con el estadístico factible y el intervalo de confianza.

    Modo test (``null_alpha`` dado): t_stat = 2 log 2·QV_1·(α̂ − α_0)/D con
    D = sqrt(⅓·QQ_1·(−1,1)Λ(−1,1)ᵀ). El intervalo α̂ ± z·D/(2 log 2·QV_1)
    se devuelve siempre.
    """
    t_used = path.horizon if t_used is None else float(t_used)
    if not t_used > 0:
        raise BSSValidationError(f"t_used must be positive, got {t_used}")
    horizon_checked = False
    if known_spec is not None:
        if known_spec.is_singular and len(known_spec.segments) > 1 and not t_used < known_spec.min_spacing:
            raise BSSValidationError(
                f"t_used = {t_used} must be below the minimum singularity spacing {known_spec.min_spacing}"
            )
        horizon_checked = True

    qv_1 = qv(path, k, 1, t_used)
    qv_2 = qv(path, k, 2, t_used)
    floor = DEFAULT_ESTIMATION_PARAMS['qv_floor']
    if not (qv_1.value > floor and qv_2.value > floor):
        raise DegenerateInputError(
            f"degenerate path: QV at delta_n is {qv_1.value:g} and at 2*delta_n is {qv_2.value:g}"
        )
    s_n = qv_2.value / qv_1.value
    alpha_hat = 0.5 * (math.log2(s_n) - 1.0)
    qq_1 = qq(path, k, 1, t_used)

    lam, clamped = lambda_matrix_at_alpha_hat(alpha_hat, k)
    denominator = math.sqrt(qq_1 * lam.quadratic_form([-1.0, 1.0]) / 3.0)
    scale = 2.0 * math.log(2.0) * qv_1.value
    z = stats.norm.ppf(0.5 + 0.5 * ci_level)
    half_width = z * denominator / scale
    t_stat = None
    if null_alpha is not None:
        t_stat = scale * (alpha_hat - float(null_alpha)) / denominator

    return EstimationResult(
        alpha_hat=alpha_hat,
        s_n=s_n,
        qv_1=qv_1,
        qv_2=qv_2,
        qq_1=qq_1,
        t_stat=t_stat,
        ci_95=(alpha_hat - half_width, alpha_hat + half_width),
        lambda_used=lam,
        clamped=clamped,
        horizon_checked=horizon_checked,
        k=k,
        t_used=t_used,
        null_alpha=None if null_alpha is None else float(null_alpha),
        ci_level=ci_level,
    )


def estimation_document(result: EstimationResult) -> Dict:
    return result.to_dict()
