#!/usr/bin/env python3
"""FBM Limits
----------
Correlaciones de los filtros de orden k del movimiento browniano fraccionario
y la matriz de covarianza asintótica Λ_k del TCL.

ρ_k^{v1,v2}(j) = corr(Δ_{i,k}^{v1} B^H, Δ_{i+j,k}^{v2} B^H) se obtiene de la
expansión bilineal de los coeficientes del filtro sobre la covarianza del fBm:

    cov = −½ Σ_{m,m'} a_m a_{m'} |j + v1·m − v2·m'|^{2H},   a_m = (−1)^m C(k,m)

(los términos |s|^{2H} se anulan porque Σ a_m = 0). Para |j| mayor que el
alcance del filtro se usa |j|^{2H}·Σ c_d·expm1(2H·log1p(d/j)), que no pierde
dígitos por cancelación.

λ_{v1,v2} = 2·Σ_{j∈ℤ} ρ_k^{v1,v2}(j)², truncada en J cuando la cota de la
cola C·J^{p+1}/|p+1| (p = 4(H − k), C ajustada en la última década) queda por
debajo de rel_tol·suma parcial.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from bss_errors import BSSValidationError, SeriesCertificationError
from weight_model import filter_coefficients

DEFAULT_SERIES_PARAMS = {
    'rel_tol': 1e-10,
    'initial_lag': 1024,
    'max_lag': 2 ** 24,
    'chunk': 2 ** 16,
    'fit_points': 64,
}

# Rango de α̂ admitido al evaluar Λ_k en la estimación.
ALPHA_CLAMP = {
    1: (-0.49, 0.24),
    'default': (-0.49, 0.49),
}

FREQUENCY_PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))


def _check_hurst(H: float) -> None:
    if not 0.0 < H < 1.0:
        raise BSSValidationError(f"Hurst parameter must lie in (0, 1), got {H}")


def fbm_cov(H: float, s: float, t: float) -> float:
    """cov(B^H_s, B^H_t) = ½(|s|^{2H} + |t|^{2H} − |t − s|^{2H})."""
    _check_hurst(H)
    two_h = 2.0 * H
    return 0.5 * (abs(s) ** two_h + abs(t) ** two_h - abs(t - s) ** two_h)


@lru_cache(maxsize=64)
def _lag_coefficients(k: int, v1: int, v2: int) -> Tuple[np.ndarray, np.ndarray]:
    """Pares (d, c_d) con d = v1·m − v2·m' y c_d = Σ a_m a_{m'}."""
    a = filter_coefficients(k)
    agg: Dict[int, float] = defaultdict(float)
    for m, am in enumerate(a):
        for mp, amp in enumerate(a):
            agg[v1 * m - v2 * mp] += am * amp
    lags = sorted(d for d, c in agg.items() if c != 0)
    return np.array(lags, dtype=float), np.array([agg[d] for d in lags])


def _filter_cov(H: float, k: int, v1: int, v2: int, j) -> np.ndarray:
    d, c = _lag_coefficients(k, v1, v2)
    j = np.atleast_1d(np.asarray(j, dtype=float))
    two_h = 2.0 * H
    out = np.empty(j.shape)
    span = np.max(np.abs(d))
    near = np.abs(j) <= span
    if np.any(near):
        out[near] = -0.5 * np.sum(c * np.abs(j[near, None] + d) ** two_h, axis=1)
    far = ~near
    if np.any(far):
        jf = j[far]
        terms = np.expm1(two_h * np.log1p(d / jf[:, None]))
        out[far] = -0.5 * np.abs(jf) ** two_h * np.sum(c * terms, axis=1)
    return out


def _filter_sd(H: float, k: int, v: int) -> float:
    return float(np.sqrt(_filter_cov(H, k, v, v, 0.0)[0]))


def fbm_filter_variance(H: float, k: int, v: int, delta_n: float) -> float:
    """Var(Δ_{i,k}^{n,v} B^H) para la grilla de paso Δ_n (autosimilaridad)."""
    _check_rho_args(H, k, v, v)
    return float(_filter_cov(H, k, v, v, 0.0)[0]) * delta_n ** (2.0 * H)


def _check_rho_args(H: float, k: int, v1: int, v2: int) -> None:
    _check_hurst(H)
    if int(k) != k or k < 1:
        raise BSSValidationError(f"filter order k must be an integer >= 1, got {k}")
    if v1 not in (1, 2) or v2 not in (1, 2):
        raise BSSValidationError(f"frequency multipliers must be 1 or 2, got ({v1}, {v2})")


def _rho(H: float, k: int, v1: int, v2: int, j) -> np.ndarray:
    scale = _filter_sd(H, k, v1) * _filter_sd(H, k, v2)
    return _filter_cov(H, k, v1, v2, j) / scale


def rho(H: float, k: int, v1: int, v2: int, j):
    """ρ_k^{v1,v2}(j); ``j`` escalar o array de enteros."""
    _check_rho_args(H, k, v1, v2)
    out = _rho(H, k, v1, v2, j)
    return float(out[0]) if np.ndim(j) == 0 else out


@dataclass(frozen=True, eq=False)
class FbmFilterCorr:
    """Tabla de ρ_k^{v1,v2}(j) para |j| ≤ max_lag y los cuatro pares (v1, v2)."""

    hurst: float
    k: int
    max_lag: int
    table: Dict[Tuple[int, int], np.ndarray] = field(repr=False)

    def value(self, v1: int, v2: int, j: int) -> float:
        if abs(j) > self.max_lag:
            raise BSSValidationError(f"lag {j} beyond tabulated max_lag {self.max_lag}")
        return float(self.table[(v1, v2)][j + self.max_lag])

    def lags(self) -> np.ndarray:
        return np.arange(-self.max_lag, self.max_lag + 1)


def fbm_filter_corr(H: float, k: int, max_lag: int = 1000) -> FbmFilterCorr:
    _check_rho_args(H, k, 1, 1)
    lags = np.arange(-max_lag, max_lag + 1)
    table = {pair: _rho(H, k, pair[0], pair[1], lags) for pair in FREQUENCY_PAIRS}
    return FbmFilterCorr(hurst=H, k=k, max_lag=max_lag, table=table)


# ---------------------------------------------------------------------------
# Λ_k
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LambdaMatrix:
    """Λ_k = [[λ11, λ12], [λ12, λ22]] con su certificado de truncación."""

    entries: Tuple[Tuple[float, float], Tuple[float, float]]
    hurst: float
    k: int
    truncation_j: int
    tail_bound: float
    certified: bool = True

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    @property
    def lambda_11(self) -> float:
        return self.entries[0][0]

    @property
    def lambda_12(self) -> float:
        return self.entries[0][1]

    @property
    def lambda_22(self) -> float:
        return self.entries[1][1]

    def quadratic_form(self, w) -> float:
        """w·Λ·wᵀ."""
        w = np.asarray(w, dtype=float)
        return float(w @ self.as_array() @ w)

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.as_array())))


def _pair_sum(H: float, k: int, v1: int, v2: int, lo: int, hi: int, chunk: int) -> float:
    """Σ_{lo ≤ j ≤ hi} ρ(j)² + ρ(−j)²  (lo ≥ 1)."""
    total = 0.0
    for start in range(lo, hi + 1, chunk):
        j = np.arange(start, min(start + chunk, hi + 1), dtype=float)
        total += float(np.sum(_rho(H, k, v1, v2, j) ** 2 + _rho(H, k, v1, v2, -j) ** 2))
    return total


def _tail_constant(H: float, k: int, v1: int, v2: int, J: int, power: float, n_points: int) -> float:
    """C tal que ρ(j)² + ρ(−j)² ≤ C·j^p en la última década [J/10, J]."""
    lo = max(1, J // 10)
    j = np.unique(np.geomspace(lo, J, n_points).astype(np.int64)).astype(float)
    terms = _rho(H, k, v1, v2, j) ** 2 + _rho(H, k, v1, v2, -j) ** 2
    return float(np.max(terms / j ** power))


def _certified_series(H: float, k: int, v1: int, v2: int, params: Dict) -> Tuple[float, int, float, bool]:
    power = 4.0 * (H - k)
    chunk = params['chunk']
    J = params['initial_lag']
    partial = float(_rho(H, k, v1, v2, 0.0)[0] ** 2) + _pair_sum(H, k, v1, v2, 1, J, chunk)
    while True:
        const = _tail_constant(H, k, v1, v2, J, power, params['fit_points'])
        bound = const * J ** (power + 1.0) / abs(power + 1.0)
        if bound < params['rel_tol'] * partial:
            return partial, J, bound, True
        if 2 * J > params['max_lag']:
            return partial, J, bound, False
        partial += _pair_sum(H, k, v1, v2, J + 1, 2 * J, chunk)
        J *= 2


@lru_cache(maxsize=512)
def _lambda_cached(H: float, k: int, rel_tol: float, allow_uncertified: bool) -> LambdaMatrix:
    params = DEFAULT_SERIES_PARAMS.copy()
    params['rel_tol'] = rel_tol
    sums, truncation, bound, certified = {}, 0, 0.0, True
    for v1, v2 in ((1, 1), (1, 2), (2, 2)):
        s, J, b, ok = _certified_series(H, k, v1, v2, params)
        sums[(v1, v2)] = 2.0 * s
        truncation = max(truncation, J)
        bound = max(bound, 2.0 * b)
        certified = certified and ok
    if not certified and not allow_uncertified:
        raise SeriesCertificationError(
            'lambda_matrix',
            f"tail of the correlation series not certified below rel_tol={rel_tol:g} "
            f"within {params['max_lag']} lags (H={H}, k={k}, tail bound {bound:.3g})",
        )
    entries = (
        (sums[(1, 1)], sums[(1, 2)]),
        (sums[(1, 2)], sums[(2, 2)]),
    )
    return LambdaMatrix(entries, hurst=H, k=k, truncation_j=truncation, tail_bound=bound, certified=certified)


def lambda_matrix(
    H: float,
    k: int,
    rel_tol: float = DEFAULT_SERIES_PARAMS['rel_tol'],
    allow_uncertified: bool = False,
) -> LambdaMatrix:
    """Λ_k(H); requiere k ≥ 2, o k = 1 con H < 3/4 (serie convergente)."""
    _check_rho_args(H, k, 1, 1)
    if k == 1 and not H < 0.75:
        raise BSSValidationError(f"lambda series diverges for k = 1 and H = {H} >= 3/4")
    return _lambda_cached(float(H), int(k), float(rel_tol), bool(allow_uncertified))


def clamp_alpha(alpha_hat: float, k: int) -> Tuple[float, bool]:
    lo, hi = ALPHA_CLAMP.get(k, ALPHA_CLAMP['default'])
    clamped = min(max(alpha_hat, lo), hi)
    return clamped, clamped != alpha_hat


def lambda_matrix_at_alpha_hat(alpha_hat: float, k: int) -> Tuple[LambdaMatrix, bool]:
    """Λ_k en H = α̂ + ½ con α̂ recortado al rango válido; devuelve (Λ, recortado).

    Cerca de la frontera k = 1, H → 3/4 la serie converge lentamente: el
    resultado se acepta sin certificar y lo indica ``certified``.
    """
    alpha, clamped = clamp_alpha(float(alpha_hat), k)
    return lambda_matrix(alpha + 0.5, k, allow_uncertified=True), clamped


def lambda_document(lam: LambdaMatrix) -> Dict:
    return {
        'H': lam.hurst,
        'k': lam.k,
        'lambda': [list(row) for row in lam.entries],
        'truncation_j': lam.truncation_j,
        'tail_bound': lam.tail_bound,
        'certified': lam.certified,
    }
