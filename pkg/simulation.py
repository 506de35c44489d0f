#!/usr/bin/env python3
"""Simulation
----------
Trayectorias de:

- el núcleo gaussiano G (exacto, embedding circulante de su covarianza
  estacionaria c(m) = ‖g‖² − ½R(mΔ_n));
- el movimiento browniano fraccionario (embedding circulante del ruido
  gaussiano fraccionario);
- el proceso BSS X = μ + ∫ g(t − s)σ_s dW_s con intermitencia σ, por una suma
  de Riemann refinada y truncada calculada como una sola convolución FFT.

Cada trayectoria usa un ``numpy.random.Generator(Philox(seed))``; las semillas
por réplica se derivan de una semilla maestra con ``SeedSequence``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Memory, Parallel, delayed
from scipy import linalg
from scipy.signal import fftconvolve, lfilter

from bss_errors import BSSValidationError, EmbeddingError
from fbm_limits import rho
from limit_quantities import g_norm_sq, variogram
from singular_quadrature import integrate_panels
from weight_model import WeightSpec, eval_g, eval_g_offset, weight_spec_from_dict, weight_spec_to_dict

DEFAULT_GRID_PARAMS = {
    'refinement': 16,
    'truncation_padding': 12.0,    # en unidades de 1/tail_rate más allá de tail_start
    'max_points': 10 ** 7,
    'dense_fallback_max': 2 ** 14,
    'embedding_neg_tol': 1e-8,
    'singular_cells': 4,           # celdas (en múltiplos de κ) con promedio de celda
}

# Caché en disco de las tablas de covarianza; sin BSS_CACHE_DIR no se guarda nada.
memory = Memory(os.environ.get('BSS_CACHE_DIR'), verbose=0)


class PathKind(str, Enum):
    GAUSSIAN_CORE = "GaussianCore"
    BSS = "BSS"
    FBM = "FBM"


class SigmaKind(str, Enum):
    CONSTANT = "Constant"
    DETERMINISTIC = "Deterministic"
    EXP_OU = "ExpOU"


@dataclass(frozen=True)
class GridSpec:
    """Grilla de observación Δ_n·{0, …, [t/Δ_n]} y parámetros del esquema."""

    delta_n: float
    horizon: float
    refinement: int = DEFAULT_GRID_PARAMS['refinement']
    truncation: Optional[float] = None

    @property
    def n_obs(self) -> int:
        return int(math.floor(self.horizon / self.delta_n + 1e-9)) + 1

    def times(self) -> np.ndarray:
        return np.arange(self.n_obs) * self.delta_n

    def check(self, spec: Optional[WeightSpec] = None) -> None:
        diags = []
        if not self.delta_n > 0:
            diags.append(f"grid: delta_n must be positive (got {self.delta_n})")
        if not self.horizon > 0:
            diags.append(f"grid: horizon must be positive (got {self.horizon})")
        if int(self.refinement) != self.refinement or self.refinement < 1:
            diags.append(f"grid: refinement must be an integer >= 1 (got {self.refinement})")
        if not diags and self.horizon / self.delta_n > DEFAULT_GRID_PARAMS['max_points']:
            diags.append(
                f"grid: horizon/delta_n = {self.horizon / self.delta_n:.3g} exceeds "
                f"{DEFAULT_GRID_PARAMS['max_points']:.0e} points"
            )
        if spec is not None and spec.is_singular and self.truncation is not None:
            last = spec.segments[-1]
            if not self.truncation > last.theta + last.half_width:
                diags.append(
                    f"grid: truncation {self.truncation} must exceed theta_l + delta_l = "
                    f"{last.theta + last.half_width}"
                )
        if diags:
            raise BSSValidationError(diags[0], diags)

    def truncation_for(self, spec: WeightSpec) -> float:
        """T_cut explícito o el de defecto: tail_start + padding/tail_rate."""
        if self.truncation is not None:
            return float(self.truncation)
        if spec.baseline_scale == 0.0:
            return spec.tail_start + self.delta_n
        return spec.tail_start + DEFAULT_GRID_PARAMS['truncation_padding'] / spec.tail_rate


@dataclass(frozen=True)
class IntermittencySpec:
    """σ constante, polinomio trigonométrico acotado, o exp de un OU.

    - Constant: (c,)
    - Deterministic: (a0, a1, b1, a2, b2, ...) con
      σ(t) = a0 + Σ_n a_n cos(n t) + b_n sin(n t)
    - ExpOU: (kappa, xi, x0), σ = exp(Y), dY = −κY dt + ξ dB, Y(−T_cut) = x0
    """

    kind: SigmaKind
    params: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'kind', SigmaKind(self.kind))
        object.__setattr__(self, 'params', tuple(float(p) for p in self.params))
        n = len(self.params)
        if self.kind is SigmaKind.CONSTANT and n != 1:
            raise BSSValidationError(f"sigma: const needs exactly one value, got {n}")
        if self.kind is SigmaKind.DETERMINISTIC and (n < 1 or n % 2 == 0):
            raise BSSValidationError("sigma: trig needs a0 followed by (a_n, b_n) pairs")
        if self.kind is SigmaKind.EXP_OU:
            if n != 3:
                raise BSSValidationError(f"sigma: expou needs kappa, xi, x0; got {n} values")
            if not (self.params[0] > 0 and self.params[1] >= 0):
                raise BSSValidationError("sigma: expou needs kappa > 0 and xi >= 0")

    @classmethod
    def constant(cls, c: float) -> 'IntermittencySpec':
        return cls(SigmaKind.CONSTANT, (c,))

    @classmethod
    def parse(cls, text: str) -> 'IntermittencySpec':
        """``const:1.5``, ``trig:1,0,0.5`` o ``expou:2,0.3,0``."""
        name, _, rest = text.partition(':')
        kinds = {'const': SigmaKind.CONSTANT, 'trig': SigmaKind.DETERMINISTIC, 'expou': SigmaKind.EXP_OU}
        if name.strip().lower() not in kinds or not rest:
            raise BSSValidationError(f"sigma: cannot parse {text!r}; use const:c, trig:a0,a1,b1,... or expou:k,xi,x0")
        try:
            values = tuple(float(p) for p in rest.split(','))
        except ValueError as exc:
            raise BSSValidationError(f"sigma: non-numeric parameter in {text!r}") from exc
        return cls(kinds[name.strip().lower()], values)

    def to_string(self) -> str:
        prefix = {SigmaKind.CONSTANT: 'const', SigmaKind.DETERMINISTIC: 'trig', SigmaKind.EXP_OU: 'expou'}
        return f"{prefix[self.kind]}:" + ','.join(repr(p) for p in self.params)

    @property
    def is_evaluable(self) -> bool:
        return self.kind is not SigmaKind.EXP_OU

    @property
    def clt_compliant(self) -> bool:
        """ExpOU es Hölder solo de orden < ½: no sirve para el TCL."""
        return self.kind is not SigmaKind.EXP_OU

    def sigma_at(self, t):
        if self.kind is SigmaKind.CONSTANT:
            out = np.full(np.shape(t), self.params[0])
        elif self.kind is SigmaKind.DETERMINISTIC:
            t = np.asarray(t, dtype=float)
            out = np.full(t.shape, self.params[0])
            coeffs = self.params[1:]
            for n in range(len(coeffs) // 2):
                out = out + coeffs[2 * n] * np.cos((n + 1) * t) + coeffs[2 * n + 1] * np.sin((n + 1) * t)
        else:
            raise BSSValidationError("sigma: ExpOU is stochastic and cannot be evaluated pointwise")
        return float(out) if np.ndim(out) == 0 else out

    def sample_path(self, times: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """σ sobre ``times`` (equiespaciados); solo ExpOU consume aleatoriedad."""
        if self.is_evaluable:
            return np.asarray(self.sigma_at(times), dtype=float)
        kappa, xi, x0 = self.params
        step = times[1] - times[0] if times.size > 1 else 0.0
        decay = math.exp(-kappa * step)
        scale = xi * math.sqrt((1.0 - decay ** 2) / (2.0 * kappa))
        shocks = rng.standard_normal(times.size - 1) * scale
        # Y_{n+1} = e^{-κh}·Y_n + ξ·sqrt((1 − e^{-2κh})/2κ)·Z_n
        y = lfilter([1.0], [1.0, -decay], np.concatenate([[x0], shocks]))
        return np.exp(y)


@dataclass(frozen=True, eq=False)
class PathSample:
    """Muestra equiespaciada de X, G o B^H."""

    values: np.ndarray = field(repr=False)
    grid: GridSpec
    seed: int
    kind: PathKind
    sigma_values: Optional[np.ndarray] = field(default=None, repr=False)
    method: str = "circulant"

    @property
    def delta_n(self) -> float:
        return self.grid.delta_n

    @property
    def horizon(self) -> float:
        return self.grid.horizon

    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.grid.delta_n

    def scaled(self, c: float) -> 'PathSample':
        return PathSample(self.values * c, self.grid, self.seed, self.kind, self.sigma_values, self.method)


# ---------------------------------------------------------------------------
# Semillas
# ---------------------------------------------------------------------------

def seed_stream(master_seed: int, replication: int) -> int:
    """Semilla de 64 bits de la réplica ``replication``; depende solo de (master, r)."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(replication),))
    return int(seq.generate_state(1, np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


# ---------------------------------------------------------------------------
# Embedding circulante
# ---------------------------------------------------------------------------

def circulant_embedding_sample(
    cov: np.ndarray,
    rng: np.random.Generator,
    neg_tol: float = DEFAULT_GRID_PARAMS['embedding_neg_tol'],
    dense_fallback_max: int = DEFAULT_GRID_PARAMS['dense_fallback_max'],
) -> Tuple[np.ndarray, str]:
    """Muestra N(0, C) con C Toeplitz de primera fila ``cov``.

    Devuelve (muestra, método) con método "circulant" o "dense". Los
    autovalores negativos del embedding por encima de −neg_tol·λ_max se
    anulan; más negativos fuerzan la factorización densa (n ≤
    dense_fallback_max) o un EmbeddingError.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.size
    if n == 0:
        return np.empty(0), "circulant"
    if n == 1:
        if cov[0] < 0:
            raise EmbeddingError('circulant_embedding_sample', 'negative variance')
        return math.sqrt(cov[0]) * rng.standard_normal(1), "circulant"

    row = np.concatenate([cov, cov[-2:0:-1]])
    m = row.size
    eig = np.fft.fft(row).real
    top = float(np.max(np.abs(eig)))
    if np.min(eig) >= -neg_tol * top:
        eig = np.clip(eig, 0.0, None)
        noise = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        sample = np.fft.fft(np.sqrt(eig / m) * noise).real[:n]
        return sample, "circulant"

    if n > dense_fallback_max:
        raise EmbeddingError(
            'circulant_embedding_sample',
            f"embedding has eigenvalue {np.min(eig):.3g} and n = {n} exceeds the dense fallback limit",
        )
    matrix = linalg.toeplitz(cov)
    w, vecs = linalg.eigh(matrix)
    if np.min(w) < -neg_tol * float(np.max(np.abs(w))):
        raise EmbeddingError(
            'circulant_embedding_sample',
            f"covariance matrix is not PSD (min eigenvalue {np.min(w):.3g})",
        )
    sample = vecs @ (np.sqrt(np.clip(w, 0.0, None)) * rng.standard_normal(n))
    return sample, "dense"


# ---------------------------------------------------------------------------
# Núcleo gaussiano y fBm
# ---------------------------------------------------------------------------

@memory.cache
def _core_covariance_table(spec_data: dict, delta_n: float, n: int, rel_tol: float, n_jobs: int) -> np.ndarray:
    spec = weight_spec_from_dict(spec_data)
    norm = g_norm_sq(spec, rel_tol)
    lags = np.arange(1, n) * delta_n
    if n_jobs == 1:
        R = [variogram(spec, t, rel_tol) for t in lags]
    else:
        R = Parallel(n_jobs=n_jobs)(delayed(variogram)(spec, t, rel_tol) for t in lags)
    return np.concatenate([[norm], norm - 0.5 * np.asarray(R, dtype=float)])


def gaussian_core_covariance(
    spec: WeightSpec, delta_n: float, n: int, rel_tol: float = 1e-10, n_jobs: int = 1
) -> np.ndarray:
    """c(m) = ‖g‖² − ½R(mΔ_n), m = 0..n−1 (cacheada en disco)."""
    return _core_covariance_table(weight_spec_to_dict(spec), float(delta_n), int(n), float(rel_tol), int(n_jobs))


def simulate_gaussian_core(
    spec: WeightSpec,
    grid: GridSpec,
    seed: int,
    n_jobs: int = 1,
    cov: Optional[np.ndarray] = None,
) -> PathSample:
    """G en la grilla, exacto en ley. ``cov`` permite reutilizar una tabla."""
    grid.check(spec)
    n = grid.n_obs
    if cov is None:
        cov = gaussian_core_covariance(spec, grid.delta_n, n, n_jobs=n_jobs)
    values, method = circulant_embedding_sample(cov[:n], make_rng(seed))
    return PathSample(values, grid, int(seed), PathKind.GAUSSIAN_CORE, np.ones(n), method)


def fgn_covariance(H: float, n: int, step: float) -> np.ndarray:
    """Autocovarianza del ruido gaussiano fraccionario con paso ``step``."""
    return rho(H, 1, 1, 1, np.arange(n)) * step ** (2.0 * H)


def simulate_fbm(H: float, n_points: int, step: float, seed: int) -> PathSample:
    """B^H en 0, step, …, n_points·step (n_points incrementos, anclado en 0)."""
    if not 0.0 < H < 1.0:
        raise BSSValidationError(f"Hurst parameter must lie in (0, 1), got {H}")
    if int(n_points) != n_points or n_points < 1:
        raise BSSValidationError(f"n_points must be a positive integer, got {n_points}")
    if not step > 0:
        raise BSSValidationError(f"step must be positive, got {step}")
    increments, method = circulant_embedding_sample(fgn_covariance(H, n_points, step), make_rng(seed))
    values = np.concatenate([[0.0], np.cumsum(increments)])
    grid = GridSpec(delta_n=step, horizon=n_points * step)
    return PathSample(values, grid, int(seed), PathKind.FBM, None, method)


# ---------------------------------------------------------------------------
# BSS: suma de Riemann refinada
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def riemann_kernel_weights(spec: WeightSpec, inner_step: float, n_cells: int, refinement: int) -> np.ndarray:
    """K_p, p = 0..n_cells: K_0 = 0 y K_p = g((p − ½)h), salvo en las celdas a
    menos de ``singular_cells``·κ celdas de una singularidad, donde se usa el
    promedio (1/h)∫_{(p−1)h}^{ph} g."""
    p = np.arange(1, n_cells + 1)
    weights = np.concatenate([[0.0], eval_g(spec, (p - 0.5) * inner_step)])
    reach = DEFAULT_GRID_PARAMS['singular_cells'] * refinement
    for theta, alpha in spec.singular_points:
        centre = int(round(theta / inner_step))
        for q in range(max(1, centre - reach), min(n_cells, centre + reach) + 1):
            a, b = (q - 1) * inner_step, q * inner_step
            res = integrate_panels(
                lambda base, off: eval_g_offset(spec, base, off), a, b,
                breakpoints=[pt for pt in spec.kink_points if a < pt < b],
                singular=[(pt, e) for pt, e in spec.singular_points if a <= pt <= b],
                rel_tol=1e-10,
            )
            weights[q] = res.value / inner_step
    return weights


def simulate_bss(
    spec: WeightSpec,
    mu: float,
    sigma: IntermittencySpec,
    grid: GridSpec,
    seed: int,
    n_jobs: int = 1,
    exact_for_constant: bool = True,
    cov: Optional[np.ndarray] = None,
) -> PathSample:
    """X_{iΔ} = μ + Σ_m g(iΔ − s_m)·σ_{s_m}·ΔW_m sobre la grilla interna de paso Δ/κ.

    Con σ constante (y ``exact_for_constant``) se usa X = μ + c·G con G
    exacto. El mismo arreglo ΔW alimenta todas las observaciones.
    """
    grid.check(spec)
    n_obs = grid.n_obs
    if sigma.kind is SigmaKind.CONSTANT and exact_for_constant:
        core = simulate_gaussian_core(spec, grid, seed, n_jobs=n_jobs, cov=cov)
        c = sigma.params[0]
        return PathSample(mu + c * core.values, grid, int(seed), PathKind.BSS, np.full(n_obs, c), core.method)

    kappa = int(grid.refinement)
    h = grid.delta_n / kappa
    t_cut = grid.truncation_for(spec)
    mem_obs = int(math.ceil(t_cut / grid.delta_n - 1e-9))
    n_mem = mem_obs * kappa
    n_cells = n_mem + (n_obs - 1) * kappa

    rng = make_rng(seed)
    inner_times = (np.arange(n_cells + 1) - n_mem) * h
    sigma_path = sigma.sample_path(inner_times, rng)
    dW = rng.standard_normal(n_cells) * math.sqrt(h)

    kernel = riemann_kernel_weights(spec, h, n_mem, kappa)
    conv = fftconvolve(sigma_path[:-1] * dW, kernel)
    obs_index = n_mem + np.arange(n_obs) * kappa
    values = mu + conv[obs_index]
    return PathSample(values, grid, int(seed), PathKind.BSS, sigma_path[obs_index], "riemann")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def path_to_frame(path: PathSample) -> pd.DataFrame:
    sigma = path.sigma_values if path.sigma_values is not None else np.full(path.values.size, np.nan)
    return pd.DataFrame({'t': path.times(), 'X': path.values, 'sigma': sigma})


def path_from_frame(df: pd.DataFrame, delta_n: Optional[float] = None, seed: int = 0) -> PathSample:
    missing = [c for c in ('t', 'X') if c not in df.columns]
    if missing:
        raise BSSValidationError(f"path CSV is missing columns {missing}")
    if len(df) < 2:
        raise BSSValidationError("path CSV needs at least two rows")
    t = df['t'].to_numpy(dtype=float)
    if delta_n is None:
        delta_n = float(t[1] - t[0])
    if not delta_n > 0:
        raise BSSValidationError(f"delta_n must be positive, got {delta_n}")
    steps = np.diff(t)
    if not np.allclose(steps, delta_n, rtol=1e-6, atol=1e-12):
        raise BSSValidationError("path CSV times are not equispaced with the given delta_n")
    grid = GridSpec(delta_n=delta_n, horizon=(len(df) - 1) * delta_n)
    sigma = df['sigma'].to_numpy(dtype=float) if 'sigma' in df.columns else None
    return PathSample(df['X'].to_numpy(dtype=float), grid, int(seed), PathKind.BSS, sigma, "csv")


def write_path_csv(path: PathSample, out) -> None:
    path_to_frame(path).to_csv(out, index=False)


def read_path_csv(source, delta_n: Optional[float] = None) -> PathSample:
    df = pd.read_csv(source, float_precision='round_trip')
    return path_from_frame(df, delta_n)
