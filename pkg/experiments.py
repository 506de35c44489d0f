#!/usr/bin/env python3
"""Experiments
-----------
Arnés Monte Carlo que reproduce los teoremas límite a escala de escritorio:

- LLN: medias de la QV escalada a lo largo de una escalera de Δ_n;
- CLT: tests KS del estadístico normalizado contra N(0, Σ_teórica);
- Coverage: cobertura empírica del intervalo de confianza de α̂;
- LambdaCheck: varianzas Monte Carlo sobre fBm contra las entradas de Λ_k;
- Quarticity: media de Δ_n·QQ/τ⁴ contra el límite de cuarticidad.

Cada réplica r usa la semilla ``seed_stream(master_seed, r)`` y los
resultados se reducen por índice de réplica: dos corridas con la misma
configuración producen el mismo reporte salvo ``metadata.wall_time_s``.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import BrokenExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import joblib
import numpy as np
import pandas as pd
import scipy
from joblib import Parallel, delayed
from scipy import stats

from bss_errors import BSSValidationError, NumericalFailure, ReplicationFailure
from fbm_limits import fbm_filter_variance, lambda_matrix
from hf_statistics import DEFAULT_ESTIMATION_PARAMS, estimate_alpha, limit_qq, limit_qv, qv, scaled_qq, scaled_qv
from limit_quantities import tau_sq
from simulation import (
    DEFAULT_GRID_PARAMS,
    GridSpec,
    IntermittencySpec,
    SigmaKind,
    gaussian_core_covariance,
    seed_stream,
    simulate_bss,
    simulate_fbm,
)
from weight_model import (
    WeightSpec,
    load_weight_spec,
    summarize_smoothness,
    validate,
    weight_spec_from_dict,
    weight_spec_to_dict,
)

__version__ = "0.3.0"

DEFAULT_EXPERIMENT_PARAMS = {
    'replications': 200,
    'horizon': 1.0,
    'deltas': tuple(2.0 ** -e for e in range(8, 13)),
    'ks_level': 0.01,
    'min_ks_sample': 8,
    'se_multiplier': 3.0,
    'quarticity_se_multiplier': 4.0,
    'monotone_slack_se': 2.0,
    'sigma': 'const:1',
    'master_seed': 0,
}

_CONFIG_KEYS = {
    'kind', 'spec', 'kernel', 'sigma', 'k', 'deltas', 'horizon', 'replications',
    'seed', 'output', 'mu', 'refinement', 'hurst',
}


class ExperimentKind(str, Enum):
    LLN = "LLN"
    CLT = "CLT"
    COVERAGE = "Coverage"
    LAMBDA_CHECK = "LambdaCheck"
    QUARTICITY = "Quarticity"


# Tipos que exigen las hipótesis del TCL (horizonte y k = 1 ⇒ α < 0).
_CLT_KINDS = (ExperimentKind.CLT, ExperimentKind.COVERAGE)


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuración completa de un experimento Monte Carlo."""

    kind: ExperimentKind
    spec: WeightSpec
    sigma: IntermittencySpec
    k: int
    deltas: Tuple[float, ...] = DEFAULT_EXPERIMENT_PARAMS['deltas']
    horizon: float = DEFAULT_EXPERIMENT_PARAMS['horizon']
    replications: int = DEFAULT_EXPERIMENT_PARAMS['replications']
    master_seed: int = DEFAULT_EXPERIMENT_PARAMS['master_seed']
    output: Optional[str] = None
    mu: float = 0.0
    refinement: int = DEFAULT_GRID_PARAMS['refinement']
    hurst: Optional[float] = None
    spec_source: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', ExperimentKind(self.kind))
        object.__setattr__(self, 'deltas', tuple(float(d) for d in self.deltas))

    @property
    def true_alpha(self) -> float:
        return summarize_smoothness(self.spec).alpha_min

    @property
    def fbm_hurst(self) -> float:
        """H del fBm de LambdaCheck: explícito o α + ½ del núcleo."""
        if self.hurst is not None:
            return float(self.hurst)
        return self.true_alpha + 0.5

    @classmethod
    def from_dict(cls, data: Dict, base_dir: str = '.') -> 'ExperimentConfig':
        """
        Construye la configuración desde la tabla TOML.

        Args:
            data: claves kind, spec (ruta relativa a ``base_dir``) o kernel
                (tabla en línea), sigma, k, deltas, horizon, replications,
                seed, output, mu, refinement, hurst
            base_dir: directorio contra el que se resuelven las rutas

        Returns:
            ExperimentConfig sin validar (ver ``validate``)
        """
        unknown = sorted(set(data) - _CONFIG_KEYS)
        if unknown:
            raise BSSValidationError(f"experiment config: unknown keys {unknown}", [f"config: unknown key {u}" for u in unknown])
        for key in ('kind', 'k'):
            if key not in data:
                raise BSSValidationError(f"experiment config: missing required key '{key}'")
        if ('spec' in data) == ('kernel' in data):
            raise BSSValidationError("experiment config: give exactly one of 'spec' (path) or [kernel] (inline table)")
        try:
            kind = ExperimentKind(data['kind'])
        except ValueError as exc:
            names = [k.value for k in ExperimentKind]
            raise BSSValidationError(f"experiment config: kind must be one of {names}, got {data['kind']!r}") from exc

        if 'spec' in data:
            source = os.path.join(base_dir, data['spec'])
            spec = load_weight_spec(source)
        else:
            source = None
            spec = weight_spec_from_dict(data['kernel'])
        output = data.get('output')
        if output is not None:
            output = os.path.join(base_dir, output)
        return cls(
            kind=kind,
            spec=spec,
            sigma=IntermittencySpec.parse(data.get('sigma', DEFAULT_EXPERIMENT_PARAMS['sigma'])),
            k=int(data['k']),
            deltas=tuple(data.get('deltas', DEFAULT_EXPERIMENT_PARAMS['deltas'])),
            horizon=float(data.get('horizon', DEFAULT_EXPERIMENT_PARAMS['horizon'])),
            replications=int(data.get('replications', DEFAULT_EXPERIMENT_PARAMS['replications'])),
            master_seed=int(data.get('seed', DEFAULT_EXPERIMENT_PARAMS['master_seed'])),
            output=output,
            mu=float(data.get('mu', 0.0)),
            refinement=int(data.get('refinement', DEFAULT_GRID_PARAMS['refinement'])),
            hurst=None if data.get('hurst') is None else float(data['hurst']),
            spec_source=source,
        )

    @classmethod
    def from_toml(cls, path: str) -> 'ExperimentConfig':
        try:
            with open(path, 'rb') as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise BSSValidationError(f"experiment config not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise BSSValidationError(f"experiment config {path}: {exc}") from exc
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def with_overrides(self, **changes) -> 'ExperimentConfig':
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update({k: v for k, v in changes.items() if v is not None})
        return ExperimentConfig(**values)

    def validate(self) -> List[str]:
        """Lista de diagnósticos; vacía si la configuración es ejecutable."""
        diags = list(validate(self.spec))
        if self.replications < 1:
            diags.append(f"config: replications must be >= 1 (got {self.replications})")
        if self.k < 1:
            diags.append(f"config: k must be >= 1 (got {self.k})")
        elif self.k > self.spec.max_filter_order:
            diags.append(f"config: k = {self.k} exceeds the kernel's max_filter_order {self.spec.max_filter_order}")
        if not self.horizon > 0:
            diags.append(f"config: horizon must be positive (got {self.horizon})")
        if not self.deltas:
            diags.append("config: the delta_n ladder is empty")
        for delta_n in self.deltas:
            if not 0 < delta_n < self.horizon:
                diags.append(f"config: delta_n = {delta_n} must lie in (0, horizon)")
        if diags:
            return diags

        if self.kind is not ExperimentKind.LAMBDA_CHECK:
            diags.extend(self._grid_diagnostics())
        if self.kind in _CLT_KINDS or self.kind is ExperimentKind.LAMBDA_CHECK:
            if not self.spec.is_singular:
                diags.append(f"config: {self.kind.value} needs a SingularKernel spec")
                return diags
        if self.kind in _CLT_KINDS:
            summary = summarize_smoothness(self.spec)
            if len(self.spec.segments) > 1 and not self.horizon < self.spec.min_spacing:
                diags.append(
                    f"config: horizon {self.horizon} must be below the minimum singularity spacing "
                    f"{self.spec.min_spacing} for {self.kind.value}"
                )
            if self.k == 1 and not summary.clt_k1_ok:
                diags.append("config: k = 1 requires every alpha_j < 0 for the central limit theorem")
            if not self.sigma.clt_compliant:
                diags.append(f"config: sigma {self.sigma.to_string()} is not admissible for {self.kind.value}")
        if self.kind is ExperimentKind.QUARTICITY and not self.sigma.is_evaluable:
            diags.append("config: Quarticity needs a constant or deterministic sigma")
        if self.kind is ExperimentKind.LAMBDA_CHECK:
            H = self.fbm_hurst
            if not 0.0 < H < 1.0:
                diags.append(f"config: Hurst parameter {H} outside (0, 1)")
            elif self.k == 1 and not H < 0.75:
                diags.append(f"config: k = 1 needs H < 3/4 (got {H})")
        return diags

    def _grid_diagnostics(self) -> List[str]:
        # τ_k(2Δ_n) debe existir para cada peldaño
        diags = []
        for delta_n in self.deltas:
            if self.spec.is_singular:
                limit = min(s.half_width for s in self.spec.segments) / (4 * self.k)
                if not delta_n < limit:
                    diags.append(f"config: delta_n = {delta_n} must be below min half_width / (4k) = {limit}")
            elif not 2 * self.k * delta_n < self.spec.min_spacing:
                diags.append(f"config: 2k*delta_n = {2 * self.k * delta_n} must be below the smallest jump spacing")
        return diags

    def require_valid(self) -> 'ExperimentConfig':
        diags = self.validate()
        if diags:
            raise BSSValidationError(diags[0], diags)
        return self

    def to_dict(self) -> Dict:
        return {
            'kind': self.kind.value,
            'kernel': weight_spec_to_dict(self.spec),
            'sigma': self.sigma.to_string(),
            'k': self.k,
            'deltas': list(self.deltas),
            'horizon': self.horizon,
            'replications': self.replications,
            'seed': self.master_seed,
            'mu': self.mu,
            'refinement': self.refinement,
            'hurst': self.hurst,
        }


@dataclass(eq=False)
class ExperimentReport:
    """Filas por Δ_n, tests y la tabla por réplica."""

    kind: ExperimentKind
    rows: List[Dict]
    tests: List[Dict]
    replications: pd.DataFrame = field(repr=False)
    metadata: Dict = field(default_factory=dict)
    insufficient_sample: bool = False

    @property
    def passed(self) -> bool:
        return not self.insufficient_sample and all(t['passed'] for t in self.tests)

    def to_dict(self) -> Dict:
        return _json_safe({
            'kind': self.kind.value,
            'rows': self.rows,
            'tests': self.tests,
            'insufficient_sample': self.insufficient_sample,
            'passed': self.passed,
            'metadata': self.metadata,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _json_safe(obj):
    """NaN/inf → None y tipos numpy → Python, para un JSON válido."""
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


# ---------------------------------------------------------------------------
# Estadística de resumen
# ---------------------------------------------------------------------------

def ks_statistic(sample: Sequence[float], cdf: Callable) -> Tuple[float, float]:
    """
    Test KS de una muestra contra una cdf continua.

    Args:
        sample: al menos ``min_ks_sample`` observaciones
        cdf: función de distribución vectorizada

    Returns:
        (estadístico D_n, p-valor asintótico P(K > sqrt(n)·D_n))
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < DEFAULT_EXPERIMENT_PARAMS['min_ks_sample']:
        raise BSSValidationError(
            f"KS test needs at least {DEFAULT_EXPERIMENT_PARAMS['min_ks_sample']} observations, got {x.size}"
        )
    statistic = float(stats.kstest(x, cdf).statistic)
    p_value = float(stats.kstwobign.sf(math.sqrt(x.size) * statistic))
    return statistic, p_value


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    if values.size < 2:
        return float(np.mean(values)), float('nan')
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(values.size))


def _covariance_entries(x: np.ndarray, y: np.ndarray) -> Dict[str, Tuple[float, float]]:
    """Momentos (x − x̄)(y − ȳ) con su error estándar empírico."""
    dx, dy = x - x.mean(), y - y.mean()
    return {'11': _mean_se(dx * dx), '12': _mean_se(dx * dy), '22': _mean_se(dy * dy)}


def _within(value: float, target: float, se: float, multiplier: float) -> bool:
    if not math.isfinite(se):
        return False
    return abs(value - target) <= multiplier * se + 1e-12 * max(1.0, abs(target))


def _variance_ratio(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """s²_y/s²_x con error estándar por método delta."""
    a = (x - x.mean()) ** 2
    b = (y - y.mean()) ** 2
    ratio = float(b.mean() / a.mean())
    se = float(np.std(b - ratio * a, ddof=1) / math.sqrt(x.size) / a.mean())
    return ratio, se


# ---------------------------------------------------------------------------
# Réplicas
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _RungContext:
    """Todo lo que una réplica necesita en un peldaño Δ_n, calculado una vez."""

    config: ExperimentConfig
    delta_n: float
    grid: GridSpec
    tau_sq: Dict[int, float]
    cov: Optional[np.ndarray] = field(default=None, repr=False)
    limit: Optional[float] = None


def _replicate(ctx: _RungContext, rep: int) -> Dict:
    config = ctx.config
    seed = seed_stream(config.master_seed, rep)
    try:
        return _replicate_statistics(ctx, seed) | {'rep': rep, 'seed': seed}
    except (NumericalFailure, BSSValidationError) as exc:
        raise ReplicationFailure(rep, seed, str(exc)) from exc


def _replicate_statistics(ctx: _RungContext, seed: int) -> Dict:
    config = ctx.config
    kind = config.kind
    delta_n = ctx.delta_n
    t = config.horizon

    if kind is ExperimentKind.LAMBDA_CHECK:
        H = config.fbm_hurst
        n_points = int(round(t / delta_n))
        path = simulate_fbm(H, n_points, delta_n, seed)
        values = {
            v: (delta_n / ctx.tau_sq[v] * qv(path, config.k, v).value - t) / math.sqrt(delta_n)
            for v in (1, 2)
        }
        return {'values': values}

    path = simulate_bss(config.spec, config.mu, config.sigma, ctx.grid, seed, cov=ctx.cov)
    if kind is ExperimentKind.LLN:
        values = {v: scaled_qv(path, config.spec, config.k, v, t=t, tau_sq_value=ctx.tau_sq[v]) for v in (1, 2)}
    elif kind is ExperimentKind.QUARTICITY:
        values = {v: scaled_qq(path, config.spec, config.k, v, t=t, tau_sq_value=ctx.tau_sq[v]) for v in (1, 2)}
    elif kind is ExperimentKind.CLT:
        values = {
            v: (scaled_qv(path, config.spec, config.k, v, t=t, tau_sq_value=ctx.tau_sq[v]) - ctx.limit)
            / math.sqrt(delta_n)
            for v in (1, 2)
        }
    else:
        res = estimate_alpha(path, config.k, t_used=t, known_spec=config.spec, null_alpha=config.true_alpha)
        lo, hi = res.ci_95
        return {
            'values': {1: res.t_stat},
            'covered': lo <= config.true_alpha <= hi,
            'alpha_hat': res.alpha_hat,
            'clamped': res.clamped,
        }
    return {'values': values}


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

class ExperimentRunner:
    """Ejecuta un experimento sobre la escalera de Δ_n."""

    def __init__(self, config: ExperimentConfig, n_jobs: int = 1, verbose: bool = False):
        """
        Args:
            config: configuración (se valida aquí)
            n_jobs: procesos de joblib para las réplicas
            verbose: imprime progreso ✓ en stderr
        """
        self.config = config.require_valid()
        self.n_jobs = n_jobs
        self.verbose = verbose
        self.records: List[Dict] = []

    def _log(self, message: str) -> None:
        if self.verbose:
            print(f"✓ {message}", file=sys.stderr)

    # -- preparación -------------------------------------------------------

    def _context(self, delta_n: float) -> _RungContext:
        config = self.config
        grid = GridSpec(delta_n=delta_n, horizon=config.horizon, refinement=config.refinement)
        if config.kind is ExperimentKind.LAMBDA_CHECK:
            tau2 = {v: fbm_filter_variance(config.fbm_hurst, config.k, v, delta_n) for v in (1, 2)}
            return _RungContext(config, delta_n, grid, tau2)

        tau2 = {v: tau_sq(config.spec, config.k, v, delta_n).tau_sq_exact for v in (1, 2)}
        cov = None
        if config.sigma.kind is SigmaKind.CONSTANT:
            cov = gaussian_core_covariance(config.spec, delta_n, grid.n_obs, n_jobs=self.n_jobs)
        limit = None
        if config.kind in (ExperimentKind.LLN, ExperimentKind.CLT) and config.sigma.is_evaluable:
            limit = limit_qv(config.spec, config.sigma, config.k, config.horizon)
        elif config.kind is ExperimentKind.QUARTICITY:
            limit = limit_qq(config.spec, config.sigma, config.k, config.horizon)
        return _RungContext(config, delta_n, grid, tau2, cov, limit)

    def _run_rung(self, delta_n: float) -> Tuple[_RungContext, List[Dict]]:
        ctx = self._context(delta_n)
        try:
            results = Parallel(n_jobs=self.n_jobs)(
                delayed(_replicate)(ctx, rep) for rep in range(self.config.replications)
            )
        except BrokenExecutor as exc:
            # un worker murió sin devolver su excepción
            raise NumericalFailure('replication', f"worker pool broke at delta_n = {delta_n:g}: {exc}") from exc
        results = sorted(results, key=lambda r: r['rep'])
        for res in results:
            for v, value in sorted(res['values'].items()):
                self.records.append({
                    'rep': res['rep'],
                    'delta_n': delta_n,
                    'v': v,
                    'statistic_value': value,
                    'seed': res['seed'],
                })
        self._log(f"delta_n = {delta_n:g}: {len(results)} replications")
        return ctx, results

    def _report(self, rows: List[Dict], tests: List[Dict], started: float, insufficient: bool = False) -> ExperimentReport:
        config = self.config
        metadata = {
            'master_seed': config.master_seed,
            'seeds': [seed_stream(config.master_seed, r) for r in range(config.replications)],
            'config': config.to_dict(),
            'versions': {
                'bss': __version__,
                'numpy': np.__version__,
                'scipy': scipy.__version__,
                'pandas': pd.__version__,
                'joblib': joblib.__version__,
            },
            'wall_time_s': time.perf_counter() - started,
        }
        frame = pd.DataFrame(self.records, columns=['rep', 'delta_n', 'v', 'statistic_value', 'seed'])
        return ExperimentReport(config.kind, rows, tests, frame, metadata, insufficient)

    @staticmethod
    def _values(results: List[Dict], v: int) -> np.ndarray:
        return np.array([r['values'][v] for r in results], dtype=float)

    # -- tipos de experimento ------------------------------------------------

    def run_lln(self) -> ExperimentReport:
        """Media ± SE de Δ_n/τ²·QV contra limit_qv en cada peldaño."""
        started = time.perf_counter()
        params = DEFAULT_EXPERIMENT_PARAMS
        rows = []
        for delta_n in self.config.deltas:
            ctx, results = self._run_rung(delta_n)
            for v in (1, 2):
                mean, se = _mean_se(self._values(results, v))
                bias = None if ctx.limit is None else mean - ctx.limit
                rows.append({
                    'delta_n': delta_n, 'v': v, 'mean': mean, 'se': se,
                    'limit': ctx.limit, 'bias': bias, 'n_reps': len(results),
                })

        tests = []
        if rows[0]['limit'] is not None and self.config.replications >= 2:
            for v in (1, 2):
                ladder = [r for r in rows if r['v'] == v]
                last = ladder[-1]
                tests.append({
                    'name': 'final_rung_bias', 'v': v, 'delta_n': last['delta_n'],
                    'value': last['bias'], 'se': last['se'],
                    'passed': _within(last['bias'], 0.0, last['se'], params['se_multiplier']),
                })
                monotone = all(
                    abs(b['bias']) <= abs(a['bias']) + params['monotone_slack_se'] * b['se'] + 1e-15
                    for a, b in zip(ladder[:-1], ladder[1:])
                )
                tests.append({'name': 'bias_monotone', 'v': v, 'passed': bool(monotone)})
        return self._report(rows, tests, started, insufficient=self.config.replications < 2)

    def run_clt(self) -> ExperimentReport:
        """Δ_n^{−1/2}(Δ_n/τ²·QV − límite) para v = 1, 2 contra N(0, Σ_teórica).

        Σ_teórica = ∫_0^t(Σ_θ π_k(θ)σ²_{s−θ})² ds · Λ_k(α + ½) = limit_qq/3 · Λ_k.
        """
        started = time.perf_counter()
        config = self.config
        params = DEFAULT_EXPERIMENT_PARAMS
        lam = lambda_matrix(config.true_alpha + 0.5, config.k)
        scale = limit_qq(config.spec, config.sigma, config.k, config.horizon) / 3.0
        theory = {'11': scale * lam.lambda_11, '12': scale * lam.lambda_12, '22': scale * lam.lambda_22}
        insufficient = config.replications < params['min_ks_sample']

        rows, tests = [], []
        for delta_n in config.deltas:
            _, results = self._run_rung(delta_n)
            x1, x2 = self._values(results, 1), self._values(results, 2)
            for v, x in ((1, x1), (2, x2)):
                mean, se = _mean_se(x)
                rows.append({
                    'delta_n': delta_n, 'v': v, 'mean': mean, 'se': se,
                    'variance': float(np.var(x, ddof=1)) if x.size > 1 else None,
                    'theory_variance': theory[f'{v}{v}'], 'n_reps': x.size,
                })
            if insufficient:
                continue
            for v, x in ((1, x1), (2, x2)):
                sd = math.sqrt(theory[f'{v}{v}'])
                statistic, p_value = ks_statistic(x, stats.norm(loc=0.0, scale=sd).cdf)
                tests.append({
                    'name': 'ks_normal', 'delta_n': delta_n, 'v': v,
                    'statistic': statistic, 'p_value': p_value,
                    'passed': p_value > params['ks_level'],
                })
            for entry, (value, se) in _covariance_entries(x1, x2).items():
                tests.append({
                    'name': f'covariance_{entry}', 'delta_n': delta_n,
                    'value': value, 'se': se, 'theory': theory[entry],
                    'passed': _within(value, theory[entry], se, params['se_multiplier']),
                })
            ratio, ratio_se = _variance_ratio(x1, x2)
            target = lam.lambda_22 / lam.lambda_11
            tests.append({
                'name': 'variance_ratio_22_11', 'delta_n': delta_n,
                'value': ratio, 'se': ratio_se, 'theory': target,
                'passed': _within(ratio, target, ratio_se, params['se_multiplier']),
            })
        report = self._report(rows, tests, started, insufficient)
        report.metadata['lambda'] = [list(row) for row in lam.entries]
        return report

    def run_coverage(self) -> ExperimentReport:
        """Fracción de intervalos que contienen α y KS del estadístico factible."""
        started = time.perf_counter()
        config = self.config
        params = DEFAULT_EXPERIMENT_PARAMS
        insufficient = config.replications < params['min_ks_sample']
        rows, tests = [], []
        for delta_n in config.deltas:
            _, results = self._run_rung(delta_n)
            covered = np.array([r['covered'] for r in results], dtype=float)
            p_hat = float(covered.mean())
            rows.append({
                'delta_n': delta_n,
                'coverage': p_hat,
                'binomial_se': math.sqrt(p_hat * (1.0 - p_hat) / covered.size),
                'mean_alpha_hat': float(np.mean([r['alpha_hat'] for r in results])),
                'true_alpha': config.true_alpha,
                'clamped': int(sum(r['clamped'] for r in results)),
                'n_reps': covered.size,
            })
            if insufficient:
                continue
            statistic, p_value = ks_statistic(self._values(results, 1), stats.norm.cdf)
            tests.append({
                'name': 'ks_feasible_statistic', 'delta_n': delta_n,
                'statistic': statistic, 'p_value': p_value,
                'passed': p_value > params['ks_level'],
            })
            level = DEFAULT_ESTIMATION_PARAMS['ci_level']
            nominal_se = math.sqrt(level * (1.0 - level) / covered.size)
            tests.append({
                'name': 'coverage', 'delta_n': delta_n, 'value': p_hat, 'se': nominal_se,
                'theory': level, 'passed': _within(p_hat, level, nominal_se, params['se_multiplier']),
            })
        return self._report(rows, tests, started, insufficient)

    def run_lambda_check(self) -> ExperimentReport:
        """Varianzas y covarianza Monte Carlo sobre fBm contra t·Λ_k(H)."""
        started = time.perf_counter()
        config = self.config
        params = DEFAULT_EXPERIMENT_PARAMS
        lam = lambda_matrix(config.fbm_hurst, config.k)
        theory = {
            '11': config.horizon * lam.lambda_11,
            '12': config.horizon * lam.lambda_12,
            '22': config.horizon * lam.lambda_22,
        }
        insufficient = config.replications < 2
        rows, tests = [], []
        for delta_n in config.deltas:
            _, results = self._run_rung(delta_n)
            if insufficient:
                continue
            for entry, (value, se) in _covariance_entries(self._values(results, 1), self._values(results, 2)).items():
                passed = _within(value, theory[entry], se, params['se_multiplier'])
                rows.append({
                    'delta_n': delta_n, 'entry': f'lambda_{entry}', 'empirical': value,
                    'se': se, 'theory': theory[entry], 'within_3se': passed,
                })
                tests.append({'name': f'lambda_{entry}', 'delta_n': delta_n, 'passed': passed})
        report = self._report(rows, tests, started, insufficient)
        report.metadata['lambda'] = [list(row) for row in lam.entries]
        report.metadata['hurst'] = config.fbm_hurst
        return report

    def run_quarticity(self) -> ExperimentReport:
        """Media de Δ_n/τ⁴·QQ contra limit_qq (4 SE)."""
        started = time.perf_counter()
        params = DEFAULT_EXPERIMENT_PARAMS
        rows, tests = [], []
        for delta_n in self.config.deltas:
            ctx, results = self._run_rung(delta_n)
            for v in (1, 2):
                mean, se = _mean_se(self._values(results, v))
                rows.append({
                    'delta_n': delta_n, 'v': v, 'mean': mean, 'se': se,
                    'limit': ctx.limit, 'bias': mean - ctx.limit, 'n_reps': len(results),
                })
        insufficient = self.config.replications < 2
        if not insufficient:
            for row in rows:
                if row['delta_n'] == self.config.deltas[-1]:
                    tests.append({
                        'name': 'final_rung_quarticity', 'v': row['v'], 'delta_n': row['delta_n'],
                        'passed': _within(row['mean'], row['limit'], row['se'], params['quarticity_se_multiplier']),
                    })
        return self._report(rows, tests, started, insufficient)

    def run(self) -> ExperimentReport:
        dispatch = {
            ExperimentKind.LLN: self.run_lln,
            ExperimentKind.CLT: self.run_clt,
            ExperimentKind.COVERAGE: self.run_coverage,
            ExperimentKind.LAMBDA_CHECK: self.run_lambda_check,
            ExperimentKind.QUARTICITY: self.run_quarticity,
        }
        self.records = []
        report = dispatch[self.config.kind]()
        self._log(f"{self.config.kind.value} experiment finished ({'passed' if report.passed else 'not passed'})")
        return report


# ---------------------------------------------------------------------------
# API funcional
# ---------------------------------------------------------------------------

def _run_kind(config: ExperimentConfig, kind: ExperimentKind, n_jobs: int, verbose: bool) -> ExperimentReport:
    if config.kind is not kind:
        config = config.with_overrides(kind=kind)
    return ExperimentRunner(config, n_jobs=n_jobs, verbose=verbose).run()


def run_lln(config: ExperimentConfig, n_jobs: int = 1, verbose: bool = False) -> ExperimentReport:
    return _run_kind(config, ExperimentKind.LLN, n_jobs, verbose)


def run_clt(config: ExperimentConfig, n_jobs: int = 1, verbose: bool = False) -> ExperimentReport:
    return _run_kind(config, ExperimentKind.CLT, n_jobs, verbose)


def run_coverage(config: ExperimentConfig, n_jobs: int = 1, verbose: bool = False) -> ExperimentReport:
    return _run_kind(config, ExperimentKind.COVERAGE, n_jobs, verbose)


def run_lambda_check(config: ExperimentConfig, n_jobs: int = 1, verbose: bool = False) -> ExperimentReport:
    return _run_kind(config, ExperimentKind.LAMBDA_CHECK, n_jobs, verbose)


def run_quarticity(config: ExperimentConfig, n_jobs: int = 1, verbose: bool = False) -> ExperimentReport:
    return _run_kind(config, ExperimentKind.QUARTICITY, n_jobs, verbose)


def run_experiment(config: ExperimentConfig, n_jobs: int = 1, verbose: bool = False) -> ExperimentReport:
    return ExperimentRunner(config, n_jobs=n_jobs, verbose=verbose).run()


def write_report(report: ExperimentReport, out_dir: str) -> Tuple[str, str]:
    """Escribe report.json y replications.csv; devuelve ambas rutas."""
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, 'report.json')
    csv_path = os.path.join(out_dir, 'replications.csv')
    with open(json_path, 'w', encoding='utf-8') as fh:
        fh.write(report.to_json())
        fh.write('\n')
    report.replications.to_csv(csv_path, index=False)
    return json_path, csv_path
