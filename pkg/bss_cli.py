#!/usr/bin/env python3
"""
Punto de entrada de línea de comandos del toolkit BSS.

Subcomandos:
    limits      π_k, ‖h_j‖², τ_k(vΔ_n)² (y Λ_k con --lambda) en JSON
    simulate    trayectoria BSS en CSV (t, X, sigma)
    estimate    α̂, estadístico factible e intervalo desde un CSV
    experiment  experimento Monte Carlo desde un TOML → report.json + CSV

Exit codes: 0 éxito, 1 error de validación, 2 falla numérica.
"""

import argparse
import json
import os
import sys
from typing import Dict, List, Optional

from bss_errors import BSSValidationError, NumericalFailure
from experiments import ExperimentConfig, __version__, run_experiment, write_report
from fbm_limits import lambda_document, lambda_matrix
from hf_statistics import DEFAULT_ESTIMATION_PARAMS, estimate_alpha, estimation_document
from limit_quantities import DEFAULT_QUADRATURE_PARAMS, limits_document
from simulation import DEFAULT_GRID_PARAMS, GridSpec, IntermittencySpec, read_path_csv, simulate_bss, write_path_csv
from weight_model import load_weight_spec, require_valid, summarize_smoothness

VERBOSE_MODES = ('off', 'text', 'json')

GLOBAL_DEFAULTS = {
    'seed': 0,
    'threads': os.cpu_count() or 1,
    'verbose': 'off',
}


class CliUsageError(BSSValidationError):
    """Flag desconocido o valor fuera de rango."""


class _Parser(argparse.ArgumentParser):
    # argparse sale con código 2, que aquí significa falla numérica
    def error(self, message):
        raise CliUsageError(f"{self.prog}: {message}")


def version_string() -> str:
    return f"bss {__version__} (build {os.environ.get('BSS_BUILD_HASH', 'unknown')})"


# ---------------------------------------------------------------------------
# Tipos con chequeo de rango
# ---------------------------------------------------------------------------

def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from exc
    if not value > 0 or value == float('inf'):
        raise argparse.ArgumentTypeError(f"{text!r} must be a positive finite number")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return value


def _nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from exc
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 0")
    return value


def _rel_tol(text: str) -> float:
    value = _positive_float(text)
    if value > 1e-4:
        raise argparse.ArgumentTypeError(f"rel-tol {text!r} must lie in (0, 1e-4]")
    return value


def _probability(text: str) -> float:
    value = _positive_float(text)
    if not value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must lie in (0, 1)")
    return value


def _alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from exc
    if not -0.5 < value < 0.5:
        raise argparse.ArgumentTypeError(f"alpha {text!r} must lie in (-1/2, 1/2)")
    return value


def _sigma(text: str) -> IntermittencySpec:
    try:
        return IntermittencySpec.parse(text)
    except BSSValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _global_flags() -> argparse.ArgumentParser:
    """Flags globales, aceptados antes o después del subcomando."""
    parent = _Parser(add_help=False)
    parent.add_argument('--seed', type=_nonnegative_int, default=argparse.SUPPRESS,
                        help='Semilla maestra (default: 0)')
    parent.add_argument('--threads', type=_positive_int, default=argparse.SUPPRESS,
                        help='Procesos para réplicas y tablas de covarianza (default: núcleos lógicos)')
    parent.add_argument('--verbose', choices=VERBOSE_MODES, default=argparse.SUPPRESS,
                        help='off, text (progreso ✓ en stderr) o json (diagnósticos JSON en stderr)')
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _global_flags()
    parser = _Parser(
        prog='bss',
        description='Teoría límite de alta frecuencia para procesos BSS con varias singularidades',
        parents=[parent],
    )
    parser.add_argument('--version', action='version', version=version_string())
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    limits = sub.add_parser('limits', parents=[parent], help='π_k, ‖h_j‖², τ² y Λ_k')
    limits.add_argument('--spec', help='Spec TOML del núcleo')
    limits.add_argument('--k', type=_positive_int, required=True, help='Orden del filtro')
    limits.add_argument('--delta-n', type=_positive_float, action='append', default=[],
                        help='Δ_n para τ² (repetible)')
    limits.add_argument('--v', type=int, choices=(1, 2), action='append', default=None,
                        help='Multiplicador de frecuencia (repetible, default: 1 y 2)')
    limits.add_argument('--rel-tol', type=_rel_tol, default=DEFAULT_QUADRATURE_PARAMS['rel_tol'])
    limits.add_argument('--lambda', dest='with_lambda', action='store_true',
                        help='Emite Λ_k en H = α + ½ (o --hurst)')
    limits.add_argument('--hurst', type=_probability, help='H explícito para --lambda')
    limits.add_argument('--out', help='Archivo JSON de salida (default: stdout)')

    simulate = sub.add_parser('simulate', parents=[parent], help='Trayectoria BSS en CSV')
    simulate.add_argument('--spec', required=True, help='Spec TOML del núcleo')
    simulate.add_argument('--delta-n', type=_positive_float, required=True)
    simulate.add_argument('--horizon', type=_positive_float, required=True)
    simulate.add_argument('--kappa', type=_positive_int, default=DEFAULT_GRID_PARAMS['refinement'],
                          help='Refinamiento de la grilla interna')
    simulate.add_argument('--t-cut', type=_positive_float, default=None, help='Truncación de la memoria')
    simulate.add_argument('--sigma', type=_sigma, default=IntermittencySpec.constant(1.0),
                          help='const:c | trig:a0,a1,b1,... | expou:kappa,xi,x0')
    simulate.add_argument('--mu', type=float, default=0.0)
    simulate.add_argument('--out', required=True, help='CSV de salida')

    estimate = sub.add_parser('estimate', parents=[parent], help='Estimación de α')
    estimate.add_argument('--in', dest='input', required=True, help='CSV con columnas t, X[, sigma]')
    estimate.add_argument('--k', type=_positive_int, required=True)
    estimate.add_argument('--delta-n', type=_positive_float, default=None)
    estimate.add_argument('--t', type=_positive_float, default=None, help='Horizonte usado (default: todo)')
    estimate.add_argument('--null-alpha', type=_alpha, default=None)
    estimate.add_argument('--spec', default=None, help='Spec TOML conocido (chequeo del horizonte)')
    estimate.add_argument('--ci-level', type=_probability, default=DEFAULT_ESTIMATION_PARAMS['ci_level'])
    estimate.add_argument('--out', help='Archivo JSON de salida (default: stdout)')

    experiment = sub.add_parser('experiment', parents=[parent], help='Experimento Monte Carlo')
    experiment.add_argument('--config', required=True, help='TOML del experimento')
    experiment.add_argument('--out', default=None, help='Directorio de salida (default: output del TOML)')
    experiment.add_argument('--replications', type=_nonnegative_int, default=None)
    return parser


def parse_args(argv: List[str]) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    for name, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, value)
    args.seed_given = '--seed' in argv or any(a.startswith('--seed=') for a in argv)
    return args


# ---------------------------------------------------------------------------
# Subcomandos
# ---------------------------------------------------------------------------

def _progress(args: argparse.Namespace, message: str) -> None:
    if args.verbose == 'text':
        print(f"✓ {message}", file=sys.stderr)


def _emit_json(document: Dict, out: Optional[str]) -> None:
    text = json.dumps(document, sort_keys=True, indent=2)
    if out:
        with open(out, 'w', encoding='utf-8') as fh:
            fh.write(text + '\n')
    else:
        print(text)


def _load_spec(path: str):
    return require_valid(load_weight_spec(path))


def cmd_limits(args: argparse.Namespace) -> int:
    if args.spec is None and not (args.with_lambda and args.hurst is not None):
        raise CliUsageError("limits: --spec is required (or --lambda with --hurst)")
    document: Dict = {}
    spec = None
    if args.spec is not None:
        spec = _load_spec(args.spec)
        vs = tuple(args.v) if args.v else (1, 2)
        document = limits_document(spec, args.k, args.delta_n, vs, args.rel_tol)
        _progress(args, f"limits for k = {args.k}: alpha = {document['alpha']}")
    if args.with_lambda:
        H = args.hurst if args.hurst is not None else summarize_smoothness(spec).hurst
        lam_doc = lambda_document(lambda_matrix(H, args.k))
        document = lam_doc if spec is None else {**document, 'lambda': lam_doc}
        _progress(args, f"lambda matrix at H = {H}")
    _emit_json(document, args.out)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _load_spec(args.spec)
    grid = GridSpec(delta_n=args.delta_n, horizon=args.horizon, refinement=args.kappa, truncation=args.t_cut)
    grid.check(spec)
    path = simulate_bss(spec, args.mu, args.sigma, grid, args.seed, n_jobs=args.threads)
    write_path_csv(path, args.out)
    _progress(args, f"{path.values.size} points written to {args.out} (method {path.method})")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    path = read_path_csv(args.input, args.delta_n)
    known = _load_spec(args.spec) if args.spec else None
    result = estimate_alpha(path, args.k, t_used=args.t, known_spec=known,
                            null_alpha=args.null_alpha, ci_level=args.ci_level)
    _progress(args, f"alpha_hat = {result.alpha_hat:.6f} from {path.values.size} observations")
    _emit_json(estimation_document(result), args.out)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_toml(args.config)
    config = config.with_overrides(
        replications=args.replications,
        master_seed=args.seed if args.seed_given else None,
    )
    out_dir = args.out or config.output
    if not out_dir:
        raise CliUsageError("experiment: --out is required when the config has no 'output'")
    report = run_experiment(config, n_jobs=args.threads, verbose=args.verbose == 'text')
    json_path, csv_path = write_report(report, out_dir)
    _progress(args, f"report written to {json_path} and {csv_path}")
    return 0


COMMANDS = {
    'limits': cmd_limits,
    'simulate': cmd_simulate,
    'estimate': cmd_estimate,
    'experiment': cmd_experiment,
}


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def _report_error(verbose: str, category: str, exc: Exception) -> None:
    if verbose == 'json':
        payload = {'error': category, 'message': str(exc)}
        if isinstance(exc, BSSValidationError):
            payload['diagnostics'] = exc.diagnostics
        if isinstance(exc, NumericalFailure):
            payload['operation'] = exc.operation
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return
    print(f"❌ {category} error: {exc}", file=sys.stderr)
    for line in getattr(exc, 'diagnostics', [])[1:]:
        print(f"   - {line}", file=sys.stderr)


def _verbose_mode(argv: List[str]) -> str:
    # disponible aunque el parseo falle
    for i, arg in enumerate(argv):
        if arg.startswith('--verbose='):
            return arg.split('=', 1)[1]
        if arg == '--verbose' and i + 1 < len(argv):
            return argv[i + 1]
    return GLOBAL_DEFAULTS['verbose']


def dispatch(argv: List[str]) -> int:
    """Ejecuta un subcomando y devuelve el exit code (0, 1 o 2)."""
    argv = list(argv)
    verbose = _verbose_mode(argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except BSSValidationError as exc:
        _report_error(verbose, 'validation', exc)
        return 1
    except OSError as exc:
        _report_error(verbose, 'validation', BSSValidationError(f"I/O: {exc}"))
        return 1
    except NumericalFailure as exc:
        _report_error(verbose, 'numerical', exc)
        return 2
    except SystemExit as exc:
        # --help y --version
        return int(exc.code or 0)


def main(argv: Optional[List[str]] = None) -> int:
    """Función principal para CLI."""
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == '__main__':
    sys.exit(main())
