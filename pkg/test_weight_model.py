import math
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np
import pytest

from bss_errors import BSSValidationError
from weight_model import (
    KernelKind,
    check_filter_args,
    dumps_weight_spec,
    eval_g,
    filter_coefficients,
    filter_shifts,
    filtered_g,
    g_derivatives,
    indicator_spec,
    load_weight_spec,
    require_valid,
    singular_spec,
    summarize_smoothness,
    validate,
    weight_spec_from_dict,
)

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')


@pytest.fixture(scope="module")
def single():
    """Kernel de una singularidad en 0 con α = −1/6 (δ = 0.5)."""
    return singular_spec([0.0], [-1.0 / 6.0])


@pytest.fixture(scope="module")
def two_point():
    """Dos singularidades: α_0 = −0.2 activa, α_1 = 0.3 lejos del mínimo."""
    return singular_spec([0.0, 2.0], [-0.2, 0.3])


def test_eval_g_vanishes_on_negative_half_line(single):
    """g(x) = 0 para x ≤ 0."""
    assert eval_g(single, -1.0) == 0.0
    assert eval_g(single, 0.0) == 0.0
    assert np.all(eval_g(single, np.array([-3.0, -0.5, 0.0])) == 0.0)


def test_eval_g_power_law_inside_window(single):
    """Dentro de la ventana g(x) = x^α·f(0) con f ≡ 1."""
    for x in (1e-6, 0.01, 0.25, 0.5):
        assert eval_g(single, x) == pytest.approx(x ** (-1.0 / 6.0), rel=1e-12)
    assert isinstance(eval_g(single, 0.1), float)


def test_eval_g_tail_is_exponential(single):
    """Más allá de tail_start, g coincide con la curva base c_b·e^{−λx}."""
    x = single.tail_start + 1.0
    assert eval_g(single, x) == pytest.approx(single.baseline_scale * math.exp(-x), rel=1e-12)
    # continuidad en el borde de la ventana
    edge = single.segments[0].half_width
    assert single.baseline_scale * math.exp(-edge) == pytest.approx(edge ** (-1.0 / 6.0), rel=1e-12)


def test_eval_g_zero_at_interior_singularity(two_point):
    """Convención g(θ_i) = 0 en las singularidades interiores."""
    assert eval_g(two_point, 2.0) == 0.0
    assert eval_g(two_point, 2.1) == pytest.approx(0.1 ** 0.3, rel=1e-12)
    assert eval_g(two_point, 1.9) == pytest.approx(0.1 ** 0.3, rel=1e-12)


def test_indicator_intervals_are_half_open():
    """a·1_{(start, end]}: el extremo izquierdo queda fuera, el derecho dentro."""
    spec = indicator_spec([(1.0, 0.0, 1.0), (-2.0, 2.0, 3.0)])
    assert spec.kind is KernelKind.INDICATOR
    assert eval_g(spec, 0.0) == 0.0
    assert eval_g(spec, 0.5) == 1.0
    assert eval_g(spec, 1.0) == 1.0
    assert eval_g(spec, 1.5) == 0.0
    assert eval_g(spec, 3.0) == -2.0
    assert spec.min_spacing == pytest.approx(1.0)


def test_filter_coefficients_and_shifts():
    """Coeficientes binomiales alternados y desplazamientos con ancla."""
    assert filter_coefficients(1).tolist() == [1.0, -1.0]
    assert filter_coefficients(2).tolist() == [1.0, -2.0, 1.0]
    assert filter_coefficients(3).tolist() == [1.0, -3.0, 3.0, -1.0]
    assert filter_shifts(2, 0.1) == pytest.approx([0.0, 0.1, 0.2])
    assert filter_shifts(2, 0.1, anchor=2) == pytest.approx([-0.2, -0.1, 0.0])


def test_filtered_g_on_indicator():
    """Δ_1 de 1_(0,1] con paso 0.1: vale 1 cerca del salto en 0 y −1 cerca de 1."""
    spec = indicator_spec([(1.0, 0.0, 1.0)])
    assert filtered_g(spec, 1, 1, 0.1, 0.05) == 1.0
    assert filtered_g(spec, 1, 1, 0.1, 0.5) == 0.0
    assert filtered_g(spec, 1, 1, 0.1, 1.05) == -1.0
    # v = 2 duplica el paso
    assert filtered_g(spec, 1, 2, 0.1, 0.15) == 1.0


def test_check_filter_args_rejects_bad_orders(single):
    with pytest.raises(BSSValidationError):
        check_filter_args(single, 4, 1)
    with pytest.raises(BSSValidationError):
        check_filter_args(single, 0, 1)
    with pytest.raises(BSSValidationError):
        check_filter_args(single, 1, 3)
    with pytest.raises(BSSValidationError):
        filtered_g(single, 1, 1, 0.0, 0.5)


def test_smoothness_summary(two_point):
    """Conjunto activo, robustez y condición k = 1 del TCL."""
    summary = summarize_smoothness(two_point)
    assert summary.alpha_min == pytest.approx(-0.2)
    assert summary.active_set == (0,)
    assert summary.robustness_ok
    assert not summary.clt_k1_ok
    assert summary.hurst == pytest.approx(0.3)

    tied = summarize_smoothness(singular_spec([0.0, 2.0], [-0.2, -0.2]))
    assert tied.active_set == (0, 1)
    assert tied.clt_k1_ok

    close = summarize_smoothness(singular_spec([0.0, 2.0], [-0.2, -0.1]))
    assert close.active_set == (0,)
    assert not close.robustness_ok

    with pytest.raises(BSSValidationError):
        summarize_smoothness(indicator_spec([(1.0, 0.0, 1.0)]))


def test_validate_reports_each_structural_violation():
    """Cada diagnóstico empieza con el nombre de la condición violada."""
    assert validate(singular_spec([0.0], [0.7]))[0].startswith('exponent_range')
    assert validate(singular_spec([0.0], [0.0]))[0].startswith('exponent_range')
    assert validate(singular_spec([0.5], [-0.2]))[0].startswith('ordering')
    overlap = validate(singular_spec([0.0, 1.0], [-0.2, -0.2], half_width=0.5))
    assert any(d.startswith('half_width') for d in overlap)
    assert validate(singular_spec([0.0], [-0.2], f_values=[0.0]))[0].startswith('f_nonzero')
    assert validate(singular_spec([0.0], [-0.2], tail_rate=-1.0))[0].startswith('tail_rate')
    assert validate(indicator_spec([(1.0, 1.0, 0.5)]))[0].startswith('indicator')
    assert validate(indicator_spec([(0.0, 0.0, 1.0)]))[0].startswith('indicator')


def test_require_valid_carries_all_diagnostics():
    bad = singular_spec([0.0, 0.1], [0.7, -0.9], half_width=0.2)
    with pytest.raises(BSSValidationError) as excinfo:
        require_valid(bad)
    assert str(excinfo.value).startswith('invalid weight spec: ')
    assert len(excinfo.value.diagnostics) >= 3


def test_shipped_specs_validate():
    """Los specs incluidos en configs/ pasan (o fallan) como se espera."""
    for name in ('single.toml', 'two_singularity.toml', 'robustness.toml', 'indicator.toml'):
        assert validate(load_weight_spec(os.path.join(CONFIG_DIR, name))) == [], name
    diags = validate(load_weight_spec(os.path.join(CONFIG_DIR, 'bad.toml')))
    assert diags and diags[0].startswith('exponent_range')


def test_toml_round_trip(two_point):
    """dumps → loads reconstruye el mismo spec."""
    text = dumps_weight_spec(two_point)
    assert weight_spec_from_dict(tomllib.loads(text)) == two_point

    indicator = indicator_spec([(1.5, 0.0, 1.0), (-0.5, 2.0, 2.5)])
    assert weight_spec_from_dict(tomllib.loads(dumps_weight_spec(indicator))) == indicator


def test_from_dict_keeps_order_and_defaults():
    spec = weight_spec_from_dict({'segments': [{'theta': 0.0, 'alpha': -0.2, 'half_width': 0.5}]})
    assert spec.kind is KernelKind.SINGULAR
    assert spec.segments[0].f_coeffs == (1.0,)
    assert spec.max_filter_order == 2

    with pytest.raises(BSSValidationError):
        weight_spec_from_dict({'kind': 'Wavelet'})
    with pytest.raises(BSSValidationError):
        weight_spec_from_dict({'segments': [{'theta': 0.0}]})


def test_misordered_table_is_reported():
    """Un TOML con las singularidades desordenadas no se corrige en silencio."""
    spec = weight_spec_from_dict({
        'segments': [
            {'theta': 2.0, 'alpha': -0.1, 'half_width': 0.5},
            {'theta': 0.0, 'alpha': -0.2, 'half_width': 0.5},
        ]
    })
    assert spec.thetas == [2.0, 0.0]
    diags = validate(spec)
    assert any(d.startswith('ordering') and 'theta_1' in d for d in diags)
    with pytest.raises(BSSValidationError):
        require_valid(spec)

    terms = weight_spec_from_dict({
        'kind': 'IndicatorSum',
        'indicator_terms': [
            {'amplitude': 1.0, 'start': 2.0, 'end': 3.0},
            {'amplitude': 1.0, 'start': 0.0, 'end': 1.0},
        ],
    })
    assert any(d.startswith('ordering') for d in validate(terms))


def test_one_sided_derivatives_at_tail_start():
    """En tail_start las derivadas laterales coinciden con las de c_b·e^{−x}."""
    spec = load_weight_spec(os.path.join(CONFIG_DIR, 'single.toml'))
    x = spec.tail_start
    expected = [(-1.0) ** m * spec.baseline_scale * math.exp(-x) for m in range(4)]
    np.testing.assert_allclose(g_derivatives(spec, x, -1, 3), expected, rtol=1e-9)
    np.testing.assert_allclose(g_derivatives(spec, x, 1, 3), expected, rtol=1e-9)
    # derivada 3 en x = 1: −c_b·e^{−1} ≈ −0.680821
    assert g_derivatives(spec, 1.0, 1, 3)[3] == pytest.approx(-0.680821, abs=1e-6)


def test_one_sided_derivatives_match_power_law_inside_window(two_point):
    """Dentro de la ventana de θ_1 = 2 (α = 0.3): derivadas de |x − 2|^{0.3}."""
    d = 0.1
    left = g_derivatives(two_point, 2.0 - d, -1, 2)
    right = g_derivatives(two_point, 2.0 + d, 1, 2)
    assert right[0] == pytest.approx(d ** 0.3, rel=1e-12)
    assert right[1] == pytest.approx(0.3 * d ** -0.7, rel=1e-12)
    assert right[2] == pytest.approx(0.3 * -0.7 * d ** -1.7, rel=1e-12)
    assert left[1] == pytest.approx(-right[1], rel=1e-12)
    assert left[2] == pytest.approx(right[2], rel=1e-12)
    with pytest.raises(BSSValidationError):
        g_derivatives(two_point, 2.0, 1, 2)


@pytest.mark.parametrize("name", ['single.toml', 'two_singularity.toml', 'robustness.toml'])
def test_shipped_kernels_have_no_derivative_jumps(name):
    """Las uniones smoothstep son C^k: ningún diagnóstico de suavidad."""
    spec = load_weight_spec(os.path.join(CONFIG_DIR, name))
    for p in spec.kink_points:
        left = g_derivatives(spec, p, -1, spec.max_filter_order)
        right = g_derivatives(spec, p, 1, spec.max_filter_order)
        np.testing.assert_allclose(left, right, rtol=1e-8, atol=1e-10 * abs(eval_g(spec, p)))
    assert not [d for d in validate(spec) if d.startswith('smoothness')]


def test_load_weight_spec_errors(tmp_path):
    with pytest.raises(BSSValidationError):
        load_weight_spec(str(tmp_path / 'missing.toml'))
    broken = tmp_path / 'broken.toml'
    broken.write_text('kind = [unclosed', encoding='utf-8')
    with pytest.raises(BSSValidationError):
        load_weight_spec(str(broken))
