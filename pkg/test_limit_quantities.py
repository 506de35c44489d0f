import math
import os
from functools import lru_cache

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import binom, gamma

from bss_errors import BSSValidationError, NumericalFailure
from limit_quantities import (
    covariance_kernel,
    g_norm_sq,
    h_function,
    h_norm_sq,
    limits_document,
    pi_k,
    pi_n_measure,
    tau_sq,
    tau_sq_from_variogram,
    variogram,
)
from weight_model import indicator_spec, load_weight_spec, singular_spec

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')


@pytest.fixture(scope="module")
def single():
    return load_weight_spec(os.path.join(CONFIG_DIR, 'single.toml'))


@pytest.fixture(scope="module")
def box():
    """g = 1_(0,1]."""
    return indicator_spec([(1.0, 0.0, 1.0)])


def _closed_form(alpha):
    return gamma(alpha + 1) ** 2 / (gamma(2 * alpha + 2) * math.sin(math.pi * (alpha + 0.5)))


@pytest.mark.parametrize("alpha", [-0.4, -1.0 / 6.0, 0.2, 0.4])
def test_h_norm_matches_gamma_closed_form(alpha):
    """‖h_0‖² con k = 1 contra Γ(α+1)²/(Γ(2α+2)·sin(π(α+½)))."""
    spec = singular_spec([0.0], [alpha])
    assert h_norm_sq(spec, 0, 1, rel_tol=1e-10) == pytest.approx(_closed_form(alpha), rel=1e-6)


@lru_cache(maxsize=None)
def _filter_moment(k, n):
    """Σ_m (−1)^m C(k,m)·m^n (cero para n < k)."""
    return sum((-1) ** m * math.comb(k, m) * m ** n for m in range(k + 1))


def _h_direct(alpha, k, one_sided, x):
    total = 0.0
    for m in range(k + 1):
        d = x - m
        if d == 0 or (one_sided and d < 0):
            continue
        total += (-1) ** m * math.comb(k, m) * abs(d) ** alpha
    return total


def _h_far(alpha, k, x):
    """Serie binomial de Σ_m a_m·|x − m|^α para |x| grande, sin cancelación."""
    ax = abs(x)
    sign = -1.0 if x > 0 else 1.0
    return ax ** alpha * sum(binom(alpha, n) * (sign / ax) ** n * _filter_moment(k, n) for n in range(k, k + 40))


def _h_norm_by_quad(alpha, k, one_sided, far=60.0):
    """‖h‖² con f(θ) = 1 por QUADPACK, cortando en los enteros 0..k."""
    lower = 0.0 if one_sided else -far
    cuts = sorted({lower, far, *map(float, range(k + 1))})
    near = sum(
        quad(lambda x: _h_direct(alpha, k, one_sided, x) ** 2, a, b, epsabs=0.0, epsrel=1e-11, limit=200)[0]
        for a, b in zip(cuts[:-1], cuts[1:])
    )
    tails = [quad(lambda x: _h_far(alpha, k, x) ** 2, far, np.inf, epsabs=0.0, epsrel=1e-11, limit=500)[0]]
    if not one_sided:
        tails.append(quad(lambda x: _h_far(alpha, k, -x) ** 2, far, np.inf, epsabs=0.0, epsrel=1e-11, limit=500)[0])
    return near + sum(tails)


@pytest.mark.parametrize("j", [0, 1])
@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("alpha", [-0.4, -1.0 / 6.0, 0.3])
def test_h_norm_matches_independent_quadrature(alpha, k, j):
    """‖h_j‖² (unilateral para j = 0, bilateral para j ≥ 1) contra quad de scipy."""
    spec = singular_spec([0.0, 2.0], [alpha, alpha], f_values=[1.0, 0.8], max_filter_order=3)
    expected = (1.0 if j == 0 else 0.64) * _h_norm_by_quad(alpha, k, j == 0)
    assert h_norm_sq(spec, j, k) == pytest.approx(expected, rel=1e-6)


def test_h_far_series_matches_direct_sum():
    """La serie de la cola coincide con la suma directa donde ambas son exactas."""
    for k in (1, 2, 3):
        for x in (12.0, -12.0):
            assert _h_far(-0.2, k, x) == pytest.approx(_h_direct(-0.2, k, False, x), rel=1e-9)


def test_h_function_values(single):
    """h_0 es unilateral y se anula en los enteros 0..k."""
    alpha = single.segments[0].alpha
    assert h_function(single, 0, 1, 0.5) == pytest.approx(0.5 ** alpha)
    assert h_function(single, 0, 1, -0.5) == 0.0
    assert h_function(single, 0, 1, 0.0) == 0.0
    assert h_function(single, 0, 2, 1.5) == pytest.approx(1.5 ** alpha - 2 * 0.5 ** alpha)


def test_h_norm_argument_checks(single, box):
    with pytest.raises(BSSValidationError):
        h_norm_sq(single, 0, 1, rel_tol=1e-3)
    with pytest.raises(BSSValidationError):
        h_norm_sq(single, 1, 1)
    with pytest.raises(BSSValidationError):
        h_norm_sq(box, 0, 1)


def test_pi_k_single_singularity(single):
    """Una singularidad: toda la masa en θ_0 = 0."""
    measure = pi_k(single, 2)
    assert measure.support == (0.0,)
    assert measure.weights == pytest.approx((1.0,))
    assert measure.alpha == pytest.approx(-1.0 / 6.0)
    assert measure.mass_at(0.0) == pytest.approx(1.0)


def test_pi_k_two_active_singularities():
    """Pesos ∝ ‖h_j‖² y ‖h_1‖² escala con f_1(θ_1)²."""
    spec = load_weight_spec(os.path.join(CONFIG_DIR, 'two_singularity.toml'))
    measure = pi_k(spec, 2)
    assert measure.support == (0.0, 2.0)
    assert measure.active_set == (0, 1)
    assert sum(measure.weights) == pytest.approx(1.0)
    unit = singular_spec([0.0, 2.0], [spec.segments[0].alpha] * 2, half_width=0.8)
    assert measure.h_norms_sq[1] == pytest.approx(0.64 * h_norm_sq(unit, 1, 2), rel=1e-12)
    ratio = measure.weights[1] / measure.weights[0]
    assert ratio == pytest.approx(measure.h_norms_sq[1] / measure.h_norms_sq[0], rel=1e-12)


def test_pi_k_ignores_smoother_singularity():
    """α_1 − α_0 > ¼: θ_1 no recibe masa."""
    spec = load_weight_spec(os.path.join(CONFIG_DIR, 'robustness.toml'))
    measure = pi_k(spec, 2)
    assert measure.support == (0.0,)
    assert measure.weights == pytest.approx((1.0,))
    assert len(measure.h_norms_sq) == 2


def test_pi_k_indicator_weights():
    """Cada extremo recibe a_i²/(2Σa²)."""
    spec = indicator_spec([(1.0, 0.0, 1.0), (2.0, 2.0, 3.0)])
    measure = pi_k(spec, 1)
    assert measure.support == (0.0, 1.0, 2.0, 3.0)
    assert measure.weights == pytest.approx((0.1, 0.1, 0.4, 0.4))
    assert measure.alpha == -0.5


@pytest.mark.parametrize("delta", [1e-2, 1e-3])
def test_indicator_tau_and_empirical_measure(box, delta):
    """τ_1(Δ)² = 2Δ, τ_2(Δ)² = 4Δ y π_n([−Δ, 0]) = ½."""
    res = tau_sq(box, 1, 1, delta)
    assert res.tau_sq_exact == pytest.approx(2 * delta, rel=1e-10)
    assert res.tau_sq_asymptotic == pytest.approx(2 * delta, rel=1e-12)
    assert tau_sq(box, 2, 1, delta).tau_sq_exact == pytest.approx(4 * delta, rel=1e-10)
    assert pi_n_measure(box, 1, 1, delta, (-delta, 0.0)) == pytest.approx(0.5, abs=1e-10)
    assert pi_n_measure(box, 1, 1, delta, (0.5, 0.6)) == pytest.approx(0.0, abs=1e-10)


def test_tau_ratio_tends_to_one(single):
    """τ exacto / asintótico → 1 cuando Δ_n → 0."""
    for k in (1, 2):
        for v in (1, 2):
            res = tau_sq(single, k, v, 1e-3)
            assert res.ratio == pytest.approx(1.0, rel=1e-2)
            assert res.quadrature_error_estimate >= 0.0


def test_empirical_measure_concentrates_at_singularity(single):
    """Casi toda la masa de (Δ_2 g)² queda en un entorno chico de θ_0 = 0."""
    delta = 1e-3
    near = pi_n_measure(single, 2, 1, delta, (-2 * delta, 0.1))
    assert 0.99 < near <= 1.0
    assert pi_n_measure(single, 2, 1, delta, (0.2, 0.3)) < 1e-3


def test_preconditions(single, box):
    with pytest.raises(BSSValidationError):
        tau_sq(single, 2, 2, 0.1)
    with pytest.raises(BSSValidationError):
        tau_sq(single, 1, 1, 0.0)
    with pytest.raises(BSSValidationError):
        tau_sq(box, 1, 1, 1.0)
    with pytest.raises(BSSValidationError):
        pi_n_measure(single, 1, 1, 1e-3, (0.0, 0.0))


def test_gaussian_core_quantities(box):
    """‖g‖² y el variograma del núcleo indicador."""
    assert g_norm_sq(box) == pytest.approx(1.0, rel=1e-12)
    assert g_norm_sq(indicator_spec([(1.0, 0.0, 1.0), (2.0, 2.0, 3.0)])) == pytest.approx(5.0, rel=1e-12)
    assert variogram(box, 0.25) == pytest.approx(0.5, rel=1e-10)
    assert variogram(box, 0.0) == 0.0


def test_tau_from_variogram_matches_quadrature(single):
    """τ² = −½ΣΣ a_j a_j' R(|j − j'|vΔ) reproduce ‖Δ_k g‖²."""
    delta = 1e-3
    kernel = covariance_kernel(single, [0.0, delta, 2 * delta], rel_tol=1e-10, interp_tol=1e-3)
    assert kernel.r(0.0) == pytest.approx(1.0)
    assert {0.0, delta, 2 * delta} <= set(kernel.t_grid.tolist())
    assert kernel.interp_error <= 1e-3
    for k in (1, 2):
        expected = tau_sq(single, k, 1, delta, rel_tol=1e-10).tau_sq_exact
        assert tau_sq_from_variogram(kernel, k, 1, delta) == pytest.approx(expected, rel=1e-6)
    with pytest.raises(BSSValidationError):
        kernel.r(1.0)
    with pytest.raises(BSSValidationError):
        covariance_kernel(single, [0.2, 0.1])


def test_covariance_kernel_refines_until_interpolation_meets_tolerance(box):
    """Para 1_(0,1], r(t) = (1 − t)^+: lineal hasta t = 1 y quebrada ahí."""
    flat = covariance_kernel(box, [0.0, 0.5, 1.0])
    assert flat.t_grid.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert flat.interp_error < 1e-8

    kinked = covariance_kernel(box, [0.0, 1.5], interp_tol=1e-6)
    assert kinked.t_grid.size > 10
    assert kinked.interp_error <= 1e-6
    for t in (0.3, 0.99, 1.0, 1.2):
        assert kinked.r(t) == pytest.approx(max(1.0 - t, 0.0), abs=3e-6)

    with pytest.raises(NumericalFailure):
        covariance_kernel(box, [0.0, 1.5], interp_tol=1e-6, max_nodes=8)
    with pytest.raises(BSSValidationError):
        covariance_kernel(box, [0.0, 1.0], interp_tol=0.0)


def test_limits_document(single):
    doc = limits_document(single, 2, deltas=[1e-3], vs=[1, 2])
    assert doc['active_set'] == [0]
    assert doc['pi_k'] == [{'theta': 0.0, 'weight': pytest.approx(1.0)}]
    assert [row['v'] for row in doc['tau']] == [1, 2]
    assert all(row['exact'] > 0 and row['asymptotic'] > 0 for row in doc['tau'])
    assert np.isclose(doc['alpha'], -1.0 / 6.0)
