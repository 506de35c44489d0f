import numpy as np
import pytest

from bss_errors import BSSValidationError
from fbm_limits import (
    clamp_alpha,
    fbm_cov,
    fbm_filter_corr,
    fbm_filter_variance,
    lambda_document,
    lambda_matrix,
    lambda_matrix_at_alpha_hat,
    rho,
)


@pytest.mark.parametrize("H", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_rho_matches_fgn_closed_form(H):
    """ρ_1^{1,1}(j) es la autocorrelación del ruido fraccionario."""
    j = np.arange(0, 101, dtype=float)
    two_h = 2 * H
    closed = 0.5 * (np.abs(j + 1) ** two_h - 2 * np.abs(j) ** two_h + np.abs(j - 1) ** two_h)
    tol = 1e-12 + 4.0 * np.finfo(float).eps * (j + 1) ** two_h
    assert np.all(np.abs(rho(H, 1, 1, 1, j) - closed) <= tol)
    assert rho(H, 2, 2, 2, 0) == pytest.approx(1.0)


def test_fbm_cov_and_filter_variance():
    """Browniano: cov = min(s, t) y Var(Δ_1^{n,v} B) = vΔ_n."""
    assert fbm_cov(0.5, 1.0, 2.0) == pytest.approx(1.0)
    assert fbm_cov(0.3, 1.0, 1.0) == pytest.approx(1.0)
    assert fbm_filter_variance(0.5, 1, 1, 0.01) == pytest.approx(0.01)
    assert fbm_filter_variance(0.5, 1, 2, 0.01) == pytest.approx(0.02)
    # Δ_2 B es la diferencia de dos incrementos independientes
    assert fbm_filter_variance(0.5, 2, 1, 0.01) == pytest.approx(0.02)


def test_lambda_brownian_closed_form():
    """H = ½, k = 1: Λ = [[2, 2], [2, 3]]."""
    lam = lambda_matrix(0.5, 1)
    assert lam.certified
    np.testing.assert_allclose(lam.as_array(), [[2.0, 2.0], [2.0, 3.0]], rtol=1e-12)
    assert lam.quadratic_form([-1.0, 1.0]) == pytest.approx(1.0)


def test_lambda_11_matches_brute_force_partial_sum():
    """λ11(⅓, k = 1) = 2·Σ_{|j| ≤ 10⁶} ρ(j)² con ρ la autocorrelación del fGn."""
    two_h = 2.0 / 3.0
    j = np.arange(1, 10 ** 6 + 1, dtype=float)
    r = 0.5 * ((j + 1) ** two_h - 2 * j ** two_h + (j - 1) ** two_h)
    brute = 2.0 * (1.0 + 2.0 * np.sum(r ** 2))
    lam = lambda_matrix(1.0 / 3.0, 1)
    assert lam.certified
    assert lam.lambda_11 == pytest.approx(brute, abs=1e-6)


@pytest.mark.parametrize("H,k", [(0.3, 1), (0.5, 1), (0.4, 2), (0.7, 2), (0.55, 3)])
def test_lambda_is_continuous_in_hurst(H, k):
    """Λ_k(H ± 10⁻⁴) queda a menos de 10⁻³ relativo de Λ_k(H)."""
    center = lambda_matrix(H, k).as_array()
    for shifted in (H - 1e-4, H + 1e-4):
        np.testing.assert_allclose(lambda_matrix(shifted, k).as_array(), center, rtol=1e-3)


@pytest.mark.parametrize("H,k", [(0.2, 1), (1.0 / 3.0, 2), (0.8, 2), (0.6, 3)])
def test_lambda_symmetric_positive_definite(H, k):
    lam = lambda_matrix(H, k)
    assert lam.certified
    assert lam.entries[0][1] == lam.entries[1][0]
    assert lam.min_eigenvalue() > 0
    assert lam.lambda_11 >= 2.0
    assert lam.truncation_j >= 1
    assert lam.tail_bound >= 0.0


def test_lambda_rejects_divergent_series():
    """k = 1 con H ≥ ¾: la serie Σρ² diverge."""
    with pytest.raises(BSSValidationError):
        lambda_matrix(0.75, 1)
    with pytest.raises(BSSValidationError):
        lambda_matrix(0.0, 2)
    with pytest.raises(BSSValidationError):
        rho(0.3, 1, 3, 1, 0)


def test_clamp_alpha():
    assert clamp_alpha(0.3, 1) == (0.24, True)
    assert clamp_alpha(-0.6, 2) == (-0.49, True)
    assert clamp_alpha(-0.2, 2) == (-0.2, False)
    lam, clamped = lambda_matrix_at_alpha_hat(0.7, 2)
    assert clamped
    assert lam.hurst == pytest.approx(0.99)


def test_filter_corr_table():
    table = fbm_filter_corr(0.3, 2, max_lag=20)
    assert table.value(1, 1, 0) == pytest.approx(1.0)
    assert table.value(1, 2, 3) == pytest.approx(rho(0.3, 2, 1, 2, 3))
    assert table.lags().size == 41
    with pytest.raises(BSSValidationError):
        table.value(1, 1, 21)


def test_lambda_document():
    doc = lambda_document(lambda_matrix(0.5, 1))
    assert doc['H'] == 0.5
    assert doc['k'] == 1
    assert doc['lambda'] == [[pytest.approx(2.0), pytest.approx(2.0)], [pytest.approx(2.0), pytest.approx(3.0)]]
    assert doc['certified'] is True
