import math

import numpy as np
import pytest

from bss_errors import QuadratureError
from singular_quadrature import integrate_panels, integrate_tail


def _power(expo, point=0.0):
    """Integrando |x − point|^expo en forma (base, offset)."""
    def func(base, offset):
        return np.abs((base - point) + offset) ** expo
    return func


def test_endpoint_singularities():
    """∫_0^1 x^e dx = 1/(e+1) aun con e cercano a −1."""
    res = integrate_panels(_power(-0.5), 0.0, 1.0, singular=[(0.0, -0.5)])
    assert res.value == pytest.approx(2.0, rel=1e-12)
    res = integrate_panels(_power(-0.9), 0.0, 1.0, singular=[(0.0, -0.9)])
    assert res.value == pytest.approx(10.0, rel=1e-10)


def test_interior_singularity():
    """∫_{−1}^{2} |x|^{−1/3} dx = 1.5·(1 + 2^{2/3})."""
    res = integrate_panels(_power(-1.0 / 3.0), -1.0, 2.0, singular=[(0.0, -1.0 / 3.0)])
    assert res.value == pytest.approx(1.5 * (1.0 + 2.0 ** (2.0 / 3.0)), rel=1e-10)


def test_smooth_integrand_and_reversed_limits():
    def cosine(base, offset):
        return np.cos(base + offset)

    res = integrate_panels(cosine, 0.0, math.pi / 2)
    assert res.value == pytest.approx(1.0, rel=1e-12)
    assert res.n_panels >= 1
    back = integrate_panels(cosine, math.pi / 2, 0.0)
    assert back.value == pytest.approx(-1.0, rel=1e-12)
    assert integrate_panels(cosine, 1.0, 1.0).value == 0.0


def test_breakpoints_handle_jumps():
    """Un salto en un breakpoint se integra sin refinamiento excesivo."""
    def step(base, offset):
        return np.where(base + offset > 0.3, 1.0, 0.0)

    res = integrate_panels(step, 0.0, 1.0, breakpoints=[0.3])
    assert res.value == pytest.approx(0.7, rel=1e-12)


def test_tail_integral():
    """∫_1^∞ x^{−2} dx = 1 y ∫_2^∞ x^{−3/2} dx = √2."""
    assert integrate_tail(lambda x: x ** -2.0, 1.0, -2.0).value == pytest.approx(1.0, rel=1e-12)
    assert integrate_tail(lambda x: x ** -1.5, 2.0, -1.5).value == pytest.approx(math.sqrt(2.0), rel=1e-10)


def test_tail_rejects_non_integrable_decay():
    with pytest.raises(QuadratureError):
        integrate_tail(lambda x: 1.0 / x, 1.0, -1.0)
    with pytest.raises(QuadratureError):
        integrate_tail(lambda x: x ** -2.0, 0.0, -2.0)


def test_panel_budget_exhausted():
    """Con max_panels = 1 un integrando oscilante no converge."""
    def wave(base, offset):
        return np.sin(50.0 * (base + offset))

    with pytest.raises(QuadratureError) as excinfo:
        integrate_panels(wave, 0.0, 10.0, max_panels=1)
    assert excinfo.value.operation == 'integrate_panels'


def test_infinite_limits_rejected():
    with pytest.raises(QuadratureError):
        integrate_panels(_power(1.0), 0.0, math.inf)
