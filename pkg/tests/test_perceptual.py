import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrsr.perceptual import PerceptualRegularizer, _blur, _kernel1d, _pool, _pool_adjoint


def test_zero_iff_identical(rng):
    reg = PerceptualRegularizer()
    x = rng.random((64, 64, 3))
    assert reg.value(x, x) == 0.0
    y = x.copy()
    y[10, 10, 0] += 0.1
    assert reg.value(x, y) > 0.0


def test_symmetric_nonnegative(rng):
    reg = PerceptualRegularizer()
    a, b = rng.random((48, 40)), rng.random((48, 40))
    assert reg.value(a, b) == pytest.approx(reg.value(b, a), rel=1e-14)
    assert reg.value(a, b) >= 0


def test_blur_is_self_adjoint(rng):
    k = _kernel1d(1.0)
    a, b = rng.random((30, 31)), rng.random((30, 31))
    assert np.sum(_blur(a, k) * b) == pytest.approx(np.sum(a * _blur(b, k)), rel=1e-12)


def test_pool_adjoint(rng):
    a, g = rng.random((31, 30)), rng.random((15, 15))
    assert np.sum(_pool(a) * g) == pytest.approx(np.sum(a * _pool_adjoint(g, a.shape)), rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 4), st.floats(0.5, 2.0), st.integers(0, 1000))
def test_gradient_matches_finite_differences(levels, sigma, seed):
    rng = np.random.default_rng(seed)
    reg = PerceptualRegularizer(levels, sigma)
    x, ref = rng.random((20, 22)), rng.random((20, 22))
    _, grad = reg.value_and_gradient(x, ref)
    d = rng.normal(size=x.shape)
    h = 1e-5
    fd = (reg.value(x + h * d, ref) - reg.value(x - h * d, ref)) / (2 * h)
    assert np.sum(grad * d) == pytest.approx(fd, rel=1e-6, abs=1e-12)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        PerceptualRegularizer(levels=0)
    with pytest.raises(ValueError):
        PerceptualRegularizer(sigma=0.0)
