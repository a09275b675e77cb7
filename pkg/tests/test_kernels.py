"""Backend equivalence and exact conservation of the stencil kernels."""

import numpy as np
import pytest

from pmelab import kernels


needs_compiled = pytest.mark.skipif(
    "compiled" not in kernels.available_backends(),
    reason="compiled kernels not built in this installation")


def _bump_1d(n=201):
    x = np.linspace(-3.0, 3.0, n)
    return np.clip(1.0 - x**2 / 4.0, 0.0, None) ** 2


def _bump_2d(n=61):
    x = np.linspace(-2.0, 2.0, n)
    r2 = x[:, None] ** 2 + x[None, :] ** 2
    return np.exp(-r2)


@needs_compiled
@pytest.mark.parametrize("m", [1.0, 1.5, 2.0, 3.0])
@pytest.mark.parametrize("zero_flux", [True, False])
def test_backends_agree_1d(m, zero_flux):
    ua = _bump_1d()
    ub = ua.copy()
    kernels.advance(ua, m, 0.12, 400, zero_flux, backend="compiled")
    kernels.advance(ub, m, 0.12, 400, zero_flux, backend="reference")
    np.testing.assert_allclose(ua, ub, rtol=1e-13, atol=1e-300)


@needs_compiled
@pytest.mark.parametrize("m", [1.0, 2.0, 2.5])
def test_backends_agree_2d(m):
    ua = _bump_2d()
    ub = ua.copy()
    kernels.advance(ua, m, 0.05, 120, True, backend="compiled")
    kernels.advance(ub, m, 0.05, 120, True, backend="reference")
    np.testing.assert_allclose(ua, ub, rtol=1e-13, atol=1e-300)


@pytest.mark.parametrize("backend", kernels.available_backends())
@pytest.mark.parametrize("dim", [1, 2])
def test_zero_flux_telescopes(backend, dim):
    u = _bump_1d() if dim == 1 else _bump_2d()
    total = u.sum()
    kernels.advance(u, 2.0, 0.1, 300, True, backend=backend)
    assert abs(u.sum() / total - 1.0) < 1e-13


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_zero_value_leaks(backend):
    u = np.ones(51)  # constant state drains through absorbing edges
    total = u.sum()
    kernels.advance(u, 2.0, 0.1, 50, False, backend=backend)
    assert u.sum() < total


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_constant_state_is_steady(backend):
    u = np.full(101, 0.7)
    kernels.advance(u, 2.0, 0.2, 100, True, backend=backend)
    assert np.array_equal(u, np.full(101, 0.7))


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.advance(np.ones(11), 2.0, 0.1, 1, True, backend="gpu")


def test_zero_steps_is_identity():
    u = _bump_1d()
    ref = u.copy()
    kernels.advance(u, 2.0, 0.1, 0, True)
    assert np.array_equal(u, ref)
