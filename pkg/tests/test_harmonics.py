import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import sph_harm_y

from wulffkit.harmonics import Polynomial, circular_harmonic, harmonic_sum, spherical_harmonic
from wulffkit.hypersurface import RadialGraph, make_grid
from wulffkit.sphere import sphere_param

MODES = [(l, m) for l in range(5) for m in range(-l, l + 1)]


def _angles(n=40, seed=0):
    rng = np.random.default_rng(seed)
    return np.arccos(rng.uniform(-1, 1, n)), rng.uniform(0, 2 * np.pi, n)


@pytest.mark.parametrize("l,m", MODES)
def test_spherical_harmonic_matches_scipy(l, m):
    theta, phi = _angles()
    x = sphere_param(theta, phi)[0]
    Y = sph_harm_y(l, abs(m), theta, phi)
    # scipy includes the Condon-Shortley phase, undo it
    if m == 0:
        ref = Y.real
    elif m > 0:
        ref = np.sqrt(2) * (-1) ** m * Y.real
    else:
        ref = np.sqrt(2) * (-1) ** m * Y.imag
    np.testing.assert_allclose(spherical_harmonic(l, m)(x), ref, atol=1e-13)


def test_spherical_harmonics_orthonormal():
    grid = make_grid(RadialGraph(dimension=2), (12, 24))
    x = sphere_param(grid.nodes[:, 0], grid.nodes[:, 1])[0]
    w = grid.weights * np.sin(grid.nodes[:, 0])
    Y = np.stack([spherical_harmonic(l, m)(x) for l, m in MODES])
    np.testing.assert_allclose((Y * w) @ Y.T, np.eye(len(MODES)), atol=1e-13)


@pytest.mark.parametrize("k", range(6))
def test_circular_harmonics(k):
    t = np.linspace(0, 2 * np.pi, 37)
    x = np.stack([np.cos(t), np.sin(t)], -1)
    np.testing.assert_allclose(circular_harmonic("cos", k)(x), np.cos(k * t), atol=1e-13)
    np.testing.assert_allclose(circular_harmonic("sin", k)(x), np.sin(k * t), atol=1e-13)


def test_bad_modes():
    with pytest.raises(ValueError):
        spherical_harmonic(2, 3)
    with pytest.raises(ValueError):
        circular_harmonic("tan", 2)
    with pytest.raises(ValueError):
        harmonic_sum(4, [((2, 0), 1.0)])


def test_polynomial_algebra():
    x, y = Polynomial.variable(0, 2), Polynomial.variable(1, 2)
    p = (x + y) ** 3 + (x ** 3) * (-1.0)
    v = np.array([0.7, -1.3])
    assert p(v) == pytest.approx((v[0] + v[1]) ** 3 - v[0] ** 3)
    assert (x * 0.0).terms == {}


coord = st.floats(-1.5, 1.5, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.tuples(coord, coord, coord), st.sampled_from(MODES))
def test_jet_matches_finite_differences(v, mode):
    p = spherical_harmonic(*mode) * 0.7 + 1.0
    v = np.array(v)
    val, grad, hess = p.jet(v)
    h = 1e-5
    E = np.eye(3)
    fd_grad = np.array([(p(v + h * e) - p(v - h * e)) / (2 * h) for e in E])
    fd_hess = np.array([(p.gradient(v + h * e) - p.gradient(v - h * e)) / (2 * h) for e in E])
    np.testing.assert_allclose(grad, fd_grad, atol=1e-7)
    np.testing.assert_allclose(hess, fd_hess, atol=1e-7)
    np.testing.assert_allclose(hess, hess.T, atol=1e-12)
    assert val == pytest.approx(p(v))
