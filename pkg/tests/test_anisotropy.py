import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulffkit.anisotropy import (
    AnisotropyError,
    ConstantAnisotropy,
    ConvexityError,
    HarmonicAnisotropy,
    QuadraticAnisotropy,
    anisotropy_from_config,
    check_convexity,
    dual_norm,
    f_distance,
    require_convex,
    sphere_jet,
    wulff_point,
)
from wulffkit.sphere import sample_sphere, tangent_frame

from conftest import F_ODD, F_ONE, F_QUAD, F_Y20


def cos2(a):
    return HarmonicAnisotropy(1, ((("cos", 2), a),))


def _unit(rng, d, n):
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def test_tangent_frame_orthonormal():
    x = _unit(np.random.default_rng(1), 3, 50)
    E = tangent_frame(x)
    np.testing.assert_allclose(np.einsum("nid,njd->nij", E, E), np.broadcast_to(np.eye(2), (50, 2, 2)), atol=1e-14)
    np.testing.assert_allclose(np.einsum("nid,nd->ni", E, x), 0, atol=1e-14)
    # right-handed (E1, E2, x)
    np.testing.assert_allclose(np.linalg.det(np.concatenate([E, x[:, None]], 1)), 1.0, atol=1e-13)


def test_aniso_operator_is_intrinsic_hessian_plus_f(aniso):
    """A_F(e, e) = d^2/ds^2 F(cos s x + sin s e) at 0 plus F(x), along great circles."""
    rng = np.random.default_rng(2)
    x = _unit(rng, 3, 8)
    jet = sphere_jet(aniso, x)
    h = 1e-3
    for i in range(8):
        for c in ([1, 0], [0, 1], [0.6, 0.8]):
            e = np.array(c) @ jet.frame[i]
            f = [float(aniso(np.cos(s) * x[i] + np.sin(s) * e)) for s in (-2 * h, -h, 0, h, 2 * h)]
            d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
            assert np.array(c) @ jet.operator[i] @ np.array(c) == pytest.approx(d2 + f[2], abs=1e-7)


def test_circle_operator_closed_form():
    t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    x = np.stack([np.cos(t), np.sin(t)], -1)
    jet = sphere_jet(cos2(0.3), x)
    np.testing.assert_allclose(jet.operator[:, 0, 0], 1 - 3 * 0.3 * np.cos(2 * t), atol=1e-13)


def test_wulff_map_decomposition(aniso):
    x = _unit(np.random.default_rng(3), 3, 20)
    phi = wulff_point(aniso, x)
    jet = sphere_jet(aniso, x)
    np.testing.assert_allclose(np.einsum("nd,nd->n", phi, x), jet.value, atol=1e-13)
    np.testing.assert_allclose(np.einsum("nid,nd->ni", jet.frame, phi), jet.gradient, atol=1e-13)


@pytest.mark.parametrize("a,expected,passed", [(0.3, 0.1, True), (0.4, -0.2, False), (0.0, 1.0, True)])
def test_convexity_certificate_circle(a, expected, passed):
    cert = check_convexity(cos2(a))
    assert cert.passed is passed
    assert cert.min_eigenvalue_found == pytest.approx(expected, abs=1e-6)


def test_convexity_sphere_families():
    assert check_convexity(F_ONE).min_eigenvalue_found == pytest.approx(1.0)
    assert check_convexity(F_QUAD).passed
    assert check_convexity(F_ODD).passed
    bad = HarmonicAnisotropy(2, (((2, 0), 1.5),))
    with pytest.raises(ConvexityError, match="convexity"):
        require_convex(bad)


def test_quadratic_wulff_shape_is_ellipse():
    F = QuadraticAnisotropy(1, ((4.0, 0.0), (0.0, 1.0)))
    x = sample_sphere(2, 200)
    p = wulff_point(F, x)
    np.testing.assert_allclose(p[:, 0] ** 2 / 4 + p[:, 1] ** 2, 1.0, atol=1e-12)


def test_dual_norm_closed_forms():
    assert dual_norm(F_ONE, np.array([3.0, 4.0, 0.0])) == pytest.approx(5.0, abs=1e-14)
    F = QuadraticAnisotropy(1, ((4.0, 0.0), (0.0, 1.0)))
    assert dual_norm(F, np.array([1.0, 0.0])) == pytest.approx(0.5, abs=1e-12)
    rng = np.random.default_rng(4)
    Qinv = np.linalg.inv(F_QUAD.matrix)
    for v in rng.normal(size=(10, 3)):
        assert dual_norm(F_QUAD, v) == pytest.approx(np.sqrt(v @ Qinv @ v), rel=1e-12)
    assert dual_norm(F_QUAD, np.zeros(3)) == 0.0


def test_wulff_shape_is_unit_sphere_of_dual_norm():
    for z in _unit(np.random.default_rng(5), 3, 6):
        assert dual_norm(F_ODD, wulff_point(F_ODD, z)) == pytest.approx(1.0, abs=1e-12)


def test_dual_norm_beats_dense_grid():
    v = np.array([0.3, -1.1, 0.7])
    pts = sample_sphere(3, 256)
    dense = np.max(pts @ v / F_ODD(pts))
    val = dual_norm(F_ODD, v)
    assert val >= dense - 1e-14
    assert val == pytest.approx(dense, rel=1e-4)


vec = st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3)


@settings(max_examples=25, deadline=None)
@given(vec, st.floats(0.1, 10))
def test_dual_norm_positively_homogeneous(v, c):
    v = np.array(v)
    assert dual_norm(F_Y20, c * v) == pytest.approx(c * dual_norm(F_Y20, v), rel=1e-10)


def test_euclidean_distance_reduction():
    rng = np.random.default_rng(6)
    for x, y in zip(rng.normal(size=(100, 3)), rng.normal(size=(100, 3))):
        assert abs(f_distance(F_ONE, x, y) - np.linalg.norm(y - x)) < 1e-10


def test_f_distance_asymmetric():
    x, y = np.zeros(3), np.array([0.0, 0.0, 1.0])
    assert abs(f_distance(F_ODD, x, y) - f_distance(F_ODD, y, x)) > 1e-3


def test_config_roundtrip():
    for F in (F_ONE, F_QUAD, F_ODD, cos2(0.3)):
        assert anisotropy_from_config(F.to_config()) == F


def test_scaled():
    x = _unit(np.random.default_rng(7), 3, 5)
    for F in (F_ONE, F_QUAD, F_ODD):
        np.testing.assert_allclose(F.scaled(2.5)(x), 2.5 * F(x), rtol=1e-14)


def test_invalid_anisotropies():
    with pytest.raises(AnisotropyError):
        anisotropy_from_config({"family": "cubic"})
    with pytest.raises(ValueError):
        ConstantAnisotropy(2, -1.0)
    with pytest.raises(ValueError):
        QuadraticAnisotropy(1, ((1.0, 0.0), (0.0, -1.0)))
    F = HarmonicAnisotropy(1, ((("cos", 2), 1.5),))
    assert not check_convexity(F).passed
    with pytest.raises(AnisotropyError):
        sphere_jet(F, np.array([0.0, 1.0]))
