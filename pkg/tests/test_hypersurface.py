import numpy as np
import pytest

from wulffkit.anisotropy import ConstantAnisotropy, HarmonicAnisotropy, QuadraticAnisotropy
from wulffkit.hypersurface import (
    Ellipsoid,
    RadialGraph,
    Torus,
    WulffHomothety,
    aniso_eigenvalues,
    geometry_jet,
    grad_hf,
    hf_divergence_form,
    make_grid,
    mean_curvatures,
    normal_from_tangents,
    surface_from_config,
    umbilicity_defect,
    write_jets_csv,
    wulff_fit,
)
from wulffkit.integrals import enclosed_volume, surface_area

from conftest import ELLIPSOID, F_ODD, F_ONE, F_QUAD, F_Y20, PERTURBED, SPHERE, TORUS


def _grid(surface, res=(16, 32)):
    return make_grid(surface, res)


def test_sphere_curvatures_inner():
    jet = geometry_jet(SPHERE, F_ONE, _grid(SPHERE).nodes, gradient=False)
    np.testing.assert_allclose(jet.aniso_curvatures, 1.0, atol=1e-13)
    np.testing.assert_allclose(jet.hf, 2.0, atol=1e-13)
    np.testing.assert_allclose(jet.support, -1.0, atol=1e-14)


def test_circle_curvature():
    c = RadialGraph(dimension=1, radius=2.0)
    jet = geometry_jet(c, ConstantAnisotropy(1, 1.0), make_grid(c).nodes, gradient=False)
    np.testing.assert_allclose(jet.aniso_curvatures[:, 0], 0.5, atol=1e-14)


def test_ellipsoid_gauss_and_mean_curvature():
    a, b, c = ELLIPSOID.axes
    grid = _grid(ELLIPSOID)
    jet = geometry_jet(ELLIPSOID, F_ONE, grid.nodes, gradient=False)
    x, y, z = jet.position.T
    q = x**2 / a**4 + y**2 / b**4 + z**2 / c**4
    K = 1.0 / (a * b * c) ** 2 / q**2
    H = (a * a + b * b + c * c - x * x - y * y - z * z) / (2 * (a * b * c) ** 2 * q**1.5)
    np.testing.assert_allclose(np.linalg.det(jet.shape_operator), K, rtol=1e-12)
    np.testing.assert_allclose(jet.mean_curvature, H, rtol=1e-12)


def test_isotropic_reduction():
    for s in (ELLIPSOID, PERTURBED, TORUS):
        jet = geometry_jet(s, F_ONE, _grid(s).nodes, gradient=False)
        np.testing.assert_allclose(jet.aniso_operator, jet.shape_operator, atol=1e-12)
        np.testing.assert_allclose(jet.hf, 2 * jet.mean_curvature, atol=1e-12)


@pytest.mark.parametrize("surface", [SPHERE, ELLIPSOID, PERTURBED, TORUS], ids=["sphere", "ellipsoid", "perturbed", "torus"])
def test_chart_normal_outward_and_unit(surface):
    cj = surface.chart(_grid(surface).nodes)
    np.testing.assert_allclose(np.linalg.norm(cj.normal, axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(np.einsum("nid,nd->ni", cj.xu, cj.normal), 0, atol=1e-13)
    assert enclosed_volume(surface, _grid(surface)) > 0


def test_torus_area_volume():
    g = make_grid(TORUS, (32, 32))
    assert surface_area(TORUS, g) == pytest.approx(4 * np.pi**2 * 2.0 * 0.5, rel=1e-13)
    assert enclosed_volume(TORUS, g) == pytest.approx(2 * np.pi**2 * 2.0 * 0.25, rel=1e-13)


def test_circle_area_volume():
    c = RadialGraph(dimension=1)
    g = make_grid(c)
    assert surface_area(c, g) == pytest.approx(2 * np.pi, rel=1e-14)
    assert enclosed_volume(c, g) == pytest.approx(np.pi, rel=1e-14)


def test_sphere_area_volume():
    g = _grid(SPHERE)
    assert surface_area(SPHERE, g) == pytest.approx(4 * np.pi, rel=1e-14)
    assert enclosed_volume(SPHERE, g) == pytest.approx(4 * np.pi / 3, rel=1e-14)


@pytest.mark.parametrize("orientation", ["inner", "outer"])
def test_wulff_chart_normal_is_gauss_map_inverse(aniso, orientation):
    W = WulffHomothety(dimension=2, F=aniso, scale=1.3, orientation=orientation)
    grid = _grid(W)
    cj = W.chart(grid.nodes)
    from wulffkit.sphere import sphere_param

    omega = sphere_param(grid.nodes[:, 0], grid.nodes[:, 1])[0]
    np.testing.assert_allclose(normal_from_tangents(cj.xu), omega, atol=1e-12)


@pytest.mark.parametrize("orientation,value", [("inner", 1 / 1.3), ("outer", -1 / 1.3)])
def test_wulff_shape_umbilic(aniso, orientation, value):
    W = WulffHomothety(dimension=2, F=aniso, scale=1.3, orientation=orientation, center=(1.0, 2.0, 3.0))
    jet = geometry_jet(W, aniso, _grid(W).nodes, gradient=False)
    np.testing.assert_allclose(jet.aniso_curvatures, value, atol=1e-12)


def test_scaling_and_translation_covariance():
    u = _grid(ELLIPSOID).nodes
    base = geometry_jet(ELLIPSOID, F_QUAD, u, gradient=False).aniso_curvatures
    big = Ellipsoid(dimension=2, axes=tuple(3 * a for a in ELLIPSOID.axes))
    np.testing.assert_allclose(geometry_jet(big, F_QUAD, u, gradient=False).aniso_curvatures, base / 3, rtol=1e-12)
    moved = ELLIPSOID.translated((0.5, -2.0, 1.0))
    np.testing.assert_allclose(geometry_jet(moved, F_QUAD, u, gradient=False).aniso_curvatures, base, rtol=1e-12)


def test_orientation_flip_even_anisotropy():
    u = _grid(PERTURBED).nodes
    inner = geometry_jet(PERTURBED, F_QUAD, u, gradient=False).aniso_curvatures
    outer = geometry_jet(PERTURBED.with_orientation("outer"), F_QUAD, u, gradient=False).aniso_curvatures
    np.testing.assert_allclose(np.sort(-outer, axis=1), inner, atol=1e-12)


def test_aniso_eigenvalues_match_nonsymmetric_eig():
    rng = np.random.default_rng(0)
    for _ in range(20):
        B = rng.normal(size=(2, 2))
        A = B @ B.T + 0.1 * np.eye(2)
        S = rng.normal(size=(2, 2))
        S = S + S.T
        ref = np.sort(np.linalg.eigvals(A @ S).real)
        np.testing.assert_allclose(aniso_eigenvalues(S, A), ref, atol=1e-12)


def test_mean_curvatures_elementary():
    lam = np.array([[1.0, 2.0, 3.0]])
    np.testing.assert_allclose(mean_curvatures(lam)[0], [1.0, 2.0, 11.0 / 3.0, 6.0])


def test_grad_hf_richardson_stable():
    u = _grid(PERTURBED, (8, 16)).nodes
    g1 = grad_hf(PERTURBED, F_ODD, u, step=2e-3)
    g2 = grad_hf(PERTURBED, F_ODD, u, step=1e-3)
    assert np.max(np.abs(g1 - g2)) < 1e-9 * np.max(np.abs(g2)) + 1e-10


def test_grad_hf_vanishes_on_umbilic_sphere():
    g = grad_hf(SPHERE, F_ONE, _grid(SPHERE, (8, 16)).nodes)
    np.testing.assert_allclose(g, 0, atol=1e-9)


def test_divergence_form_of_hf():
    for s, F in ((ELLIPSOID, F_ODD), (TORUS, F_Y20), (PERTURBED, F_QUAD)):
        u = _grid(s).nodes
        np.testing.assert_allclose(hf_divergence_form(s, F, u), geometry_jet(s, F, u, gradient=False).hf, atol=1e-12)


def test_wulff_fit_recovers_homothety():
    W = WulffHomothety(dimension=2, F=F_ODD, scale=2.0, center=(0.3, -0.2, 0.5))
    fit = wulff_fit(W, F_ODD, _grid(W))
    np.testing.assert_allclose(fit.center, [0.3, -0.2, 0.5], atol=1e-12)
    assert fit.scale == pytest.approx(2.0, abs=1e-12)
    assert fit.rms_residual < 1e-12
    assert umbilicity_defect(W, F_ODD, _grid(W)) < 1e-12


def test_ellipsoid_not_umbilic():
    E = Ellipsoid(dimension=2, axes=(2.0, 1.0, 1.0))
    assert umbilicity_defect(E, F_ONE, _grid(E)) > 0.5
    assert wulff_fit(E, F_ONE, _grid(E)).rms_residual > 0.01


def test_surface_config_roundtrip():
    for s in (SPHERE, ELLIPSOID, PERTURBED, TORUS):
        assert surface_from_config(s.to_config()).to_config() == s.to_config()
    W = WulffHomothety(dimension=2, F=F_Y20, scale=2.0)
    assert surface_from_config(W.to_config(), F_Y20).to_config() == W.to_config()


def test_invalid_surfaces():
    with pytest.raises(ValueError):
        Ellipsoid(dimension=2, axes=(1.0, -1.0, 1.0))
    with pytest.raises(ValueError):
        Torus(R=1.0, rho=2.0)
    with pytest.raises(ValueError):
        RadialGraph(dimension=2, coefficients=(((2, 0), 5.0),))
    with pytest.raises(ValueError):
        surface_from_config({"chart": "klein_bottle"})
    with pytest.raises(ValueError):
        SPHERE.with_orientation("sideways")


def test_jets_csv(tmp_path):
    jet = geometry_jet(SPHERE, F_ONE, _grid(SPHERE, (4, 8)).nodes)
    path = tmp_path / "jets.csv"
    write_jets_csv(jet, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 33
    assert lines[0].startswith("u0,u1,x0,x1,x2,nu0")
