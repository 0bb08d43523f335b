"""Parametric closed hypersurfaces and their pointwise anisotropic geometry.

Charts return the position, its chart derivatives, the outward unit normal
and the chart derivatives of that normal.  Everything else is assembled in a
single orthonormal basis of the common tangent plane ``nu^perp``, which is
both ``T_x Sigma`` and ``T_nu S^n``.

Sign conventions: ``S = -d nu`` and ``H = tr(S)/n`` for the selected normal,
``S_F = A_F(nu) S`` and ``H_F = tr(S_F)``.
"""

import csv
import dataclasses
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np
from scipy.spatial import ConvexHull

from .anisotropy import AnisotropyError, HarmonicAnisotropy, anisotropy_from_config
from .harmonics import harmonic_sum
from .sphere import circle_param, sample_sphere, sphere_param, tangent_frame

DEFAULT_RESOLUTION = {1: (512,), 2: (64, 128)}
GRAD_STEP = 1e-3
METRIC_FLOOR = 1e-10


class DegenerateChartError(ValueError):
    """The chart fails to be an immersion at a requested point."""


@dataclass(frozen=True)
class ChartJet:
    x: np.ndarray  # (N, d)
    xu: np.ndarray  # (N, n, d)
    normal: np.ndarray  # outward unit normal, (N, d)
    normal_u: np.ndarray  # (N, n, d)


def normal_from_tangents(xu):
    """Unit normal from chart tangents; outward for positively oriented charts."""
    if xu.shape[-2] == 1:
        t = xu[..., 0, :]
        nu = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    elif xu.shape[-2] == 2:
        nu = np.cross(xu[..., 0, :], xu[..., 1, :])
    else:
        raise ValueError("normals are implemented for curves and surfaces")
    return nu / np.linalg.norm(nu, axis=-1, keepdims=True)


def weingarten_normal_derivative(xu, xuu, nu):
    """nu_i = -h_ij g^jk x_k with h_ij = <x_ij, nu>."""
    g = np.einsum("...id,...jd->...ij", xu, xu)
    h = np.einsum("...ijd,...d->...ij", xuu, nu)
    c = -np.linalg.solve(g, h)  # symmetric g, h: (g^-1 h)^T = h g^-1
    return np.einsum("...ji,...jd->...id", c, xu)


@dataclass(frozen=True, kw_only=True)
class ParametricSurface:
    """Closed oriented hypersurface given by a single periodic chart."""

    dimension: int
    orientation: str = "inner"
    center: tuple = None

    param_kind = "sphere"
    _normal_sign = 1.0
    metric_floor = METRIC_FLOOR

    def __post_init__(self):
        if self.orientation not in ("inner", "outer"):
            raise ValueError("orientation must be 'inner' or 'outer'")
        if self.dimension not in (1, 2):
            raise ValueError("built-in charts exist for curves (n=1) and surfaces (n=2)")

    @property
    def ambient_dim(self):
        return self.dimension + 1

    @property
    def offset(self):
        if self.center is None:
            return np.zeros(self.ambient_dim)
        return np.asarray(self.center, dtype=float)

    @property
    def sign(self):
        return -1.0 if self.orientation == "inner" else 1.0

    def with_orientation(self, orientation):
        return dataclasses.replace(self, orientation=orientation)

    def translated(self, offset):
        return dataclasses.replace(self, center=tuple((self.offset + np.asarray(offset, float)).tolist()))

    def embedding(self, u):
        """Position and first/second chart derivatives, without translation."""
        raise NotImplementedError

    def chart(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        x, xu, xuu = self.embedding(u)
        nu = self._normal_sign * normal_from_tangents(xu)
        nu_u = weingarten_normal_derivative(xu, xuu, nu)
        return ChartJet(x + self.offset, xu, nu, nu_u)

    def to_config(self):
        raise NotImplementedError


def _sphere_embedding(u, dim):
    if dim == 1:
        return circle_param(u[:, 0])
    return sphere_param(u[:, 0], u[:, 1])


@dataclass(frozen=True, kw_only=True)
class RadialGraph(ParametricSurface):
    """x(w) = center + r(w) w with r = radius + harmonic perturbation."""

    radius: float = 1.0
    coefficients: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        # reuse the harmonic-family validation of modes
        HarmonicAnisotropy(self.dimension, self.coefficients, self.radius)
        if np.any(self.radial(sample_sphere(self.ambient_dim, 64)) <= 0):
            raise ValueError("radial graph requires r > 0 everywhere")

    @cached_property
    def radial(self):
        return harmonic_sum(self.ambient_dim, self.coefficients, self.radius)

    def embedding(self, u):
        w, wu, wuu = _sphere_embedding(u, self.dimension)
        r, gr, Hr = self.radial.jet(w)
        ru = np.einsum("nd,nid->ni", gr, wu)
        ruu = np.einsum("nid,nde,nje->nij", wu, Hr, wu) + np.einsum("nd,nijd->nij", gr, wuu)
        x = r[:, None] * w
        xu = ru[:, :, None] * w[:, None, :] + r[:, None, None] * wu
        xuu = (
            ruu[:, :, :, None] * w[:, None, None, :]
            + ru[:, :, None, None] * wu[:, None, :, :]
            + ru[:, None, :, None] * wu[:, :, None, :]
            + r[:, None, None, None] * wuu
        )
        return x, xu, xuu

    def to_config(self):
        if self.dimension == 1:
            coeffs = [{"kind": kd, "k": k, "a": a} for (kd, k), a in self.coefficients]
        else:
            coeffs = [{"l": l, "m": m, "a": a} for (l, m), a in self.coefficients]
        return {"chart": "radial_graph", "dimension": self.dimension, "radius": self.radius,
                "coefficients": coeffs, "center": list(self.offset), "orientation": self.orientation}


def unit_sphere(dimension=2, orientation="inner"):
    return RadialGraph(dimension=dimension, orientation=orientation)


@dataclass(frozen=True, kw_only=True)
class Ellipsoid(ParametricSurface):
    axes: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        super().__post_init__()
        if len(self.axes) != self.ambient_dim or min(self.axes) <= 0:
            raise ValueError(f"ellipsoid needs {self.ambient_dim} positive semi-axes")

    def embedding(self, u):
        a = np.asarray(self.axes, dtype=float)
        w, wu, wuu = _sphere_embedding(u, self.dimension)
        return w * a, wu * a, wuu * a

    def to_config(self):
        return {"chart": "ellipsoid", "dimension": self.dimension, "axes": list(self.axes),
                "center": list(self.offset), "orientation": self.orientation}


@dataclass(frozen=True, kw_only=True)
class Torus(ParametricSurface):
    """Torus of revolution about the z axis; chart (u, v) in [0, 2pi)^2."""

    dimension: int = 2
    R: float = 2.0
    rho: float = 0.5

    param_kind = "torus"

    def __post_init__(self):
        super().__post_init__()
        if self.dimension != 2 or not 0 < self.rho < self.R:
            raise ValueError("torus needs n = 2 and 0 < rho < R")

    def embedding(self, u):
        a, b = u[:, 0], u[:, 1]
        ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
        z = np.zeros_like(a)
        q = self.R + self.rho * cb
        x = np.stack([q * ca, q * sa, self.rho * sb], axis=-1)
        x_a = np.stack([-q * sa, q * ca, z], axis=-1)
        x_b = np.stack([-self.rho * sb * ca, -self.rho * sb * sa, self.rho * cb], axis=-1)
        x_aa = np.stack([-q * ca, -q * sa, z], axis=-1)
        x_ab = np.stack([self.rho * sb * sa, -self.rho * sb * ca, z], axis=-1)
        x_bb = np.stack([-self.rho * cb * ca, -self.rho * cb * sa, -self.rho * sb], axis=-1)
        xu = np.stack([x_a, x_b], axis=-2)
        xuu = np.stack([np.stack([x_aa, x_ab], axis=-2), np.stack([x_ab, x_bb], axis=-2)], axis=-3)
        return x, xu, xuu

    def to_config(self):
        return {"chart": "torus", "dimension": 2, "R": self.R, "rho": self.rho,
                "center": list(self.offset), "orientation": self.orientation}


def outward_wulff_map(F, omega, orientation):
    """Wulff map, and its Jacobian, of the anisotropy seen from the outward normal.

    With the inner normal F is evaluated at -omega, so the relevant Wulff map
    is that of z -> F(-z), namely -phi(-omega).  For even F both coincide.
    """
    if orientation == "inner":
        _, grad, hess = F.ambient(-omega)
        return -grad, hess
    _, grad, hess = F.ambient(omega)
    return grad, hess


@dataclass(frozen=True, kw_only=True)
class WulffHomothety(ParametricSurface):
    """Homothetic copy of the Wulff shape, parametrized over the sphere.

    Outer orientation: x(w) = center + scale * phi(w).  Inner orientation uses
    the Wulff shape of z -> F(-z) so that the surface is anisotropically
    umbilic with lambda = 1/scale (identical for even F).  The outward normal
    at the image of w is w itself; tests confirm this against the normal built
    from the chart tangents.
    """

    F: object = None
    scale: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.F is None or self.F.dimension != self.dimension:
            raise ValueError("Wulff homothety needs an anisotropy of matching dimension")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def chart(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        w, wu, _ = _sphere_embedding(u, self.dimension)
        grad, hess = outward_wulff_map(self.F, w, self.orientation)
        x = self.scale * grad
        xu = self.scale * np.einsum("nde,nie->nid", hess, wu)
        return ChartJet(x + self.offset, xu, w, wu)

    def to_config(self):
        return {"chart": "wulff_homothety", "dimension": self.dimension, "scale": self.scale,
                "center": list(self.offset), "orientation": self.orientation}


def surface_from_config(cfg, F=None):
    kind = cfg.get("chart")
    common = {"orientation": cfg.get("orientation", "inner")}
    if cfg.get("center") is not None:
        common["center"] = tuple(float(c) for c in cfg["center"])
    if kind in ("sphere", "circle"):
        n = 1 if kind == "circle" else int(cfg.get("dimension", 2))
        return RadialGraph(dimension=n, radius=float(cfg.get("radius", 1.0)), **common)
    if kind == "radial_graph":
        n = int(cfg.get("dimension", 2))
        coeffs = []
        for c in cfg.get("coefficients", []):
            if n == 1:
                coeffs.append(((c.get("kind", "cos"), int(c["k"])), float(c["a"])))
            else:
                coeffs.append(((int(c["l"]), int(c["m"])), float(c["a"])))
        return RadialGraph(dimension=n, radius=float(cfg.get("radius", 1.0)), coefficients=tuple(coeffs), **common)
    if kind == "ellipsoid":
        axes = tuple(float(a) for a in cfg["axes"])
        return Ellipsoid(dimension=len(axes) - 1, axes=axes, **common)
    if kind == "torus":
        return Torus(R=float(cfg.get("R", 2.0)), rho=float(cfg.get("rho", 0.5)), **common)
    if kind == "wulff_homothety":
        aniso = anisotropy_from_config(cfg["anisotropy"]) if "anisotropy" in cfg else F
        if aniso is None:
            raise AnisotropyError("wulff_homothety needs an anisotropy")
        return WulffHomothety(dimension=aniso.dimension, F=aniso, scale=float(cfg.get("scale", 1.0)), **common)
    raise ValueError(f"unknown chart {kind!r}")


@dataclass(frozen=True)
class QuadratureGrid:
    """Chart nodes with quadrature weights for the coordinate measure du."""

    nodes: np.ndarray
    weights: np.ndarray
    resolution: tuple
    kind: str

    def __len__(self):
        return len(self.weights)


def make_grid(surface, resolution=None):
    """Trapezoid on S^1; Gauss-Legendre in cos(theta) x trapezoid in phi on S^2;
    trapezoid x trapezoid on the torus."""
    n = surface.dimension
    if resolution is None:
        resolution = DEFAULT_RESOLUTION[n]
    resolution = tuple(int(r) for r in np.atleast_1d(resolution))
    if n == 1:
        (N,) = resolution
        t = 2.0 * np.pi * np.arange(N) / N
        return QuadratureGrid(t[:, None], np.full(N, 2.0 * np.pi / N), resolution, "circle")
    if len(resolution) == 1:
        resolution = (resolution[0], 2 * resolution[0])
    Nt, Np = resolution
    phi = 2.0 * np.pi * np.arange(Np) / Np
    if surface.param_kind == "torus":
        a = 2.0 * np.pi * np.arange(Nt) / Nt
        A, B = np.meshgrid(a, phi, indexing="ij")
        w = np.full(A.size, (2.0 * np.pi / Nt) * (2.0 * np.pi / Np))
        return QuadratureGrid(np.stack([A.ravel(), B.ravel()], -1), w, resolution, "torus")
    z, wz = np.polynomial.legendre.leggauss(Nt)
    theta = np.arccos(z[::-1])
    wt = wz[::-1] / np.sin(theta)  # dz = sin(theta) dtheta
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.repeat(wt, Np) * (2.0 * np.pi / Np)
    return QuadratureGrid(np.stack([T.ravel(), P.ravel()], -1), W, resolution, "sphere")


@dataclass(frozen=True)
class GeometryJet:
    """Pointwise geometry at a batch of chart points (leading axis = node)."""

    parameter: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    area_weight: np.ndarray
    frame: np.ndarray
    tangents: np.ndarray  # chart tangents x_i in ambient coordinates
    shape_operator: np.ndarray
    aniso_tensor: np.ndarray  # A_F(nu) in the frame
    aniso_operator: np.ndarray
    aniso_curvatures: np.ndarray
    mean_curvatures: np.ndarray
    hf: np.ndarray
    f_value: np.ndarray
    f_gradient: np.ndarray  # DF at nu, frame coordinates
    support: np.ndarray
    grad_hf: np.ndarray = None  # frame coordinates
    grad_hf_ambient: np.ndarray = None

    @property
    def mean_curvature(self):
        """Classical H = -tr(d nu)/n for the selected normal."""
        n = self.shape_operator.shape[-1]
        return np.trace(self.shape_operator, axis1=-2, axis2=-1) / n

    @property
    def tr_sf2(self):
        sf = self.aniso_operator
        return np.einsum("...ij,...ji->...", sf, sf)

    @property
    def tr_as2(self):
        s = self.shape_operator
        return np.einsum("...ij,...jk,...ki->...", self.aniso_tensor, s, s)


def aniso_eigenvalues(S, A):
    """Real eigenvalues of A S via the similar symmetric matrix A^1/2 S A^1/2, ascending."""
    S = np.asarray(S, dtype=float)
    A = np.asarray(A, dtype=float)
    w, U = np.linalg.eigh(0.5 * (A + np.swapaxes(A, -1, -2)))
    if np.any(w <= 0):
        raise ValueError("A must be positive definite")
    root = (U * np.sqrt(w)[..., None, :]) @ np.swapaxes(U, -1, -2)
    sym = 0.5 * (S + np.swapaxes(S, -1, -2))
    return np.linalg.eigvalsh(root @ sym @ root)


def mean_curvatures(lam):
    """(H_0, ..., H_n) with H_r = sigma_r / C(n, r)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = [np.ones(lam.shape[:-1])] + [np.zeros(lam.shape[:-1]) for _ in range(n)]
    for j in range(n):
        for r in range(j + 1, 0, -1):
            e[r] = e[r] + lam[..., j] * e[r - 1]
    return np.stack([e[r] / comb(n, r) for r in range(n + 1)], axis=-1)


def _frame_geometry(surface, F, u):
    u = np.atleast_2d(np.asarray(u, dtype=float))
    cj = surface.chart(u)
    s = surface.sign
    nu, nu_u = s * cj.normal, s * cj.normal_u
    g = np.einsum("nid,njd->nij", cj.xu, cj.xu)
    detg = np.linalg.det(g)
    if np.any(detg < surface.metric_floor):
        k = int(np.argmin(detg))
        raise DegenerateChartError(f"metric determinant {detg[k]:.3e} at chart point {u[k].tolist()}")
    E = tangent_frame(nu)
    X = np.einsum("nid,nkd->nik", cj.xu, E)  # row i: x_i in frame coordinates
    Nu = np.einsum("nid,nkd->nik", nu_u, E)
    # d nu (x_i) = nu_i  =>  D X^T = Nu^T  =>  D = (X^-1 Nu)^T
    S = -np.swapaxes(np.linalg.solve(X, Nu), -1, -2)
    fval, fgrad, fhess = F.ambient(nu)
    if np.any(fval <= 0):
        raise AnisotropyError("F must be positive on the sphere")
    A = E @ fhess @ np.swapaxes(E, -1, -2)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    return cj, u, nu, nu_u, g, detg, E, S, A, fval, fgrad, fhess


def geometry_jet(surface, F, u, gradient=True, step=GRAD_STEP):
    """Full pointwise geometry at chart points ``u`` (shape ``(N, n)`` or ``(n,)``)."""
    cj, u, nu, nu_u, g, detg, E, S, A, fval, fgrad, _ = _frame_geometry(surface, F, u)
    SF = A @ S
    lam = aniso_eigenvalues(S, A)
    Hr = mean_curvatures(lam)
    jet = GeometryJet(
        parameter=u,
        position=cj.x,
        normal=nu,
        area_weight=np.sqrt(detg),
        frame=E,
        tangents=cj.xu,
        shape_operator=S,
        aniso_tensor=A,
        aniso_operator=SF,
        aniso_curvatures=lam,
        mean_curvatures=Hr,
        hf=np.trace(SF, axis1=-2, axis2=-1),
        f_value=fval,
        f_gradient=np.einsum("nid,nd->ni", E, fgrad),
        support=np.einsum("nd,nd->n", cj.x, nu),
    )
    if gradient:
        amb = _grad_hf_ambient(surface, F, u, g, cj.xu, step)
        jet = dataclasses.replace(jet, grad_hf_ambient=amb, grad_hf=np.einsum("nid,nd->ni", E, amb))
    return jet


def hf_field(surface, F, u):
    """H_F = tr(A_F S) only."""
    _, _, _, _, _, _, _, S, A, _, _, _ = _frame_geometry(surface, F, u)
    return np.einsum("nij,nji->n", A, S)


def _grad_hf_ambient(surface, F, u, g, xu, step):
    n = surface.dimension
    dH = np.empty((len(u), n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        f = [hf_field(surface, F, u + k * e) for k in (2, 1, -1, -2)]
        dH[:, i] = (-f[0] + 8.0 * f[1] - 8.0 * f[2] + f[3]) / (12.0 * step)
    c = np.linalg.solve(g, dH[..., None])[..., 0]
    return np.einsum("ni,nid->nd", c, xu)


def grad_hf(surface, F, u, step=GRAD_STEP):
    """Tangential gradient of H_F in the orthonormal frame (fourth-order central differences)."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    cj = surface.chart(u)
    g = np.einsum("nid,njd->nij", cj.xu, cj.xu)
    amb = _grad_hf_ambient(surface, F, u, g, cj.xu, step)
    E = tangent_frame(surface.sign * cj.normal)
    return np.einsum("nid,nd->ni", E, amb)


def div_wulff_tangent(surface, F, u):
    """Intrinsic divergence of the tangential field DF|_nu along the surface.

    Uses d(DF o nu)(x_i) = Hess Ft(nu) nu_i - <DF, nu_i> nu - F nu_i and
    div X = g^ij <d X(x_i), x_j>.
    """
    cj, u, nu, nu_u, g, _, _, _, _, fval, fgrad, fhess = _frame_geometry(surface, F, u)
    dF = fgrad - fval[:, None] * nu
    dxi = (
        np.einsum("nde,nie->nid", fhess, nu_u)
        - np.einsum("nd,nid->ni", dF, nu_u)[:, :, None] * nu[:, None, :]
        - fval[:, None, None] * nu_u
    )
    m = np.einsum("nid,njd->nij", dxi, cj.xu)
    return np.einsum("nij,nij->n", np.linalg.inv(g), m)


def hf_divergence_form(surface, F, u):
    """H_F recomputed as -div DF + n H F."""
    jet = geometry_jet(surface, F, u, gradient=False)
    n = surface.dimension
    return -div_wulff_tangent(surface, F, u) + n * jet.mean_curvature * jet.f_value


def umbilicity_defect(surface, F, grid):
    lam = geometry_jet(surface, F, grid.nodes, gradient=False).aniso_curvatures
    spread = lam[:, -1] - lam[:, 0]
    return float(np.max(spread / np.maximum(np.abs(lam[:, 0]), 1e-12)))


@dataclass(frozen=True)
class WulffFit:
    center: np.ndarray
    scale: float
    rms_residual: float


def surface_diameter(points):
    pts = np.asarray(points, dtype=float)
    try:
        pts = pts[ConvexHull(pts).vertices]
    except Exception:  # flat or tiny samples: brute force below is fine
        pass
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijd,ijd->ij", diff, diff))))


def wulff_fit(surface, F, grid):
    """Least-squares fit x ~ center + scale * phi(nu_out) over the grid nodes.

    phi is the orientation-adjusted Wulff map (see ``outward_wulff_map``).
    """
    cj = surface.chart(grid.nodes)
    phi = outward_wulff_map(F, cj.normal, surface.orientation)[0]
    N, d = cj.x.shape
    M = np.zeros((N, d, d + 1))
    M[:, :, :d] = np.eye(d)
    M[:, :, d] = phi
    M = M.reshape(N * d, d + 1)
    if np.linalg.matrix_rank(M) < d + 1:
        raise ValueError("normal field is degenerate; Wulff fit is singular")
    sol, *_ = np.linalg.lstsq(M, cj.x.reshape(-1), rcond=None)
    resid = cj.x - sol[:d] - sol[d] * phi
    rms = np.sqrt(np.mean(np.einsum("nd,nd->n", resid, resid)))
    return WulffFit(sol[:d], float(sol[d]), float(rms / surface_diameter(cj.x)))


JET_COLUMNS = ("u", "x", "normal", "area_weight", "lambda", "H", "hf", "f_value", "support", "grad_hf")


def write_jets_csv(jet, path):
    """One row per node; column order u_*, x_*, nu_*, area_weight, lambda_*, H_0..H_n,
    hf, f_value, support, grad_hf_* (frame coordinates)."""
    n = jet.parameter.shape[1]
    d = jet.position.shape[1]
    header = [f"u{i}" for i in range(n)] + [f"x{i}" for i in range(d)] + [f"nu{i}" for i in range(d)]
    header += ["area_weight"] + [f"lambda{i}" for i in range(n)] + [f"H{r}" for r in range(n + 1)]
    header += ["hf", "f_value", "support"]
    cols = [jet.parameter, jet.position, jet.normal, jet.area_weight[:, None], jet.aniso_curvatures,
            jet.mean_curvatures, jet.hf[:, None], jet.f_value[:, None], jet.support[:, None]]
    if jet.grad_hf is not None:
        header += [f"grad_hf{i}" for i in range(n)]
        cols.append(jet.grad_hf)
    data = np.hstack(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in data:
            w.writerow([repr(float(v)) for v in row])
