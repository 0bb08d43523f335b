"""Anisotropy functions F on S^n, the Wulff map, the dual norm and F-distance.

All ambient quantities come from the 1-homogeneous extension
``Ft(v) = |v| F(v/|v|)``.  At a unit vector x:

* ``grad Ft(x) = F(x) x + DF(x)`` is the Wulff map,
* ``Hess Ft(x)`` annihilates x and its restriction to ``T_x S^n`` is
  ``A_F = D^2 F + F 1``.

For the harmonic family F is given through a polynomial ``G`` that agrees
with F on the sphere only; the extension derivatives are then

    grad Ft = G w + P grad G
    Hess Ft = P [ (G - w . grad G) I + Hess G ] P / |v|

with ``w = v/|v|`` and ``P = I - w w^T``.  The result does not depend on how
G extends off the sphere.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import minimize

from .harmonics import harmonic_sum
from .sphere import check_unit, sample_sphere, tangent_frame

DEFAULT_RESOLUTION = 64
ASCENT_STEPS = 20


class AnisotropyError(ValueError):
    """F is not admissible at some point (non-positive value)."""


class ConvexityError(ValueError):
    """An operation that requires A_F > 0 was called with a non-convex F."""


@dataclass(frozen=True)
class AnisotropyFunction:
    """Positive function on S^n, evaluated through its 1-homogeneous extension."""

    dimension: int

    @property
    def ambient_dim(self):
        return self.dimension + 1

    def ambient(self, v):
        """Value, gradient and Hessian of the extension at ``v`` (shape ``(..., n+1)``)."""
        raise NotImplementedError

    def __call__(self, z):
        return self.ambient(z)[0]

    def scaled(self, c):
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantAnisotropy(AnisotropyFunction):
    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise AnisotropyError("constant anisotropy must be positive")

    def ambient(self, v):
        v = np.asarray(v, dtype=float)
        r = np.linalg.norm(v, axis=-1)
        w = v / r[..., None]
        eye = np.eye(v.shape[-1])
        proj = eye - w[..., :, None] * w[..., None, :]
        return self.c * r, self.c * w, self.c * proj / r[..., None, None]

    def scaled(self, c):
        return ConstantAnisotropy(self.dimension, self.c * c)

    def to_config(self):
        return {"family": "constant", "dimension": self.dimension, "c": self.c}


@dataclass(frozen=True)
class QuadraticAnisotropy(AnisotropyFunction):
    """F(z) = sqrt(z^T Q z) for symmetric positive-definite Q."""

    Q: tuple = ()

    def __post_init__(self):
        q = self.matrix
        d = self.dimension + 1
        if q.shape != (d, d):
            raise AnisotropyError(f"quadratic anisotropy needs a {d}x{d} matrix")
        if not np.allclose(q, q.T, rtol=0, atol=1e-14):
            raise AnisotropyError("quadratic anisotropy matrix must be symmetric")
        if np.linalg.eigvalsh(q).min() <= 0:
            raise AnisotropyError("quadratic anisotropy matrix must be positive definite")

    @cached_property
    def matrix(self):
        return np.array(self.Q, dtype=float)

    def ambient(self, v):
        v = np.asarray(v, dtype=float)
        qv = v @ self.matrix
        val = np.sqrt(np.einsum("...i,...i->...", v, qv))
        grad = qv / val[..., None]
        hess = (self.matrix - grad[..., :, None] * grad[..., None, :]) / val[..., None, None]
        return val, grad, hess

    def scaled(self, c):
        return QuadraticAnisotropy(self.dimension, tuple(tuple(c * c * x for x in row) for row in self.Q))

    def to_config(self):
        return {"family": "quadratic", "dimension": self.dimension, "Q": [list(r) for r in self.Q]}


@dataclass(frozen=True)
class HarmonicAnisotropy(AnisotropyFunction):
    """F = base + sum a_k psi_k with circular (n=1) or real spherical (n=2) harmonics.

    ``coefficients`` holds ``((kind, k), a)`` pairs on S^1 and ``((l, m), a)``
    pairs on S^2.
    """

    coefficients: tuple = ()
    base: float = 1.0

    def __post_init__(self):
        if self.dimension == 1:
            for (kind, k), _ in self.coefficients:
                if kind not in ("cos", "sin") or not 0 <= k <= 6:
                    raise AnisotropyError(f"unsupported circular mode ({kind}, {k})")
        elif self.dimension == 2:
            for (l, m), _ in self.coefficients:
                if not (0 <= l <= 4 and abs(m) <= l):
                    raise AnisotropyError(f"unsupported spherical mode ({l}, {m})")
        else:
            raise AnisotropyError("harmonic anisotropies exist for n = 1, 2 only")

    @cached_property
    def polynomial(self):
        return harmonic_sum(self.dimension + 1, self.coefficients, self.base)

    def ambient(self, v):
        v = np.asarray(v, dtype=float)
        r = np.linalg.norm(v, axis=-1)
        w = v / r[..., None]
        G, g, H = self.polynomial.jet(w)
        eye = np.eye(v.shape[-1])
        proj = eye - w[..., :, None] * w[..., None, :]
        wg = np.einsum("...i,...i->...", w, g)
        grad = G[..., None] * w + np.einsum("...ij,...j->...i", proj, g)
        inner = (G - wg)[..., None, None] * eye + H
        hess = proj @ inner @ proj / r[..., None, None]
        return r * G, grad, hess

    def scaled(self, c):
        return HarmonicAnisotropy(
            self.dimension, tuple((mode, c * a) for mode, a in self.coefficients), c * self.base
        )

    def to_config(self):
        if self.dimension == 1:
            coeffs = [{"kind": kind, "k": k, "a": a} for (kind, k), a in self.coefficients]
        else:
            coeffs = [{"l": l, "m": m, "a": a} for (l, m), a in self.coefficients]
        return {"family": "harmonic", "dimension": self.dimension, "base": self.base, "coefficients": coeffs}


def anisotropy_from_config(cfg):
    """Build an AnisotropyFunction from its JSON description."""
    family = cfg.get("family")
    if family == "constant":
        return ConstantAnisotropy(int(cfg.get("dimension", 2)), float(cfg.get("c", 1.0)))
    if family == "quadratic":
        Q = tuple(tuple(float(x) for x in row) for row in cfg["Q"])
        return QuadraticAnisotropy(len(Q) - 1, Q)
    if family in ("harmonic", "harmonic_perturbation"):
        n = int(cfg.get("dimension", 2))
        coeffs = []
        for c in cfg.get("coefficients", []):
            if n == 1:
                coeffs.append(((c.get("kind", "cos"), int(c["k"])), float(c["a"])))
            else:
                coeffs.append(((int(c["l"]), int(c["m"])), float(c["a"])))
        return HarmonicAnisotropy(n, tuple(coeffs), float(cfg.get("base", 1.0)))
    raise AnisotropyError(f"unknown anisotropy family {family!r}")


@dataclass(frozen=True)
class SphereJet:
    """F, DF and A_F at sphere point(s); gradient and operator in frame coordinates."""

    point: np.ndarray
    frame: np.ndarray
    value: np.ndarray
    gradient: np.ndarray
    operator: np.ndarray


def sphere_jet(F, x):
    x = check_unit(x)
    val, grad, hess = F.ambient(x)
    if np.any(val <= 0):
        raise AnisotropyError("F must be positive on the sphere")
    E = tangent_frame(x)
    gradient = np.einsum("...id,...d->...i", E, grad)
    operator = E @ hess @ np.swapaxes(E, -1, -2)
    operator = 0.5 * (operator + np.swapaxes(operator, -1, -2))
    return SphereJet(x, E, val, gradient, operator)


def wulff_point(F, x):
    """The Wulff map phi(x) = DF_x + F(x) x."""
    x = check_unit(x)
    return F.ambient(x)[1]


@dataclass(frozen=True)
class ConvexityCertificate:
    grid_resolution: int
    min_eigenvalue_found: float
    argmin_point: np.ndarray = field(compare=False)
    passed: bool


def _min_eig(F, x):
    return np.linalg.eigvalsh(sphere_jet(F, x).operator)[..., 0]


@lru_cache(maxsize=128)
def check_convexity(F, resolution=DEFAULT_RESOLUTION):
    """Sampled certificate of A_F > 0: grid scan plus one local refinement."""
    if resolution < 8:
        raise ValueError("convexity grid resolution must be at least 8")
    pts = sample_sphere(F.ambient_dim, resolution)
    vals = F(pts)
    if np.any(vals <= 0):
        k = int(np.argmin(vals))
        return ConvexityCertificate(resolution, -np.inf, pts[k], False)
    eig = _min_eig(F, pts)
    k = int(np.argmin(eig))
    best, best_pt = float(eig[k]), pts[k]

    E0 = tangent_frame(best_pt)

    def objective(s):
        z = best_pt + s @ E0
        z = z / np.linalg.norm(z)
        return float(_min_eig(F, z))

    # min eigenvalue is only Lipschitz where eigenvalues cross; simplex search copes with that
    res = minimize(
        objective,
        np.zeros(F.dimension),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-15, "initial_simplex": _simplex(F.dimension, np.pi / resolution)},
    )
    if res.fun < best:
        z = best_pt + res.x @ E0
        best, best_pt = float(res.fun), z / np.linalg.norm(z)
    return ConvexityCertificate(resolution, best, best_pt, best > 0)


def _simplex(n, h):
    return np.vstack([np.zeros(n), h * np.eye(n)]) - h / (n + 1)


def require_convex(F, resolution=DEFAULT_RESOLUTION):
    cert = check_convexity(F, resolution)
    if not cert.passed:
        raise ConvexityError(
            f"anisotropy fails the convexity condition: min eigenvalue of A_F = "
            f"{cert.min_eigenvalue_found:.6g} at {np.round(cert.argmin_point, 6).tolist()}"
        )
    return cert


def _ratio_derivatives(F, v, w):
    """<v,w>/Ft(w) with its ambient gradient and Hessian at unit w."""
    f, g, H = F.ambient(w)
    vw = v @ w
    h = vw / f
    grad = v / f - vw * g / f**2
    hess = (
        -(np.outer(v, g) + np.outer(g, v)) / f**2
        - vw * H / f**2
        + 2.0 * vw * np.outer(g, g) / f**3
    )
    return h, grad, hess


def dual_norm(F, v, resolution=DEFAULT_RESOLUTION):
    """F*(v) = sup_{z in S^n} <v, z>/F(z)."""
    require_convex(F, resolution)
    v = np.asarray(v, dtype=float)
    if v.shape != (F.ambient_dim,):
        raise ValueError(f"expected a vector of length {F.ambient_dim}")
    if not np.any(v):
        return 0.0
    pts = sample_sphere(F.ambient_dim, resolution)
    ratios = (pts @ v) / F(pts)
    w = pts[int(np.argmax(ratios))]
    h, grad, hess = _ratio_derivatives(F, v, w)
    for _ in range(ASCENT_STEPS):
        E = tangent_frame(w)
        gt = E @ grad
        Ht = E @ hess @ E.T
        # the ratio is 0-homogeneous, so the restricted Hessian is the Riemannian one
        if np.all(np.linalg.eigvalsh(Ht) < 0):
            step = -np.linalg.solve(Ht, gt)
        else:
            step = gt / max(np.linalg.norm(grad), 1e-300) * (np.pi / resolution)
        if np.linalg.norm(step) < 1e-16:
            break
        for _ in range(40):
            cand = w + step @ E
            cand /= np.linalg.norm(cand)
            hc = (cand @ v) / F(cand)
            if hc >= h:
                break
            step = 0.5 * step
        else:
            break
        w = cand
        h, grad, hess = _ratio_derivatives(F, v, w)
    return float(h)


def f_distance(F, x, y, resolution=DEFAULT_RESOLUTION):
    """d_F(x, y) = F*(y - x); not symmetric in general."""
    return dual_norm(F, np.asarray(y, dtype=float) - np.asarray(x, dtype=float), resolution)
