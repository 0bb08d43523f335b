"""Quadrature of global quantities: energy, volume, Minkowski residuals,
the Heintze-Karcher gap and integrated curvature identities.

Sums go through ``math.fsum`` so reductions are compensated and independent
of evaluation order.
"""

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .anisotropy import ConstantAnisotropy
from .hypersurface import geometry_jet, make_grid, mean_curvatures

ORIENTATION_NOTE = "inner unit normal; F evaluated at the inner normal"


class PreconditionError(ValueError):
    """A required hypothesis (e.g. H_F > 0) fails on the sampling grid."""


def integrate(values, jet, grid):
    return math.fsum(np.asarray(values * jet.area_weight * grid.weights, dtype=float).tolist())


def _abs_integral(terms, jet, grid):
    return integrate(sum(np.abs(t) for t in terms), jet, grid)


def surface_area(surface, grid):
    jet = geometry_jet(surface, ConstantAnisotropy(surface.dimension, 1.0), grid.nodes, gradient=False)
    return integrate(np.ones(len(grid)), jet, grid)


def anisotropic_energy(surface, F, grid):
    """Integral of F(nu) over the surface, nu the surface's selected normal."""
    jet = geometry_jet(surface, F, grid.nodes, gradient=False)
    return integrate(jet.f_value, jet, grid)


def enclosed_volume(surface, grid):
    """(1/(n+1)) * integral of <x, nu_out> dA; always with the outward normal."""
    cj = surface.chart(grid.nodes)
    g = np.einsum("nid,njd->nij", cj.xu, cj.xu)
    dA = np.sqrt(np.linalg.det(g)) * grid.weights
    p = np.einsum("nd,nd->n", cj.x, cj.normal)
    return math.fsum((p * dA).tolist()) / surface.ambient_dim


def _inner(surface):
    return surface if surface.orientation == "inner" else surface.with_orientation("inner")


def minkowski_integrands(jet, r):
    Hr = jet.mean_curvatures
    return Hr[:, r] * jet.f_value, Hr[:, r + 1] * jet.support


def minkowski_residual(surface, F, grid, r, jet=None):
    """(raw, normalized) value of integral (H_r F(nu) + H_{r+1} <x, nu>) dA.

    Evaluated with the surface's own orientation; the identity holds for
    either choice.  The normalization is the integral of |H_r F(nu)|.
    """
    n = surface.dimension
    if not 0 <= r <= n - 1:
        raise ValueError(f"Minkowski index r must lie in 0..{n - 1}")
    if jet is None:
        jet = geometry_jet(surface, F, grid.nodes, gradient=False)
    a, b = minkowski_integrands(jet, r)
    raw = integrate(a + b, jet, grid)
    scale = integrate(np.abs(a), jet, grid)
    return raw, (abs(raw) / scale if scale > 0 else abs(raw))


@dataclass
class HKResult:
    gap: float
    hk_integral: float  # n * integral F(nu)/H_F dA
    volume: float
    min_hf: float


def hk_terms(surface, F, grid):
    """Heintze-Karcher quantities with the inner normal; raises if H_F <= 0 somewhere."""
    s = _inner(surface)
    jet = geometry_jet(s, F, grid.nodes, gradient=False)
    if np.any(jet.hf <= 0):
        k = int(np.argmin(jet.hf))
        raise PreconditionError(
            f"anisotropic mean curvature must be positive: H_F = {jet.hf[k]:.6g} "
            f"at chart point {grid.nodes[k].tolist()}"
        )
    n = surface.dimension
    q = n * integrate(jet.f_value / jet.hf, jet, grid)
    V = enclosed_volume(s, grid)
    return HKResult(q - (n + 1) * V, q, V, float(jet.hf.min()))


def hk_gap(surface, F, grid):
    """n * integral F(nu)/H_F dA - (n+1) V; non-negative for embedded surfaces."""
    return hk_terms(surface, F, grid).gap


@dataclass
class IdentityResiduals:
    scalar: float
    vector: list
    support: float
    scalar_normalized: float
    vector_normalized: float
    support_normalized: float


def identity_integrands(jet):
    """Per-node integrands of the three divergence-form curvature identities.

    Returns ``(terms_scalar, terms_vector, terms_support)``; each is a tuple of
    summands whose total integrates to zero on a closed surface.
    """
    trAS2 = jet.tr_as2
    scalar = (jet.tr_sf2, -trAS2 * jet.f_value, -np.einsum("ni,ni->n", jet.grad_hf, jet.f_gradient))
    vector = (trAS2[:, None] * jet.normal, jet.grad_hf_ambient)
    support = (
        trAS2 * jet.support,
        jet.hf,
        np.einsum("nd,nd->n", jet.position, jet.grad_hf_ambient),
    )
    return scalar, vector, support


def identity_residuals(surface, F, grid, jet=None):
    """Integrated forms of the F-Laplacian identities for F(nu), nu and p.

    Each residual is also reported divided by the sum of the integrals of the
    absolute values of its summands.
    """
    if jet is None:
        jet = geometry_jet(surface, F, grid.nodes)
    sc, vec, sup = identity_integrands(jet)
    s_raw = integrate(sum(sc), jet, grid)
    s_norm = abs(s_raw) / max(_abs_integral(sc, jet, grid), np.finfo(float).tiny)
    v_raw = [integrate(sum(t[:, k] for t in vec), jet, grid) for k in range(jet.normal.shape[1])]
    v_abs = integrate(sum(np.linalg.norm(t, axis=1) for t in vec), jet, grid)
    v_norm = float(np.linalg.norm(v_raw)) / max(v_abs, np.finfo(float).tiny)
    p_raw = integrate(sum(sup), jet, grid)
    p_norm = abs(p_raw) / max(_abs_integral(sup, jet, grid), np.finfo(float).tiny)
    return IdentityResiduals(s_raw, v_raw, p_raw, s_norm, v_norm, p_norm)


def garding_margins(lam):
    """Margins of H_{r-1} >= H_r^((r-1)/r) and H_1 >= H_r^(1/r), r = 1..n, per node."""
    lam = np.atleast_2d(lam)
    H = mean_curvatures(lam)
    n = lam.shape[-1]
    out = []
    for r in range(1, n + 1):
        out.append(H[:, r - 1] - H[:, r] ** ((r - 1) / r))
        out.append(H[:, 1] - H[:, r] ** (1.0 / r))
    return np.stack(out, axis=-1)


@dataclass
class GardingResult:
    passed: bool
    worst_margin: float
    nodes_checked: int


def garding_check(surface, F, grid, tol=1e-10):
    """Check the Garding/Maclaurin chains at every node with all lambda_i > 0."""
    lam = geometry_jet(surface, F, grid.nodes, gradient=False).aniso_curvatures
    ok = np.all(lam > 0, axis=1)
    if not np.any(ok):
        return GardingResult(True, math.inf, 0)
    worst = float(garding_margins(lam[ok]).min())
    return GardingResult(worst >= -tol, worst, int(ok.sum()))


@dataclass
class IntegralReport:
    area: float
    energy: float
    volume: float
    minkowski_residuals: list
    minkowski_normalized: list
    hk_gap: float = None
    hk_integral: float = None
    identity_residuals: dict = None
    min_hf: float = None
    resolution: list = field(default_factory=list)
    orientation: str = ORIENTATION_NOTE

    def to_dict(self):
        return asdict(self)


def integral_report(surface, F, grid=None):
    """Every global quantity on one grid; HK entries stay None if H_F <= 0 somewhere."""
    if grid is None:
        grid = make_grid(surface)
    s = _inner(surface)
    jet = geometry_jet(s, F, grid.nodes)
    n = surface.dimension
    mink = [minkowski_residual(s, F, grid, r, jet=jet) for r in range(n)]
    ids = identity_residuals(s, F, grid, jet=jet)
    report = IntegralReport(
        area=integrate(np.ones(len(grid)), jet, grid),
        energy=integrate(jet.f_value, jet, grid),
        volume=enclosed_volume(s, grid),
        minkowski_residuals=[m[0] for m in mink],
        minkowski_normalized=[m[1] for m in mink],
        identity_residuals=asdict(ids),
        min_hf=float(jet.hf.min()),
        resolution=list(grid.resolution),
    )
    if report.min_hf > 0:
        report.hk_integral = n * integrate(jet.f_value / jet.hf, jet, grid)
        report.hk_gap = report.hk_integral - (n + 1) * report.volume
    return report


def write_integrands_csv(surface, F, grid, path):
    """Per-node integrands: u_*, quadrature weight, area weight, Minkowski r-integrands,
    identity integrands (scalar, vector_*, support)."""
    s = _inner(surface)
    jet = geometry_jet(s, F, grid.nodes)
    n = surface.dimension
    d = surface.ambient_dim
    header = [f"u{i}" for i in range(n)] + ["weight", "area_weight"]
    cols = [grid.nodes, grid.weights[:, None], jet.area_weight[:, None]]
    for r in range(n):
        a, b = minkowski_integrands(jet, r)
        header.append(f"minkowski{r}")
        cols.append((a + b)[:, None])
    sc, vec, sup = identity_integrands(jet)
    header += ["identity_scalar"] + [f"identity_vector{k}" for k in range(d)] + ["identity_support"]
    cols += [sum(sc)[:, None], sum(vec), sum(sup)[:, None]]
    data = np.hstack(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in data:
            w.writerow([repr(float(v)) for v in row])
