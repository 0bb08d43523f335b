"""Straight-line foliation x + t nu_F(x) by the frozen anisotropic normal, and
the monotone quantity Q(t) = n * integral F(nu_t)/H_F dA_t along it.

Along the foliation the unit normal is preserved: d Phi = (I - t S_F) dx maps
into nu^perp, so the flowed chart reuses the base normal and its derivatives
and only the tangents change.
"""

import csv
import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .anisotropy import require_convex
from .hypersurface import ChartJet, ParametricSurface, div_wulff_tangent, geometry_jet
from .sphere import tangent_frame
from .integrals import integrate

DETG_FLOOR = 1e-8


@dataclass(frozen=True, kw_only=True)
class FlowedSurface(ParametricSurface):
    """The chart u -> x(u) + t phi(nu(u)) with nu the inner normal of ``base``."""

    base: ParametricSurface = None
    F: object = None
    t: float = 0.0

    metric_floor = 0.0  # collapse is judged relative to t = 0 by the flow diagnostics

    @property
    def param_kind(self):
        return self.base.param_kind

    def chart(self, u):
        cj = self.base.chart(u)
        nu = -cj.normal
        _, phi, hess = self.F.ambient(nu)
        x = cj.x + self.t * phi
        # d phi(nu)/du_i = Hess Ft(nu) nu_i with nu_i = -normal_u
        xu = cj.xu - self.t * np.einsum("nde,nie->nid", hess, cj.normal_u)
        return ChartJet(x, xu, cj.normal, cj.normal_u)


@dataclass(frozen=True)
class FlowState:
    t: float
    surface: FlowedSurface
    valid: bool
    min_detg_ratio: float
    min_jacobian: float
    min_hf: float
    reason: str = ""

    @property
    def base(self):
        return self.surface.base


def _signed_jacobian(cj):
    # orientation-preserving iff the tangents stay positively oriented against the base normal
    if cj.xu.shape[1] == 1:
        t = cj.xu[:, 0, :]
        return t[:, 1] * cj.normal[:, 0] - t[:, 0] * cj.normal[:, 1]
    return np.einsum("nd,nd->n", np.cross(cj.xu[:, 0], cj.xu[:, 1]), cj.normal)


def flow_surface(surface, F, t, grid):
    """Flowed surface at time t with its validity diagnostics on ``grid``.

    Validity fails when the metric determinant drops below 1e-8 of its t = 0
    value, when the chart folds over (signed Jacobian <= 0) or when H_F <= 0.
    """
    if surface.orientation != "inner":
        raise ValueError("the foliation is defined with the inner normal")
    if t < 0:
        raise ValueError("flow time must be non-negative")
    require_convex(F)
    flowed = FlowedSurface(dimension=surface.dimension, orientation="inner", base=surface, F=F, t=float(t))
    return _state(flowed, F, grid)


def _state(flowed, F, grid):
    cj0 = flowed.base.chart(grid.nodes)
    cj = flowed.chart(grid.nodes)
    g0 = np.linalg.det(np.einsum("nid,njd->nij", cj0.xu, cj0.xu))
    g = np.linalg.det(np.einsum("nid,njd->nij", cj.xu, cj.xu))
    ratio = float(np.min(g / g0))
    jac = float(np.min(_signed_jacobian(cj) / _signed_jacobian(cj0)))
    if ratio < DETG_FLOOR or jac <= 0:
        return FlowState(flowed.t, flowed, False, ratio, jac, math.nan, "immersion_failure")
    hf = geometry_jet(flowed, F, grid.nodes, gradient=False).hf
    min_hf = float(hf.min())
    if min_hf <= 0:
        return FlowState(flowed.t, flowed, False, ratio, jac, min_hf, "hf_nonpositive")
    return FlowState(flowed.t, flowed, True, ratio, jac, min_hf)


def _q_jet(surface, F, grid):
    jet = geometry_jet(surface, F, grid.nodes, gradient=False)
    if np.any(jet.hf <= 0):
        k = int(np.argmin(jet.hf))
        raise ValueError(f"H_F <= 0 at node {k} (chart point {grid.nodes[k].tolist()})")
    return jet


def q_value(state, F, grid):
    """Q(t) = n * integral of F(nu_t)/H_F over Sigma_t."""
    surface = state.surface if isinstance(state, FlowState) else state
    jet = _q_jet(surface, F, grid)
    return surface.dimension * integrate(jet.f_value / jet.hf, jet, grid)


def q_prime_analytic(state, F, grid):
    """Q'(t) = -n * integral (tr(S_F^2)/H_F^2 + 1) F(nu_t) dA_t."""
    surface = state.surface if isinstance(state, FlowState) else state
    jet = _q_jet(surface, F, grid)
    return -surface.dimension * integrate((jet.tr_sf2 / jet.hf**2 + 1.0) * jet.f_value, jet, grid)


def q_prime_bound(state, F, grid):
    """-(n + 1) * integral F(nu_t) dA_t, the upper bound for Q'.

    Follows from tr(S_F^2) >= H_F^2 / n; equality exactly at anisotropic
    umbilics.  It implies the weaker Q' <= -(1 + 1/n) * integral F dA_t.
    """
    surface = state.surface if isinstance(state, FlowState) else state
    jet = geometry_jet(surface, F, grid.nodes, gradient=False)
    return -(surface.dimension + 1.0) * integrate(jet.f_value, jet, grid)


class Foliation:
    """Sigma_t on a fixed grid with all t-independent data cached.

    Since nu_t = nu and F(nu), A_F(nu) are frozen, only the chart tangents
    x_i + t Hess Ft(nu) nu_i depend on t.  Agrees with ``geometry_jet`` on
    ``FlowedSurface`` (checked in the test suite) at a fraction of the cost.
    """

    def __init__(self, surface, F, grid):
        if surface.orientation != "inner":
            raise ValueError("the foliation is defined with the inner normal")
        self.surface, self.F, self.grid = surface, F, grid
        self.n = surface.dimension
        cj = surface.chart(grid.nodes)
        nu, nu_u = -cj.normal, -cj.normal_u
        fval, _, hess = F.ambient(nu)
        E = tangent_frame(nu)
        self.f = fval
        self.X0 = np.einsum("nid,nkd->nik", cj.xu, E)
        self.V = np.einsum("nde,nie,nkd->nik", hess, nu_u, E)
        self.Nu = np.einsum("nid,nkd->nik", nu_u, E)
        A = E @ hess @ np.swapaxes(E, -1, -2)
        self.A = 0.5 * (A + np.swapaxes(A, -1, -2))
        self.det0 = np.linalg.det(self.X0)

    def geometry(self, t):
        X = self.X0 + t * self.V
        detX = np.linalg.det(X)
        S = -np.swapaxes(np.linalg.solve(X, self.Nu), -1, -2)
        SF = self.A @ S
        return {
            "jacobian": detX / self.det0,
            "area_weight": np.abs(detX),
            "hf": np.trace(SF, axis1=-2, axis2=-1),
            "tr_sf2": np.einsum("nij,nji->n", SF, SF),
        }

    def _integrate(self, values, geo):
        return math.fsum((values * geo["area_weight"] * self.grid.weights).tolist())

    def q(self, t):
        geo = self.geometry(t)
        return self.n * self._integrate(self.f / geo["hf"], geo)

    def jacobian(self, t):
        return np.linalg.det(self.X0 + t * self.V) / self.det0

    def sample(self, t, delta):
        jac = self.jacobian(t)
        ratio = float(np.min(jac**2))
        if ratio < DETG_FLOOR or jac.min() <= 0:
            return None, "immersion_failure"
        geo = self.geometry(t)
        hf = geo["hf"]
        if hf.min() <= 0:
            return None, "hf_nonpositive"
        n = self.n
        d1 = (self.q(t + delta) - self.q(t - delta)) / (2 * delta)
        h = 0.5 * delta
        d2 = (self.q(t + h) - self.q(t - h)) / (2 * h)
        return FlowSample(
            t=t,
            Q=n * self._integrate(self.f / hf, geo),
            dQ_analytic=-n * self._integrate((geo["tr_sf2"] / hf**2 + 1.0) * self.f, geo),
            dQ_fd=(4.0 * d2 - d1) / 3.0,
            dQ_bound=-(n + 1.0) * self._integrate(self.f, geo),
            min_hf=float(hf.min()),
            min_detg=ratio,
        ), ""


def _q_at(base, F, t, grid):
    flowed = FlowedSurface(dimension=base.dimension, orientation="inner", base=base, F=F, t=float(t))
    return q_value(flowed, F, grid)


def q_prime_fd(base, F, t, delta, grid):
    """Centered difference of Q with one Richardson level (steps delta, delta/2)."""
    d1 = (_q_at(base, F, t + delta, grid) - _q_at(base, F, t - delta, grid)) / (2 * delta)
    h = 0.5 * delta
    d2 = (_q_at(base, F, t + h, grid) - _q_at(base, F, t - h, grid)) / (2 * h)
    return (4.0 * d2 - d1) / 3.0


@dataclass
class FlowSample:
    t: float
    Q: float
    dQ_analytic: float
    dQ_fd: float
    dQ_bound: float
    min_hf: float
    min_detg: float


@dataclass
class FlowTrace:
    dt: float
    t_max: float
    samples: list = field(default_factory=list)
    reason: str = ""

    @property
    def t(self):
        return np.array([s.t for s in self.samples])

    @property
    def Q(self):
        return np.array([s.Q for s in self.samples])

    def column(self, name):
        return np.array([getattr(s, name) for s in self.samples])

    def q_strictly_decreasing(self):
        q = self.Q
        return bool(np.all(np.diff(q) < 0))


def run_flow(surface, F, dt, t_max, grid, fd_delta=None):
    """Sample the foliation at t_k = k dt until t_max or the first invalid state.

    Q'_fd is a centered difference with step dt/4 and one Richardson level.
    """
    if dt <= 0:
        raise ValueError("time step must be positive")
    require_convex(F)
    delta = dt / 4.0 if fd_delta is None else fd_delta
    fol = Foliation(surface, F, grid)
    trace = FlowTrace(dt, t_max)
    k = 0
    while True:
        t = k * dt
        if t > t_max * (1 + 1e-12):
            trace.reason = "t_max"
            break
        sample, reason = fol.sample(t, delta)
        if sample is None:
            trace.reason = reason
            break
        trace.samples.append(sample)
        k += 1
    return trace


def breakdown_estimate(trace):
    """Last valid time plus half a step: a proxy for the first collapse time of the foliation."""
    if trace.reason == "t_max":
        raise ValueError("flow reached t_max without breakdown; no estimate")
    if not trace.samples:
        raise ValueError("flow was invalid at t = 0")
    return trace.samples[-1].t + 0.5 * trace.dt


def area_rate_check(surface, F, t, grid, delta=1e-4):
    """Finite-difference d/dt of the area element against (div xi - n H f) dA_t.

    Returns ``(fd_rate, predicted_rate)`` per node.
    """
    def area_element(tt):
        s = FlowedSurface(dimension=surface.dimension, orientation="inner", base=surface, F=F, t=tt)
        cj = s.chart(grid.nodes)
        return np.sqrt(np.linalg.det(np.einsum("nid,njd->nij", cj.xu, cj.xu)))

    fd = (
        -area_element(t + 2 * delta) + 8 * area_element(t + delta)
        - 8 * area_element(t - delta) + area_element(t - 2 * delta)
    ) / (12 * delta)
    flowed = FlowedSurface(dimension=surface.dimension, orientation="inner", base=surface, F=F, t=t)
    jet = geometry_jet(flowed, F, grid.nodes, gradient=False)
    div_xi = div_wulff_tangent(flowed, F, grid.nodes)
    predicted = (div_xi - surface.dimension * jet.mean_curvature * jet.f_value) * jet.area_weight
    return fd, predicted


TRACE_COLUMNS = ("t", "Q", "dQ_analytic", "dQ_fd", "dQ_bound", "min_HF", "min_detg")


def write_trace_csv(trace, path):
    """Columns t, Q, dQ_analytic, dQ_fd, dQ_bound, min_HF, min_detg; a trailing
    ``# termination=<reason>`` metadata row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for s in trace.samples:
            w.writerow([repr(float(v)) for v in (s.t, s.Q, s.dQ_analytic, s.dQ_fd, s.dQ_bound, s.min_hf, s.min_detg)])
        w.writerow([f"# termination={trace.reason}"])


def trace_to_dict(trace):
    return {
        "dt": trace.dt,
        "t_max": trace.t_max,
        "termination": trace.reason,
        "samples": [dataclasses.asdict(s) for s in trace.samples],
    }
