"""Unit-sphere helpers: tangent frames, parametrizations and sample grids."""

import numpy as np


def tangent_frame(points):
    """Deterministic orthonormal basis of the tangent space at unit ``points``.

    Returns an array of shape ``(..., n, n+1)``; row ``i`` is E_i.  On S^1 the
    frame is the counter-clockwise rotation of the point.  On S^2 the first
    vector comes from the coordinate axis least aligned with the point and
    the second completes a right-handed triple ``(E_1, E_2, x)``.
    """
    x = np.asarray(points, dtype=float)
    d = x.shape[-1]
    if d == 2:
        return np.stack([-x[..., 1], x[..., 0]], axis=-1)[..., None, :]
    if d == 3:
        k = np.argmin(np.abs(x), axis=-1)
        axis = np.eye(3)[k]
        e1 = axis - np.take_along_axis(x, k[..., None], axis=-1) * x
        e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
        e2 = np.cross(x, e1)
        return np.stack([e1, e2], axis=-2)
    # generic dimension: Gram-Schmidt against the coordinate axes in order of
    # increasing alignment
    flat = x.reshape(-1, d)
    out = np.empty((flat.shape[0], d - 1, d))
    for idx, p in enumerate(flat):
        order = np.argsort(np.abs(p), kind="stable")
        basis = [p]
        for k in order:
            v = np.eye(d)[k]
            for b in basis:
                v = v - (v @ b) * b
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                basis.append(v / nv)
            if len(basis) == d:
                break
        out[idx] = np.array(basis[1:])
    return out.reshape(x.shape[:-1] + (d - 1, d))


def check_unit(x, tol=1e-10):
    x = np.asarray(x, dtype=float)
    err = np.abs(np.linalg.norm(x, axis=-1) - 1.0)
    if np.any(err > tol):
        raise ValueError(f"expected unit vectors, max | |x| - 1 | = {err.max():.3e}")
    return x


def circle_param(theta):
    """Point, first and second derivatives of theta -> (cos, sin).

    Shapes: ``(N, 2)``, ``(N, 1, 2)``, ``(N, 1, 1, 2)``.
    """
    t = np.asarray(theta, dtype=float)
    c, s = np.cos(t), np.sin(t)
    w = np.stack([c, s], axis=-1)
    wu = np.stack([-s, c], axis=-1)[:, None, :]
    wuu = (-w)[:, None, None, :]
    return w, wu, wuu


def sphere_param(theta, phi):
    """Point and chart derivatives of (theta, phi) -> unit sphere.

    theta is the polar angle.  Shapes: ``(N, 3)``, ``(N, 2, 3)``,
    ``(N, 2, 2, 3)``.
    """
    th = np.asarray(theta, dtype=float)
    ph = np.asarray(phi, dtype=float)
    st, ct = np.sin(th), np.cos(th)
    sp, cp = np.sin(ph), np.cos(ph)
    z = np.zeros_like(th)
    w = np.stack([st * cp, st * sp, ct], axis=-1)
    w_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
    w_p = np.stack([-st * sp, st * cp, z], axis=-1)
    w_tt = -w
    w_tp = np.stack([-ct * sp, ct * cp, z], axis=-1)
    w_pp = np.stack([-st * cp, -st * sp, z], axis=-1)
    wu = np.stack([w_t, w_p], axis=-2)
    wuu = np.stack([np.stack([w_tt, w_tp], axis=-2), np.stack([w_tp, w_pp], axis=-2)], axis=-3)
    return w, wu, wuu


def sample_sphere(dim, resolution):
    """Unit vectors covering S^n for grid scans (n = dim - 1).

    S^1: ``resolution`` equally spaced angles starting at theta = 0.
    S^2: both poles plus a ``resolution`` x ``2 resolution`` latitude-longitude grid.
    """
    if dim == 2:
        t = 2.0 * np.pi * np.arange(resolution) / resolution
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    if dim == 3:
        th = np.pi * (np.arange(1, resolution)) / resolution
        ph = 2.0 * np.pi * np.arange(2 * resolution) / (2 * resolution)
        T, P = np.meshgrid(th, ph, indexing="ij")
        w, _, _ = sphere_param(T.ravel(), P.ravel())
        return np.vstack([[0.0, 0.0, 1.0], w, [0.0, 0.0, -1.0]])
    raise ValueError("grid scans are available for S^1 and S^2 only")
