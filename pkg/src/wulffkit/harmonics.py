"""Polynomial extensions of circular and spherical harmonics.

Every harmonic is stored as a polynomial in the ambient Cartesian
coordinates that agrees with the harmonic on the unit sphere.  Ambient
value, gradient and Hessian are then exact monomial arithmetic, which is
what the anisotropy and chart code need.
"""

from math import comb, factorial, pi, sqrt

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly


class Polynomial:
    """Sparse multivariate polynomial ``sum_k c_k prod_i v_i**e_ki``."""

    def __init__(self, terms, dim):
        self.dim = dim
        cleaned = {}
        for exps, c in terms.items():
            if c != 0.0:
                cleaned[tuple(exps)] = cleaned.get(tuple(exps), 0.0) + float(c)
        self.terms = {e: c for e, c in cleaned.items() if c != 0.0}
        if self.terms:
            self._exps = np.array(list(self.terms.keys()), dtype=int)
            self._coef = np.array(list(self.terms.values()))
        else:
            self._exps = np.zeros((0, dim), dtype=int)
            self._coef = np.zeros(0)
        self._grad = None
        self._hess = None
        self._stack_cache = {}

    @classmethod
    def constant(cls, c, dim):
        return cls({(0,) * dim: c}, dim)

    @classmethod
    def variable(cls, i, dim):
        e = [0] * dim
        e[i] = 1
        return cls({tuple(e): 1.0}, dim)

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other, self.dim)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return Polynomial(terms, self.dim)

    __radd__ = __add__

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial({e: c * other for e, c in self.terms.items()}, self.dim)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return Polynomial(terms, self.dim)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = Polynomial.constant(1.0, self.dim)
        for _ in range(k):
            out = out * self
        return out

    def derivative(self, i):
        terms = {}
        for e, c in self.terms.items():
            if e[i] > 0:
                d = list(e)
                d[i] -= 1
                terms[tuple(d)] = terms.get(tuple(d), 0.0) + c * e[i]
        return Polynomial(terms, self.dim)

    def __call__(self, v):
        return self.jet(v, order=0)[0]

    def gradient(self, v):
        return self.jet(v, order=1)[1]

    def hessian(self, v):
        return self.jet(v, order=2)[2]

    def _stacked(self, order):
        """Concatenated exponents of all derivative polynomials up to ``order``."""
        if order in self._stack_cache:
            return self._stack_cache[order]
        if self._grad is None:
            self._grad = [self.derivative(i) for i in range(self.dim)]
            self._hess = [[g.derivative(j) for j in range(self.dim)] for g in self._grad]
        polys = [self]
        if order >= 1:
            polys += self._grad
        if order >= 2:
            polys += [p for row in self._hess for p in row]
        exps = [p._exps for p in polys]
        coef = np.zeros((sum(len(e) for e in exps), len(polys)))
        k = 0
        for j, p in enumerate(polys):
            coef[k:k + len(p._coef), j] = p._coef
            k += len(p._coef)
        self._stack_cache[order] = (np.vstack(exps), coef)
        return self._stack_cache[order]

    def jet(self, v, order=2):
        """Value, gradient and Hessian at ``v`` (shape ``(..., dim)``) from one power table."""
        v = np.asarray(v, dtype=float)
        lead = v.shape[:-1]
        flat = v.reshape(-1, self.dim)
        exps, coef = self._stacked(order)
        if len(exps) == 0:
            vals = np.zeros((len(flat), coef.shape[1]))
        else:
            deg = int(exps.max())
            pw = flat[:, :, None] ** np.arange(deg + 1)
            mono = np.ones((len(flat), len(exps)))
            for i in range(self.dim):
                mono *= pw[:, i, exps[:, i]]
            vals = mono @ coef
        d = self.dim
        out = [vals[:, 0].reshape(lead)]
        if order >= 1:
            out.append(vals[:, 1:1 + d].reshape(lead + (d,)))
        if order >= 2:
            out.append(vals[:, 1 + d:].reshape(lead + (d, d)))
        return out


def _complex_power(m, dim):
    """Real and imaginary parts of (x + i y)**m as polynomials."""
    re = Polynomial({}, dim)
    im = Polynomial({}, dim)
    for j in range(m + 1):
        e = [0] * dim
        e[0] = m - j
        e[1] = j
        c = comb(m, j) * (-1) ** (j // 2)
        if j % 2 == 0:
            re = re + Polynomial({tuple(e): c}, dim)
        else:
            im = im + Polynomial({tuple(e): c}, dim)
    return re, im


def circular_harmonic(kind, k):
    """``cos(k theta)`` or ``sin(k theta)`` on the unit circle, as a polynomial in (x, y)."""
    if k < 0:
        raise ValueError("mode number must be non-negative")
    re, im = _complex_power(k, 2)
    if kind == "cos":
        return re
    if kind == "sin":
        return im
    raise ValueError(f"unknown circular harmonic kind {kind!r}")


def spherical_harmonic(l, m):
    """Orthonormal real spherical harmonic Y_l^m as a polynomial in (x, y, z).

    m > 0 carries cos(m phi), m < 0 carries sin(|m| phi).  No Condon-Shortley
    phase is included.
    """
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid spherical harmonic degree/order ({l}, {m})")
    am = abs(m)
    # d^m/dz^m P_l(z) in the monomial basis
    dleg = nppoly.polytrim(np.atleast_1d(npleg.leg2poly(npleg.legder(np.eye(l + 1)[l], am))), tol=0.0)
    zpart = Polynomial({}, 3)
    for j, c in enumerate(dleg):
        if c != 0.0:
            zpart = zpart + Polynomial({(0, 0, j): c}, 3)
    norm = sqrt((2 * l + 1) / (4 * pi) * factorial(l - am) / factorial(l + am))
    re, im = _complex_power(am, 3)
    if m == 0:
        return zpart * norm
    ang = re if m > 0 else im
    return ang * zpart * (sqrt(2.0) * norm)


def harmonic_sum(dim, coefficients, constant=1.0):
    """``constant + sum a_k psi_k`` as a single polynomial.

    ``coefficients`` is an iterable of ``((kind, k), a)`` for dim 2 or
    ``((l, m), a)`` for dim 3.
    """
    total = Polynomial.constant(constant, dim)
    for mode, a in coefficients:
        if dim == 2:
            total = total + circular_harmonic(*mode) * a
        elif dim == 3:
            total = total + spherical_harmonic(*mode) * a
        else:
            raise ValueError("harmonic families are available for S^1 and S^2 only")
    return total
