"""Bivariate Edgeworth approximation to the density of ``(Re P, Im P)``.

``f_s(p) = phi(p) * (1 + sum_{j=1}^{s-2} sum_nu c_{j,nu} H_nu(p))`` where
``phi`` is the Gaussian with the exact mean and covariance, ``c_{j,nu}`` are the
coefficients of the Cramer-Edgeworth polynomials in ``t``, and each monomial
``t1^nu1 t2^nu2`` is replaced by the Hermite polynomial ``H_nu`` defined by
``H_nu phi = (-1)^|nu| d^nu phi``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

from .moments import MAX_ORDER, cumulants
from .product import ProductModel

DEFAULT_ORDER = 6


class Poly2:
    """Sparse bivariate polynomial ``{(d1, d2): coeff}``; zero terms are dropped."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {k: float(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def constant(cls, c):
        return cls({(0, 0): c})

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return Poly2(out)

    def __mul__(self, other):
        if not isinstance(other, Poly2):
            return Poly2({k: v * other for k, v in self.terms.items()})
        out = {}
        for (a1, a2), u in self.terms.items():
            for (b1, b2), v in other.terms.items():
                key = (a1 + b1, a2 + b2)
                out[key] = out.get(key, 0.0) + u * v
        return Poly2(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Poly2) and self.terms == other.terms

    def __repr__(self):
        return f"Poly2({self.terms!r})"

    def __bool__(self):
        return bool(self.terms)

    @property
    def degree(self):
        return max((a + b for a, b in self.terms), default=-1)

    def diff(self, axis):
        out = {}
        for (a, b), v in self.terms.items():
            n = (a, b)[axis]
            if n:
                key = (a - 1, b) if axis == 0 else (a, b - 1)
                out[key] = out.get(key, 0.0) + n * v
        return Poly2(out)

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.zeros(np.broadcast(x1, x2).shape)
        if not self.terms:
            return out
        deg = self.degree
        pow1 = [np.ones_like(x1)]
        pow2 = [np.ones_like(x2)]
        for _ in range(deg):
            pow1.append(pow1[-1] * x1)
            pow2.append(pow2[-1] * x2)
        for (a, b), v in self.terms.items():
            out = out + v * pow1[a] * pow2[b]
        return out


def _as_points(p):
    """Accept complex values or real arrays of shape (..., 2); return (x1, x2)."""
    p = np.asarray(p)
    if np.iscomplexobj(p):
        return p.real.astype(float), p.imag.astype(float)
    p = p.astype(float)
    if p.shape[-1] != 2:
        raise ValueError("real points must have a trailing axis of length 2")
    return p[..., 0], p[..., 1]


def cumulant_form(cum, s):
    """``chi_s(t)/s! = sum_{nu1+nu2=s} chi_nu t^nu / (nu1! nu2!)``."""
    return Poly2({(a, s - a): cum.get((a, s - a), 0.0) / (factorial(a) * factorial(s - a))
                  for a in range(s + 1)})


def cramer_edgeworth(j, cum):
    """Cramer-Edgeworth polynomial ``L_j(t)``: the ``u^j`` coefficient of
    ``sum_m (1/m!) (sum_r chi_{r+2}(t) u^r / (r+2)!)^m``.

    Raises
    ------
    ValueError
        If ``cum`` does not reach order ``j + 2``.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    if cum.order < j + 2:
        raise ValueError(f"L_{j} needs cumulants up to order {j + 2}, table has {cum.order}")
    # series in u as a list of Poly2 coefficients, index = power of u
    base = [Poly2()] + [cumulant_form(cum, r + 2) for r in range(1, j + 1)]
    power = [Poly2.constant(1.0)] + [Poly2()] * j
    result = Poly2()
    for m in range(1, j + 1):
        nxt = [Poly2()] * (j + 1)
        for i, a in enumerate(power):
            if not a:
                continue
            for k in range(1, j + 1 - i):
                nxt[i + k] = nxt[i + k] + a * base[k]
        power = nxt
        result = result + power[j] * (1.0 / factorial(m))
    return result


@dataclass(frozen=True, eq=False)
class EdgeworthModel:
    """Gaussian base plus Edgeworth correction of order ``order`` (``s``).

    ``correction`` is the polynomial ``C(z)`` in the centred variable
    ``z = p - mean`` with ``f_s(p) = phi(p) (1 + C(z))``.
    """

    mean: np.ndarray
    covariance: np.ndarray
    cumulants: object
    order: int
    precision: np.ndarray = field(init=False)
    correction: Poly2 = field(init=False)
    _norm: float = field(init=False, repr=False)

    def __post_init__(self):
        if not 2 <= self.order <= MAX_ORDER:
            raise ValueError(f"Edgeworth order must be in [2, {MAX_ORDER}], got {self.order}")
        if self.cumulants.order < self.order:
            raise ValueError("cumulant table order is below the requested Edgeworth order")
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.covariance, dtype=float)
        prec = np.linalg.inv(cov)
        for arr in (mean, cov, prec):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "precision", prec)
        object.__setattr__(self, "_norm", 1.0 / (2 * np.pi * np.sqrt(np.linalg.det(cov))))
        object.__setattr__(self, "correction", self._assemble())

    @classmethod
    def from_cumulants(cls, table, order=None):
        order = table.order if order is None else order
        return cls(table.mean, table.covariance, table, order)

    def _assemble(self):
        total = Poly2()
        for j in range(1, self.order - 1):
            for nu, c in cramer_edgeworth(j, self.cumulants).terms.items():
                total = total + _hermite_poly(self.precision_key, nu) * c
        return total

    @property
    def precision_key(self):
        return tuple(float(v) for v in self.precision.ravel())


@lru_cache(maxsize=4096)
def _hermite_poly(prec_key, nu):
    """``H_nu`` as a Poly2 in the centred variable, by repeated differentiation.

    If ``d^nu phi = Q phi`` then ``d_i (Q phi) = (d_i Q - Q (Lambda z)_i) phi``.
    """
    l11, l12, l21, l22 = prec_key
    lam_z = (Poly2({(1, 0): l11, (0, 1): l12}), Poly2({(1, 0): l21, (0, 1): l22}))
    q = Poly2.constant(1.0)
    for axis, count in enumerate(nu):
        for _ in range(count):
            q = q.diff(axis) + q * lam_z[axis] * -1.0
    return q * (-1.0) ** (nu[0] + nu[1])


def hermite(model, nu, p):
    """Multivariate Hermite polynomial ``H_nu(p; R^-1)`` centred at the model mean."""
    nu = tuple(int(v) for v in nu)
    if min(nu) < 0 or sum(nu) > MAX_ORDER:
        raise ValueError(f"hermite order must satisfy 0 <= |nu| <= {MAX_ORDER}, got {nu}")
    x1, x2 = _as_points(p)
    return _hermite_poly(model.precision_key, nu)(x1 - model.mean[0], x2 - model.mean[1])


def centred_quadratic(model, x1, x2):
    z1 = x1 - model.mean[0]
    z2 = x2 - model.mean[1]
    pr = model.precision
    return z1, z2, pr[0, 0] * z1 * z1 + 2 * pr[0, 1] * z1 * z2 + pr[1, 1] * z2 * z2


def gaussian_pdf(model, p):
    """Bivariate normal density with the model's mean and covariance."""
    x1, x2 = _as_points(p)
    _, _, q = centred_quadratic(model, x1, x2)
    return model._norm * np.exp(-0.5 * q)


def edgeworth_pdf(model, p):
    """Edgeworth density ``f_s(p)``; may be slightly negative in the tails.

    ``p`` is complex (``p1 + i p2``) or real with a trailing axis of length 2.
    """
    x1, x2 = _as_points(p)
    z1, z2, q = centred_quadratic(model, x1, x2)
    base = model._norm * np.exp(-0.5 * q)
    if not model.correction:
        return base
    return base * (1.0 + model.correction(z1, z2))


@lru_cache(maxsize=256)
def build_edgeworth(model: ProductModel, s=DEFAULT_ORDER):
    """Edgeworth model for the product density, using exact cumulants up to ``s``."""
    if not 2 <= s <= MAX_ORDER:
        raise ValueError(f"Edgeworth order must be in [2, {MAX_ORDER}], got {s}")
    return EdgeworthModel.from_cumulants(cumulants(model, s), s)
