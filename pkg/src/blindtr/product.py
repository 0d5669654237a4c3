"""Distribution of the product ``P = X * conj(Y)`` of correlated complex Gaussians.

``X ~ CN(mu_x, sigma_x^2)`` and ``Y ~ CN(mu_y, sigma_y^2)`` are jointly circular
complex Gaussian with ``E[(X - mu_x) conj(Y - mu_y)] = rho * sigma_x * sigma_y``.
Complex scalars are plain Python ``complex`` values (or complex ndarrays for the
vectorised routines).
"""

from dataclasses import dataclass, asdict
import cmath
import math

import numpy as np

from .errors import ConvergenceError
from .special import bessel_k0, log_bessel_k0

RHO_LIMIT = 1.0 - 1e-12


def _finite_complex(name, value):
    z = complex(value)
    # adding +0.0 turns -0.0 into 0.0 so equal models compute bit-identically
    z = complex(z.real + 0.0, z.imag + 0.0)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return z


@dataclass(frozen=True)
class ProductModel:
    """Parameters of the correlated pair ``(X, Y)`` whose product is ``X conj(Y)``."""

    mu_x: complex
    mu_y: complex
    sigma_x: float
    sigma_y: float
    rho: complex

    def __post_init__(self):
        for name in ("mu_x", "mu_y", "rho"):
            object.__setattr__(self, name, _finite_complex(name, getattr(self, name)))
        for name in ("sigma_x", "sigma_y"):
            s = float(getattr(self, name))
            if not (math.isfinite(s) and s > 0):
                raise ValueError(f"{name} must be a finite positive number, got {s!r}")
            object.__setattr__(self, name, s)
        if abs(self.rho) >= RHO_LIMIT:
            raise ValueError(f"|rho| must be < 1, got |rho| = {abs(self.rho)!r}")

    @property
    def delta_x(self):
        """Noncentrality ``mu_x / sigma_x``."""
        return self.mu_x / self.sigma_x

    @property
    def delta_y(self):
        """Noncentrality ``mu_y / sigma_y``."""
        return self.mu_y / self.sigma_y

    @property
    def is_zero_mean(self):
        return self.mu_x == 0 and self.mu_y == 0

    def scaled_means(self, factor):
        """Copy with both means multiplied by ``factor``."""
        return ProductModel(self.mu_x * factor, self.mu_y * factor,
                            self.sigma_x, self.sigma_y, self.rho)

    def to_dict(self):
        return {
            "mu_x_re": self.mu_x.real, "mu_x_im": self.mu_x.imag,
            "mu_y_re": self.mu_y.real, "mu_y_im": self.mu_y.imag,
            "sigma_x": self.sigma_x, "sigma_y": self.sigma_y,
            "rho_re": self.rho.real, "rho_im": self.rho.imag,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            mu_x=complex(d.get("mu_x_re", 0.0), d.get("mu_x_im", 0.0)),
            mu_y=complex(d.get("mu_y_re", 0.0), d.get("mu_y_im", 0.0)),
            sigma_x=d["sigma_x"],
            sigma_y=d["sigma_y"],
            rho=complex(d.get("rho_re", 0.0), d.get("rho_im", 0.0)),
        )


@dataclass(frozen=True)
class ProductSummary:
    mean: complex
    variance: float


def product_summary(model):
    """Mean and variance ``E|P - mean|^2`` of the product."""
    m = model
    mean = m.mu_x * m.mu_y.conjugate() + m.rho * m.sigma_x * m.sigma_y
    variance = (abs(m.mu_x) ** 2 * m.sigma_y ** 2 + abs(m.mu_y) ** 2 * m.sigma_x ** 2
                + m.sigma_x ** 2 * m.sigma_y ** 2)
    return ProductSummary(mean=mean, variance=variance)


def _cf_parts(model, t1, t2):
    """Characteristic function at real coordinates ``(t1, t2)``.

    Written as a rational/exponential function of ``t1``, ``t2`` so that complex
    values give its analytic continuation (used by the contour quadrature).
    """
    m = model
    sxy = m.sigma_x * m.sigma_y
    t_sq = t1 * t1 + t2 * t2
    re_t_rho = t1 * m.rho.real + t2 * m.rho.imag
    g = 1.0 + 0.25 * sxy ** 2 * (1.0 - abs(m.rho) ** 2) * t_sq - 1j * sxy * re_t_rho
    if m.is_zero_mean:
        return 1.0 / g
    mm = m.mu_x.conjugate() * m.mu_y
    quad = (0.25 * (abs(m.mu_x) ** 2 * m.sigma_y ** 2 + abs(m.mu_y) ** 2 * m.sigma_x ** 2)
            - 0.5 * sxy * (mm * m.rho).real)
    re_mm_t = mm.real * t1 - mm.imag * t2
    return np.exp((-quad * t_sq + 1j * re_mm_t) / g) / g


def char_fn(model, t):
    """Characteristic function ``E[exp(i Re[conj(t) P])]``.

    Parameters
    ----------
    model : ProductModel
    t : complex or array_like of complex

    Returns
    -------
    complex or ndarray of complex
    """
    t = np.asarray(t, dtype=complex)
    out = _cf_parts(model, t.real, t.imag)
    return complex(out) if out.ndim == 0 else out


def _null_constants(model):
    if not model.is_zero_mean:
        raise ValueError("closed-form density only holds for zero-mean models (T = 0)")
    sxy = model.sigma_x * model.sigma_y
    c = sxy * (1.0 - abs(model.rho) ** 2)
    return sxy, c


def log_null_pdf(model, p):
    """Log of :func:`null_pdf`; vectorised over ``p`` and free of underflow."""
    sxy, c = _null_constants(model)
    p = np.asarray(p, dtype=complex)
    r = np.abs(p)
    if np.any(r == 0):
        raise ValueError("density is singular at p = 0")
    tilt = 2.0 * (np.conj(model.rho) * p).real / c
    out = math.log(2.0 / (math.pi * sxy * c)) + tilt + log_bessel_k0(2.0 * r / c)
    return float(out) if np.ndim(out) == 0 else out


def null_pdf(model, p):
    """Exact density of ``P`` for a zero-mean model.

    ``f(p) = 2 / (pi sx sy c) * exp(2 Re[conj(rho) p] / c) * K0(2 |p| / c)``
    with ``c = sx sy (1 - |rho|^2)``.

    Raises
    ------
    ValueError
        If the model has a nonzero mean or ``p == 0`` (logarithmic singularity).
    """
    sxy, c = _null_constants(model)
    p = np.asarray(p, dtype=complex)
    r = np.abs(p)
    if np.any(r == 0):
        raise ValueError("density is singular at p = 0")
    tilt = 2.0 * (np.conj(model.rho) * p).real / c
    with np.errstate(under="ignore"):
        out = 2.0 / (math.pi * sxy * c) * np.exp(tilt) * bessel_k0(2.0 * r / c)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for :func:`cf_invert_pdf`.

    Attributes
    ----------
    tol : float
        Truncation tolerance: a half-line is cut once the integrand on the last
        panel falls below ``tol`` times the accumulated integral of its modulus,
        or (outer integral) reaches the error floor of the inner integrals.
    nodes : int
        Gauss-Legendre nodes per panel.
    max_panels : int
        Panels allowed per half-line before giving up.
    """

    tol: float = 1e-13
    nodes: int = 16
    max_panels: int = 200

    def to_dict(self):
        return asdict(self)


def inversion_integrand(model, t, p):
    """``psi(t) * exp(-i Re[conj(t) p])``, the Fourier-inversion integrand."""
    t = np.asarray(t, dtype=complex)
    return char_fn(model, t) * np.exp(-1j * (np.conj(t) * complex(p)).real)


def _half_line(fn, first_width, max_width, spec, nodes, weights):
    """Integrate ``fn`` over ``[0, inf)`` with growing Gauss-Legendre panels.

    ``fn`` returns ``(values, noise)``. The line is cut once the values on the
    last panel fall below ``spec.tol`` times the running integral of their
    modulus, or below a few times the ``noise`` floor of the values themselves.
    Returns ``(integral, modulus_integral)``.
    """
    total = 0.0
    mass = 0.0
    lo, width = 0.0, first_width
    for _ in range(spec.max_panels):
        hi = lo + width
        x = lo + (nodes + 1.0) * (0.5 * width)
        vals, noise = fn(x)
        mods = np.abs(vals)
        total = total + 0.5 * width * np.dot(weights, vals)
        mass += 0.5 * width * np.dot(weights, mods)
        tail = np.max(mods[-3:])
        if lo > 0 and (tail * width <= spec.tol * mass or tail <= 4.0 * np.max(noise[-3:])):
            return total, mass
        lo, width = hi, min(2.0 * width, max_width)
    raise ConvergenceError(
        f"integrand tail {tail:.3e} still above tolerance after {spec.max_panels} panels")


def _noiseless(vals):
    return vals, np.zeros(len(vals))


def cf_invert_pdf(model, p, grid=None):
    """Density of ``P`` at ``p`` by numerical inversion of the characteristic function.

    Evaluates ``(2 pi)^-2 * int psi(t) exp(-i Re[conj(t) p]) dt`` on a tensor
    product of Gauss-Legendre panels in coordinates aligned with ``p``:
    ``t = (u + i v) * p / |p|``. The ``u`` line is bent into the lower half plane
    (two rays at angle ``phi`` below the axis, ``phi`` kept under half the angle
    of the nearest pole of ``psi``), which turns the slowly decaying oscillatory
    tail into an exponentially decaying one at rate ``|p| sin(phi)``. The ``v``
    integral decays like ``exp(-|p| |v|)``. Accuracy therefore degrades, and cost
    grows, as ``p`` approaches the origin. The absolute error is of order
    ``grid.tol`` times the integral of ``|psi|``, so densities far out in the
    tails (below ~1e-12) lose relative accuracy to cancellation.

    Raises
    ------
    ConvergenceError
        If a half-line does not meet ``grid.tol`` within ``grid.max_panels``.
    ValueError
        If ``p == 0``.
    """
    spec = grid or QuadratureSpec()
    p = complex(p)
    r = abs(p)
    if r == 0:
        raise ValueError("inversion at p = 0 is not supported (singular density)")
    e1, e2 = p.real / r, p.imag / r
    nodes, weights = np.polynomial.legendre.leggauss(spec.nodes)

    m = model
    sxy = m.sigma_x * m.sigma_y
    a = 0.25 * sxy ** 2 * (1.0 - abs(m.rho) ** 2)
    beta_u = e1 * m.rho.real + e2 * m.rho.imag
    beta_v = -e2 * m.rho.real + e1 * m.rho.imag
    scale = min(1.0 / math.sqrt(product_summary(m).variance), 1.0 / math.sqrt(a), 1.0 / r)
    first = 0.25 * scale

    def ray_angle(v):
        roots = np.roots([a, -1j * sxy * beta_u, 1.0 + a * v * v - 1j * sxy * beta_v * v])
        angles = [min(abs(cmath.phase(z)), math.pi - abs(cmath.phase(z)))
                  for z in roots if z.imag < 0]
        return min(math.pi / 3, 0.5 * min(angles)) if angles else math.pi / 3

    def psi_uv(u, v):
        t1 = u * e1 - v * e2
        t2 = u * e2 + v * e1
        return _cf_parts(m, t1, t2) * np.exp(-1j * r * u)

    def inner(v_arr):
        out = np.empty(len(v_arr), dtype=complex)
        noise = np.empty(len(v_arr))
        for idx, v in enumerate(v_arr):
            phi = ray_angle(v)
            down, up = cmath.exp(-1j * phi), cmath.exp(1j * phi)
            max_w = 2.0 / (r * math.sin(phi))
            right, m_right = _half_line(lambda s: _noiseless(psi_uv(s * down, v) * down),
                                        first, max_w, spec, nodes, weights)
            left, m_left = _half_line(lambda s: _noiseless(psi_uv(-s * up, v) * up),
                                      first, max_w, spec, nodes, weights)
            out[idx] = right + left
            noise[idx] = spec.tol * (m_right + m_left)
        return out, noise

    max_wv = 2.0 / r
    pos, _ = _half_line(inner, first, max_wv, spec, nodes, weights)
    neg, _ = _half_line(lambda w: inner(-w), first, max_wv, spec, nodes, weights)
    return float(((pos + neg) / (2.0 * math.pi) ** 2).real)
