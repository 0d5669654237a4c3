"""Exact joint moments and cumulants of ``P = X conj(Y)``.

The complex moments ``M[m, n] = E[P^m conj(P)^n]`` come from expanding every
factor into mean plus fluctuation and applying the complex Gaussian moment
theorem: the expectation of ``t`` fluctuations times ``t`` conjugated
fluctuations is the permanent of their pairwise covariance matrix. The real
moments ``E[P1^a P2^b]`` follow by inverting the linear map from real to complex
moments, and joint cumulants from the real moments.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from math import comb, factorial

import numpy as np

from .errors import IllConditionedError

MAX_ORDER = 8
IMAG_RESIDUE_TOL = 1e-9


def pair_covariance(model, a, b):
    """``E[V_a conj(V_b)]`` for fluctuations ``a, b`` in ``{"X", "Y"}``."""
    sxy = model.sigma_x * model.sigma_y
    table = {
        ("X", "X"): complex(model.sigma_x ** 2),
        ("Y", "Y"): complex(model.sigma_y ** 2),
        ("X", "Y"): model.rho * sxy,
        ("Y", "X"): model.rho.conjugate() * sxy,
    }
    try:
        return table[(a, b)]
    except KeyError:
        raise ValueError(f"fluctuation labels must be 'X' or 'Y', got {(a, b)!r}") from None


def _permanent_direct(mat):
    n = mat.shape[0]
    rows = np.arange(n)
    return sum(np.prod(mat[rows, list(cols)]) for cols in permutations(range(n)))


def _permanent_ryser(mat):
    # Ryser with Gray-code subset updates: O(2^n * n)
    n = mat.shape[0]
    row_sums = np.zeros(n, dtype=mat.dtype)
    total = 0.0
    subset = 0
    for k in range(1, 2 ** n):
        bit = (k & -k).bit_length() - 1
        if subset >> bit & 1:
            row_sums -= mat[:, bit]
        else:
            row_sums += mat[:, bit]
        subset ^= 1 << bit
        sign = -1 if bin(subset).count("1") % 2 else 1
        total += sign * np.prod(row_sums)
    return (-1) ** n * total


def permanent(mat):
    """Permanent of a square matrix of size at most 8.

    Direct permutation sum up to size 5, Ryser's inclusion-exclusion formula
    for sizes 6 to 8. The empty matrix has permanent 1.
    """
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("permanent needs a square matrix")
    n = mat.shape[0]
    if n > MAX_ORDER:
        raise ValueError(f"permanent supports size <= {MAX_ORDER}, got {n}")
    if n == 0:
        return 1.0 + 0j
    if n <= 5:
        return complex(_permanent_direct(mat))
    return complex(_permanent_ryser(mat))


def _check_order(m, n):
    if m < 0 or n < 0:
        raise ValueError("moment indices must be non-negative")
    if m + n > MAX_ORDER:
        raise ValueError(f"moment order m + n must be <= {MAX_ORDER}, got {m + n}")


@lru_cache(maxsize=4096)
def complex_moment(model, m, n):
    """Exact ``E[P^m conj(P)^n]``.

    Of the ``m`` factors ``X`` and ``n`` factors ``Y`` (unconjugated), ``i`` and
    ``t - i`` are replaced by their fluctuations; of the ``m`` factors
    ``conj(Y)`` and ``n`` factors ``conj(X)``, ``j`` and ``t - j`` are. The
    remaining factors contribute their means.
    """
    _check_order(m, n)
    mx, my = model.mu_x, model.mu_y
    cov = {(a, b): pair_covariance(model, a, b) for a in "XY" for b in "XY"}
    total = 0j
    for t in range(m + n + 1):
        for i in range(t + 1):
            if i > m or t - i > n:
                continue
            a_vec = "X" * i + "Y" * (t - i)
            for j in range(t + 1):
                if j > m or t - j > n:
                    continue
                coef = comb(m, i) * comb(m, j) * comb(n, t - j) * comb(n, t - i)
                mean_part = (mx ** (m - i) * my.conjugate() ** (m - j)
                             * mx.conjugate() ** (n - t + j) * my ** (n - t + i))
                if coef == 0 or mean_part == 0:
                    continue
                b_vec = "X" * (t - j) + "Y" * j
                mat = np.array([[cov[(ra, cb)] for cb in b_vec] for ra in a_vec],
                               dtype=complex).reshape(t, t)
                total += coef * mean_part * permanent(mat)
    return total


def gen_binomial(n, r):
    """Binomial coefficient ``n (n-1) ... (n-r+1) / r!``, valid for negative ``n``."""
    if r < 0:
        return 0
    num = 1
    for k in range(r):
        num *= n - k
    return num // factorial(r)


@lru_cache(maxsize=None)
def _jm_cached(m):
    out = np.zeros((m + 1, m + 1), dtype=complex)
    for k in range(m + 1):
        for l in range(m + 1):
            out[k, l] = sum(1j ** (l - 2 * h) * gen_binomial(m - 2 * k, l - 2 * h) * comb(k, h)
                            for h in range(l // 2 + 1))
    out.setflags(write=False)
    return out


def jm_matrix(m):
    """Matrix mapping ``E[P1^(m-l) P2^l]`` (``l = 0..m``) to ``M[m-k, k]`` (``k = 0..m``).

    Row ``k`` holds the coefficients of ``(p1 + i p2)^(m-k) (p1 - i p2)^k``.
    """
    if not 1 <= m <= MAX_ORDER:
        raise ValueError(f"m must be in [1, {MAX_ORDER}], got {m}")
    return _jm_cached(m).copy()


@dataclass(frozen=True, eq=False)
class ComplexMomentTable:
    order: int
    entries: dict  # (m, n) -> complex

    def __getitem__(self, key):
        return self.entries[key]


@dataclass(frozen=True, eq=False)
class RealMomentTable:
    order: int
    entries: dict  # (a, b) -> float, E[P1^a P2^b]
    max_imag_residue: float = 0.0

    def __getitem__(self, key):
        return self.entries[key]


@dataclass(frozen=True, eq=False)
class CumulantTable:
    """Joint cumulants ``chi[(nu1, nu2)]`` of ``(P1, P2)`` for ``2 <= nu1 + nu2 <= order``."""

    order: int
    entries: dict
    mean: tuple
    covariance: np.ndarray

    def __getitem__(self, key):
        return self.entries[key]

    def get(self, key, default=0.0):
        return self.entries.get(key, default)


@lru_cache(maxsize=256)
def complex_moments(model, order):
    """All ``M[m, n]`` with ``m + n <= order``."""
    _check_order(order, 0)
    entries = {(m, n): complex_moment(model, m, n)
               for m in range(order + 1) for n in range(order + 1 - m)}
    return ComplexMomentTable(order, entries)


@lru_cache(maxsize=256)
def real_moments(model, order):
    """Real joint moments ``E[P1^a P2^b]`` for ``a + b <= order``.

    For each total degree the full complex system ``J_m x = M`` is solved; the
    solution must be real, and its relative imaginary residue is checked
    against ``IMAG_RESIDUE_TOL``.

    Raises
    ------
    IllConditionedError
        If the solve residual or the imaginary residue is too large.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
    cm = complex_moments(model, order)
    entries = {(0, 0): 1.0}
    worst = 0.0
    for m in range(1, order + 1):
        jm = _jm_cached(m)
        rhs = np.array([cm[(m - k, k)] for k in range(m + 1)])
        x = np.linalg.solve(jm, rhs)
        scale = max(1.0, np.max(np.abs(x)))
        resid = np.max(np.abs(jm @ x - rhs)) / max(1.0, np.max(np.abs(rhs)))
        if resid > 1e-8:
            raise IllConditionedError(f"J_{m} solve residual {resid:.3e}")
        imag = np.max(np.abs(x.imag)) / scale
        if imag > IMAG_RESIDUE_TOL:
            raise IllConditionedError(f"real moments of degree {m} have imaginary residue {imag:.3e}")
        worst = max(worst, imag)
        for l in range(m + 1):
            entries[(m - l, l)] = float(x[l].real)
    return RealMomentTable(order, entries, worst)


def central_moments(raw, order):
    """Central moments from raw moments ``raw[(a, b)]`` by binomial mean shift."""
    m1, m2 = raw[(1, 0)], raw[(0, 1)]
    out = {}
    for a in range(order + 1):
        for b in range(order + 1 - a):
            out[(a, b)] = sum(comb(a, i) * comb(b, j) * raw[(i, j)] * (-m1) ** (a - i) * (-m2) ** (b - j)
                              for i in range(a + 1) for j in range(b + 1))
    return out


def moments_to_cumulants(mom, order):
    """Joint cumulants from joint moments of a bivariate vector.

    Uses ``mu_nu = sum_{lam <= nu - e} C(nu - e, lam) kappa_{lam + e} mu_{nu - e - lam}``
    where ``e`` is a unit index with ``nu - e >= 0``; solved for ``kappa_nu``.
    Works with raw or central moments (``mom[(0, 0)]`` must be 1).
    """
    kappa = {}
    for total in range(1, order + 1):
        for a in range(total, -1, -1):
            b = total - a
            e = (1, 0) if a > 0 else (0, 1)
            ra, rb = a - e[0], b - e[1]
            acc = mom[(a, b)]
            for la in range(ra + 1):
                for lb in range(rb + 1):
                    if (la, lb) == (ra, rb):
                        continue
                    acc -= (comb(ra, la) * comb(rb, lb) * kappa[(la + e[0], lb + e[1])]
                            * mom[(ra - la, rb - lb)])
            kappa[(a, b)] = acc
    return kappa


@lru_cache(maxsize=256)
def cumulants(model, order):
    """Joint cumulant table of ``(Re P, Im P)`` up to ``order``.

    Raises
    ------
    IllConditionedError
        If the covariance is not positive definite.
    """
    if not 2 <= order <= MAX_ORDER:
        raise ValueError(f"cumulant order must be in [2, {MAX_ORDER}], got {order}")
    raw = real_moments(model, order).entries
    central = central_moments(raw, order)
    kappa = moments_to_cumulants(central, order)
    return cumulant_table(kappa, (raw[(1, 0)], raw[(0, 1)]), order)


def cumulant_table(kappa, mean, order):
    """Assemble a :class:`CumulantTable` from cumulants keyed by ``(nu1, nu2)``."""
    cov = np.array([[kappa[(2, 0)], kappa[(1, 1)]], [kappa[(1, 1)], kappa[(0, 2)]]], dtype=float)
    if cov[0, 0] <= 0 or np.linalg.det(cov) <= 0:
        raise IllConditionedError("covariance of (P1, P2) is not positive definite")
    cov.setflags(write=False)
    entries = {nu: float(v) for nu, v in kappa.items() if 2 <= sum(nu) <= order}
    return CumulantTable(order, entries, (float(mean[0]), float(mean[1])), cov)
