"""Seeded Monte Carlo: time-reversal chain simulation, ROC sweeps, empirical PDF and MSE.

Randomness is counter based: every trial (or sample block) draws from its own
Philox stream keyed by ``(seed, stream_id)``, so results do not depend on how
work is split across workers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from .detector import DetectorKind, hypothesis_models, llr_statistic

SAMPLE_BLOCK = 1 << 16
TRIAL_CHUNK = 2048
_PRODUCT_NAMESPACE = 1 << 62


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v < 2 ** 64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self):
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _generator(rng):
    return rng.generator() if isinstance(rng, RngStream) else rng


def _cn(gen, size):
    """Standard circular complex Gaussian draws, ``E|z|^2 = 1``."""
    x = gen.standard_normal((2,) + tuple(np.atleast_1d(size)))
    return (x[0] + 1j * x[1]) * math.sqrt(0.5)


def sample_channel_pair(clutter_psd, rho_c, rng, size=1):
    """Correlated clutter ``(C_p, C_r)`` with ``E[C_p conj(C_r)] = rho_c P_c``."""
    gen = _generator(rng)
    a = _cn(gen, size)
    b = _cn(gen, size)
    rho_c = complex(rho_c)
    amp = math.sqrt(clutter_psd)
    c_p = amp * a
    c_r = amp * (rho_c.conjugate() * a + math.sqrt(1.0 - abs(rho_c) ** 2) * b)
    return c_p, c_r


def simulate_trial(s, true_target, rng):
    """One probe/retransmit cycle; returns the ``Q`` retransmission responses."""
    gen = _generator(rng)
    q = s.bins
    c_p, c_r = sample_channel_pair(s.clutter_psd, s.channel_corr, gen, q)
    noise_amp = math.sqrt(s.noise_psd)
    v_p = noise_amp * _cn(gen, q)
    v_r = noise_amp * _cn(gen, q)
    z = (true_target + c_p) * s.probe_amplitude + v_p
    k = math.sqrt(s.tx_energy / np.sum(np.abs(z) ** 2))
    return (true_target + c_r) * k * np.conj(z) + v_r


def trial_stream(seed, trial, hypothesis):
    """Stream of trial ``trial`` under hypothesis 0 or 1."""
    return RngStream(seed, 2 * trial + hypothesis)


def _map_chunks(fn, n, chunk, workers):
    bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    if workers <= 1 or len(bounds) <= 1:
        parts = [fn(lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: fn(*b), bounds))
    return parts


def simulate_trials(s, hypothesis, n_trials, seed, workers=1):
    """Observations of ``n_trials`` trials, shape ``(n_trials, Q)``, in trial order."""
    target = s.target if hypothesis else 0j

    def run(lo, hi):
        return np.stack([simulate_trial(s, target, trial_stream(seed, i, hypothesis))
                         for i in range(lo, hi)])

    return np.concatenate(_map_chunks(run, n_trials, TRIAL_CHUNK, workers))


def statistics(models, observations, workers=1):
    parts = _map_chunks(lambda lo, hi: llr_statistic(models, observations[lo:hi]),
                        len(observations), TRIAL_CHUNK, workers)
    return np.concatenate(parts)


def wilson_interval(k, n, z=1.959963984540054):
    """95% Wilson score interval for a binomial proportion ``k / n``."""
    k = np.asarray(k, dtype=float)
    phat = k / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * np.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = np.where(k == 0, 0.0, np.clip(centre - half, 0.0, 1.0))
    hi = np.where(k == n, 1.0, np.clip(centre + half, 0.0, 1.0))
    return lo, hi


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Empirical ROC; arrays ordered by descending threshold."""

    thresholds: np.ndarray
    pfa: np.ndarray
    pd: np.ndarray
    n_trials: int

    @property
    def points(self):
        return list(zip(self.thresholds.tolist(), self.pfa.tolist(), self.pd.tolist()))

    def operating_point(self, max_pfa):
        """Index of the lowest threshold whose false-alarm rate is ``<= max_pfa``."""
        idx = np.nonzero(self.pfa <= max_pfa + 1e-12)[0]
        return int(idx[-1])

    def pd_at(self, max_pfa):
        return float(self.pd[self.operating_point(max_pfa)])

    def intervals(self):
        n = self.n_trials
        pfa_lo, pfa_hi = wilson_interval(np.rint(self.pfa * n), n)
        pd_lo, pd_hi = wilson_interval(np.rint(self.pd * n), n)
        return pfa_lo, pfa_hi, pd_lo, pd_hi


def roc_from_statistics(stat0, stat1):
    """Exact empirical ROC: every observed statistic is a candidate threshold."""
    stat0 = np.sort(np.asarray(stat0, dtype=float))
    stat1 = np.sort(np.asarray(stat1, dtype=float))
    if len(stat0) != len(stat1):
        raise ValueError("both hypotheses need the same number of trials")
    n = len(stat0)
    taus = np.unique(np.concatenate([stat0, stat1]))[::-1]
    pfa = (n - np.searchsorted(stat0, taus, side="right")) / n
    pd = (n - np.searchsorted(stat1, taus, side="right")) / n
    thresholds = np.concatenate([[np.inf], taus, [-np.inf]])
    pfa = np.concatenate([[0.0], pfa, [1.0]])
    pd = np.concatenate([[0.0], pd, [1.0]])
    return RocCurve(thresholds, pfa, pd, n)


def roc(s, kind=DetectorKind.CORRELATED, n_trials=100_000, order=6, seed=0, workers=1):
    """Monte Carlo ROC of one detector for scenario ``s``."""
    if n_trials < 100:
        raise ValueError("n_trials must be >= 100")
    models = hypothesis_models(s, kind, order)
    obs0 = simulate_trials(s, 0, n_trials, seed, workers)
    obs1 = simulate_trials(s, 1, n_trials, seed, workers)
    return roc_from_statistics(statistics(models, obs0, workers),
                               statistics(models, obs1, workers))


def _product_draw(model, gen, size):
    a = _cn(gen, size)
    b = _cn(gen, size)
    x = model.mu_x + model.sigma_x * a
    y = model.mu_y + model.sigma_y * (model.rho.conjugate() * a
                                      + math.sqrt(1.0 - abs(model.rho) ** 2) * b)
    return x * np.conj(y)


def sample_product(model, rng):
    """One draw of ``X conj(Y)`` directly from the model."""
    return complex(_product_draw(model, _generator(rng), 1)[0])


def sample_products(model, n, seed, workers=1):
    """``n`` product draws; block ``b`` uses stream ``(seed, 2^62 + b)``."""

    def run(lo, hi):
        gen = RngStream(seed, _PRODUCT_NAMESPACE + lo // SAMPLE_BLOCK).generator()
        return _product_draw(model, gen, hi - lo)

    return np.concatenate(_map_chunks(run, n, SAMPLE_BLOCK, workers))


HISTOGRAM = "histogram"
KDE = "kde"


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str = HISTOGRAM
    bins: int = 200
    padding: float = 0.05

    def __post_init__(self):
        if self.kind not in (HISTOGRAM, KDE):
            raise ValueError(f"unknown estimator {self.kind!r}")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")


@dataclass(frozen=True, eq=False)
class EmpiricalPdf:
    """Histogram or product-Gaussian-kernel estimate of a 2-D density."""

    estimator: EstimatorSpec
    count: int
    bounding_box: tuple
    edges: tuple = None
    density: np.ndarray = None
    bandwidth: tuple = None
    samples: np.ndarray = field(default=None, repr=False)

    @property
    def bin_area(self):
        return (self.edges[0][1] - self.edges[0][0]) * (self.edges[1][1] - self.edges[1][0])

    def __call__(self, p):
        p = np.asarray(p, dtype=complex)
        if self.estimator.kind == HISTOGRAM:
            return self._hist_eval(p)
        return self._kde_eval(p)

    def _hist_eval(self, p):
        e1, e2 = self.edges
        n1, n2 = self.density.shape
        i = np.floor((p.real - e1[0]) / (e1[1] - e1[0])).astype(np.int64)
        j = np.floor((p.imag - e2[0]) / (e2[1] - e2[0])).astype(np.int64)
        # points on the upper edge belong to the last bin, as in numpy.histogram2d
        i = np.where(p.real == e1[-1], n1 - 1, i)
        j = np.where(p.imag == e2[-1], n2 - 1, j)
        inside = (i >= 0) & (i < n1) & (j >= 0) & (j < n2)
        out = np.zeros(p.shape)
        out[inside] = self.density[i[inside], j[inside]]
        return out

    def _kde_eval(self, p):
        h1, h2 = self.bandwidth
        flat = p.ravel()
        out = np.empty(flat.shape)
        x, y = self.samples.real, self.samples.imag
        norm = 1.0 / (2 * np.pi * h1 * h2 * len(self.samples))
        step = max(1, 2_000_000 // len(x))
        for lo in range(0, len(flat), step):
            chunk = flat[lo:lo + step]
            d1 = (chunk.real[:, None] - x) / h1
            d2 = (chunk.imag[:, None] - y) / h2
            out[lo:lo + step] = norm * np.exp(-0.5 * (d1 * d1 + d2 * d2)).sum(axis=1)
        return out.reshape(p.shape)


def empirical_pdf(samples, estimator=None):
    """Estimate the density of complex ``samples``.

    Raises
    ------
    ValueError
        With fewer than 10^4 samples or zero spread along an axis.
    """
    spec = estimator or EstimatorSpec()
    samples = np.asarray(samples, dtype=complex).ravel()
    n = len(samples)
    if n < 10_000:
        raise ValueError(f"need at least 10^4 samples, got {n}")
    lo1, hi1 = samples.real.min(), samples.real.max()
    lo2, hi2 = samples.imag.min(), samples.imag.max()
    if hi1 <= lo1 or hi2 <= lo2:
        raise ValueError("degenerate samples: zero spread along an axis")
    box = (float(lo1), float(hi1), float(lo2), float(hi2))
    if spec.kind == KDE:
        factor = n ** (-1.0 / 6.0)
        bw = (float(samples.real.std(ddof=1) * factor), float(samples.imag.std(ddof=1) * factor))
        return EmpiricalPdf(spec, n, box, bandwidth=bw, samples=samples)
    pad1 = 0.5 * spec.padding * (hi1 - lo1)
    pad2 = 0.5 * spec.padding * (hi2 - lo2)
    e1 = np.linspace(lo1 - pad1, hi1 + pad1, spec.bins + 1)
    e2 = np.linspace(lo2 - pad2, hi2 + pad2, spec.bins + 1)
    counts, _, _ = np.histogram2d(samples.real, samples.imag, bins=(e1, e2))
    area = (e1[1] - e1[0]) * (e2[1] - e2[0])
    return EmpiricalPdf(spec, n, box, edges=(e1, e2), density=counts / (n * area))


@dataclass(frozen=True)
class MseReport:
    mse: float
    n_samples: int
    estimator: dict


def mse(approx, samples, estimator=None, empirical=None):
    """Mean over the samples of ``(approx(p) - empirical(p))^2``.

    This is the squared-error integral against the empirical distribution of
    the samples. ``approx`` is a callable on complex arrays.
    """
    spec = estimator or EstimatorSpec()
    samples = np.asarray(samples, dtype=complex).ravel()
    emp = empirical or empirical_pdf(samples, spec)
    diff = np.asarray(approx(samples), dtype=float) - emp(samples)
    return MseReport(float(np.mean(diff * diff)), len(samples),
                     {"kind": spec.kind, "bins": spec.bins, "padding": spec.padding})
