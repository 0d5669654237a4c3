"""Blind time-reversal likelihood-ratio detector.

A probe ``S = sqrt(E_s / Q)`` is sent on ``Q`` frequency bins, the response is
phase-conjugated, energy-normalised by ``k`` and retransmitted. Ignoring the
retransmission noise, each bin of the second response is ``X conj(Y)`` with
``X = T + C_r`` and ``Y = k ((T + C_p) S + V_p)``. The detector compares the
Edgeworth density of that product under a target ``T`` against the exact
zero-mean density under ``T = 0``.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .edgeworth import DEFAULT_ORDER, centred_quadratic, build_edgeworth
from .product import ProductModel, log_null_pdf

PDF_FLOOR = 1e-300
LOG_PDF_FLOOR = math.log(PDF_FLOOR)
RELATIVE_FLOOR = 1e-2
ORIGIN_CLAMP = 1e-12


class DetectorKind(str, Enum):
    CORRELATED = "correlated"             # LRT-C
    INDEPENDENT_BASELINE = "independent"  # LRT-I: channel correlation ignored

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"lrt-c": cls.CORRELATED, "lrt-i": cls.INDEPENDENT_BASELINE,
                   "independent_baseline": cls.INDEPENDENT_BASELINE}
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class Scenario:
    """Physical description of one detection experiment (flat clutter PSD)."""

    target: complex
    clutter_psd: float
    noise_psd: float
    tx_energy: float
    bins: int
    channel_corr: complex

    def __post_init__(self):
        object.__setattr__(self, "target", complex(self.target))
        object.__setattr__(self, "channel_corr", complex(self.channel_corr))
        if not self.clutter_psd > 0:
            raise ValueError("clutter_psd must be > 0")
        if not self.noise_psd >= 0:
            raise ValueError("noise_psd must be >= 0")
        if not self.tx_energy > 0:
            raise ValueError("tx_energy must be > 0")
        if int(self.bins) != self.bins or self.bins < 1:
            raise ValueError("bins must be a positive integer")
        if not abs(self.channel_corr) < 1:
            raise ValueError("|channel_corr| must be < 1")
        object.__setattr__(self, "bins", int(self.bins))
        for name in ("clutter_psd", "noise_psd", "tx_energy"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def probe_amplitude(self):
        return math.sqrt(self.tx_energy / self.bins)

    @classmethod
    def from_db(cls, target, scr_db, snr_db, bins, channel_corr, tx_energy=1.0):
        return cls(target=target, clutter_psd=scr_to_pc(scr_db, target),
                   noise_psd=snr_to_noise(snr_db, target, tx_energy, bins),
                   tx_energy=tx_energy, bins=bins, channel_corr=channel_corr)


def scr_to_pc(scr_db, target):
    """Clutter PSD from ``SCR = 10 log10(|T|^2 / P_c)``."""
    if abs(target) == 0:
        raise ValueError("SCR is undefined for a zero target response")
    return float(abs(target) ** 2 * 10.0 ** (-scr_db / 10.0))


def snr_to_noise(snr_db, target, tx_energy, bins):
    """Noise PSD from ``SNR = 10 log10(E_s |T|^2 / (Q sigma_v^2))``."""
    if abs(target) == 0:
        raise ValueError("SNR is undefined for a zero target response")
    return float(tx_energy * abs(target) ** 2 * 10.0 ** (-snr_db / 10.0) / bins)


def effective_rho(s):
    """Correlation of ``(X, Y)``: ``conj(rho_c) / sqrt(1 + sigma_v^2 Q / (P_c E_s))``."""
    return s.channel_corr.conjugate() / math.sqrt(
        1.0 + s.noise_psd * s.bins / (s.clutter_psd * s.tx_energy))


def deterministic_k(s, target):
    """Normalisation ``k`` with the received energy replaced by its expectation."""
    energy = (abs(target) ** 2 + s.clutter_psd) * s.tx_energy + s.bins * s.noise_psd
    return math.sqrt(s.tx_energy / energy)


def _pair_model(s, target, rho):
    k = deterministic_k(s, target)
    sigma_y = k * math.sqrt(s.clutter_psd * s.tx_energy / s.bins + s.noise_psd)
    return ProductModel(mu_x=target, mu_y=k * target * s.probe_amplitude,
                        sigma_x=math.sqrt(s.clutter_psd), sigma_y=sigma_y, rho=rho)


@dataclass(frozen=True, eq=False)
class HypothesisModels:
    """Per-bin densities under both hypotheses.

    The alternative density is the Edgeworth approximation, floored at
    ``relative_floor`` times its Gaussian base wherever the expansion dips
    below that (it can go negative in the tails), and at ``PDF_FLOOR`` overall.
    """

    null_model: ProductModel
    alt_model: ProductModel
    alt_pdf: object
    kind: DetectorKind
    relative_floor: float = RELATIVE_FLOOR

    def log_alt_density(self, obs):
        obs = np.asarray(obs, dtype=complex)
        em = self.alt_pdf
        z1, z2, q = centred_quadratic(em, obs.real, obs.imag)
        factor = 1.0 + em.correction(z1, z2) if em.correction else np.ones_like(q)
        log_f = np.log(em._norm) - 0.5 * q + np.log(np.maximum(factor, self.relative_floor))
        return np.maximum(log_f, LOG_PDF_FLOOR)

    def log_null_density(self, obs):
        obs = np.asarray(obs, dtype=complex)
        r = np.abs(obs)
        # unit direction survives the clamp; exact zeros point along +real
        direction = np.where(r > 0, obs / np.where(r > 0, r, 1.0), 1.0)
        return log_null_pdf(self.null_model, direction * np.maximum(r, ORIGIN_CLAMP))


def hypothesis_models(s, kind=DetectorKind.CORRELATED, order=DEFAULT_ORDER,
                      relative_floor=RELATIVE_FLOOR):
    """Per-bin product models under ``T = 0`` and ``T = s.target``.

    Each hypothesis uses its own deterministic ``k``. The independent
    baseline sets the correlation to zero in both models.
    """
    kind = DetectorKind.parse(kind)
    rho = effective_rho(s) if kind is DetectorKind.CORRELATED else 0j
    null = _pair_model(s, 0j, rho)
    alt = _pair_model(s, s.target, rho)
    return HypothesisModels(null, alt, build_edgeworth(alt, order), kind, relative_floor)


def llr_statistic(models, observations):
    """Log-likelihood ratio ``sum_q log f_T(p_q) - log f_0(p_q)``.

    ``observations`` has the ``Q`` bins on its last axis; leading axes are
    treated as independent trials and give an array of statistics.
    """
    obs = np.asarray(observations, dtype=complex)
    if obs.ndim == 0 or obs.shape[-1] == 0:
        raise ValueError("at least one observation is required")
    terms = models.log_alt_density(obs) - models.log_null_density(obs)
    out = terms.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    statistic: float
    decision: bool
    threshold: float


def decide(statistic, threshold):
    """Declare a target when the statistic strictly exceeds the threshold."""
    return TestResult(float(statistic), bool(statistic > threshold), float(threshold))
