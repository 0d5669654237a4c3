"""Blind time-reversal detection with correlated channels.

Exact distribution theory for the product of two correlated complex Gaussians,
an Edgeworth approximation of its density, the resulting likelihood-ratio
detector, and a seeded Monte Carlo harness.
"""

from .product import (ProductModel, ProductSummary, QuadratureSpec, cf_invert_pdf, char_fn,
                      null_pdf, product_summary)
from .special import bessel_k0
from .moments import complex_moment, cumulants, jm_matrix, permanent, real_moments
from .edgeworth import EdgeworthModel, build_edgeworth, edgeworth_pdf, gaussian_pdf
from .detector import (DetectorKind, HypothesisModels, Scenario, decide, effective_rho,
                       hypothesis_models, llr_statistic)
from .montecarlo import RocCurve, empirical_pdf, mse, roc, sample_products, simulate_trial

__version__ = "0.1.0"

__all__ = [
    "ProductModel", "ProductSummary", "QuadratureSpec", "cf_invert_pdf", "char_fn", "null_pdf",
    "product_summary", "bessel_k0", "complex_moment", "cumulants", "jm_matrix", "permanent",
    "real_moments", "EdgeworthModel", "build_edgeworth", "edgeworth_pdf", "gaussian_pdf",
    "DetectorKind", "HypothesisModels", "Scenario", "decide", "effective_rho", "hypothesis_models",
    "llr_statistic", "RocCurve", "empirical_pdf", "mse", "roc", "sample_products", "simulate_trial",
]
