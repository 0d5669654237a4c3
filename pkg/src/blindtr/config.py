"""Run configuration: one flat JSON document, every key overridable from the command line."""

from dataclasses import dataclass, fields, asdict
import json
import math
from typing import Optional

from .detector import DetectorKind, Scenario, hypothesis_models, scr_to_pc, snr_to_noise
from .product import ProductModel


class ConfigError(ValueError):
    """Invalid or contradictory configuration."""


MODEL_KEYS = ("mu_x_re", "mu_x_im", "mu_y_re", "mu_y_im", "sigma_x", "sigma_y", "rho_re", "rho_im")


@dataclass
class RunConfig:
    # scenario
    target_re: Optional[float] = None
    target_im: Optional[float] = None
    scr_db: Optional[float] = None
    clutter_psd: Optional[float] = None
    snr_db: Optional[float] = None
    noise_psd: Optional[float] = None
    tx_energy: float = 1.0
    bins: Optional[int] = None
    rho_c_re: float = 0.0
    rho_c_im: float = 0.0
    # raw product model (pdf-eval, mse, moments)
    mu_x_re: Optional[float] = None
    mu_x_im: Optional[float] = None
    mu_y_re: Optional[float] = None
    mu_y_im: Optional[float] = None
    sigma_x: Optional[float] = None
    sigma_y: Optional[float] = None
    rho_re: Optional[float] = None
    rho_im: Optional[float] = None
    hypothesis: str = "alt"
    # detector
    kind: str = "correlated"
    edgeworth_order: int = 6
    # simulation
    n_trials: int = 100_000
    seed: Optional[int] = None
    workers: int = 1
    # pdf-eval grid
    source: str = "edgeworth"
    p1_min: float = -2.0
    p1_max: float = 12.0
    p2_min: float = -2.0
    p2_max: float = 12.0
    n1: int = 100
    n2: int = 100
    # mse
    scales: tuple = (0.5, 1.0, 2.0)
    n_samples: int = 1_000_000
    estimator: str = "histogram"
    hist_bins: int = 200
    # moments
    order: int = 6
    # output
    output: Optional[str] = None
    format: Optional[str] = None

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_sources(cls, document=None, overrides=None):
        merged = {}
        for src in (document or {}, overrides or {}):
            unknown = set(src) - set(cls.field_names())
            if unknown:
                raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
            merged.update({k: v for k, v in src.items() if v is not None})
        try:
            cfg = cls(**merged)
            cfg._coerce()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    @classmethod
    def load(cls, path=None, overrides=None):
        document = None
        if path:
            try:
                with open(path) as fh:
                    document = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(document, dict):
                raise ConfigError("config file must hold one flat JSON object")
        return cls.from_sources(document, overrides)

    def _coerce(self):
        hints = {f.name: f.type for f in fields(self)}
        for name, hint in hints.items():
            value = getattr(self, name)
            if value is None:
                continue
            if name == "scales":
                if isinstance(value, str):
                    value = [v for v in value.split(",") if v.strip()]
                value = tuple(float(v) for v in value)
                if not value or any(not (math.isfinite(v) and v > 0) for v in value):
                    raise ConfigError("scales must be positive numbers")
            elif "int" in str(hint):
                if isinstance(value, float) and not value.is_integer():
                    raise ConfigError(f"{name} must be an integer")
                value = int(value)
            elif "float" in str(hint):
                value = float(value)
                if not math.isfinite(value):
                    raise ConfigError(f"{name} must be finite")
            setattr(self, name, value)

    def to_dict(self):
        d = asdict(self)
        d["scales"] = list(self.scales)
        return d

    # --- derived objects -------------------------------------------------

    def require_seed(self):
        if self.seed is None:
            raise ConfigError("randomised commands need an explicit seed")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self.seed

    def detector_kind(self):
        try:
            return DetectorKind.parse(self.kind)
        except ValueError:
            raise ConfigError(f"unknown detector kind {self.kind!r}") from None

    def has_scenario(self):
        return any(getattr(self, k) is not None
                   for k in ("target_re", "target_im", "scr_db", "clutter_psd", "snr_db",
                             "noise_psd", "bins"))

    def scenario(self):
        if (self.scr_db is None) == (self.clutter_psd is None):
            raise ConfigError("give exactly one of scr_db and clutter_psd")
        if (self.snr_db is None) == (self.noise_psd is None):
            raise ConfigError("give exactly one of snr_db and noise_psd")
        if self.bins is None:
            raise ConfigError("bins (Q) is required")
        target = complex(self.target_re or 0.0, self.target_im or 0.0)
        try:
            pc = self.clutter_psd if self.scr_db is None else scr_to_pc(self.scr_db, target)
            nv = (self.noise_psd if self.snr_db is None
                  else snr_to_noise(self.snr_db, target, self.tx_energy, self.bins))
            return Scenario(target, pc, nv, self.tx_energy, self.bins,
                            complex(self.rho_c_re, self.rho_c_im))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def product_model(self):
        """Model from the raw keys, or from the scenario's chosen hypothesis."""
        given = {k: getattr(self, k) for k in MODEL_KEYS if getattr(self, k) is not None}
        if given:
            if self.has_scenario():
                raise ConfigError("give either raw model keys or scenario keys, not both")
            if "sigma_x" not in given or "sigma_y" not in given:
                raise ConfigError("sigma_x and sigma_y are required for a raw model")
            try:
                return ProductModel.from_dict(given)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if not self.has_scenario():
            raise ConfigError("no model given: supply raw model keys or a scenario")
        if self.hypothesis not in ("alt", "null"):
            raise ConfigError("hypothesis must be 'alt' or 'null'")
        models = hypothesis_models(self.scenario(), self.detector_kind(), 2)
        return models.alt_model if self.hypothesis == "alt" else models.null_model
