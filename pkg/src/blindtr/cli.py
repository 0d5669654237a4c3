"""Command-line interface: ``blindtr {pdf-eval,mse,roc,moments}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import csv
import io
import json
import sys
from functools import partial

import numpy as np

from . import montecarlo as mc
from .config import ConfigError, RunConfig
from .edgeworth import build_edgeworth, edgeworth_pdf, gaussian_pdf
from .errors import NumericalError
from .moments import complex_moments, cumulants, real_moments
from .product import cf_invert_pdf, null_pdf

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _num(x):
    return repr(float(x))


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_num(v) for v in row])
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(obj, indent=2) + "\n"


def _table(cfg, header, rows, default="csv"):
    fmt = cfg.format or default
    if fmt == "csv":
        return _csv_text(header, rows)
    if fmt == "json":
        return _json_text([dict(zip(header, map(float, row))) for row in rows])
    raise ConfigError(f"unknown output format {fmt!r}")


def cmd_pdf_eval(cfg):
    model = cfg.product_model()
    if cfg.n1 < 1 or cfg.n2 < 1:
        raise ConfigError("grid needs n1, n2 >= 1")
    p1 = np.linspace(cfg.p1_min, cfg.p1_max, cfg.n1)
    p2 = np.linspace(cfg.p2_min, cfg.p2_max, cfg.n2)
    grid1, grid2 = np.meshgrid(p1, p2, indexing="ij")
    pts = (grid1 + 1j * grid2).ravel()
    if cfg.source == "edgeworth":
        dens = edgeworth_pdf(build_edgeworth(model, cfg.edgeworth_order), pts)
    elif cfg.source == "gaussian":
        dens = gaussian_pdf(build_edgeworth(model, 2), pts)
    elif cfg.source == "null_exact":
        if not model.is_zero_mean:
            raise ConfigError("null_exact needs a zero-mean model")
        dens = np.full(pts.shape, np.inf)
        nz = pts != 0
        dens[nz] = null_pdf(model, pts[nz])
    elif cfg.source == "cf_numeric":
        dens = np.array([cf_invert_pdf(model, p) if p != 0 else np.inf for p in pts])
    else:
        raise ConfigError(f"unknown source {cfg.source!r}")
    rows = zip(pts.real, pts.imag, dens)
    return _table(cfg, ["p1", "p2", "density"], rows)


def _estimator(cfg):
    try:
        return mc.EstimatorSpec(kind=cfg.estimator, bins=cfg.hist_bins)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_mse(cfg):
    seed = cfg.require_seed()
    base = cfg.product_model()
    spec = _estimator(cfg)
    if cfg.n_samples < 10_000:
        raise ConfigError("n_samples must be >= 10^4")
    report = []
    for scale in cfg.scales:
        model = base.scaled_means(scale)
        samples = mc.sample_products(model, cfg.n_samples, seed, cfg.workers)
        approx = partial(edgeworth_pdf, build_edgeworth(model, cfg.edgeworth_order))
        res = mc.mse(approx, samples, spec)
        report.append({
            "scale": scale,
            "mu_x": {"re": model.mu_x.real, "im": model.mu_x.imag},
            "mu_y": {"re": model.mu_y.real, "im": model.mu_y.imag},
            "mse": res.mse,
            "n_samples": res.n_samples,
        })
    fmt = cfg.format or "json"
    if fmt == "json":
        return _json_text(report)
    rows = [(r["scale"], r["mu_x"]["re"], r["mu_x"]["im"], r["mu_y"]["re"], r["mu_y"]["im"],
             r["mse"], r["n_samples"]) for r in report]
    return _table(cfg, ["scale", "mu_x_re", "mu_x_im", "mu_y_re", "mu_y_im", "mse", "n_samples"],
                  rows)


ROC_HEADER = ["threshold", "pfa", "pd", "pfa_lo", "pfa_hi", "pd_lo", "pd_hi"]


def roc_rows(curve):
    return zip(curve.thresholds, curve.pfa, curve.pd, *curve.intervals())


def cmd_roc(cfg):
    seed = cfg.require_seed()
    scenario = cfg.scenario()
    if abs(scenario.target) == 0:
        raise ConfigError("the alternative hypothesis needs a nonzero target")
    if cfg.n_trials < 100:
        raise ConfigError("n_trials must be >= 100")
    curve = mc.roc(scenario, cfg.detector_kind(), cfg.n_trials, cfg.edgeworth_order, seed,
                   cfg.workers)
    return _table(cfg, ROC_HEADER, roc_rows(curve))


def cmd_moments(cfg):
    model = cfg.product_model()
    if not 2 <= cfg.order <= 8:
        raise ConfigError("order must be in [2, 8]")
    if cfg.format not in (None, "json"):
        raise ConfigError("moments only supports json output")
    cm = complex_moments(model, cfg.order)
    rm = real_moments(model, cfg.order)
    cu = cumulants(model, cfg.order)
    doc = {
        "model": model.to_dict(),
        "order": cfg.order,
        "complex_moments": [{"m": m, "n": n, "re": v.real, "im": v.imag}
                            for (m, n), v in sorted(cm.entries.items())],
        "real_moments": [{"a": a, "b": b, "value": v} for (a, b), v in sorted(rm.entries.items())],
        "cumulants": [{"nu1": a, "nu2": b, "value": v} for (a, b), v in sorted(cu.entries.items())],
        "mean": list(cu.mean),
        "covariance": cu.covariance.tolist(),
    }
    return _json_text(doc)


COMMANDS = {"pdf-eval": cmd_pdf_eval, "mse": cmd_mse, "roc": cmd_roc, "moments": cmd_moments}


def build_parser():
    parser = argparse.ArgumentParser(prog="blindtr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat JSON config file")
        for field in RunConfig.field_names():
            p.add_argument(f"--{field}", dest=field, default=None,
                           help=argparse.SUPPRESS if field == "format" else None)
    return parser


def _parse_flags(ns):
    overrides = {}
    for key in RunConfig.field_names():
        raw = getattr(ns, key, None)
        if raw is None:
            continue
        if key in ("kind", "source", "estimator", "output", "format", "hypothesis", "scales"):
            overrides[key] = raw
        else:
            try:
                overrides[key] = json.loads(raw)
            except json.JSONDecodeError:
                raise ConfigError(f"--{key}: cannot parse {raw!r}") from None
    return overrides


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = RunConfig.load(ns.config, _parse_flags(ns))
        text = COMMANDS[ns.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if cfg.output and cfg.output != "-":
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
