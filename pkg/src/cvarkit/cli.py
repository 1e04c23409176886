"""Command-line interface: ``cvarkit {estimate,irf,rank-test,verify}``.

Each subcommand writes CSV tables plus ``manifest.json`` into ``--out``.
The manifest records the arguments, input digests, seed and library
versions; it has no timestamps, so re-running a manifest's command gives
byte-identical files. Exit codes: 0 success, 2 invalid input, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import scipy

from cvarkit import __version__, kernels
from cvarkit.cvar import (
    CvarMode,
    CvarSpec,
    dummy_policy_transform,
    simple_difference_cvar,
    vecm_cvar,
)
from cvarkit.errors import NumericalError, ValidationError
from cvarkit.estimands import default_spec, verify_theorem
from cvarkit.ident import cholesky_identify, structural_irf
from cvarkit.inference import breusch_godfrey, wild_bootstrap_irf
from cvarkit.panel import RoleKind, load_panel
from cvarkit.var import bic, estimate_var, select_lag_bic
from cvarkit.vecm import VecmModel, johansen_trace_test, vecm_structural_irf

log = logging.getLogger("cvarkit")

MODES = ("var", "cvar-diff", "cvar-vecm")


class UsageError(ValidationError):
    pass


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _fraction(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {value}")
    return value


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: Path, args, outputs, extra=None) -> None:
    inputs = {}
    for attr in ("input", "roles"):
        value = getattr(args, attr, None)
        if value:
            inputs[attr] = {"path": str(value), "sha256": _digest(value)}
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    manifest = {
        "command": args.command,
        "config": config,
        "inputs": inputs,
        "seed": getattr(args, "seed", None),
        "outputs": sorted(outputs),
        "versions": {"cvarkit": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "kernel_backend": kernels.BACKEND},
    }
    if extra:
        manifest["results"] = extra
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    if not args.input or not args.roles:
        raise UsageError("--input and --roles are required")
    for path in (args.input, args.roles):
        if not os.path.exists(path):
            raise UsageError(f"no such file: {path}")
    panel = load_panel(args.input, args.roles)
    if getattr(args, "dummy_threshold", None) is not None:
        panel = dummy_policy_transform(panel, 1, threshold=args.dummy_threshold)
    elif getattr(args, "dummy_quantile", None) is not None:
        panel = dummy_policy_transform(panel, 1, args.dummy_quantile)
    return panel


def _fit(args, panel):
    """Fit the model the mode asks for; returns ``(model, ident, diagnostics)``."""
    if args.mode == "var":
        # the plain pipeline ignores control series
        keep = [lab for lab, r in zip(panel.labels, panel.roles) if r.kind is not RoleKind.CONTROL]
        model = estimate_var(panel.select(keep), args.lags)
        return model, cholesky_identify(model), None
    if args.mode == "cvar-diff":
        spec = CvarSpec.from_panel(panel, CvarMode.SIMPLE_DIFFERENCE, p=args.lags)
        return simple_difference_cvar(panel, spec)
    if args.rank is None:
        raise UsageError("--mode cvar-vecm needs --rank")
    spec = CvarSpec.from_panel(panel, CvarMode.VECM, p=args.lags, r=args.rank)
    result = vecm_cvar(panel, spec, horizons=0)
    return result.model, result.ident, None


def cmd_estimate(args) -> dict:
    out = _out_dir(args)
    panel = _load(args)
    model, ident, diag = _fit(args, panel)
    is_vecm = isinstance(model, VecmModel)
    labels = model.labels
    outputs = ["model_summary.csv", "sigma.csv", "gamma.csv", "residual_diagnostics.csv"]

    rows = []
    if not is_vecm:
        for i, eq in enumerate(labels):
            rows.append((eq, "const", 0, model.intercept[i]))
            for lag in range(model.p):
                for j, reg in enumerate(labels):
                    rows.append((eq, reg, lag + 1, model.coefs[lag, i, j]))
    else:
        for i, eq in enumerate(labels):
            rows.append((eq, "const", 0, model.intercept[i]))
            for j, reg in enumerate(labels):
                rows.append((eq, f"pi:{reg}", 1, model.pi[i, j]))
            for lag in range(model.p - 1):
                for j, reg in enumerate(labels):
                    rows.append((eq, f"d:{reg}", lag + 1, model.short_run[lag, i, j]))
    _write_csv(out / "model_summary.csv", ("equation", "regressor", "lag", "coefficient"), rows)
    _write_csv(out / "sigma.csv", ("series",) + tuple(labels),
               ([lab] + list(model.sigma[i]) for i, lab in enumerate(labels)))
    shocks = ident.shock_labels
    _write_csv(out / "gamma.csv", ("outcome", "policy", "gamma"),
               ((labels[pos], shocks[k], ident.gamma[j, k])
                for j, pos in enumerate(ident.outcome_positions) for k in range(len(shocks))))

    bg_rows = []
    for h in range(1, args.bg_lags + 1):
        res = breusch_godfrey(model, h)
        bg_rows.append((h, res.statistic, res.df, res.critical_values[0.9],
                        res.critical_values[0.95], res.critical_values[0.99], res.p_value))
    _write_csv(out / "residual_diagnostics.csv",
               ("h", "lm_statistic", "df", "cv90", "cv95", "cv99", "p_value"), bg_rows)

    results = {"n_obs_effective": model.n_obs_effective, "loglik": model.loglik}
    if not is_vecm:
        results["bic"] = bic(model)
    if args.bic_max:
        p_star, table = select_lag_bic(model.endog, args.bic_max)
        _write_csv(out / "bic_table.csv", ("p", "bic"), table)
        outputs.append("bic_table.csv")
        results["p_star"] = p_star
    if diag is not None:
        _write_csv(out / "cvar_diagnostics.csv", ("outcome", "delta_ar_proxy"),
                   zip(labels[len(ident.policy_positions):], diag.delta_ar_proxy))
        outputs.append("cvar_diagnostics.csv")
        results["treated_time_count"] = diag.treated_time_count
    _write_manifest(out, args, outputs, results)
    return results


def cmd_irf(args) -> dict:
    out = _out_dir(args)
    if args.bootstrap and args.seed is None:
        raise UsageError("--bootstrap needs --seed")
    panel = _load(args)
    model, ident, _ = _fit(args, panel)
    H = args.horizons
    if isinstance(model, VecmModel):
        if args.bootstrap:
            bundles = wild_bootstrap_irf(model, ident, H, args.bootstrap, args.level, args.seed,
                                         space="both")
        else:
            bundles = vecm_structural_irf(model, ident, H)
    else:
        if args.bootstrap:
            bundles = (wild_bootstrap_irf(model, ident, H, args.bootstrap, args.level,
                                          args.seed),)
        else:
            bundles = (structural_irf(model, ident, H),)

    point_rows, band_rows = [], []
    skipped = 0
    for bundle in bundles:
        skipped += bundle.skipped
        for h, shock, series, resp, lo, hi in bundle.rows():
            point_rows.append((h, shock, series, bundle.space, resp))
            if bundle.has_bands:
                band_rows.append((h, shock, series, bundle.space, resp, lo, hi))
    _write_csv(out / "irf_point.csv", ("horizon", "shock", "series", "space", "response"),
               point_rows)
    outputs = ["irf_point.csv"]
    if args.bootstrap:
        _write_csv(out / "irf_bands.csv",
                   ("horizon", "shock", "series", "space", "response", "lower", "upper"),
                   band_rows)
        outputs.append("irf_bands.csv")
    results = {"series": list(model.labels), "horizons": H, "skipped_replications": skipped}
    _write_manifest(out, args, outputs, results)
    return results


def cmd_rank_test(args) -> dict:
    out = _out_dir(args)
    panel = _load(args)
    if panel.n_series < 2:
        raise UsageError("rank testing needs at least two series")
    critical = "published" if args.critical == "published" else None
    res = johansen_trace_test(panel, args.lags, level=args.level, critical_values=critical)
    _write_csv(out / "trace_table.csv", ("r", "trace_stat", "critical", "reject", "eigenvalue"),
               ((r, stat, crit, int(rej), res.eigenvalues[r]) for r, stat, crit, rej in res.rows()))
    results = {"selected_rank": res.selected_rank, "n_obs_effective": res.n_obs_effective}
    _write_manifest(out, args, ["trace_table.csv"], results)
    return results


def cmd_verify(args) -> dict:
    out = _out_dir(args)
    if args.seed is None:
        raise UsageError("verify needs --seed")
    overrides = {"T": args.T, "seed": args.seed}
    for key in ("policy", "pi", "sigma", "zero_prob", "response", "effect", "ar",
                "selection_bias", "noise_sd"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    spec = default_spec(args.theorem, **overrides)
    report = verify_theorem(args.theorem, spec, args.reps)
    with open(out / "verification_report.jsonl", "w", encoding="utf-8") as fh:
        fh.write(report.to_jsonl())
    outputs = ["verification_report.jsonl"]
    if report.extras.get("mixture") is not None:
        _write_csv(out / "weight_decomposition.csv", ("component", "value"),
                   [("q0", report.extras["q0"]), ("int_q1", report.extras["q1_mass"]),
                    ("mixture", report.extras["mixture"]), ("acr", report.extras["acr"]),
                    ("ate", report.extras["ate"])])
        outputs.append("weight_decomposition.csv")
    print(report.summary_line())
    results = {"passed": report.passed, "mean_gamma": report.mean_gamma, "truth": report.truth}
    _write_manifest(out, args, outputs, results)
    return results


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvarkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--input", required=True, help="CSV panel, first column is time")
        p.add_argument("--roles", required=True, help="column = policy:k | treated:j | control:j")
        p.add_argument("--lags", type=_positive_int, default=1)
        p.add_argument("--out", default=".")
        p.add_argument("--dummy-quantile", type=_fraction, default=None)
        p.add_argument("--dummy-threshold", type=float, default=None,
                       help="absolute cut-off instead of a quantile")
        p.add_argument("--seed", type=int, default=None)

    def model_args(p):
        p.add_argument("--mode", choices=MODES, default="var")
        p.add_argument("--rank", type=_nonneg_int, default=None)

    p = sub.add_parser("estimate", help="fit a model and write coefficient tables")
    data_args(p)
    model_args(p)
    p.add_argument("--bic-max", type=_positive_int, default=None, help="also tabulate BIC up to this lag")
    p.add_argument("--bg-lags", type=_positive_int, default=3)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("irf", help="structural impulse responses, optionally with bands")
    data_args(p)
    model_args(p)
    p.add_argument("--horizons", type=_nonneg_int, default=40)
    p.add_argument("--bootstrap", type=_nonneg_int, default=0, help="replications (0 = none)")
    p.add_argument("--level", type=_fraction, default=0.95)
    p.set_defaults(func=cmd_irf)

    p = sub.add_parser("rank-test", help="Johansen trace test")
    data_args(p)
    p.add_argument("--level", type=float, choices=(0.90, 0.95, 0.99), default=0.95)
    p.add_argument("--critical", choices=("table", "published"), default="table")
    p.set_defaults(func=cmd_rank_test)

    p = sub.add_parser("verify", help="Monte Carlo check of an identification result")
    p.add_argument("--theorem", required=True, choices=("T1", "T2", "T3", "T4", "T5", "T8", "T9"))
    p.add_argument("--policy", choices=("bernoulli", "gaussian", "nonnegative"), default=None)
    p.add_argument("--pi", type=_fraction, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--zero-prob", type=float, default=None)
    p.add_argument("--response", default=None, help="linear, square, cube or step")
    p.add_argument("--effect", type=float, default=None)
    p.add_argument("--T", type=_positive_int, default=10_000)
    p.add_argument("--reps", type=_positive_int, default=50)
    p.add_argument("--ar", type=float, default=None)
    p.add_argument("--noise-sd", type=float, default=None)
    p.add_argument("--selection-bias", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_verify)
    return parser


def _apply_thread_cap() -> None:
    threads = os.environ.get("CVARKIT_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
