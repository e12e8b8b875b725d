"""Command-line front door.

Subcommands (each driven by a YAML configuration file):

    coeffs   build a coefficient tensor, emit it with norm/trace diagnostics
    expand   sample truncated expansion realizations and the exact
             Ito/Stratonovich correction split
    verify   pathwise mean-square error of expansions against the
             integral-sum oracle, with Parseval comparison where available
    diag     limit-theorem diagnostics: trace residuals, closed-form tables,
             tail-coefficient trends, double-pair constants
    sde      strong convergence study for Euler/Milstein driven by the
             expansion engine

Exit codes: 0 success, 2 configuration fails a validity precondition,
3 numeric failure, 64 unknown subcommand, 65 malformed configuration file.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np
import yaml

from .basis import BasisSystem, DomainError, Interval, LEGENDRE, TRIGONOMETRIC
from .coeffs import (TensorSizeError, WeightFn, coeff_tensor, kernel_norm_sq,
                     trace_sum, half_weight_product_integral, weight_monomial,
                     weight_one)
from .diagnostics import (DELTA_KINDS, b_constants, delta_second_moment,
                          delta_table, delta_sum_trend, residual_eq15)
from .expand import (ito_truncated_batch, sample_table_batch,
                     strat_correction_batch, strat_guarantee_violations,
                     strat_truncated_batch)
from .oracle import mse_pathwise
from .quadrature import QuadratureError
from .reporting import ensure_dir, flatten_config, write_report, write_table
from .sde import (EULER, MILSTEIN, IntegrationError, commutative_model,
                  linear_model, noncommutative_model, strong_order_study)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64
EXIT_CONFIG = 65

SUBCOMMANDS = ("coeffs", "expand", "verify", "diag", "sde")

OUTPUT_DIR_ENV = "STOCHINT_OUTPUT_DIR"

_MODELS = {
    "noncommutative": noncommutative_model,
    "commutative": commutative_model,
    "linear": linear_model,
}


class ConfigError(Exception):
    """Configuration file cannot be read or has the wrong shape."""


class ValidationError(Exception):
    """Configuration is well-formed but outside the supported guarantees."""


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a mapping")
    return cfg


def _interval(cfg: dict) -> Interval:
    iv = cfg.get("interval", {"t": 0.0, "T": 1.0})
    try:
        return Interval(float(iv["t"]), float(iv["T"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError("interval needs numeric fields t and T") from exc
    except DomainError as exc:
        raise ValidationError(str(exc)) from exc


def _basis(cfg: dict, interval: Interval) -> BasisSystem:
    kind = cfg.get("basis", LEGENDRE)
    if kind not in (LEGENDRE, TRIGONOMETRIC):
        raise ValidationError(f"basis must be {LEGENDRE!r} or {TRIGONOMETRIC!r}")
    return BasisSystem(kind, interval)


def _weights(spec, k: int, interval: Interval) -> list[WeightFn]:
    if spec is None:
        return [weight_one(interval) for _ in range(k)]
    if not isinstance(spec, list) or len(spec) != k:
        raise ValidationError(f"need exactly {k} weight entries")
    out = []
    for i, item in enumerate(spec):
        kind = item.get("kind", "one") if isinstance(item, dict) else item
        if kind == "one":
            out.append(weight_one(interval))
        elif kind == "monomial":
            out.append(weight_monomial(int(item.get("q", 1)), interval))
        else:
            raise ValidationError(
                f"weight {i + 1}: config files support kinds 'one' and 'monomial'")
    return out


def _orders(section: dict, k: int):
    p = section.get("p", 8)
    if isinstance(p, (list, tuple)):
        orders = tuple(int(v) for v in p)
        if len(orders) != k:
            raise ValidationError(f"p must have {k} entries or be a scalar")
        if k >= 3 and len(set(orders)) != 1:
            raise ValidationError(
                "multiplicity-3 and -4 expansion limits are stated for a single "
                "shared truncation order; rectangular p is limited to k <= 2")
        return orders
    return (int(p),) * k


def _indices(section: dict, k: int) -> tuple[int, ...]:
    idx = section.get("indices", list(range(1, k + 1)))
    if not isinstance(idx, (list, tuple)) or len(idx) != k:
        raise ValidationError(f"indices must list {k} entries")
    idx = tuple(int(i) for i in idx)
    if any(i < 0 for i in idx):
        raise ValidationError("noise indices must be nonnegative (0 = time component)")
    return idx


def _check_strat_scope(k: int, weights, allow: bool):
    violations = strat_guarantee_violations(k, weights)
    if violations and not allow:
        raise ValidationError("; ".join(violations) +
                              " (pass --allow-unguaranteed to run anyway)")


def _report_header(subcommand: str, cfg: dict, seed: int):
    entries = [("subcommand", subcommand), ("seed", seed)]
    entries.extend(flatten_config(cfg))
    return entries


def run_coeffs(cfg: dict, outdir: str, allow: bool) -> int:
    section = cfg.get("coeffs", {})
    interval = _interval(cfg)
    basis = _basis(cfg, interval)
    k = int(section.get("k", 2))
    if k not in (1, 2, 3, 4):
        raise ValidationError("multiplicity k must be 1..4")
    orders = _orders(section, k)
    weights = _weights(section.get("weights"), k, interval)
    try:
        C = coeff_tensor(k, orders, weights, basis)
    except TensorSizeError as exc:
        raise ValidationError(str(exc)) from exc

    header = [f"j{i + 1}" for i in range(k)] + ["value"]
    rows = ([*index, float(C.values[index])] for index in np.ndindex(C.values.shape))
    write_table(os.path.join(outdir, "tensor.csv"), header, rows)

    norm = kernel_norm_sq(k, weights)
    mass = float((C.values ** 2).sum())
    entries = _report_header("coeffs", cfg, int(cfg.get("seed", 0)))
    entries += [("kernel_norm_sq", norm), ("coeff_sq_mass", mass),
                ("bessel_residual", norm - mass)]
    if k == 2:
        tr = trace_sum(min(orders), weights, basis)
        entries += [("trace_sum", tr),
                    ("trace_limit", half_weight_product_integral(weights)),
                    ("trace_residual", residual_eq15(min(orders), weights[0],
                                                     weights[1], basis))]
    write_report(os.path.join(outdir, "coeffs_report.txt"), entries)
    return EXIT_OK


def run_expand(cfg: dict, outdir: str, allow: bool) -> int:
    section = cfg.get("expand", {})
    interval = _interval(cfg)
    basis = _basis(cfg, interval)
    k = int(section.get("k", 2))
    if k not in (1, 2, 3, 4):
        raise ValidationError("multiplicity k must be 1..4")
    orders = _orders(section, k)
    weights = _weights(section.get("weights"), k, interval)
    idx = _indices(section, k)
    _check_strat_scope(k, weights, allow)
    seed = int(cfg.get("seed", 0))
    samples = int(section.get("mc_samples", 100))
    if samples < 1:
        raise ValidationError("mc_samples must be positive")
    m = max(max(idx), 1)
    try:
        C = coeff_tensor(k, orders, weights, basis)
    except TensorSizeError as exc:
        raise ValidationError(str(exc)) from exc
    Z = sample_table_batch(seed, samples, m, max(orders), basis)
    ito = ito_truncated_batch(C, Z, idx)
    strat = strat_truncated_batch(C, Z, idx)
    corr = strat_correction_batch(C, Z, idx)
    resid = strat - ito - corr
    rows = ([s, float(ito[s]), float(strat[s]), float(corr[s]), float(resid[s])]
            for s in range(samples))
    write_table(os.path.join(outdir, "realizations.csv"),
                ["sample", "ito", "strat", "correction", "identity_residual"], rows)
    entries = _report_header("expand", cfg, seed)
    entries += [("ito_mean", float(ito.mean())), ("ito_var", float(ito.var())),
                ("strat_mean", float(strat.mean())),
                ("max_identity_residual", float(np.abs(resid).max()))]
    write_report(os.path.join(outdir, "expand_report.txt"), entries)
    if not np.all(np.isfinite(ito)) or not np.all(np.isfinite(strat)):
        raise FloatingPointError("expansion produced non-finite realizations")
    return EXIT_OK


def run_verify(cfg: dict, outdir: str, allow: bool) -> int:
    section = cfg.get("verify", {})
    interval = _interval(cfg)
    basis = _basis(cfg, interval)
    k = int(section.get("k", 2))
    if k not in (1, 2, 3, 4):
        raise ValidationError("multiplicity k must be 1..4")
    p_raw = section.get("p_list", [1, 4, 16])
    if not isinstance(p_raw, list) or not p_raw:
        raise ValidationError("p_list must be a nonempty list")
    p_list = []
    for p in p_raw:
        p_list.append(_orders({"p": p}, k))
    weights = _weights(section.get("weights"), k, interval)
    idx = _indices(section, k)
    mode = section.get("mode", "ito")
    if mode not in ("ito", "strat"):
        raise ValidationError("mode must be 'ito' or 'strat'")
    if mode == "strat":
        _check_strat_scope(k, weights, allow)
    N = int(section.get("grid_n", 1 << 12))
    if N < 2:
        raise ValidationError("grid_n must be at least 2")
    seeds = int(section.get("mc_samples", 1000))
    seed = int(cfg.get("seed", 0))
    pmax = tuple(max(o[d] for o in p_list) for d in range(k))
    try:
        C = coeff_tensor(k, pmax, weights, basis)
    except TensorSizeError as exc:
        raise ValidationError(str(exc)) from exc
    rows = []
    for orders in p_list:
        res = mse_pathwise(k, weights, idx, orders, N, seeds, C, mode=mode,
                           seed0=seed)
        bound = math.nan if res.parseval_bound is None else res.parseval_bound
        rows.append([max(orders), res.mse, bound, res.ci_halfwidth])
    write_table(os.path.join(outdir, "mse.csv"),
                ["p", "mse", "parseval_bound", "ci_halfwidth"], rows)
    entries = _report_header("verify", cfg, seed)
    ps = np.array([r[0] for r in rows], dtype=float)
    mses = np.array([r[1] for r in rows])
    if len(rows) >= 2 and np.all(mses > 0) and np.all(ps > 0):
        slope = float(np.polyfit(np.log(ps), np.log(mses), 1)[0])
        entries.append(("loglog_slope", slope))
    entries.append(("grid_n", N))
    entries.append(("n_seeds", seeds))
    write_report(os.path.join(outdir, "verify_report.txt"), entries)
    if not np.all(np.isfinite(mses)):
        raise FloatingPointError("mse study produced non-finite values")
    return EXIT_OK


def run_diag(cfg: dict, outdir: str, allow: bool) -> int:
    section = cfg.get("diag", {})
    interval = _interval(cfg)
    basis = _basis(cfg, interval)
    L = interval.length
    entries = _report_header("diag", cfg, int(cfg.get("seed", 0)))

    trace_orders = [int(v) for v in section.get("trace_orders", [8, 32, 128])]
    w_one = weight_one(interval)
    for p in trace_orders:
        entries.append((f"eq_trace_residual_one_p{p}",
                        residual_eq15(p, w_one, w_one, basis)))
    tw = _weights(section.get("trace_weights"), 2, interval)
    for p in trace_orders:
        entries.append((f"eq_trace_residual_weighted_p{p}",
                        residual_eq15(p, tw[0], tw[1], basis)))

    g_orders = [int(v) for v in section.get("g_orders", [3, 5, 10, 20])]
    for p in g_orders:
        table = delta_table("g", p, basis)
        entries.append((f"g_corner_p{p}", float(table[p, p])))
        if basis.kind == LEGENDRE:
            closed = L ** 2 / (8.0 * (2 * p + 3) * (2 * p + 1))
            entries.append((f"g_corner_closed_p{p}", closed))
            entries.append((f"g_corner_dev_p{p}", abs(float(table[p, p]) - closed)))
            sym = table + table.T
            sym[p, p] = 0.0
            entries.append((f"g_offcorner_max_p{p}", float(np.abs(sym).max())))
        else:
            entries.append((f"g_00_p{p}", float(table[0, 0])))
            diag = np.abs(np.diag(table))[1:]
            entries.append((f"g_offzero_diag_max_p{p}", float(diag.max()) if diag.size else 0.0))

    kinds = section.get("kinds", ["a", "g"])
    p_list = [int(v) for v in section.get("p_list", [8, 16, 32])]
    rows = []
    for kind in kinds:
        if kind not in DELTA_KINDS:
            raise ValidationError(f"unknown coefficient family {kind!r}")
        trend = delta_sum_trend(kind, p_list, basis)
        for p, v in zip(p_list, trend):
            rows.append([kind, p, float(v),
                         delta_second_moment(kind, p, "equal", basis)])
    write_table(os.path.join(outdir, "delta_trend.csv"),
                ["kind", "p", "diag_sum", "second_moment_equal"], rows)

    pb = int(section.get("b_constants_p", 16))
    try:
        B1, B2, B3 = b_constants(pb, basis)
    except TensorSizeError as exc:
        raise ValidationError(str(exc)) from exc
    entries += [("b1_partial", B1), ("b2_partial", B2), ("b3_partial", B3),
                ("b1_limit", L ** 2 / 8.0),
                ("b1_dev", abs(B1 - L ** 2 / 8.0)), ("b2_dev", abs(B2)),
                ("b3_dev", abs(B3))]
    write_report(os.path.join(outdir, "diag_report.txt"), entries)
    vals = [v for _, v in entries if isinstance(v, float)]
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("diagnostics produced non-finite values")
    return EXIT_OK


def run_sde(cfg: dict, outdir: str, allow: bool) -> int:
    section = cfg.get("sde", {})
    model_name = section.get("model", "noncommutative")
    if model_name not in _MODELS:
        raise ValidationError(f"unknown model {model_name!r}; choose from {sorted(_MODELS)}")
    model = _MODELS[model_name]()
    schemes = section.get("scheme", "both")
    if schemes == "both":
        schemes = [EULER, MILSTEIN]
    elif schemes in (EULER, MILSTEIN):
        schemes = [schemes]
    else:
        raise ValidationError("scheme must be 'euler', 'milstein' or 'both'")
    exps = [int(e) for e in section.get("h_exponents", [4, 5, 6, 7])]
    h_list = [2.0 ** -e for e in exps]
    n_paths = int(section.get("n_paths", 200))
    p = int(section.get("p", 16))
    seed = int(cfg.get("seed", 0))
    entries = _report_header("sde", cfg, seed)
    rows = []
    for scheme in schemes:
        res = strong_order_study(model, scheme, h_list, n_paths, seed=seed, p=p)
        for h, err in zip(res.h, res.errors):
            rows.append([scheme, float(h), float(err)])
        entries.append((f"slope_{scheme}", res.slope))
        entries.append((f"reference_h_{scheme}", res.reference_h))
    write_table(os.path.join(outdir, "strong_order.csv"),
                ["scheme", "h", "error"], rows)
    write_report(os.path.join(outdir, "sde_report.txt"), entries)
    return EXIT_OK


_HANDLERS = {
    "coeffs": run_coeffs,
    "expand": run_expand,
    "verify": run_verify,
    "diag": run_diag,
    "sde": run_sde,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(__doc__)
        return EXIT_OK
    sub = argv[0]
    if sub not in SUBCOMMANDS:
        print(f"unknown subcommand {sub!r}; choose from {', '.join(SUBCOMMANDS)}",
              file=sys.stderr)
        return EXIT_USAGE
    parser = argparse.ArgumentParser(prog=f"stochint {sub}")
    parser.add_argument("config", help="YAML configuration file")
    parser.add_argument("--output-dir", default=None,
                        help="overrides config output_dir and the "
                             f"{OUTPUT_DIR_ENV} environment variable")
    parser.add_argument("--allow-unguaranteed", action="store_true",
                        help="run configurations outside the stated convergence "
                             "guarantees")
    args = parser.parse_args(argv[1:])
    try:
        cfg = load_config(args.config)
        outdir = (args.output_dir or os.environ.get(OUTPUT_DIR_ENV)
                  or cfg.get("output_dir", "out"))
        ensure_dir(outdir)
        return _HANDLERS[sub](cfg, outdir, args.allow_unguaranteed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureError, IntegrationError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
