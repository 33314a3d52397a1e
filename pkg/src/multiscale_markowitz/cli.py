"""Command-line entry point.

Subcommands: ``simulate`` writes synthetic price panels, ``estimate``
fits scaling exponents, ``optimize`` builds portfolio weights,
``backtest`` walks strategies forward, and ``repro`` runs the whole
pipeline end to end from fixed seeds.

Exit codes: 0 success, 1 usage, 2 bad input data, 3 numerical failure.
Results go to stdout and files; diagnostics go to stderr. Output files
are written atomically (temp file plus rename). A ``--config`` file
supplies ``key=value`` defaults that explicit flags override.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import backtest as bt
from . import covariance as cov
from . import optimizer as opt
from . import scaling
from . import synth
from . import timeseries as ts
from .errors import DataError, NumericalError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

OUT_DIR_ENV = "MSMARK_OUT"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route through our own
    # exception so main() can return 1 instead
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# option casting shared by flags and config files

def _cast_int(raw):
    try:
        return int(raw)
    except ValueError:
        raise _UsageError(f"expected an integer, got {raw!r}") from None


def _cast_float(raw):
    try:
        return float(raw)
    except ValueError:
        raise _UsageError(f"expected a number, got {raw!r}") from None


def _cast_str(raw):
    return str(raw)


def _cast_bool(raw):
    low = str(raw).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise _UsageError(f"expected a boolean, got {raw!r}")


def _cast_int_list(raw):
    raw = str(raw).strip()
    if not raw:
        return ()
    return tuple(_cast_int(p.strip()) for p in raw.split(","))


def _cast_float_list(raw):
    raw = str(raw).strip()
    if not raw:
        return ()
    return tuple(_cast_float(p.strip()) for p in raw.split(","))


def _cast_ridge(raw):
    if str(raw).strip() == "auto":
        return "auto"
    return _cast_float(raw)


def _choice(options):
    def cast(raw):
        if raw not in options:
            raise _UsageError(f"expected one of {', '.join(options)}; got {raw!r}")
        return raw
    return cast


class Opt:
    def __init__(self, flag, cast, default, help):
        self.flag = flag
        self.dest = flag.lstrip("-").replace("-", "_")
        self.cast = cast
        self.default = default
        self.help = help


_COMMON = [
    Opt("--out-dir", _cast_str, None,
        f"output directory (default: ${OUT_DIR_ENV} or '.')"),
    Opt("--config", _cast_str, None,
        "key=value file supplying defaults; explicit flags win"),
]

_SIMULATE_OPTS = [
    Opt("--kind", _choice(synth.KINDS), None,
        "generator: " + ", ".join(synth.KINDS)),
    Opt("--n", _cast_int, None, "number of return periods"),
    Opt("--seed", _cast_int, 0, "random seed"),
    Opt("--sigma", _cast_float, 0.01, "one-period volatility"),
    Opt("--hurst", _cast_float, 0.5, "scaling exponent (fgn) or noise exponent (cascade)"),
    Opt("--assets", _cast_int, 2, "asset count (correlated, regime_switch)"),
    Opt("--rho", _cast_float, 0.0, "pairwise correlation (correlated)"),
    Opt("--rho-inf", _cast_float, 0.6, "long-block correlation ceiling (epps)"),
    Opt("--h-rho", _cast_float, 0.3, "correlation growth exponent (epps)"),
    Opt("--sigma-low", _cast_float_list, (0.008,), "calm volatility per asset (regime_switch)"),
    Opt("--sigma-high", _cast_float_list, (0.02,), "stressed volatility per asset (regime_switch)"),
    Opt("--switch-points", _cast_int_list, (), "regime toggle indices (regime_switch)"),
    Opt("--intermittency", _cast_float, 0.2, "cascade intermittency"),
    Opt("--out", _cast_str, None, "output CSV path (default derived from kind/n/seed)"),
] + _COMMON

_ESTIMATE_OPTS = [
    Opt("--method", _choice(("structure", "dfa")), "structure",
        "exponent estimator"),
    Opt("--asset", _cast_str, None, "restrict to one asset"),
    Opt("--scales", _cast_int_list, scaling.DEFAULT_SCALES,
        "aggregation scales for structure functions"),
    Opt("--q-grid", _cast_float_list, scaling.DEFAULT_Q_GRID, "moment orders"),
    Opt("--dfa-scales", _cast_int_list, (), "segment sizes for dfa (default: auto)"),
    Opt("--detrend-order", _cast_int, 1, "polynomial order removed per segment"),
    Opt("--pairs", _cast_bool, False, "also fit pairwise correlation scaling"),
    Opt("--json-out", _cast_str, None, "write the full report as JSON"),
] + _COMMON

_OPTIMIZE_OPTS = [
    Opt("--objective", _choice(("min_variance", "max_sharpe")), "min_variance",
        "what to optimize"),
    Opt("--scales", _cast_int_list, bt.DEFAULT_SCALES, "covariance scales"),
    Opt("--cov", _choice((cov.METHOD_PRODUCT, cov.METHOD_L1)), cov.METHOD_PRODUCT,
        "covariance estimator"),
    Opt("--l1-joint", _cast_bool, False,
        "average deviation products jointly in the l1 estimator"),
    Opt("--aggregation", _choice((ts.MODE_NONOVERLAPPING, ts.MODE_OVERLAPPING)),
        ts.MODE_NONOVERLAPPING, "aggregation mode"),
    Opt("--ridge", _cast_ridge, "auto", "diagonal loading: a number or 'auto'"),
    Opt("--allow-short", _cast_bool, False, "drop the long-only constraint"),
    Opt("--mu-target", _cast_float, None, "expected-return floor (sample means)"),
    Opt("--risk-free", _cast_float, 0.0, "risk-free rate for max_sharpe"),
    Opt("--out-prefix", _cast_str, None, "prefix for weights CSV and report JSON"),
] + _COMMON

_BACKTEST_OPTS = [
    Opt("--strategy", _choice(("all",) + bt.STRATEGIES), "all",
        "one strategy, or 'all' for the standard comparison"),
    Opt("--max-sharpe-rows", _cast_bool, False,
        "include Sharpe-objective rows in 'all'"),
    Opt("--lookback", _cast_int, bt.DEFAULT_LOOKBACK, "estimation window length"),
    Opt("--rebalance", _cast_int, bt.DEFAULT_REBALANCE, "holding period length"),
    Opt("--scales", _cast_int_list, bt.DEFAULT_SCALES, "covariance scales"),
    Opt("--cov", _choice((cov.METHOD_PRODUCT, cov.METHOD_L1)), cov.METHOD_PRODUCT,
        "covariance estimator"),
    Opt("--aggregation", _choice((ts.MODE_NONOVERLAPPING, ts.MODE_OVERLAPPING)),
        ts.MODE_NONOVERLAPPING, "aggregation for multiscale strategies"),
    Opt("--ridge", _cast_ridge, "auto", "diagonal loading: a number or 'auto'"),
    Opt("--risk-free", _cast_float, 0.0, "risk-free rate"),
    Opt("--out-prefix", _cast_str, None, "prefix for table CSV/text and report JSON"),
] + _COMMON

_REPRO_OPTS = [
    Opt("--seed", _cast_int, 7, "seed for every synthetic input"),
] + _COMMON

_POSITIONAL_INPUT = ("input", "price panel CSV (date column plus one column per asset)")


def build_parser() -> _Parser:
    parser = _Parser(prog="msmark",
                     description="Scaling-aware covariance and portfolio tools")
    sub = parser.add_subparsers(dest="command", metavar="command",
                                parser_class=_Parser)
    specs = [
        ("simulate", "generate a synthetic price panel", _SIMULATE_OPTS, False,
         cmd_simulate),
        ("estimate", "fit scaling exponents from prices", _ESTIMATE_OPTS, True,
         cmd_estimate),
        ("optimize", "build portfolio weights from prices", _OPTIMIZE_OPTS, True,
         cmd_optimize),
        ("backtest", "walk strategies forward over prices", _BACKTEST_OPTS, True,
         cmd_backtest),
        ("repro", "run the full pipeline from fixed seeds", _REPRO_OPTS, False,
         cmd_repro),
    ]
    for name, help_text, opts, has_input, func in specs:
        p = sub.add_parser(name, help=help_text, description=help_text)
        if has_input:
            p.add_argument(_POSITIONAL_INPUT[0], help=_POSITIONAL_INPUT[1])
        for o in opts:
            p.add_argument(o.flag, dest=o.dest, default=None, metavar="V",
                           help=o.help)
        p.set_defaults(_opts=opts, _func=func)
    return parser


def _read_config_file(path, known):
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _UsageError(f"{path} line {lineno}: expected key=value, got {line!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in known:
            raise _UsageError(f"{path} line {lineno}: unknown key {key!r}")
        values[dest] = val
    return values


def _merge_options(args) -> dict:
    opts = {o.dest: o for o in args._opts}
    file_values = {}
    raw_config = getattr(args, "config", None)
    if raw_config is not None:
        file_values = _read_config_file(raw_config, set(opts) - {"config"})
    merged = {}
    for dest, o in opts.items():
        raw = getattr(args, dest, None)
        if raw is None:
            raw = file_values.get(dest)
        if raw is None:
            merged[dest] = o.default
        else:
            try:
                merged[dest] = o.cast(raw)
            except _UsageError as exc:
                raise _UsageError(f"option --{dest.replace('_', '-')}: {exc}") from None
    if hasattr(args, "input"):
        merged["input"] = args.input
    return merged


def _out_dir(merged) -> Path:
    if merged.get("out_dir"):
        return Path(merged["out_dir"])
    return Path(os.environ.get(OUT_DIR_ENV, "."))


def _write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.datetime64):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def _note(message):
    print(message, file=sys.stderr)


def _load_panel(path) -> ts.ReturnPanel:
    try:
        series = ts.load_prices(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return ts.to_log_returns(series)


# ---------------------------------------------------------------------------
# subcommands

def _require(merged, *keys):
    for key in keys:
        if merged.get(key) is None:
            raise _UsageError(f"--{key.replace('_', '-')} is required")


def cmd_simulate(merged) -> int:
    _require(merged, "kind", "n")
    kind = merged["kind"]
    params = {}
    if kind == "gaussian_iid":
        params = {"sigma_daily": merged["sigma"]}
    elif kind == "fgn":
        params = {"hurst": merged["hurst"], "sigma_daily": merged["sigma"]}
    elif kind == "correlated":
        params = {"n_assets": merged["assets"], "rho": merged["rho"],
                  "sigma_daily": merged["sigma"]}
    elif kind == "epps":
        params = {"rho_inf": merged["rho_inf"], "h_rho": merged["h_rho"],
                  "sigma_daily": merged["sigma"]}
    elif kind == "regime_switch":
        lo = merged["sigma_low"]
        hi = merged["sigma_high"]
        params = {"sigma_low": lo if len(lo) > 1 else lo[0],
                  "sigma_high": hi if len(hi) > 1 else hi[0],
                  "switch_points": merged["switch_points"],
                  "n_assets": merged["assets"]}
    elif kind == "cascade":
        params = {"intermittency": merged["intermittency"],
                  "hurst_base": merged["hurst"], "sigma_daily": merged["sigma"]}
    spec = synth.GeneratorSpec(kind=kind, n=merged["n"], seed=merged["seed"],
                               params=params)
    panel = synth.generate(spec)
    out = merged["out"]
    if out is None:
        out = _out_dir(merged) / f"{kind}_{merged['n']}_{merged['seed']}.csv"
    out = Path(out)
    _write_atomic(out, ts.prices_to_csv(ts.to_price_series(panel)))
    _note(f"wrote {panel.n_periods} returns for {panel.n_assets} asset(s) to {out}")
    print(str(out))
    return EXIT_OK


def _spectrum_payload(spec: scaling.ScalingSpectrum) -> dict:
    return {
        "asset": spec.asset_id,
        "method": spec.method,
        "q_grid": list(spec.q_grid),
        "zeta": spec.zeta,
        "h_of_q": spec.h_of_q,
        "stderr": spec.stderr,
        "fit_r2": spec.fit_r2,
        "scales": list(spec.scales),
        "nonmonotone": spec.nonmonotone,
    }


def cmd_estimate(merged) -> int:
    panel = _load_panel(merged["input"])
    assets = [merged["asset"]] if merged["asset"] else list(panel.asset_ids)
    for a in assets:
        if a not in panel.asset_ids:
            raise DataError(f"asset {a!r} not in panel columns {panel.asset_ids}")
    report = {"input": str(merged["input"]), "method": merged["method"],
              "assets": {}, "pairs": {}}
    lines = []
    for a in assets:
        if merged["method"] == "structure":
            spect = scaling.structure_spectrum(panel, asset=a,
                                               q_grid=merged["q_grid"],
                                               scales=merged["scales"])
            hurst = scaling.estimate_hurst(panel, asset=a, scales=merged["scales"])
            est, err = hurst.value, hurst.stderr
        else:
            spect = scaling.mfdfa(panel, asset=a, q_grid=merged["q_grid"],
                                  scales=merged["dfa_scales"] or None,
                                  detrend_order=merged["detrend_order"])
            est = spect.h_at(2.0) if 2.0 in spect.q_grid else float("nan")
            err = spect.stderr[spect.q_grid.index(2.0)] if 2.0 in spect.q_grid else float("nan")
        report["assets"][a] = {"hurst": est, "hurst_stderr": err,
                               "spectrum": _spectrum_payload(spect)}
        lines.append(f"{a}: H(2) = {est:.4f} +/- {err:.4f}  "
                     f"[{spect.method}, scales {spect.scales}]")
    if merged["pairs"]:
        ids = list(panel.asset_ids)
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                cs = scaling.estimate_correlation_scaling(panel, ids[i], ids[j],
                                                          scales=merged["scales"])
                key = f"{ids[i]}~{ids[j]}"
                report["pairs"][key] = {
                    "h_rho": cs.h_rho,
                    "h_rho_stderr": cs.h_rho_stderr,
                    "h_cross_2": cs.h_cross_2,
                    "h_i_1": cs.h_i_1,
                    "h_j_1": cs.h_j_1,
                    "identity_residual": cs.identity_residual,
                    "combined_stderr": cs.combined_stderr,
                    "rho_by_scale": cs.rho_by_scale,
                    "negative_correlation": cs.negative_correlation,
                }
                lines.append(
                    f"{key}: H_rho = {cs.h_rho:.4f} +/- {cs.h_rho_stderr:.4f}  "
                    f"identity residual {cs.identity_residual:+.4f} "
                    f"(combined stderr {cs.combined_stderr:.4f})"
                )
    print("\n".join(lines))
    if merged["json_out"]:
        _write_atomic(Path(merged["json_out"]), _dump_json(report))
        _note(f"wrote report to {merged['json_out']}")
    return EXIT_OK


def cmd_optimize(merged) -> int:
    panel = _load_panel(merged["input"])
    cset = cov.build_covariance_set(panel, merged["scales"], method=merged["cov"],
                                    aggregation=merged["aggregation"],
                                    l1_joint=merged["l1_joint"])
    blended = cov.multiscale_cov(cset, ridge=merged["ridge"])
    prov = {"scales": list(merged["scales"]), "covariance": merged["cov"],
            "aggregation": merged["aggregation"], "ridge": blended.ridge,
            "psd_repaired": blended.psd_repaired}
    long_only = not merged["allow_short"]
    if merged["mu_target"] is not None and not long_only:
        raise _UsageError("--mu-target requires the long-only constraint")
    mu = panel.returns.mean(axis=0)
    if merged["objective"] == "max_sharpe":
        weights = opt.max_sharpe(blended, mu, risk_free=merged["risk_free"],
                                 long_only=long_only, provenance=prov)
    elif merged["mu_target"] is not None:
        weights = opt.min_variance_long_only(blended, mu=mu,
                                             mu_target=merged["mu_target"],
                                             provenance=prov)
    elif long_only:
        weights = opt.min_variance_long_only(blended, provenance=prov)
    else:
        weights = opt.min_variance_closed_form(blended, provenance=prov)
    for aid, val in weights.as_dict().items():
        print(f"{aid}: {val:.6f}")
    _note(f"kkt residual {weights.kkt_residual:.3e}")
    prefix = merged["out_prefix"]
    if prefix is None:
        prefix = _out_dir(merged) / "optimize"
    prefix = Path(prefix)
    weight_lines = ["asset,weight"] + [
        f"{aid},{val!r}" for aid, val in weights.as_dict().items()
    ]
    _write_atomic(prefix.with_suffix(".csv"), "\n".join(weight_lines) + "\n")
    payload = {
        "input": str(merged["input"]),
        "objective": merged["objective"],
        "long_only": weights.long_only,
        "method": weights.method,
        "weights": weights.as_dict(),
        "kkt_residual": weights.kkt_residual,
        "provenance": weights.provenance,
        "covariance_matrix": blended.matrix,
        "asset_ids": list(blended.asset_ids),
    }
    _write_atomic(prefix.with_suffix(".json"), _dump_json(payload))
    _note(f"wrote {prefix.with_suffix('.csv')} and {prefix.with_suffix('.json')}")
    return EXIT_OK


def _config_payload(cfg: bt.BacktestConfig) -> dict:
    return {
        "strategy": cfg.strategy,
        "lookback": cfg.lookback,
        "rebalance_every": cfg.rebalance_every,
        "scales": list(cfg.scales),
        "covariance_method": cfg.covariance_method,
        "aggregation": cfg.aggregation,
        "risk_free": cfg.risk_free,
        "ridge": cfg.ridge,
        "periods_per_year": cfg.periods_per_year,
    }


def cmd_backtest(merged) -> int:
    panel = _load_panel(merged["input"])
    base = bt.BacktestConfig(
        lookback=merged["lookback"],
        rebalance_every=merged["rebalance"],
        scales=merged["scales"],
        covariance_method=merged["cov"],
        aggregation=merged["aggregation"],
        risk_free=merged["risk_free"],
        ridge=merged["ridge"],
    )
    if merged["strategy"] == "all":
        configs = bt.standard_comparison_configs(
            base, max_sharpe_rows=merged["max_sharpe_rows"])
    else:
        configs = [dataclasses.replace(base, strategy=merged["strategy"])]
    table = bt.compare(panel, configs)
    if all(row.error is not None for row in table.rows):
        # partial failure prints a table; total failure is a hard error
        raise DataError(f"every strategy failed; first error: {table.rows[0].error}")
    print(table.to_text(), end="")
    prefix = merged["out_prefix"]
    if prefix is None:
        prefix = _out_dir(merged) / "backtest"
    prefix = Path(prefix)
    _write_atomic(prefix.with_suffix(".txt"), table.to_text())
    _write_atomic(prefix.with_suffix(".csv"), table.to_csv())
    payload = {
        "input": str(merged["input"]),
        "rows": [
            {
                "name": row.name,
                "sharpe": row.sharpe,
                "sortino": row.sortino,
                "max_drawdown": row.max_drawdown,
                "error": row.error,
                "config": _config_payload(cfg),
                "fallbacks": list(rep.fallbacks) if rep is not None else None,
                "final_equity": float(rep.equity[-1]) if rep is not None else None,
            }
            for row, cfg, rep in zip(table.rows, configs, table.reports)
        ],
    }
    _write_atomic(prefix.with_suffix(".json"), _dump_json(payload))
    _note(f"wrote {prefix.with_suffix('.txt')}, {prefix.with_suffix('.csv')}, "
          f"{prefix.with_suffix('.json')}")
    return EXIT_OK


def cmd_repro(merged) -> int:
    seed = merged["seed"]
    out_dir = _out_dir(merged)
    _note(f"running the pipeline with seed {seed} into {out_dir}")

    # stage 1: a five-asset panel with two volatility regimes
    n = 1400
    switch_points = (350, 700, 1050)
    lo = (0.008, 0.010, 0.012, 0.009, 0.011)
    hi = tuple(2.5 * v for v in lo)
    panel = synth.gen_regime_switch(n, lo, hi, switch_points,
                                    seed=synth.split_seed(seed, 0), n_assets=5)
    panel_path = out_dir / "repro_panel.csv"
    _write_atomic(panel_path, ts.prices_to_csv(ts.to_price_series(panel)))

    # stage 2: scaling estimates on a known-exponent series
    hurst_truth = 0.7
    fgn = synth.gen_fgn(1 << 14, hurst=hurst_truth,
                        seed=synth.split_seed(seed, 1))
    hurst_fit = scaling.estimate_hurst(fgn)
    spect = scaling.mfdfa(fgn)
    pair_panel = synth.gen_epps(1 << 14, rho_inf=0.6, h_rho=0.3,
                                seed=synth.split_seed(seed, 2))
    cs = scaling.estimate_correlation_scaling(pair_panel, "a1", "a2")

    # stage 3: weights from the blended covariance
    cset = cov.build_covariance_set(panel, bt.DEFAULT_SCALES)
    blended = cov.multiscale_cov(cset, ridge="auto")
    weights = opt.min_variance_long_only(blended)

    # stage 4: the standard strategy comparison
    table = bt.compare(panel, bt.standard_comparison_configs())
    print(table.to_text(), end="")
    _write_atomic(out_dir / "repro_table.txt", table.to_text())
    _write_atomic(out_dir / "repro_table.csv", table.to_csv())

    by_name = {row.name: row for row in table.rows}
    trad = by_name["Traditional Markowitz"]
    multi = by_name["Multiscale Markowitz"]
    drawdown_gap = None
    drawdown_no_worse = None
    if trad.max_drawdown is not None and multi.max_drawdown is not None:
        drawdown_gap = multi.max_drawdown - trad.max_drawdown
        drawdown_no_worse = bool(abs(multi.max_drawdown) <= abs(trad.max_drawdown))
    summary = {
        "seed": seed,
        "panel": {"file": panel_path.name, "n_periods": panel.n_periods,
                  "n_assets": panel.n_assets,
                  "switch_points": list(switch_points)},
        "scaling": {
            "fgn_hurst_truth": hurst_truth,
            "fgn_hurst_estimate": hurst_fit.value,
            "fgn_hurst_stderr": hurst_fit.stderr,
            "dfa_h2": spect.h_at(2.0),
            "pair_h_rho": cs.h_rho,
            "pair_identity_residual": cs.identity_residual,
            "pair_combined_stderr": cs.combined_stderr,
        },
        "weights": {
            "values": weights.as_dict(),
            "kkt_residual": weights.kkt_residual,
            "ridge": blended.ridge,
        },
        "strategies": [
            {"name": row.name, "sharpe": row.sharpe, "sortino": row.sortino,
             "max_drawdown": row.max_drawdown, "error": row.error}
            for row in table.rows
        ],
        "multiscale_minus_traditional_drawdown": drawdown_gap,
        "multiscale_drawdown_no_worse": drawdown_no_worse,
    }
    _write_atomic(out_dir / "repro_summary.json", _dump_json(summary))
    _note(f"wrote {out_dir / 'repro_summary.json'}")
    print(f"fgn H(2): {hurst_fit.value:.4f} (truth {hurst_truth})")
    print(f"pair H_rho: {cs.h_rho:.4f} (truth 0.3)")
    if drawdown_gap is not None:
        verdict = "no worse than" if drawdown_no_worse else "worse than"
        print(f"multiscale minus traditional max drawdown: {drawdown_gap:+.4f} "
              f"(multiscale {verdict} traditional on this fixture)")
    return EXIT_OK


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        print("msmark: error: a command is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        merged = _merge_options(args)
        return args._func(merged)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"msmark: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"msmark: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
