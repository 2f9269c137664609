"""Command-line entry point ``tvp``.

    tvp simulate --config run.toml --out sim/
    tvp fit      --config run.toml --data series.csv --out fit/
    tvp forecast --config run.toml --data series.csv --out fc/ --t0 150
    tvp simstudy --config run.toml --out study/ --threads 4

Every command writes ``run.json`` with the seed, the parsed configuration,
the input column order and the SHA-256 of the data file.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cholesky import build_row_regressions, fit_cholesky_sv, row_scores, simulate_cholesky_sv
from .config import ConfigError, RunConfig, load_config
from .diagnostics import sim_study_metrics
from .forecast import _origin_seed, rolling_lpds
from .model import Dataset, DegenerateCovariateError, SimTruth, standardize_covariates, simulate_tvp
from .sampler import DrawStore, SamplerError, run_chain
from .tables import (
    SUMMARY_COLUMNS,
    DataError,
    Table,
    file_sha256,
    fmt4,
    inefficiency_rows,
    read_table,
    summary_rows,
    write_csv,
    write_matrix,
)

log = logging.getLogger("shrinktvp")

INTERCEPT = "(Intercept)"
_VECTOR_KEYS = ("beta", "sqrt_theta", "xi2", "tau2", "P0")
_SCALAR_KEYS = ("a_xi", "a_tau", "kappa2", "lambda2")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# data preparation


@dataclass
class Prepared:
    data: Dataset
    response: str
    covariates: tuple[str, ...]
    means: list[float]
    sds: list[float]


def prepare_univariate(table: Table, cfg: RunConfig) -> Prepared:
    cols = list(table.columns)
    response = cfg.model.response or cols[0]
    if response not in cols:
        raise DataError(f"response column {response!r} not found in {cols}")
    j = cols.index(response)
    y = table.values[:, j]
    names = [c for i, c in enumerate(cols) if i != j]
    X = np.delete(table.values, j, axis=1)
    if cfg.model.add_intercept:
        X = np.column_stack([np.ones(len(y)), X])
        names = [INTERCEPT] + names
    if X.shape[1] == 0:
        raise DataError("no covariates: add columns or set model.add_intercept = true")
    means, sds = [0.0] * X.shape[1], [1.0] * X.shape[1]
    if cfg.model.standardize:
        ones = [i for i in range(X.shape[1]) if np.all(X[:, i] == 1.0)]
        try:
            X, m, s = standardize_covariates(X, ones[0] if ones else None)
        except DegenerateCovariateError as exc:
            raise DataError(f"covariate {names[exc.column]!r} has zero sample variance") from exc
        means, sds = m.tolist(), s.tolist()
    return Prepared(Dataset(y, X, names=tuple(names)), response, tuple(names), means, sds)


def _seed(args, cfg: RunConfig) -> int:
    seed = args.seed if args.seed is not None else cfg.seed
    if seed is None:
        raise UsageError("a seed is required: set 'seed' in the config or pass --seed")
    if seed < 0:
        raise UsageError("seed must be non-negative")
    return int(seed)


def _clean(obj):
    """JSON-safe copy: NaN/inf become None, tuples become lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_run_json(out: Path, command: str, seed: int, cfg: RunConfig, extra: dict) -> None:
    meta = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": cfg.raw,
        "prior": asdict(cfg.prior),
        "sampler": asdict(cfg.sampler),
    }
    meta.update(extra)
    (out / "run.json").write_text(json.dumps(_clean(meta), indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")


# ---------------------------------------------------------------------------
# draw tables


def param_table(store: DrawStore, names, prefix: str = "") -> Table:
    cols, blocks = [], []
    for key in _VECTOR_KEYS:
        cols += [f"{prefix}{key}_{n}" for n in names]
        blocks.append(store[key])
    keys = _SCALAR_KEYS + (("mu", "phi", "sigma2_eta") if store.sv else ("sigma2", "C0"))
    for key in keys:
        cols.append(prefix + key)
        blocks.append(store[key][:, None])
    return Table(tuple(cols), np.hstack(blocks))


def _quantile_rows(label_rows, samples: np.ndarray) -> list[list]:
    """Mean and 2.5/50/97.5% quantiles of each column of samples (M, n)."""
    q = np.quantile(samples, [0.025, 0.5, 0.975], axis=0)
    mean = samples.mean(axis=0)
    return [list(lab) + [mean[i], q[0, i], q[1, i], q[2, i]] for i, lab in enumerate(label_rows)]


def _path_rows(store: DrawStore, names, prefix: str = "") -> list[list]:
    paths = store.centered_paths()  # (M, T+1, d)
    rows = []
    for j, n in enumerate(names):
        rows += _quantile_rows([(f"{prefix}beta_{n}", str(t)) for t in range(store.T + 1)], paths[:, :, j])
    return rows


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args, cfg: RunConfig) -> None:
    seed = _seed(args, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim = cfg.simulate
    if sim.n_series < 1:
        raise ConfigError("'simulate.n_series' must be >= 1")
    files = []
    if cfg.model.multivariate:
        for k in range(sim.n_series):
            Y, coef, h = simulate_cholesky_sv(sim.d, sim.T, np.random.SeedSequence([seed, k]))
            name = out / f"series_{k + 1:03d}.csv"
            write_csv(name, ["t"] + [f"y{i + 1}" for i in range(sim.d)],
                      [[str(t + 1)] + list(r) for t, r in enumerate(Y.tolist())])
            lower = list(zip(*np.tril_indices(sim.d, -1)))
            cols = ["t"] + [f"beta_{i + 1}{j + 1}" for i, j in lower] + [f"h_{i + 1}" for i in range(sim.d)]
            write_csv(out / f"truth_{k + 1:03d}.csv", cols,
                      [[str(t)] + [coef[t, i, j] for i, j in lower] + list(h[t]) for t in range(sim.T + 1)])
            files.append(name.name)
    else:
        for key in ("beta", "theta"):
            if len(getattr(sim, key)) != sim.d:
                raise ConfigError(f"'simulate.{key}' must have d = {sim.d} entries")
        truth = SimTruth(np.array(sim.beta, float), np.array(sim.theta, float), float(sim.sigma2))
        xnames = [f"x{j + 1}" for j in range(sim.d)]
        write_csv(out / "truth.csv", ["parameter", "beta", "theta", "sigma2"],
                  [[n, truth.beta_true[j], truth.theta_true[j], truth.sigma2_true]
                   for j, n in enumerate(xnames)])
        for k in range(sim.n_series):
            data, tr = simulate_tvp(sim.d, sim.T, truth, np.random.SeedSequence([seed, k]))
            name = out / f"series_{k + 1:03d}.csv"
            write_csv(name, ["t", "y"] + xnames,
                      [[str(t + 1), data.y[t]] + list(data.X[t]) for t in range(data.T)])
            write_csv(out / f"truth_{k + 1:03d}.csv", ["t"] + [f"beta_{n}" for n in xnames],
                      [[str(t)] + list(r) for t, r in enumerate(tr.paths.tolist())])
            files.append(name.name)
    write_run_json(out, "simulate", seed, cfg, {"files": files})


def _fit_univariate(cfg: RunConfig, table: Table, seed: int, out: Path) -> dict:
    prep = prepare_univariate(table, cfg)
    settings = replace(cfg.sampler, store_paths=True)
    store = run_chain(prep.data, cfg.prior, settings, np.random.default_rng(np.random.SeedSequence(seed)))
    params = param_table(store, prep.covariates)
    fmt = cfg.output.format
    files = [write_matrix(out / "draws_params", params.columns, params.values, fmt).name]
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary_rows(params), fmt4)
    write_csv(out / "inefficiency.csv", ("parameter", "inefficiency", "ess"), inefficiency_rows(params), fmt4)
    write_csv(out / "paths.csv", ("parameter", "t", "mean", "q2.5", "q50", "q97.5"),
              _path_rows(store, prep.covariates), fmt4)
    if store.sv:
        h = store["h"]
        files.append(write_matrix(out / "draws_h", [f"h_{t}" for t in range(h.shape[1])], h, fmt).name)
        write_csv(out / "h_quantiles.csv", ("t", "mean", "q2.5", "q50", "q97.5"),
                  _quantile_rows([(str(t),) for t in range(h.shape[1])], h), fmt4)
    stats = {k: v for k, v in store.stats.items() if k != "last_state"}
    return {
        "response": prep.response,
        "covariates": list(prep.covariates),
        "standardization": {"mean": prep.means, "sd": prep.sds},
        "draw_files": files,
        "draw_columns": list(params.columns),
        "sampler_stats": stats,
    }


def _fit_multivariate(cfg: RunConfig, table: Table, seed: int, out: Path, workers: int) -> dict:
    if table.values.shape[1] < 2:
        raise DataError("multivariate mode needs at least two series")
    names = table.columns
    system = fit_cholesky_sv(build_row_regressions(table.values, names), cfg.prior,
                             replace(cfg.sampler, store_paths=True), seed, workers)
    if system.errors:
        msg = "; ".join(f"row {i + 1} ({names[i]}): {e}" for i, e in sorted(system.errors.items()))
        raise SamplerError(-1, None, RuntimeError(msg))
    blocks, hblocks, hcols, path_rows = [], [], [], []
    for i, store in enumerate(system.row_draws):
        row_names = names[:i]
        if row_names:
            blocks.append(param_table(store, row_names, prefix=f"{names[i]}:"))
            path_rows += _path_rows(store, row_names, prefix=f"{names[i]}:")
        else:
            cols = [f"{names[i]}:{k}" for k in ("mu", "phi", "sigma2_eta")]
            blocks.append(Table(tuple(cols), np.column_stack([store[k] for k in ("mu", "phi", "sigma2_eta")])))
        hblocks.append(store["h"])
        hcols += [f"{names[i]}:h_{t}" for t in range(store["h"].shape[1])]
    params = Table(sum((b.columns for b in blocks), ()), np.hstack([b.values for b in blocks]))
    fmt = cfg.output.format
    files = [write_matrix(out / "draws_params", params.columns, params.values, fmt).name,
             write_matrix(out / "draws_h", hcols, np.hstack(hblocks), fmt).name]
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary_rows(params), fmt4)
    write_csv(out / "inefficiency.csv", ("parameter", "inefficiency", "ess"), inefficiency_rows(params), fmt4)
    write_csv(out / "paths.csv", ("parameter", "t", "mean", "q2.5", "q50", "q97.5"), path_rows, fmt4)
    hq = []
    for i, store in enumerate(system.row_draws):
        h = store["h"]
        hq += _quantile_rows([(names[i], str(t)) for t in range(h.shape[1])], h)
    write_csv(out / "h_quantiles.csv", ("series", "t", "mean", "q2.5", "q50", "q97.5"), hq, fmt4)
    return {
        "column_order": list(names),
        "draw_files": files,
        "draw_columns": list(params.columns),
        "sampler_stats": {names[i]: {k: v for k, v in s.stats.items() if k != "last_state"}
                          for i, s in enumerate(system.row_draws)},
    }


def cmd_fit(args, cfg: RunConfig) -> None:
    seed = _seed(args, cfg)
    if args.data is None:
        raise UsageError("fit needs --data")
    table = read_table(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.model.multivariate:
        extra = _fit_multivariate(cfg, table, seed, out, args.threads)
    else:
        extra = _fit_univariate(cfg, table, seed, out)
    extra.update({"data": str(args.data), "data_sha256": file_sha256(args.data),
                  "input_columns": list(table.columns)})
    write_run_json(out, "fit", seed, cfg, extra)


def _multivariate_scores(cfg: RunConfig, table: Table, t0: int, seed: int, workers: int):
    Y, names = table.values, table.columns
    rows = []
    for t in range(t0 + 1, Y.shape[0] + 1):
        ss = _origin_seed(seed, t)
        fit_ss, score_ss = ss.spawn(2)
        system = fit_cholesky_sv(build_row_regressions(Y[: t - 1], names), cfg.prior,
                                 replace(cfg.sampler, store_paths=False),
                                 int(fit_ss.generate_state(1)[0]), workers)
        if system.errors:
            i, e = min(system.errors.items())
            raise SamplerError(-1, None, RuntimeError(f"origin t={t}, row {names[i]}: {e}"))
        rows.append((t, row_scores(system, Y[t - 1], score_ss)))
    return rows


def cmd_forecast(args, cfg: RunConfig) -> None:
    seed = _seed(args, cfg)
    if args.data is None:
        raise UsageError("forecast needs --data")
    table = read_table(args.data)
    T = table.values.shape[0]
    t0 = args.t0 if args.t0 is not None else cfg.forecast.t0
    if t0 is None:
        raise UsageError("forecast needs t0 (--t0 or forecast.t0)")
    if t0 >= T:
        raise UsageError(f"t0 = {t0} must be smaller than the number of observations T = {T}")
    if t0 < 2:
        raise UsageError("t0 must be at least 2")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    methods = tuple(cfg.forecast.methods)
    for m in methods:
        if m not in ("kalman", "naive"):
            raise ConfigError(f"'forecast.methods' entries must be 'kalman' or 'naive', got {m!r}")
    if cfg.model.multivariate:
        rows = _multivariate_scores(cfg, table, t0, seed, args.threads)
        names = table.columns
        total = np.cumsum([sum(s) for _, s in rows])
        cols = ["t"] + [f"lpds_{n}" for n in names] + ["lpds_total", "cum_total"]
        write_csv(out / "lpds.csv", cols,
                  [[str(t)] + list(s) + [sum(s), total[k]] for k, (t, s) in enumerate(rows)])
        extra = {"column_order": list(names), "total": float(total[-1])}
    else:
        prep = prepare_univariate(table, cfg)
        settings = replace(cfg.sampler, store_paths=False)
        series = rolling_lpds(prep.data, t0, cfg.prior, settings, seed, methods,
                              cfg.forecast.warm_start, cfg.forecast.warm_burnin, args.threads)
        cols, cells = ["t"], [series[methods[0]].times.astype(str).tolist()]
        for m in methods:
            cols += [f"lpds_{m}", f"cum_{m}"]
            cells += [series[m].values.tolist(), series[m].cumulative.tolist()]
        write_csv(out / "lpds.csv", cols, list(zip(*cells)))
        extra = {"covariates": list(prep.covariates), "totals": {m: series[m].total for m in methods}}
    extra.update({"t0": t0, "methods": list(methods), "data": str(args.data),
                  "data_sha256": file_sha256(args.data), "input_columns": list(table.columns)})
    write_run_json(out, "forecast", seed, cfg, extra)


def _replicate(job):
    """Simulate replicate k and fit it under one prior; returns posterior draws or the error."""
    k, pi, variant, cfg, seed = job
    sim = cfg.simulate
    truth = SimTruth(np.array(sim.beta, float), np.array(sim.theta, float), float(sim.sigma2))
    try:
        data, _ = simulate_tvp(sim.d, sim.T, truth, np.random.SeedSequence([seed, k]))
        settings = replace(cfg.sampler, store_paths=False)
        store = run_chain(data, cfg.prior_for(variant), settings,
                          np.random.default_rng(np.random.SeedSequence([seed, k, pi + 1])))
        return k, variant, store["beta"], store.abs_sqrt_theta(), None
    except Exception as exc:  # noqa: BLE001
        return k, variant, None, None, f"{type(exc).__name__}: {exc}"


def cmd_simstudy(args, cfg: RunConfig) -> None:
    seed = _seed(args, cfg)
    sim = cfg.simulate
    for key in ("beta", "theta"):
        if len(getattr(sim, key)) != sim.d:
            raise ConfigError(f"'simulate.{key}' must have d = {sim.d} entries")
    priors = tuple(cfg.simstudy.priors)
    for p in priors:
        cfg.prior_for(p)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(k, pi, p, cfg, seed) for k in range(sim.n_series) for pi, p in enumerate(priors)]
    if args.threads > 1:
        with ProcessPoolExecutor(args.threads) as pool:
            results = list(pool.map(_replicate, jobs))
    else:
        results = [_replicate(j) for j in jobs]
    errors = [(k, p, e) for k, p, _, _, e in results if e is not None]
    for k, p, e in errors:
        log.error("replicate %d under %s failed: %s", k + 1, p, e)
    rows = []
    xnames = [f"x{j + 1}" for j in range(sim.d)]
    sqrt_true = np.sqrt(np.array(sim.theta, float))
    for p in priors:
        ok = [r for r in results if r[1] == p and r[4] is None]
        for j, n in enumerate(xnames):
            for label, idx, truth in (("beta", 2, sim.beta[j]), ("abs_sqrt_theta", 3, sqrt_true[j])):
                if ok:
                    m = sim_study_metrics([r[idx][:, j] for r in ok], truth)
                    vals = [m.avMSE, m.avVAR, m.avBIAS2]
                else:
                    vals = [math.nan] * 3
                rows.append([p, f"{label}_{n}"] + vals + [str(len(ok))])
    write_csv(out / "metrics.csv", ("prior", "parameter", "avMSE", "avVAR", "avBIAS2", "n_series"), rows, fmt4)
    write_csv(out / "errors.csv", ("replicate", "prior", "error"), [[str(k + 1), p, e] for k, p, e in errors])
    write_run_json(out, "simstudy", seed, cfg, {"priors": list(priors), "n_failed": len(errors)})


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "simstudy": cmd_simstudy,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tvp", description="Shrinkage for time-varying parameter models.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--data", help="input CSV (header row, optional leading time column)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--t0", type=int, help="training sample size for forecast")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        COMMANDS[args.command](args, cfg)
    except (ConfigError, DataError, UsageError, SamplerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
