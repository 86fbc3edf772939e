"""Command-line pipeline: load prices, compile, solve, score, write artifacts.

Exit codes: 0 success, 1 usage/validation, 2 no feasible solution,
3 data error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import reporting as rep
from .encoding import EncodingScheme, build_scheme
from .errors import CardtrackError, DataError, InfeasibleSchemeError
from .market_data import ReturnsPanel, covariances, load_prices, to_returns
from .metrics import cumulative_log_returns, index_sharpe_series, portfolio_returns, score_portfolio
from .objectives import ObjectiveConfig, build_enhanced, build_markowitz, build_tracking
from .qubo import QuboModel, dump_model
from .solver import AnnealConfig, RankResult, Solution, filter_rank, solve_exhaustive, solve_sa
from .synthetic import business_dates, factor_returns, to_price_panel, write_price_csv

logger = logging.getLogger("cardtrack")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument handling


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _pair_list(text: str) -> list[tuple[int, int]]:
    pairs = []
    for item in text.replace(";", ",").split(","):
        if not item.strip():
            continue
        try:
            c, k = item.split(":")
            pairs.append((int(c), int(k)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"grid entries look like C:K, got {item!r}") from None
    return pairs


def _common(p: argparse.ArgumentParser, samples_default: int) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--data", type=Path, help="wide price CSV")
    g.add_argument("--index-col", default="INDEX")
    g = p.add_argument_group("encoding")
    g.add_argument("--resolution", "-K", type=int, default=63)
    g.add_argument("--cardinality", "-C", type=int, default=25)
    g.add_argument("--max-holding", type=float, default=0.2)
    g = p.add_argument_group("objective")
    g.add_argument("--gamma", type=float, default=1.0)
    g.add_argument("--penalty-track", type=float, default=1.0)
    g.add_argument("--penalty-budget", type=float, default=1.0)
    g.add_argument("--penalty-card", type=float, default=1.0)
    g.add_argument("--penalty-indicator", type=float, default=1.0)
    g.add_argument("--auto-scale-penalties", action="store_true")
    g = p.add_argument_group("solver")
    g.add_argument("--solver", choices=("sa", "exhaustive"), default="sa")
    g.add_argument("--samples", type=int, default=samples_default)
    g.add_argument("--sweeps", type=int, default=5000)
    g.add_argument("--t-hot", type=float, default=None)
    g.add_argument("--t-cold", type=float, default=None)
    g.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--dump-model", action="store_true", help="also write model.qubo")
    p.add_argument("--config", type=Path, help="key=value file; flags override it")
    p.add_argument("--log-level", default="WARNING")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cardtrack", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("track", help="cardinality-constrained index tracking")
    _common(p, samples_default=20)

    p = sub.add_parser("enhance", help="enhanced tracking over a risk-ratio grid")
    _common(p, samples_default=10)
    p.add_argument("--lambda", dest="lam", type=float, action="append", default=None)
    p.add_argument("--lambda-grid", type=_float_list, default=None)
    p.add_argument("--window", type=int, default=90)

    p = sub.add_parser("sweep", help="tracking over a (C, K) grid")
    _common(p, samples_default=20)
    p.add_argument("--grid", type=_pair_list, default=None, help="C:K pairs, comma separated")
    p.add_argument("--plan-only", action="store_true", help="log problem sizes without solving")

    p = sub.add_parser("markowitz", help="cardinality-constrained mean-variance portfolio")
    _common(p, samples_default=20)

    p = sub.add_parser("report", help="score an existing weights.csv")
    p.add_argument("--data", type=Path)
    p.add_argument("--index-col", default="INDEX")
    p.add_argument("--weights", type=Path, required=False)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--config", type=Path)
    p.add_argument("--log-level", default="WARNING")

    p = sub.add_parser("synth", help="write a synthetic price CSV")
    p.add_argument("--out-file", type=Path, required=True)
    p.add_argument("--assets", type=int, default=20)
    p.add_argument("--periods", type=int, default=250)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index-col", default="INDEX")
    p.add_argument("--index-units", type=str, default=None,
                   help="comma-separated integer units; index = exact portfolio of them")
    p.add_argument("--log-level", default="WARNING")
    return parser


def read_config_file(path: Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` comments; keys use flag names without dashes."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def parse_args(argv: Optional[Sequence[str]]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    file_values = read_config_file(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, text in file_values.items():
        if key == "lambda":
            key = "lambda_grid"
        if key not in actions:
            raise UsageError(f"unknown config key {key!r}")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = text.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[key] = _float_list(text)
        else:
            conv = action.type or str
            try:
                defaults[key] = conv(text)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key}: {exc}") from None
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# shared pipeline pieces


def _load_panel(args) -> ReturnsPanel:
    if args.data is None:
        raise UsageError("--data is required")
    return to_returns(load_prices(args.data, index_col=args.index_col))


def _validate_solver_args(args) -> None:
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    if args.sweeps < 1:
        raise UsageError("--sweeps must be positive")
    if args.gamma < 0:
        raise UsageError("--gamma must be nonnegative")
    for name in ("penalty_track", "penalty_budget", "penalty_card", "penalty_indicator"):
        if getattr(args, name) < 0:
            raise UsageError(f"--{name.replace('_', '-')} must be nonnegative")


def _scheme(args, n_assets: int, C: Optional[int] = None, K: Optional[int] = None) -> EncodingScheme:
    C = args.cardinality if C is None else C
    K = args.resolution if K is None else K
    if C > n_assets:
        raise UsageError(f"cardinality {C} exceeds the {n_assets} assets in the data")
    try:
        return build_scheme(K, C, args.max_holding, n_assets)
    except InfeasibleSchemeError as exc:
        raise UsageError(str(exc)) from None


def _objective(args, mode: str, lam: float = 0.0) -> ObjectiveConfig:
    return ObjectiveConfig(
        mode=mode,
        gamma=args.gamma,
        lam=lam,
        a_track=args.penalty_track,
        a_budget=args.penalty_budget,
        a_card=args.penalty_card,
        a_ind=args.penalty_indicator,
        auto_scale=args.auto_scale_penalties,
    )


def _solve(model: QuboModel, scheme: EncodingScheme, args) -> RankResult:
    if args.solver == "exhaustive":
        samples = [solve_exhaustive(model, scheme)]
    else:
        cfg = AnnealConfig(
            n_samples=args.samples, sweeps=args.sweeps, t_hot=args.t_hot,
            t_cold=args.t_cold, seed=args.seed,
        )
        samples = solve_sa(model, cfg, scheme)
    return filter_rank(samples, scheme)


def _no_feasible(result: RankResult) -> int:
    counts = ", ".join(f"{k}={v}" for k, v in sorted(result.violation_counts().items()))
    print(f"no feasible solution among {len(result.infeasible)} samples; violations: {counts}",
          file=sys.stderr)
    return EXIT_INFEASIBLE


def _cumrets_rows(panel: ReturnsPanel, series: dict[str, np.ndarray]) -> list[list[str]]:
    cum_index = cumulative_log_returns(panel.require_index())
    cols = {name: cumulative_log_returns(r) for name, r in series.items()}
    rows = []
    for t, date in enumerate(panel.dates):
        rows.append([date, repr(float(cum_index[t]))] + [repr(float(c[t])) for c in cols.values()])
    return rows


def _log_problem(scheme: EncodingScheme) -> None:
    logger.info(
        "N=%d K=%d C=%d K_max=%d D=%d variables=%d",
        scheme.n_assets, scheme.resolution, scheme.cardinality,
        scheme.k_max, scheme.n_bits, scheme.n_vars,
    )


# ---------------------------------------------------------------------------
# commands


def cmd_track(args) -> int:
    _validate_solver_args(args)
    panel = _load_panel(args)
    panel.require_index()
    scheme = _scheme(args, panel.n_assets)
    _log_problem(scheme)
    model = build_tracking(panel, scheme, _objective(args, "tracking"))
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.dump_model:
        dump_model(model, out / "model.qubo")
    result = _solve(model, scheme, args)
    samples = sorted(result.feasible + result.infeasible, key=Solution.key)

    reports = {id(s): rep.safe_score(s.weights, panel) for s in samples}
    meta = {"mode": "tracking", "lambda": None}
    rep.write_json(out / "solutions.json",
                   [rep.solution_record(s, scheme, panel, reports[id(s)], meta) for s in samples])
    rep.atomic_write(out / "success.txt",
                     f"C={scheme.cardinality} K={scheme.resolution} success_rate="
                     f"{result.success_rate * 100:.0f}% ({len(result.feasible)}/{len(samples)})\n")
    if not result.feasible:
        return _no_feasible(result)

    best = result.best
    best_cte = min(result.feasible, key=lambda s: (reports[id(s)].cte, s.key()))
    r_best, r_cte = reports[id(best)], reports[id(best_cte)]
    rep.write_csv(out / "report.csv", rep.TABLE2_COLUMNS, [rep.table2_row(scheme, r_best)])
    rep.write_csv(out / "report_best_cte.csv", rep.TABLE2_COLUMNS, [rep.table2_row(scheme, r_cte)])
    rep.write_csv(out / "weights.csv", ("asset", "weight", "selected"), rep.weights_rows(panel, best))
    rep.write_csv(out / "cumrets.csv", ("date", "index_cumlogret", "portfolio_cumlogret"),
                  _cumrets_rows(panel, {"portfolio": portfolio_returns(best.weights, panel)}))
    feasible_reports = [reports[id(s)] for s in result.feasible]
    rep.write_json(out / "summary.json", {
        "K": scheme.resolution, "C": scheme.cardinality, "k_max": scheme.k_max,
        "bits_per_asset": scheme.n_bits, "n_vars": scheme.n_vars,
        "success_rate": result.success_rate,
        "best_by_energy": {"sample_index": best.sample_index, "energy": best.energy, **r_best.as_dict()},
        "best_by_cte": {"sample_index": best_cte.sample_index, "energy": best_cte.energy, **r_cte.as_dict()},
        "mean_over_feasible_samples": {
            "mre": float(np.mean([r.mre for r in feasible_reports])),
            "mdre": float(np.mean([r.mdre for r in feasible_reports])),
            "cte": float(np.mean([r.cte for r in feasible_reports])),
        },
    })
    print(f"best e_cte={rep.fmt_cte(r_best.cte)} success_rate={result.success_rate:.2f}")
    return EXIT_OK


def _lambda_grid(args) -> list[float]:
    grid = list(args.lam) if args.lam else list(args.lambda_grid or [])
    if not grid:
        raise UsageError("give --lambda-grid or at least one --lambda")
    for lam in grid:
        if not 0.0 <= lam <= 1.0:
            raise UsageError(f"lambda {lam} outside [0, 1]")
    return grid


def cmd_enhance(args) -> int:
    grid = _lambda_grid(args)
    _validate_solver_args(args)
    panel = _load_panel(args)
    panel.require_index()
    scheme = _scheme(args, panel.n_assets)
    if args.window < 2:
        raise UsageError("--window must be at least 2")
    covset = covariances(panel, args.window)
    idx_sharpe = index_sharpe_series(panel, args.window)
    _log_problem(scheme)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)

    table, scatter, records, weights, cum_series, sharpe_cols = [], [], [], [], {}, {}
    any_feasible = False
    for lam in grid:
        model = build_enhanced(panel, scheme, covset, _objective(args, "enhanced", lam))
        if args.dump_model:
            dump_model(model, out / f"model_lambda_{lam:g}.qubo")
        result = _solve(model, scheme, args)
        samples = sorted(result.feasible + result.infeasible, key=Solution.key)
        reports = {id(s): rep.safe_score(s.weights, panel, covset, result.success_rate) for s in samples}
        meta = {"mode": "enhanced", "lambda": lam}
        records += [rep.solution_record(s, scheme, panel, reports[id(s)], meta) for s in samples]
        for s in samples:
            r = reports[id(s)]
            scatter.append([f"{lam:g}", str(s.sample_index), rep.fmt_sig(r.cte if r else None),
                            rep.fmt_sig(r.mdrse if r else None), str(int(s.feasible))])
        scored = [s for s in result.feasible if reports[id(s)] is not None]
        if not scored:
            logger.warning("lambda=%g: no feasible scored sample", lam)
            continue
        any_feasible = True
        best = max(scored, key=lambda s: (reports[id(s)].enhancement_score, -s.energy))
        r = reports[id(best)]
        table.append([f"{lam:g}", rep.fmt_cte(r.cte), rep.fmt_sig(r.vol_error), rep.fmt_sig(r.mdrse),
                      rep.fmt_sig(r.correlation), rep.fmt_sig(r.enhancement_score)])
        weights += [[f"{lam:g}", *row] for row in rep.weights_rows(panel, best)]
        key = f"lambda_{lam:g}"
        cum_series[key] = portfolio_returns(best.weights, panel)
        sharpe_cols[key] = np.asarray(r.sharpe_series)

    rep.write_json(out / "solutions.json", records)
    rep.write_csv(out / "sharpe_vs_tracking.csv", ("lambda", "sample_index", "e_cte", "mdrse", "feasible"), scatter)
    if not any_feasible:
        print("no feasible solution for any lambda", file=sys.stderr)
        return EXIT_INFEASIBLE
    rep.write_csv(out / "enhanced.csv", rep.TABLE4_COLUMNS, table)
    rep.write_csv(out / "weights.csv", ("lambda", "asset", "weight", "selected"), weights)
    rep.write_csv(out / "cumrets.csv", ("date", "index_cumlogret", *cum_series), _cumrets_rows(panel, cum_series))
    rep.write_csv(
        out / "sharpe.csv", ("date", "index", *sharpe_cols),
        [[d, repr(float(idx_sharpe[t])), *(repr(float(c[t])) for c in sharpe_cols.values())]
         for t, d in enumerate(panel.dates)],
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.grid:
        raise UsageError("--grid must list at least one C:K pair")
    _validate_solver_args(args)
    panel = _load_panel(args)
    panel.require_index()
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    summary, box, plan = [], [], []
    for C, K in args.grid:
        try:
            if C > panel.n_assets:
                raise InfeasibleSchemeError(f"C={C} exceeds N={panel.n_assets}")
            scheme = build_scheme(K, C, args.max_holding, panel.n_assets)
        except InfeasibleSchemeError as exc:
            logger.warning("skipping C=%d K=%d: %s", C, K, exc)
            plan.append([str(C), str(K), "", "", "", f"skipped: {exc}"])
            continue
        _log_problem(scheme)
        plan.append([str(C), str(K), str(scheme.k_max), str(scheme.n_bits), str(scheme.n_vars), "ok"])
        if args.plan_only:
            continue
        model = build_tracking(panel, scheme, _objective(args, "tracking"))
        result = _solve(model, scheme, args)
        for s in sorted(result.feasible + result.infeasible, key=lambda s: s.sample_index):
            r = rep.safe_score(s.weights, panel)
            box.append([str(C), str(K), str(s.sample_index), rep.fmt_cte(r.cte) if r else "",
                        str(int(s.feasible))])
        row = [str(C), str(K), str(scheme.n_vars)]
        if result.feasible:
            r = rep.safe_score(result.best.weights, panel)
            row += rep.table2_row(scheme, r)[2:]
        else:
            row += ["", "", "", ""]
        summary.append(row + [f"{result.success_rate:.2f}"])

    rep.write_csv(out / "plan.csv", ("C", "K", "k_max", "bits_per_asset", "n_vars", "status"), plan)
    if args.plan_only:
        return EXIT_OK
    rep.write_csv(out / "boxplot.csv", ("C", "K", "sample_index", "e_cte", "feasible"), box)
    rep.write_csv(out / "sweep_summary.csv",
                  ("C", "K", "n_vars", "e_cte", "mre", "mdre", "vol_error", "success_rate"), summary)
    return EXIT_OK


def cmd_markowitz(args) -> int:
    _validate_solver_args(args)
    panel = _load_panel(args)
    scheme = _scheme(args, panel.n_assets)
    _log_problem(scheme)
    model = build_markowitz(panel, scheme, _objective(args, "markowitz"), cardinality=True)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.dump_model:
        dump_model(model, out / "model.qubo")
    result = _solve(model, scheme, args)
    samples = sorted(result.feasible + result.infeasible, key=Solution.key)
    mu = panel.returns.mean(axis=0)
    cov = covariances(panel, panel.n_periods).full

    def stats(s: Solution) -> dict:
        w = s.weights
        return {"mean_return": float(w @ mu), "variance": float(w @ cov @ w)}

    records = []
    for s in samples:
        rec = rep.solution_record(s, scheme, panel, None, {"mode": "markowitz", "lambda": None})
        rec["metrics"] = stats(s)
        records.append(rec)
    rep.write_json(out / "solutions.json", records)
    rep.atomic_write(out / "success.txt", f"success_rate={result.success_rate * 100:.0f}%\n")
    if not result.feasible:
        return _no_feasible(result)
    rep.write_csv(out / "weights.csv", ("asset", "weight", "selected"), rep.weights_rows(panel, result.best))
    rep.write_json(out / "summary.json", {"success_rate": result.success_rate,
                                          "energy": result.best.energy, **stats(result.best)})
    return EXIT_OK


def _read_weights(path: Path, asset_ids: Sequence[str]) -> np.ndarray:
    w = dict.fromkeys(asset_ids, 0.0)
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            if row["asset"] not in w:
                raise DataError(f"weights file names unknown asset {row['asset']!r}")
            w[row["asset"]] = float(row["weight"])
    return np.array([w[a] for a in asset_ids])


def cmd_report(args) -> int:
    if args.data is None or args.weights is None:
        raise UsageError("report needs --data and --weights")
    panel = _load_panel(args)
    weights = _read_weights(args.weights, panel.asset_ids)
    covset = covariances(panel, args.window) if args.window else None
    r = score_portfolio(weights, panel, covset)
    out: Path = args.out
    rep.write_json(out / "report.json", r.as_dict())
    n_sel = int((weights > 0).sum())
    rep.write_csv(out / "report.csv", ("C", "e_cte", "mre", "mdre", "vol_error", "correlation", "mdrse", "score"),
                  [[str(n_sel), rep.fmt_cte(r.cte), rep.fmt_sig(r.mre), rep.fmt_sig(r.mdre),
                    rep.fmt_sig(r.vol_error), rep.fmt_sig(r.correlation), rep.fmt_sig(r.mdrse),
                    rep.fmt_sig(r.enhancement_score)]])
    return EXIT_OK


def cmd_synth(args) -> int:
    R = factor_returns(args.periods, args.assets, seed=args.seed)
    rng = np.random.default_rng(args.seed + 1)
    if args.index_units:
        units = np.array([int(u) for u in args.index_units.split(",")])
        if len(units) != args.assets:
            raise UsageError("--index-units needs one entry per asset")
        w = units / units.sum()
    else:
        w = rng.dirichlet(np.ones(args.assets))
    panel = ReturnsPanel(business_dates(args.periods), tuple(f"A{i:03d}" for i in range(args.assets)), R, R @ w)
    args.out_file.parent.mkdir(parents=True, exist_ok=True)
    write_price_csv(to_price_panel(panel), args.out_file, index_col=args.index_col)
    return EXIT_OK


COMMANDS = {
    "track": cmd_track,
    "enhance": cmd_enhance,
    "sweep": cmd_sweep,
    "markowitz": cmd_markowitz,
    "report": cmd_report,
    "synth": cmd_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"cardtrack: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"cardtrack: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CardtrackError as exc:
        print(f"cardtrack: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
