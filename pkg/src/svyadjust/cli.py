"""Command-line surface.

Subcommands:
  fit       fit the pseudo-posterior to microdata, write a draws file
  adjust    apply the replicate covariance correction to an existing fit
  simulate  run the built-in design scenarios, write a summary table
  report    render a summary table and emit 90% ellipse boundary points

Options can come from a JSON config file (--config), from environment
variables with the SVYADJUST_ prefix, or from flags; flags win over env
vars, which win over the config file.  Seeds are mandatory (no wall-clock
default).  Exit codes: 0 success, 2 config error, 3 data error,
4 numerical failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import io as svyio
from .adjust import ReplicateConfig, adjust_draws, deff_params, estimate_HJ
from .designs import SCENARIOS, ScenarioConfig, default_population_size
from .errors import (DATA_ERRORS, NUMERICAL_ERRORS, ConfigError, ParseError,
                     SvyError)
from .evaluate import chi2_quantile, marginal_interval, run_scenario
from .model import normalize_weights
from .sampler import PriorSpec, SamplerConfig, sample_pseudo_posterior

ENV_PREFIX = "SVYADJUST_"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svyadjust",
        description="Survey-weighted pseudo-posterior fitting and "
                    "covariance correction.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override")
        p.add_argument("--seed", type=int, help="RNG seed (required)")
        p.add_argument("--out", help="output path")

    p_fit = sub.add_parser("fit", help="fit pseudo-posterior to microdata")
    common(p_fit)
    p_fit.add_argument("--data", help="microdata file (CSV with header)")
    p_fit.add_argument("--outcome", help="binary outcome column")
    p_fit.add_argument("--covariates",
                       help="comma-separated covariate columns")
    p_fit.add_argument("--weight", help="sampling weight column")
    p_fit.add_argument("--stratum", help="stratum id column (optional)")
    p_fit.add_argument("--psu", help="PSU id column (optional)")
    p_fit.add_argument("--draws", type=int, help="total posterior draws")
    p_fit.add_argument("--chains", type=int, help="number of chains")
    p_fit.add_argument("--warmup", type=int, help="warmup iterations/chain")
    p_fit.add_argument("--prior-sd", type=float,
                       help="Gaussian prior sd per coefficient")
    p_fit.add_argument("--replicates", type=int,
                       help="adjustment replicates (when stratum/psu mapped)")

    p_adj = sub.add_parser("adjust", help="adjust an existing draws file")
    common(p_adj)
    p_adj.add_argument("--draws-file", help="draws file from `fit`")
    p_adj.add_argument("--data", help="microdata file with design columns")
    p_adj.add_argument("--outcome", help="binary outcome column")
    p_adj.add_argument("--covariates", help="comma-separated covariates")
    p_adj.add_argument("--weight", help="sampling weight column")
    p_adj.add_argument("--stratum", help="stratum id column")
    p_adj.add_argument("--psu", help="PSU id column")
    p_adj.add_argument("--replicates", type=int, help="number of replicates")

    p_sim = sub.add_parser("simulate", help="run simulation scenarios")
    common(p_sim)
    p_sim.add_argument("--scenario",
                       help=f"one of {', '.join(SCENARIOS)}, or 'all'")
    p_sim.add_argument("--realizations", type=int, help="realizations M")
    p_sim.add_argument("--replicates", type=int, help="replicates R")
    p_sim.add_argument("--population-size", type=int, help="population N")
    p_sim.add_argument("--sample-size", type=int, help="sample size n")
    p_sim.add_argument("--draws", type=int, help="posterior draws per fit")
    p_sim.add_argument("--chains", type=int, help="chains per fit")
    p_sim.add_argument("--warmup", type=int, help="warmup per chain")

    p_rep = sub.add_parser("report", help="render tables and ellipse data")
    common(p_rep)
    p_rep.add_argument("--summary", help="summary file from `simulate`")
    p_rep.add_argument("--draws-file", help="draws file for ellipse output")
    p_rep.add_argument("--adjusted-draws-file",
                       help="adjusted draws file for a second ellipse")
    p_rep.add_argument("--level", type=float, help="ellipse level")
    return parser


class _Options:
    """Layered option lookup: flag > SVYADJUST_* env var > config file."""

    def __init__(self, args):
        self.args = vars(args)
        self.config = {}
        path = self._raw("config")
        if path:
            try:
                with open(path, encoding="utf-8") as f:
                    self.config = json.load(f)
            except OSError as e:
                raise ConfigError(f"cannot read config {path}: {e}") from e
            except json.JSONDecodeError as e:
                raise ConfigError(f"bad config {path}: {e}") from e

    def _raw(self, key):
        v = self.args.get(key.replace("-", "_"))
        if v is not None:
            return v
        env = os.environ.get(ENV_PREFIX + key.replace("-", "_").upper())
        if env is not None:
            return env
        return self.config.get(key)

    def get(self, key, default=None, cast=None, required=False):
        v = self._raw(key)
        if v is None:
            if required:
                raise ConfigError(f"missing required option --{key}")
            return default
        if cast is not None and not isinstance(v, cast if isinstance(cast, type) else object):
            try:
                v = cast(v)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad value for --{key}: {v!r}") from e
        return v

    def snapshot(self) -> dict:
        merged = dict(self.config)
        merged.update({k: v for k, v in self.args.items() if v is not None})
        merged.pop("config", None)
        return merged


def _covariate_list(opts) -> list[str]:
    cov = opts.get("covariates", required=True)
    if isinstance(cov, str):
        cov = [c.strip() for c in cov.split(",") if c.strip()]
    if not cov:
        raise ConfigError("--covariates must name at least one column")
    return list(cov)


def _load_sample(opts, require_design=False):
    data = opts.get("data", required=True)
    outcome = opts.get("outcome", required=True)
    covariates = _covariate_list(opts)
    weight = opts.get("weight", required=True)
    stratum = opts.get("stratum")
    psu = opts.get("psu")
    if require_design and (stratum is None or psu is None):
        raise ConfigError("adjust requires --stratum and --psu columns")
    sample = svyio.read_microdata(data, outcome, covariates, weight,
                                  stratum=stratum, psu=psu)
    return sample, covariates, stratum is not None and psu is not None


def _print_estimates(label, draws):
    mean = draws.mean()
    sd = draws.draws.std(axis=0, ddof=1)
    print(f"{label}:")
    for name, m, s in zip(draws.param_names, mean, sd):
        print(f"  {name:>10s}  mean {m: .6f}  sd {s:.6f}")


def cmd_fit(opts) -> int:
    sample, _, has_design = _load_sample(opts)
    seed = opts.get("seed", cast=int, required=True)
    out = opts.get("out", required=True)
    w = normalize_weights(sample.weight)
    prior_sd = opts.get("prior-sd", 5.0, cast=float)
    prior = PriorSpec(mean=np.zeros(sample.d), sd=np.full(sample.d, prior_sd))
    scfg = SamplerConfig(
        n_draws=opts.get("draws", 2000, cast=int),
        n_warmup=opts.get("warmup", 1000, cast=int),
        n_chains=opts.get("chains", 4, cast=int),
        seed=seed)
    draws = sample_pseudo_posterior(sample, w, prior, scfg)
    svyio.write_draws(out, draws, seed, opts.snapshot())
    _print_estimates("posterior (unadjusted)", draws)
    if draws.status != "ok":
        print(f"sampler status: {draws.status} "
              f"({'; '.join(draws.diagnostics.get('warnings', []))})")

    if has_design:
        rep_cfg = ReplicateConfig(R=opts.get("replicates", 100, cast=int),
                                  seed=seed)
        est = estimate_HJ(sample, draws.mean(), rep_cfg)
        adjusted = adjust_draws(draws, est)
        adj_out = out + ".adjusted"
        svyio.write_draws(adj_out, adjusted, seed, opts.snapshot())
        _print_adjustment(draws, adjusted, est)
    return 0


def _print_adjustment(draws, adjusted, est):
    iv = marginal_interval(draws)
    iv_adj = marginal_interval(adjusted)
    deff = deff_params(est)
    _print_estimates("posterior (adjusted)", adjusted)
    print("90% interval widths (unadjusted vs adjusted) and DEFF:")
    for j, name in enumerate(draws.param_names):
        print(f"  {name:>10s}  {iv.width[j]:.4f} vs {iv_adj.width[j]:.4f}"
              f"   DEFF {deff[j]:.3f}")


def cmd_adjust(opts) -> int:
    sample, _, _ = _load_sample(opts, require_design=True)
    seed = opts.get("seed", cast=int, required=True)
    out = opts.get("out", required=True)
    draws = svyio.read_draws(opts.get("draws-file", required=True))
    if draws.d != sample.d:
        raise ConfigError(f"draws have {draws.d} parameters but the model "
                          f"has {sample.d} columns")
    rep_cfg = ReplicateConfig(R=opts.get("replicates", 100, cast=int),
                              seed=seed)
    est = estimate_HJ(sample, draws.mean(), rep_cfg)
    adjusted = adjust_draws(draws, est)
    svyio.write_draws(out, adjusted, seed, opts.snapshot())
    report = {
        "H_hat": est.H_hat.tolist(),
        "J_hat": est.J_hat.tolist(),
        "deff_theta": deff_params(est).tolist(),
    }
    with open(out + ".estimates.json", "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
        f.write("\n")
    _print_adjustment(draws, adjusted, est)
    return 0


def cmd_simulate(opts) -> int:
    seed = opts.get("seed", cast=int, required=True)
    out = opts.get("out", required=True)
    name = opts.get("scenario", "all")
    names = list(SCENARIOS) if name == "all" else [name]
    for s in names:
        if s not in SCENARIOS:
            raise ConfigError(f"unknown scenario {s!r}; valid names: "
                              f"{', '.join(SCENARIOS)} (or 'all')")
    summaries = []
    for s in names:
        cfg = ScenarioConfig(
            scenario=s,
            N=opts.get("population-size", default_population_size(s),
                       cast=int),
            n=opts.get("sample-size", 200, cast=int),
            seed=seed,
            M_realizations=opts.get("realizations", 100, cast=int),
            R_replicates=opts.get("replicates", 100, cast=int),
            n_draws=opts.get("draws", 1000, cast=int),
            n_warmup=opts.get("warmup", 500, cast=int),
            n_chains=opts.get("chains", 2, cast=int))
        summary = run_scenario(cfg)
        summaries.append(summary)
        print(f"{s}: joint coverage {summary.joint_coverage:.2f} -> "
              f"{summary.joint_coverage_adj:.2f} (adjusted), "
              f"DEFF_y {summary.deff_y:.2f}")
    svyio.write_summary(out, summaries)
    return 0


_TABLE_COLS = [
    ("Marg0", "marg0_unadj", "marg0_adj"),
    ("Marg1", "marg1_unadj", "marg1_adj"),
    ("Joint", "joint_unadj", "joint_adj"),
    ("Width0", "width0_unadj", "width0_adj"),
    ("Width1", "width1_unadj", "width1_adj"),
]


def render_table(df) -> str:
    lines = []
    header = f"{'Scenario':<10s}"
    for label, _, _ in _TABLE_COLS:
        header += f"{label + ' un/adj':>18s}"
    header += f"{'DEFF t0':>9s}{'DEFF t1':>9s}{'DEFF y':>9s}"
    lines.append(header)
    lines.append("-" * len(header))
    for _, row in df.iterrows():
        line = f"{row['scenario']:<10s}"
        for _, un, adj in _TABLE_COLS:
            if un in row and adj in row:
                line += f"{row[un]:>9.2f}{row[adj]:>9.2f}"
            else:
                line += f"{'':>18s}"
        line += (f"{row.get('deff_theta0', float('nan')):>9.2f}"
                 f"{row.get('deff_theta1', float('nan')):>9.2f}"
                 f"{row.get('deff_y', float('nan')):>9.2f}")
        lines.append(line)
    return "\n".join(lines)


def ellipse_points(draws, level=0.9, n_points=100) -> np.ndarray:
    """Boundary of the sample-covariance ellipse at the chi2(2) radius."""
    if draws.d != 2:
        raise ConfigError("ellipse output requires 2-parameter draws")
    center = draws.mean()
    cov = np.atleast_2d(np.cov(draws.draws, rowvar=False))
    r = np.sqrt(chi2_quantile(2, level))
    angles = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    circle = np.column_stack([np.cos(angles), np.sin(angles)])
    L = np.linalg.cholesky(cov)
    return center + r * circle @ L.T


def cmd_report(opts) -> int:
    summary = opts.get("summary")
    draws_path = opts.get("draws-file")
    if summary is None and draws_path is None:
        raise ConfigError("report needs --summary and/or --draws-file")
    if summary is not None:
        df = svyio.read_summary(summary)
        print(render_table(df))
    if draws_path is not None:
        out = opts.get("out", required=True)
        level = opts.get("level", 0.9, cast=float)
        rows = []
        draws = svyio.read_draws(draws_path)
        for i, pt in enumerate(ellipse_points(draws, level)):
            rows.append(("unadjusted", i, pt[0], pt[1]))
        adj_path = opts.get("adjusted-draws-file")
        if adj_path is not None:
            adj = svyio.read_draws(adj_path)
            for i, pt in enumerate(ellipse_points(adj, level)):
                rows.append(("adjusted", i, pt[0], pt[1]))
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write("set,point,theta_0,theta_1\n")
            for set_, i, a, b in rows:
                f.write(f"{set_},{i},{a:.17g},{b:.17g}\n")
    return 0


_COMMANDS = {"fit": cmd_fit, "adjust": cmd_adjust,
             "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _Options(args)
        return _COMMANDS[args.subcommand](opts)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DATA_ERRORS as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NUMERICAL_ERRORS as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 4
    except SvyError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
