"""Command-line entry points.

Three subcommands: ``run`` executes one configured SMC^2 pass and writes
trace.csv / samples.csv / summary.json; ``table1`` prints the stage-2
candidate sizes for a reference setting; ``bench`` runs a method grid
against a reference chain and writes scores.csv. Configs are flat TOML
documents (one optional [data] table). Exit codes: 0 success, 1 runtime
failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .adaptation import STAGE2_CHOICES, STAGE3_CHOICES, AdaptPolicy, candidates_stage2
from .artifacts import (
    SCORES_HEADER,
    summary_payload,
    write_samples_csv,
    write_scores_csv,
    write_summary_json,
    write_trace_csv,
)
from .engine import SmcConfig, run_smc2
from .harness import posterior_mean_unconstrained, reference_posterior_mean, relative_scores
from .models import MODEL_CLASSES, get_model, load_dataset, simulate_dataset


class ConfigError(Exception):
    """Invalid or missing configuration; exits with status 2."""


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from None


def _take(cfg: dict, key: str, kind, default=...):
    if key not in cfg:
        if default is ...:
            raise ConfigError(f"missing config key {key!r}")
        return default
    value = cfg[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"config key {key!r} must be {kind.__name__}, got {value!r}")
    return value


def _build_policy(cfg: dict, stage2: str, stage3: str) -> AdaptPolicy:
    gs_nx = _take(cfg, "gs_nx", int, None)
    nx_max = _take(cfg, "nx_max", int, None)
    if nx_max is None and gs_nx is not None:
        nx_max = 5 * gs_nx  # keep adapted clouds within 5x the reference size
    policy = AdaptPolicy(
        stage2=stage2,
        stage3=stage3,
        esjd_target=_take(cfg, "esjd_target", float, 6.0),
        var_probes=_take(cfg, "var_probes", int, 100),
        nx_min=_take(cfg, "nx_min", int, 10),
        nx_max=nx_max,
        rounding=_take(cfg, "rounding", str, "ceil"),
        max_sweeps=_take(cfg, "max_sweeps", int, 100),
    )
    try:
        policy.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return policy


def _build_dataset(cfg: dict, model):
    data_cfg = _take(cfg, "data", dict)
    source = _take(data_cfg, "source", str, "synthetic")
    if source == "csv":
        path = _take(data_cfg, "path", str)
        try:
            return load_dataset(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load dataset {path}: {exc}") from None
    if source != "synthetic":
        raise ConfigError(f"data.source must be 'synthetic' or 'csv', got {source!r}")
    theta = data_cfg.get("theta", model.default_theta)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.dim_theta,):
        raise ConfigError(f"data.theta must have {model.dim_theta} entries")
    n_obs = _take(data_cfg, "n_obs", int)
    data_seed = _take(data_cfg, "seed", int, 0)
    if n_obs < 1:
        raise ConfigError("data.n_obs must be at least 1")
    return simulate_dataset(model, theta, n_obs, data_seed)


def _get_model(cfg: dict):
    name = _take(cfg, "model", str)
    if name not in MODEL_CLASSES:
        known = ", ".join(sorted(MODEL_CLASSES))
        raise ConfigError(f"unknown model {name!r}; known models: {known}")
    return get_model(name)


def _stage_progress(record) -> None:
    print(
        f"stage {record.d}: g={record.temper:.6f} nx={record.nx} sweeps={record.sweeps} "
        f"esjd={record.esjd:.3f} ess={record.ess:.1f} tll={record.tll}",
        file=sys.stderr,
    )


def _out_dir(args, cfg: dict) -> Path:
    out = args.out if args.out is not None else _take(cfg, "out_dir", str, ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_run(args) -> int:
    """Execute one SMC^2 run from a config file."""
    cfg = _load_toml(args.config)
    model = _get_model(cfg)
    dataset = _build_dataset(cfg, model)
    flavor = _take(cfg, "flavor", str)
    stage2 = _take(cfg, "stage2", str, "novel_esjd")
    stage3 = _take(cfg, "stage3", str, "replace")
    policy = _build_policy(cfg, stage2, stage3)
    seed = args.seed if args.seed is not None else _take(cfg, "seed", int)
    config = SmcConfig(
        flavor=flavor,
        n_theta=_take(cfg, "n_theta", int),
        nx0=_take(cfg, "nx0", int),
        seed=seed,
        policy=policy,
        ess_frac=_take(cfg, "ess_frac", float, 0.6),
        max_restarts=_take(cfg, "max_restarts", int, 25),
    )
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    progress = None if args.quiet else _stage_progress
    ensemble, trace = run_smc2(model, dataset, config, progress=progress)

    out = _out_dir(args, cfg)
    write_trace_csv(out / "trace.csv", trace)
    write_samples_csv(out / "samples.csv", model, ensemble)
    write_summary_json(out / "summary.json", summary_payload(model, ensemble, flavor, seed))
    if not args.quiet:
        print(f"wrote {out / 'trace.csv'}, {out / 'samples.csv'}, {out / 'summary.json'}")
    return 0


TABLE1_VARIANCES = (0.5, 1.0, 1.5, 50.0)
TABLE1_STRATEGIES = ("double", "rescale_var", "rescale_std", "novel_var", "novel_esjd")


def table1_cells(nx: int = 100) -> dict:
    """Candidate sizes keyed by (variance, strategy) for the reference setting.

    The setting is a current cloud size of ``nx`` with variance scale
    G = 1 (annealing, or tempering at exponent 1).
    """
    cells = {}
    for var in TABLE1_VARIANCES:
        for strategy in TABLE1_STRATEGIES:
            policy = AdaptPolicy(stage2=strategy, stage3="replace")
            cells[(var, strategy)] = tuple(
                candidates_stage2(nx, var, temper=1.0, policy=policy, flavor="da")
            )
    return cells


def cmd_table1(args) -> int:
    """Print the stage-2 candidate table for nx=100, G=1."""
    cells = table1_cells()
    widths = {s: max(len(s), *(len(_cell(cells[(v, s)])) for v in TABLE1_VARIANCES)) for s in TABLE1_STRATEGIES}
    head = "variance  " + "  ".join(s.ljust(widths[s]) for s in TABLE1_STRATEGIES)
    print(head)
    for var in TABLE1_VARIANCES:
        row = f"{var:<8g}  " + "  ".join(
            _cell(cells[(var, s)]).ljust(widths[s]) for s in TABLE1_STRATEGIES
        )
        print(row.rstrip())
    return 0


def _cell(values) -> str:
    return ", ".join(str(v) for v in values)


def _parse_method(spec: str):
    """Parse 'stage2+stage3:nx0' (or 'fixed:nx0') into policy pieces."""
    name, sep, nx_part = spec.partition(":")
    if not sep:
        raise ConfigError(f"method {spec!r} must end with ':<initial nx>'")
    try:
        nx0 = int(nx_part)
    except ValueError:
        raise ConfigError(f"method {spec!r} has a non-integer nx") from None
    if name == "fixed":
        stage2, stage3 = "fixed", "replace"
    elif "+" in name:
        stage2, stage3 = name.split("+", 1)
    else:
        raise ConfigError(f"method {spec!r} must be 'fixed:<nx>' or '<stage2>+<stage3>:<nx>'")
    if stage2 not in STAGE2_CHOICES or stage3 not in STAGE3_CHOICES:
        raise ConfigError(f"method {spec!r} names unknown stages")
    return spec, stage2, stage3, nx0


def cmd_bench(args) -> int:
    """Run the configured method grid and write relative scores."""
    cfg = _load_toml(args.config)
    model = _get_model(cfg)
    dataset = _build_dataset(cfg, model)
    flavor = _take(cfg, "flavor", str)
    n_theta = _take(cfg, "n_theta", int)
    seed = args.seed if args.seed is not None else _take(cfg, "seed", int)
    replicates = _take(cfg, "replicates", int, 1)
    if replicates < 1:
        raise ConfigError("replicates must be at least 1")
    method_specs = _take(cfg, "methods", list)
    if not method_specs:
        raise ConfigError("methods must be a non-empty list")
    methods = [_parse_method(str(spec)) for spec in method_specs]

    ref_method = _take(cfg, "ref_method", str, "exact_mcmc")
    ref_iters = _take(cfg, "ref_iters", int, 100_000)
    ref_nx = _take(cfg, "ref_nx", int, None)
    try:
        reference = reference_posterior_mean(
            model, dataset.y, ref_method, ref_iters, seed, nx=ref_nx
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not args.quiet:
        print(f"reference chain done (accept rate {reference.accept_rate:.2f})", file=sys.stderr)

    labels, mses, tlls = [], [], []
    for label, stage2, stage3, nx0 in methods:
        sq_errs, costs = [], []
        for rep in range(replicates):
            run_seed = seed + rep  # replicate r reuses seed+r across methods
            policy = _build_policy(cfg, stage2, stage3)
            config = SmcConfig(
                flavor=flavor, n_theta=n_theta, nx0=nx0, seed=run_seed, policy=policy,
                ess_frac=_take(cfg, "ess_frac", float, 0.6),
                max_restarts=_take(cfg, "max_restarts", int, 25),
            )
            try:
                config.validate()
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            ensemble, _ = run_smc2(model, dataset, config)
            mean_u = posterior_mean_unconstrained(ensemble)
            sq_errs.append(float(np.mean((mean_u - reference.mean_u) ** 2)))
            costs.append(ensemble.tll)
            if not args.quiet:
                print(f"{label} rep {rep}: mse={sq_errs[-1]:.5g} tll={costs[-1]}", file=sys.stderr)
        labels.append(label)
        mses.append(float(np.mean(sq_errs)))
        tlls.append(float(np.mean(costs)))

    metrics = relative_scores(labels, mses, tlls, baseline=0)
    out = _out_dir(args, cfg)
    write_scores_csv(out / "scores.csv", metrics)
    if not args.quiet:
        print(SCORES_HEADER)
        for m in metrics:
            print(f"{m.label},{m.z_mse:.4g},{m.z_tll:.4g},{m.z:.4g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smc2adapt",
        description="SMC^2 with adaptive state-particle counts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one configured SMC^2 pass")
    run_p.add_argument("--config", required=True, help="TOML config path")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--quiet", action="store_true", help="suppress progress output")
    run_p.set_defaults(func=cmd_run)

    t1_p = sub.add_parser("table1", help="print stage-2 candidate sizes (nx=100, G=1)")
    t1_p.set_defaults(func=cmd_table1)

    bench_p = sub.add_parser("bench", help="run a method grid and score it")
    bench_p.add_argument("--config", required=True, help="TOML config path")
    bench_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    bench_p.add_argument("--out", default=None, help="output directory")
    bench_p.add_argument("--quiet", action="store_true", help="suppress progress output")
    bench_p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
