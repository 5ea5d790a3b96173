"""Command-line interface.

Subcommands: ``simulate``, ``fit``, ``estimate``, ``rate-study``,
``coverage-study``, ``ortho-check``, ``blocks``.  All file-producing
commands read one config file (``--config``) and write CSVs into the
``--out`` directory; ``--seed`` overrides the configured seed.  Exit
codes: 0 success, 2 config/usage error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from .blocking import make_partition
from .config import AppConfig, ConfigError, load_config
from .dgp import read_dataset_csv, simulate, write_dataset_csv
from .harness import (
    run_coverage_study,
    run_rate_study,
    write_manifest,
    write_rate_csv,
    write_records_csv,
    write_summary_csv,
)
from .inference import confidence_interval
from .orthogonality import gateaux_first_derivative, moment_curve
from .sieve import architecture_for, fit_nuisances

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plrnet",
        description=(
            "Simulation, estimation and Monte Carlo diagnostics for the "
            "partially linear time-series model with network first stages."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, config_required: bool = True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument(
            "--config", required=config_required, help="path to the INI config file"
        )
        p.add_argument("--out", default=".", help="output directory (created if absent)")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        return p

    add("simulate", "draw a dataset from the configured simulator")
    add("fit", "fit the two nuisance networks on a dataset")
    add("estimate", "fit nuisances and report the estimate with interval")
    add("rate-study", "Monte Carlo RMSE over the n grid plus log-log slope")
    add("coverage-study", "Monte Carlo interval coverage")
    add("ortho-check", "moment sensitivity along a nuisance perturbation path")

    blocks = sub.add_parser("blocks", help="print an alternating block partition")
    blocks.add_argument("--n", type=int, required=True, help="series length")
    blocks.add_argument("--a", type=int, required=True, help="block length")
    blocks.add_argument("--out", default=None, help="also write blocks.csv here")
    return parser


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> AppConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        dgp = replace(cfg.dgp, seed=args.seed) if cfg.dgp is not None else None
        cfg = replace(cfg, dgp=dgp, base_seed=args.seed)
    return cfg


def _dataset(cfg: AppConfig):
    """Saved dataset when configured, otherwise a fresh draw."""
    if cfg.dataset is not None:
        return read_dataset_csv(cfg.dataset), None
    if cfg.dgp is None:
        raise ConfigError("need either [data] dataset or a [dgp] section")
    data, oracle = simulate(cfg.dgp)
    return data, oracle


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    if cfg.dgp is None:
        raise ConfigError("simulate needs a [dgp] section")
    out = _outdir(args)
    data, _ = simulate(cfg.dgp)
    write_dataset_csv(data, out / "dataset.csv")
    write_manifest(cfg.dgp, out / "manifest.csv")
    print(f"wrote {out / 'dataset.csv'} (n={data.n}, d={data.d})")
    return EXIT_OK


def _fit_pair(cfg: AppConfig, data):
    return fit_nuisances(data, cfg.rule_t, cfg.rule_y, cfg.train)


def _write_fit_csv(cfg: AppConfig, fits, n: int, path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["role", "train_mse", "best_restart_mse", "loss_gap", "epochs_run",
             "seed", "depth", "width", "bound"]
        )
        for role, rule, res in (
            ("treatment", cfg.rule_t, fits[0]),
            ("outcome", cfg.rule_y, fits[1]),
        ):
            arch = architecture_for(n, rule)
            writer.writerow(
                [role, repr(res.train_mse), repr(res.best_restart_mse),
                 repr(res.loss_gap), res.epochs_run, res.seed,
                 arch.depth, arch.hidden_widths[0], repr(arch.output_bound)]
            )


def _cmd_fit(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    data, _ = _dataset(cfg)
    fits = _fit_pair(cfg, data)
    fits[0].network.save(out / "net_treatment.txt")
    fits[1].network.save(out / "net_outcome.txt")
    _write_fit_csv(cfg, fits, data.n, out / "fit.csv")
    write_manifest(cfg, out / "manifest.csv")
    print(
        f"wrote {out / 'fit.csv'} "
        f"(mse_t={fits[0].train_mse:.6g}, mse_y={fits[1].train_mse:.6g})"
    )
    return EXIT_OK


def _cmd_estimate(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    data, _ = _dataset(cfg)
    fits = _fit_pair(cfg, data)
    est = confidence_interval(
        data, fits[0], fits[1], level=cfg.level, bandwidth=cfg.bandwidth
    )
    row = est.csv_row(seed=cfg.dgp.seed if cfg.dgp is not None else None)
    with open(out / "estimate.csv", "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(row))
        writer.writerow(list(row.values()))
    write_manifest(cfg, out / "manifest.csv")
    print(
        f"theta_hat={est.theta_hat:.6g} se={est.se:.6g} "
        f"ci=[{est.ci_low:.6g}, {est.ci_high:.6g}] -> {out / 'estimate.csv'}"
    )
    return EXIT_OK


def _cmd_rate_study(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    experiment = cfg.experiment()
    summary, fit, records = run_rate_study(experiment)
    write_records_csv(records, out / "replications.csv")
    write_summary_csv(summary, out / "summary.csv")
    write_rate_csv(fit, out / "rate.csv")
    write_manifest(experiment, out / "manifest.csv")
    print(f"log-log RMSE slope = {fit.slope:.4f} (se {fit.slope_se:.4f}) -> {out}")
    return EXIT_OK


def _cmd_coverage_study(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    experiment = cfg.experiment()
    summary, records = run_coverage_study(experiment)
    write_records_csv(records, out / "replications.csv")
    write_summary_csv(summary, out / "summary.csv")
    write_manifest(experiment, out / "manifest.csv")
    for row in summary.rows:
        print(
            f"n={row.n}: coverage {row.coverage:.3f} at level {summary.level}, "
            f"failures {row.failures}/{row.replications}"
        )
    return EXIT_OK


def _cmd_ortho_check(args) -> int:
    cfg = _load(args)
    if cfg.ortho is None:
        raise ConfigError("ortho-check needs an [ortho] section")
    if cfg.dgp is None:
        raise ConfigError("ortho-check needs a [dgp] section")
    out = _outdir(args)
    settings = cfg.ortho
    theta = cfg.dgp.theta0 if settings.theta is None else settings.theta
    bound_y = architecture_for(max(cfg.dgp.n, 2), cfg.rule_y).output_bound
    settings.direction.validate(cfg.dgp.d, bound_y)
    curve = moment_curve(
        cfg.dgp, settings.direction, theta, settings.lambdas, settings.mc_n,
        settings.seed,
    )
    deriv = gateaux_first_derivative(
        cfg.dgp, settings.direction, theta, settings.mc_n, settings.seed,
        step=settings.fd_step,
    )
    with open(out / "ortho.csv", "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "m_lambda", "mc_se", "quadratic_prediction"])
        for point in curve:
            writer.writerow(
                [repr(point.lam), repr(point.value), repr(point.mc_se),
                 repr(point.quadratic_prediction)]
            )
    write_manifest(cfg, out / "manifest.csv")
    print(
        f"first derivative at 0: {deriv.value:.3e} (mc se {deriv.mc_se:.3e}) "
        f"-> {out / 'ortho.csv'}"
    )
    return EXIT_OK


def _cmd_blocks(args) -> int:
    part = make_partition(args.n, args.a)
    rows = part.rows()
    print("block_type,j,start,end")
    for row in rows:
        print(",".join(str(v) for v in row))
    if args.out is not None:
        out = _outdir(args)
        with open(out / "blocks.csv", "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(["block_type", "j", "start", "end"])
            writer.writerows(rows)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "estimate": _cmd_estimate,
    "rate-study": _cmd_rate_study,
    "coverage-study": _cmd_coverage_study,
    "ortho-check": _cmd_ortho_check,
    "blocks": _cmd_blocks,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
