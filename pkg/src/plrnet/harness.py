"""Monte Carlo studies and deterministic experiment management.

One replication is simulate -> fit nuisances -> estimate-with-interval.
Studies repeat that over a seed sequence derived as base_seed + k with a
global replication counter k, optionally in a process pool capped by the
``PLR_THREADS`` environment variable; results are always ordered by
replication index, so a study is reproducible byte for byte.  Replication
failures are recorded, never fatal.
"""

from __future__ import annotations

import csv
import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .dgp import PlrDgpConfig, simulate
from .estimator import DegenerateDenominator
from .inference import Estimate, confidence_interval, rate_bound
from .sieve import ScalingRule, TrainConfig, fit_nuisances, inference_rate_margin

__all__ = [
    "ExperimentConfig",
    "MonteCarloSummary",
    "RateFit",
    "ReplicationRecord",
    "SummaryRow",
    "run_coverage_study",
    "run_rate_study",
    "run_replication",
    "write_manifest",
    "write_rate_csv",
    "write_records_csv",
    "write_summary_csv",
]

# Keeps training RNG streams disjoint from the simulation stream that uses
# the same replication seed.
_TRAIN_SEED_OFFSET = 10_000_019


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a study needs; replications derive their seeds from here."""

    dgp: PlrDgpConfig
    rule_t: ScalingRule
    rule_y: ScalingRule
    train: TrainConfig
    level: float = 0.95
    bandwidth: int | None = None
    replications: int = 1
    n_grid: tuple[int, ...] = (1000,)
    base_seed: int = 0
    oracle_nuisances: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_grid", tuple(int(v) for v in self.n_grid))
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if len(self.n_grid) < 1 or any(
            a >= b for a, b in zip(self.n_grid, self.n_grid[1:])
        ):
            raise ValueError("n_grid must be strictly increasing")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")


@dataclass(frozen=True)
class ReplicationRecord:
    """Outcome of one replication, successful or not."""

    n: int
    rep: int
    seed: int
    status: str  # "ok", "degenerate" or "error"
    error: str = ""
    theta_hat: float = float("nan")
    se: float = float("nan")
    ci_low: float = float("nan")
    ci_high: float = float("nan")
    lrv: float = float("nan")
    denom: float = float("nan")
    bandwidth: int = -1
    covered: bool = False
    mse_t: float = float("nan")
    mse_y: float = float("nan")
    loss_gap_t: float = float("nan")
    loss_gap_y: float = float("nan")
    rate_bound: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def run_replication(cfg: ExperimentConfig, n: int, seed: int) -> ReplicationRecord:
    """Simulate, fit (or inject oracle nuisances), estimate; never raises
    for estimation-level failures."""
    dgp_cfg = replace(cfg.dgp, n=int(n), seed=int(seed))
    rec = dict(n=int(n), rep=0, seed=int(seed))
    try:
        data, oracle = simulate(dgp_cfg)
        if cfg.oracle_nuisances:
            f_t, f_y = oracle.f_treat, oracle.f_out
            rec["mse_t"] = float(np.mean((data.t_var - f_t(data.x)) ** 2))
            rec["mse_y"] = float(np.mean((data.y - f_y(data.x)) ** 2))
            rec["loss_gap_t"] = 0.0
            rec["loss_gap_y"] = 0.0
        else:
            train = replace(cfg.train, seed=int(seed) + _TRAIN_SEED_OFFSET)
            fit_t, fit_y = fit_nuisances(data, cfg.rule_t, cfg.rule_y, train)
            f_t, f_y = fit_t.network, fit_y.network
            rec["mse_t"] = fit_t.train_mse
            rec["mse_y"] = fit_y.train_mse
            rec["loss_gap_t"] = fit_t.loss_gap
            rec["loss_gap_y"] = fit_y.loss_gap
        est: Estimate = confidence_interval(
            data, f_t, f_y, level=cfg.level, bandwidth=cfg.bandwidth
        )
        rec.update(
            status="ok",
            theta_hat=est.theta_hat,
            se=est.se,
            ci_low=est.ci_low,
            ci_high=est.ci_high,
            lrv=est.lrv,
            denom=est.denom,
            bandwidth=est.bandwidth,
            covered=est.covers(cfg.dgp.theta0),
        )
    except DegenerateDenominator as exc:
        rec.update(status="degenerate", error=str(exc))
    except Exception as exc:  # noqa: BLE001 - replication isolation by contract
        rec.update(status="error", error=f"{type(exc).__name__}: {exc}")
    rec["rate_bound"] = rate_bound(int(n), cfg.rule_t, cfg.rule_y).value
    return ReplicationRecord(**rec)


def _worker_count(n_jobs: int) -> int:
    env = os.environ.get("PLR_THREADS", "").strip()
    if env:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ValueError(f"PLR_THREADS must be an integer, got {env!r}") from exc
        cap = max(1, cap)
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def _run_many(cfg: ExperimentConfig, n: int, seeds: list[int]) -> list[ReplicationRecord]:
    workers = _worker_count(len(seeds))
    if workers == 1:
        recs = [run_replication(cfg, n, s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            recs = list(pool.map(run_replication, [cfg] * len(seeds), [n] * len(seeds), seeds))
    return [replace(r, rep=i) for i, r in enumerate(recs)]


@dataclass(frozen=True)
class SummaryRow:
    """Aggregates over the successful replications at one sample size."""

    n: int
    replications: int
    failures: int
    bias: float
    rmse: float
    mean_se: float
    coverage: float
    mean_rate_bound: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")
        if self.replications != self.failures and self.rmse < abs(self.bias) - 1e-12:
            raise ValueError("rmse cannot fall below |bias|")


@dataclass(frozen=True)
class MonteCarloSummary:
    rows: tuple[SummaryRow, ...]
    level: float

    def row_for(self, n: int) -> SummaryRow:
        for row in self.rows:
            if row.n == n:
                return row
        raise KeyError(f"no summary row for n={n}")


def _summarize(
    cfg: ExperimentConfig, records: list[ReplicationRecord]
) -> MonteCarloSummary:
    rows = []
    theta0 = cfg.dgp.theta0
    for n in cfg.n_grid:
        here = [r for r in records if r.n == n]
        good = [r for r in here if r.ok]
        failures = len(here) - len(good)
        if good:
            theta = np.array([r.theta_hat for r in good])
            bias = float(np.mean(theta) - theta0)
            rmse = float(np.sqrt(np.mean((theta - theta0) ** 2)))
            mean_se = float(np.mean([r.se for r in good]))
            coverage = float(np.mean([r.covered for r in good]))
        else:
            bias = rmse = mean_se = coverage = float("nan")
        rows.append(
            SummaryRow(
                n=n,
                replications=len(here),
                failures=failures,
                bias=bias if good else 0.0,
                rmse=rmse if good else 0.0,
                mean_se=mean_se if good else 0.0,
                coverage=coverage if good else 0.0,
                mean_rate_bound=float(np.mean([r.rate_bound for r in here])),
            )
        )
    return MonteCarloSummary(rows=tuple(rows), level=cfg.level)


def _study(cfg: ExperimentConfig) -> tuple[list[ReplicationRecord], MonteCarloSummary]:
    margin = inference_rate_margin(cfg.rule_t, cfg.rule_y)
    if margin <= 0:
        import warnings

        warnings.warn(
            f"configured smoothness/bound-rate leaves no inference margin "
            f"({margin:.4f} <= 0); intervals may undercover",
            stacklevel=3,
        )
    records: list[ReplicationRecord] = []
    counter = 0
    for n in cfg.n_grid:
        seeds = [cfg.base_seed + counter + j for j in range(cfg.replications)]
        counter += cfg.replications
        records.extend(_run_many(cfg, n, seeds))
    return records, _summarize(cfg, records)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log RMSE on log n."""

    slope: float
    slope_se: float
    intercept: float
    n_points: int


def _loglog_fit(summary: MonteCarloSummary) -> RateFit:
    pts = [(row.n, row.rmse) for row in summary.rows if row.rmse > 0]
    if len(pts) < 2:
        raise ValueError("rate fit needs at least 2 grid points with positive RMSE")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    lx_c = lx - lx.mean()
    sxx = float(lx_c @ lx_c)
    slope = float(lx_c @ ly) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    dof = len(pts) - 2
    se = float(np.sqrt((resid @ resid) / dof / sxx)) if dof > 0 else float("nan")
    return RateFit(slope=slope, slope_se=se, intercept=intercept, n_points=len(pts))


def run_rate_study(
    cfg: ExperimentConfig,
) -> tuple[MonteCarloSummary, RateFit, list[ReplicationRecord]]:
    """RMSE across the sample-size grid plus the fitted log-log slope.

    Root-n convergence of the estimator shows up as a slope near -1/2.
    """
    if len(cfg.n_grid) < 2:
        raise ValueError("rate study needs at least 2 sample sizes in n_grid")
    if cfg.replications < 50:
        raise ValueError("rate study needs at least 50 replications per n")
    records, summary = _study(cfg)
    return summary, _loglog_fit(summary), records


def run_coverage_study(
    cfg: ExperimentConfig,
) -> tuple[MonteCarloSummary, list[ReplicationRecord]]:
    """Empirical coverage of the nominal-level interval per sample size."""
    if cfg.replications < 200:
        raise ValueError("coverage study needs at least 200 replications")
    records, summary = _study(cfg)
    return summary, records


# ----------------------------------------------------------------------
# CSV reporting.  Floats are written with repr so reruns are byte-stable;
# lines starting with '#' (the manifest timestamp) are excluded from
# determinism comparisons.
# ----------------------------------------------------------------------

_RECORD_FIELDS = [f.name for f in fields(ReplicationRecord)]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return str(int(value))
    return str(value)


def write_records_csv(records: list[ReplicationRecord], path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RECORD_FIELDS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, name)) for name in _RECORD_FIELDS])


def write_summary_csv(summary: MonteCarloSummary, path) -> None:
    cols = [f.name for f in fields(SummaryRow)] + ["level"]
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in summary.rows:
            writer.writerow(
                [_fmt(getattr(row, name)) for name in cols[:-1]] + [_fmt(summary.level)]
            )


def write_rate_csv(fit: RateFit, path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slope", "slope_se", "intercept", "n_points"])
        writer.writerow([_fmt(fit.slope), _fmt(fit.slope_se), _fmt(fit.intercept), fit.n_points])


def config_digest(cfg) -> str:
    """Stable hash of a (possibly nested) frozen config dataclass."""
    return hashlib.sha256(repr(cfg).encode("ascii")).hexdigest()[:16]


def write_manifest(cfg, path, extra: dict | None = None) -> None:
    """Run provenance: config hash, versions, backend.

    The timestamp lives on a '#' comment line so that byte comparisons of
    reruns can skip it.
    """
    import datetime

    from . import __version__
    from .backend import backend_name

    rows = {
        "config_sha256_16": config_digest(cfg),
        "plrnet_version": __version__,
        "numpy_version": np.__version__,
        "backend": backend_name(),
    }
    if extra:
        rows.update(extra)
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(f"# generated-at {stamp}\n")
        writer = csv.writer(fh)
        writer.writerow(["key", "value"])
        for key, value in rows.items():
            writer.writerow([key, value])
