"""Sample-size-driven network sizing and nuisance training.

Architectures grow with the sample size: depth like log n, width like a
power of n times log-squared n, and (for the outcome regression only) the
output clamp like n to a small power.  Networks are trained by restarted
mini-batch Adam on the mean-squared error; one restart is warm-started at
the best constant fit so the returned network never loses to a constant
predictor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .dgp import Dataset
from .mlp import Architecture, Network, Parameters, he_init

__all__ = [
    "FitResult",
    "ScalingRule",
    "TrainConfig",
    "architecture_for",
    "fit",
    "fit_nuisances",
    "inference_rate_margin",
]

_ROLES = ("treatment", "outcome")

# Seed offset separating the outcome fit's restart seeds from the
# treatment fit's when both derive from one base seed.
_OUTCOME_SEED_OFFSET = 500_009


@dataclass(frozen=True)
class ScalingRule:
    """How one nuisance network scales with the sample size.

    Attributes:
        smoothness: assumed Holder smoothness of the target function, >= 1.
        input_dim: covariate dimension d.
        bound_rate: growth exponent of the output clamp, in [0, 1/2);
            forced to 0 for the treatment role (its clamp is fixed at 2).
        role: 'treatment' or 'outcome'.
        c_depth, c_width, c_bound: multiplicative constants in front of the
            depth, width and clamp rules.
    """

    smoothness: int
    input_dim: int
    bound_rate: float = 0.0
    role: str = "treatment"
    c_depth: float = 1.0
    c_width: float = 1.0
    c_bound: float = 1.0

    def __post_init__(self) -> None:
        if self.role not in _ROLES:
            raise ValueError(f"role must be one of {_ROLES}")
        if self.smoothness < 1:
            raise ValueError("smoothness must be a positive integer")
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if not (0.0 <= self.bound_rate < 0.5):
            raise ValueError("bound_rate must lie in [0, 1/2)")
        if self.role == "treatment" and self.bound_rate != 0.0:
            # treatment networks use the fixed clamp 2
            object.__setattr__(self, "bound_rate", 0.0)
        if min(self.c_depth, self.c_width, self.c_bound) <= 0:
            raise ValueError("rule constants must be positive")

    @property
    def width_exponent(self) -> float:
        """Power of n in the width rule."""
        p, d = self.smoothness, self.input_dim
        if self.role == "treatment":
            return 0.5 * d / (p + d)
        return (d / (p + d)) * (0.5 - self.bound_rate)

    @property
    def error_exponent(self) -> float:
        """Power of n in this nuisance's convergence-rate bound."""
        p, d = self.smoothness, self.input_dim
        if self.role == "treatment":
            return 0.5 * p / (p + d)
        return (p / (p + d)) * (0.5 - self.bound_rate)


def inference_rate_margin(rule_t: ScalingRule, rule_y: ScalingRule) -> float:
    """Slack of the faster-than-n^(-1/4) requirement on both nuisance rates.

    Positive means the configured smoothness/bound-rate combination is fast
    enough for valid second-stage inference; callers report violations
    rather than refusing to run.
    """
    return min(rule_t.error_exponent, rule_y.error_exponent) - 0.25


def architecture_for(n: int, rule: ScalingRule) -> Architecture:
    """Network size at sample size n: componentwise nondecreasing in n.

    depth  = ceil(c_depth * ln n), uniform width across layers
    width  = ceil(c_width * n^r * (ln n)^2)  with r from the rule's role
    clamp  = 2 for treatment; max(2, c_bound * n^bound_rate) for outcome
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    log_n = math.log(n)
    depth = math.ceil(rule.c_depth * log_n)
    width = math.ceil(rule.c_width * n**rule.width_exponent * log_n * log_n)
    if rule.role == "treatment":
        bound = 2.0
    else:
        bound = max(2.0, rule.c_bound * n**rule.bound_rate)
    return Architecture(
        input_dim=rule.input_dim,
        hidden_widths=(width,) * depth,
        output_bound=bound,
    )


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch Adam settings for one nuisance fit."""

    epochs: int = 200
    batch_size: int = 64
    step_size: float = 1e-3
    restarts: int = 3
    seed: int = 0
    stop_tol: float = 1e-9
    stop_patience: int = 10

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.restarts < 1:
            raise ValueError("epochs, batch_size and restarts must be >= 1")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.stop_tol < 0 or self.stop_patience < 1:
            raise ValueError("invalid early-stop settings")


@dataclass(frozen=True)
class FitResult:
    """A trained network plus training diagnostics.

    ``loss_gap`` is the in-sample MSE gap between the returned network and
    the best restart; the returned network is the best restart, so the gap
    is zero unless selection is ever decoupled from training.
    """

    network: Network
    train_mse: float
    best_restart_mse: float
    loss_gap: float
    epochs_run: int
    seed: int

    def __post_init__(self) -> None:
        if self.loss_gap < 0:
            raise ValueError("loss_gap must be >= 0")
        if self.train_mse < self.best_restart_mse - 1e-12:
            raise ValueError("train_mse below best restart MSE")

    def predict(self, x) -> np.ndarray:
        return self.network.predict(x)


def _constant_fit_params(arch: Architecture, rng: np.random.Generator, c: float):
    """He-initialized hidden layers, zero output weights, output bias c.

    Represents the constant function clip(c, -bound, bound) exactly while
    keeping gradients alive through the random hidden stack.
    """
    params = he_init(arch, rng)
    out_layer = params.n_layers - 1
    params.weight(out_layer)[...] = 0.0
    params.bias(out_layer)[...] = float(np.clip(c, -arch.output_bound, arch.output_bound))
    return params


def _batch_indices(
    rng: np.random.Generator, n: int, cfg: TrainConfig
) -> np.ndarray:
    """Uniform with-replacement mini-batch draws for a whole training run."""
    n_batches = max(1, n // cfg.batch_size)
    return rng.integers(
        0, n, size=(cfg.epochs, n_batches, min(cfg.batch_size, n)), dtype=np.int64
    )


def fit(
    data_x: np.ndarray,
    data_target: np.ndarray,
    arch: Architecture,
    train_cfg: TrainConfig,
) -> FitResult:
    """Train a network on (x, target) by restarted mini-batch Adam.

    Restart r uses seed train_cfg.seed + r; restart 0 is warm-started at
    the best constant fit.  The plain constant predictor itself is kept in
    the candidate pool, so the result never does worse than a constant.
    Candidates are ranked by (in-sample MSE, seed); deterministic given the
    config.
    """
    x = np.ascontiguousarray(data_x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    y = np.ascontiguousarray(data_target, dtype=np.float64).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ValueError("x and target lengths differ")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 observations")
    if x.shape[1] != arch.input_dim:
        raise ValueError(
            f"x has {x.shape[1]} columns but the architecture expects {arch.input_dim}"
        )
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("training data must be finite")

    dims = np.asarray(arch.dims, dtype=np.int64)
    const = float(np.clip(np.mean(y), -arch.output_bound, arch.output_bound))

    # (mse, seed, flat_params, epochs) per candidate; the untrained constant
    # predictor enters as a floor candidate under the base seed.
    candidates: list[tuple[float, int, np.ndarray, int]] = []
    const_rng = np.random.default_rng(train_cfg.seed)
    const_params = _constant_fit_params(arch, const_rng, const)
    const_mse = float(np.mean((y - const) ** 2))
    candidates.append((const_mse, train_cfg.seed, const_params.flat.copy(), 0))

    for r in range(train_cfg.restarts):
        seed = train_cfg.seed + r
        rng = np.random.default_rng(seed)
        if r == 0:
            params0 = _constant_fit_params(arch, rng, const)
        else:
            params0 = he_init(arch, rng)
        batch_idx = _batch_indices(rng, x.shape[0], train_cfg)
        flat, mse, epochs = backend.train_mlp(
            params0.flat,
            dims,
            arch.output_bound,
            x,
            y,
            batch_idx,
            train_cfg.step_size,
            0.9,
            0.999,
            1e-8,
            train_cfg.stop_tol,
            train_cfg.stop_patience,
        )
        candidates.append((float(mse), seed, flat, int(epochs)))

    candidates.sort(key=lambda c: (c[0], c[1]))
    best_mse = candidates[0][0]
    mse, seed, flat, epochs = candidates[0]
    net = Network(arch, Parameters(arch, flat))
    return FitResult(
        network=net,
        train_mse=mse,
        best_restart_mse=best_mse,
        loss_gap=max(0.0, mse - best_mse),
        epochs_run=epochs,
        seed=seed,
    )


def fit_nuisances(
    data: Dataset,
    rule_t: ScalingRule,
    rule_y: ScalingRule,
    cfg: TrainConfig,
) -> tuple[FitResult, FitResult]:
    """Fit the treatment-on-covariates and outcome-on-covariates networks.

    Architectures come from ``architecture_for`` at the dataset's length;
    the outcome fit derives its restart seeds from a fixed offset of the
    configured seed so the two fits stay independent under one base seed.
    """
    if rule_t.role != "treatment" or rule_y.role != "outcome":
        raise ValueError("rule_t must have role 'treatment' and rule_y 'outcome'")
    arch_t = architecture_for(data.n, rule_t)
    arch_y = architecture_for(data.n, rule_y)
    fit_t = fit(data.x, data.t_var, arch_t, cfg)
    cfg_y = TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        step_size=cfg.step_size,
        restarts=cfg.restarts,
        seed=cfg.seed + _OUTCOME_SEED_OFFSET,
        stop_tol=cfg.stop_tol,
        stop_patience=cfg.stop_patience,
    )
    fit_y = fit(data.x, data.y, arch_y, cfg_y)
    return fit_t, fit_y
