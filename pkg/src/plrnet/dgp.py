"""Seeded simulators for the partially linear time-series model.

The generated process is strictly stationary and geometrically mixing:
each covariate coordinate follows a Gaussian AR(1) with unit marginal
variance, squashed through tanh onto (-1, 1); the treatment is a noisy
bounded function of the covariates, clipped to [-1, 1]; the outcome is
linear in the treatment plus a bounded covariate effect plus noise.
Exact conditional-mean oracles are exposed alongside each draw so that
estimators can be compared against the truth.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtr

from .registry import NamedFunction, parse_function

__all__ = [
    "Dataset",
    "DgpOracle",
    "PlrDgpConfig",
    "gaussian_clip_mean",
    "oracle_residuals",
    "read_dataset_csv",
    "simulate",
    "write_dataset_csv",
]

_T_LO, _T_HI = -1.0, 1.0


@dataclass(frozen=True)
class Dataset:
    """Aligned outcome / treatment / covariate series.

    Attributes:
        y: outcome, shape (n,).
        t_var: treatment, shape (n,), values in [-1, 1].
        x: covariates, shape (n, d).
    """

    y: np.ndarray
    t_var: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        t = np.ascontiguousarray(self.t_var, dtype=np.float64)
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t_var", t)
        object.__setattr__(self, "x", x)
        n = y.shape[0]
        if n < 2:
            raise ValueError("need at least 2 observations")
        if t.shape != (n,) or x.shape[0] != n:
            raise ValueError("y, t_var and x must have equal length")
        if not (np.isfinite(y).all() and np.isfinite(t).all() and np.isfinite(x).all()):
            raise ValueError("dataset entries must be finite")
        if t.min() < _T_LO - 1e-12 or t.max() > _T_HI + 1e-12:
            raise ValueError("treatment values must lie in [-1, 1]")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class PlrDgpConfig:
    """Configuration of the simulator.

    ``f0t`` and ``g0`` are names in the bounded-function registry so that
    configs stay serializable.  ``rho_x`` is the AR(1) coefficient of the
    latent covariate process; |rho_x| < 1 keeps it stationary and
    geometrically mixing.  Noise is Gaussian by default; ``noise_dist_u``
    may be set to ``student_t8`` for a heavier-tailed outcome error
    (scaled to the same standard deviation).
    """

    theta0: float
    g0: NamedFunction = field(default_factory=lambda: NamedFunction("sin"))
    f0t: NamedFunction = field(
        default_factory=lambda: NamedFunction("tanh_scaled", scale=0.8)
    )
    rho_x: float = 0.5
    noise_sd_u: float = 0.5
    noise_sd_v: float = 0.5
    n: int = 1000
    d: int = 1
    burn_in: int = 500
    seed: int = 0
    noise_dist_u: str = "gaussian"

    def __post_init__(self) -> None:
        if isinstance(self.g0, str):
            object.__setattr__(self, "g0", parse_function(self.g0))
        if isinstance(self.f0t, str):
            object.__setattr__(self, "f0t", parse_function(self.f0t))
        if not abs(self.rho_x) < 1.0:
            raise ValueError("|rho_x| must be < 1 for stationarity")
        if self.noise_sd_u < 0 or self.noise_sd_v < 0:
            raise ValueError("noise standard deviations must be >= 0")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.noise_dist_u not in ("gaussian", "student_t8"):
            raise ValueError("noise_dist_u must be 'gaussian' or 'student_t8'")


@dataclass(frozen=True)
class DgpOracle:
    """Exact conditional means of the simulated process.

    ``f_treat(x)`` is E[T | X=x] (the clip of the named treatment function
    is integrated out in closed form), ``f_out(x)`` is E[Y | X=x], and
    ``theta0`` the true linear coefficient.
    """

    theta0: float
    f0t: NamedFunction
    g0: NamedFunction
    noise_sd_v: float

    def f_treat(self, x) -> np.ndarray:
        return gaussian_clip_mean(self.f0t(x), self.noise_sd_v, _T_LO, _T_HI)

    def f_out(self, x) -> np.ndarray:
        return self.theta0 * self.f_treat(x) + self.g0(x)


def gaussian_clip_mean(m, sd: float, lo: float, hi: float) -> np.ndarray:
    """E[clip(m + sd*Z, lo, hi)] for Z standard normal, elementwise in m."""
    m = np.asarray(m, dtype=np.float64)
    if sd == 0.0:
        return np.clip(m, lo, hi)
    a = (lo - m) / sd
    b = (hi - m) / sd
    phi_a = np.exp(-0.5 * a * a) / np.sqrt(2.0 * np.pi)
    phi_b = np.exp(-0.5 * b * b) / np.sqrt(2.0 * np.pi)
    return (
        lo * ndtr(a)
        + hi * (1.0 - ndtr(b))
        + m * (ndtr(b) - ndtr(a))
        + sd * (phi_a - phi_b)
    )


def _ar1_unit_marginal(
    rng: np.random.Generator, rho: float, total: int, d: int
) -> np.ndarray:
    """Stationary AR(1) per coordinate with N(0,1) marginals, shape (total, d)."""
    z0 = rng.standard_normal(d)
    innov = rng.standard_normal((total, d)) * np.sqrt(1.0 - rho * rho)
    out = np.empty((total, d))
    for j in range(d):
        zi = np.array([rho * z0[j]])
        out[:, j], _ = lfilter([1.0], [1.0, -rho], innov[:, j], zi=zi)
    return out


def simulate(cfg: PlrDgpConfig) -> tuple[Dataset, DgpOracle]:
    """Draw one series of length cfg.n after discarding cfg.burn_in samples.

    Reproducible: the same config (including seed) gives bitwise-identical
    output.  Returns the dataset together with its conditional-mean oracle.
    """
    rng = np.random.default_rng(cfg.seed)
    total = cfg.burn_in + cfg.n
    z = _ar1_unit_marginal(rng, cfg.rho_x, total, cfg.d)
    x = np.tanh(z)

    v = rng.standard_normal(total) * cfg.noise_sd_v
    if cfg.noise_dist_u == "student_t8":
        # standard_t(8) has variance 8/6; rescale to unit sd before noise_sd_u
        u = rng.standard_t(8, size=total) * (cfg.noise_sd_u / np.sqrt(8.0 / 6.0))
    else:
        u = rng.standard_normal(total) * cfg.noise_sd_u

    t_var = np.clip(cfg.f0t(x) + v, _T_LO, _T_HI)
    y = t_var * cfg.theta0 + cfg.g0(x) + u

    sl = slice(cfg.burn_in, total)
    data = Dataset(y=y[sl], t_var=t_var[sl], x=x[sl])
    oracle = DgpOracle(
        theta0=cfg.theta0, f0t=cfg.f0t, g0=cfg.g0, noise_sd_v=cfg.noise_sd_v
    )
    return data, oracle


def oracle_residuals(
    data: Dataset, f_treat, f_out
) -> tuple[np.ndarray, np.ndarray]:
    """Treatment and outcome residuals against given conditional means."""
    e_t = data.t_var - np.asarray(f_treat(data.x), dtype=np.float64)
    e_y = data.y - np.asarray(f_out(data.x), dtype=np.float64)
    return e_t, e_y


def write_dataset_csv(data: Dataset, path) -> None:
    """CSV with header ``t,y,treat,x1..xd``; full-precision floats."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "y", "treat"] + [f"x{j + 1}" for j in range(data.d)])
        for i in range(data.n):
            writer.writerow(
                [i + 1, repr(float(data.y[i])), repr(float(data.t_var[i]))]
                + [repr(float(v)) for v in data.x[i]]
            )


def read_dataset_csv(path) -> Dataset:
    """Inverse of :func:`write_dataset_csv`."""
    if isinstance(path, io.TextIOBase):
        rows = list(csv.reader(path))
    else:
        with open(path, "r", newline="", encoding="ascii") as fh:
            rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty dataset file")
    header = rows[0]
    if header[:3] != ["t", "y", "treat"]:
        raise ValueError(f"unexpected dataset header {header!r}")
    d = len(header) - 3
    if d < 1:
        raise ValueError("dataset needs at least one covariate column")
    body = rows[1:]
    y = np.array([float(r[1]) for r in body])
    t = np.array([float(r[2]) for r in body])
    x = np.array([[float(v) for v in r[3 : 3 + d]] for r in body])
    return Dataset(y=y, t_var=t, x=x)
