"""Numerical checks that the moment is insensitive to nuisance error.

The population moment is evaluated along straight-line paths from the true
conditional means toward perturbed nuisance pairs.  At the true parameter
the first derivative in the path parameter is zero and the second is the
constant 2*theta0*E[dT^2] - 2*E[dT*dY], so the whole curve is an exact
quadratic; both facts are verified by Monte Carlo with common random
numbers across path positions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .dgp import PlrDgpConfig, simulate
from .registry import NamedFunction

__all__ = [
    "CurvePoint",
    "DerivativeEstimate",
    "Direction",
    "gateaux_first_derivative",
    "gateaux_second_derivative_closed_form",
    "moment_curve",
    "population_moment_path",
]

_TREAT_SUP = 2.0


@dataclass(frozen=True)
class Direction:
    """A perturbation target for the nuisance pair.

    ``h_treat`` replaces the treatment conditional mean at path position 1
    and must be bounded by 2 in sup norm on the covariate support;
    ``h_out`` replaces the outcome conditional mean and must be bounded by
    the outcome clamp passed to :meth:`validate`.
    """

    h_treat: NamedFunction
    h_out: NamedFunction

    def validate(self, input_dim: int, bound_out: float, tol: float = 1e-6) -> None:
        """Check the sup-norm constraints on a dense grid of the support."""
        grid = _support_grid(input_dim)
        sup_t = float(np.max(np.abs(self.h_treat(grid))))
        if sup_t > _TREAT_SUP + tol:
            raise ValueError(
                f"treatment direction exceeds sup-norm bound: {sup_t:.6f} > {_TREAT_SUP}"
            )
        sup_y = float(np.max(np.abs(self.h_out(grid))))
        if sup_y > bound_out + tol:
            raise ValueError(
                f"outcome direction exceeds sup-norm bound: {sup_y:.6f} > {bound_out}"
            )


def _support_grid(input_dim: int) -> np.ndarray:
    """Dense covariate grid on the squashed support (-1, 1)^d."""
    if input_dim == 1:
        return np.linspace(-1.0, 1.0, 20001)[:, None]
    per_axis = max(3, int(round(2e5 ** (1.0 / input_dim))))
    axes = [np.linspace(-1.0, 1.0, per_axis)] * input_dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


class _PathSample(NamedTuple):
    """One simulated draw with all function values precomputed."""

    y: np.ndarray
    t: np.ndarray
    f0t: np.ndarray
    f0y: np.ndarray
    ht: np.ndarray
    hy: np.ndarray


def _draw(cfg: PlrDgpConfig, direction: Direction, mc_n: int, seed: int) -> _PathSample:
    data, oracle = simulate(replace(cfg, n=mc_n, seed=seed))
    return _PathSample(
        y=data.y,
        t=data.t_var,
        f0t=oracle.f_treat(data.x),
        f0y=oracle.f_out(data.x),
        ht=direction.h_treat(data.x),
        hy=direction.h_out(data.x),
    )


def _psi_at(sample: _PathSample, theta: float, lam: float) -> np.ndarray:
    """Per-observation moment values at path position ``lam``."""
    ft = sample.f0t + lam * (sample.ht - sample.f0t)
    fy = sample.f0y + lam * (sample.hy - sample.f0y)
    e_t = sample.t - ft
    e_y = sample.y - fy
    return e_t * e_t * theta - e_t * e_y


class DerivativeEstimate(NamedTuple):
    value: float
    mc_se: float


class CurvePoint(NamedTuple):
    lam: float
    value: float
    mc_se: float
    quadratic_prediction: float


def population_moment_path(
    dgp_cfg: PlrDgpConfig,
    direction: Direction,
    theta: float,
    lam: float,
    mc_n: int,
    seed: int,
) -> float:
    """Monte Carlo estimate of the population moment at path position lam.

    The same seed reuses the same simulated draw, so values at different
    ``lam`` share common random numbers and trace a smooth curve.
    """
    if mc_n < 1000:
        raise ValueError("mc_n must be >= 1000")
    sample = _draw(dgp_cfg, direction, mc_n, seed)
    return float(np.mean(_psi_at(sample, theta, lam)))


def moment_curve(
    dgp_cfg: PlrDgpConfig,
    direction: Direction,
    theta: float,
    lambdas,
    mc_n: int,
    seed: int,
) -> list[CurvePoint]:
    """Moment values over a lambda grid with their quadratic prediction.

    The prediction is lam^2 * (theta * mean(dT^2) - mean(dT * dY)) computed
    on the same draw; ``mc_se`` is the plain standard error of the sample
    mean at each grid point.
    """
    if mc_n < 1000:
        raise ValueError("mc_n must be >= 1000")
    sample = _draw(dgp_cfg, direction, mc_n, seed)
    d_t = sample.ht - sample.f0t
    d_y = sample.hy - sample.f0y
    curvature = float(theta * np.mean(d_t * d_t) - np.mean(d_t * d_y))
    out = []
    for lam in lambdas:
        vals = _psi_at(sample, theta, float(lam))
        out.append(
            CurvePoint(
                lam=float(lam),
                value=float(np.mean(vals)),
                mc_se=float(np.std(vals, ddof=1) / np.sqrt(mc_n)),
                quadratic_prediction=float(lam) ** 2 * curvature,
            )
        )
    return out


def gateaux_first_derivative(
    dgp_cfg: PlrDgpConfig,
    direction: Direction,
    theta0: float,
    mc_n: int,
    seed: int,
    step: float = 1e-3,
    richardson: bool = False,
) -> DerivativeEstimate:
    """Central-difference path derivative of the moment at lam = 0.

    Differences are taken per observation before averaging (common random
    numbers), and the moment is quadratic along the path, so the central
    difference carries no truncation error; ``mc_se`` is the standard
    error of the averaged per-observation difference quotients.  At the
    true parameter and conditional means the population value is zero.
    With ``richardson=True`` the quotients at ``step`` and ``step/2`` are
    Richardson-combined (a no-op up to rounding for this quadratic path).
    """
    if mc_n < 1000:
        raise ValueError("mc_n must be >= 1000")
    sample = _draw(dgp_cfg, direction, mc_n, seed)

    def quotients(h: float) -> np.ndarray:
        return (_psi_at(sample, theta0, h) - _psi_at(sample, theta0, -h)) / (2.0 * h)

    q = quotients(step)
    if richardson:
        q = (4.0 * quotients(step / 2.0) - q) / 3.0
    return DerivativeEstimate(
        value=float(np.mean(q)),
        mc_se=float(np.std(q, ddof=1) / np.sqrt(mc_n)),
    )


def gateaux_second_derivative_closed_form(
    dgp_cfg: PlrDgpConfig,
    direction: Direction,
    theta0: float,
    mc_n: int,
    seed: int,
) -> float:
    """Monte Carlo value of the constant second path derivative.

    Equals 2*theta0*E[dT^2] - 2*E[dT*dY] where dT and dY are the
    perturbations of the two conditional means; the moment curve then
    satisfies M(lam) = M(0) + lam^2/2 * (this value) exactly.
    """
    if mc_n < 1000:
        raise ValueError("mc_n must be >= 1000")
    sample = _draw(dgp_cfg, direction, mc_n, seed)
    d_t = sample.ht - sample.f0t
    d_y = sample.hy - sample.f0y
    return float(2.0 * theta0 * np.mean(d_t * d_t) - 2.0 * np.mean(d_t * d_y))
