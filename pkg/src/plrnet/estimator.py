"""Residual-on-residual estimation of the linear coefficient.

After the conditional means of treatment and outcome given covariates are
partialled out, the target coefficient solves a single linear moment
equation.  Writing a_t for the squared treatment residual and b_t for the
product of treatment and outcome residuals, the moment at parameter value
``theta`` is a_t * theta - b_t and the estimator is sum(b) / sum(a).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dgp import Dataset

__all__ = [
    "DegenerateDenominator",
    "MomentParts",
    "empirical_moment",
    "estimate_theta",
    "evaluate_regressor",
    "moment_parts",
    "moment_psi",
]


class DegenerateDenominator(ArithmeticError):
    """All squared treatment residuals are (numerically) zero.

    The estimator exists only when at least one treatment residual is
    nonzero; this signals that existence failure.
    """


def evaluate_regressor(f, x: np.ndarray) -> np.ndarray:
    """Evaluate a fitted network or plain vectorized callable on (n, d) rows."""
    if hasattr(f, "predict"):
        out = f.predict(x)
    else:
        out = f(x)
    out = np.asarray(out, dtype=np.float64).reshape(-1)
    if out.shape[0] != x.shape[0]:
        raise ValueError(
            f"regressor returned {out.shape[0]} values for {x.shape[0]} rows"
        )
    return out


@dataclass(frozen=True)
class MomentParts:
    """Per-observation pieces of the linear moment.

    a_vals: squared treatment residuals (>= 0).
    b_vals: products of treatment and outcome residuals.
    """

    a_vals: np.ndarray
    b_vals: np.ndarray

    def __post_init__(self) -> None:
        a = np.ascontiguousarray(self.a_vals, dtype=np.float64)
        b = np.ascontiguousarray(self.b_vals, dtype=np.float64)
        object.__setattr__(self, "a_vals", a)
        object.__setattr__(self, "b_vals", b)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a_vals and b_vals must be equal-length vectors")
        if a.shape[0] == 0:
            raise ValueError("empty moment parts")
        if np.any(a < 0):
            raise ValueError("a_vals must be nonnegative")

    @property
    def n(self) -> int:
        return self.a_vals.shape[0]

    def psi(self, theta: float) -> np.ndarray:
        """Moment values a_t * theta - b_t."""
        return self.a_vals * float(theta) - self.b_vals


def moment_psi(z, theta: float, f_treat, f_out) -> float:
    """Moment function at one observation z = (y, t_val, x).

    Returns (t - f_treat(x))^2 * theta - (t - f_treat(x)) * (y - f_out(x)).
    """
    y, t_val, x = z
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    ft = float(evaluate_regressor(f_treat, x)[0])
    fy = float(evaluate_regressor(f_out, x)[0])
    if not (np.isfinite(ft) and np.isfinite(fy)):
        raise ValueError("nuisance evaluation returned a non-finite value")
    e_t = float(t_val) - ft
    e_y = float(y) - fy
    return e_t * e_t * float(theta) - e_t * e_y


def moment_parts(data: Dataset, f_treat, f_out) -> MomentParts:
    """Elementwise moment pieces over a dataset."""
    ft = evaluate_regressor(f_treat, data.x)
    fy = evaluate_regressor(f_out, data.x)
    if not (np.isfinite(ft).all() and np.isfinite(fy).all()):
        raise ValueError("nuisance evaluation returned non-finite values")
    e_t = data.t_var - ft
    e_y = data.y - fy
    return MomentParts(a_vals=e_t * e_t, b_vals=e_t * e_y)


def default_denom_tol(n: int) -> float:
    """Threshold separating genuine degeneracy from float underflow."""
    return 1e-10 * n


def estimate_theta(parts: MomentParts, denom_tol: float | None = None) -> float:
    """Ratio estimator sum(b) / sum(a).

    Equivalently the no-intercept least-squares slope of outcome residuals
    on treatment residuals.  Raises DegenerateDenominator when the
    denominator does not clear ``denom_tol`` (default 1e-10 * n).
    """
    if denom_tol is None:
        denom_tol = default_denom_tol(parts.n)
    denom = float(np.sum(parts.a_vals))
    if denom <= denom_tol:
        raise DegenerateDenominator(
            f"sum of squared treatment residuals {denom:.3e} <= tol {denom_tol:.3e}"
        )
    return float(np.sum(parts.b_vals)) / denom


def empirical_moment(parts: MomentParts, theta: float) -> float:
    """Sample average of the moment at ``theta``.

    At the estimated coefficient this is zero in exact arithmetic (the
    estimator is the root of the linear sample moment); floating point
    leaves residue on the order of 1e-16 times the scale of b.
    """
    return float(np.mean(parts.psi(theta)))
