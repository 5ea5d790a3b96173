import numpy as np
import pytest

import plrnet
from plrnet.orthogonality import (
    Direction,
    _PathSample,
    _psi_at,
    gateaux_first_derivative,
    gateaux_second_derivative_closed_form,
    moment_curve,
    population_moment_path,
)

F = plrnet.NamedFunction


def base_cfg(**kwargs):
    defaults = dict(theta0=2.0, n=1000, seed=0)
    defaults.update(kwargs)
    return plrnet.PlrDgpConfig(**defaults)


class TestDirectionValidation:
    def test_accepts_bounded(self):
        Direction(F("sin"), F("tanh_scaled", scale=1.5)).validate(1, 2.0)

    def test_rejects_unbounded_treatment(self):
        with pytest.raises(ValueError):
            Direction(F("const", scale=3.0), F("zero")).validate(1, 2.0)

    def test_rejects_unbounded_outcome(self):
        with pytest.raises(ValueError):
            Direction(F("zero"), F("const", scale=2.5)).validate(1, 2.0)

    def test_bound_tolerance(self):
        # exactly at the limit passes
        Direction(F("const", scale=2.0), F("const", scale=2.0)).validate(1, 2.0)


class TestMomentPath:
    def test_zero_at_true_parameter(self):
        cfg = base_cfg()
        direction = Direction(F("sin", scale=0.5), F("poly3"))
        mc_n = 50_000
        sample_val = population_moment_path(cfg, direction, 2.0, 0.0, mc_n, seed=1)
        (point,) = moment_curve(cfg, direction, 2.0, [0.0], mc_n, seed=1)
        assert sample_val == point.value
        assert abs(sample_val) <= 4.0 * point.mc_se

    def test_constant_path_for_oracle_direction(self):
        # with no treatment noise the true conditional means are registry
        # functions, so the direction can hit them exactly and the path is flat
        cfg = base_cfg(
            theta0=2.0,
            f0t=F("tanh_scaled", scale=0.8),
            g0=F("zero"),
            noise_sd_v=0.0,
        )
        direction = Direction(F("tanh_scaled", scale=0.8), F("tanh_scaled", scale=1.6))
        vals = [
            population_moment_path(cfg, direction, 2.0, lam, 2000, seed=2)
            for lam in (-0.5, 0.0, 0.7, 1.0)
        ]
        assert vals[0] == vals[1] == vals[2] == vals[3]
        deriv = gateaux_first_derivative(cfg, direction, 2.0, 2000, seed=2)
        assert deriv.value == 0.0
        assert deriv.mc_se == 0.0

    def test_matched_deltas_cancel_curvature(self):
        # theta0 = 1 and identical treatment/outcome perturbations: curvature 0
        cfg = base_cfg(theta0=1.0, f0t=F("tanh_scaled", scale=0.8), g0=F("zero"),
                       noise_sd_v=0.0)
        direction = Direction(F("sin"), F("sin"))
        second = gateaux_second_derivative_closed_form(cfg, direction, 1.0, 5000, seed=3)
        assert second == 0.0
        for point in moment_curve(cfg, direction, 1.0, [-1.0, -0.3, 0.5, 1.0], 50_000, seed=3):
            assert abs(point.value) <= 5.0 * point.mc_se

    def test_common_random_numbers_reproducible(self):
        cfg = base_cfg()
        direction = Direction(F("sin"), F("cos", scale=0.5))
        lams = [-0.2, -0.1, 0.1, 0.2]
        c1 = moment_curve(cfg, direction, 2.0, lams, 5000, seed=4)
        c2 = moment_curve(cfg, direction, 2.0, lams, 5000, seed=4)
        assert all(a.value == b.value for a, b in zip(c1, c2))

    def test_mc_n_precondition(self):
        cfg = base_cfg()
        direction = Direction(F("zero"), F("zero"))
        with pytest.raises(ValueError):
            population_moment_path(cfg, direction, 2.0, 0.0, 10, seed=0)


class TestFirstDerivative:
    def test_zero_for_random_directions(self):
        cfg = base_cfg()
        rng = np.random.default_rng(5)
        for _ in range(5):
            direction = Direction(
                F("sin", scale=float(rng.uniform(-1.5, 1.5)), freq=float(rng.uniform(0.5, 2))),
                F("tanh_scaled", scale=float(rng.uniform(-2, 2))),
            )
            est = gateaux_first_derivative(cfg, direction, 2.0, 20_000, seed=int(rng.integers(1e6)))
            assert abs(est.value) <= 5.0 * est.mc_se

    def test_richardson_agrees(self):
        cfg = base_cfg()
        direction = Direction(F("sin"), F("poly3"))
        plain = gateaux_first_derivative(cfg, direction, 2.0, 5000, seed=6)
        rich = gateaux_first_derivative(cfg, direction, 2.0, 5000, seed=6, richardson=True)
        # the path is quadratic, so both quotients estimate the same number
        assert rich.value == pytest.approx(plain.value, rel=1e-9, abs=1e-12)

    def test_three_atom_analytic_oracle(self):
        # discrete covariate, mismatched path base: the exact expectation is a
        # three-term sum over atoms; noise integrates out analytically
        rng = np.random.default_rng(7)
        mc_n = 4_000_000
        theta = 1.5
        x = rng.choice([-1.0, 0.0, 1.0], size=mc_n)
        v = 0.1 * rng.standard_normal(mc_n)
        u = 0.1 * rng.standard_normal(mc_n)

        f_true_t = lambda s: 0.2 + 0.3 * s
        g_true = lambda s: 0.4 * s * s
        t = f_true_t(x) + v
        y = theta * t + g_true(x) + u

        f_base_t = lambda s: 0.1 * s
        f_base_y = lambda s: 0.3 + 0.2 * s
        h_t = lambda s: 0.5 * np.sin(s)
        h_y = lambda s: 0.3 * s**3

        sample = _PathSample(
            y=y, t=t, f0t=f_base_t(x), f0y=f_base_y(x), ht=h_t(x), hy=h_y(x)
        )
        step = 1e-3
        q = (_psi_at(sample, theta, step) - _psi_at(sample, theta, -step)) / (2 * step)
        fd = float(np.mean(q))

        exact = 0.0
        for atom in (-1.0, 0.0, 1.0):
            d_ht = h_t(atom) - f_base_t(atom)
            d_hy = h_y(atom) - f_base_y(atom)
            mean_t = f_true_t(atom) - f_base_t(atom)
            mean_y = (theta * f_true_t(atom) + g_true(atom)) - f_base_y(atom)
            exact += (-2.0 * theta * d_ht * mean_t + d_ht * mean_y + d_hy * mean_t) / 3.0
        assert abs(fd - exact) <= 1e-3


class TestSecondDerivative:
    def test_constant_directions_give_two(self):
        # zero treatment signal: the oracle means are exactly representable,
        # dT = 1 and dY = 0, so the second derivative is exactly 2
        cfg = base_cfg(theta0=1.0, f0t=F("zero"), g0=F("sin"), noise_sd_v=0.0)
        direction = Direction(F("const"), F("sin"))
        second = gateaux_second_derivative_closed_form(cfg, direction, 1.0, 5000, seed=8)
        assert second == 2.0

    def test_curve_matches_quadratic(self):
        cfg = base_cfg(theta0=1.0, f0t=F("zero"), g0=F("sin"), noise_sd_v=0.0)
        direction = Direction(F("const"), F("sin"))
        curve = moment_curve(cfg, direction, 1.0, [-0.4, -0.2, 0.2, 0.4], 100_000, seed=9)
        for point in curve:
            assert point.quadratic_prediction == pytest.approx(point.lam**2, rel=1e-12)
            assert abs(point.value - point.lam**2) <= 5.0 * point.mc_se

    def test_random_direction_quadratic_fit(self):
        cfg = base_cfg()
        direction = Direction(F("sin", scale=0.7, freq=1.3), F("poly3", scale=1.2))
        mc_n = 100_000
        second = gateaux_second_derivative_closed_form(cfg, direction, 2.0, mc_n, seed=10)
        lams = np.array([-0.2, -0.1, -0.05, 0.05, 0.1, 0.2])
        curve = moment_curve(cfg, direction, 2.0, lams, mc_n, seed=10)
        values = np.array([p.value for p in curve])
        quad, lin, _ = np.polyfit(lams, values, 2)
        assert quad == pytest.approx(second / 2.0, rel=0.05)
        deriv = gateaux_first_derivative(cfg, direction, 2.0, mc_n, seed=10)
        assert abs(lin) <= 5.0 * deriv.mc_se

    def test_taylor_identity_over_grid(self):
        cfg = base_cfg()
        rng = np.random.default_rng(11)
        lams = [-0.2, -0.1, -0.05, 0.05, 0.1, 0.2]
        for _ in range(5):
            direction = Direction(
                F("tanh_scaled", scale=float(rng.uniform(-1.5, 1.5))),
                F("sin", scale=float(rng.uniform(-2, 2)), freq=float(rng.uniform(0.5, 2))),
            )
            curve = moment_curve(cfg, direction, 2.0, lams, 50_000, seed=int(rng.integers(1e6)))
            for point in curve:
                assert abs(point.value - point.quadratic_prediction) <= 6.0 * point.mc_se

    def test_sign_with_zero_outcome_direction(self):
        # dY = 0 and theta0 > 0: curvature is nonnegative, so the curve
        # cannot dip materially below zero
        cfg = base_cfg(theta0=1.0, f0t=F("zero"), g0=F("sin"), noise_sd_v=0.0)
        direction = Direction(F("sin", scale=1.2), F("sin"))
        curve = moment_curve(cfg, direction, 1.0, [-0.6, -0.2, 0.2, 0.6], 50_000, seed=12)
        for point in curve:
            assert point.value >= -5.0 * point.mc_se
