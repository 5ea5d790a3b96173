import numpy as np
import pytest

import plrnet
from plrnet.sieve import (
    ScalingRule,
    TrainConfig,
    architecture_for,
    fit,
    fit_nuisances,
    inference_rate_margin,
)


class TestScalingRule:
    def test_treatment_kappa_forced_to_zero(self):
        rule = ScalingRule(smoothness=2, input_dim=1, bound_rate=0.3, role="treatment")
        assert rule.bound_rate == 0.0

    def test_kappa_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            ScalingRule(smoothness=2, input_dim=1, bound_rate=0.5, role="outcome")
        with pytest.raises(ValueError):
            ScalingRule(smoothness=2, input_dim=1, bound_rate=-0.1, role="outcome")

    def test_bad_role(self):
        with pytest.raises(ValueError):
            ScalingRule(smoothness=2, input_dim=1, role="both")

    def test_inference_margin_positive_for_smooth_case(self):
        rt = ScalingRule(smoothness=2, input_dim=1, role="treatment")
        ry = ScalingRule(smoothness=2, input_dim=1, role="outcome")
        # min(1/2 * 2/3, 2/3 * 1/2) - 1/4 = 1/3 - 1/4
        assert inference_rate_margin(rt, ry) == pytest.approx(1 / 12)

    def test_inference_margin_reports_violation(self):
        rt = ScalingRule(smoothness=1, input_dim=2, role="treatment")
        ry = ScalingRule(smoothness=1, input_dim=2, role="outcome")
        # both exponents 1/2 * 1/3 = 1/6 < 1/4
        assert inference_rate_margin(rt, ry) < 0


class TestArchitectureFor:
    def test_pinned_treatment_values(self):
        rule = ScalingRule(smoothness=2, input_dim=1, role="treatment")
        arch = architecture_for(1000, rule)
        assert arch.depth == 7
        assert arch.hidden_widths == (151,) * 7
        assert arch.output_bound == 2.0

    def test_outcome_with_zero_kappa_matches_treatment_size(self):
        rule = ScalingRule(smoothness=2, input_dim=1, bound_rate=0.0, role="outcome")
        arch = architecture_for(1000, rule)
        assert arch.depth == 7
        assert arch.hidden_widths[0] == 151
        assert arch.output_bound == 2.0

    def test_outcome_bound_grows(self):
        rule = ScalingRule(
            smoothness=2, input_dim=1, bound_rate=0.2, role="outcome", c_bound=1.0
        )
        arch = architecture_for(10_000, rule)
        assert arch.output_bound == pytest.approx(max(2.0, 10_000**0.2))

    def test_monotone_nondecreasing(self):
        rule = ScalingRule(smoothness=2, input_dim=1, role="treatment")
        small = architecture_for(1000, rule)
        large = architecture_for(2000, rule)
        assert large.depth >= small.depth
        assert large.hidden_widths[0] >= small.hidden_widths[0]
        assert large.output_bound >= small.output_bound

    def test_precondition(self):
        rule = ScalingRule(smoothness=2, input_dim=1, role="treatment")
        with pytest.raises(ValueError):
            architecture_for(1, rule)


class TestFit:
    def test_constant_target_is_exact(self, rng):
        x = rng.uniform(-1, 1, (300, 1))
        y = np.full(300, 0.7)
        arch = plrnet.Architecture(1, (4, 4), 2.0)
        res = fit(x, y, arch, TrainConfig(epochs=30, restarts=2, seed=1))
        assert res.train_mse <= 1e-6

    def test_zero_targets_stay_at_zero(self, rng):
        # warm start represents the zero function exactly; gradients vanish
        x = rng.uniform(-1, 1, (200, 1))
        res = fit(x, np.zeros(200), plrnet.Architecture(1, (3,), 2.0),
                  TrainConfig(epochs=25, restarts=1, seed=2))
        assert res.train_mse == 0.0

    def test_single_restart_loss_gap_zero(self, rng):
        x = rng.uniform(-1, 1, (100, 1))
        y = rng.standard_normal(100)
        res = fit(x, y, plrnet.Architecture(1, (3,), 2.0),
                  TrainConfig(epochs=10, restarts=1, seed=3))
        assert res.loss_gap == 0.0

    def test_never_worse_than_best_constant(self, rng):
        x = rng.uniform(-1, 1, (150, 1))
        y = 3.0 * rng.standard_normal(150)  # little structure, values beyond bound
        arch = plrnet.Architecture(1, (4,), 2.0)
        res = fit(x, y, arch, TrainConfig(epochs=15, restarts=2, seed=4))
        const = float(np.clip(np.mean(y), -2.0, 2.0))
        assert res.train_mse <= np.mean((y - const) ** 2) + 1e-8

    def test_deterministic_given_seed(self, rng):
        x = rng.uniform(-1, 1, (200, 1))
        y = np.sin(2 * x[:, 0]) + 0.1 * rng.standard_normal(200)
        arch = plrnet.Architecture(1, (6,), 2.0)
        cfg = TrainConfig(epochs=40, restarts=2, seed=9)
        r1 = fit(x, y, arch, cfg)
        r2 = fit(x, y, arch, cfg)
        assert np.array_equal(r1.network.params.flat, r2.network.params.flat)
        assert r1.train_mse == r2.train_mse

    def test_rejects_nonfinite_and_empty(self, rng):
        arch = plrnet.Architecture(1, (3,), 2.0)
        cfg = TrainConfig(epochs=5)
        with pytest.raises(ValueError):
            fit(np.array([[1.0]]), np.array([np.nan]), arch, cfg)
        with pytest.raises(ValueError):
            fit(np.empty((0, 1)), np.empty(0), arch, cfg)

    def test_x_dimension_mismatch(self, rng):
        arch = plrnet.Architecture(2, (3,), 2.0)
        with pytest.raises(ValueError):
            fit(rng.uniform(size=(10, 1)), rng.uniform(size=10), arch, TrainConfig(epochs=5))


class TestFitNuisances:
    def test_sin_treatment_recovered_on_grid(self, study_rules, study_train):
        # pinned-seed regression: fitted treatment curve close to the truth
        cfg = plrnet.PlrDgpConfig(
            theta0=2.0, f0t=plrnet.NamedFunction("sin"), n=2000, seed=42
        )
        data, oracle = plrnet.simulate(cfg)
        fit_t, _ = fit_nuisances(data, *study_rules, study_train)
        grid = np.linspace(-0.99, 0.99, 500)[:, None]
        rmse = float(
            np.sqrt(np.mean((fit_t.network.predict(grid) - oracle.f_treat(grid)) ** 2))
        )
        assert rmse <= 0.15

    def test_constant_treatment_fits_exactly(self, study_rules, study_train):
        cfg = plrnet.PlrDgpConfig(
            theta0=1.0,
            f0t=plrnet.NamedFunction("zero"),
            noise_sd_v=0.0,
            n=500,
            seed=5,
        )
        data, _ = plrnet.simulate(cfg)
        fit_t, _ = fit_nuisances(data, *study_rules, study_train)
        assert fit_t.train_mse <= 1e-6

    def test_role_validation(self, study_rules, study_train, default_dgp):
        data, _ = plrnet.simulate(default_dgp)
        rule_t, rule_y = study_rules
        with pytest.raises(ValueError):
            fit_nuisances(data, rule_y, rule_t, study_train)

    @pytest.mark.slow
    def test_in_sample_mse_nonincreasing_within_noise(self, study_rules, study_train):
        # medians over 10 seeds; allowance covers the Monte Carlo noise of
        # the noise-floor-dominated in-sample MSE
        rule_t, _ = study_rules
        medians = []
        for n in (500, 1000, 2000, 4000):
            vals = []
            for s in range(10):
                data, _ = plrnet.simulate(
                    plrnet.PlrDgpConfig(theta0=2.0, n=n, seed=100 + s)
                )
                res = fit(data.x, data.t_var, architecture_for(n, rule_t), study_train)
                vals.append(res.train_mse)
            medians.append(float(np.median(vals)))
        allowance = 0.01
        for prev, nxt in zip(medians, medians[1:]):
            assert nxt <= prev + allowance
