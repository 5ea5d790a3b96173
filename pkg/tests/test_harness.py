import os
from dataclasses import replace

import numpy as np
import pytest

import plrnet
from plrnet.harness import (
    ExperimentConfig,
    run_coverage_study,
    run_rate_study,
    run_replication,
    write_manifest,
    write_records_csv,
    write_summary_csv,
)


@pytest.fixture
def small_cfg(study_rules, study_train):
    dgp = plrnet.PlrDgpConfig(theta0=2.0)
    return ExperimentConfig(
        dgp=dgp,
        rule_t=study_rules[0],
        rule_y=study_rules[1],
        train=study_train,
        replications=2,
        n_grid=(300,),
        base_seed=50,
    )


class TestRunReplication:
    def test_noiseless_outcome_recovers_theta(self, small_cfg):
        # no outcome noise: the only estimation error is first-stage wobble
        dgp = replace(small_cfg.dgp, f0t=plrnet.NamedFunction("zero"),
                      g0=plrnet.NamedFunction("zero"), noise_sd_u=0.0)
        cfg = replace(small_cfg, dgp=dgp)
        rec = run_replication(cfg, 2000, 3)
        assert rec.ok
        assert abs(rec.theta_hat - 2.0) <= 1e-3

    def test_oracle_mode_is_exact_when_outcome_noiseless(self, small_cfg):
        dgp = replace(small_cfg.dgp, noise_sd_u=0.0)
        cfg = replace(small_cfg, dgp=dgp, oracle_nuisances=True)
        rec = run_replication(cfg, 500, 4)
        assert rec.ok
        assert rec.theta_hat == pytest.approx(2.0, abs=1e-12)

    def test_deterministic(self, small_cfg):
        a = run_replication(small_cfg, 300, 9)
        b = run_replication(small_cfg, 300, 9)
        assert a == b

    def test_constant_treatment_records_degenerate(self, small_cfg):
        dgp = replace(small_cfg.dgp, f0t=plrnet.NamedFunction("zero"), noise_sd_v=0.0)
        cfg = replace(small_cfg, dgp=dgp)
        rec = run_replication(cfg, 300, 5)
        assert rec.status == "degenerate"
        assert not rec.ok
        assert np.isnan(rec.theta_hat)

    def test_covered_flag(self, small_cfg):
        cfg = replace(small_cfg, oracle_nuisances=True)
        rec = run_replication(cfg, 1000, 6)
        assert rec.covered == (rec.ci_low <= 2.0 <= rec.ci_high)


class TestStudies:
    def test_rate_study_grid_precondition(self, small_cfg):
        cfg = replace(small_cfg, replications=50)
        with pytest.raises(ValueError, match="at least 2 sample sizes"):
            run_rate_study(cfg)

    def test_rate_study_replication_precondition(self, small_cfg):
        cfg = replace(small_cfg, n_grid=(300, 600), replications=10)
        with pytest.raises(ValueError, match="at least 50"):
            run_rate_study(cfg)

    def test_coverage_study_replication_precondition(self, small_cfg):
        with pytest.raises(ValueError, match="at least 200"):
            run_coverage_study(replace(small_cfg, replications=100))

    def test_oracle_rate_study_smoke(self, small_cfg):
        cfg = replace(
            small_cfg,
            oracle_nuisances=True,
            replications=60,
            n_grid=(400, 1600),
            base_seed=1,
        )
        summary, fit, records = run_rate_study(cfg)
        assert len(records) == 120
        assert [r.seed for r in records[:3]] == [1, 2, 3]
        assert records[60].seed == 61  # global counter across the grid
        assert fit.n_points == 2
        assert -0.9 <= fit.slope <= -0.1
        row = summary.row_for(1600)
        assert row.replications == 60
        assert row.failures == 0
        assert row.rmse >= abs(row.bias)

    def test_failures_isolated_and_reconciled(self, small_cfg):
        dgp = replace(small_cfg.dgp, f0t=plrnet.NamedFunction("zero"), noise_sd_v=0.0)
        cfg = replace(
            small_cfg, dgp=dgp, oracle_nuisances=True, replications=210, n_grid=(300,)
        )
        summary, records = run_coverage_study(cfg)
        row = summary.rows[0]
        assert row.failures == row.replications == 210
        assert len(records) == 210
        assert all(r.status == "degenerate" for r in records)

    def test_oracle_coverage_bands(self, small_cfg):
        cfg = replace(
            small_cfg, oracle_nuisances=True, replications=500, n_grid=(5000,),
            base_seed=900,
        )
        summary, _ = run_coverage_study(cfg)
        assert 0.92 <= summary.rows[0].coverage <= 0.975

    def test_coverage_at_half_level(self, small_cfg):
        cfg = replace(
            small_cfg, oracle_nuisances=True, replications=500, n_grid=(1000,),
            level=0.5, base_seed=77,
        )
        summary, _ = run_coverage_study(cfg)
        assert 0.42 <= summary.rows[0].coverage <= 0.58

    def test_rate_margin_warning(self, small_cfg):
        bad_t = plrnet.ScalingRule(smoothness=1, input_dim=2, role="treatment")
        bad_y = plrnet.ScalingRule(smoothness=1, input_dim=2, role="outcome")
        dgp = replace(small_cfg.dgp, d=2)
        cfg = replace(
            small_cfg, dgp=dgp, rule_t=bad_t, rule_y=bad_y,
            oracle_nuisances=True, replications=60, n_grid=(300, 600),
        )
        with pytest.warns(UserWarning, match="margin"):
            run_rate_study(cfg)

    def test_worker_pool_matches_serial(self, small_cfg, monkeypatch):
        cfg = replace(small_cfg, oracle_nuisances=True, replications=210)
        monkeypatch.setenv("PLR_THREADS", "1")
        _, serial = run_coverage_study(cfg)
        monkeypatch.setenv("PLR_THREADS", "2")
        _, pooled = run_coverage_study(cfg)
        assert serial == pooled

    def test_invalid_plr_threads(self, small_cfg, monkeypatch):
        monkeypatch.setenv("PLR_THREADS", "many")
        cfg = replace(small_cfg, oracle_nuisances=True, replications=210)
        with pytest.raises(ValueError, match="PLR_THREADS"):
            run_coverage_study(cfg)


class TestCsvOutputs:
    def test_byte_identical_reruns(self, small_cfg, tmp_path):
        cfg = replace(small_cfg, oracle_nuisances=True, replications=210)
        outputs = []
        for tag in ("a", "b"):
            summary, records = run_coverage_study(cfg)
            rec_path = tmp_path / f"records_{tag}.csv"
            sum_path = tmp_path / f"summary_{tag}.csv"
            man_path = tmp_path / f"manifest_{tag}.csv"
            write_records_csv(records, rec_path)
            write_summary_csv(summary, sum_path)
            write_manifest(cfg, man_path)
            outputs.append((rec_path, sum_path, man_path))

        assert outputs[0][0].read_bytes() == outputs[1][0].read_bytes()
        assert outputs[0][1].read_bytes() == outputs[1][1].read_bytes()
        # manifests match once the timestamp comment is dropped
        strip = lambda p: [
            ln for ln in p.read_text().splitlines() if not ln.startswith("#")
        ]
        assert strip(outputs[0][2]) == strip(outputs[1][2])

    def test_records_csv_columns(self, small_cfg, tmp_path):
        rec = run_replication(replace(small_cfg, oracle_nuisances=True), 300, 1)
        path = tmp_path / "records.csv"
        write_records_csv([rec], path)
        header = path.read_text().splitlines()[0].split(",")
        assert header[:4] == ["n", "rep", "seed", "status"]
        assert "theta_hat" in header and "covered" in header


class TestExperimentConfigValidation:
    def test_grid_must_increase(self, small_cfg):
        with pytest.raises(ValueError):
            replace(small_cfg, n_grid=(500, 500))

    def test_replications_positive(self, small_cfg):
        with pytest.raises(ValueError):
            replace(small_cfg, replications=0)
