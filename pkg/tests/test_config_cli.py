import json

import numpy as np
import pytest
from click.testing import CliRunner

from hyperevt.cli import main, recipe_config
from hyperevt.config import build_experiment, parse_config_text
from hyperevt.errors import ConfigError
from hyperevt.experiment import (
    result_to_csv,
    result_to_summary,
    run_experiment,
    run_sweep,
)
from hyperevt.observables import ObservableKind
from hyperevt.systems.billiard import BilliardTable
from hyperevt.systems.coupled import CoupledMapSystem
from hyperevt.systems.toral import ToralAutomorphism

SMALL_INI = """
[system]
kind = toral
matrix = 2 1 1 1

[observable]
kind = neg_log_segment_dist
point = 0.2 0.4
direction = v+
length = 0.5
anchor = center

[run]
n = 2000
realizations = 3
quantile = 0.98
seed = 777

[estimator]
method = suveges
cluster_gap = 2
"""

SMALL_JSON = json.dumps(
    {
        "system": {"kind": "coupled", "m": 2, "gamma": 0.2, "slope": 3, "noise": 0.01},
        "observable": {"kind": "neg_log_perp"},
        "run": {"n": 5000, "realizations": 2, "quantile": 0.95, "seed": 11},
    }
)


class TestConfigParsing:
    def test_ini_round_trip(self):
        cfg = build_experiment(parse_config_text(SMALL_INI), label="small")
        assert isinstance(cfg.system, ToralAutomorphism)
        assert cfg.observable.kind is ObservableKind.NEG_LOG_SEGMENT_DIST
        assert cfg.n == 2000 and cfg.n_realizations == 3
        assert cfg.estimator_params == {"cluster_gap": 2}

    def test_json_round_trip(self):
        cfg = build_experiment(parse_config_text(SMALL_JSON), label="j")
        assert isinstance(cfg.system, CoupledMapSystem)
        assert cfg.system.noise_eps == 0.01
        assert cfg.quantile_level == 0.95

    def test_empty_config_lists_missing_fields(self):
        with pytest.raises(ConfigError) as err:
            build_experiment(parse_config_text(""), label="empty")
        msg = str(err.value)
        for fieldname in (
            "system.kind",
            "observable.kind",
            "run.n",
            "run.realizations",
            "run.quantile",
            "run.seed",
        ):
            assert fieldname in msg

    def test_seed_required(self):
        broken = SMALL_INI.replace("seed = 777\n", "")
        with pytest.raises(ConfigError) as err:
            build_experiment(parse_config_text(broken))
        assert "run.seed" in str(err.value)

    def test_combo_direction(self):
        text = SMALL_INI.replace("direction = v+", "direction = combo 0.5 0.25")
        cfg = build_experiment(parse_config_text(text))
        T = cfg.system
        expected = 0.5 * T.v_plus + 0.25 * T.v_minus
        expected /= np.hypot(*expected)
        assert np.allclose(cfg.observable.segment.direction, expected)

    def test_explicit_direction(self):
        text = SMALL_INI.replace("direction = v+", "direction = 1 0")
        cfg = build_experiment(parse_config_text(text))
        assert np.allclose(cfg.observable.segment.direction, [1.0, 0.0])

    def test_billiard_default_table(self):
        text = """
[system]
kind = billiard

[observable]
kind = one_minus_segment_dist
scatterer = 0
r0_fraction = 0.25

[run]
n = 1000
realizations = 1
quantile = 0.98
seed = 5
"""
        cfg = build_experiment(parse_config_text(text))
        assert isinstance(cfg.system, BilliardTable)
        assert cfg.observable.boundary_line is not None

    def test_blocks_one_based(self):
        text = """
[system]
kind = coupled
m = 5
gamma = 0.1

[observable]
kind = neg_log_block_perp
blocks = 1 2 | 4 5

[run]
n = 1000
realizations = 1
quantile = 0.98
seed = 5
"""
        cfg = build_experiment(parse_config_text(text))
        assert cfg.observable.blocks == ((0, 1), (3, 4))

    def test_bad_quantile(self):
        with pytest.raises(ConfigError):
            build_experiment(
                parse_config_text(SMALL_INI.replace("quantile = 0.98", "quantile = 0.4"))
            )

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            build_experiment(
                parse_config_text(SMALL_INI.replace("kind = toral", "kind = lorenz"))
            )


class TestExperiment:
    def test_rows_in_realization_order(self):
        cfg = build_experiment(parse_config_text(SMALL_INI))
        res = run_experiment(cfg)
        assert [r.realization for r in res.rows] == [0, 1, 2]
        assert res.prediction is not None

    def test_byte_identical_rerun(self):
        cfg = build_experiment(parse_config_text(SMALL_INI))
        a = result_to_csv(run_experiment(cfg))
        b = result_to_csv(run_experiment(cfg))
        assert a == b

    def test_golden_csv(self):
        """Byte-for-byte comparison against the checked-in golden output of
        the small config; regenerate tests/data/golden_small.csv when the
        simulation or serialization intentionally changes."""
        import pathlib

        cfg = build_experiment(parse_config_text(SMALL_INI), label="golden")
        text = result_to_csv(run_experiment(cfg))
        golden = pathlib.Path(__file__).parent / "data" / "golden_small.csv"
        assert text == golden.read_text(encoding="utf-8")
        lines = text.splitlines()
        assert lines[0].startswith("row_type,realization,method")
        assert len(lines) == 1 + 3 + 1
        assert lines[-1].split(",")[0] == "prediction"
        assert float(lines[-1].split(",")[5]) == pytest.approx(0.8541019662496845)

    def test_summary_fields(self):
        cfg = build_experiment(parse_config_text(SMALL_INI))
        s = result_to_summary(run_experiment(cfg))
        assert set(s) >= {
            "label",
            "quantile_level",
            "mean_theta_hat",
            "std_theta_hat",
            "prediction",
        }

    def test_sweep_replaces_gamma(self):
        sections = parse_config_text(SMALL_JSON)
        sections["sweep"] = {"gamma": "0.1 0.2"}
        cfg = build_experiment(sections)
        results = run_sweep(cfg)
        assert [v for v, _ in results] == [0.1, 0.2]
        preds = [r.prediction.value for _, r in results]
        assert preds[0] > preds[1]

    def test_stage_tagging(self):
        sections = parse_config_text(SMALL_INI)
        sections["run"]["n"] = "120"
        sections["run"]["quantile"] = "0.995"
        cfg = build_experiment(sections)
        # 120 points above the 0.995 quantile leave one exceedance: the
        # estimation stage must name itself in the failure
        with pytest.raises(Exception) as err:
            run_experiment(cfg)
        assert "stage: estimation" in str(err.value)


class TestRecipes:
    def test_all_recipes_parse(self):
        from hyperevt.cli import _recipe_names

        names = _recipe_names()
        assert {"cm1a", "cm1b", "ei-a", "bs2a", "bs2b", "bs-a", "bs-b",
                "billiard", "evl-cat"} <= set(names)
        for name in names:
            cfg = recipe_config(name)
            assert cfg.seed is not None

    def test_unknown_recipe(self):
        with pytest.raises(ConfigError):
            recipe_config("not-a-recipe")


class TestCli:
    def test_theta_json(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(SMALL_INI, encoding="utf-8")
        runner = CliRunner()
        result = runner.invoke(main, ["theta", "-c", str(cfg)])
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["theta"] == pytest.approx(0.8541019662496845)

    def test_theta_inconclusive_exit_code(self, tmp_path):
        text = SMALL_INI.replace("point = 0.2 0.4", "point = 0.4714045207 0.2474358296")
        cfg = tmp_path / "c.ini"
        cfg.write_text(text, encoding="utf-8")
        result = CliRunner().invoke(main, ["theta", "-c", str(cfg)])
        assert result.exit_code == 4

    def test_config_error_exit_code(self, tmp_path):
        cfg = tmp_path / "broken.ini"
        cfg.write_text("[system]\nkind = toral\n", encoding="utf-8")
        result = CliRunner().invoke(main, ["theta", "-c", str(cfg)])
        assert result.exit_code == 2

    def test_missing_file_exit_code(self):
        result = CliRunner().invoke(main, ["theta", "-c", "/nonexistent.ini"])
        assert result.exit_code == 2

    def test_simulate_and_ei_round_trip(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(SMALL_INI, encoding="utf-8")
        out = tmp_path / "series.csv"
        runner = CliRunner()
        res = runner.invoke(main, ["simulate", "-c", str(cfg), "-o", str(out)])
        assert res.exit_code == 0, res.output
        assert out.exists()
        res2 = runner.invoke(
            main, ["ei", "--input", str(out), "--method", "suveges",
                   "--quantile", "0.98", "--cluster-gap", "2"]
        )
        assert res2.exit_code == 0, res2.output
        header = res2.output.splitlines()[0]
        assert header == "method,threshold,quantile_level,theta_hat,n_exceedances"

    def test_ei_data_error_exit_code(self, tmp_path):
        short = tmp_path / "short.csv"
        short.write_text("value\n" + "\n".join(["1.0"] * 50), encoding="utf-8")
        res = CliRunner().invoke(main, ["ei", "--input", str(short)])
        assert res.exit_code == 3

    def test_simulate_states_binary(self, tmp_path):
        from hyperevt.systems.trajio import load_trajectory

        cfg = tmp_path / "c.ini"
        cfg.write_text(SMALL_INI, encoding="utf-8")
        out = tmp_path / "traj.bin"
        res = CliRunner().invoke(
            main, ["simulate", "-c", str(cfg), "-o", str(out), "--states"]
        )
        assert res.exit_code == 0, res.output
        arr = load_trajectory(out)
        assert arr.shape == (2000, 2)
        assert np.all((arr >= 0) & (arr < 1))

    def test_gev_command(self, tmp_path):
        rng = np.random.Generator(np.random.Philox(key=61))
        series = tmp_path / "g.csv"
        series.write_text(
            "\n".join(repr(float(v)) for v in rng.gumbel(0, 1, 30_000)), encoding="utf-8"
        )
        res = CliRunner().invoke(
            main, ["gev", "--input", str(series), "--block-len", "100"]
        )
        assert res.exit_code == 0, res.output
        fit = json.loads(res.output)
        assert abs(fit["shape"]) < 0.1

    def test_diagnose_aq(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(SMALL_JSON, encoding="utf-8")
        res = CliRunner().invoke(
            main,
            ["diagnose", "-c", str(cfg), "--probe", "aq", "--q", "1",
             "--samples", "10000", "--n", "500", "--tau", "1.0"],
        )
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        assert 0.0 <= payload["ratio"] <= 1.0

    def test_replicate_list(self):
        res = CliRunner().invoke(main, ["replicate", "--list"])
        assert res.exit_code == 0
        assert "cm1a" in res.output

    def test_replicate_runs_and_writes(self, tmp_path):
        res = CliRunner().invoke(
            main, ["replicate", "cm1a", "-o", str(tmp_path)]
        )
        assert res.exit_code == 0, res.output
        assert (tmp_path / "cm1a" / "results.csv").exists()
        summary = json.loads((tmp_path / "cm1a" / "summary.json").read_text())
        assert abs(summary["mean_theta_hat"] - 0.8541) < 0.05
