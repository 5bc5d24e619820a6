"""Harness tests: plan expansion, determinism, summaries, CSV formats, CLI."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kanbench.bench import (
    TABLE2_PAIRS,
    ExperimentPlan,
    build_cells,
    epochs_to_threshold,
    load_plan,
    matched_time_run,
    run_plan,
    slope_study,
    summarize,
    write_plan_outputs,
)
from kanbench.bench.cli import main as cli_main


def tiny_plan(**kw):
    defaults = dict(
        plan="sample_sweep",
        functions=["f1"],
        pairs=[1],
        optimizers=["adam"],
        epochs=[4],
        samples=[40],
        sigma=[0.0],
        seeds=[0],
    )
    defaults.update(kw)
    return ExperimentPlan(**defaults)


class TestPlans:
    def test_pairs_are_parameter_matched(self):
        for pair in TABLE2_PAIRS.values():
            pair.check_matched()  # raises if the gap exceeds 2

    def test_cell_count_arithmetic(self):
        # 1 function x 1 pair x 2 nets x 2 sample counts x 1 sigma x 1 seed
        plan = tiny_plan(samples=[50, 5000])
        assert len(build_cells(plan)) == 4

    def test_noise_sweep_cell_count(self):
        # 2 nets x 2 sample counts x 3 sigmas = 12 records
        plan = tiny_plan(plan="noise_sweep", functions=["f3"], samples=[50, 500], sigma=[0.0, 0.1, 0.5])
        assert len(build_cells(plan)) == 12

    def test_unknown_function_rejected(self):
        with pytest.raises(KeyError):
            tiny_plan(functions=["f99"])

    def test_unknown_pair_rejected(self):
        with pytest.raises(ValueError):
            tiny_plan(pairs=[9])

    def test_bad_optimizer_rejected(self):
        with pytest.raises(ValueError):
            tiny_plan(optimizers=["sgd"])

    def test_toml_round_trip(self, tmp_path):
        path = tmp_path / "plan.toml"
        path.write_text(
            'plan = "noise_sweep"\n'
            'functions = ["f3", "f4"]\n'
            "pairs = [2]\n"
            'optimizer = "lbfgs"\n'
            "epochs = 10\n"
            "samples = [50, 500]\n"
            "sigma = [0.0, 0.1]\n"
            "seeds = [0, 1]\n"
        )
        plan = load_plan(path)
        assert plan.plan == "noise_sweep"
        assert plan.functions == ["f3", "f4"]
        assert plan.optimizers == ["lbfgs"]
        assert plan.samples == [50, 500]
        plan5 = load_plan(path, seeds_override=5)
        assert plan5.seeds == [0, 1, 2, 3, 4]

    def test_toml_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "plan.toml"
        path.write_text('plan = "sample_sweep"\nfunctions = ["f1"]\nbogus = 3\n')
        with pytest.raises(ValueError, match="bogus"):
            load_plan(path)


class TestEpochsToThreshold:
    def test_example_trace(self):
        assert epochs_to_threshold([5, 2, 0.9, 0.5], 1.0) == 3

    def test_never_reached(self):
        assert epochs_to_threshold([5, 2, 1.5], 1.0) is None

    def test_threshold_must_be_positive(self):
        with pytest.raises(ValueError):
            epochs_to_threshold([1.0], 0.0)

    @given(
        trace=st.lists(st.floats(0.01, 100.0), min_size=1, max_size=50),
        threshold=st.floats(0.01, 100.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_monotone_traces_match_binary_search(self, trace, threshold):
        trace = sorted(trace, reverse=True)
        got = epochs_to_threshold(trace, threshold)
        import bisect

        descending = [-v for v in trace]
        idx = bisect.bisect_right(descending, -threshold)
        want = idx + 1 if idx < len(trace) else None
        assert got == want


class TestRunPlan:
    def test_records_and_summary(self):
        result = run_plan(tiny_plan())
        assert len(result.records) == 2
        assert all(not r.failed for r in result.records)
        assert len(result.summary.entries) == 1
        entry = result.summary.entries[0]
        assert entry["winner_final"] in ("kan", "mlp")
        assert entry["rmse_ratio"] > 0

    def test_summary_is_recomputable(self):
        result = run_plan(tiny_plan(seeds=[0, 1]))
        again = summarize(result.records, threshold=result.plan.threshold)
        assert again.entries == result.summary.entries

    def test_rerun_is_byte_identical(self, tmp_path):
        plan = tiny_plan(seeds=[0, 1])
        blobs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            write_plan_outputs(run_plan(plan), out)
            blobs.append((out / "runs.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_parallel_run_matches_serial(self, tmp_path):
        plan = tiny_plan(seeds=[0, 1])
        write_plan_outputs(run_plan(plan, jobs=1), tmp_path / "serial")
        write_plan_outputs(run_plan(plan, jobs=2), tmp_path / "parallel")
        assert (tmp_path / "serial" / "runs.csv").read_bytes() == (
            tmp_path / "parallel" / "runs.csv"
        ).read_bytes()

    def test_csv_rows_carry_fingerprints(self, tmp_path):
        result = run_plan(tiny_plan())
        write_plan_outputs(result, tmp_path)
        lines = (tmp_path / "runs.csv").read_text().strip().split("\n")
        assert lines[0] == "fingerprint,epoch,rmse"
        fps = {r.fingerprint for r in result.records}
        for ln in lines[1:]:
            fp, epoch, rmse = ln.split(",")
            assert fp in fps
            assert int(epoch) >= 1
            float(rmse)
        # every record contributes its full trace; no orphan rows
        assert len(lines) - 1 == sum(len(r.test_rmse) for r in result.records)

    def test_summary_csv_and_config_json(self, tmp_path):
        result = run_plan(tiny_plan())
        write_plan_outputs(result, tmp_path)
        head = (tmp_path / "summary.csv").read_text().split("\n")[0]
        assert head.startswith("fingerprint,plan,function,row,net,widths")
        cfg = json.loads((tmp_path / "config.json").read_text())
        assert cfg["plan"] == "sample_sweep"
        assert cfg["functions"] == ["f1"]

    def test_predictions_emitted_on_request(self, tmp_path):
        result = run_plan(tiny_plan(), with_predictions=True)
        write_plan_outputs(result, tmp_path)
        lines = (tmp_path / "predictions.csv").read_text().strip().split("\n")
        assert lines[0] == "fingerprint,x,y_clean,y_noisy,y_pred"
        assert len(lines) == 1 + 2 * 40  # 2 nets x 40 train points

    def test_timing_direction_kan_slower_than_mlp(self):
        plan = tiny_plan(epochs=[30], samples=[500], optimizers=["lbfgs"])
        result = run_plan(plan)
        entry = result.summary.entries[0]
        assert entry["kan_wall_clock_s"] > entry["mlp_wall_clock_s"]


class TestSlopeStudy:
    def test_zero_slope_reaches_threshold_immediately(self):
        plan = ExperimentPlan(
            plan="slope_study",
            functions=["kx:0"],
            pairs=[1],
            optimizers=["adam"],
            epochs=[50],
            samples=[50],
            seeds=[0],
            threshold=1.0,
        )
        table = slope_study(plan)
        assert len(table) == 2
        for row in table:
            assert not row["censored"]
            assert row["epochs"] <= 5

    def test_censoring_at_budget(self):
        plan = ExperimentPlan(
            plan="slope_study",
            functions=["kx:1000"],
            pairs=[1],
            optimizers=["adam"],
            epochs=[3],  # far too few to reach rmse < 1
            samples=[50],
            seeds=[0],
        )
        table = slope_study(plan)
        for row in table:
            assert row["censored"]
            assert row["epochs"] == 3


class TestSlopeMirrorSymmetry:
    def test_k_and_minus_k_match_under_mirrored_init(self):
        # negating the output layer mirrors the network function, so training
        # on -k*x from the mirrored start retraces the k*x run exactly
        from kanbench.corpus import make_dataset
        from kanbench.models import build_kan, build_mlp
        from kanbench.optim import OptimizerConfig, train
        from kanbench.spline import SplineSpec

        opt = OptimizerConfig(kind="adam", lr=0.01)
        ds_pos = make_dataset("kx:5", 100, seed=3)
        ds_neg = make_dataset("kx:-5", 100, seed=3)
        assert (ds_pos.x_train == ds_neg.x_train).all()

        mlp_pos = build_mlp([1, 7, 1], seed=3)
        mlp_neg = build_mlp([1, 7, 1], seed=3)
        W2, b2 = mlp_neg.layers[-1]
        W2 *= -1.0
        b2 *= -1.0
        rec_pos = train(mlp_pos, ds_pos, opt, epochs=30)
        rec_neg = train(mlp_neg, ds_neg, opt, epochs=30)
        assert rec_pos.test_rmse == rec_neg.test_rmse

        spec = SplineSpec(domain=(0.0, 1.0))
        kan_pos = build_kan([1, 2, 1], spec=spec, seed=3)
        kan_neg = build_kan([1, 2, 1], spec=spec, seed=3)
        for row in kan_neg.layers[-1]:
            for edge in row:
                edge.scales[:] *= -1.0
        rec_pos = train(kan_pos, ds_pos, opt, epochs=30)
        rec_neg = train(kan_neg, ds_neg, opt, epochs=30)
        assert rec_pos.test_rmse == rec_neg.test_rmse


class TestMatchedTime:
    def test_budget_and_records(self):
        kan_rec, mlp_rec = matched_time_run(1, "f1", kan_epochs=5, seed=0, n_train=50)
        assert not kan_rec.failed and not mlp_rec.failed
        assert mlp_rec.epochs_run >= 1
        # MLP epochs are cheaper, so the budget buys at least as many epochs
        assert mlp_rec.epochs_run >= kan_rec.epochs_run


class TestCli:
    def test_list_functions(self, capsys):
        assert cli_main(["list-functions"]) == 0
        out = capsys.readouterr().out
        assert "f7" in out and "singular" in out

    def test_count_params(self, capsys):
        assert cli_main(["count-params", "--widths", "1,5,1"]) == 0
        out = capsys.readouterr().out
        assert "120 counted" in out and "80 trainable" in out
        assert "MLP [1, 5, 1]: 16" in out

    def test_run_subcommand(self, tmp_path, capsys):
        plan = tmp_path / "plan.toml"
        plan.write_text(
            'plan = "sample_sweep"\nfunctions = ["f1"]\npairs = [1]\n'
            'optimizer = "adam"\nepochs = 3\nsamples = 30\nseeds = [0]\n'
        )
        out_dir = tmp_path / "out"
        assert cli_main(["run", str(plan), "--out", str(out_dir)]) == 0
        assert (out_dir / "runs.csv").exists()
        assert (out_dir / "summary.csv").exists()
        assert (out_dir / "config.json").exists()

    def test_verify_passes(self, capsys):
        assert cli_main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") == 7
