import dataclasses
import math

import numpy as np
import pytest

import selftag.harness as harness
from selftag.config import ExperimentConfig
from selftag.corpus import Dataset, DataError, bio_scheme, parse_conll, write_conll
from selftag.errors import ConfigError, ModelError
from selftag.harness import (
    AblationRow,
    FewShotRow,
    GridRow,
    UnequalPoolSizes,
    ZeroShotRow,
    baseline_model,
    filter_split,
    load_seed_data,
    report_to_tsv,
    run_ablation,
    run_few_shot,
    run_self_train_grid,
    run_zero_shot,
    self_train_config,
    write_report,
)
from selftag.selection import FixedSize, Threshold
from selftag.selftrain import iteration_seed
from selftag.synth import SyntheticShiftSpec
from selftag.tagger import TrainConfig, train


@pytest.fixture(scope="module")
def zero_rows(tiny_cfg):
    return run_zero_shot(tiny_cfg)


@pytest.fixture(scope="module")
def grid_rows(tiny_cfg):
    return run_self_train_grid(tiny_cfg)


@pytest.fixture(scope="module")
def few_rows(tiny_cfg):
    return run_few_shot(tiny_cfg, FixedSize(10))


@pytest.fixture(scope="module")
def ablation_rows(tiny_cfg):
    return run_ablation(tiny_cfg)


def _patch_loader(monkeypatch, transform):
    real = load_seed_data
    monkeypatch.setattr(
        harness, "load_seed_data", lambda cfg, seed: transform(real(cfg, seed))
    )


class TestReportToTsv:
    def test_header_comes_from_the_row_fields(self):
        text = report_to_tsv([ZeroShotRow(0, "dev_target", "macro_f1", 0.5)])
        lines = text.splitlines()
        assert lines[0] == "seed\tsplit\tmetric\tvalue"
        assert lines[1] == "0\tdev_target\tmacro_f1\t0.5"

    def test_floats_keep_full_precision(self):
        value = 1 / 3
        text = report_to_tsv([ZeroShotRow(0, "x", "m", value)])
        assert repr(value) in text

    def test_empty_report_rejected(self):
        with pytest.raises(ModelError):
            report_to_tsv([])

    def test_mixed_row_types_rejected(self):
        rows = [
            ZeroShotRow(0, "x", "m", 0.5),
            AblationRow(0, "source", "avg", 0.5),
        ]
        with pytest.raises(ModelError):
            report_to_tsv(rows)

    def test_missing_cell_rejected(self):
        with pytest.raises(ModelError):
            report_to_tsv([ZeroShotRow(0, "x", "m", None)])

    def test_non_finite_cell_rejected(self):
        with pytest.raises(ModelError):
            report_to_tsv([ZeroShotRow(0, "x", "m", math.nan)])

    def test_write_report_creates_parent_dirs(self, tmp_path):
        path = tmp_path / "deep" / "report.tsv"
        write_report([ZeroShotRow(0, "x", "m", 0.5)], str(path))
        assert path.read_text().startswith("seed\tsplit\tmetric\tvalue\n")


class TestZeroShot:
    def test_six_rows_per_seed(self, tiny_cfg, zero_rows):
        assert len(zero_rows) == 6 * len(tiny_cfg.seeds)
        expected = ["dev_source", "test_source", "dev_target", "test_target", "dev_gap", "test_gap"]
        for seed in tiny_cfg.seeds:
            assert [r.split for r in zero_rows if r.seed == seed] == expected

    def test_metric_name_matches_the_task(self, zero_rows):
        assert all(r.metric == "macro_f1" for r in zero_rows)

    def test_gap_rows_are_source_minus_target(self, tiny_cfg, zero_rows):
        for seed in tiny_cfg.seeds:
            vals = {r.split: r.value for r in zero_rows if r.seed == seed}
            assert vals["dev_gap"] == vals["dev_source"] - vals["dev_target"]
            assert vals["test_gap"] == vals["test_source"] - vals["test_target"]

    def test_rerun_is_byte_identical(self, tiny_cfg, zero_rows):
        assert report_to_tsv(run_zero_shot(tiny_cfg)) == report_to_tsv(zero_rows)

    def test_no_lexical_shift_means_no_gap(self):
        cfg = ExperimentConfig(synthetic=SyntheticShiftSpec(shift_rate=0.0), seeds=(0,))
        gaps = {r.split: r.value for r in run_zero_shot(cfg) if r.split.endswith("gap")}
        assert abs(gaps["dev_gap"]) < 0.02
        assert abs(gaps["test_gap"]) < 0.02

    def test_missing_source_splits_rejected(self, tiny_cfg, monkeypatch):
        _patch_loader(
            monkeypatch,
            lambda d: dataclasses.replace(d, dev_source=None, test_source=None),
        )
        with pytest.raises(ConfigError):
            run_zero_shot(tiny_cfg)


class TestSelfTrainGrid:
    def test_one_row_per_policy_and_seed(self, tiny_cfg, grid_rows):
        assert len(grid_rows) == len(tiny_cfg.grid) * len(tiny_cfg.seeds)
        for seed in tiny_cfg.seeds:
            policies = [r.policy for r in grid_rows if r.seed == seed]
            assert policies == [p.describe() for p in tiny_cfg.grid]

    def test_rows_carry_both_domains(self, grid_rows):
        for row in grid_rows:
            for value in (row.source_dev, row.target_dev, row.source_test, row.target_test):
                assert 0.0 <= value <= 1.0

    def test_rerun_is_byte_identical(self, tiny_cfg, grid_rows):
        assert report_to_tsv(run_self_train_grid(tiny_cfg)) == report_to_tsv(grid_rows)

    def test_empty_pool_rows_equal_zero_shot(self, tiny_cfg, zero_rows, monkeypatch):
        _patch_loader(
            monkeypatch,
            lambda d: dataclasses.replace(d, U=Dataset(d.U.scheme, (), "U")),
        )
        rows = run_self_train_grid(tiny_cfg)
        for row in rows:
            base = {r.split: r.value for r in zero_rows if r.seed == row.seed}
            assert row.source_dev == base["dev_source"]
            assert row.target_dev == base["dev_target"]
            assert row.source_test == base["test_source"]
            assert row.target_test == base["test_target"]


class TestFewShot:
    def test_one_row_per_fraction_and_seed(self, tiny_cfg, few_rows):
        assert len(few_rows) == len(tiny_cfg.gold_fractions) * len(tiny_cfg.seeds)
        for seed in tiny_cfg.seeds:
            fractions = [r.fraction for r in few_rows if r.seed == seed]
            assert fractions == list(tiny_cfg.gold_fractions)

    def test_zero_fraction_fine_tune_equals_zero_shot(self, few_rows, zero_rows):
        for row in few_rows:
            if row.fraction == 0.0:
                base = {r.split: r.value for r in zero_rows if r.seed == row.seed}
                assert row.finetune_dev == base["dev_target"]
                assert row.finetune_test == base["test_target"]

    def test_rerun_is_byte_identical(self, tiny_cfg, few_rows):
        assert report_to_tsv(run_few_shot(tiny_cfg, FixedSize(10))) == report_to_tsv(few_rows)

    def test_missing_gold_split_rejected(self, tiny_cfg, monkeypatch):
        _patch_loader(monkeypatch, lambda d: dataclasses.replace(d, gold_target=None))
        with pytest.raises(ConfigError):
            run_few_shot(tiny_cfg, FixedSize(10))


class TestAblation:
    def test_eight_rows_per_seed(self, tiny_cfg, ablation_rows):
        assert len(ablation_rows) == 8 * len(tiny_cfg.seeds)
        for seed in tiny_cfg.seeds:
            rows = [r for r in ablation_rows if r.seed == seed]
            assert [r.pool for r in rows] == ["source"] * 4 + ["target"] * 4
            expected = ["threshold=0.8", "threshold=0.9", "threshold=0.95", "avg"]
            assert [r.policy for r in rows[:4]] == expected
            assert [r.policy for r in rows[4:]] == expected

    def test_average_rows_recompute_from_threshold_rows(self, ablation_rows):
        by_group = {}
        for row in ablation_rows:
            by_group.setdefault((row.seed, row.pool), []).append(row)
        for rows in by_group.values():
            *taus, avg = rows
            assert avg.policy == "avg"
            assert avg.target_dev == float(np.mean([r.target_dev for r in taus]))

    def test_identical_pools_give_identical_averages(self, tiny_cfg, monkeypatch):
        _patch_loader(monkeypatch, lambda d: dataclasses.replace(d, U_source=d.U))
        rows = run_ablation(tiny_cfg)
        for seed in tiny_cfg.seeds:
            avgs = {
                r.pool: r.target_dev
                for r in rows
                if r.seed == seed and r.policy == "avg"
            }
            assert avgs["source"] == avgs["target"]

    def test_missing_source_pool_rejected(self, tiny_cfg, monkeypatch):
        _patch_loader(monkeypatch, lambda d: dataclasses.replace(d, U_source=None))
        with pytest.raises(ConfigError):
            run_ablation(tiny_cfg)

    def test_unequal_pool_sizes_rejected(self, tiny_cfg, monkeypatch):
        _patch_loader(
            monkeypatch,
            lambda d: dataclasses.replace(
                d, U_source=Dataset(d.U.scheme, d.U_source.sentences[:-1], "U")
            ),
        )
        with pytest.raises(UnequalPoolSizes):
            run_ablation(tiny_cfg)


class TestBaselineModel:
    def test_matches_plain_training_under_the_derived_seed(self, tiny_cfg, tiny_bench):
        model = baseline_model(tiny_bench.L, tiny_cfg, seed=1)
        plain, _ = train(
            tiny_bench.L,
            TrainConfig(
                epochs=tiny_cfg.epochs_per_iteration,
                learning_rate=tiny_cfg.learning_rate,
                l2=tiny_cfg.l2,
                batch_size=tiny_cfg.batch_size,
                patience=0,
                seed=iteration_seed(1, 0),
            ),
        )
        assert np.array_equal(model.W, plain.W)
        assert np.array_equal(model.trans, plain.trans)

    def test_deterministic(self, tiny_cfg, tiny_bench):
        a = baseline_model(tiny_bench.L, tiny_cfg, seed=0)
        b = baseline_model(tiny_bench.L, tiny_cfg, seed=0)
        assert np.array_equal(a.W, b.W)


class TestSelfTrainConfigMapping:
    def test_fields_copy_over(self, tiny_cfg):
        policy = Threshold(0.9)
        st = self_train_config(tiny_cfg, policy, seed=3)
        assert st.policy == policy
        assert st.seed == 3
        assert st.epochs_per_iteration == tiny_cfg.epochs_per_iteration
        assert st.max_iterations == tiny_cfg.max_iterations
        assert st.patience == tiny_cfg.patience
        assert st.learning_rate == tiny_cfg.learning_rate
        assert st.l2 == tiny_cfg.l2
        assert st.batch_size == tiny_cfg.batch_size


class TestLoadSeedData:
    def test_synthetic_mode_reseeds_the_generator(self, tiny_cfg, tiny_spec):
        import dataclasses as dc

        from selftag.synth import generate_benchmark

        data = load_seed_data(tiny_cfg, seed=3)
        expected = generate_benchmark(dc.replace(tiny_spec, seed=3))
        assert write_conll(data.L) == write_conll(expected.L)
        assert write_conll(data.dev_target) == write_conll(expected.dev_target)

    def _write_splits(self, tmp_path, bench):
        paths = {}
        for name, ds in (
            ("train", bench.L),
            ("unlabeled", bench.U),
            ("dev", bench.dev_target),
            ("test", bench.test_target),
        ):
            p = tmp_path / f"{name}.conll"
            p.write_text(write_conll(ds))
            paths[name] = str(p)
        return paths

    def test_paths_mode_round_trips_the_splits(self, tmp_path, tiny_bench):
        paths = self._write_splits(tmp_path, tiny_bench)
        cfg = ExperimentConfig(
            synthetic=None,
            train_path=paths["train"],
            unlabeled_path=paths["unlabeled"],
            dev_path=paths["dev"],
            test_path=paths["test"],
            labels=tiny_bench.L.scheme.labels,
            seeds=(0,),
        )
        data = load_seed_data(cfg, seed=0)
        assert data.L.sentences == tiny_bench.L.sentences
        assert data.U.sentences == tiny_bench.U.sentences
        assert data.dev_target.sentences == tiny_bench.dev_target.sentences
        assert data.L.scheme == tiny_bench.L.scheme
        assert data.gold_target is None
        assert data.dev_source is None

    def test_scheme_inferred_from_training_file(self, tmp_path, tiny_bench):
        paths = self._write_splits(tmp_path, tiny_bench)
        cfg = ExperimentConfig(
            synthetic=None,
            train_path=paths["train"],
            unlabeled_path=paths["unlabeled"],
            dev_path=paths["dev"],
            test_path=paths["test"],
            seeds=(0,),
        )
        data = load_seed_data(cfg, seed=0)
        assert data.L.scheme.kind == tiny_bench.L.scheme.kind
        assert set(data.L.scheme.labels) == set(tiny_bench.L.scheme.labels)
        assert data.L.scheme.labels[0] == "O"

    def test_missing_required_path_rejected(self, tmp_path, tiny_bench):
        paths = self._write_splits(tmp_path, tiny_bench)
        cfg = ExperimentConfig(synthetic=None, train_path=paths["train"], seeds=(0,))
        with pytest.raises(ConfigError):
            load_seed_data(cfg, seed=0)


class TestFilterSplit:
    def test_keeps_scores_strictly_above_threshold(self, tiny_bench):
        ds = tiny_bench.dev_target
        probs = [1.0 if i % 2 == 0 else 0.5 for i in range(len(ds))]
        dev, test = filter_split(ds, probs, 0.5, seed=0)
        survivors = [s for i, s in enumerate(ds.sentences) if i % 2 == 0]
        assert len(dev) + len(test) == len(survivors)
        assert sorted(
            dev.sentences + test.sentences, key=lambda s: survivors.index(s)
        ) == survivors

    def test_split_sizes_follow_the_thirty_seventy_rule(self, tiny_bench):
        ds = tiny_bench.dev_target
        dev, test = filter_split(ds, [1.0] * len(ds), 0.5, seed=0)
        assert len(dev) == int(np.floor(0.3 * len(ds)))
        assert len(test) == len(ds) - len(dev)
        assert dev.role == "dev"
        assert test.role == "test"

    def test_deterministic_per_seed(self, tiny_bench):
        ds = tiny_bench.dev_target
        probs = [1.0] * len(ds)
        a = filter_split(ds, probs, 0.5, seed=4)
        b = filter_split(ds, probs, 0.5, seed=4)
        assert write_conll(a[0]) == write_conll(b[0])
        assert write_conll(a[1]) == write_conll(b[1])

    def test_score_count_mismatch_rejected(self, tiny_bench):
        with pytest.raises(DataError):
            filter_split(tiny_bench.dev_target, [1.0], 0.5, seed=0)

    def test_too_few_survivors_rejected(self, tiny_bench):
        ds = tiny_bench.dev_target
        probs = [0.0] * len(ds)
        probs[0] = 1.0
        with pytest.raises(DataError):
            filter_split(ds, probs, 0.5, seed=0)
