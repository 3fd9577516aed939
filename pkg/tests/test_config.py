import pytest

from selftag.config import (
    ABLATION_TAUS,
    DEFAULT_GRID,
    ExperimentConfig,
    config_from_text,
    load_config,
    parse_policy,
    resolve_output_dir,
)
from selftag.errors import ConfigError
from selftag.selection import FixedSize, Threshold


class TestParsePolicy:
    def test_threshold_form(self):
        assert parse_policy("threshold=0.9") == Threshold(0.9)

    def test_fixed_form(self):
        assert parse_policy("fixed=100") == FixedSize(100)

    def test_colon_separator_accepted(self):
        assert parse_policy("threshold:0.8") == Threshold(0.8)

    def test_surrounding_whitespace_ignored(self):
        assert parse_policy(" fixed = 7 ") == FixedSize(7)

    @pytest.mark.parametrize(
        "text", ["topk=5", "threshold=abc", "threshold=1.5", "fixed=0", "fixed"]
    )
    def test_bad_policies_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_policy(text)


class TestExperimentConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.task == "ner"
        assert cfg.grid == DEFAULT_GRID
        assert cfg.seeds == (0, 1, 2, 3, 4)
        assert cfg.gold_fractions == (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
        assert cfg.synthetic is not None

    def test_task_propagates_into_the_generator_spec(self):
        cfg = ExperimentConfig(task="pos")
        assert cfg.synthetic.task == "pos"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"task": "parsing"},
            {"grid": ()},
            {"seeds": ()},
            {"gold_fractions": (0.4, 0.2)},
            {"gold_fractions": (0.0, 1.5)},
            {"synthetic": None},
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kwargs)

    def test_paths_mode_needs_only_the_training_path_to_construct(self):
        cfg = ExperimentConfig(synthetic=None, train_path="train.conll")
        assert cfg.synthetic is None

    def test_grid_and_ablation_defaults(self):
        assert DEFAULT_GRID == (
            Threshold(0.80),
            Threshold(0.90),
            Threshold(0.95),
            FixedSize(50),
            FixedSize(100),
            FixedSize(200),
        )
        assert ABLATION_TAUS == (0.80, 0.90, 0.95)


class TestConfigFromText:
    def test_minimal_config_gives_defaults(self):
        cfg = config_from_text("version = 1\n")
        assert cfg == ExperimentConfig()

    def test_comments_and_blank_lines_skipped(self):
        cfg = config_from_text("# experiment\n\nversion = 1\n# done\n")
        assert cfg == ExperimentConfig()

    def test_generator_keys(self):
        cfg = config_from_text(
            "version = 1\nshift_rate = 0.25\nsource_vocab = 50\ntrain_sentences = 99\n"
        )
        assert cfg.synthetic.shift_rate == 0.25
        assert cfg.synthetic.source_vocab == 50
        assert cfg.synthetic.train_sentences == 99

    def test_list_values(self):
        cfg = config_from_text(
            "version = 1\n"
            "seeds = 0, 1, 2\n"
            "gold_fractions = 0.0, 0.5, 1.0\n"
            "grid = threshold=0.9, fixed=50\n"
            "labels = O, B-X, I-X\n"
        )
        assert cfg.seeds == (0, 1, 2)
        assert cfg.gold_fractions == (0.0, 0.5, 1.0)
        assert cfg.grid == (Threshold(0.9), FixedSize(50))
        assert cfg.labels == ("O", "B-X", "I-X")

    def test_loop_and_optimizer_keys(self):
        cfg = config_from_text(
            "version = 1\nepochs_per_iteration = 3\nmax_iterations = 9\n"
            "patience = 2\nlearning_rate = 0.05\nl2 = 0.001\nbatch_size = 4\n"
            "output_dir = out\n"
        )
        assert cfg.epochs_per_iteration == 3
        assert cfg.max_iterations == 9
        assert cfg.patience == 2
        assert cfg.learning_rate == 0.05
        assert cfg.l2 == 0.001
        assert cfg.batch_size == 4
        assert cfg.output_dir == "out"

    def test_path_keys_switch_to_paths_mode(self):
        cfg = config_from_text("version = 1\ntrain_path = a.conll\n")
        assert cfg.synthetic is None
        assert cfg.train_path == "a.conll"

    def test_explicit_data_mode(self):
        cfg = config_from_text("version = 1\ndata = synthetic\n")
        assert cfg.synthetic is not None

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "shift_rate = 0.5\n",
            "version = 2\n",
            "version = 1\nversion = 1\n",
            "version = 1\nnot a pair\n",
            "version = 1\nmystery_knob = 3\n",
            "version = 1\ndata = tape\n",
            "version = 1\ndata = paths\ntrain_path = a\nshift_rate = 0.5\n",
            "version = 1\nbatch_size = many\n",
            "version = 1\nseeds = \n",
        ],
    )
    def test_bad_texts_rejected(self, text):
        with pytest.raises(ConfigError):
            config_from_text(text)


class TestLoadConfig:
    def test_reads_a_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("version = 1\nseeds = 3\n")
        assert load_config(str(path)).seeds == (3,)

    def test_missing_file_is_a_config_error(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "nope.cfg"))


class TestResolveOutputDir:
    def test_relative_dir_lands_under_the_env_root(self, monkeypatch):
        monkeypatch.setenv("SELFTAG_OUTPUT_ROOT", "/data/exp")
        cfg = ExperimentConfig(output_dir="runs")
        assert resolve_output_dir(cfg) == "/data/exp/runs"

    def test_absolute_dir_wins_over_the_root(self, monkeypatch):
        monkeypatch.setenv("SELFTAG_OUTPUT_ROOT", "/data/exp")
        cfg = ExperimentConfig(output_dir="/abs/runs")
        assert resolve_output_dir(cfg) == "/abs/runs"

    def test_unset_root_keeps_the_dir(self, monkeypatch):
        monkeypatch.delenv("SELFTAG_OUTPUT_ROOT", raising=False)
        cfg = ExperimentConfig(output_dir="runs")
        assert resolve_output_dir(cfg) == "runs"
