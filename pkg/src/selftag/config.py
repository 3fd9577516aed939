"""Experiment configuration: a versioned flat key/value text format.

One "key = value" pair per line, "#" starts a comment, and the file must
carry "version = 1". Unknown keys are rejected rather than ignored so typos
fail loudly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ConfigError
from .selection import FixedSize, SelectionPolicy, Threshold
from .synth import SyntheticShiftSpec

CONFIG_VERSION = 1

DEFAULT_GRID: tuple[SelectionPolicy, ...] = (
    Threshold(0.80),
    Threshold(0.90),
    Threshold(0.95),
    FixedSize(50),
    FixedSize(100),
    FixedSize(200),
)

ABLATION_TAUS = (0.80, 0.90, 0.95)


def parse_policy(text: str) -> SelectionPolicy:
    """Parse "threshold=0.9" or "fixed=100" (":" works in place of "=")."""
    norm = text.strip().replace(":", "=")
    name, _, arg = norm.partition("=")
    try:
        if name.strip() == "threshold":
            return Threshold(float(arg))
        if name.strip() == "fixed":
            return FixedSize(int(arg))
    except ValueError as exc:
        raise ConfigError(f"bad selection policy {text!r}: {exc}") from exc
    raise ConfigError(f"unknown selection policy {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a protocol run needs besides the seed it is running under."""

    task: str = "ner"
    synthetic: Optional[SyntheticShiftSpec] = field(default_factory=SyntheticShiftSpec)
    train_path: Optional[str] = None
    unlabeled_path: Optional[str] = None
    dev_path: Optional[str] = None
    test_path: Optional[str] = None
    dev_source_path: Optional[str] = None
    test_source_path: Optional[str] = None
    unlabeled_source_path: Optional[str] = None
    gold_path: Optional[str] = None
    labels: Optional[tuple[str, ...]] = None
    grid: tuple[SelectionPolicy, ...] = DEFAULT_GRID
    gold_fractions: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    output_dir: str = "runs"
    epochs_per_iteration: int = 5
    max_iterations: int = 50
    patience: int = 10
    learning_rate: float = 0.1
    l2: float = 1e-4
    batch_size: int = 8

    def __post_init__(self) -> None:
        if self.task not in ("ner", "pos"):
            raise ConfigError(f"task must be 'ner' or 'pos', got {self.task!r}")
        if not self.grid:
            raise ConfigError("grid must list at least one selection policy")
        if not self.seeds:
            raise ConfigError("seeds must list at least one seed")
        if list(self.gold_fractions) != sorted(self.gold_fractions):
            raise ConfigError("gold_fractions must be sorted ascending")
        for f in self.gold_fractions:
            if not 0.0 <= f <= 1.0:
                raise ConfigError(f"gold fraction {f} outside [0, 1]")
        if self.synthetic is None and self.train_path is None:
            raise ConfigError("either synthetic generation or data paths are required")
        if self.synthetic is not None and self.synthetic.task != self.task:
            object.__setattr__(self, "synthetic", replace(self.synthetic, task=self.task))


_SYNTH_INT_KEYS = (
    "source_vocab",
    "target_vocab",
    "shared_vocab",
    "train_sentences",
    "unlabeled_sentences",
    "dev_sentences",
    "test_sentences",
    "gold_sentences",
)
_PATH_KEYS = (
    "train_path",
    "unlabeled_path",
    "dev_path",
    "test_path",
    "dev_source_path",
    "test_source_path",
    "unlabeled_source_path",
    "gold_path",
)
_INT_KEYS = ("epochs_per_iteration", "max_iterations", "patience", "batch_size")
_FLOAT_KEYS = ("learning_rate", "l2")


def _parse_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = key.strip(), value.strip()
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def config_from_text(text: str) -> ExperimentConfig:
    pairs = _parse_pairs(text)
    if pairs.pop("version", None) != str(CONFIG_VERSION):
        raise ConfigError(f"config must declare 'version = {CONFIG_VERSION}'")
    kw: dict = {}
    synth_kw: dict = {}
    data_mode = pairs.pop("data", "synthetic" if not any(k in pairs for k in _PATH_KEYS) else "paths")
    if data_mode not in ("synthetic", "paths"):
        raise ConfigError(f"data must be 'synthetic' or 'paths', got {data_mode!r}")
    try:
        for key, value in pairs.items():
            if key == "task":
                kw["task"] = value
            elif key in _SYNTH_INT_KEYS:
                synth_kw[key] = int(value)
            elif key in ("shift_rate", "label_noise"):
                synth_kw[key] = float(value)
            elif key in _PATH_KEYS:
                kw[key] = value
            elif key == "labels":
                kw["labels"] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key == "grid":
                kw["grid"] = tuple(parse_policy(p) for p in value.split(",") if p.strip())
            elif key == "gold_fractions":
                kw["gold_fractions"] = tuple(float(v) for v in value.split(","))
            elif key == "seeds":
                kw["seeds"] = tuple(int(v) for v in value.split(","))
            elif key == "output_dir":
                kw["output_dir"] = value
            elif key in _INT_KEYS:
                kw[key] = int(value)
            elif key in _FLOAT_KEYS:
                kw[key] = float(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    if data_mode == "paths":
        if synth_kw:
            raise ConfigError("generator keys are only valid with data = synthetic")
        kw["synthetic"] = None
    else:
        synth_kw["task"] = kw.get("task", "ner")
        kw["synthetic"] = SyntheticShiftSpec(**synth_kw)
    return ExperimentConfig(**kw)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return config_from_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def resolve_output_dir(cfg: ExperimentConfig) -> str:
    """Config output_dir, resolved under $SELFTAG_OUTPUT_ROOT when relative."""
    root = os.environ.get("SELFTAG_OUTPUT_ROOT", "")
    if root and not os.path.isabs(cfg.output_dir):
        return os.path.join(root, cfg.output_dir)
    return cfg.output_dir
