"""Experiment protocols: zero-shot transfer, selection grids, few-shot curves,
and the source-vs-target unlabeled-pool ablation.

Every protocol is a pure function of (config, seeds): reruns produce
byte-identical reports. Reports are lists of typed rows rendered to TSV with
full-precision floats.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .config import ABLATION_TAUS, ExperimentConfig, resolve_output_dir
from .corpus import (
    BIO_ENTITY,
    Dataset,
    FLAT_POS,
    TagScheme,
    mix_gold_fraction,
    parse_conll,
    split_dataset,
)
from .errors import ConfigError, DataError, ModelError
from .selection import FixedSize, SelectionPolicy, Threshold
from .selftrain import SelfTrainConfig, iteration_seed, self_train
from .synth import ShiftBenchmark, generate_benchmark
from .tagger import TaggerModel, TrainConfig, dev_metric, train


class UnequalPoolSizes(DataError):
    pass


@dataclass(frozen=True)
class ZeroShotRow:
    seed: int
    split: str
    metric: str
    value: float


@dataclass(frozen=True)
class GridRow:
    seed: int
    policy: str
    source_dev: float
    target_dev: float
    source_test: float
    target_test: float


@dataclass(frozen=True)
class FewShotRow:
    seed: int
    fraction: float
    finetune_dev: float
    selftrain_dev: float
    finetune_test: float
    selftrain_test: float


@dataclass(frozen=True)
class AblationRow:
    seed: int
    pool: str  # "source" | "target"
    policy: str  # "threshold=..." | "avg"
    target_dev: float


def report_to_tsv(rows: Sequence) -> str:
    """Render typed rows to TSV, refusing missing or non-finite cells."""
    if not rows:
        raise ModelError("empty report")
    row_type = type(rows[0])
    cols = [f.name for f in dataclasses.fields(row_type)]
    lines = ["\t".join(cols)]
    for row in rows:
        if type(row) is not row_type:
            raise ModelError("mixed row types in one report")
        cells = []
        for c in cols:
            v = getattr(row, c)
            if v is None:
                raise ModelError(f"missing cell {c}")
            if isinstance(v, float):
                if not math.isfinite(v):
                    raise ModelError(f"non-finite cell {c}")
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def write_report(rows: Sequence, path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report_to_tsv(rows))


def _infer_scheme(task: str, labels: Optional[Sequence[str]], train_path: str) -> TagScheme:
    kind = BIO_ENTITY if task == "ner" else FLAT_POS
    if labels is not None:
        return TagScheme(kind, tuple(labels))
    seen: set[str] = set()
    with open(train_path, encoding="utf-8") as fh:
        for line in fh:
            cols = line.rstrip("\n").split("\t")
            if len(cols) == 2:
                seen.add(cols[1])
    if kind == BIO_ENTITY:
        types = sorted({lab[2:] for lab in seen if lab != "O"})
        out = ["O"]
        for t in types:
            out += [f"B-{t}", f"I-{t}"]
        return TagScheme(kind, tuple(out))
    return TagScheme(kind, tuple(sorted(seen)))


def load_seed_data(cfg: ExperimentConfig, seed: int) -> ShiftBenchmark:
    """The benchmark this seed runs on; file-backed splits may leave the
    source-side fields None."""
    if cfg.synthetic is not None:
        return generate_benchmark(replace(cfg.synthetic, seed=seed))
    scheme = _infer_scheme(cfg.task, cfg.labels, cfg.train_path)

    def read(path: Optional[str], role: str) -> Optional[Dataset]:
        if path is None:
            return None
        with open(path, encoding="utf-8") as fh:
            return parse_conll(fh.read(), scheme, role=role)

    for name in ("train_path", "unlabeled_path", "dev_path", "test_path"):
        if getattr(cfg, name) is None:
            raise ConfigError(f"data = paths requires {name}")
    return ShiftBenchmark(
        L=read(cfg.train_path, "L"),
        U=read(cfg.unlabeled_path, "U"),
        dev_target=read(cfg.dev_path, "dev"),
        test_target=read(cfg.test_path, "test"),
        gold_target=read(cfg.gold_path, "L"),
        dev_source=read(cfg.dev_source_path, "dev"),
        test_source=read(cfg.test_source_path, "test"),
        U_source=read(cfg.unlabeled_source_path, "U"),
    )


def self_train_config(cfg: ExperimentConfig, policy: SelectionPolicy, seed: int) -> SelfTrainConfig:
    return SelfTrainConfig(
        policy=policy,
        epochs_per_iteration=cfg.epochs_per_iteration,
        max_iterations=cfg.max_iterations,
        patience=cfg.patience,
        seed=seed,
        learning_rate=cfg.learning_rate,
        l2=cfg.l2,
        batch_size=cfg.batch_size,
    )


def baseline_model(L: Dataset, cfg: ExperimentConfig, seed: int) -> TaggerModel:
    """Plain supervised training, identical to a self-train run whose pool is
    empty: one phase of epochs_per_iteration epochs under the same seed."""
    train_cfg = TrainConfig(
        epochs=cfg.epochs_per_iteration,
        learning_rate=cfg.learning_rate,
        l2=cfg.l2,
        batch_size=cfg.batch_size,
        patience=0,
        seed=iteration_seed(seed, 0),
    )
    model, _ = train(L, train_cfg)
    return model


def evaluate(model: TaggerModel, ds: Dataset) -> float:
    """Task metric on one labeled split (macro span F1 or token accuracy)."""
    return dev_metric(model, ds)


def _metric_name(cfg: ExperimentConfig) -> str:
    return "macro_f1" if cfg.task == "ner" else "token_accuracy"


def _require_source_splits(data: ShiftBenchmark) -> None:
    if data.dev_source is None or data.test_source is None:
        raise ConfigError("this protocol needs dev_source and test_source splits")


def run_zero_shot(cfg: ExperimentConfig) -> list[ZeroShotRow]:
    """Train on L alone, evaluate both domains, report values and gaps."""
    rows: list[ZeroShotRow] = []
    metric = _metric_name(cfg)
    for seed in cfg.seeds:
        data = load_seed_data(cfg, seed)
        _require_source_splits(data)
        model = baseline_model(data.L, cfg, seed)
        vals = {
            "dev_source": evaluate(model, data.dev_source),
            "test_source": evaluate(model, data.test_source),
            "dev_target": evaluate(model, data.dev_target),
            "test_target": evaluate(model, data.test_target),
        }
        for split, value in vals.items():
            rows.append(ZeroShotRow(seed, split, metric, value))
        rows.append(ZeroShotRow(seed, "dev_gap", metric, vals["dev_source"] - vals["dev_target"]))
        rows.append(ZeroShotRow(seed, "test_gap", metric, vals["test_source"] - vals["test_target"]))
    return rows


def run_self_train_grid(cfg: ExperimentConfig) -> list[GridRow]:
    """One self-training run per (policy, seed); each row holds both domains."""
    rows: list[GridRow] = []
    for seed in cfg.seeds:
        data = load_seed_data(cfg, seed)
        _require_source_splits(data)
        for policy in cfg.grid:
            model, _ = self_train(
                data.L, data.U, data.dev_target, self_train_config(cfg, policy, seed)
            )
            rows.append(
                GridRow(
                    seed,
                    policy.describe(),
                    source_dev=evaluate(model, data.dev_source),
                    target_dev=evaluate(model, data.dev_target),
                    source_test=evaluate(model, data.test_source),
                    target_test=evaluate(model, data.test_target),
                )
            )
    return rows


def run_few_shot(
    cfg: ExperimentConfig, policy: SelectionPolicy = FixedSize(100)
) -> list[FewShotRow]:
    """Gold-fraction curves: plain fine-tuning vs self-training on each mix.

    At fraction 0 the fine-tune numbers equal the zero-shot baseline by
    construction (same data, same seed derivation).
    """
    rows: list[FewShotRow] = []
    for seed in cfg.seeds:
        data = load_seed_data(cfg, seed)
        if data.gold_target is None:
            raise ConfigError("few-shot needs a gold target split")
        for fraction in cfg.gold_fractions:
            mixed = mix_gold_fraction(data.L, data.gold_target, fraction, seed)
            ft = baseline_model(mixed, cfg, seed)
            st, _ = self_train(
                mixed, data.U, data.dev_target, self_train_config(cfg, policy, seed)
            )
            rows.append(
                FewShotRow(
                    seed,
                    fraction,
                    finetune_dev=evaluate(ft, data.dev_target),
                    selftrain_dev=evaluate(st, data.dev_target),
                    finetune_test=evaluate(ft, data.test_target),
                    selftrain_test=evaluate(st, data.test_target),
                )
            )
    return rows


def run_ablation(cfg: ExperimentConfig) -> list[AblationRow]:
    """Self-training with a source-domain pool vs the target-domain pool.

    Both pools must hold the same number of sentences so the comparison
    varies domain only. Three threshold rows plus their average, per pool.
    """
    rows: list[AblationRow] = []
    for seed in cfg.seeds:
        data = load_seed_data(cfg, seed)
        if data.U_source is None:
            raise ConfigError("ablation needs a source-domain unlabeled pool")
        if len(data.U_source) != len(data.U):
            raise UnequalPoolSizes(
                f"source pool has {len(data.U_source)} sentences, target pool {len(data.U)}"
            )
        for pool_name, pool in (("source", data.U_source), ("target", data.U)):
            vals = []
            for tau in ABLATION_TAUS:
                policy = Threshold(tau)
                model, _ = self_train(
                    data.L, pool, data.dev_target, self_train_config(cfg, policy, seed)
                )
                v = evaluate(model, data.dev_target)
                vals.append(v)
                rows.append(AblationRow(seed, pool_name, policy.describe(), v))
            rows.append(AblationRow(seed, pool_name, "avg", float(np.mean(vals))))
    return rows


def filter_split(
    ds: Dataset, probabilities: Sequence[float], threshold: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Keep sentences whose score exceeds the threshold, then split 30/70.

    The returned pair is (dev, test). Scores typically come from an external
    domain classifier, one per sentence in corpus order.
    """
    if len(probabilities) != len(ds):
        raise DataError(f"{len(probabilities)} scores for {len(ds)} sentences")
    kept = tuple(s for s, p in zip(ds.sentences, probabilities) if p > threshold)
    if len(kept) < 2:
        raise DataError("fewer than two sentences survive the filter")
    filtered = Dataset(ds.scheme, kept, ds.role)
    dev, test = split_dataset(filtered, [0.3, 0.7], seed)
    return dev.with_role("dev"), test.with_role("test")
