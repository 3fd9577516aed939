"""Iterative self-training: train, predict on the unlabeled pool, promote.

Each iteration fits the tagger for a fixed number of epochs on the current
labeled set, scores every remaining unlabeled sentence, and moves the ones
the selection policy accepts into the labeled set with pseudo provenance.
The model with the best dev score across iterations is what comes back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import (
    BIO_ENTITY,
    Dataset,
    LabeledSentence,
    SchemeMismatch,
    pseudo,
    repair_bio,
)
from .errors import DataError
from .features import DEFAULT_TEMPLATES, FeatureTemplate
from .selection import SelectionPolicy, example_confidence, select
from .tagger import TaggerModel, TrainConfig, dev_metric, predict_with_confidence, train


class EmptyLabeledSet(DataError):
    pass


@dataclass(frozen=True)
class SelfTrainConfig:
    """Loop controls plus the optimizer settings used inside each iteration."""

    policy: SelectionPolicy
    epochs_per_iteration: int = 5
    max_iterations: int = 50
    patience: int = 10  # iterations without dev improvement before stopping; 0 disables
    seed: int = 0
    reinit_each_iteration: bool = False
    learning_rate: float = 0.1
    l2: float = 1e-4
    batch_size: int = 8
    templates: tuple[FeatureTemplate, ...] = DEFAULT_TEMPLATES

    def __post_init__(self) -> None:
        if self.epochs_per_iteration < 1 or self.max_iterations < 1:
            raise ValueError("epochs_per_iteration and max_iterations must be >= 1")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")


@dataclass(frozen=True)
class IterationStats:
    """One history row; sizes are as of the start of the iteration."""

    iteration: int
    labeled_size: int
    unlabeled_size: int
    promoted: int
    dev_metric: float
    min_confidence: float  # over promoted examples; nan when none promoted
    mean_confidence: float


HISTORY_COLUMNS = ("iter", "L_size", "U_size", "promoted", "dev_metric", "min_conf", "mean_conf")


def iteration_seed(seed: int, iteration: int) -> int:
    """Training seed for one iteration; spread out so nearby runs differ."""
    return seed * 1009 + iteration


def history_to_tsv(history: list[IterationStats]) -> str:
    lines = ["\t".join(HISTORY_COLUMNS)]
    for row in history:
        lines.append(
            "\t".join(
                (
                    str(row.iteration),
                    str(row.labeled_size),
                    str(row.unlabeled_size),
                    str(row.promoted),
                    repr(row.dev_metric),
                    repr(row.min_confidence),
                    repr(row.mean_confidence),
                )
            )
        )
    return "\n".join(lines) + "\n"


def _clone(model: TaggerModel) -> TaggerModel:
    out = TaggerModel(model.scheme, model.templates)
    out.feature_index = dict(model.feature_index)
    out.W = model.W.copy()
    out.trans = model.trans.copy()
    out.init = model.init.copy()
    return out


def self_train(
    L: Dataset, U: Dataset, dev: Dataset, config: SelfTrainConfig
) -> tuple[TaggerModel, list[IterationStats]]:
    """Run the promotion loop and return (best-dev model, per-iteration history).

    Stops when the pool empties, an iteration promotes nothing, dev score
    stalls for config.patience iterations, or max_iterations is reached.
    """
    if L.scheme != U.scheme or L.scheme != dev.scheme:
        raise SchemeMismatch("labeled, unlabeled and dev schemes must agree")
    if len(L) == 0:
        raise EmptyLabeledSet("self-training needs at least one labeled sentence")
    if any(s.labels is None for s in dev.sentences):
        raise DataError("dev sentences must be labeled")

    model: Optional[TaggerModel] = None
    best_model: Optional[TaggerModel] = None
    best_metric = -math.inf
    bad_iters = 0
    history: list[IterationStats] = []

    for iteration in range(config.max_iterations):
        train_cfg = TrainConfig(
            epochs=config.epochs_per_iteration,
            learning_rate=config.learning_rate,
            l2=config.l2,
            batch_size=config.batch_size,
            patience=0,
            seed=iteration_seed(config.seed, iteration),
            templates=config.templates,
        )
        if config.reinit_each_iteration:
            model = None
        model, _ = train(L, train_cfg, dev=None, model=model)
        metric = dev_metric(model, dev)
        if metric > best_metric:
            best_metric = metric
            best_model = _clone(model)
            bad_iters = 0
        else:
            bad_iters += 1

        if len(U) == 0:
            history.append(
                IterationStats(iteration, len(L), 0, 0, metric, math.nan, math.nan)
            )
            break

        preds = [predict_with_confidence(model, s) for s in U.sentences]
        selected, remaining = select(config.policy, preds)
        confs = [example_confidence(preds[i]) for i in selected]
        history.append(
            IterationStats(
                iteration,
                len(L),
                len(U),
                len(selected),
                metric,
                min(confs) if confs else math.nan,
                float(np.mean(confs)) if confs else math.nan,
            )
        )
        if not selected:
            break

        promoted = []
        for i in selected:
            labels = preds[i].labels
            if L.scheme.kind == BIO_ENTITY:
                labels = repair_bio(labels)
            promoted.append(
                LabeledSentence(
                    U.sentences[i].tokens,
                    labels,
                    pseudo(iteration, example_confidence(preds[i])),
                )
            )
        L = Dataset(L.scheme, L.sentences + tuple(promoted), "L")
        U = Dataset(U.scheme, tuple(U.sentences[i] for i in remaining), "U")

        if config.patience and bad_iters >= config.patience:
            break

    assert best_model is not None
    return best_model, history
