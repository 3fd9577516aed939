"""Scoring: strict span F1, token accuracy, confusion counts, error categories.

A predicted span counts as correct only when its type, start and end all
match a gold span exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import extract_spans
from .errors import DataError


class LengthMismatch(DataError):
    pass


class UnmappedLabel(DataError):
    pass


class DivisionByZeroBase(DataError):
    pass


LabelSeqs = Sequence[Sequence[str]]


@dataclass(frozen=True)
class TypeScore:
    precision: float
    recall: float
    f1: float
    gold_count: int
    pred_count: int
    correct: int


@dataclass(frozen=True)
class EvalReport:
    """Per-entity-type scores plus pooled (micro) and averaged (macro) ones."""

    per_type: Mapping[str, TypeScore]
    micro: TypeScore
    macro_precision: float
    macro_recall: float
    macro_f1: float


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[i, j] = tokens whose gold category is i and predicted is j."""

    categories: tuple[str, ...]
    counts: np.ndarray

    def get(self, gold_cat: str, pred_cat: str) -> int:
        i = self.categories.index(gold_cat)
        j = self.categories.index(pred_cat)
        return int(self.counts[i, j])


@dataclass(frozen=True)
class ErrorCategories:
    true_positive: int
    false_positive: int
    false_negative: int
    true_negative: int


def _check_paired(gold: LabelSeqs, pred: LabelSeqs) -> None:
    if len(gold) != len(pred):
        raise LengthMismatch(f"{len(gold)} gold sequences vs {len(pred)} predicted")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise LengthMismatch(f"sequence {i}: {len(g)} gold labels vs {len(p)} predicted")


def _score(correct: int, pred_count: int, gold_count: int) -> TypeScore:
    p = correct / pred_count if pred_count else 0.0
    r = correct / gold_count if gold_count else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return TypeScore(p, r, f, gold_count, pred_count, correct)


def span_f1(gold: LabelSeqs, pred: LabelSeqs, *, include_zero_support: bool = False) -> EvalReport:
    """Exact-match span scores.

    Macro scores average over entity types with at least one gold span;
    include_zero_support also averages in types that were only predicted.
    """
    _check_paired(gold, pred)
    correct: dict[str, int] = {}
    gold_count: dict[str, int] = {}
    pred_count: dict[str, int] = {}
    for g, p in zip(gold, pred):
        gs = extract_spans(g)
        ps = extract_spans(p)
        for span in gs:
            gold_count[span.entity_type] = gold_count.get(span.entity_type, 0) + 1
        for span in ps:
            pred_count[span.entity_type] = pred_count.get(span.entity_type, 0) + 1
        for span in gs & ps:
            correct[span.entity_type] = correct.get(span.entity_type, 0) + 1
    types = sorted(set(gold_count) | set(pred_count))
    per_type = {
        t: _score(correct.get(t, 0), pred_count.get(t, 0), gold_count.get(t, 0)) for t in types
    }
    micro = _score(
        sum(correct.values()), sum(pred_count.values()), sum(gold_count.values())
    )
    averaged = [
        s for s in per_type.values() if include_zero_support or s.gold_count > 0
    ]
    if averaged:
        mp = sum(s.precision for s in averaged) / len(averaged)
        mr = sum(s.recall for s in averaged) / len(averaged)
        mf = sum(s.f1 for s in averaged) / len(averaged)
    else:
        mp = mr = mf = 0.0
    return EvalReport(per_type, micro, mp, mr, mf)


def token_accuracy(gold: LabelSeqs, pred: LabelSeqs) -> float:
    """Fraction of tokens whose predicted label string matches gold exactly."""
    _check_paired(gold, pred)
    total = sum(len(g) for g in gold)
    if total == 0:
        return 0.0
    hits = sum(gl == pl for g, p in zip(gold, pred) for gl, pl in zip(g, p))
    return hits / total


def _category(label: str) -> str:
    if label.startswith("B-") or label.startswith("I-"):
        return label[2:]
    return label


def confusion_matrix(gold: LabelSeqs, pred: LabelSeqs, categories: Sequence[str]) -> ConfusionMatrix:
    """Token-level confusion over categories; BIO labels collapse to their type."""
    _check_paired(gold, pred)
    cats = tuple(categories)
    index = {c: i for i, c in enumerate(cats)}
    counts = np.zeros((len(cats), len(cats)), dtype=np.int64)
    for g, p in zip(gold, pred):
        for gl, pl in zip(g, p):
            gc, pc = _category(gl), _category(pl)
            if gc not in index:
                raise UnmappedLabel(f"gold label {gl!r} maps to no category")
            if pc not in index:
                raise UnmappedLabel(f"predicted label {pl!r} maps to no category")
            counts[index[gc], index[pc]] += 1
    return ConfusionMatrix(cats, counts)


def error_categories(cm: ConfusionMatrix, outside: str = "O") -> ErrorCategories:
    """Collapse a confusion matrix into TP/FP/FN/TN token counts.

    TP: gold entity tokens predicted as the same category. FP: outside
    tokens predicted as some entity. FN: entity tokens predicted outside.
    TN: outside predicted outside. Entity-to-other-entity confusions fall
    in none of the four.
    """
    if outside not in cm.categories:
        raise UnmappedLabel(f"outside category {outside!r} not in matrix")
    o = cm.categories.index(outside)
    ent = [i for i in range(len(cm.categories)) if i != o]
    tp = int(sum(cm.counts[i, i] for i in ent))
    fp = int(sum(cm.counts[o, j] for j in ent))
    fn = int(sum(cm.counts[i, o] for i in ent))
    tn = int(cm.counts[o, o])
    return ErrorCategories(tp, fp, fn, tn)


def improvement(base: ErrorCategories, improved: ErrorCategories) -> dict[str, float]:
    """Percent change per category, signed so that positive always means better.

    TP and TN grow when things improve: (improved - base) / base * 100.
    FP and FN shrink: (base - improved) / base * 100.
    """
    pairs = {
        "TP": (base.true_positive, improved.true_positive, +1),
        "FP": (base.false_positive, improved.false_positive, -1),
        "FN": (base.false_negative, improved.false_negative, -1),
        "TN": (base.true_negative, improved.true_negative, +1),
    }
    out: dict[str, float] = {}
    for name, (b, a, sign) in pairs.items():
        if b == 0:
            raise DivisionByZeroBase(f"{name} base count is zero")
        out[name] = sign * (a - b) / b * 100.0
    return out
