"""Policies for choosing which predictions get promoted to training data.

An example's confidence is the minimum of its per-token confidences, so one
uncertain token disqualifies the whole sentence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .errors import DataError
from .tagger import Prediction


class EmptyPrediction(DataError):
    pass


@dataclass(frozen=True)
class Threshold:
    """Promote every example whose confidence is at least tau."""

    tau: float

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie strictly inside (0, 1), got {self.tau}")

    def describe(self) -> str:
        return f"threshold={self.tau}"


@dataclass(frozen=True)
class FixedSize:
    """Promote the size most confident examples (fewer if the pool is smaller)."""

    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError(f"size must be at least 1, got {self.size}")

    def describe(self) -> str:
        return f"fixed={self.size}"


SelectionPolicy = Union[Threshold, FixedSize]


def example_confidence(prediction: Prediction) -> float:
    if not prediction.confidences:
        raise EmptyPrediction("prediction carries no token confidences")
    return min(prediction.confidences)


def select(
    policy: SelectionPolicy, predictions: Sequence[Prediction]
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Partition prediction positions into (selected, remaining).

    Both halves keep original order. FixedSize breaks confidence ties in
    favor of the earlier position.
    """
    confs = [example_confidence(p) for p in predictions]
    if isinstance(policy, Threshold):
        chosen = {i for i, c in enumerate(confs) if c >= policy.tau}
    else:
        ranked = sorted(range(len(confs)), key=lambda i: (-confs[i], i))
        chosen = set(ranked[: policy.size])
    selected = tuple(i for i in range(len(confs)) if i in chosen)
    remaining = tuple(i for i in range(len(confs)) if i not in chosen)
    return selected, remaining
