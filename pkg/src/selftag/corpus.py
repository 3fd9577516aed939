"""Token-labeled corpora in a two-column CoNLL-style format.

Datasets are immutable after construction and validated eagerly: every
labeled sentence is checked against its tag scheme (including strict BIO
transition rules) when the Dataset is built, so downstream code never sees
malformed label sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError

BIO_ENTITY = "BIO-entity"
FLAT_POS = "flat-POS"


class MalformedLine(DataError):
    pass


class UnknownLabel(DataError):
    pass


class InvalidBioTransition(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class NotBioScheme(DataError):
    pass


class RatioSumInvalid(DataError):
    pass


class TooFewSentences(DataError):
    pass


class SchemeMismatch(DataError):
    pass


@dataclass(frozen=True)
class TagScheme:
    """Kind of labeling (BIO entity spans or flat tags) plus the label vocabulary."""

    kind: str
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.kind not in (BIO_ENTITY, FLAT_POS):
            raise ValueError(f"unknown scheme kind: {self.kind!r}")
        if len(self.labels) != len(set(self.labels)):
            raise ValueError("duplicate labels in scheme")
        if not self.labels:
            raise ValueError("empty label vocabulary")
        if self.kind == BIO_ENTITY:
            if "O" not in self.labels:
                raise ValueError("BIO-entity scheme must contain 'O'")
            for lab in self.labels:
                if lab == "O":
                    continue
                if not (lab.startswith("B-") or lab.startswith("I-")) or len(lab) <= 2:
                    raise ValueError(f"label {lab!r} is not O/B-X/I-X")
        else:
            for lab in self.labels:
                if lab.startswith("B-") or lab.startswith("I-"):
                    raise ValueError(f"flat-POS label {lab!r} carries a BIO prefix")
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    @property
    def index(self) -> dict[str, int]:
        return self._index  # type: ignore[attr-defined]

    def entity_types(self) -> tuple[str, ...]:
        if self.kind != BIO_ENTITY:
            raise NotBioScheme(f"scheme kind is {self.kind}")
        seen: dict[str, None] = {}
        for lab in self.labels:
            if lab != "O":
                seen.setdefault(lab[2:])
        return tuple(seen)


def bio_scheme(entity_types: Sequence[str]) -> TagScheme:
    """BIO-entity scheme with O first, then B-X/I-X per type in the given order."""
    labels = ["O"]
    for t in entity_types:
        labels += [f"B-{t}", f"I-{t}"]
    return TagScheme(BIO_ENTITY, tuple(labels))


# 21-tag Twitter-era Arabic POS tag set, bundled as a ready-made descriptor.
ARABIC_POS_TAGS = TagScheme(
    FLAT_POS,
    (
        "ADV", "ADJ", "CONJ", "DET", "NOUN", "NSUFF", "NUM", "PART",
        "PUNC", "PRON", "PREP", "V", "ABBREV", "VSUFF", "FOREIGN",
        "FUT_PART", "PROG_PART", "EMOT", "MENTION", "HASH", "URL",
    ),
)


@dataclass(frozen=True)
class Provenance:
    """Where a sentence's labels came from: annotation or a promotion step."""

    kind: str  # "gold" | "pseudo"
    iteration: Optional[int] = None
    min_confidence: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in ("gold", "pseudo"):
            raise ValueError(f"unknown provenance kind: {self.kind!r}")
        if self.kind == "pseudo" and (self.iteration is None or self.min_confidence is None):
            raise ValueError("pseudo provenance requires iteration and min_confidence")


GOLD = Provenance("gold")


def pseudo(iteration: int, min_confidence: float) -> Provenance:
    return Provenance("pseudo", iteration, min_confidence)


@dataclass(frozen=True)
class LabeledSentence:
    """A token sequence, optionally with one label per token."""

    tokens: tuple[str, ...]
    labels: Optional[tuple[str, ...]] = None
    provenance: Provenance = GOLD

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("empty sentence")
        for tok in self.tokens:
            if not tok or "\t" in tok or "\n" in tok:
                raise ValueError(f"token {tok!r} is empty or contains tab/newline")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.tokens):
                raise ValueError("label/token length mismatch")
            for lab in self.labels:
                if not lab or "\t" in lab or "\n" in lab:
                    raise ValueError(f"label {lab!r} is empty or contains tab/newline")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None


@dataclass(frozen=True)
class Span:
    """Half-open token range [start, end) carrying one entity type."""

    entity_type: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span bounds ({self.start}, {self.end})")


def validate_labels(labels: Sequence[str], scheme: TagScheme) -> None:
    """Check vocabulary membership and, for BIO schemes, strict transitions."""
    for lab in labels:
        if lab not in scheme.index:
            raise UnknownLabel(f"label {lab!r} not in scheme vocabulary")
    if scheme.kind == BIO_ENTITY:
        prev = "O"
        for i, lab in enumerate(labels):
            if lab.startswith("I-"):
                ok = prev == f"B-{lab[2:]}" or prev == f"I-{lab[2:]}"
                if not ok:
                    raise InvalidBioTransition(
                        f"{lab} at position {i} does not continue a {lab[2:]} span"
                    )
            prev = lab


def repair_bio(labels: Sequence[str]) -> tuple[str, ...]:
    """Convert illegal I-X labels to B-X; leaves valid sequences unchanged."""
    out: list[str] = []
    prev = "O"
    for lab in labels:
        if lab.startswith("I-") and prev not in (f"B-{lab[2:]}", f"I-{lab[2:]}"):
            lab = "B-" + lab[2:]
        out.append(lab)
        prev = lab
    return tuple(out)


@dataclass(frozen=True)
class Dataset:
    """Ordered, validated collection of sentences with a role in the workflow."""

    scheme: TagScheme
    sentences: tuple[LabeledSentence, ...]
    role: str  # "L" | "U" | "dev" | "test"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if self.role not in ("L", "U", "dev", "test"):
            raise ValueError(f"unknown dataset role: {self.role!r}")
        for sent in self.sentences:
            if self.role == "U":
                if sent.labels is not None:
                    raise DataError("role U dataset must not carry labels")
            elif self.role == "L":
                if sent.labels is None:
                    raise DataError("role L dataset must be fully labeled")
            if sent.labels is not None:
                validate_labels(sent.labels, self.scheme)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def with_role(self, role: str) -> "Dataset":
        return Dataset(self.scheme, self.sentences, role)


def _is_comment(line: str) -> bool:
    # Lines starting "#" are comments unless they contain a tab: that keeps
    # labeled hashtag tokens ("#tag<TAB>HASH") parseable as data.
    return line.startswith("#") and "\t" not in line


def parse_conll(
    text: str,
    scheme: TagScheme,
    *,
    role: Optional[str] = None,
    repair: bool = False,
    strip_labels: bool = False,
) -> Dataset:
    """Parse blank-line separated blocks of "token<TAB>label" (or bare token) lines.

    With repair=True, illegal I-X labels are rewritten to B-X instead of
    raising InvalidBioTransition. strip_labels discards any label column,
    yielding unlabeled sentences regardless of the file's contents.
    """
    blocks: list[list[tuple[str, Optional[str]]]] = []
    current: list[tuple[str, Optional[str]]] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if _is_comment(line):
            continue
        if not line.strip():
            if current:
                blocks.append(current)
                current = []
            continue
        cols = line.split("\t")
        if len(cols) == 1:
            token, label = cols[0], None
        elif len(cols) == 2:
            token, label = cols
        else:
            raise MalformedLine(f"line {lineno}: expected 1 or 2 columns, got {len(cols)}")
        if not token:
            raise MalformedLine(f"line {lineno}: empty token")
        if label == "":
            raise MalformedLine(f"line {lineno}: empty label")
        current.append((token, None if strip_labels else label))
    if current:
        blocks.append(current)
    if not blocks:
        raise EmptyCorpus("no sentences found")

    sentences: list[LabeledSentence] = []
    any_labeled = any_unlabeled = False
    for block in blocks:
        tokens = tuple(tok for tok, _ in block)
        labels_raw = [lab for _, lab in block]
        if all(lab is None for lab in labels_raw):
            any_unlabeled = True
            sentences.append(LabeledSentence(tokens))
            continue
        if any(lab is None for lab in labels_raw):
            raise MalformedLine("sentence mixes labeled and unlabeled lines")
        any_labeled = True
        labels = tuple(labels_raw)  # type: ignore[arg-type]
        for lab in labels:
            if lab not in scheme.index:
                raise UnknownLabel(f"label {lab!r} not in scheme vocabulary")
        if scheme.kind == BIO_ENTITY and repair:
            labels = repair_bio(labels)
        sentences.append(LabeledSentence(tokens, labels))

    if role is None:
        if any_labeled and any_unlabeled:
            raise MalformedLine("corpus mixes labeled and unlabeled sentences; pass role=")
        role = "L" if any_labeled else "U"
    return Dataset(scheme, tuple(sentences), role)


def write_conll(ds: Dataset) -> str:
    """Inverse of parse_conll: one block per sentence, blank-line separated."""
    blocks = []
    for sent in ds.sentences:
        if sent.labels is None:
            blocks.append("\n".join(sent.tokens))
        else:
            blocks.append("\n".join(f"{t}\t{l}" for t, l in zip(sent.tokens, sent.labels)))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def extract_spans(labels: Sequence[str]) -> set[Span]:
    """Spans as maximal B-X (I-X)* runs; O and orphan I-X yield nothing.

    Matches strict span extraction: only a B-X token opens a span, and an
    I-X token extends it only when the type matches.
    """
    for lab in labels:
        if lab != "O" and not ((lab.startswith("B-") or lab.startswith("I-")) and len(lab) > 2):
            raise NotBioScheme(f"label {lab!r} is not O/B-X/I-X")
    spans: set[Span] = set()
    start = -1
    typ = ""
    for i, lab in enumerate(labels):
        if start >= 0 and not (lab.startswith("I-") and lab[2:] == typ):
            spans.add(Span(typ, start, i))
            start = -1
        if lab.startswith("B-"):
            start = i
            typ = lab[2:]
    if start >= 0:
        spans.add(Span(typ, start, len(labels)))
    return spans


def split_dataset(ds: Dataset, ratios: Sequence[float], seed: int) -> list[Dataset]:
    """Seeded disjoint partition; floor-allocated sizes, leftovers to the last part.

    Membership is a seeded shuffle but each part keeps the original sentence
    order, so ratios=[1.0] returns the dataset unchanged.
    """
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise RatioSumInvalid(f"ratios {list(ratios)} must be positive and sum to 1")
    n = len(ds)
    if n < len(ratios):
        raise TooFewSentences(f"{n} sentences cannot fill {len(ratios)} parts")
    perm = np.random.default_rng(seed).permutation(n)
    sizes = [int(np.floor(r * n)) for r in ratios]
    sizes[-1] += n - sum(sizes)
    parts: list[Dataset] = []
    at = 0
    for size in sizes:
        idx = sorted(perm[at : at + size].tolist())
        parts.append(Dataset(ds.scheme, tuple(ds.sentences[i] for i in idx), ds.role))
        at += size
    return parts


def mix_gold_fraction(
    source_L: Dataset, target_gold: Dataset, fraction: float, seed: int
) -> Dataset:
    """source_L plus a seeded sample of round(fraction * |target_gold|) gold sentences."""
    if source_L.scheme != target_gold.scheme:
        raise SchemeMismatch("source and target schemes differ")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction {fraction} outside [0, 1]")
    k = int(np.floor(fraction * len(target_gold) + 0.5))  # round half up
    rng = np.random.default_rng(seed)
    idx = sorted(rng.permutation(len(target_gold))[:k].tolist())
    added = tuple(target_gold.sentences[i] for i in idx)
    return Dataset(source_L.scheme, source_L.sentences + added, "L")
