"""Feature templates and per-token feature extraction.

Feature ids are plain strings ("w0=Cairo", "suf2=ed") so extracted features
can be cached, inspected, and written to model files directly. The
previous-label-bigram template has no per-token string form; it switches on
the label-transition block of the model instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

WORD = "word-identity"
LOWER = "lowercased-word"
PREFIX = "prefix"
SUFFIX = "suffix"
SHAPE = "word-shape"
IS_DIGIT = "is-digit"
IS_PUNCT = "is-punct"
BIGRAM = "previous-label-bigram"

_VALUE_KINDS = (WORD, LOWER, PREFIX, SUFFIX, SHAPE)
_BOOL_KINDS = (IS_DIGIT, IS_PUNCT)
_ALL_KINDS = _VALUE_KINDS + _BOOL_KINDS + (BIGRAM,)

BOS = "<BOS>"
EOS = "<EOS>"


@dataclass(frozen=True)
class FeatureTemplate:
    """One feature function: a kind, a token offset, and for affixes a length k."""

    kind: str
    offset: int = 0
    k: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in _ALL_KINDS:
            raise ValueError(f"unknown template kind: {self.kind!r}")
        if self.kind in (PREFIX, SUFFIX):
            if self.k is None or not 1 <= self.k <= 4:
                raise ValueError(f"{self.kind} template needs k in 1..4, got {self.k}")
        elif self.k is not None:
            raise ValueError(f"{self.kind} template takes no k")
        if self.kind == BIGRAM and self.offset != 0:
            raise ValueError("previous-label-bigram template takes no offset")

    def to_string(self) -> str:
        k = "" if self.k is None else str(self.k)
        return f"{self.kind}:{self.offset}:{k}"

    @staticmethod
    def from_string(s: str) -> "FeatureTemplate":
        try:
            kind, off, k = s.split(":")
            return FeatureTemplate(kind, int(off), int(k) if k else None)
        except ValueError as exc:
            raise ValueError(f"bad template string {s!r}") from exc


DEFAULT_TEMPLATES: tuple[FeatureTemplate, ...] = (
    FeatureTemplate(WORD, -1),
    FeatureTemplate(WORD, 0),
    FeatureTemplate(WORD, 1),
    FeatureTemplate(LOWER, 0),
    FeatureTemplate(PREFIX, 0, 1),
    FeatureTemplate(PREFIX, 0, 2),
    FeatureTemplate(PREFIX, 0, 3),
    FeatureTemplate(SUFFIX, 0, 1),
    FeatureTemplate(SUFFIX, 0, 2),
    FeatureTemplate(SUFFIX, 0, 3),
    FeatureTemplate(SHAPE, 0),
    FeatureTemplate(IS_DIGIT, 0),
    FeatureTemplate(IS_PUNCT, 0),
    FeatureTemplate(BIGRAM),
)


def word_shape(token: str) -> str:
    """Character-class sketch with runs collapsed: "Cairo" -> "Xx", "A-12" -> "X-d"."""
    out: list[str] = []
    for ch in token:
        if ch.isupper():
            c = "X"
        elif ch.islower():
            c = "x"
        elif ch.isdigit():
            c = "d"
        else:
            c = ch
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


def uses_transitions(templates: Sequence[FeatureTemplate]) -> bool:
    return any(t.kind == BIGRAM for t in templates)


def _at_suffix(offset: int) -> str:
    return "" if offset == 0 else f"@{offset}"


def _value_feature(t: FeatureTemplate, tokens: Sequence[str], i: int) -> str:
    j = i + t.offset
    if j < 0:
        val = BOS
    elif j >= len(tokens):
        val = EOS
    else:
        tok = tokens[j]
        if t.kind == WORD:
            val = tok
        elif t.kind == LOWER:
            val = tok.lower()
        elif t.kind == PREFIX:
            val = tok[: t.k]
        elif t.kind == SUFFIX:
            val = tok[-t.k :]
        else:
            val = word_shape(tok)
    if t.kind == WORD:
        return f"w{t.offset}={val}"
    if t.kind == LOWER:
        return f"low{t.offset}={val}"
    if t.kind == PREFIX:
        return f"pre{t.k}{_at_suffix(t.offset)}={val}"
    if t.kind == SUFFIX:
        return f"suf{t.k}{_at_suffix(t.offset)}={val}"
    return f"shape{_at_suffix(t.offset)}={val}"


def extract_features(
    tokens: Sequence[str], templates: Sequence[FeatureTemplate] = DEFAULT_TEMPLATES
) -> list[list[str]]:
    """Feature strings per token position; bigram templates contribute none."""
    if not tokens:
        raise ValueError("empty token sequence")
    feats: list[list[str]] = []
    for i in range(len(tokens)):
        row: list[str] = []
        for t in templates:
            if t.kind == BIGRAM:
                continue
            if t.kind in _BOOL_KINDS:
                j = i + t.offset
                if not 0 <= j < len(tokens):
                    continue
                tok = tokens[j]
                if t.kind == IS_DIGIT and tok.isdigit():
                    row.append(f"isdigit{_at_suffix(t.offset)}")
                elif t.kind == IS_PUNCT and all(not c.isalnum() for c in tok):
                    row.append(f"ispunct{_at_suffix(t.offset)}")
            else:
                row.append(_value_feature(t, tokens, i))
        feats.append(row)
    return feats
