"""Synthetic domain-shift corpora for desk-scale transfer experiments.

Sentences come from a small template grammar over pseudoword inventories.
The target domain rewrites a fixed fraction of the source-specific word
types to forms never seen in source text, while label structure stays
identical. Some templates carry a disambiguating context word (a trigger
before a person, a preposition before a place); others show an entity in a
context that fits either type, so a tagger must know the word itself. That
split is what lets confidence-based promotion bootstrap: trigger sentences
stay reliable under the shift and teach the rewritten vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import FLAT_POS, Dataset, LabeledSentence, TagScheme, bio_scheme
from .errors import ConfigError

NER_SCHEME = bio_scheme(("PER", "LOC"))
POS_SCHEME = TagScheme(
    FLAT_POS, ("DET", "NOUN", "V", "ADJ", "ADV", "PREP", "PRON", "PUNC")
)


class SpecInvalid(ConfigError):
    pass


@dataclass(frozen=True)
class SyntheticShiftSpec:
    """Knobs for one benchmark: vocabulary sizes, shift strength, split sizes."""

    task: str = "ner"  # "ner" | "pos"
    source_vocab: int = 80  # word types specific to the source domain
    target_vocab: int = 60  # novel surface forms available to the target domain
    shared_vocab: int = 30  # word types used verbatim in both domains
    shift_rate: float = 0.5  # fraction of source types rewritten in target text
    train_sentences: int = 400
    unlabeled_sentences: int = 600
    dev_sentences: int = 200
    test_sentences: int = 300
    gold_sentences: int = 200
    label_noise: float = 0.0  # fraction of training spans/tags corrupted
    seed: int = 0

    def __post_init__(self) -> None:
        if self.task not in ("ner", "pos"):
            raise SpecInvalid(f"task must be 'ner' or 'pos', got {self.task!r}")
        if not 0.0 <= self.shift_rate <= 1.0:
            raise SpecInvalid(f"shift_rate {self.shift_rate} outside [0, 1]")
        if not 0.0 <= self.label_noise <= 1.0:
            raise SpecInvalid(f"label_noise {self.label_noise} outside [0, 1]")
        for name in (
            "train_sentences",
            "unlabeled_sentences",
            "dev_sentences",
            "test_sentences",
            "gold_sentences",
        ):
            if getattr(self, name) < 1:
                raise SpecInvalid(f"{name} must be >= 1")
        if self.source_vocab < 20 or self.shared_vocab < 0 or self.target_vocab < 0:
            raise SpecInvalid("source_vocab must be >= 20 and other sizes >= 0")
        n_shift = int(np.floor(self.shift_rate * self.source_vocab + 0.5))
        if self.target_vocab < n_shift:
            raise SpecInvalid(
                f"target_vocab {self.target_vocab} cannot cover "
                f"{n_shift} rewritten source types"
            )


@dataclass(frozen=True)
class ShiftBenchmark:
    """All splits of one benchmark, both domains. File-backed experiments may
    leave the gold and source-side splits unset."""

    L: Dataset
    U: Dataset
    dev_target: Dataset
    test_target: Dataset
    gold_target: Optional[Dataset]
    dev_source: Optional[Dataset]
    test_source: Optional[Dataset]
    U_source: Optional[Dataset]


_CONSONANTS = "bcdfghjklmnprstvz"
_VOWELS = "aeiou"


def _pseudowords(rng: np.random.Generator, count: int, used: set[str], capital: bool) -> list[str]:
    out: list[str] = []
    while len(out) < count:
        n_syll = int(rng.integers(2, 4))
        w = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(n_syll)
        )
        if capital:
            w = w.capitalize()
        if w in used:
            continue
        used.add(w)
        out.append(w)
    return out


@dataclass
class _Inventory:
    """Word types by grammatical role, plus which types the target rewrites."""

    roles: dict[str, list[str]]  # role name -> word types (source surface forms)
    shift_map: dict[str, str]  # source form -> target-only form

    def word(self, rng: np.random.Generator, role: str, target: bool) -> str:
        pool = self.roles[role]
        w = pool[int(rng.integers(len(pool)))]
        if target:
            return self.shift_map.get(w, w)
        return w


def _split_sizes(total: int, weights: list[int]) -> list[int]:
    sizes = [max(2, total * w // 100) for w in weights]
    sizes[0] += total - sum(sizes)
    if min(sizes) < 2:
        raise SpecInvalid("source_vocab too small for the template grammar")
    return sizes


def _build_inventory(spec: SyntheticShiftSpec, rng: np.random.Generator) -> _Inventory:
    used: set[str] = set()
    # Function-word roles prefer the shared pool; any deficit spills into the
    # source pool and becomes shiftable like every other source type.
    if spec.task == "ner":
        function_roles = [("trig_per", 3), ("trig_loc", 3), ("filler", max(4, spec.shared_vocab - 6))]
        content_roles = ["per", "loc", "noun", "verb"]
        content_weights = [30, 30, 20, 20]
        capital_roles = {"per", "loc"}
    else:
        third = max(3, spec.shared_vocab // 3)
        function_roles = [
            ("det", third),
            ("prep", third),
            ("pron", max(3, spec.shared_vocab - 2 * third)),
        ]
        content_roles = ["noun", "verb", "adj", "adv"]
        content_weights = [40, 25, 20, 15]
        capital_roles = set()

    roles: dict[str, list[str]] = {}
    shared_left = spec.shared_vocab
    source_types: list[str] = []
    for role, want in function_roles:
        n_shared = min(want, shared_left)
        shared_left -= n_shared
        words = _pseudowords(rng, want, used, capital=False)
        roles[role] = words
        source_types.extend(words[n_shared:])  # beyond the shared budget: shiftable

    content_budget = spec.source_vocab - len(source_types)
    if content_budget < 2 * len(content_roles):
        raise SpecInvalid("source_vocab too small once function words are covered")
    for role, size in zip(content_roles, _split_sizes(content_budget, content_weights)):
        words = _pseudowords(rng, size, used, capital=role in capital_roles)
        roles[role] = words
        source_types.extend(words)
    if spec.task == "pos":
        roles["punc"] = [".", "!"]  # punctuation marks, never shifted

    n_shift = int(np.floor(spec.shift_rate * len(source_types) + 0.5))
    order = rng.permutation(len(source_types))
    shift_map: dict[str, str] = {}
    for i in order[:n_shift]:
        src = source_types[i]
        repl = _pseudowords(rng, 1, used, capital=src[0].isupper())[0]
        shift_map[src] = repl
    return _Inventory(roles, shift_map)


def _ner_sentence(
    inv: _Inventory, rng: np.random.Generator, target: bool
) -> tuple[list[str], list[str]]:
    def w(role: str) -> str:
        return inv.word(rng, role, target)

    def entity(role: str) -> tuple[list[str], list[str]]:
        tag = "PER" if role == "per" else "LOC"
        toks = [w(role)]
        labs = [f"B-{tag}"]
        if rng.random() < 0.3:
            toks.append(w(role))
            labs.append(f"I-{tag}")
        return toks, labs

    kind = rng.random()
    toks: list[str] = []
    labs: list[str] = []
    if kind < 0.20:  # trigger before a person
        etoks, elabs = entity("per")
        toks = [w("trig_per")] + etoks + [w("verb"), w("filler"), w("noun")]
        labs = ["O"] + elabs + ["O", "O", "O"]
    elif kind < 0.40:  # preposition-style trigger before a place
        etoks, elabs = entity("loc")
        toks = [w("noun"), w("verb"), w("trig_loc")] + etoks + [w("filler")]
        labs = ["O", "O", "O"] + elabs + ["O"]
    elif kind < 0.85:  # entity first, context fits either type
        role = "per" if rng.random() < 0.5 else "loc"
        etoks, elabs = entity(role)
        toks = etoks + [w("verb"), w("filler"), w("noun")]
        labs = elabs + ["O", "O", "O"]
        if rng.random() < 0.5:
            toks.append(w("filler"))
            labs.append("O")
    else:  # no entity at all
        toks = [w("noun"), w("verb"), w("filler"), w("noun")]
        labs = ["O", "O", "O", "O"]
        if rng.random() < 0.3:
            toks.append(str(int(rng.integers(0, 100))))
            labs.append("O")
    if rng.random() < 0.25:
        toks.append(".")
        labs.append("O")
    return toks, labs


def _pos_sentence(
    inv: _Inventory, rng: np.random.Generator, target: bool
) -> tuple[list[str], list[str]]:
    def w(role: str) -> str:
        return inv.word(rng, role, target)

    kind = rng.random()
    if kind < 0.25:
        toks = [w("det"), w("noun"), w("verb"), w("adv")]
        labs = ["DET", "NOUN", "V", "ADV"]
    elif kind < 0.45:
        toks = [w("pron"), w("verb"), w("prep"), w("det"), w("noun")]
        labs = ["PRON", "V", "PREP", "DET", "NOUN"]
    elif kind < 0.60:
        toks = [w("noun"), w("verb"), w("det"), w("noun")]
        labs = ["NOUN", "V", "DET", "NOUN"]
    else:
        # Same two-slot context, two readings: needs lexical knowledge.
        if rng.random() < 0.5:
            toks = [w("det"), w("adj"), w("noun")]
            labs = ["DET", "ADJ", "NOUN"]
        else:
            toks = [w("det"), w("noun"), w("verb")]
            labs = ["DET", "NOUN", "V"]
    toks.append(w("punc"))
    labs.append("PUNC")
    return toks, labs


def _corrupt_ner(labels: list[str], rng: np.random.Generator, rate: float) -> list[str]:
    # Span-level noise: flip a span's type, keeping the sequence valid.
    out = list(labels)
    for i, lab in enumerate(labels):
        if lab.startswith("B-") and rng.random() < rate:
            other = "LOC" if lab[2:] == "PER" else "PER"
            out[i] = f"B-{other}"
            j = i + 1
            while j < len(labels) and labels[j].startswith("I-"):
                out[j] = f"I-{other}"
                j += 1
    return out


def _corrupt_pos(labels: list[str], rng: np.random.Generator, rate: float, scheme: TagScheme) -> list[str]:
    out = list(labels)
    for i, lab in enumerate(labels):
        if rng.random() < rate:
            others = [t for t in scheme.labels if t != lab]
            out[i] = others[int(rng.integers(len(others)))]
    return out


def _make_split(
    spec: SyntheticShiftSpec,
    inv: _Inventory,
    split_id: int,
    count: int,
    target: bool,
    role: str,
    noisy: bool,
) -> Dataset:
    rng = np.random.default_rng([spec.seed, split_id])
    scheme = NER_SCHEME if spec.task == "ner" else POS_SCHEME
    make = _ner_sentence if spec.task == "ner" else _pos_sentence
    sentences = []
    for _ in range(count):
        toks, labs = make(inv, rng, target)
        if noisy and spec.label_noise > 0:
            if spec.task == "ner":
                labs = _corrupt_ner(labs, rng, spec.label_noise)
            else:
                labs = _corrupt_pos(labs, rng, spec.label_noise, scheme)
        if role == "U":
            sentences.append(LabeledSentence(tuple(toks)))
        else:
            sentences.append(LabeledSentence(tuple(toks), tuple(labs)))
    return Dataset(scheme, tuple(sentences), role)


def generate_benchmark(spec: SyntheticShiftSpec) -> ShiftBenchmark:
    """Every split of the benchmark, including the source-domain extras."""
    inv = _build_inventory(spec, np.random.default_rng([spec.seed, 0]))
    return ShiftBenchmark(
        L=_make_split(spec, inv, 1, spec.train_sentences, False, "L", noisy=True),
        U=_make_split(spec, inv, 2, spec.unlabeled_sentences, True, "U", noisy=False),
        dev_target=_make_split(spec, inv, 3, spec.dev_sentences, True, "dev", noisy=False),
        test_target=_make_split(spec, inv, 4, spec.test_sentences, True, "test", noisy=False),
        gold_target=_make_split(spec, inv, 5, spec.gold_sentences, True, "L", noisy=False),
        dev_source=_make_split(spec, inv, 6, spec.dev_sentences, False, "dev", noisy=False),
        test_source=_make_split(spec, inv, 7, spec.test_sentences, False, "test", noisy=False),
        U_source=_make_split(spec, inv, 8, spec.unlabeled_sentences, False, "U", noisy=False),
    )


def generate_synthetic_shift(
    spec: SyntheticShiftSpec,
) -> tuple[Dataset, Dataset, Dataset, Dataset, Dataset]:
    """The transfer-experiment splits: (L, U, dev_target, test_target, gold_target)."""
    b = generate_benchmark(spec)
    return b.L, b.U, b.dev_target, b.test_target, b.gold_target
