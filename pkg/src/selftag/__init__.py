"""Confidence-based self-training for sequence labeling.

A linear-chain tagger with exact inference, an iterative promotion loop
over an unlabeled pool, span-level evaluation, and a harness reproducing
zero-shot, grid, few-shot, and ablation protocols on synthetic
domain-shift corpora.
"""

from .corpus import (
    ARABIC_POS_TAGS,
    BIO_ENTITY,
    FLAT_POS,
    GOLD,
    Dataset,
    LabeledSentence,
    Provenance,
    Span,
    TagScheme,
    bio_scheme,
    extract_spans,
    mix_gold_fraction,
    parse_conll,
    pseudo,
    split_dataset,
    write_conll,
)
from .errors import ConfigError, DataError, ModelError, SelftagError
from .evaluation import (
    ConfusionMatrix,
    ErrorCategories,
    EvalReport,
    confusion_matrix,
    error_categories,
    improvement,
    span_f1,
    token_accuracy,
)
from .features import DEFAULT_TEMPLATES, FeatureTemplate, extract_features, word_shape
from .selection import FixedSize, SelectionPolicy, Threshold, example_confidence, select
from .selftrain import IterationStats, SelfTrainConfig, history_to_tsv, self_train
from .synth import ShiftBenchmark, SyntheticShiftSpec, generate_benchmark, generate_synthetic_shift
from .tagger import (
    Lattice,
    Prediction,
    TaggerModel,
    TrainConfig,
    forward_backward,
    load_model,
    loglik_and_gradient,
    predict_with_confidence,
    save_model,
    score_lattice,
    train,
    viterbi,
)

__version__ = "0.1.0"
