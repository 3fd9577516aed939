"""Linear-chain conditional tagger with exact inference.

Scores decompose into per-token feature scores plus label-bigram scores.
Inference (forward-backward, Viterbi) runs on the selected kernel backend;
training maximizes conditional log-likelihood with an L2 penalty using
per-feature adaptive gradient steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .corpus import BIO_ENTITY, Dataset, LabeledSentence, TagScheme
from .errors import DataError, ModelError
from .evaluation import span_f1, token_accuracy
from .features import DEFAULT_TEMPLATES, FeatureTemplate, extract_features, uses_transitions


class NonFiniteScore(ModelError):
    pass


class UnlabeledSentenceInBatch(DataError):
    pass


class EmptyTrainingSet(DataError):
    pass


@lru_cache(maxsize=50_000)
def _cached_features(
    tokens: tuple[str, ...], templates: tuple[FeatureTemplate, ...]
) -> tuple[tuple[str, ...], ...]:
    return tuple(tuple(row) for row in extract_features(tokens, templates))


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule settings for one training run."""

    epochs: int = 20
    learning_rate: float = 0.1
    l2: float = 1e-4
    batch_size: int = 8
    patience: int = 5  # dev epochs without improvement before stopping; 0 disables
    seed: int = 0
    templates: tuple[FeatureTemplate, ...] = DEFAULT_TEMPLATES

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.learning_rate <= 0 or self.l2 < 0 or self.patience < 0:
            raise ValueError("learning_rate > 0, l2 >= 0, patience >= 0 required")


@dataclass(frozen=True)
class Lattice:
    """Log-space scores for one sentence: per-token unary plus shared bigram."""

    unary: np.ndarray  # (n, V)
    trans: np.ndarray  # (V, V), [previous, current]
    init: np.ndarray  # (V,), sentence-initial label scores


@dataclass(frozen=True)
class ForwardBackward:
    alpha: np.ndarray
    beta: np.ndarray
    log_partition: float
    marginals: np.ndarray  # (n, V), rows sum to one


@dataclass(frozen=True)
class Prediction:
    """Decoded labels with the posterior probability of each decoded label."""

    labels: tuple[str, ...]
    confidences: tuple[float, ...]
    min_confidence: float


@dataclass(frozen=True)
class Gradients:
    unary_weights: np.ndarray  # (F, V)
    transitions: np.ndarray  # (V, V)
    initial: np.ndarray  # (V,)


class TaggerModel:
    """Weights plus the feature vocabulary they are indexed by.

    The feature index is extended (never reordered) by each train call, so
    feature ids stay stable and serialized models reload losslessly.
    """

    def __init__(
        self,
        scheme: TagScheme,
        templates: Sequence[FeatureTemplate] = DEFAULT_TEMPLATES,
    ) -> None:
        self.scheme = scheme
        self.templates = tuple(templates)
        self.use_transitions = uses_transitions(self.templates)
        self.feature_index: dict[str, int] = {}
        V = len(scheme.labels)
        self.W = np.zeros((0, V))
        self.trans = np.zeros((V, V))
        self.init = np.zeros(V)

    @property
    def n_labels(self) -> int:
        return len(self.scheme.labels)

    @property
    def n_features(self) -> int:
        return len(self.feature_index)

    def sentence_features(self, tokens: Sequence[str]) -> tuple[tuple[str, ...], ...]:
        return _cached_features(tuple(tokens), self.templates)

    def grow_index(self, sentences: Sequence[LabeledSentence]) -> None:
        """Add unseen feature strings; existing ids and weights are untouched."""
        index = self.feature_index
        for sent in sentences:
            for row in self.sentence_features(sent.tokens):
                for feat in row:
                    if feat not in index:
                        index[feat] = len(index)
        if len(index) > self.W.shape[0]:
            extra = np.zeros((len(index) - self.W.shape[0], self.n_labels))
            self.W = np.vstack([self.W, extra])

    def encode(self, tokens: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Indices of known active features, flattened with per-token offsets."""
        index = self.feature_index
        idx: list[int] = []
        off = np.empty(len(tokens) + 1, dtype=np.int64)
        off[0] = 0
        for t, row in enumerate(self.sentence_features(tokens)):
            for feat in row:
                f = index.get(feat)
                if f is not None:
                    idx.append(f)
            off[t + 1] = len(idx)
        return np.asarray(idx, dtype=np.int64), off

    def snapshot(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.W.copy(), self.trans.copy(), self.init.copy()

    def restore(self, snap: tuple[np.ndarray, np.ndarray, np.ndarray]) -> None:
        W, trans, init = snap
        # A later snapshot may be narrower than the current index; keep the
        # extra rows but zero them so restored scores match the snapshot.
        if W.shape[0] < self.W.shape[0]:
            self.W[: W.shape[0]] = W
            self.W[W.shape[0] :] = 0.0
        else:
            self.W = W.copy()
        self.trans = trans.copy()
        self.init = init.copy()


def score_lattice(model: TaggerModel, tokens: Sequence[str]) -> Lattice:
    """Build the log-score lattice for one sentence under the current weights."""
    feat_idx, feat_off = model.encode(tokens)
    unary = kernels.unary_from_features(model.W, feat_idx, feat_off)
    if model.use_transitions:
        trans, init = model.trans, model.init
    else:
        V = model.n_labels
        trans, init = np.zeros((V, V)), np.zeros(V)
    if not (np.all(np.isfinite(unary)) and np.all(np.isfinite(trans)) and np.all(np.isfinite(init))):
        raise NonFiniteScore("lattice contains nan or inf")
    return Lattice(unary, trans, init)


def forward_backward(lattice: Lattice) -> ForwardBackward:
    """Exact posterior marginals and the log partition function."""
    alpha, logZ = kernels.forward_alpha(lattice.unary, lattice.trans, lattice.init)
    if not np.isfinite(logZ):
        raise NonFiniteScore("non-finite log partition function")
    beta = kernels.backward_beta(lattice.unary, lattice.trans)
    marginals = kernels.posterior_marginals(alpha, beta, logZ)
    return ForwardBackward(alpha, beta, float(logZ), marginals)


def viterbi(lattice: Lattice) -> tuple[tuple[int, ...], float]:
    """Highest-scoring label index path and its unnormalized log score."""
    path, score = kernels.viterbi_path(lattice.unary, lattice.trans, lattice.init)
    if not np.isfinite(score):
        raise NonFiniteScore("non-finite best-path score")
    return tuple(int(y) for y in path), float(score)


def predict_with_confidence(
    model: TaggerModel, sentence: Union[LabeledSentence, Sequence[str]]
) -> Prediction:
    """Viterbi labels, each with the posterior probability of that label."""
    tokens = sentence.tokens if isinstance(sentence, LabeledSentence) else tuple(sentence)
    lattice = score_lattice(model, tokens)
    fb = forward_backward(lattice)
    path, _ = viterbi(lattice)
    labels = tuple(model.scheme.labels[y] for y in path)
    confs = tuple(float(fb.marginals[t, y]) for t, y in enumerate(path))
    return Prediction(labels, confs, min(confs))


def _encode_labels(model: TaggerModel, sent: LabeledSentence) -> np.ndarray:
    if sent.labels is None:
        raise UnlabeledSentenceInBatch("batch contains an unlabeled sentence")
    return np.asarray([model.scheme.index[l] for l in sent.labels], dtype=np.int64)


def _batch_loglik_grad(
    model: TaggerModel,
    encoded: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]],
    l2: float,
) -> tuple[float, Gradients]:
    """Penalized conditional log-likelihood of a batch and its exact gradient.

    encoded holds (feat_idx, feat_off, label_idx) per sentence. The penalty
    (l2/2)*||w||^2 spans unary, transition and initial weights.
    """
    V = model.n_labels
    gW = np.zeros_like(model.W)
    gT = np.zeros((V, V))
    gI = np.zeros(V)
    total = 0.0
    for feat_idx, feat_off, y in encoded:
        n = feat_off.shape[0] - 1
        unary = kernels.unary_from_features(model.W, feat_idx, feat_off)
        trans = model.trans if model.use_transitions else np.zeros((V, V))
        init = model.init if model.use_transitions else np.zeros(V)
        alpha, logZ = kernels.forward_alpha(unary, trans, init)
        if not np.isfinite(logZ):
            raise NonFiniteScore("non-finite log partition function")
        beta = kernels.backward_beta(unary, trans)
        gamma = kernels.posterior_marginals(alpha, beta, logZ)
        gold = unary[np.arange(n), y].sum() + init[y[0]]
        if n > 1:
            gold += trans[y[:-1], y[1:]].sum()
        total += gold - logZ
        coef = -gamma
        coef[np.arange(n), y] += 1.0
        kernels.scatter_unary_grad(gW, feat_idx, feat_off, coef)
        if model.use_transitions:
            gI += coef[0]
            if n > 1:
                E = kernels.expected_transitions(alpha, beta, unary, trans, logZ)
                np.add.at(gT, (y[:-1], y[1:]), 1.0)
                gT -= E
    if l2 > 0.0:
        sq = float(np.sum(model.W * model.W))
        if model.use_transitions:
            sq += float(np.sum(model.trans * model.trans)) + float(np.sum(model.init * model.init))
        total -= 0.5 * l2 * sq
        gW -= l2 * model.W
        if model.use_transitions:
            gT -= l2 * model.trans
            gI -= l2 * model.init
    return total, Gradients(gW, gT, gI)


def loglik_and_gradient(
    model: TaggerModel, batch: Sequence[LabeledSentence], l2: float
) -> tuple[float, Gradients]:
    """Objective sum(gold score - logZ) - (l2/2)||w||^2 and its gradient."""
    encoded = [(*model.encode(s.tokens), _encode_labels(model, s)) for s in batch]
    return _batch_loglik_grad(model, encoded, l2)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    objective: float
    dev_metric: Optional[float]


def dev_metric(model: TaggerModel, dev: Dataset) -> float:
    """Macro span F1 for BIO schemes, token accuracy otherwise."""
    golds = [s.labels for s in dev.sentences]
    preds = [predict_with_confidence(model, s).labels for s in dev.sentences]
    if model.scheme.kind == BIO_ENTITY:
        return span_f1(golds, preds).macro_f1
    return token_accuracy(golds, preds)


def train(
    L: Dataset,
    config: TrainConfig,
    dev: Optional[Dataset] = None,
    model: Optional[TaggerModel] = None,
) -> tuple[TaggerModel, list[EpochStats]]:
    """Fit (or continue fitting) a model on L by adaptive gradient ascent.

    Passing an existing model warm-starts from its weights; its feature
    index grows to cover L. With a dev set the best-scoring epoch's weights
    are restored at the end, and training stops early after config.patience
    epochs without strict improvement.
    """
    if len(L) == 0:
        raise EmptyTrainingSet("no labeled sentences to train on")
    if model is None:
        model = TaggerModel(L.scheme, config.templates)
    elif model.scheme != L.scheme:
        raise DataError("model and training data carry different schemes")
    model.grow_index(L.sentences)

    encoded = [(*model.encode(s.tokens), _encode_labels(model, s)) for s in L.sentences]
    accW = np.zeros_like(model.W)
    accT = np.zeros_like(model.trans)
    accI = np.zeros_like(model.init)
    lr = config.learning_rate
    rng = np.random.default_rng(config.seed)

    history: list[EpochStats] = []
    best_metric = -np.inf
    best_snap = None
    bad_epochs = 0
    n = len(encoded)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        objective = 0.0
        for at in range(0, n, config.batch_size):
            batch = [encoded[i] for i in order[at : at + config.batch_size]]
            l2_eff = config.l2 * len(batch) / n
            obj, g = _batch_loglik_grad(model, batch, l2_eff)
            objective += float(obj)
            accW += g.unary_weights * g.unary_weights
            model.W += lr * g.unary_weights / np.sqrt(accW + 1e-8)
            if model.use_transitions:
                accT += g.transitions * g.transitions
                model.trans += lr * g.transitions / np.sqrt(accT + 1e-8)
                accI += g.initial * g.initial
                model.init += lr * g.initial / np.sqrt(accI + 1e-8)
        metric = dev_metric(model, dev) if dev is not None else None
        history.append(EpochStats(epoch, objective, metric))
        if dev is not None:
            if metric > best_metric:
                best_metric = metric
                best_snap = model.snapshot()
                bad_epochs = 0
            else:
                bad_epochs += 1
                if config.patience and bad_epochs >= config.patience:
                    break
    if best_snap is not None:
        model.restore(best_snap)
    return model, history


MODEL_MAGIC = "selftag-model"
MODEL_VERSION = 1


def save_model(model: TaggerModel, path: str) -> None:
    """Write the model as versioned tab-separated text, losslessly."""
    for feat in model.feature_index:
        if "\t" in feat or "\n" in feat:
            raise ModelError(f"feature string {feat!r} cannot be serialized")
    lines = [f"{MODEL_MAGIC}\t{MODEL_VERSION}"]
    lines.append(f"kind\t{model.scheme.kind}")
    lines.append("labels\t" + "\t".join(model.scheme.labels))
    for t in model.templates:
        lines.append(f"template\t{t.to_string()}")
    lines.append(f"nfeatures\t{model.n_features}")
    for feat in model.feature_index:
        lines.append(f"f\t{feat}")
    for f, y in zip(*np.nonzero(model.W)):
        lines.append(f"w\t{f}\t{y}\t{float(model.W[f, y])!r}")
    for a, b in zip(*np.nonzero(model.trans)):
        lines.append(f"t\t{a}\t{b}\t{float(model.trans[a, b])!r}")
    for (b,) in zip(*np.nonzero(model.init)):
        lines.append(f"i\t{b}\t{float(model.init[b])!r}")
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> TaggerModel:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise ModelError(f"cannot read model {path}: {exc}") from exc
    if not lines or lines[0] != f"{MODEL_MAGIC}\t{MODEL_VERSION}":
        raise ModelError(f"{path}: not a version-{MODEL_VERSION} model file")
    kind: Optional[str] = None
    labels: Optional[tuple[str, ...]] = None
    templates: list[FeatureTemplate] = []
    nfeatures = -1
    feats: list[str] = []
    triples: list[tuple[str, list[str]]] = []
    ended = False
    for line in lines[1:]:
        if not line:
            continue
        if line == "end":
            ended = True
            continue
        tag, *rest = line.split("\t")
        if tag == "kind":
            kind = rest[0]
        elif tag == "labels":
            labels = tuple(rest)
        elif tag == "template":
            templates.append(FeatureTemplate.from_string(rest[0]))
        elif tag == "nfeatures":
            nfeatures = int(rest[0])
        elif tag == "f":
            feats.append(rest[0])
        elif tag in ("w", "t", "i"):
            triples.append((tag, rest))
        else:
            raise ModelError(f"{path}: unknown record {tag!r}")
    if not ended or kind is None or labels is None or len(feats) != nfeatures:
        raise ModelError(f"{path}: truncated or inconsistent model file")
    model = TaggerModel(TagScheme(kind, labels), tuple(templates))
    model.feature_index = {feat: i for i, feat in enumerate(feats)}
    model.W = np.zeros((nfeatures, model.n_labels))
    for tag, rest in triples:
        if tag == "w":
            model.W[int(rest[0]), int(rest[1])] = float(rest[2])
        elif tag == "t":
            model.trans[int(rest[0]), int(rest[1])] = float(rest[2])
        else:
            model.init[int(rest[0])] = float(rest[1])
    return model
