"""Multinomial naive Bayes baseline with Laplace smoothing.

Documents pass through the word pipeline (strip punctuation, whitespace
tokenize, lowercase, drop stopwords, drop words under three characters,
Porter-stem) before training.  Class scores are kept in the log domain --
the raw product of word probabilities underflows on long documents -- and
the decision takes the ratio hsr = hamScore / spamScore against a
threshold, the same shape as the tree classifier.

The word probability for class j is the add-one estimate
``(1 + N_ij) / (M + T_j)`` with M the size of the vocabulary shared across
classes and T_j the class token total; unseen words get the floor instead
of zero.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass, field
from importlib import resources

from . import porter
from .errors import ConfigError

SPAM = "spam"
HAM = "ham"

_PUNCT = re.compile(r"[^\w\s]|_", re.UNICODE)


def load_default_stopwords() -> frozenset[str]:
    text = resources.files("stfilter").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w for w in text.split() if w)


def load_stopword_file(path: str) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


@dataclass(frozen=True)
class TokenPipeline:
    stopwords: frozenset[str] = field(default_factory=load_default_stopwords)
    min_token_length: int = 3
    stemmer: str = "porter"

    def __post_init__(self):
        if self.stemmer != "porter":
            raise ConfigError(f"unknown stemmer {self.stemmer!r}")

    @property
    def pipeline_id(self) -> str:
        return f"punct+stop{len(self.stopwords)}+len{self.min_token_length}+{self.stemmer}"


def preprocess(text: str, pipeline: TokenPipeline | None = None) -> list[str]:
    """Token list after the full pipeline.

    Punctuation (anything neither alphanumeric nor whitespace) is deleted in
    place rather than replaced by a space, so "Vi.agr.a" collapses back to
    "viagra" instead of shattering into fragments.
    """
    if pipeline is None:
        pipeline = TokenPipeline()
    cleaned = _PUNCT.sub("", text)
    out = []
    for token in cleaned.split():
        token = token.lower()
        if token in pipeline.stopwords:
            continue
        if len(token) < pipeline.min_token_length:
            continue
        out.append(porter.stem(token))
    return out


@dataclass(frozen=True)
class NBModel:
    priors: dict[str, float]
    word_counts: dict[str, dict[str, int]]
    class_totals: dict[str, int]
    vocabulary: frozenset[str]

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def word_log_prob(self, word: str, label: str) -> float:
        count = self.word_counts[label].get(word, 0)
        return math.log((1 + count) / (self.vocab_size + self.class_totals[label]))


def train_nb(docs_per_class: dict[str, list[list[str]]]) -> NBModel:
    """Fit priors and smoothed word counts from tokenized documents."""
    n_total = sum(len(docs) for docs in docs_per_class.values())
    for label, docs in docs_per_class.items():
        if not docs:
            raise ConfigError(f"class {label!r} has no training documents")
    priors = {label: len(docs) / n_total for label, docs in docs_per_class.items()}
    word_counts: dict[str, dict[str, int]] = {}
    class_totals: dict[str, int] = {}
    vocab: set[str] = set()
    for label, docs in docs_per_class.items():
        counts: dict[str, int] = {}
        total = 0
        for tokens in docs:
            for tok in tokens:
                counts[tok] = counts.get(tok, 0) + 1
                total += 1
        word_counts[label] = counts
        class_totals[label] = total
        vocab.update(counts)
    return NBModel(priors, word_counts, class_totals, frozenset(vocab))


def nb_log_score(model: NBModel, label: str, tokens: list[str]) -> float:
    """log P(class) + sum of log smoothed word probabilities."""
    score = math.log(model.priors[label])
    vocab_size = model.vocab_size
    total = model.class_totals[label]
    counts = model.word_counts[label]
    denom = vocab_size + total
    for tok in tokens:
        score += math.log((1 + counts.get(tok, 0)) / denom)
    return score


@dataclass(frozen=True)
class NBVerdict:
    label: str
    hsr: float


def nb_classify(model: NBModel, tokens: list[str], th: float) -> NBVerdict:
    """Ham iff exp(log ham - log spam) >= th (ties go to ham)."""
    log_ham = nb_log_score(model, HAM, tokens)
    log_spam = nb_log_score(model, SPAM, tokens)
    hsr = ratio_from_logs(log_ham, log_spam)
    return NBVerdict(HAM if hsr >= th else SPAM, hsr)


def ratio_from_logs(log_ham: float, log_spam: float) -> float:
    diff = log_ham - log_spam
    if diff > 700.0:
        return math.inf
    if diff < -700.0:
        return 0.0
    return math.exp(diff)


def save_model(model: NBModel, path: str) -> None:
    data = {
        "priors": model.priors,
        "word_counts": model.word_counts,
        "class_totals": model.class_totals,
        "vocab_size": model.vocab_size,
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
