"""Scoring documents against class trees and the ham/spam ratio decision.

A *match* is the longest prefix of a document suffix that exists as a root
path in a class tree.  Each matched character contributes the significance
of its conditional probability; the summed significance is then adjusted by
the chosen match normalisation.  A document's score is the sum over all of
its suffixes, and classification takes the ratio of the two class scores
(hsr = ham / spam) against a threshold: ham iff hsr >= threshold.

The per-match operations here walk the object tree directly and serve as
the readable reference; :func:`document_score` runs the batch kernel over
the flat array form.  The tests hold the two routes equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Counter as CounterT
from collections import Counter

import numpy as np

from . import kernels
from .errors import ConfigError, ContractError
from .flat import FlatTree
from .suffix_tree import ClassTree, Node, find_node, tree_stats

SIGNIFICANCE_KINDS = ("constant", "linear", "square", "root", "logit", "sigmoid")
MATCH_NORMS = ("none", "permutation", "length")

PHI_CODES = {name: code for code, name in enumerate(SIGNIFICANCE_KINDS)}
NORM_CODES = {
    "none": kernels.NORM_NONE,
    "permutation": kernels.NORM_PERMUTATION,
    "length": kernels.NORM_LENGTH,
}

SPAM = "spam"
HAM = "ham"


@dataclass(frozen=True)
class ScoringConfig:
    """Significance function, match normalisation, walk depth and threshold."""

    phi: str = "constant"
    norm: str = "none"
    depth: int = 8
    threshold: float = 1.0

    def __post_init__(self):
        if self.phi not in SIGNIFICANCE_KINDS:
            raise ConfigError(f"unknown significance function {self.phi!r}")
        if self.norm not in MATCH_NORMS:
            raise ConfigError(f"unknown match normalisation {self.norm!r}")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if not (self.threshold > 0 and math.isfinite(self.threshold)):
            raise ConfigError(f"threshold must be positive and finite, got {self.threshold}")


def significance(kind: str, p: float) -> float:
    """phi[p] for a conditional probability p in (0, 1]."""
    if kind not in PHI_CODES:
        raise ConfigError(f"unknown significance function {kind!r}")
    if not (0.0 < p <= 1.0):
        raise ContractError(f"significance expects p in (0, 1], got {p}")
    return float(kernels.phi_value(PHI_CODES[kind], p))


@dataclass(frozen=True)
class Match:
    """Maximal tree path that prefixes a document suffix (possibly empty)."""

    path: str
    node: Node | None

    def __len__(self):
        return len(self.path)


def longest_match(tree: ClassTree, s: str, max_len: int | None = None) -> Match:
    """Longest prefix of s that is a root path of the tree.

    The walk is capped at the tree depth (or max_len if smaller).
    """
    cap = tree.depth_limit if max_len is None else min(max_len, tree.depth_limit)
    node = tree.root
    taken = 0
    for c in s[:cap]:
        nxt = node.children.get(c)
        if nxt is None:
            break
        node = nxt
        taken += 1
    if taken == 0:
        return Match("", None)
    return Match(s[:taken], node)


def _require_present(tree: ClassTree, m: Match) -> Node:
    if not m.path:
        raise ContractError("match is empty")
    node = find_node(tree, m.path)
    if node is None:
        raise ContractError(f"match {m.path!r} is not a path of this tree")
    return node


def permutation_weight(tree: ClassTree, m: Match) -> float:
    """Frequency share of m among root paths using exactly its characters.

    Enumerates the anagram paths by a depth-first walk constrained to the
    remaining character multiset; m itself always belongs to the set, so the
    weight is in (0, 1].
    """
    node = _require_present(tree, m)
    remaining: CounterT[str] = Counter(m.path)
    total = _anagram_sum(tree.root, remaining, len(m.path))
    return node.frequency / total


def _anagram_sum(node: Node, remaining: CounterT[str], left: int) -> int:
    if left == 0:
        return node.frequency
    total = 0
    for c, child in node.children.items():
        if remaining[c] > 0:
            remaining[c] -= 1
            total += _anagram_sum(child, remaining, left - 1)
            remaining[c] += 1
    return total


def length_weight(tree: ClassTree, m: Match) -> float:
    """Frequency share of m among all paths of the same length."""
    node = _require_present(tree, m)
    level_sum = tree_stats(tree).per_level_frequency_sums[len(m.path)]
    return node.frequency / level_sum


def match_score(tree: ClassTree, m: Match, cfg: ScoringConfig) -> float:
    """nu(m|T) * sum of significances of the conditional probabilities along m."""
    if not m.path:
        return 0.0
    node = tree.root
    sig = 0.0
    for c in m.path:
        child = node.children[c]
        denom = sum(sib.frequency for sib in node.children.values())
        sig += significance(cfg.phi, child.frequency / denom)
        node = child
    if cfg.norm == "none":
        return sig
    if cfg.norm == "permutation":
        return sig * permutation_weight(tree, m)
    return sig * length_weight(tree, m)


def _as_flat(tree: ClassTree | FlatTree) -> FlatTree:
    return tree if isinstance(tree, FlatTree) else tree.flat()


def score_many(tree: ClassTree | FlatTree, docs, cfg: ScoringConfig) -> np.ndarray:
    """Document scores for a batch, via the compiled kernel."""
    flat = _as_flat(tree)
    if cfg.depth > flat.depth:
        raise ConfigError(
            f"scoring depth {cfg.depth} exceeds tree depth {flat.depth}"
        )
    return flat.score(docs, cfg.depth, PHI_CODES[cfg.phi], NORM_CODES[cfg.norm])


def document_score(tree: ClassTree | FlatTree, doc: str, cfg: ScoringConfig) -> float:
    """Sum of match scores over every suffix of doc."""
    return float(score_many(tree, [doc], cfg)[0])


@dataclass(frozen=True)
class Verdict:
    label: str  # "ham" or "spam"
    hsr: float  # may be +inf
    ham_score: float
    spam_score: float
    no_evidence: bool = False


def verdict_from_scores(ham_score: float, spam_score: float, threshold: float) -> Verdict:
    """Threshold decision on the ham/spam score ratio.

    spam=0 with ham>0 gives hsr=+inf (ham); ham=0 with spam>0 gives hsr=0
    (spam); both zero is ham with the no-evidence flag; a tie at the
    threshold is ham.
    """
    if spam_score == 0.0 and ham_score == 0.0:
        return Verdict(HAM, math.inf, ham_score, spam_score, no_evidence=True)
    if spam_score == 0.0:
        return Verdict(HAM, math.inf, ham_score, spam_score)
    hsr = ham_score / spam_score
    label = HAM if hsr >= threshold else SPAM
    return Verdict(label, hsr, ham_score, spam_score)


def classify(
    ham_tree: ClassTree | FlatTree,
    spam_tree: ClassTree | FlatTree,
    doc: str,
    cfg: ScoringConfig,
) -> Verdict:
    """Score doc against both class trees and decide by hsr vs threshold."""
    ham_score = document_score(ham_tree, doc, cfg)
    spam_score = document_score(spam_tree, doc, cfg)
    return verdict_from_scores(ham_score, spam_score, cfg.threshold)
