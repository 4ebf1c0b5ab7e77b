"""Cross-validation driver, confusion metrics, threshold sweeps and reports.

Each fold trains on the other k-1 folds and scores its held-out documents
exactly once; per-threshold decisions are then re-derived from the stored
ham/spam ratios, so a sweep costs one scoring pass.  Confusions are summed
over folds before metrics are computed (micro-averaging).  Folds are
independent given the assignment and are processed in fold order, so
results never depend on scheduling.

Metric conventions, with spam the positive class: XY counts true class X
assigned class Y (S=spam, H=ham); SR = SS/(SS+SH) is spam recall = TPR,
SP = SS/(SS+HS) spam precision, FPR = HS/(HH+HS), FNR = 1 - TPR.

Every sweep is checked against the threshold-direction invariant (raising
the threshold can only move documents from ham to spam, so FPR is
non-decreasing and FNR non-increasing); violations raise EvaluationError.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, asdict

import numpy as np

from .corpus import EmailDataSet, FoldAssignment, HAM, SPAM
from .errors import ConfigError, EvaluationError
from .flat import FlatTree
from .naive_bayes import NBModel, TokenPipeline, nb_log_score, preprocess, ratio_from_logs, train_nb
from .scoring import ScoringConfig, score_many, verdict_from_scores


@dataclass(frozen=True)
class STClassifier:
    """Suffix-tree classifier setup for run_cv (threshold comes from the sweep)."""

    config: ScoringConfig

    def describe(self) -> dict:
        return {
            "type": "st",
            "phi": self.config.phi,
            "norm": self.config.norm,
            "depth": self.config.depth,
        }


@dataclass(frozen=True)
class NBClassifier:
    pipeline: TokenPipeline

    def describe(self) -> dict:
        return {"type": "nb", "pipeline": self.pipeline.pipeline_id}


@dataclass(frozen=True)
class Confusion:
    ss: int
    sh: int
    hs: int
    hh: int

    @property
    def total(self) -> int:
        return self.ss + self.sh + self.hs + self.hh


@dataclass(frozen=True)
class MetricSet:
    sr: float
    sp: float
    hr: float
    hp: float
    tpr: float
    fpr: float
    fnr: float
    sum_errors: float
    sp_defined: bool = True
    hp_defined: bool = True


def metrics(c: Confusion) -> MetricSet:
    """Recall/precision for both classes plus TPR/FPR/FNR."""
    n_spam = c.ss + c.sh
    n_ham = c.hs + c.hh
    if n_spam == 0:
        raise EvaluationError("no spam messages tested; metrics are ill-posed")
    if n_ham == 0:
        raise EvaluationError("no ham messages tested; metrics are ill-posed")
    sr = c.ss / n_spam
    sp_defined = (c.ss + c.hs) > 0
    sp = c.ss / (c.ss + c.hs) if sp_defined else 0.0
    hr = c.hh / n_ham
    hp_defined = (c.hh + c.sh) > 0
    hp = c.hh / (c.hh + c.sh) if hp_defined else 0.0
    fpr = c.hs / n_ham
    fnr = 1.0 - sr
    return MetricSet(sr, sp, hr, hp, sr, fpr, fnr, fpr + fnr, sp_defined, hp_defined)


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    confusion: Confusion
    metrics: MetricSet
    no_evidence: int


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]
    config: dict
    eds_name: str
    seed: int
    folds: int

    def row_at(self, threshold: float) -> SweepRow:
        """Row whose threshold is closest to the requested value."""
        return min(self.rows, key=lambda r: abs(r.threshold - threshold))

    def validate(self) -> None:
        total = self.rows[0].confusion.total if self.rows else 0
        prev = None
        for row in self.rows:
            if row.confusion.total != total:
                raise EvaluationError("confusion totals differ across thresholds")
            if prev is not None:
                if row.threshold <= prev.threshold:
                    raise EvaluationError("thresholds are not strictly increasing")
                if row.metrics.fpr < prev.metrics.fpr - 1e-12:
                    raise EvaluationError("FPR decreased as the threshold rose")
                if row.metrics.fnr > prev.metrics.fnr + 1e-12:
                    raise EvaluationError("FNR increased as the threshold rose")
            prev = row


def threshold_grid(lo: float, hi: float, step: float) -> list[float]:
    """Inclusive grid lo, lo+step, ... capped at hi (default 0.70..1.30/0.02)."""
    if lo <= 0 or step <= 0 or hi < lo:
        raise ConfigError(f"bad threshold grid lo={lo} hi={hi} step={step}")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 12) for i in range(n + 1)]


DEFAULT_THRESHOLDS = threshold_grid(0.70, 1.30, 0.02)


def _st_ratios(eds, folds, cfg: ScoringConfig):
    texts = [m.text for m in eds.messages]
    labels = [m.label for m in eds.messages]
    n = len(texts)
    hsr = np.zeros(n, dtype=np.float64)
    noev = np.zeros(n, dtype=bool)
    for f in range(folds.k):
        train = folds.assignments != f
        ham_texts = [texts[i] for i in range(n) if train[i] and labels[i] == HAM]
        spam_texts = [texts[i] for i in range(n) if train[i] and labels[i] == SPAM]
        ham_tree = FlatTree.from_texts(ham_texts, cfg.depth)
        spam_tree = FlatTree.from_texts(spam_texts, cfg.depth)
        test_idx = np.flatnonzero(folds.assignments == f)
        test_texts = [texts[i] for i in test_idx]
        ham_scores = score_many(ham_tree, test_texts, cfg)
        spam_scores = score_many(spam_tree, test_texts, cfg)
        for j, i in enumerate(test_idx):
            v = verdict_from_scores(float(ham_scores[j]), float(spam_scores[j]), 1.0)
            hsr[i] = v.hsr
            noev[i] = v.no_evidence
    return np.array([lab == SPAM for lab in labels]), hsr, noev


def _nb_ratios(eds, folds, pipeline: TokenPipeline):
    tokens = [preprocess(m.text, pipeline) for m in eds.messages]
    labels = [m.label for m in eds.messages]
    n = len(tokens)
    hsr = np.zeros(n, dtype=np.float64)
    for f in range(folds.k):
        train = folds.assignments != f
        model: NBModel = train_nb(
            {
                SPAM: [tokens[i] for i in range(n) if train[i] and labels[i] == SPAM],
                HAM: [tokens[i] for i in range(n) if train[i] and labels[i] == HAM],
            }
        )
        for i in np.flatnonzero(folds.assignments == f):
            log_ham = nb_log_score(model, HAM, tokens[i])
            log_spam = nb_log_score(model, SPAM, tokens[i])
            hsr[i] = ratio_from_logs(log_ham, log_spam)
    noev = np.zeros(n, dtype=bool)
    return np.array([lab == SPAM for lab in labels]), hsr, noev


def run_cv(
    eds: EmailDataSet,
    folds: FoldAssignment,
    classifier: STClassifier | NBClassifier,
    thresholds: list[float] | None = None,
) -> SweepReport:
    """k-fold cross-validation with a threshold sweep over stored ratios."""
    thresholds = list(DEFAULT_THRESHOLDS if thresholds is None else thresholds)
    if not thresholds or sorted(thresholds) != thresholds:
        raise ConfigError("thresholds must be a nonempty ascending list")
    if len(folds.assignments) != len(eds.messages):
        raise ConfigError("fold assignment does not match the data set")
    if isinstance(classifier, STClassifier):
        is_spam, hsr, noev = _st_ratios(eds, folds, classifier.config)
    else:
        is_spam, hsr, noev = _nb_ratios(eds, folds, classifier.pipeline)
    rows = []
    n_noev = int(noev.sum())
    for th in thresholds:
        pred_ham = noev | (hsr >= th)
        ss = int(np.count_nonzero(is_spam & ~pred_ham))
        sh = int(np.count_nonzero(is_spam & pred_ham))
        hs = int(np.count_nonzero(~is_spam & ~pred_ham))
        hh = int(np.count_nonzero(~is_spam & pred_ham))
        c = Confusion(ss, sh, hs, hh)
        rows.append(SweepRow(th, c, metrics(c), n_noev))
    report = SweepReport(
        rows=tuple(rows),
        config=classifier.describe(),
        eds_name=eds.name,
        seed=eds.seed,
        folds=folds.k,
    )
    report.validate()
    return report


def roc_points(report: SweepReport) -> list[tuple[float, float]]:
    """Deduplicated (FPR, TPR) pairs sorted by FPR then TPR."""
    return sorted({(r.metrics.fpr, r.metrics.tpr) for r in report.rows})


@dataclass(frozen=True)
class OptimalThreshold:
    thresholds: tuple[float, ...]  # all minimisers of FPR+FNR
    contiguous: bool
    metrics: MetricSet

    @property
    def lo(self) -> float:
        return self.thresholds[0]

    @property
    def hi(self) -> float:
        return self.thresholds[-1]


def optimal_threshold(report: SweepReport) -> OptimalThreshold:
    """Threshold(s) minimising the sum of errors; ties become a range."""
    best = min(r.metrics.sum_errors for r in report.rows)
    tied = [
        (i, r)
        for i, r in enumerate(report.rows)
        if abs(r.metrics.sum_errors - best) <= 1e-12
    ]
    indices = [i for i, _ in tied]
    contiguous = indices == list(range(indices[0], indices[-1] + 1))
    return OptimalThreshold(
        thresholds=tuple(r.threshold for _, r in tied),
        contiguous=contiguous,
        metrics=tied[0][1].metrics,
    )


@dataclass(frozen=True)
class Breakeven:
    recall: float | None
    interpolated: bool
    note: str = ""


def breakeven(report: SweepReport, which: str = SPAM) -> Breakeven:
    """Highest recall at which recall equals precision across the sweep.

    With no exact equality on the grid, the sign change of recall-precision
    between adjacent thresholds is interpolated linearly and flagged.
    """
    if which == SPAM:
        pairs = [(r.metrics.sr, r.metrics.sp) for r in report.rows]
    elif which == HAM:
        pairs = [(r.metrics.hr, r.metrics.hp) for r in report.rows]
    else:
        raise ConfigError(f"breakeven class must be 'spam' or 'ham', got {which!r}")
    exact = [rec for rec, prec in pairs if abs(rec - prec) <= 1e-9]
    if exact:
        return Breakeven(max(exact), interpolated=False)
    crossings = []
    for (r0, p0), (r1, p1) in zip(pairs, pairs[1:]):
        d0, d1 = r0 - p0, r1 - p1
        if d0 * d1 < 0:
            t = d0 / (d0 - d1)
            crossings.append(r0 + t * (r1 - r0))
    if not crossings:
        return Breakeven(
            None, False, "recall and precision never cross in the sweep range"
        )
    return Breakeven(max(crossings), interpolated=True)


# ---------------------------------------------------------------------------
# Report files.  Float fields are fixed to six decimals so identical runs
# serialize to identical bytes.
# ---------------------------------------------------------------------------

SWEEP_HEADER = "threshold,SS,SH,HS,HH,SR,SP,HR,HP,TPR,FPR,FNR,sum_errors,no_evidence"


def atomic_write(path: str, content: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)
    os.replace(tmp, path)


def sweep_csv(report: SweepReport) -> str:
    lines = [SWEEP_HEADER]
    for r in report.rows:
        c, m = r.confusion, r.metrics
        lines.append(
            f"{r.threshold:.6f},{c.ss},{c.sh},{c.hs},{c.hh},"
            f"{m.sr:.6f},{m.sp:.6f},{m.hr:.6f},{m.hp:.6f},"
            f"{m.tpr:.6f},{m.fpr:.6f},{m.fnr:.6f},{m.sum_errors:.6f},{r.no_evidence}"
        )
    return "\n".join(lines) + "\n"


def write_sweep_csv(report: SweepReport, path: str) -> None:
    atomic_write(path, sweep_csv(report))


def roc_csv(report: SweepReport) -> str:
    lines = ["fpr,tpr"]
    for fpr, tpr in roc_points(report):
        lines.append(f"{fpr:.6f},{tpr:.6f}")
    return "\n".join(lines) + "\n"


def write_roc_csv(report: SweepReport, path: str) -> None:
    atomic_write(path, roc_csv(report))


def _metrics_dict(m: MetricSet) -> dict:
    d = asdict(m)
    return {k: (round(v, 12) if isinstance(v, float) else v) for k, v in d.items()}


def summary_dict(report: SweepReport) -> dict:
    opt = optimal_threshold(report)
    at_one = report.row_at(1.0)
    be_spam = breakeven(report, SPAM)
    be_ham = breakeven(report, HAM)
    return {
        "eds": report.eds_name,
        "seed": report.seed,
        "folds": report.folds,
        "config": report.config,
        "optimal_threshold": {
            "lo": opt.lo,
            "hi": opt.hi,
            "contiguous": opt.contiguous,
            "thresholds": list(opt.thresholds),
        },
        "metrics_at_1.0": {"threshold": at_one.threshold, **_metrics_dict(at_one.metrics)},
        "metrics_at_optimal": _metrics_dict(opt.metrics),
        "breakeven_spam": {
            "recall": be_spam.recall,
            "interpolated": be_spam.interpolated,
            "note": be_spam.note,
        },
        "breakeven_ham": {
            "recall": be_ham.recall,
            "interpolated": be_ham.interpolated,
            "note": be_ham.note,
        },
    }


def write_summary_json(report: SweepReport, path: str) -> None:
    atomic_write(path, json.dumps(summary_dict(report), indent=2, sort_keys=True) + "\n")
