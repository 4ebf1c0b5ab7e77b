import json
import random

import pytest

from stfilter.corpus import EmailDataSet, Message, stratified_folds
from stfilter.errors import ConfigError, EvaluationError
from stfilter.evaluation import (
    Confusion,
    NBClassifier,
    STClassifier,
    SweepReport,
    SweepRow,
    breakeven,
    metrics,
    optimal_threshold,
    roc_points,
    run_cv,
    roc_csv,
    summary_dict,
    sweep_csv,
    threshold_grid,
    write_roc_csv,
    write_summary_json,
    write_sweep_csv,
    SWEEP_HEADER,
)
from stfilter.naive_bayes import TokenPipeline
from stfilter.scoring import ScoringConfig


def _eds(spam_texts, ham_texts, name="toy", seed=0):
    messages = [
        Message("", t, "spam", f"s{i:03d}") for i, t in enumerate(spam_texts)
    ] + [Message("", t, "ham", f"h{i:03d}") for i, t in enumerate(ham_texts)]
    return EmailDataSet(name, seed, tuple(messages))


def _separable_eds(n=30, seed=0):
    return _eds(["xxxxxxxx"] * n, ["yyyyyyyy"] * n, seed=seed)


def _noisy_eds(n=40, seed=5):
    rng = random.Random(seed)
    spam = [
        "".join(rng.choice("abcz") for _ in range(60)) for _ in range(n)
    ]
    ham = ["".join(rng.choice("abcy") for _ in range(60)) for _ in range(n)]
    return _eds(spam, ham, name="noisy", seed=seed)


ST = STClassifier(ScoringConfig(phi="constant", norm="none", depth=4))


class TestMetrics:
    def test_arithmetic(self):
        m = metrics(Confusion(ss=95, sh=5, hs=1, hh=99))
        assert m.sr == pytest.approx(0.95)
        assert m.sp == pytest.approx(95 / 96)
        assert m.hr == pytest.approx(0.99)
        assert m.hp == pytest.approx(99 / 104)
        assert m.tpr == m.sr
        assert m.fpr == pytest.approx(0.01)
        assert m.fnr == pytest.approx(0.05)
        assert m.sum_errors == pytest.approx(0.06)

    def test_degenerate_precision_flagged(self):
        m = metrics(Confusion(ss=0, sh=10, hs=0, hh=10))
        assert m.sr == 0.0
        assert m.sp == 0.0 and not m.sp_defined

    def test_headline_shape_from_implied_confusion(self):
        # 481 spam / 2412 ham with one false positive and twelve misses
        # lands on the headline recall/precision pair (97.50, 99.79)
        m = metrics(Confusion(ss=469, sh=12, hs=1, hh=2411))
        assert m.sr * 100 == pytest.approx(97.50, abs=0.01)
        assert m.sp * 100 == pytest.approx(99.79, abs=0.01)

    def test_zero_spam_tested_rejected(self):
        with pytest.raises(EvaluationError):
            metrics(Confusion(0, 0, 3, 7))

    def test_zero_ham_tested_rejected(self):
        with pytest.raises(EvaluationError):
            metrics(Confusion(3, 7, 0, 0))


class TestThresholdGrid:
    def test_default_grid(self):
        grid = threshold_grid(0.70, 1.30, 0.02)
        assert grid[0] == 0.70 and grid[-1] == 1.30
        assert len(grid) == 31
        assert 1.0 in grid

    def test_bad_grid(self):
        with pytest.raises(ConfigError):
            threshold_grid(0.0, 1.0, 0.1)
        with pytest.raises(ConfigError):
            threshold_grid(1.0, 0.5, 0.1)


class TestRunCV:
    def test_separable_is_perfect(self):
        eds = _separable_eds()
        folds = stratified_folds(eds, 5, seed=1)
        report = run_cv(eds, folds, ST, [1.0])
        assert len(report.rows) == 1
        m = report.rows[0].metrics
        assert m.sr == 1.0 and m.sp == 1.0 and m.sum_errors == 0.0

    def test_confusion_conservation(self):
        eds = _noisy_eds()
        folds = stratified_folds(eds, 4, seed=2)
        report = run_cv(eds, folds, ST, threshold_grid(0.7, 1.3, 0.1))
        for row in report.rows:
            assert row.confusion.total == len(eds.messages)

    def test_threshold_monotonicity_validated(self):
        eds = _noisy_eds()
        folds = stratified_folds(eds, 4, seed=3)
        report = run_cv(
            eds, folds, STClassifier(ScoringConfig(phi="root", norm="none", depth=4))
        )
        fprs = [r.metrics.fpr for r in report.rows]
        fnrs = [r.metrics.fnr for r in report.rows]
        assert fprs == sorted(fprs)
        assert fnrs == sorted(fnrs, reverse=True)

    def test_score_once_equals_per_threshold_runs(self):
        eds = _noisy_eds(n=20)
        folds = stratified_folds(eds, 4, seed=4)
        combined = run_cv(eds, folds, ST, [0.9, 1.0, 1.1])
        for i, th in enumerate([0.9, 1.0, 1.1]):
            single = run_cv(eds, folds, ST, [th])
            assert single.rows[0].confusion == combined.rows[i].confusion

    def test_nb_classifier_path(self):
        eds = _eds(
            ["viagra pills cheap today", "viagra offer cheap pills"] * 8,
            ["meeting agenda notes today", "lunch agenda meeting notes"] * 8,
        )
        folds = stratified_folds(eds, 4, seed=5)
        report = run_cv(eds, folds, NBClassifier(TokenPipeline()), [1.0])
        assert report.rows[0].metrics.sum_errors == 0.0
        assert report.config["type"] == "nb"

    def test_deterministic_repeat(self):
        eds = _noisy_eds()
        folds = stratified_folds(eds, 4, seed=6)
        a = run_cv(eds, folds, ST)
        b = run_cv(eds, folds, ST)
        assert sweep_csv(a) == sweep_csv(b)

    def test_unsorted_thresholds_rejected(self):
        eds = _separable_eds(10)
        folds = stratified_folds(eds, 2, seed=0)
        with pytest.raises(ConfigError):
            run_cv(eds, folds, ST, [1.1, 0.9])

    def test_mismatched_folds_rejected(self):
        eds = _separable_eds(10)
        folds = stratified_folds(_separable_eds(12), 2, seed=0)
        with pytest.raises(ConfigError):
            run_cv(eds, folds, ST, [1.0])

    def test_no_evidence_counted(self):
        # held-out docs share no character with either class profile
        eds = _eds(["xxxx"] * 6 + ["qq"], ["yyyy"] * 6 + ["ww"])
        folds = stratified_folds(eds, 7, seed=3)
        report = run_cv(eds, folds, ST, [1.0])
        assert report.rows[0].no_evidence == 2


def _row(th, ss, sh, hs, hh):
    c = Confusion(ss, sh, hs, hh)
    return SweepRow(th, c, metrics(c), 0)


def _report(rows):
    return SweepReport(tuple(rows), {"type": "st"}, "synthetic", 0, 10)


class TestRocPoints:
    def test_single_row(self):
        report = _report([_row(1.0, 9, 1, 2, 8)])
        assert roc_points(report) == [(0.2, 0.9)]

    def test_dedup_and_sort(self):
        report = _report(
            [_row(0.9, 9, 1, 2, 8), _row(1.0, 9, 1, 2, 8), _row(1.1, 10, 0, 3, 7)]
        )
        assert roc_points(report) == [(0.2, 0.9), (0.3, 1.0)]

    def test_perfect_point_present(self):
        eds = _separable_eds()
        folds = stratified_folds(eds, 5, seed=1)
        report = run_cv(eds, folds, ST)
        assert (0.0, 1.0) in roc_points(report)


class TestOptimalThreshold:
    def test_unique_minimum(self):
        report = _report(
            [_row(0.9, 8, 2, 2, 8), _row(1.0, 9, 1, 1, 9), _row(1.1, 9, 1, 3, 7)]
        )
        opt = optimal_threshold(report)
        assert opt.thresholds == (1.0,)
        assert opt.contiguous
        assert opt.metrics.sum_errors == pytest.approx(0.2)

    def test_contiguous_range(self):
        report = _report(
            [_row(0.9, 10, 0, 0, 10), _row(1.0, 10, 0, 0, 10), _row(1.1, 9, 1, 0, 10)]
        )
        opt = optimal_threshold(report)
        assert opt.thresholds == (0.9, 1.0)
        assert (opt.lo, opt.hi) == (0.9, 1.0)
        assert opt.contiguous

    def test_non_contiguous_tie_flagged(self):
        report = _report(
            [_row(0.9, 9, 1, 1, 9), _row(1.0, 8, 2, 1, 9), _row(1.1, 9, 1, 1, 9)]
        )
        opt = optimal_threshold(report)
        assert opt.thresholds == (0.9, 1.1)
        assert not opt.contiguous


class TestBreakeven:
    def test_perfect_classifier(self):
        report = _report([_row(1.0, 10, 0, 0, 10)])
        be = breakeven(report, "spam")
        assert be.recall == 1.0 and not be.interpolated

    def test_exact_crossing(self):
        # SR = SP = 0.9 at the middle threshold
        report = _report(
            [_row(0.9, 10, 0, 3, 7), _row(1.0, 9, 1, 1, 9), _row(1.1, 5, 5, 0, 10)]
        )
        assert breakeven(report, "spam").recall == pytest.approx(0.9)

    def test_interpolated_crossing(self):
        report = _report([_row(0.9, 9, 1, 3, 7), _row(1.1, 6, 4, 0, 10)])
        be = breakeven(report, "spam")
        assert be.interpolated
        # sr: 0.9 -> 0.6, sp: 0.75 -> 1.0; d = 0.15 -> -0.4: crossing at t=3/11
        assert be.recall == pytest.approx(0.9 - 0.3 * (3 / 11))

    def test_no_crossing(self):
        report = _report([_row(0.9, 9, 1, 0, 10), _row(1.0, 8, 2, 0, 10)])
        be = breakeven(report, "spam")
        assert be.recall is None and "never cross" in be.note

    def test_ham_side(self):
        report = _report([_row(1.0, 10, 0, 0, 10)])
        assert breakeven(report, "ham").recall == 1.0

    def test_bad_class(self):
        with pytest.raises(ConfigError):
            breakeven(_report([_row(1.0, 1, 1, 1, 1)]), "virus")


class TestReports:
    @pytest.fixture()
    def report(self):
        eds = _noisy_eds(n=20)
        folds = stratified_folds(eds, 4, seed=7)
        return run_cv(eds, folds, ST, threshold_grid(0.9, 1.1, 0.1))

    def test_sweep_csv_shape(self, report):
        lines = sweep_csv(report).strip().split("\n")
        assert lines[0] == SWEEP_HEADER
        assert len(lines) == 1 + len(report.rows)
        first = lines[1].split(",")
        assert len(first) == 14
        assert first[0] == "0.900000"

    def test_roc_csv_shape(self, report):
        lines = roc_csv(report).strip().split("\n")
        assert lines[0] == "fpr,tpr"
        for line in lines[1:]:
            fpr, tpr = map(float, line.split(","))
            assert 0.0 <= fpr <= 1.0 and 0.0 <= tpr <= 1.0

    def test_summary_keys(self, report):
        s = summary_dict(report)
        assert set(s) == {
            "eds", "seed", "folds", "config", "optimal_threshold",
            "metrics_at_1.0", "metrics_at_optimal", "breakeven_spam", "breakeven_ham",
        }
        assert s["metrics_at_1.0"]["threshold"] == 1.0

    def test_files_byte_identical_across_runs(self, tmp_path, report):
        eds = _noisy_eds(n=20)
        folds = stratified_folds(eds, 4, seed=7)
        again = run_cv(eds, folds, ST, threshold_grid(0.9, 1.1, 0.1))
        for writer, name in [
            (write_sweep_csv, "sweep.csv"),
            (write_roc_csv, "roc.csv"),
            (write_summary_json, "summary.json"),
        ]:
            writer(report, str(tmp_path / f"a_{name}"))
            writer(again, str(tmp_path / f"b_{name}"))
            assert (tmp_path / f"a_{name}").read_bytes() == (
                tmp_path / f"b_{name}"
            ).read_bytes()

    def test_summary_json_parses(self, tmp_path, report):
        path = tmp_path / "summary.json"
        write_summary_json(report, str(path))
        data = json.loads(path.read_text())
        assert data["eds"] == "noisy"


def test_validate_rejects_nonmonotone_fpr():
    rows = [_row(0.9, 9, 1, 2, 8), _row(1.0, 9, 1, 1, 9)]  # FPR drops 0.2 -> 0.1
    report = _report(rows)
    with pytest.raises(EvaluationError):
        report.validate()
