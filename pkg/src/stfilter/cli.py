"""Command-line surface: build profiles, classify files, run experiments.

Commands
--------
build        build a class tree profile from a directory of messages
classify     score message files against a ham and a spam profile
eval         run a cross-validated threshold sweep from a spec file
compose-eds  compose an email data set and write its manifest
folds        stratified fold assignment for a composed data set

Experiment specs are JSON files rather than flag soup so whole result
tables can be scripted as spec directories.  Exit codes: 0 success, 2
usage/validation problems, 3 violated evaluation invariants.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

from . import corpus, evaluation, suffix_tree
from .errors import ConfigError, ContractError, EvaluationError
from .flat import FlatTree
from .naive_bayes import TokenPipeline, load_stopword_file
from .scoring import ScoringConfig, classify as score_file
from .suffix_tree import load_profile, save_profile


def _expect_keys(obj: dict, required: set[str], optional: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(obj) - required - optional
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"missing keys {sorted(missing)} in {where}")


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"spec file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None


def _load_sources(sources_spec: dict) -> dict[str, list[corpus.Message]]:
    pool = {}
    for name, src in sources_spec.items():
        _expect_keys(src, {"path", "kind"}, set(), f"source {name!r}")
        kind = src["kind"]
        if kind == "mixed":
            pool[name] = corpus.load_mixed_dir(src["path"])
        elif kind in (corpus.SPAM, corpus.HAM):
            pool[name] = corpus.load_single_class_dir(src["path"], kind)
        else:
            raise ConfigError(
                f"source {name!r} kind must be 'mixed', 'spam' or 'ham', got {kind!r}"
            )
    return pool


def _eds_from_spec(eds_spec: dict, default_name: str, default_seed: int) -> corpus.EmailDataSet:
    if "spam_dir" in eds_spec or "ham_dir" in eds_spec:
        _expect_keys(eds_spec, {"spam_dir", "ham_dir"}, {"name"}, "eds")
        messages = corpus.load_labeled_dir(eds_spec["spam_dir"], eds_spec["ham_dir"])
        return corpus.EmailDataSet(
            eds_spec.get("name", default_name), default_seed, tuple(messages)
        )
    _expect_keys(eds_spec, {"name", "seed", "sources", "spam", "ham"}, set(), "eds")
    _expect_keys(eds_spec["spam"], {"source", "count"}, set(), "eds.spam")
    pool = _load_sources(eds_spec["sources"])
    ham_sources = []
    for i, h in enumerate(eds_spec["ham"]):
        _expect_keys(h, {"source", "count"}, set(), f"eds.ham[{i}]")
        ham_sources.append((h["source"], int(h["count"])))
    spec = corpus.EdsSpec(
        name=eds_spec["name"],
        spam_source=(eds_spec["spam"]["source"], int(eds_spec["spam"]["count"])),
        ham_sources=tuple(ham_sources),
        seed=int(eds_spec["seed"]),
    )
    return corpus.compose_eds(pool, spec)


def _classifier_from_spec(spec: dict):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("classifier spec needs a 'type' of 'st' or 'nb'")
    if spec["type"] == "st":
        _expect_keys(spec, {"type"}, {"phi", "norm", "depth"}, "classifier")
        cfg = ScoringConfig(
            phi=spec.get("phi", "constant"),
            norm=spec.get("norm", "none"),
            depth=int(spec.get("depth", 8)),
            threshold=1.0,
        )
        return evaluation.STClassifier(cfg)
    if spec["type"] == "nb":
        _expect_keys(spec, {"type"}, {"stopword_file", "min_token_length"}, "classifier")
        kwargs = {}
        if spec.get("stopword_file"):
            kwargs["stopwords"] = load_stopword_file(spec["stopword_file"])
        if "min_token_length" in spec:
            kwargs["min_token_length"] = int(spec["min_token_length"])
        return evaluation.NBClassifier(TokenPipeline(**kwargs))
    raise ConfigError(f"unknown classifier type {spec['type']!r}")


def _input_digest(eds: corpus.EmailDataSet) -> str:
    h = hashlib.sha256()
    for m in sorted(eds.messages, key=lambda m: m.source_id):
        h.update(m.source_id.encode("utf-8"))
        h.update(b"\x00")
        h.update((m.label or "").encode("utf-8"))
        h.update(b"\x00")
        h.update(m.text.encode("utf-8"))
        h.update(b"\x01")
    return h.hexdigest()


def cmd_build(args) -> int:
    texts = [m.text for m in corpus.load_dir_messages(args.input)]
    if not texts:
        raise ConfigError(f"no message files under {args.input}")
    if not 1 <= args.depth <= suffix_tree.MAX_DEPTH:
        raise ConfigError(f"depth must be in [1, {suffix_tree.MAX_DEPTH}], got {args.depth}")
    tree = FlatTree.from_texts(texts, args.depth)
    save_profile(tree, args.out)
    print(f"node_count {tree.node_count}")
    print(f"frequency_sum {tree.frequency_sum}")
    print(f"char_count {tree.char_count}")
    print(f"wrote {args.out}")
    return 0


def _format_hsr(verdict) -> str:
    if verdict.no_evidence:
        return "no-evidence"
    if math.isinf(verdict.hsr):
        return "inf"
    return f"{verdict.hsr:.6f}"


def cmd_classify(args) -> int:
    try:
        ham_tree = load_profile(args.ham_profile)
        spam_tree = load_profile(args.spam_profile)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load profile: {exc}") from None
    shared = min(ham_tree.depth_limit, spam_tree.depth_limit)
    depth = args.depth if args.depth is not None else shared
    if depth > shared:
        raise ConfigError(
            f"requested depth {depth} exceeds shared profile depth {shared}"
        )
    cfg = ScoringConfig(phi=args.phi, norm=args.norm, depth=depth, threshold=args.threshold)
    for path in args.inputs:
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ConfigError(str(exc)) from None
        msg = corpus.parse_email(raw, source_id=path)
        v = score_file(ham_tree, spam_tree, msg.text, cfg)
        print(
            f"{path}\t{v.label}\t{_format_hsr(v)}\t{v.ham_score:.6f}\t{v.spam_score:.6f}"
        )
    return 0


def cmd_eval(args) -> int:
    spec = _load_json(args.spec)
    _expect_keys(
        spec,
        {"name", "eds", "classifier", "folds", "seed", "output_dir"},
        {"thresholds"},
        "experiment spec",
    )
    seed = int(spec["seed"])
    eds = _eds_from_spec(spec["eds"], spec["name"], seed)
    classifier = _classifier_from_spec(spec["classifier"])
    th_spec = spec.get("thresholds", {"lo": 0.70, "hi": 1.30, "step": 0.02})
    _expect_keys(th_spec, {"lo", "hi", "step"}, set(), "thresholds")
    thresholds = evaluation.threshold_grid(
        float(th_spec["lo"]), float(th_spec["hi"]), float(th_spec["step"])
    )
    folds = corpus.stratified_folds(eds, int(spec["folds"]), seed)
    report = evaluation.run_cv(eds, folds, classifier, thresholds)

    out_dir = spec["output_dir"] if args.out_dir is None else args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    evaluation.write_sweep_csv(report, os.path.join(out_dir, "sweep.csv"))
    evaluation.write_roc_csv(report, os.path.join(out_dir, "roc.csv"))
    evaluation.write_summary_json(report, os.path.join(out_dir, "summary.json"))
    manifest = {
        "spec": spec,
        "seed": seed,
        "input_sha256": _input_digest(eds),
        "eds": eds.manifest(),
    }
    evaluation.atomic_write(
        os.path.join(out_dir, "manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )

    at_one = report.row_at(1.0)
    opt = evaluation.optimal_threshold(report)
    m1, mo = at_one.metrics, opt.metrics
    print(
        f"th={at_one.threshold:.2f}: SR={m1.sr:.4f} SP={m1.sp:.4f} "
        f"FPR={m1.fpr:.4f} FNR={m1.fnr:.4f} sum_errors={m1.sum_errors:.4f}"
    )
    rng = f"{opt.lo:.2f}" if opt.lo == opt.hi else f"{opt.lo:.2f}-{opt.hi:.2f}"
    print(
        f"optimal th={rng}: FPR={mo.fpr:.4f} FNR={mo.fnr:.4f} "
        f"sum_errors={mo.sum_errors:.4f}"
    )
    print(f"wrote {out_dir}/sweep.csv, roc.csv, summary.json, manifest.json")
    return 0


def cmd_compose_eds(args) -> int:
    spec = _load_json(args.spec)
    eds = _eds_from_spec(spec, "custom", int(spec.get("seed", 0)))
    corpus.save_manifest(eds, args.out)
    print(f"{eds.name}: {eds.spam_count} spam + {eds.ham_count} ham -> {args.out}")
    return 0


def cmd_folds(args) -> int:
    manifest = corpus.load_manifest(args.manifest)
    labels = [e["label"] for e in manifest["entries"]]
    assignment = corpus.folds_from_labels(labels, args.k, args.seed)
    payload = {
        "k": assignment.k,
        "seed": args.seed,
        "assignments": [int(x) for x in assignment.assignments],
    }
    evaluation.atomic_write(args.out, json.dumps(payload, indent=2) + "\n")
    print(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stfilter",
        description="Character-level spam filtering with suffix tree class profiles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a class tree profile from a directory")
    p.add_argument("--input", required=True, help="directory of message files (one class)")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--out", required=True, help="profile JSON path")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("classify", help="classify message files against two profiles")
    p.add_argument("--ham-profile", required=True)
    p.add_argument("--spam-profile", required=True)
    p.add_argument("--phi", default="constant", help="significance function")
    p.add_argument("--norm", default="none", help="match normalisation")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("inputs", nargs="+", help="message files to classify")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", help="run a cross-validated threshold sweep")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("--out-dir", default=None, help="override the spec's output_dir")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compose-eds", help="compose a data set and write its manifest")
    p.add_argument("--spec", required=True, help="eds spec JSON")
    p.add_argument("--out", required=True, help="manifest JSON path")
    p.set_defaults(func=cmd_compose_eds)

    p = sub.add_parser("folds", help="stratified fold assignment from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_folds)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EvaluationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
