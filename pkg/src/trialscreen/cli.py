"""Command-line entry point: fetch -> parse -> filter -> train/evaluate -> report.

Exit codes are a stable contract: 0 success, 1 usage or input error,
2 partial failure (e.g. some manifest ids could not be fetched).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import backend as backend_mod
from . import classifier, evaluation, io as tsio, keywords, parser as parser_mod, registry
from .errors import TrialScreenError

DEFAULTS = {
    "k": 5,
    "seed": 42,  # fold seed
    "train_seed": 0,  # training seed
    "rate": 3.0,
    "backend": "builtin",
    "batch_size": 32,
    "threshold": 0.5,
}


def _effective(args: argparse.Namespace, keys: list[str]) -> dict:
    """flags > config file > defaults, echoed for reproducibility."""
    config = {}
    if getattr(args, "config", None):
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in config:
            out[key] = config[key]
        else:
            out[key] = DEFAULTS.get(key)
    return out


def _echo_config(cfg: dict, out_path: str | None) -> None:
    line = json.dumps(cfg, sort_keys=True)
    print(f"config: {line}", file=sys.stderr)
    if out_path:
        sidecar = Path(str(out_path) + ".config.json")
        sidecar.write_text(line + "\n", encoding="utf-8")


def _parse_exclusion(name: str) -> keywords.ExclusionType:
    for e in keywords.ExclusionType:
        if e.value.lower() == name.lower():
            return e
    raise SystemExit(f"unknown exclusion {name!r}; choose from "
                     + ", ".join(e.value for e in keywords.ExclusionType))


def _exclusions(name: str) -> list[keywords.ExclusionType]:
    if name.lower() == "all":
        return list(keywords.ExclusionType)
    return [_parse_exclusion(name)]


def _keyword_sets(args) -> dict:
    if getattr(args, "keywords", None):
        return keywords.load_keyword_file(args.keywords)
    return keywords.default_keyword_sets()


class _CorpusLock:
    """Simple directory lock: one writer per corpus_dir."""

    def __init__(self, corpus_dir: Path) -> None:
        self.path = corpus_dir / ".lock"
        self.fd: int | None = None

    def __enter__(self):
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise TrialScreenError(f"corpus locked by another writer: {self.path}")
        return self

    def __exit__(self, *exc):
        if self.fd is not None:
            os.close(self.fd)
            self.path.unlink(missing_ok=True)


def cmd_fetch(args) -> int:
    cfg = _effective(args, ["rate", "seed"])
    manifest = registry.CorpusManifest.load(args.manifest)
    _echo_config({**cfg, "manifest": str(args.manifest), "corpus": str(args.corpus)}, None)
    store = registry.CorpusStore(args.corpus)
    client = registry.RegistryClient(store, base_url=args.registry_url, rate_limit=cfg["rate"])
    with _CorpusLock(store.directory):
        records, failures = client.fetch_batch(manifest)
    for record in records:
        print(f"ok {record.nct_id}")
    for nct_id, exc in failures:
        print(f"error {nct_id}: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 2 if failures else 0


def cmd_parse(args) -> int:
    store = registry.CorpusStore(args.corpus)
    if args.manifest:
        ids = list(registry.CorpusManifest.load(args.manifest).trial_ids)
    else:
        ids = store.list_ids()
    criteria: list[parser_mod.Criterion] = []
    for nct_id in ids:
        criteria.extend(parser_mod.parse_trial(store.load(nct_id)))
    n = tsio.write_criteria(args.out, criteria)
    _echo_config({"corpus": str(args.corpus), "out": str(args.out)}, args.out)
    stats = parser_mod.corpus_stats(criteria)
    print(f"parsed {len(ids)} trials -> {n} criteria "
          f"(max {stats['max_tokens']} tokens)", file=sys.stderr)
    return 0


def cmd_filter(args) -> int:
    criteria = tsio.read_criteria(args.criteria)
    sets = _keyword_sets(args)
    all_matches = []
    for exclusion in _exclusions(args.exclusion):
        all_matches.extend(keywords.filter_corpus(criteria, exclusion, sets))
    n = tsio.write_matches(args.out, all_matches)
    _echo_config({"criteria": str(args.criteria), "exclusion": args.exclusion,
                  "out": str(args.out)}, args.out)
    print(f"{n} candidate criteria", file=sys.stderr)
    return 0


def _candidate_examples(criteria, labels, exclusion, sets):
    by_key = {c.key: c for c in criteria}
    matches = keywords.filter_corpus(criteria, exclusion, sets)
    examples = []
    for m in matches:
        if m.criterion_key not in labels:
            raise TrialScreenError(f"no label for candidate {m.criterion_key}")
        examples.append(
            classifier.LabeledExample(
                m.criterion_key, exclusion,
                by_key[m.criterion_key].tagged_text, labels[m.criterion_key],
            )
        )
    return matches, examples


def cmd_train(args) -> int:
    cfg = _effective(args, ["train_seed"])
    exclusion = _parse_exclusion(args.exclusion)
    criteria = tsio.read_criteria(args.criteria)
    labels = tsio.read_labels(args.labels, exclusion)
    _, examples = _candidate_examples(criteria, labels, exclusion, _keyword_sets(args))
    hp = classifier.Hyperparams(seed=cfg["train_seed"])
    model = classifier.train(examples, hp)
    classifier.save_model(model, args.out)
    _echo_config({**cfg, "exclusion": exclusion.value, "out": str(args.out)}, args.out)
    print(f"trained on {len(examples)} candidates", file=sys.stderr)
    return 0


def _make_backend(args, cfg) -> backend_mod.BuiltinBackend | backend_mod.RemoteBackend:
    if cfg["backend"] == "remote":
        config = backend_mod.BackendConfig(
            kind=backend_mod.BackendKind.REMOTE,
            endpoint=args.endpoint,
            batch_size=cfg["batch_size"],
            threshold=cfg["threshold"],
        )
        return backend_mod.RemoteBackend(config)
    model = classifier.load_model(args.model) if getattr(args, "model", None) else None
    return backend_mod.BuiltinBackend(model=model, threshold=cfg["threshold"])


def cmd_predict(args) -> int:
    cfg = _effective(args, ["backend", "batch_size", "threshold"])
    exclusion = _parse_exclusion(args.exclusion)
    criteria = tsio.read_criteria(args.criteria)
    by_key = {c.key: c for c in criteria}
    matches = keywords.filter_corpus(criteria, exclusion, _keyword_sets(args))
    be = _make_backend(args, cfg)
    texts = [by_key[m.criterion_key].tagged_text for m in matches]
    predictions = backend_mod.predict(
        be, texts, [m.criterion_key for m in matches], exclusion, cfg["threshold"]
    )
    be.close()
    n = tsio.write_predictions(args.out, predictions)
    _echo_config({**cfg, "exclusion": exclusion.value, "out": str(args.out)}, args.out)
    print(f"{n} predictions", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    cfg = _effective(args, ["k", "seed", "train_seed", "backend",
                            "batch_size", "threshold"])
    criteria = tsio.read_criteria(args.criteria)
    sets = _keyword_sets(args)
    trial_ids = sorted({c.trial_id for c in criteria})
    plan = evaluation.make_folds(trial_ids, cfg["k"], cfg["seed"])
    report = {}
    for exclusion in _exclusions(args.exclusion):
        labels = tsio.read_labels(args.labels, exclusion)
        trial_gold = None
        if args.trial_labels:
            trial_gold = tsio.read_trial_labels(args.trial_labels, exclusion)
        if cfg["backend"] == "remote":
            be = backend_mod.BackendConfig(
                kind=backend_mod.BackendKind.REMOTE, endpoint=args.endpoint,
                batch_size=cfg["batch_size"], threshold=cfg["threshold"],
            )
        else:
            be = backend_mod.BackendConfig(threshold=cfg["threshold"])
        entry = evaluation.run_cv(
            criteria, labels, exclusion, plan, be,
            keyword_sets=sets, trial_gold=trial_gold,
            hyperparams=classifier.Hyperparams(seed=cfg["train_seed"]),
            threshold=cfg["threshold"],
        )
        report[exclusion.value] = entry
    rounded = evaluation.round_report(report)
    Path(args.out).write_text(
        json.dumps(rounded, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _echo_config(cfg, args.out)
    return 0


def cmd_kappa(args) -> int:
    exclusion = _parse_exclusion(args.exclusion) if args.exclusion else None
    labels_a = tsio.read_labels(args.labels_a, exclusion)
    labels_b = tsio.read_labels(args.labels_b, exclusion)
    if set(labels_a) != set(labels_b):
        only_a = sorted(set(labels_a) - set(labels_b))[:3]
        only_b = sorted(set(labels_b) - set(labels_a))[:3]
        print(f"annotator files label different criteria "
              f"(e.g. only in A: {only_a}, only in B: {only_b})", file=sys.stderr)
        return 1
    keys = sorted(labels_a)
    stats = evaluation.cohen_kappa([labels_a[k] for k in keys], [labels_b[k] for k in keys])
    suffix = " (degenerate marginals)" if stats.degenerate_marginals else ""
    print(f"n={stats.sample_size} kappa={stats.kappa:.4f} "
          f"accuracy={stats.agreement_accuracy:.4f}{suffix}")
    return 0


def cmd_report(args) -> int:
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    text = evaluation.render_report(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trialscreen", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, keywords_flag=False, config=True):
        if config:
            sp.add_argument("--config", help="JSON config file (flags win)")
        if keywords_flag:
            sp.add_argument("--keywords", help="keyword config file (default: bundled)")

    sp = sub.add_parser("fetch", help="download trials listed in a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--rate", type=float)
    sp.add_argument("--registry-url", help=f"overrides ${registry.BASE_URL_ENV}")
    common(sp)
    sp.set_defaults(func=cmd_fetch)

    sp = sub.add_parser("parse", help="split stored trials into tagged criteria")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--manifest")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("filter", help="keyword-select candidate criteria")
    sp.add_argument("--criteria", required=True)
    sp.add_argument("--exclusion", required=True, help="one exclusion or 'all'")
    sp.add_argument("--out", required=True)
    common(sp, keywords_flag=True)
    sp.set_defaults(func=cmd_filter)

    sp = sub.add_parser("train", help="train the builtin model for one exclusion")
    sp.add_argument("--criteria", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--exclusion", required=True)
    sp.add_argument("--train-seed", type=int, dest="train_seed")
    sp.add_argument("--out", required=True)
    common(sp, keywords_flag=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="score candidate criteria")
    sp.add_argument("--criteria", required=True)
    sp.add_argument("--exclusion", required=True)
    sp.add_argument("--backend", choices=["builtin", "remote"])
    sp.add_argument("--model", help="saved builtin model")
    sp.add_argument("--endpoint", help="host:port or exec:<command>")
    sp.add_argument("--batch-size", type=int, dest="batch_size")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--out", required=True)
    common(sp, keywords_flag=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("evaluate", help="leakage-free k-fold cross-validation")
    sp.add_argument("--criteria", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--trial-labels", dest="trial_labels",
                    help="optional trial-level gold overrides")
    sp.add_argument("--exclusion", required=True, help="one exclusion or 'all'")
    sp.add_argument("--backend", choices=["builtin", "remote"])
    sp.add_argument("--endpoint")
    sp.add_argument("--batch-size", type=int, dest="batch_size")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--seed", type=int, help="fold seed")
    sp.add_argument("--train-seed", type=int, dest="train_seed")
    sp.add_argument("--out", required=True)
    common(sp, keywords_flag=True)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("kappa", help="two-annotator agreement from label files")
    sp.add_argument("--labels-a", required=True, dest="labels_a")
    sp.add_argument("--labels-b", required=True, dest="labels_b")
    sp.add_argument("--exclusion")
    common(sp)
    sp.set_defaults(func=cmd_kappa)

    sp = sub.add_parser("report", help="render a metrics report as a text table")
    sp.add_argument("--report", required=True)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_report)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TrialScreenError, tsio.SchemaError, OSError, json.JSONDecodeError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
