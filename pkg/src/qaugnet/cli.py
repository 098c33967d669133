"""Command-line entry point.

Subcommands (each takes --seed, --config and --out):

  synth     write a labeled JSONL corpus
  train     80/20 split, fit the TF-IDF vocabulary and train logistic regression
  eval      classification report and confusion matrix on the held-out split
  simulate  drive the corpus through the augmented network simulator
  report    resource experiment: per-iteration counts, bar chart, savings

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import classifier as clf
from . import corpus as cp
from . import metrics, network, report
from .errors import ArtifactMismatch, InputError, QAugError
from .features import Vocabulary, fit_vocabulary, transform_many
from .qkd import EveModel

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

CORPUS_FILE = "corpus.jsonl"
MODEL_FILE = "model.json"
VOCAB_FILE = "vocab.json"
MANIFEST_FILE = "manifest.json"


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "."
    n_private: int = 1000
    n_nonprivate: int = 1000
    train_fraction: float = 0.8
    max_features: int = 5000
    ngram_min: int = 1
    ngram_max: int = 3
    learning_rate: float = clf.TrainConfig.learning_rate
    epochs: int = clf.TrainConfig.epochs
    batch_size: int = clf.TrainConfig.batch_size
    l2_penalty: float = clf.TrainConfig.l2_penalty
    threshold: float = 0.5
    receiver_threshold: Optional[float] = None
    latency_ticks: int = 1
    eve: str = EveModel.NONE.value
    channel_id: int = 1
    sim_sample_min: Optional[int] = None
    sim_sample_max: Optional[int] = None
    iterations: int = 5
    sample_min: int = 500
    sample_max: int = 800

    def train_config(self) -> clf.TrainConfig:
        return clf.TrainConfig(self.learning_rate, self.epochs, self.batch_size,
                               self.l2_penalty, self.seed)


class UsageError(Exception):
    pass


def _coerce(name: str, raw: str):
    fld = next(f for f in dataclasses.fields(RunConfig) if f.name == name)
    kind = str(fld.type)
    if raw.lower() in ("none", "") and "Optional" in kind:
        return None
    try:
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except ValueError as exc:
        raise UsageError(f"config key {name!r}: cannot parse {raw!r}") from exc
    return raw


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    known = {f.name for f in dataclasses.fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise UsageError(f"config line {lineno}: expected key=value")
        if key not in known:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return values


def build_run_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        try:
            values.update(parse_config(Path(args.config).read_text(encoding="utf-8")))
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    for key in ("seed", "out", "n_private", "n_nonprivate"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = RunConfig(**values)
    if cfg.eve not in {e.value for e in EveModel}:
        raise UsageError(f"eve must be one of {[e.value for e in EveModel]}")
    cfg.out = str(Path(cfg.out).resolve())
    return cfg


def _resolve(path: Optional[str], cfg: RunConfig, default: str) -> Path:
    return Path(path).resolve() if path else Path(cfg.out) / default


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def _load_artifacts(cfg: RunConfig, args) -> tuple[clf.LogisticModel, Vocabulary]:
    model = clf.load_model(_resolve(args.model, cfg, MODEL_FILE))
    vocab = Vocabulary.load(_resolve(args.vocab, cfg, VOCAB_FILE))
    if model.vocabulary_hash != vocab.fingerprint():
        raise ArtifactMismatch("model was trained against a different vocabulary")
    if model.dimension != len(vocab):
        raise ArtifactMismatch("model dimension does not match the vocabulary size")
    return model, vocab


# -- subcommands -----------------------------------------------------------------

def cmd_synth(cfg: RunConfig, args) -> int:
    corpus = cp.build_dataset(cfg.n_private, cfg.n_nonprivate, cfg.seed)
    path = _write(Path(cfg.out) / CORPUS_FILE, corpus.to_jsonl())
    print(f"wrote {len(corpus)} records to {path}")
    print(f"label 0: {corpus.count(0)}")
    print(f"label 1: {corpus.count(1)}")
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    corpus_path = _resolve(args.corpus, cfg, CORPUS_FILE)
    corpus = cp.ingest_corpus(corpus_path)
    parts = cp.split(corpus, cfg.train_fraction, cfg.seed)
    texts = [r.text for r in parts.train]
    vocab = fit_vocabulary(texts, cfg.max_features, (cfg.ngram_min, cfg.ngram_max))
    model = clf.fit_matrix(transform_many(texts, vocab), [r.label for r in parts.train],
                           cfg.train_config(), vocab.fingerprint(), cfg.threshold)
    out = Path(cfg.out)
    vocab.save(out / VOCAB_FILE)
    clf.save_model(model, out / MODEL_FILE)
    manifest = {
        "corpus": os.path.relpath(corpus_path, out),
        "corpus_sha256": _sha256(corpus_path),
        "seed": cfg.seed,
        "train_fraction": cfg.train_fraction,
        "vocabulary": vocab.fingerprint(),
        "train_ids": [r.id for r in parts.train],
        "test_ids": [r.id for r in parts.test],
    }
    _write(out / MANIFEST_FILE, json.dumps(manifest) + "\n")
    print(f"trained on {len(parts.train)} records, {len(parts.test)} held out; "
          f"vocabulary {len(vocab)} terms; final loss {model.loss_history[-1]:.4f}")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, args) -> int:
    model, vocab = _load_artifacts(cfg, args)
    manifest_path = _resolve(args.manifest, cfg, MANIFEST_FILE)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("vocabulary") != vocab.fingerprint():
        raise ArtifactMismatch("manifest and vocabulary come from different training runs")
    corpus_path = (manifest_path.parent / manifest["corpus"]).resolve()
    if _sha256(corpus_path) != manifest["corpus_sha256"]:
        raise ArtifactMismatch(f"{corpus_path} changed since training")
    test = cp.ingest_corpus(corpus_path).subset(manifest["test_ids"])
    if not len(test):
        raise InputError("the manifest has an empty test split")
    preds = clf.predict_many(model, transform_many([r.text for r in test], vocab))
    matrix = metrics.confusion(preds.tolist(), [r.label for r in test])
    rep = metrics.report(matrix)
    out = Path(cfg.out)
    table = metrics.render_report(rep)
    _write(out / "classification_report.txt", table)
    _write(out / "classification_report.csv", metrics.report_csv(rep))
    _write(out / "confusion.csv", metrics.confusion_csv(matrix))
    if args.png:
        from .plotting import confusion_heatmap
        confusion_heatmap(matrix, out / "confusion.png")
    print(table, end="")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    model, vocab = _load_artifacts(cfg, args)
    corpus = cp.ingest_corpus(_resolve(args.corpus, cfg, CORPUS_FILE))
    sim = network.SimConfig(
        model, vocab, seed=cfg.seed, sample_min=cfg.sim_sample_min,
        sample_max=cfg.sim_sample_max, latency_ticks=cfg.latency_ticks,
        eve=EveModel(cfg.eve), channel_id=cfg.channel_id,
        receiver_threshold=cfg.receiver_threshold,
    )
    stats, log = network.run_simulation(corpus, sim)
    out = Path(cfg.out)
    payload = {**stats.to_dict(),
               "frame_errors": [{"frame_id": e.frame_id, "error": e.error} for e in log if e.error]}
    _write(out / "sim_stats.json", json.dumps(payload, indent=2) + "\n")
    _write(out / "frame_log.csv", network.frame_log_csv(log))
    print(json.dumps(stats.to_dict()))
    return EXIT_RUNTIME if stats.errors else EXIT_OK


def cmd_report(cfg: RunConfig, args) -> int:
    model, vocab = _load_artifacts(cfg, args)
    corpus = cp.ingest_corpus(_resolve(args.corpus, cfg, CORPUS_FILE))
    its = report.resource_experiment(corpus, model, vocab, cfg.iterations,
                                     cfg.sample_min, cfg.sample_max, cfg.seed)
    out = Path(cfg.out)
    _write(out / "iterations.csv", report.iterations_csv(its))
    if its:
        summary = report.savings(its)
        report.emit_bar_chart(its, out / "resource_chart.svg")
        if args.png:
            from .plotting import resource_bars
            resource_bars(its, out / "resource_chart.png")
        _write(out / "savings.json", json.dumps(summary.to_dict(), indent=2) + "\n")
        print(json.dumps(summary.to_dict()))
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def create_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="seed for every random choice (default 0)")
    common.add_argument("--config", help="key=value run configuration file")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="qaugnet", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="generate a labeled corpus")
    p.add_argument("--n-private", dest="n_private", type=int)
    p.add_argument("--n-nonprivate", dest="n_nonprivate", type=int)

    p = sub.add_parser("train", parents=[common], help="train the privacy classifier")
    p.add_argument("--corpus")

    for name, text in (("eval", "evaluate on the held-out split"),
                       ("simulate", "run the network simulation"),
                       ("report", "run the resource experiment")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--model")
        p.add_argument("--vocab")
        if name == "eval":
            p.add_argument("--manifest")
        else:
            p.add_argument("--corpus")
        if name in ("eval", "report"):
            p.add_argument("--png", action="store_true", help="also render a matplotlib PNG")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_run_config(args)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"qaugnet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QAugError, OSError, ValueError, KeyError) as exc:
        print(f"qaugnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
