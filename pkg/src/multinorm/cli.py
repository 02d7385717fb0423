"""Command-line entry point: ``multinorm <subcommand> ...``."""
from __future__ import annotations

import argparse
import glob
import logging
import os
import sys

from . import __version__
from .config import RunConfig, load_config_file, resolve
from .corpus import (build_feature_vocab, build_vocab, is_type_level, lexicon_records, load_corpus,
                     read_predictions, read_segments, segment_examples, task_boundary, write_predictions)
from .decoding import BeamConfig, FusionWeights, beam_decode, tune_weights, two_level_beam
from .errors import ConfigurationError, InputError
from .evaluation import TrainLexicon, baseline_predict, breakdown_report, word_accuracy
from .hllm import NgramModel, train_ngram
from .seq2seq import Seq2SeqModel, make_scorer, predicts_pos, uses_context
from .train import train_ensemble
from .vocab import split_segments

log = logging.getLogger("multinorm")
SUPPRESS = argparse.SUPPRESS


def _run_flags(p, *names):
    """Flags that override RunConfig fields; absent flags leave the field alone."""
    flag_kwargs = {
        "task": dict(choices=["normalization", "lemmatization", "segmentation"]),
        "variant": dict(), "data": dict(), "out": dict(),
        "char_emb": dict(type=int), "pos_emb": dict(type=int), "hidden": dict(type=int),
        "context_hidden": dict(type=int), "ensemble": dict(type=int), "max_epochs": dict(type=int),
        "patience": dict(type=int), "alpha": dict(type=float), "beam": dict(type=int),
        "lm_order": dict(type=int), "lm_smoothing": dict(choices=["witten_bell", "kneser_ney"]),
        "lambda_lm": dict(type=float), "learning_rate": dict(type=float),
        "clip_norm": dict(type=float), "seed": dict(type=int),
        "precision": dict(choices=["float64", "float32"]), "max_context": dict(type=int),
    }
    for name in names:
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=SUPPRESS, **flag_kwargs[name])


def build_parser():
    parser = argparse.ArgumentParser(prog="multinorm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"multinorm {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train an ensemble")
    _run_flags(p, "task", "variant", "data", "out", "char_emb", "pos_emb", "hidden", "context_hidden",
               "ensemble", "max_epochs", "patience", "alpha", "learning_rate", "clip_norm", "seed",
               "precision", "max_context")

    p = sub.add_parser("decode", parents=[common], help="decode a split with trained models")
    p.add_argument("--models", required=True, help="directory of *.ckpt files or one checkpoint")
    p.add_argument("--split", default="test", choices=["train", "dev", "test"])
    p.add_argument("--lm", help="segment language model (from lm-train)")
    _run_flags(p, "variant", "data", "out", "beam", "lambda_lm")

    p = sub.add_parser("tune", parents=[common], help="tune the LM weight on dev accuracy")
    p.add_argument("--models", required=True)
    p.add_argument("--lm", required=True)
    p.add_argument("--split", default="dev", choices=["train", "dev", "test"])
    _run_flags(p, "data", "out", "beam")

    p = sub.add_parser("evaluate", parents=[common], help="accuracy breakdown by word category")
    p.add_argument("--systems", required=True, help="comma-separated prediction files")
    p.add_argument("--names", help="comma-separated column names (default: file names)")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--tsv", help="also write machine-readable rows here")
    p.add_argument("--case-insensitive", dest="case_insensitive", action="store_true", default=SUPPRESS)
    _run_flags(p, "task")

    p = sub.add_parser("baseline", parents=[common], help="POS lookup baseline predictions")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    _run_flags(p, "task", "out", "seed")

    p = sub.add_parser("lm-train", parents=[common], help="train a segment language model")
    p.add_argument("--unit", choices=["morpheme", "word"], help="default follows the task")
    p.add_argument("--arpa", help="also write an ARPA dump")
    _run_flags(p, "task", "data", "out", "lm_order", "lm_smoothing")

    sub.add_parser("gradcheck", parents=[common], help="gradient verification suite")
    return parser


def _resolve(args):
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    fields = RunConfig.__dataclass_fields__
    overrides = {k: v for k, v in vars(args).items() if k in fields}
    return resolve(file_values, overrides)


def _require(cfg, *names):
    for n in names:
        if getattr(cfg, n) is None:
            raise ConfigurationError(f"--{n.replace('_', '-')} is required")


def _records(path):
    return [r for seg in read_segments(path) for r in seg]


# -- subcommands -------------------------------------------------------------------

def cmd_train(args, cfg):
    _require(cfg, "data", "out")
    data = load_corpus(cfg.data)
    if uses_context(cfg.variant) and is_type_level(data.train):
        raise ConfigurationError(
            f"variant {cfg.variant} needs sentence context but the corpus has single-token segments")
    src, tgt, tags = build_vocab(data.train, cfg.boundary)
    feats = build_feature_vocab(data.train) if predicts_pos(cfg.variant) else None
    ctx = uses_context(cfg.variant)
    train = [ex for seg in data.train for ex in segment_examples(seg, ctx)]
    dev = [ex for seg in data.dev for ex in segment_examples(seg, ctx)]
    os.makedirs(cfg.out, exist_ok=True)
    log_path = os.path.join(cfg.out, "train.log")
    results = train_ensemble(lambda seed: Seq2SeqModel(cfg.model_config(seed), src, tgt, tags, feats),
                             train, dev, cfg.train_config(), cfg.member_seeds())
    with open(log_path, "w", encoding="utf-8") as fh:
        for k, res in enumerate(results):
            fh.write(f"# member {k} seed {res.model.config.seed} best_epoch {res.best_epoch}\n")
            fh.write(res.log_text())
    for k, res in enumerate(results):
        res.model.save(os.path.join(cfg.out, f"model{k}.ckpt"), {"task": cfg.task})
    with open(os.path.join(cfg.out, "run.conf"), "w", encoding="utf-8") as fh:
        fh.write(cfg.to_text())
    print(f"trained {len(results)} member(s); best dev accuracy "
          + ", ".join(f"{r.best_accuracy:.4f}" for r in results))
    return 0


def load_models(path):
    paths = sorted(glob.glob(os.path.join(path, "*.ckpt"))) if os.path.isdir(path) else [path]
    if not paths:
        raise InputError(f"no checkpoints in {path}")
    models = [Seq2SeqModel.load(p) for p in paths]
    variants = {m.variant for m in models}
    if len(variants) != 1:
        raise ConfigurationError(f"ensemble mixes variants {sorted(variants)}")
    return models


def _split_examples(cfg, models, split):
    data = load_corpus(cfg.data)
    segs = data.split(split)
    if not segs:
        raise InputError(f"split {split!r} is empty")
    ctx = uses_context(models[0].variant)
    if ctx and is_type_level(segs):
        raise ConfigurationError(f"variant {models[0].variant} needs sentence context")
    records = [r for seg in segs for r in seg]
    examples = [ex for seg in segs for ex in segment_examples(seg, ctx)]
    return records, examples


def _task_of(models, cfg):
    return models[0].extra_header.get("task", cfg.task)


def cmd_decode(args, cfg):
    _require(cfg, "data")
    models = load_models(args.models)
    if "variant" in vars(args) and args.variant != models[0].variant:
        raise ConfigurationError(f"--variant {args.variant} but the checkpoints are {models[0].variant}")
    boundary = task_boundary(_task_of(models, cfg))
    records, examples = _split_examples(cfg, models, args.split)
    lm = NgramModel.load(args.lm) if args.lm else None
    beam = BeamConfig(cfg.beam)
    preds = []
    for ex in examples:
        scorer = make_scorer(models, ex, "predicted")
        if lm is not None and cfg.lambda_lm > 0:
            res = two_level_beam(scorer, lm, FusionWeights(1.0, cfg.lambda_lm), beam)
        else:
            res = beam_decode(scorer, beam)
        preds.append(res.text(models[0].tgt_vocab, boundary))
    out = cfg.out or "-"
    if out == "-":
        for r, p in zip(records, preds):
            print(f"{r.segment_id}\t{r.position}\t{r.source}\t{p}")
    else:
        write_predictions(out, records, preds)
    acc = word_accuracy(preds, [r.target for r in records], not cfg.case_insensitive)
    print(f"word accuracy {acc:.4f} on {len(records)} tokens", file=sys.stderr)
    return 0


def cmd_tune(args, cfg):
    _require(cfg, "data")
    models = load_models(args.models)
    boundary = task_boundary(_task_of(models, cfg))
    records, examples = _split_examples(cfg, models, args.split)
    lm = NgramModel.load(args.lm)
    scorers = [make_scorer(models, ex, "predicted") for ex in examples]
    result = tune_weights(scorers, [r.target for r in records], lm, models[0].tgt_vocab,
                          BeamConfig(cfg.beam), boundary=boundary)
    text = result.report()
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def cmd_evaluate(args, cfg):
    boundary = cfg.boundary
    lex = TrainLexicon.build(lexicon_records(read_segments(args.train)), boundary)
    test = _records(args.test)
    items = [(r.source, r.target, "+".join(r.pos) if r.pos else None) for r in test]
    paths = [p for p in args.systems.split(",") if p]
    names = args.names.split(",") if args.names else [os.path.basename(p) for p in paths]
    if len(names) != len(paths):
        raise InputError("--names must list one name per system file")
    systems = {}
    for name, path in zip(names, paths):
        pred = read_predictions(path)
        missing = [(r.segment_id, r.position) for r in test if (r.segment_id, r.position) not in pred]
        if missing:
            raise InputError(f"{path}: no prediction for {len(missing)} test token(s), e.g. {missing[0]}")
        systems[name] = [pred[(r.segment_id, r.position)] for r in test]
    task = "segmentation" if cfg.task == "segmentation" else "normalization"
    report = breakdown_report(lex, systems, items, task=task, boundary=boundary,
                              case_sensitive=not cfg.case_insensitive)
    print(report.to_text(), end="")
    if args.tsv:
        with open(args.tsv, "w", encoding="utf-8") as fh:
            fh.write(report.to_tsv())
    return 0


def cmd_baseline(args, cfg):
    lex = TrainLexicon.build(lexicon_records(read_segments(args.train)), cfg.boundary)
    test = _records(args.test)
    preds = [baseline_predict(lex, r.source, "+".join(r.pos) if r.pos else None, cfg.seed) for r in test]
    if cfg.out:
        write_predictions(cfg.out, test, preds)
    else:
        for r, p in zip(test, preds):
            print(f"{r.segment_id}\t{r.position}\t{r.source}\t{p}")
    acc = word_accuracy(preds, [r.target for r in test], not cfg.case_insensitive)
    print(f"baseline word accuracy {acc:.4f} on {len(test)} tokens", file=sys.stderr)
    return 0


def cmd_lm_train(args, cfg):
    _require(cfg, "data", "out")
    unit = args.unit or ("morpheme" if cfg.task == "segmentation" else "word")
    boundary = "|" if unit == "morpheme" else " "
    path = os.path.join(cfg.data, "train.tsv") if os.path.isdir(cfg.data) else cfg.data
    corpus = [split_segments(r.target, boundary) for r in _records(path)]
    lm = train_ngram(corpus, order=cfg.lm_order, smoothing=cfg.lm_smoothing)
    lm.save(cfg.out)
    if args.arpa:
        lm.write_arpa(args.arpa)
    print(f"{unit} {cfg.lm_order}-gram model on {len(corpus)} targets, "
          f"{len(lm.vocabulary)} types -> {cfg.out}")
    return 0


def cmd_gradcheck(args, cfg):
    from .verify import run_suite
    results = run_suite(report=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


COMMANDS = {"train": cmd_train, "decode": cmd_decode, "tune": cmd_tune, "evaluate": cmd_evaluate,
            "baseline": cmd_baseline, "lm-train": cmd_lm_train, "gradcheck": cmd_gradcheck}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _resolve(args)
        print(f"multinorm {__version__} {args.command}", file=sys.stderr)
        print(cfg.to_text(), end="", file=sys.stderr)
        return COMMANDS[args.command](args, cfg)
    except (InputError, ConfigurationError, OSError, FloatingPointError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
