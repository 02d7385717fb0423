"""Train every variant on the synthetic sentence corpora and print the category table.

The corpora are small and generated on the fly (see multinorm.synthetic), so
this runs in a few minutes on a laptop.  Numbers are not comparable to
full-scale results on real corpora.
"""
import argparse
import time

from multinorm.corpus import build_feature_vocab, build_vocab, lexicon_records, to_examples
from multinorm.evaluation import TrainLexicon, baseline_predict, breakdown_report
from multinorm.seq2seq import ModelConfig, Seq2SeqModel, predicts_pos, uses_context
from multinorm.synthetic import disambiguation_corpus
from multinorm.train import TrainConfig, predict, train_model

VARIANTS = ["plain", "context", "gold_pos", "context_gold_pos", "context_predicted_pos"]


def run(mode, seed, epochs, dims):
    train, dev, _ = disambiguation_corpus(seed=seed, mode=mode)
    _, test, _ = disambiguation_corpus(n_train=0, seed=seed + 100, mode=mode)
    src, tgt, tags = build_vocab(train)
    feats = build_feature_vocab(train)
    lex = TrainLexicon.build(lexicon_records(train), boundary=" ")
    test_recs = [r for seg in test for r in seg]
    items = [(r.source, r.target, "+".join(r.pos)) for r in test_recs]
    systems = {"POS-baseline": [baseline_predict(lex, w, t, seed) for w, _, t in items]}
    for variant in VARIANTS:
        ctx = uses_context(variant)
        model = Seq2SeqModel(ModelConfig(variant=variant, seed=seed, **dims), src, tgt, tags,
                             feats if predicts_pos(variant) else None)
        t0 = time.perf_counter()
        res = train_model(model, to_examples(train, ctx), to_examples(dev, ctx),
                          TrainConfig(max_epochs=epochs, patience=10, shuffle_seed=seed))
        systems[variant] = predict(model, to_examples(test, ctx))
        print(f"# {mode} {variant}: best dev {res.best_accuracy:.3f} at epoch {res.best_epoch}"
              f" ({time.perf_counter() - t0:.0f}s)")
    return breakdown_report(lex, systems, items)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mode", choices=["cue", "tag"], default="cue",
                    help="cue: a neighbour word decides; tag: the POS tag decides")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--hidden", type=int, default=32)
    args = ap.parse_args()
    dims = dict(char_emb=16, pos_emb=8, hidden=args.hidden, context_hidden=16)
    print(run(args.mode, args.seed, args.epochs, dims).to_text(), end="")


if __name__ == "__main__":
    main()
