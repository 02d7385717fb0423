"""Write the small synthetic corpora under data/ (normalization, lemmatization, segmentation)."""
import argparse
import random
import dataclasses
import os

from multinorm.corpus import DatasetSplit, save_corpus
from multinorm.synthetic import disambiguation_corpus, pairs_to_segments, segmentation_pairs


def relabel(segments, prefix):
    return [[dataclasses.replace(r, segment_id=f"{prefix}{k}") for r in seg]
            for k, seg in enumerate(segments)]


def sentence_task(mode, seed):
    train, dev, _ = disambiguation_corpus(n_train=80, n_dev=20, seed=seed, mode=mode)
    _, test, _ = disambiguation_corpus(n_train=0, n_dev=20, seed=seed + 100, mode=mode)
    return DatasetSplit(relabel(train, "train"), relabel(dev, "dev"), relabel(test, "test"))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    save_corpus(os.path.join(args.out, "normalization"), sentence_task("cue", args.seed))
    save_corpus(os.path.join(args.out, "lemmatization"), sentence_task("tag", args.seed))
    pairs = segmentation_pairs(60, seed=args.seed)
    random.Random(args.seed).shuffle(pairs)
    segs = pairs_to_segments(pairs)
    save_corpus(os.path.join(args.out, "segmentation"),
                DatasetSplit(relabel(segs[:40], "train"), relabel(segs[40:50], "dev"),
                             relabel(segs[50:], "test")))
    print(f"wrote sample corpora under {os.path.abspath(args.out)}")


if __name__ == "__main__":
    main()
