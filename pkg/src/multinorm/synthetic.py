"""Small generated corpora with known structure, used by tests and scripts."""
from __future__ import annotations

from collections import Counter

import numpy as np

from .corpus import TokenRecord
from .decoding import PrefixScorer
from .hllm import train_ngram

SUBSTITUTION = {"c": "k", "q": "k", "x": "ks", "y": "i"}


def substitute(word, table=SUBSTITUTION):
    return "".join(table.get(ch, ch) for ch in word)


def copy_substitution_pairs(n=50, seed=0, alphabet="abcdeqxy", min_len=3, max_len=6):
    """Distinct random words paired with a fixed character rewrite of themselves."""
    rng = np.random.default_rng(seed)
    words = []
    seen = set()
    while len(words) < n:
        length = int(rng.integers(min_len, max_len + 1))
        w = "".join(alphabet[int(k)] for k in rng.integers(0, len(alphabet), size=length))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return [(w, substitute(w)) for w in words]


def pairs_to_segments(pairs, prefix="w"):
    return [[TokenRecord(f"{prefix}{k}", 0, src, tgt)] for k, (src, tgt) in enumerate(pairs)]


STEMS = ("run", "hop", "kind", "walk", "bake", "use")
AFFIXES = (("un", None), (None, "er"), (None, "ness"), (None, "ing"), (None, "s"))


def surface(morphemes):
    """Concatenate morphemes with two spelling rules: consonant doubling and e-deletion."""
    out = ""
    for m in morphemes:
        if out and m[0] in "aeiou":
            if out.endswith("e"):
                out = out[:-1]
            elif len(out) >= 3 and out[-1] not in "aeiouwy" and out[-2] in "aeiou" and out[-3] not in "aeiou":
                out += out[-1]
        out += m
    return out


def segmentation_pairs(n=60, seed=0):
    """Distinct ``(surface word, "m1|m2|...")`` pairs built from a stem and up to two affixes."""
    rng = np.random.default_rng(seed)
    seen, out = set(), []
    for _ in range(50 * n):
        if len(out) == n:
            break
        stem = STEMS[int(rng.integers(len(STEMS)))]
        parts = [stem]
        for k in rng.permutation(len(AFFIXES))[:int(rng.integers(0, 3))]:
            pre, suf = AFFIXES[int(k)]
            if pre and parts[0] != pre:
                parts.insert(0, pre)
            elif suf and not parts[-1] in ("er", "ness", "ing", "s"):
                parts.append(suf)
        canon = "|".join(parts)
        if canon not in seen:
            seen.add(canon)
            out.append((surface(parts), canon))
    return out


# Each ambiguous word has two readings; which one applies is set by a cue
# word (context corpus) or by a POS tag (POS corpus).
AMBIGUOUS = {"ba": ("bat", "bar"), "ko": ("kon", "kom")}
CUES = ("ne", "mi")
FILLERS = ("la", "du", "se", "po", "ti")
FILLER_TARGETS = {w: w + "e" for w in FILLERS}
TAGS = ("N", "V")


def _sentence(rng, sid, focus_word, reading, cue_mode):
    """Filler sentence with the ambiguous word at a random position.

    In ``cue`` mode the word right before the focus is the cue word that
    selects the reading; in ``tag`` mode the focus carries the deciding tag
    and the cue position holds a random filler instead.
    """
    n = int(rng.integers(3, 6))
    i = int(rng.integers(1, n))
    words = [FILLERS[int(k)] for k in rng.integers(0, len(FILLERS), size=n)]
    tags = ["X"] * n
    if cue_mode == "cue":
        words[i - 1] = CUES[reading]
    else:
        tags[i] = TAGS[reading]
    words[i] = focus_word
    recs = []
    for p, w in enumerate(words):
        if p == i:
            tgt = AMBIGUOUS[w][reading]
        elif w in CUES:
            tgt = w
        else:
            tgt = FILLER_TARGETS[w]
        recs.append(TokenRecord(sid, p, w, tgt, (tags[p],)))
    return recs, i


def disambiguation_corpus(n_train=80, n_dev=40, seed=0, mode="cue", majority_skew=0.6):
    """Sentences whose ambiguous word is resolved by a neighbour (``cue``) or a tag (``tag``).

    Training readings are drawn with probability ``majority_skew`` for the
    first reading, so a context-blind system can at best pick the majority.
    Returns ``(train_segments, dev_segments, dev_focus)`` where ``dev_focus``
    lists ``(segment index, position)`` of the ambiguous dev tokens.
    """
    rng = np.random.default_rng(seed)
    words = sorted(AMBIGUOUS)

    def make(n, prefix, skew):
        segs, focus = [], []
        for k in range(n):
            w = words[k % len(words)]
            reading = 0 if rng.random() < skew else 1
            recs, i = _sentence(rng, f"{prefix}{k}", w, reading, mode)
            segs.append(recs)
            focus.append((k, i))
        return segs, focus

    train, _ = make(n_train, "t", majority_skew)
    dev, dev_focus = make(n_dev, "d", 0.5)
    return train, dev, dev_focus


def majority_baseline_accuracy(train, dev, dev_focus, reference="dev"):
    """Accuracy on the ambiguous dev tokens of emitting each word's majority target.

    With ``reference="dev"`` the majority is counted on the evaluated tokens
    themselves, which makes this the best accuracy any context-blind mapping
    from word to target can reach there.  ``reference="train"`` counts it on
    the training sentences instead.
    """
    items = [dev[k][i] for k, i in dev_focus]
    pool = items if reference == "dev" else [r for seg in train for r in seg if r.source in AMBIGUOUS]
    counts = {}
    for r in pool:
        counts.setdefault(r.source, Counter())[r.target] += 1
    hits = 0
    for r in items:
        c = counts.get(r.source)
        if c:
            hits += max(sorted(c), key=lambda t: c[t]) == r.target
    return hits / len(items)


# -- fusion flip -----------------------------------------------------------------

FLIP_SYMBOLS = ["</s>", "|", "q", "y", "z"]


def fusion_flip_case():
    """Character model that prefers ``q|z`` (0.6) over ``q|y`` (0.4), and an LM trained on ``q y``.

    Returns ``(scorer, lm, gold)``; with enough LM weight the fused search
    switches to the gold ``q|y``.
    """
    eos, seg, q, y, z = range(5)

    def dist(prefix):
        p = np.full(5, 1e-3)
        if prefix == ():
            p[q] = 1.0
        elif prefix == (q,):
            p[seg] = 1.0
        elif prefix == (q, seg):
            p[z], p[y] = 0.6, 0.4
        else:
            p[eos] = 1.0
        return p / p.sum()

    scorer = PrefixScorer(dist, FLIP_SYMBOLS, eos=eos, seg=seg, bos=-1, max_length=6)
    lm = train_ngram([["q", "y"]], order=3)
    return scorer, lm, "q|y"


class SymbolTable:
    """Minimal index-to-symbol decoder for scorers built without a Vocabulary."""

    def __init__(self, symbols):
        self.symbols = list(symbols)

    def decode(self, indices):
        return [self.symbols[i] for i in indices]
