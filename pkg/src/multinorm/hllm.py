"""Segment-level n-gram language model (morphemes or words).

Counts are kept for every order up to ``order``.  Each token position of a
training sentence contributes the longest n-gram ending there (``<s>``-padded
on the left, at most ``order`` long) together with all of its suffixes, which
reproduces ordinary all-orders counting.

Two smoothing schemes are available, both interpolating recursively down to
a uniform distribution over the vocabulary (training segment types plus
``<unk>`` and ``</s>``), so every conditional is strictly positive and each
history's distribution sums to one:

* ``witten_bell`` (default):
  ``P(w|h) = (c(h,w) + N1+(h.) P(w|h')) / (c(h) + N1+(h.))``
* ``kneser_ney``: interpolated absolute discounting with continuation
  counts at the lower orders, fixed discount ``D``.

``h'`` drops the oldest history token; histories never seen as a context
back off completely.
"""
from __future__ import annotations

import json
import math
from collections import Counter, defaultdict

from .errors import ConfigurationError, InputError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
SMOOTHING = ("witten_bell", "kneser_ney")


class NgramModel:
    def __init__(self, order=3, smoothing="witten_bell", discount=0.75, unk_singletons=False):
        if order < 1:
            raise ConfigurationError(f"n-gram order must be >= 1, got {order}")
        if smoothing not in SMOOTHING:
            raise ConfigurationError(f"unknown smoothing {smoothing!r}")
        if smoothing == "kneser_ney" and not 0 < discount < 1:
            raise ConfigurationError("Kneser-Ney discount must lie in (0, 1)")
        self.order = int(order)
        self.smoothing = smoothing
        self.discount = float(discount)
        self.unk_singletons = unk_singletons
        self.counts = Counter()  # n-gram tuple -> count, all orders
        self._stats = None

    # -- counting ----------------------------------------------------------

    def add_ngram(self, ngram, count=1):
        """Record ``count`` occurrences of ``ngram`` and of all its suffixes."""
        ngram = tuple(ngram)
        if not 1 <= len(ngram) <= self.order:
            raise InputError(f"n-gram length {len(ngram)} outside 1..{self.order}")
        for k in range(len(ngram)):
            self.counts[ngram[k:]] += count
        self._stats = None

    def add_sentence(self, segments):
        tokens = [BOS] + list(segments) + [EOS]
        for i in range(1, len(tokens)):
            self.add_ngram(tokens[max(0, i - self.order + 1):i + 1])

    @property
    def vocabulary(self):
        """Predictable tokens: seen segment types, ``<unk>`` and ``</s>``."""
        self._ensure_stats()
        return self._stats["vocab"]

    def _ensure_stats(self):
        if self._stats is not None:
            return
        vocab = sorted({g[-1] for g in self.counts if len(g) == 1} | {UNK, EOS})
        ctx_total = Counter()  # c(h): tokens following h
        ctx_types = Counter()  # N1+(h.)
        cont = Counter()  # N1+(.g): distinct left extensions of g
        for g, c in self.counts.items():
            h = g[:-1]
            ctx_total[h] += c
            ctx_types[h] += 1
            if len(g) >= 2:
                cont[g[1:]] += 1
        cont_total = Counter()  # sum over w of N1+(.hw)
        cont_types = Counter()  # distinct w with N1+(.hw) > 0
        for g, c in cont.items():
            cont_total[g[:-1]] += c
            cont_types[g[:-1]] += 1
        self._stats = {"vocab": vocab, "ctx_total": ctx_total, "ctx_types": ctx_types,
                       "cont": cont, "cont_total": cont_total, "cont_types": cont_types}

    # -- probabilities -----------------------------------------------------

    def _map(self, w):
        self._ensure_stats()
        return w if self.counts.get((w,), 0) > 0 or w in (EOS, UNK) else UNK

    def prob(self, context, w):
        """``P(w | context)`` for an explicit context tuple (may contain ``<s>``)."""
        self._ensure_stats()
        context = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        return self._prob(context, self._map(w), top=True)

    def _prob(self, h, w, top):
        st = self._stats
        base = 1.0 / len(st["vocab"])
        if self.smoothing == "witten_bell":
            lower = self._prob(h[1:], w, False) if h else base
            total = st["ctx_total"].get(h, 0)
            if total == 0:
                return lower
            types = st["ctx_types"][h]
            return (self.counts.get(h + (w,), 0) + types * lower) / (total + types)
        lower = self._prob(h[1:], w, False) if h else base
        if top:
            total = st["ctx_total"].get(h, 0)
            types = st["ctx_types"].get(h, 0)
            c = self.counts.get(h + (w,), 0)
        else:
            total = st["cont_total"].get(h, 0)
            types = st["cont_types"].get(h, 0)
            c = st["cont"].get(h + (w,), 0)
        if total == 0:
            return lower
        D = self.discount
        return (max(c - D, 0.0) + D * types * lower) / total

    def history_context(self, history):
        return tuple([BOS] + list(history))

    def score_segment(self, history, segment):
        """Natural-log probability of ``segment`` after the generated ``history``.

        The history is implicitly preceded by the sentence-start marker, so an
        empty history scores a sentence-initial segment.
        """
        return math.log(self.prob(self.history_context(history), segment))

    def score_end(self, history):
        """Log-probability that the segment sequence ends after ``history``."""
        return math.log(self.prob(self.history_context(history), EOS))

    def sentence_logprob(self, segments):
        segments = list(segments)
        total = 0.0
        for k, seg in enumerate(segments):
            total += self.score_segment(segments[:k], seg)
        return total + self.score_end(segments)

    # -- persistence -------------------------------------------------------

    def to_json(self):
        return {
            "format": "multinorm-ngram 1",
            "order": self.order,
            "smoothing": self.smoothing,
            "discount": self.discount,
            "unk_singletons": self.unk_singletons,
            "counts": [[list(g), c] for g, c in sorted(self.counts.items())],
        }

    @classmethod
    def from_json(cls, obj):
        if obj.get("format") != "multinorm-ngram 1":
            raise InputError("not a multinorm n-gram model")
        model = cls(obj["order"], obj["smoothing"], obj["discount"], obj.get("unk_singletons", False))
        for g, c in obj["counts"]:
            model.counts[tuple(g)] = c
        return model

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, ensure_ascii=False)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def arpa_entries(self):
        """``{order: [(ngram, log10 prob, log10 backoff or None), ...]}``.

        Listed n-grams are those with a nonzero count (plus every vocabulary
        unigram).  For an unlisted ``(h, w)`` the probability is
        ``backoff(h) * P(w | h')``, which is exactly the interpolation
        weight of the lower order above.
        """
        self._ensure_stats()
        st = self._stats
        out = defaultdict(list)
        listed = set(self.counts) | {(w,) for w in st["vocab"]} | {(BOS,)}
        for g in sorted(listed, key=lambda g: (len(g), g)):
            if g == (BOS,):
                logp = -99.0
            else:
                logp = math.log10(self._prob(g[:-1], g[-1], top=self._is_top(g)))
            bow = self._backoff(g) if len(g) < self.order else None
            out[len(g)].append((g, logp, bow))
        return dict(out)

    def _is_top(self, g):
        # Witten-Bell uses raw counts at every order; Kneser-Ney only at the
        # highest order and for n-grams starting at <s> (no left extension).
        return self.smoothing == "witten_bell" or len(g) == self.order or g[0] == BOS

    def _backoff(self, h):
        st = self._stats
        if self.smoothing == "witten_bell":
            total = st["ctx_total"].get(h, 0)
            if total == 0:
                return None
            types = st["ctx_types"][h]
            return math.log10(types / (total + types))
        if self._is_top(h + (None,)):
            total, types = st["ctx_total"].get(h, 0), st["ctx_types"].get(h, 0)
        else:
            total, types = st["cont_total"].get(h, 0), st["cont_types"].get(h, 0)
        if total == 0:
            return None
        return math.log10(self.discount * types / total)

    def write_arpa(self, path):
        entries = self.arpa_entries()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\\data\\\n")
            for n in sorted(entries):
                fh.write(f"ngram {n}={len(entries[n])}\n")
            for n in sorted(entries):
                fh.write(f"\n\\{n}-grams:\n")
                for g, logp, bow in entries[n]:
                    line = f"{logp:.6f}\t{' '.join(g)}"
                    if bow is not None:
                        line += f"\t{bow:.6f}"
                    fh.write(line + "\n")
            fh.write("\n\\end\\\n")


def train_ngram(corpus, order=3, smoothing="witten_bell", discount=0.75, unk_singletons=False):
    """Train on an iterable of segment sequences (several corpora may be chained)."""
    corpus = [list(s) for s in corpus]
    if not corpus:
        raise InputError("cannot train an n-gram model on an empty corpus")
    model = NgramModel(order, smoothing, discount, unk_singletons)
    if unk_singletons:
        freq = Counter(seg for sent in corpus for seg in sent)
        corpus = [[seg if freq[seg] > 1 else UNK for seg in sent] for sent in corpus]
    for sent in corpus:
        for seg in sent:
            if not seg:
                raise InputError("segments must be nonempty strings")
        model.add_sentence(sent)
    return model
