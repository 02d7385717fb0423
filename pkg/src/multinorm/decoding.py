"""Character-level beam search with optional segment-level LM fusion.

Scorers expose ``initial()``, ``step(state, prev) -> (log-probs, state)`` and
the attributes ``vocab_size``, ``bos``, ``eos``, ``seg``, ``max_length`` and
``symbols`` (strings for each output index, needed to spell segments for the
language model).

Hypotheses are ranked by ``w_nmt * nmt + w_lm * lm`` where ``nmt`` is the
summed character log-probability and ``lm`` the summed segment-LM
log-probability over *closed* segments.  A segment closes when a hypothesis
emits the boundary symbol or end-of-word; at end-of-word the LM also scores
the end of the segment sequence.  An empty segment is scored as ``<unk>``.
Ties are broken by the emitted index sequence, smallest first.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError
from .hllm import UNK as LM_UNK
from .vocab import symbols_to_target

# Turn on to assert the hypothesis bookkeeping after every expansion.
CHECK_INVARIANTS = False


@dataclass(frozen=True)
class FusionWeights:
    nmt: float = 1.0
    lm: float = 0.0

    def __post_init__(self):
        if self.nmt < 0 or self.lm < 0:
            raise ConfigurationError("fusion weights must be nonnegative")
        if self.nmt == 0 and self.lm == 0:
            raise ConfigurationError("fusion weights cannot both be zero")


@dataclass(frozen=True)
class BeamConfig:
    beam_size: int = 3
    max_length: int | None = None

    def __post_init__(self):
        if self.beam_size < 1:
            raise ConfigurationError(f"beam size must be >= 1, got {self.beam_size}")


@dataclass
class Hypothesis:
    symbols: tuple  # emitted output indices, EOS excluded
    nmt: float
    lm: float
    history: tuple  # closed segments, each a tuple of output indices
    open: tuple  # indices since the last boundary
    state: object
    closed: bool = False

    @property
    def last(self):
        return self.symbols[-1] if self.symbols else None

    def total(self, weights):
        return weights.nmt * self.nmt + weights.lm * self.lm


@dataclass
class DecodeResult:
    symbols: list
    score: float
    nmt: float
    lm: float
    truncated: bool = False
    segments: list = field(default_factory=list)

    def text(self, vocab, boundary=" "):
        return symbols_to_target(vocab.decode(self.symbols), boundary)


def _segment_text(scorer, ids):
    return "".join(scorer.symbols[i] for i in ids) or LM_UNK


def check_hypothesis(h, seg):
    """Bookkeeping invariant: symbols == closed segments joined by SEG (+ SEG + open segment)."""
    rebuilt = []
    for k, s in enumerate(h.history):
        if k:
            rebuilt.append(seg)
        rebuilt.extend(s)
    if not h.closed:
        if h.history:
            rebuilt.append(seg)
        rebuilt.extend(h.open)
    elif h.open:
        raise AssertionError("closed hypothesis still has an open segment")
    if tuple(rebuilt) != h.symbols:
        raise AssertionError(f"hypothesis bookkeeping broken: {h.symbols} vs {tuple(rebuilt)}")


def _expand(scorer, h, logp, new_state, weights, lm, width):
    """Best ``width`` successors of ``h`` under the fused score."""
    V = len(logp)
    nmt = h.nmt + logp
    lm_scores = np.full(V, h.lm)
    seg, eos = scorer.seg, scorer.eos
    hist_text = None
    if lm is not None:
        hist_text = [_segment_text(scorer, s) for s in h.history]
        closing = _segment_text(scorer, h.open)
        seg_lp = lm.score_segment(hist_text, closing)
        lm_scores[seg] = h.lm + seg_lp
        lm_scores[eos] = h.lm + seg_lp + lm.score_end(hist_text + [closing])
    totals = weights.nmt * nmt + weights.lm * lm_scores
    order = np.lexsort((np.arange(V), -totals))[:width]
    out = []
    for k in order:
        k = int(k)
        if k == eos:
            hist = h.history + (h.open,)
            child = Hypothesis(h.symbols, float(nmt[k]), float(lm_scores[k]), hist, (), new_state, True)
        elif k == seg:
            hist = h.history + (h.open,)
            child = Hypothesis(h.symbols + (k,), float(nmt[k]), float(lm_scores[k]), hist, (), new_state)
        else:
            child = Hypothesis(h.symbols + (k,), float(nmt[k]), float(lm_scores[k]), h.history,
                               h.open + (k,), new_state)
        if CHECK_INVARIANTS:
            _check(child, scorer, lm)
        out.append(child)
    return out


def _check(h, scorer, lm):
    check_hypothesis(h, scorer.seg)
    if lm is not None:
        texts = [_segment_text(scorer, s) for s in h.history]
        expected = sum(lm.score_segment(texts[:k], t) for k, t in enumerate(texts))
        if h.closed:
            expected += lm.score_end(texts)
        if not np.isclose(expected, h.lm, rtol=0, atol=1e-9):
            raise AssertionError(f"LM score {h.lm} does not match closed segments ({expected})")


def _search(scorer, beam_size, max_length, lm, weights):
    start = Hypothesis((), 0.0, 0.0, (), (), scorer.initial())
    beam = [start]
    eos = (scorer.eos,)
    key = lambda h: (-h.total(weights), h.symbols + eos if h.closed else h.symbols)
    for _ in range(max_length):
        if all(h.closed for h in beam):
            break
        cands = [h for h in beam if h.closed]
        for h in beam:
            if h.closed:
                continue
            prev = h.last if h.symbols else scorer.bos
            logp, new_state = scorer.step(h.state, prev)
            cands.extend(_expand(scorer, h, logp, new_state, weights, lm, beam_size))
        cands.sort(key=key)
        beam = cands[:beam_size]
    closed = [h for h in beam if h.closed]
    pool = closed or beam
    best = min(pool, key=key)
    return best, not closed


def _result(best, truncated, weights, scorer):
    segs = list(best.history) if best.closed else list(best.history) + [best.open]
    return DecodeResult(list(best.symbols), best.total(weights), best.nmt, best.lm, truncated,
                        [_segment_text(scorer, s) for s in segs])


def _decode(scorer, cfg, lm, weights):
    max_length = cfg.max_length if cfg.max_length is not None else scorer.max_length
    best, truncated = _search(scorer, cfg.beam_size, max_length, lm, weights)
    if cfg.beam_size > 1:
        # guard: beam pruning may lose the greedy path, never return worse than it
        greedy, g_trunc = _search(scorer, 1, max_length, lm, weights)
        if (truncated and not g_trunc) or (
                truncated == g_trunc and greedy.total(weights) > best.total(weights)):
            best, truncated = greedy, g_trunc
    return _result(best, truncated, weights, scorer)


def greedy_decode(scorer, max_length=None):
    """Arg-max chain: at each step emit the most probable symbol (lowest index on ties)."""
    max_length = max_length if max_length is not None else scorer.max_length
    state = scorer.initial()
    prev = scorer.bos
    out = []
    total = 0.0
    for _ in range(max_length):
        logp, state = scorer.step(state, prev)
        k = int(np.argmax(logp))
        total += float(logp[k])
        if k == scorer.eos:
            return DecodeResult(out, total, total, 0.0, False)
        out.append(k)
        prev = k
    return DecodeResult(out, total, total, 0.0, True)


def beam_decode(scorer, cfg=BeamConfig()):
    """Beam search on the character model alone."""
    return _decode(scorer, cfg, None, FusionWeights(1.0, 0.0))


def two_level_beam(scorer, lm, weights, cfg=BeamConfig()):
    """Beam search whose hypotheses are rescored by ``lm`` whenever a segment closes."""
    if lm is None:
        raise ConfigurationError("two-level decoding needs a segment language model")
    return _decode(scorer, cfg, lm, weights)


def sequence_score(scorer, symbols, lm=None, weights=FusionWeights()):
    """Fused score of a complete output (EOS appended), computed step by step."""
    state = scorer.initial()
    prev = scorer.bos
    nmt = 0.0
    for k in list(symbols) + [scorer.eos]:
        logp, state = scorer.step(state, prev)
        nmt += float(logp[k])
        prev = k
    lm_score = 0.0
    if lm is not None:
        segs, cur = [], []
        for k in symbols:
            if k == scorer.seg:
                segs.append(cur)
                cur = []
            else:
                cur.append(k)
        segs.append(cur)
        texts = [_segment_text(scorer, s) for s in segs]
        lm_score = lm.sentence_logprob(texts)
    return weights.nmt * nmt + weights.lm * lm_score


# -- weight tuning ---------------------------------------------------------------

DEFAULT_GRID = tuple(round(0.05 * k, 10) for k in range(41))


@dataclass
class TuneResult:
    weights: FusionWeights
    accuracy: float
    trace: list  # (lambda_lm, dev accuracy) in evaluation order

    def report(self):
        lines = [f"lambda_nmt\t{self.weights.nmt:g}", f"lambda_lm\t{self.weights.lm:g}",
                 f"dev_accuracy\t{self.accuracy:.6f}", "", "lambda_lm\tdev_accuracy"]
        lines += [f"{lam:g}\t{acc:.6f}" for lam, acc in self.trace]
        return "\n".join(lines) + "\n"


def tune_weights(scorers, golds, lm, vocab, cfg=BeamConfig(), grid=DEFAULT_GRID, boundary=" ",
                 refine=True):
    """Line search of the LM weight (NMT weight fixed at 1) on dev word accuracy.

    ``scorers`` holds one prepared scorer per dev item and ``golds`` the gold
    target strings.  Every grid point is evaluated; the best (smallest weight
    on ties) is then refined once by probing the midpoints to its grid
    neighbours.
    """
    scorers = list(scorers)
    golds = list(golds)
    if not scorers:
        raise InputError("tuning needs a nonempty development set")
    if len(scorers) != len(golds):
        raise InputError("scorers and gold targets differ in length")
    grid = sorted(set(float(g) for g in grid))
    if grid[0] != 0.0:
        grid = [0.0] + grid

    def accuracy(lam):
        w = FusionWeights(1.0, lam)
        hits = 0
        for sc, gold in zip(scorers, golds):
            res = two_level_beam(sc, lm, w, cfg) if lam > 0 else beam_decode(sc, cfg)
            hits += res.text(vocab, boundary) == gold
        return hits / len(golds)

    trace = [(lam, accuracy(lam)) for lam in grid]
    best_lam, best_acc = max(trace, key=lambda t: (t[1], -t[0]))
    if refine and len(grid) > 1:
        k = grid.index(best_lam)
        probes = []
        if k > 0:
            probes.append((grid[k - 1] + best_lam) / 2)
        if k + 1 < len(grid):
            probes.append((grid[k + 1] + best_lam) / 2)
        for lam in probes:
            acc = accuracy(lam)
            trace.append((lam, acc))
            if acc > best_acc:
                best_lam, best_acc = lam, acc
    return TuneResult(FusionWeights(1.0, best_lam), best_acc, trace)


# -- scorers for constructed instances ----------------------------------------------

class PrefixScorer:
    """Scorer defined by a function from the emitted prefix to a distribution.

    Handy for constructing models with controlled probabilities.
    """

    def __init__(self, dist_fn, symbols, eos, seg, bos=None, max_length=20):
        self.dist_fn = dist_fn
        self.symbols = list(symbols)
        self.vocab_size = len(self.symbols)
        self.eos, self.seg = eos, seg
        self.bos = bos
        self.max_length = max_length

    def initial(self):
        return ()

    def step(self, state, prev):
        prefix = state if prev == self.bos or prev is None else state + (prev,)
        p = np.asarray(self.dist_fn(prefix), dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.log(p), prefix


def random_prefix_scorer(vocab_size, seed, eos=0, seg=1, max_length=4, symbols=None, sharpness=2.0):
    """Deterministic random model: each prefix gets its own softmax of Gaussian logits."""
    if symbols is None:
        symbols = [chr(ord("a") + i) for i in range(vocab_size)]

    def dist(prefix):
        rng = np.random.default_rng([seed, len(prefix)] + [k + 1 for k in prefix])
        z = rng.normal(scale=sharpness, size=vocab_size)
        z = np.exp(z - z.max())
        return z / z.sum()

    return PrefixScorer(dist, symbols, eos=eos, seg=seg, bos=-1, max_length=max_length)
