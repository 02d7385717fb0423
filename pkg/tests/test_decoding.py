import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multinorm import decoding
from multinorm.decoding import (DEFAULT_GRID, BeamConfig, FusionWeights, PrefixScorer, beam_decode,
                                greedy_decode, random_prefix_scorer, sequence_score, tune_weights,
                                two_level_beam)
from multinorm.errors import ConfigurationError, InputError
from multinorm.hllm import train_ngram
from multinorm.synthetic import SymbolTable, fusion_flip_case

SYMBOLS = ["E", "|", "c", "d"]
LM = train_ngram([["c", "d"], ["cd"], ["c", "c", "d"]], order=3)


def tiny(seed, max_length=4):
    return random_prefix_scorer(4, seed, eos=0, seg=1, max_length=max_length, symbols=SYMBOLS)


def oracle_score(scorer, seq, lm=None, w=FusionWeights()):
    """Fused score recomputed from scratch: step log-probs plus the LM over segments."""
    state, prev, nmt = scorer.initial(), scorer.bos, 0.0
    for k in list(seq) + [scorer.eos]:
        logp, state = scorer.step(state, prev)
        nmt += logp[k]
        prev = k
    if lm is None:
        return w.nmt * nmt
    text = "".join(scorer.symbols[k] for k in seq)
    segs = [s or "<unk>" for s in text.split("|")]
    return w.nmt * nmt + w.lm * lm.sentence_logprob(segs)


def exhaustive_best(scorer, lm=None, w=FusionWeights()):
    best = None
    body = [k for k in range(scorer.vocab_size) if k != scorer.eos]
    for n in range(scorer.max_length):
        for seq in itertools.product(body, repeat=n):
            s = oracle_score(scorer, seq, lm, w)
            if best is None or s > best[0]:
                best = (s, list(seq))
    return best


@pytest.fixture
def checked(monkeypatch):
    monkeypatch.setattr(decoding, "CHECK_INVARIANTS", True)


@pytest.mark.parametrize("seed", range(20))
def test_wide_beam_finds_exhaustive_argmax(seed, checked):
    scorer = tiny(seed)
    score, seq = exhaustive_best(scorer)
    res = beam_decode(scorer, BeamConfig(256))
    assert res.symbols == seq
    assert res.score == pytest.approx(score, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_wide_fused_beam_finds_exhaustive_argmax(seed, checked):
    scorer, w = tiny(seed), FusionWeights(1.0, 0.7)
    score, seq = exhaustive_best(scorer, LM, w)
    res = two_level_beam(scorer, LM, w, BeamConfig(256))
    assert res.symbols == seq
    assert res.score == pytest.approx(score, abs=1e-9)


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.integers(2, 5), st.floats(0, 2))
def test_beam_never_scores_below_greedy(seed, width, lam):
    # finished outputs outrank capped ones, so compare scores among finished outputs
    scorer = tiny(seed, max_length=6)
    w = FusionWeights(1.0, lam)
    pairs = [(greedy_decode(scorer), beam_decode(scorer, BeamConfig(width))),
             (two_level_beam(scorer, LM, w, BeamConfig(1)), two_level_beam(scorer, LM, w, BeamConfig(width)))]
    for g, b in pairs:
        if not g.truncated:
            assert not b.truncated
            assert b.score >= g.score - 1e-12
        elif not b.truncated:
            continue
        else:
            assert b.score >= g.score - 1e-12


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_greedy_is_beam_of_one(seed):
    scorer = tiny(seed, max_length=6)
    g, b = greedy_decode(scorer), beam_decode(scorer, BeamConfig(1))
    assert (g.symbols, g.score, g.truncated) == (b.symbols, b.score, b.truncated)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_zero_lm_weight_is_plain_beam(seed, width):
    scorer = tiny(seed, max_length=6)
    a = beam_decode(scorer, BeamConfig(width))
    b = two_level_beam(scorer, LM, FusionWeights(1.0, 0.0), BeamConfig(width))
    assert a.symbols == b.symbols and a.score == b.score


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.integers(1, 4), st.floats(0, 3))
def test_invariants_hold_on_random_decodes(seed, width, lam):
    decoding.CHECK_INVARIANTS = True
    try:
        two_level_beam(tiny(seed, max_length=7), LM, FusionWeights(1.0, lam), BeamConfig(width))
    finally:
        decoding.CHECK_INVARIANTS = False


def test_result_score_matches_recomputation():
    w = FusionWeights(0.8, 1.3)
    finished = 0
    for seed in range(40):
        scorer = tiny(seed, max_length=6)
        res = two_level_beam(scorer, LM, w, BeamConfig(3))
        if res.truncated:
            continue
        finished += 1
        assert res.score == pytest.approx(oracle_score(scorer, res.symbols, LM, w), abs=1e-9)
        assert res.score == pytest.approx(sequence_score(scorer, res.symbols, LM, w), abs=1e-9)
    assert finished >= 10


def test_decoding_is_deterministic():
    a = two_level_beam(tiny(9, 6), LM, FusionWeights(1, 0.4), BeamConfig(3))
    b = two_level_beam(tiny(9, 6), LM, FusionWeights(1, 0.4), BeamConfig(3))
    assert a == b


def test_no_end_within_cap_is_flagged_truncated():
    def never_end(prefix):
        return [0.0, 0.1, 0.9]

    scorer = PrefixScorer(never_end, ["E", "|", "a"], eos=0, seg=1, bos=-1, max_length=5)
    res = beam_decode(scorer, BeamConfig(2))
    assert res.truncated and len(res.symbols) == 5
    assert greedy_decode(scorer).truncated


def test_ties_break_on_smallest_index_sequence():
    def flat(prefix):
        return [0.25] * 4 if len(prefix) < 2 else [1.0, 0, 0, 0]

    scorer = PrefixScorer(flat, SYMBOLS, eos=0, seg=1, bos=-1, max_length=3)
    # every length-0 sequence ends immediately with probability 1/4; the empty output wins
    assert beam_decode(scorer, BeamConfig(8)).symbols == []


def test_fusion_flip_case():
    scorer, lm, gold = fusion_flip_case()
    table = SymbolTable(scorer.symbols)
    plain = beam_decode(scorer, BeamConfig(3)).text(table)
    assert plain == "q|z"
    assert two_level_beam(scorer, lm, FusionWeights(1, 2.0), BeamConfig(3)).text(table) == gold
    gold_lm = lm.sentence_logprob(["q", "y"])
    assert gold_lm > lm.sentence_logprob(["q", "z"])
    # once the LM overturns the choice it stays overturned for every larger weight
    outputs = [two_level_beam(scorer, lm, FusionWeights(1, lam), BeamConfig(3)).text(table)
               for lam in DEFAULT_GRID]
    first = outputs.index(gold)
    assert all(o == gold for o in outputs[first:])
    assert all(o == "q|z" for o in outputs[:first])


def test_tuning_selects_positive_weight_on_flip_case():
    scorer, lm, gold = fusion_flip_case()
    res = tune_weights([scorer], [gold], lm, SymbolTable(scorer.symbols), BeamConfig(3))
    assert res.weights.lm > 0
    assert res.accuracy == 1.0
    assert dict(res.trace)[0.0] == 0.0


def test_tuning_keeps_zero_when_plain_is_best():
    scorer, lm, _ = fusion_flip_case()
    res = tune_weights([scorer], ["q|z"], lm, SymbolTable(scorer.symbols), BeamConfig(3))
    assert res.weights == FusionWeights(1.0, 0.0)
    assert res.accuracy == 1.0
    assert "lambda_lm\t0" in res.report()


@settings(max_examples=10)
@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=4), st.data())
def test_tuned_accuracy_never_below_zero_weight(seeds, data):
    scorers = [tiny(s, max_length=5) for s in seeds]
    golds = [data.draw(st.sampled_from(["c", "d", "c|d", "cd", ""])) for _ in seeds]
    res = tune_weights(scorers, golds, LM, SymbolTable(SYMBOLS), BeamConfig(2),
                       grid=(0.0, 0.5, 1.0, 2.0))
    assert res.accuracy >= dict(res.trace)[0.0]


def test_tuning_errors():
    with pytest.raises(InputError):
        tune_weights([], [], LM, SymbolTable(SYMBOLS))
    with pytest.raises(InputError):
        tune_weights([tiny(0)], [], LM, SymbolTable(SYMBOLS))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        FusionWeights(0, 0)
    with pytest.raises(ConfigurationError):
        FusionWeights(1, -0.1)
    with pytest.raises(ConfigurationError):
        BeamConfig(0)
    with pytest.raises(ConfigurationError):
        two_level_beam(tiny(0), None, FusionWeights(1, 1))


def test_default_grid():
    assert DEFAULT_GRID[0] == 0.0 and DEFAULT_GRID[-1] == 2.0 and len(DEFAULT_GRID) == 41
    assert all(math.isclose(b - a, 0.05) for a, b in zip(DEFAULT_GRID, DEFAULT_GRID[1:]))


def test_empty_segment_is_scored_as_unknown():
    def pipe_then_end(prefix):
        return [0.0, 1.0, 0.0, 0.0] if not prefix else [1.0, 0.0, 0.0, 0.0]

    scorer = PrefixScorer(pipe_then_end, SYMBOLS, eos=0, seg=1, bos=-1, max_length=4)
    res = two_level_beam(scorer, LM, FusionWeights(1.0, 1.0), BeamConfig(2))
    assert res.segments == ["<unk>", "<unk>"]
    assert res.lm == pytest.approx(LM.sentence_logprob(["<unk>", "<unk>"]))
