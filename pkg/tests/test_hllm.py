import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multinorm.errors import ConfigurationError, InputError
from multinorm.hllm import BOS, EOS, UNK, NgramModel, train_ngram

segments = st.sampled_from(["A", "B", "C", "D", "E"])
corpora = st.lists(st.lists(segments, min_size=1, max_size=5), min_size=1, max_size=8)


def random_corpus(rng, n=30, types="ABCDEFG"):
    return [list(rng.choice(list(types), size=int(rng.integers(1, 6)))) for _ in range(n)]


def random_history(rng, model, length):
    pool = [s for s in model.vocabulary if s != EOS] + ["never-seen"]
    return [str(rng.choice(pool)) for _ in range(length)]


def test_raw_bigram_ratio():
    lm = train_ngram([["A", "B"], ["A", "C"]], order=2)
    following = sum(c for g, c in lm.counts.items() if len(g) == 2 and g[0] == "A")
    assert lm.counts[("A", "B")] / following == 0.5


def test_witten_bell_by_hand():
    lm = train_ngram([["A", "B"], ["A", "C"]], order=2)
    # unigram tokens A A B C </s> </s>; 4 types; base is uniform over A B C </s> <unk>
    p_uni_b = (1 + 4 * (1 / 5)) / (6 + 4)
    expected = (1 + 2 * p_uni_b) / (2 + 2)
    assert lm.prob(["A"], "B") == pytest.approx(expected, rel=1e-12)
    assert lm.prob(["A"], "B") == pytest.approx(0.34, rel=1e-12)


def test_single_event_corpus_dominates():
    lm = train_ngram([["A"]] * 4, order=3)
    start = lm.score_segment([], "A")
    assert all(start > lm.score_segment([], w) for w in ["zz", EOS])
    ends = {w: lm.score_segment(["A"], w) for w in lm.vocabulary if w != EOS}
    assert lm.score_end(["A"]) > max(ends.values())
    assert lm.prob([BOS, "A"], "unseen") > 0


def test_counts_favour_frequent_continuation():
    lm = train_ngram([["A", "B"]] * 3 + [["A", "C"]])
    assert lm.score_segment(["A"], "B") > lm.score_segment(["A"], "C")


def test_empty_history_is_finite():
    lm = train_ngram([["A", "B"]])
    assert math.isfinite(lm.score_segment([], "B"))
    assert math.isfinite(lm.score_segment([], "never"))


@pytest.mark.parametrize("smoothing", ["witten_bell", "kneser_ney"])
@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_every_history_is_normalised(smoothing, order):
    rng = np.random.default_rng(order)
    lm = train_ngram(random_corpus(rng), order=order, smoothing=smoothing)
    for length in range(order):
        for _ in range(25):
            h = random_history(rng, lm, length)
            total = sum(math.exp(lm.score_segment(h, w)) for w in lm.vocabulary)
            assert abs(total - 1.0) <= 1e-6
            assert all(lm.prob(lm.history_context(h), w) > 0 for w in lm.vocabulary)


def test_unseen_segment_scored_as_unk():
    lm = train_ngram([["A", "B"]])
    assert lm.score_segment(["A"], "xyz") == lm.score_segment(["A"], UNK)


@settings(max_examples=60)
@given(corpora, st.lists(segments, min_size=3, max_size=3), st.integers(1, 3))
def test_more_occurrences_never_lower_probability(corpus, gram, times):
    lm = train_ngram(corpus, order=3)
    h, w = tuple(gram[:2]), gram[2]
    before = lm.prob(h, w)
    lm.add_ngram(gram, times)
    assert lm.prob(h, w) >= before - 1e-15


@pytest.mark.parametrize("smoothing", ["witten_bell", "kneser_ney"])
def test_save_load_scores_bit_identical(tmp_path, smoothing):
    rng = np.random.default_rng(3)
    lm = train_ngram(random_corpus(rng), smoothing=smoothing)
    lm.save(tmp_path / "lm.json")
    again = NgramModel.load(tmp_path / "lm.json")
    for _ in range(50):
        h = random_history(rng, lm, int(rng.integers(0, 4)))
        w = str(rng.choice(lm.vocabulary))
        assert again.score_segment(h, w) == lm.score_segment(h, w)


@pytest.mark.parametrize("smoothing", ["witten_bell", "kneser_ney"])
def test_arpa_entries_reconstruct_probabilities(smoothing):
    rng = np.random.default_rng(4)
    lm = train_ngram(random_corpus(rng, n=15, types="ABCD"), smoothing=smoothing)
    entries = lm.arpa_entries()
    table = {g: (lp, bow) for n in entries for g, lp, bow in entries[n]}

    def arpa_log10(h, w):
        if h + (w,) in table:
            return table[h + (w,)][0]
        bow = table.get(h, (None, None))[1] if h else 0.0
        return (bow or 0.0) + arpa_log10(h[1:], w)

    for h1 in [BOS, "A", "B", "C", "D"]:
        for h2 in ["A", "B", "C", "D"]:
            for w in lm.vocabulary:
                h = (h1, h2)
                assert arpa_log10(h, w) == pytest.approx(math.log10(lm.prob(h, w)), abs=1e-9)


def test_write_arpa_layout(tmp_path):
    lm = train_ngram([["A", "B"], ["B"]])
    path = tmp_path / "lm.arpa"
    lm.write_arpa(path)
    text = path.read_text().splitlines()
    assert text[0] == "\\data\\"
    counts = {int(l.split("=")[0].split()[1]): int(l.split("=")[1]) for l in text if l.startswith("ngram ")}
    for n, k in counts.items():
        start = text.index(f"\\{n}-grams:")
        assert all(line for line in text[start + 1:start + 1 + k])
    assert text[-1] == "\\end\\"


def test_unk_singletons_replaces_rare_segments():
    lm = train_ngram([["A", "B"], ["A", "C"], ["A", "B"]], unk_singletons=True)
    assert "C" not in lm.vocabulary
    assert lm.counts[("A", UNK)] == 1


def test_training_errors():
    with pytest.raises(ConfigurationError):
        NgramModel(order=0)
    with pytest.raises(ConfigurationError):
        NgramModel(smoothing="good_turing")
    with pytest.raises(InputError):
        train_ngram([])
    with pytest.raises(InputError):
        train_ngram([["A", ""]])


def test_multiple_corpora_are_concatenated():
    a, b = [["A", "B"]], [["B", "C"]]
    assert train_ngram(a + b).counts == train_ngram([["A", "B"], ["B", "C"]]).counts
