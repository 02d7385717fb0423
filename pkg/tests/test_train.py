import numpy as np
import pytest

from multinorm.corpus import build_vocab, to_examples
from multinorm.errors import ConfigurationError, InputError
from multinorm.seq2seq import ModelConfig, Seq2SeqModel, TrainingExample
from multinorm.synthetic import copy_substitution_pairs, pairs_to_segments
from multinorm.train import (TrainConfig, TrainingDiverged, accuracy, make_units, predict, train_ensemble,
                             train_model)

SEGMENTS = pairs_to_segments(copy_substitution_pairs(n=8, seed=1, min_len=2, max_len=4))
EXAMPLES = to_examples(SEGMENTS, with_context=False)
SRC, TGT, TAGS = build_vocab(SEGMENTS)


def build(seed=0, hidden=12):
    return Seq2SeqModel(ModelConfig(seed=seed, char_emb=8, hidden=hidden), SRC, TGT)


def test_loss_falls_during_memorisation():
    losses = []
    train_model(build(), EXAMPLES, EXAMPLES, TrainConfig(max_epochs=20, patience=20),
                on_epoch=lambda rec: losses.append(rec.train_loss))
    deltas = np.diff(losses)
    assert losses[-1] < losses[0]
    assert (deltas < 0).mean() >= 0.9


def test_best_so_far_accuracy_never_decreases():
    res = train_model(build(1), EXAMPLES, EXAMPLES[:4], TrainConfig(max_epochs=8, patience=8))
    best = np.maximum.accumulate([r.dev_accuracy for r in res.log])
    assert np.all(np.diff(best) >= 0)
    assert res.best_accuracy == best[-1]
    assert res.log[res.best_epoch - 1].dev_accuracy == res.best_accuracy


def test_best_state_is_restored():
    model = build(2)
    res = train_model(model, EXAMPLES, EXAMPLES, TrainConfig(max_epochs=6, patience=6))
    assert accuracy(model, EXAMPLES) == res.best_accuracy


def test_patience_stops_training():
    # a dev item the model cannot reach keeps accuracy at zero, so nothing improves after epoch 1
    dev = [TrainingExample("ab", "zzzz")]
    res = train_model(build(3), EXAMPLES, dev, TrainConfig(max_epochs=30, patience=2))
    assert res.stopped_early and len(res.log) == 3 and res.best_epoch == 1


def test_identical_seeds_give_identical_members():
    cfg = TrainConfig(max_epochs=3, patience=3)
    a = train_ensemble(build, EXAMPLES, EXAMPLES, cfg, seeds=(4, 4))
    for name in a[0].model.parameter_names():
        np.testing.assert_array_equal(a[0].model.store[name].data, a[1].model.store[name].data)
    assert a[0].log_text() == a[1].log_text()
    b = train_ensemble(build, EXAMPLES, EXAMPLES, cfg, seeds=(5,))
    assert not np.array_equal(a[0].model.out_W.data, b[0].model.out_W.data)


def test_nan_aborts_member_and_ensemble_keeps_the_rest():
    def build_maybe_broken(seed):
        m = build(seed)
        if seed == 1:
            m.out_W.data[...] = np.nan
        return m

    with pytest.raises(TrainingDiverged):
        train_model(build_maybe_broken(1), EXAMPLES, EXAMPLES, TrainConfig(max_epochs=1))
    results = train_ensemble(build_maybe_broken, EXAMPLES, EXAMPLES, TrainConfig(max_epochs=1), seeds=(0, 1, 2))
    assert [r.model.config.seed for r in results] == [0, 2]
    with pytest.raises(FloatingPointError):
        train_ensemble(build_maybe_broken, EXAMPLES, EXAMPLES, TrainConfig(max_epochs=1), seeds=(1,))


def test_units_group_sentences_for_context_variants():
    ctx = ("a", "b", "a")
    exs = [TrainingExample(t, t, None, ctx, i) for i, t in enumerate(ctx)]
    exs.append(TrainingExample("c", "c", None, ("c",), 0))
    assert [len(u) for u in make_units(exs, "context")] == [3, 1]
    assert [len(u) for u in make_units(exs, "plain")] == [1, 1, 1, 1]
    with pytest.raises(InputError):
        make_units([TrainingExample("a", "a")], "context")


def test_epoch_log_format():
    res = train_model(build(), EXAMPLES[:2], None, TrainConfig(max_epochs=2, patience=2))
    lines = res.log_text().splitlines()
    assert len(lines) == 2 and lines[0].startswith("epoch 1\tloss ") and "\tdev_acc " in lines[0]


def test_predict_accepts_model_or_list():
    m = build()
    assert predict(m, EXAMPLES[:3]) == predict([m], EXAMPLES[:3])


@pytest.mark.parametrize("kw", [dict(max_epochs=0), dict(patience=0), dict(alpha=-0.1), dict(dev_beam=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        TrainConfig(**kw)


def test_empty_training_set():
    with pytest.raises(InputError):
        train_model(build(), [], None)
