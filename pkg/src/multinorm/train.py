"""SGD training with per-epoch shuffling, dev-accuracy early stopping and ensembles."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .context import combined_loss, context_states_for
from .decoding import BeamConfig, beam_decode, greedy_decode
from .errors import ConfigurationError, InputError
from .evaluation import word_accuracy
from .nn import autograd as ag
from .nn.optim import SgdConfig, sgd_step
from .seq2seq import Seq2SeqModel, make_scorer, predicts_pos, sequence_loss, uses_context

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    max_epochs: int = 30
    patience: int = 10
    learning_rate: float = 0.1
    clip_norm: float | None = 5.0
    alpha: float = 0.2
    shuffle_seed: int = 0
    boundary: str = " "
    dev_beam: int = 1
    # stop as soon as dev accuracy reaches this value
    stop_at_accuracy: float | None = None

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be >= 1")
        if self.patience < 1:
            raise ConfigurationError("patience must be >= 1")
        if self.alpha < 0:
            raise ConfigurationError("alpha must be nonnegative")
        if self.dev_beam < 1:
            raise ConfigurationError("dev_beam must be >= 1")

    @property
    def sgd(self):
        return SgdConfig(self.learning_rate, self.clip_norm)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_accuracy: float

    def line(self):
        return f"epoch {self.epoch}\tloss {self.train_loss:.6f}\tdev_acc {self.dev_accuracy:.6f}"


@dataclass
class TrainResult:
    model: Seq2SeqModel
    log: list = field(default_factory=list)
    best_epoch: int = 0
    best_accuracy: float = -1.0
    stopped_early: bool = False

    def log_text(self):
        return "".join(r.line() + "\n" for r in self.log)


def make_units(examples, variant):
    """Group examples into update units.

    Context variants take one step per sentence so the sentence encoding is
    built once; everything else steps per example.
    """
    examples = list(examples)
    if not uses_context(variant):
        return [[ex] for ex in examples]
    units = []
    for ex in examples:
        if ex.context is None:
            raise InputError(f"variant {variant} needs sentence context for {ex.source!r}")
        if units and units[-1][0].context == ex.context:
            units[-1].append(ex)
        else:
            units.append([ex])
    return units


def unit_loss(model, unit, cfg):
    cstates = context_states_for(model, unit[0].context) if uses_context(model.variant) else None
    terms = []
    for ex in unit:
        if predicts_pos(model.variant):
            terms.append(combined_loss(model, ex, cfg.alpha, cfg.boundary, cstates))
        else:
            terms.append(sequence_loss(model, ex, cfg.boundary, cstates))
    return ag.add_n(terms)


def train_epoch(model, units, cfg, rng):
    """One shuffled pass; returns the summed training loss."""
    total = 0.0
    for k in rng.permutation(len(units)):
        loss = unit_loss(model, units[k], cfg)
        value = float(loss.data)
        if not math.isfinite(value):
            raise TrainingDiverged(f"non-finite loss {value} on {units[k][0].source!r}")
        loss.backward()
        sgd_step(model.parameters(), cfg.sgd)
        total += value
    return total


def predict(models, examples, boundary=" ", beam=1, pos_mode="predicted"):
    """Decoded target strings for ``examples`` (greedy when ``beam`` is 1)."""
    if isinstance(models, Seq2SeqModel):
        models = [models]
    vocab = models[0].tgt_vocab
    out = []
    for ex in examples:
        scorer = make_scorer(models, ex, pos_mode)
        res = greedy_decode(scorer) if beam == 1 else beam_decode(scorer, BeamConfig(beam))
        out.append(res.text(vocab, boundary))
    return out


def accuracy(models, examples, boundary=" ", beam=1):
    examples = list(examples)
    return word_accuracy(predict(models, examples, boundary, beam), [ex.target for ex in examples])


def train_model(model, train, dev, cfg=TrainConfig(), on_epoch=None):
    """Train ``model`` in place and restore its best-dev parameters.

    ``dev`` may be empty, in which case training accuracy drives selection.
    """
    train = list(train)
    if not train:
        raise InputError("empty training set")
    dev = list(dev) if dev else train
    units = make_units(train, model.variant)
    rng = np.random.default_rng(cfg.shuffle_seed)
    result = TrainResult(model)
    best_state, since = None, 0
    for epoch in range(1, cfg.max_epochs + 1):
        loss = train_epoch(model, units, cfg, rng)
        acc = accuracy(model, dev, cfg.boundary, cfg.dev_beam)
        rec = EpochRecord(epoch, loss, acc)
        result.log.append(rec)
        log.info(rec.line())
        if on_epoch is not None:
            on_epoch(rec)
        if acc > result.best_accuracy:
            result.best_accuracy, result.best_epoch = acc, epoch
            best_state, since = model.store.state(), 0
        else:
            since += 1
        if cfg.stop_at_accuracy is not None and acc >= cfg.stop_at_accuracy:
            break
        if since >= cfg.patience:
            result.stopped_early = True
            break
    model.store.load_state(best_state)
    return result


def train_ensemble(build_model, train, dev, cfg=TrainConfig(), seeds=(0, 1, 2, 3, 4)):
    """Independently trained members, one per seed.

    ``build_model(seed)`` returns a fresh model.  A member whose loss
    diverges is dropped with a logged diagnostic; if all diverge the last
    error is raised.
    """
    results, error = [], None
    for seed in seeds:
        model = build_model(seed)
        try:
            results.append(train_model(model, train, dev, replace(cfg, shuffle_seed=seed)))
        except FloatingPointError as exc:
            log.error("ensemble member with seed %s aborted: %s", seed, exc)
            error = exc
    if not results:
        raise error
    return results
