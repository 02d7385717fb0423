"""Character-level encoder-decoder with attention.

A bidirectional LSTM reads the source characters, an LSTM decoder emits
target symbols one at a time, and each step's output distribution is a
softmax over an affine map of ``[s_t; c_t; extras]`` where ``c_t`` is the
attention-weighted sum of encoder states.  ``extras`` holds the optional
source-context features (POS embedding, hierarchical context encoding); see
:mod:`multinorm.context`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError
from .nn import autograd as ag
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.layers import LstmCell, ParameterStore, bilstm
from .vocab import RESERVED, UNK, Vocabulary, target_symbols

log = logging.getLogger(__name__)

VARIANTS = ("plain", "context", "gold_pos", "context_gold_pos", "context_predicted_pos")


def uses_context(variant):
    return variant.startswith("context")


def uses_pos(variant):
    return variant.endswith("_pos")


def predicts_pos(variant):
    return variant == "context_predicted_pos"


@dataclass
class ModelConfig:
    variant: str = "plain"
    char_emb: int = 100
    pos_emb: int = 50
    hidden: int = 200
    context_hidden: int = 200
    precision: str = "float64"
    seed: int = 0
    # feed the probability-weighted tag embedding instead of the argmax tag
    expected_pos_embedding: bool = False
    max_context: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(
                f"unknown variant {self.variant!r}; choose one of {', '.join(VARIANTS)}")
        if self.precision not in ("float64", "float32"):
            raise ConfigurationError(f"precision must be float64 or float32, got {self.precision!r}")
        for name in ("char_emb", "pos_emb", "hidden", "context_hidden"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")


@dataclass
class TrainingExample:
    source: str
    target: str
    pos: tuple | None = None
    context: tuple | None = None
    index: int | None = None

    def __post_init__(self):
        if not self.source or not self.target:
            raise InputError("training examples need a nonempty source and target")
        if self.pos is not None:
            self.pos = tuple(self.pos)
            if not self.pos:
                raise InputError("POS feature must contain at least one tag")
        if self.context is not None:
            self.context = tuple(self.context)
            if self.index is None or not 0 <= self.index < len(self.context):
                raise InputError(f"focus index {self.index} outside context of {len(self.context)}")
            if self.context[self.index] != self.source:
                raise InputError(
                    f"context token {self.context[self.index]!r} at {self.index} is not the source {self.source!r}")

    @property
    def feature(self):
        """Composite POS feature as a single class label, e.g. ``"APPR+ART"``."""
        return "+".join(self.pos) if self.pos is not None else None


@dataclass
class EncoderStates:
    states: ag.Tensor  # [n_x, 2H]
    fwd_final: tuple
    bwd_final: tuple

    def __len__(self):
        return self.states.shape[0]


@dataclass
class SourceEncoding:
    """Everything the decoder conditions on for one source word."""

    encoder: EncoderStates
    keys: ag.Tensor  # encoder states projected by the attention matrix, [n_x, H]
    init_state: tuple
    extras: list = field(default_factory=list)
    pos_distribution: ag.Tensor | None = None
    focus_context: ag.Tensor | None = None


class Seq2SeqModel:
    """Parameters and vocabularies of one normalisation model."""

    def __init__(self, config, src_vocab, tgt_vocab, tag_vocab=None, feature_vocab=None):
        self.config = config
        self.variant = config.variant
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        if uses_pos(self.variant) and tag_vocab is None:
            raise ConfigurationError(f"variant {self.variant} needs a tag vocabulary")
        if predicts_pos(self.variant) and feature_vocab is None:
            raise ConfigurationError(f"variant {self.variant} needs a POS feature vocabulary")
        self.tag_vocab = tag_vocab
        self.feature_vocab = feature_vocab
        self.extra_header = {}
        # character embeddings are shared between source and target symbols
        shared = [s for s in src_vocab.symbols if s not in RESERVED]
        shared += [s for s in tgt_vocab.symbols if s not in RESERVED and s not in src_vocab]
        self.emb_vocab = Vocabulary(shared)
        self._src_to_emb = {s: self.emb_vocab.index(s) for s in src_vocab.symbols}
        self._tgt_to_emb = np.array([self.emb_vocab.index(s) for s in tgt_vocab.symbols], dtype=np.intp)

        E, H = config.char_emb, config.hidden
        self.store = store = ParameterStore(config.seed, np.dtype(config.precision))
        self.emb = store.create("char_emb", (len(self.emb_vocab), E))
        self.enc_fwd = LstmCell(store, "enc.fwd", E, H)
        self.enc_bwd = LstmCell(store, "enc.bwd", E, H)
        self.bridge_Wh = store.create("bridge.W_h", (H, 2 * H))
        self.bridge_bh = store.create("bridge.b_h", (H,), init="zeros")
        self.bridge_Wc = store.create("bridge.W_c", (H, 2 * H))
        self.bridge_bc = store.create("bridge.b_c", (H,), init="zeros")
        self.dec = LstmCell(store, "dec", E, H)
        self.W_a = store.create("att.W_a", (H, 2 * H))

        extra = 0
        if uses_pos(self.variant):
            P = config.pos_emb
            self.pos_emb = store.create("pos_emb", (len(tag_vocab), P))
            extra += P
        if uses_context(self.variant):
            C = config.context_hidden
            self.ctx_lo_fwd = LstmCell(store, "ctx.lo.fwd", E, C)
            self.ctx_lo_bwd = LstmCell(store, "ctx.lo.bwd", E, C)
            self.ctx_hi_fwd = LstmCell(store, "ctx.hi.fwd", 2 * C, C)
            self.ctx_hi_bwd = LstmCell(store, "ctx.hi.bwd", 2 * C, C)
            extra += 2 * C
        if predicts_pos(self.variant):
            self.W_f = store.create("pos_cls.W_f", (len(feature_vocab), 2 * config.context_hidden))
        self.out_W = store.create("out.W", (len(tgt_vocab), 3 * H + extra))
        self.out_b = store.create("out.b", (len(tgt_vocab),), init="zeros")

    # -- bookkeeping -------------------------------------------------------

    def parameters(self):
        return list(self.store)

    def parameter_names(self):
        return self.store.names()

    def max_output_length(self, n_source):
        return max(20, 3 * n_source)

    def source_indices(self, chars):
        unk = self.emb_vocab.index(UNK)
        return [self._src_to_emb.get(ch, unk) for ch in chars]

    def target_indices(self, target, boundary=" "):
        return self.tgt_vocab.encode(target_symbols(target, boundary))

    def header(self):
        cfg = self.config
        h = {
            "variant": cfg.variant,
            "dims": {"char_emb": cfg.char_emb, "pos_emb": cfg.pos_emb, "hidden": cfg.hidden,
                     "context_hidden": cfg.context_hidden},
            "precision": cfg.precision,
            "seed": cfg.seed,
            "expected_pos_embedding": cfg.expected_pos_embedding,
            "max_context": cfg.max_context,
            "vocab": {"source": self.src_vocab.to_list(), "target": self.tgt_vocab.to_list()},
            "vocab_hashes": {"source": self.src_vocab.hash(), "target": self.tgt_vocab.hash()},
        }
        if self.tag_vocab is not None:
            h["vocab"]["tags"] = self.tag_vocab.to_list()
            h["vocab_hashes"]["tags"] = self.tag_vocab.hash()
        if self.feature_vocab is not None:
            h["vocab"]["features"] = self.feature_vocab.to_list()
            h["vocab_hashes"]["features"] = self.feature_vocab.hash()
        return h

    def save(self, path, extra_header=None):
        header = self.header()
        if extra_header:
            header.update(extra_header)
        save_checkpoint(path, self.parameters(), header)

    @classmethod
    def load(cls, path):
        header, arrays = load_checkpoint(path)
        d = header["dims"]
        cfg = ModelConfig(variant=header["variant"], char_emb=d["char_emb"], pos_emb=d["pos_emb"],
                          hidden=d["hidden"], context_hidden=d["context_hidden"],
                          precision=header["precision"], seed=header["seed"],
                          expected_pos_embedding=header.get("expected_pos_embedding", False),
                          max_context=header.get("max_context"))
        v = header["vocab"]
        tags = Vocabulary.from_list(v["tags"], reserved=(UNK,)) if "tags" in v else None
        feats = Vocabulary.from_list(v["features"], reserved=()) if "features" in v else None
        model = cls(cfg, Vocabulary.from_list(v["source"]), Vocabulary.from_list(v["target"]),
                    tags, feats)
        for key, vocab in (("source", model.src_vocab), ("target", model.tgt_vocab)):
            if header["vocab_hashes"][key] != vocab.hash():
                raise ConfigurationError(f"{path}: {key} vocabulary hash mismatch")
        model.store.load_state(arrays)
        model.extra_header = {k: header[k] for k in header if k not in model.header()}
        return model


# -- Encoder / attention / decoder step ----------------------------------------

def encode(model, x):
    """Bidirectional encoding of a source character sequence."""
    if len(x) == 0:
        raise InputError("cannot encode an empty source sequence")
    idx = model.source_indices(x)
    embedded = ag.embedding(model.emb, idx)
    states, fwd_final, bwd_final = bilstm(model.enc_fwd, model.enc_bwd, embedded)
    return EncoderStates(ag.stack(states), fwd_final, bwd_final)


def initial_decoder_state(model, enc):
    hf, cf = enc.fwd_final
    hb, cb = enc.bwd_final
    h0 = ag.linear(ag.concat([hf, hb]), model.bridge_Wh, model.bridge_bh)
    c0 = ag.linear(ag.concat([cf, cb]), model.bridge_Wc, model.bridge_bc)
    return h0, c0


def attention_keys(model, enc):
    return ag.linear(enc.states, model.W_a)


def attend(model, s_t, enc, keys=None):
    """General (bilinear) attention: ``score_i = s_t^T W_a h_i``.

    Returns the context vector and the attention weights.
    """
    if keys is None:
        keys = attention_keys(model, enc)
    if s_t.shape != (keys.shape[1],):
        raise ConfigurationError(f"decoder state {s_t.shape} does not match attention {keys.shape}")
    weights = ag.softmax(ag.matmul(keys, s_t))
    return ag.matmul(weights, enc.states), weights


def _logits(model, s_t, src):
    c_t, _ = attend(model, s_t, src.encoder, src.keys)
    return ag.linear(ag.concat([s_t, c_t] + src.extras), model.out_W, model.out_b)


def decode_step(model, prev, state, src):
    """One decoder step from target symbol index ``prev``.

    Returns the output distribution over the target vocabulary and the new
    decoder state.
    """
    x = ag.embedding(model.emb, int(model._tgt_to_emb[prev]))
    state = model.dec.step(x, state)
    return ag.softmax(_logits(model, state[0], src)), state


def prepare_source(model, example, pos_mode="gold", context_states=None):
    """Encode ``example`` for decoding under the model's variant.

    ``pos_mode`` selects gold tags (training, gold-POS systems) or the
    model's own tag prediction (``context_predicted_pos`` at inference).
    ``context_states`` may carry a precomputed higher-level context encoding
    of the whole sentence.
    """
    from . import context as ctx

    enc = encode(model, example.source)
    src = SourceEncoding(enc, attention_keys(model, enc), initial_decoder_state(model, enc))
    variant = model.variant
    focus = None
    if uses_context(variant):
        if example.context is None:
            raise InputError(f"variant {variant} needs sentence context for {example.source!r}")
        if context_states is None:
            focus = ctx.encode_context(model, example.context, example.index).focus
        else:
            focus = context_states[example.index]
        src.focus_context = focus
    if uses_pos(variant):
        if predicts_pos(variant):
            src.pos_distribution = ctx.predict_pos(model, focus)
        if predicts_pos(variant) and pos_mode == "predicted":
            src.extras.append(ctx.predicted_pos_embedding(model, src.pos_distribution))
        else:
            if example.pos is None:
                raise InputError(f"variant {variant} needs a POS tag for {example.source!r}")
            src.extras.append(ctx.embed_pos(model, example.pos))
    if focus is not None:
        src.extras.append(focus)
    return src


def _teacher_forced_loss(model, src, target_idx):
    tgt = model.tgt_vocab
    inputs = [tgt.bos] + list(target_idx)
    outputs = list(target_idx) + [tgt.eos]
    proj = model.dec.project(ag.embedding(model.emb, model._tgt_to_emb[inputs]))
    state = src.init_state
    terms = []
    for t, y in enumerate(outputs):
        state = model.dec.step_projected(ag.row(proj, t), state)
        terms.append(ag.softmax_cross_entropy(_logits(model, state[0], src), y))
    return ag.add_n(terms)


def sequence_loss(model, example, boundary=" ", context_states=None):
    """Negative log-likelihood of the target (including EOS), teacher forced.

    Gold POS tags are used whenever the variant consumes tags.
    """
    src = prepare_source(model, example, "gold", context_states)
    return _teacher_forced_loss(model, src, model.target_indices(example.target, boundary))


# -- Inference ---------------------------------------------------------------------

class ModelScorer:
    """Step-wise log-probabilities of one model for one source word.

    This is the interface the beam decoders consume: ``initial()`` gives the
    start state, ``step(state, prev)`` returns ``(log-probs, new state)``.
    """

    def __init__(self, model, example, pos_mode="predicted"):
        self.model = model
        with ag.no_grad():
            self.src = prepare_source(model, example, pos_mode)
        vocab = model.tgt_vocab
        self.vocab_size = len(vocab)
        self.symbols = vocab.symbols
        self.bos, self.eos, self.seg = vocab.bos, vocab.eos, vocab.seg
        self.max_length = model.max_output_length(len(example.source))

    def initial(self):
        return self.src.init_state

    def step(self, state, prev):
        with ag.no_grad():
            probs, new_state = decode_step(self.model, prev, state, self.src)
        with np.errstate(divide="ignore"):
            return np.log(probs.data), new_state


def ensemble_distribution(distributions):
    """Arithmetic mean of member distributions, renormalised."""
    distributions = [np.asarray(d, dtype=np.float64) for d in distributions]
    if not distributions:
        raise ConfigurationError("empty ensemble")
    sizes = {d.shape for d in distributions}
    if len(sizes) != 1:
        raise ConfigurationError(f"ensemble members disagree on vocabulary size: {sorted(sizes)}")
    mean = np.mean(distributions, axis=0)
    return mean / mean.sum()


class EnsembleScorer:
    """Averages member probabilities at every step."""

    def __init__(self, scorers):
        scorers = list(scorers)
        if not scorers:
            raise ConfigurationError("empty ensemble")
        first = scorers[0]
        for s in scorers[1:]:
            a, b = getattr(first, "model", None), getattr(s, "model", None)
            if a is not None and b is not None and a.tgt_vocab.hash() != b.tgt_vocab.hash():
                raise ConfigurationError("ensemble members use different target vocabularies")
            if s.vocab_size != first.vocab_size:
                raise ConfigurationError("ensemble members use different target vocabularies")
        self.scorers = scorers
        self.vocab_size = first.vocab_size
        self.symbols = first.symbols
        self.bos, self.eos, self.seg = first.bos, first.eos, first.seg
        self.max_length = first.max_length

    def initial(self):
        return tuple(s.initial() for s in self.scorers)

    def step(self, state, prev):
        dists, states = [], []
        for scorer, st in zip(self.scorers, state):
            logp, new = scorer.step(st, prev)
            dists.append(np.exp(logp))
            states.append(new)
        with np.errstate(divide="ignore"):
            return np.log(ensemble_distribution(dists)), tuple(states)


def make_scorer(models, example, pos_mode="predicted"):
    if isinstance(models, Seq2SeqModel):
        return ModelScorer(models, example, pos_mode)
    models = list(models)
    if len(models) == 1:
        return ModelScorer(models[0], example, pos_mode)
    return EnsembleScorer(ModelScorer(m, example, pos_mode) for m in models)
