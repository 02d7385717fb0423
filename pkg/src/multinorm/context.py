"""Source-side context features: hierarchical sentence encoding and POS tags.

A lower bi-LSTM reads each sentence token character by character; its last
forward and last backward states form the token's vector.  A higher bi-LSTM
runs over those token vectors, and the higher state at the focus position is
the word's context encoding.  POS features are averaged tag embeddings; the
predicted-POS system additionally classifies the composite tag from the
context encoding and trains that classifier jointly with the normaliser.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError
from .nn import autograd as ag
from .nn.layers import bilstm
from .seq2seq import _teacher_forced_loss, predicts_pos, prepare_source, uses_context

log = logging.getLogger(__name__)
_warned_tags = set()


@dataclass
class ContextEncoding:
    char_embeddings: list  # e^s, one vector per context token
    higher_states: list  # H^s
    focus: ag.Tensor  # H^x = H^s_i


def _window(n, i, cap):
    if cap is None or n <= cap:
        return 0, n
    lo = max(0, min(i - cap // 2, n - cap))
    return lo, lo + cap


def encode_context(model, tokens, i):
    """Hierarchical encoding of sentence ``tokens`` around focus position ``i``."""
    if not uses_context(model.variant):
        raise ConfigurationError(f"variant {model.variant} has no context encoder")
    tokens = list(tokens)
    if not tokens:
        raise InputError("empty context")
    if not 0 <= i < len(tokens):
        raise InputError(f"focus index {i} outside context of {len(tokens)} tokens")
    lo, hi = _window(len(tokens), i, model.config.max_context)
    states, vectors = sentence_states(model, tokens[lo:hi])
    return ContextEncoding(vectors, states, states[i - lo])


def sentence_states(model, tokens):
    """Higher-level states for every token of a sentence (and the token vectors)."""
    vectors = []
    for tok in tokens:
        if not tok:
            raise InputError("empty token in context")
        emb = ag.embedding(model.emb, model.source_indices(tok))
        _, (hf, _), (hb, _) = bilstm(model.ctx_lo_fwd, model.ctx_lo_bwd, emb)
        vectors.append(ag.concat([hf, hb]))
    higher, _, _ = bilstm(model.ctx_hi_fwd, model.ctx_hi_bwd, ag.stack(vectors))
    return higher, vectors


def context_states_for(model, tokens):
    """Per-position focus encodings, honouring the configured context cap.

    Without a cap the whole sentence is encoded once and shared by all its
    tokens; with a cap each position gets its own window.
    """
    cap = model.config.max_context
    if cap is None or len(tokens) <= cap:
        return sentence_states(model, tokens)[0]
    return [encode_context(model, tokens, i).focus for i in range(len(tokens))]


def _tag_index(model, tag):
    idx = model.tag_vocab.index(tag)
    if tag not in model.tag_vocab and tag not in _warned_tags:
        _warned_tags.add(tag)
        log.warning("unknown POS tag %r mapped to the UNK tag", tag)
    return idx


def embed_pos(model, tags):
    """Average embedding of the tags in a (possibly composite) POS feature."""
    tags = list(tags)
    if not tags:
        raise InputError("POS feature must contain at least one tag")
    rows = [ag.embedding(model.pos_emb, _tag_index(model, t)) for t in tags]
    return ag.mean(rows)


def predict_pos(model, focus):
    """Distribution over composite POS features from the context encoding."""
    return ag.softmax(ag.linear(focus, model.W_f))


def predicted_pos_embedding(model, distribution):
    """Tag embedding fed to the decoder when tags are predicted.

    By default the argmax feature is embedded; with
    ``expected_pos_embedding`` the embeddings of all features are averaged
    under the predicted distribution instead.
    """
    feats = model.feature_vocab.symbols
    if not model.config.expected_pos_embedding:
        best = feats[int(np.argmax(distribution.data))]
        return embed_pos(model, best.split("+"))
    rows = ag.stack([embed_pos(model, f.split("+")) for f in feats])
    return ag.matmul(distribution, rows)


def tagging_loss(model, src, feature):
    if feature not in model.feature_vocab:
        raise InputError(f"gold POS feature {feature!r} is not in the classifier's label set")
    logits = ag.linear(src.focus_context, model.W_f)
    return ag.softmax_cross_entropy(logits, model.feature_vocab.index(feature))


def combined_loss(model, example, alpha=0.2, boundary=" ", context_states=None):
    """``alpha * tagging NLL + normalisation NLL``, gold tags in the decoder."""
    if not predicts_pos(model.variant):
        raise ConfigurationError(f"combined loss needs the predicted-POS variant, not {model.variant}")
    if alpha < 0:
        raise ConfigurationError(f"alpha must be nonnegative, got {alpha}")
    if example.pos is None:
        raise InputError(f"combined loss needs a gold POS tag for {example.source!r}")
    src = prepare_source(model, example, "gold", context_states)
    seq = _teacher_forced_loss(model, src, model.target_indices(example.target, boundary))
    return ag.add(seq, ag.scale(tagging_loss(model, src, example.feature), alpha))
