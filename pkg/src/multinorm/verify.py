"""Gradient verification suite: every differentiable op and every training loss."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .context import combined_loss
from .nn import autograd as ag
from .nn.autograd import Parameter
from .nn.gradcheck import grad_check
from .nn.layers import LstmCell, ParameterStore
from .seq2seq import VARIANTS, ModelConfig, Seq2SeqModel, TrainingExample, sequence_loss
from .vocab import Vocabulary

TOLERANCE = 1e-4


@dataclass
class CheckResult:
    name: str
    max_rel_error: float
    seconds: float

    @property
    def passed(self):
        return self.max_rel_error <= TOLERANCE

    def line(self):
        status = "ok" if self.passed else "FAIL"
        return f"{status:4s} {self.name:32s} max_rel_err={self.max_rel_error:.3e} ({self.seconds:.2f}s)"


def _p(rng, name, *shape):
    return Parameter(rng.normal(size=shape), name)


def op_cases(seed=0):
    """``name -> (loss_fn, params)`` for each op, each reduced to a scalar through a random weighting."""
    rng = np.random.default_rng(seed)
    A, B, v, u = _p(rng, "A", 3, 4), _p(rng, "B", 4, 2), _p(rng, "v", 4), _p(rng, "u", 3)
    M = _p(rng, "M", 3, 4)
    bias = _p(rng, "bias", 3)
    table = _p(rng, "table", 5, 3)
    w3, w4, w10 = rng.normal(size=3), rng.normal(size=4), rng.normal(size=10)

    def dot(t, w):
        return ag.sum_(ag.mul(t, ag.Tensor(w)))

    W32 = rng.normal(size=(3, 2))
    cell_store = ParameterStore(seed)
    cell = LstmCell(cell_store, "cell", 4, 3)
    x_in = _p(rng, "x", 4)
    h0, c0 = _p(rng, "h0", 3), _p(rng, "c0", 3)
    return {
        "matmul(2D,1D)": (lambda: dot(ag.matmul(A, v), w3), [A, v]),
        "matmul(1D,2D)": (lambda: dot(ag.matmul(u, A), w4), [u, A]),
        "matmul(2D,2D)": (lambda: ag.sum_(ag.mul(ag.matmul(A, B), ag.Tensor(W32))), [A, B]),
        "linear": (lambda: dot(ag.linear(v, A, bias), w3), [v, A, bias]),
        "add": (lambda: dot(ag.add(u, bias), w3), [u, bias]),
        "add_n": (lambda: dot(ag.add_n([u, bias, u]), w3), [u, bias]),
        "mul": (lambda: dot(ag.mul(u, bias), w3), [u, bias]),
        "scale": (lambda: dot(ag.scale(u, 0.7), w3), [u]),
        "sigmoid": (lambda: dot(ag.sigmoid(u), w3), [u]),
        "tanh": (lambda: dot(ag.tanh(u), w3), [u]),
        "concat": (lambda: dot(ag.concat([u, bias, v]), w10), [u, bias, v]),
        "stack": (lambda: ag.sum_(ag.mul(ag.stack([u, bias]), ag.Tensor(np.ones((2, 3)) * 0.3))), [u, bias]),
        "slice": (lambda: dot(ag.slice_(v, 1, 4), w3), [v]),
        "row": (lambda: dot(ag.row(M, 1), w4), [M]),
        "softmax": (lambda: dot(ag.softmax(u), w3), [u]),
        "softmax_cross_entropy": (lambda: ag.softmax_cross_entropy(u, 2), [u]),
        "embedding": (lambda: ag.sum_(ag.mul(ag.embedding(table, [1, 3, 1]), ag.Tensor(np.ones((3, 3))))),
                      [table]),
        "sum": (lambda: ag.sum_(ag.mul(M, M)), [M]),
        "mean": (lambda: dot(ag.mean([u, bias]), w3), [u, bias]),
        "lstm_step": (lambda: dot(ag.add(*cell.step(x_in, (h0, c0))), w3),
                      cell.parameters() + [x_in, h0, c0]),
    }


def tiny_model(variant, seed=0):
    src = Vocabulary(list("abc"))
    tgt = Vocabulary(list("abd"))
    tags = Vocabulary(["N", "V"], reserved=("<unk>",))
    feats = Vocabulary(["N", "N+V", "V"], reserved=())
    cfg = ModelConfig(variant=variant, char_emb=3, pos_emb=2, hidden=3, context_hidden=2, seed=seed)
    model = Seq2SeqModel(cfg, src, tgt, tags, feats)
    # nonzero output bias so its gradient is exercised away from the init point
    model.out_b.data[:] = np.random.default_rng(seed).normal(scale=0.1, size=model.out_b.shape)
    return model


TINY_EXAMPLE = TrainingExample("ab", "b d", pos=("N", "V"), context=("ca", "ab"), index=1)


def loss_cases():
    cases = {}
    for variant in VARIANTS:
        model = tiny_model(variant)
        cases[f"sequence_loss[{variant}]"] = (
            lambda m=model: sequence_loss(m, TINY_EXAMPLE), model.parameters())
    model = tiny_model("context_predicted_pos")
    cases["combined_loss[alpha=0.2]"] = (
        lambda m=model: combined_loss(m, TINY_EXAMPLE, alpha=0.2), model.parameters())
    return cases


def run_suite(include_losses=True, report=None):
    results = []
    cases = dict(op_cases())
    if include_losses:
        cases.update(loss_cases())
    for name, (fn, params) in cases.items():
        t0 = time.perf_counter()
        err = grad_check(fn, params)
        res = CheckResult(name, err, time.perf_counter() - t0)
        results.append(res)
        if report is not None:
            report(res.line())
    return results
