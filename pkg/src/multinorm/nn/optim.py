from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError


@dataclass
class SgdConfig:
    learning_rate: float = 0.1
    clip_norm: float | None = 5.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.learning_rate}")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ConfigurationError(f"clip norm must be positive or None, got {self.clip_norm}")


def global_norm(params):
    return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params)))


def sgd_step(params, cfg):
    """Plain SGD update with optional global-norm clipping; zeroes the grads.

    Returns the gradient norm before clipping.  A non-finite gradient aborts
    before any parameter is touched.
    """
    params = list(params)
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise FloatingPointError(f"non-finite gradient in parameter {p.name!r}")
    norm = global_norm(params)
    factor = cfg.learning_rate
    if cfg.clip_norm is not None and norm > cfg.clip_norm:
        factor *= cfg.clip_norm / norm
    for p in params:
        p.data -= factor * p.grad
        p.grad.fill(0.0)
    return norm
