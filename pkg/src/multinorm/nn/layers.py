"""Parameter storage, initialisation and the LSTM cell."""
from __future__ import annotations

import zlib

import numpy as np

from ..errors import ConfigurationError
from . import autograd as ag
from .autograd import Parameter

# Gate blocks inside the stacked 4H rows of every LSTM weight and bias.
GATE_ORDER = ("input", "forget", "candidate", "output")


def glorot_bound(fan_in, fan_out):
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


class ParameterStore:
    """Ordered name -> Parameter mapping with reproducible initialisation.

    Each parameter draws from its own generator seeded by ``(seed, crc32(name))``,
    so adding or removing a parameter never shifts the initial values of the
    others.  Models that differ only in optional components therefore start
    from identical shared weights.
    """

    def __init__(self, seed=0, dtype=np.float64):
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        self._params = {}

    def rng_for(self, name):
        return np.random.default_rng([self.seed, zlib.crc32(name.encode("utf-8"))])

    def create(self, name, shape, init="glorot"):
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter name {name!r}")
        shape = tuple(int(d) for d in shape)
        if any(d <= 0 for d in shape):
            raise ConfigurationError(f"parameter {name!r} needs positive dimensions, got {shape}")
        if isinstance(init, np.ndarray):
            value = init.astype(self.dtype)
        elif init == "zeros":
            value = np.zeros(shape, dtype=self.dtype)
        elif init == "glorot":
            fan_out, fan_in = (shape[0], shape[1]) if len(shape) == 2 else (shape[0], 1)
            a = glorot_bound(fan_in, fan_out)
            value = self.rng_for(name).uniform(-a, a, size=shape).astype(self.dtype)
        else:
            raise ConfigurationError(f"unknown initialiser {init!r}")
        p = Parameter(value, name)
        self._params[name] = p
        return p

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def zero_grad(self):
        for p in self._params.values():
            p.zero_grad()

    def state(self):
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_state(self, state):
        missing = set(self._params) ^ set(state)
        if missing:
            raise ConfigurationError(f"parameter sets differ: {sorted(missing)}")
        for name, value in state.items():
            p = self._params[name]
            if p.data.shape != value.shape:
                raise ConfigurationError(
                    f"shape mismatch for {name}: {p.data.shape} vs {value.shape}")
            p.data[...] = value


class LstmCell:
    """Standard LSTM with sigmoid gates and tanh squashing.

    Weights stack the gate blocks in :data:`GATE_ORDER`:
    ``z = W_x x + W_h h + b``, split into ``i, f, g, o`` of ``H`` rows each,
    ``c' = sigmoid(f) * c + sigmoid(i) * tanh(g)`` and
    ``h' = sigmoid(o) * tanh(c')``.
    """

    def __init__(self, store, prefix, input_size, hidden_size, forget_bias=1.0):
        self.input_size = int(input_size)
        self.hidden_size = H = int(hidden_size)
        self.W_x = store.create(f"{prefix}.W_x", (4 * H, self.input_size))
        self.W_h = store.create(f"{prefix}.W_h", (4 * H, H))
        bias = np.zeros(4 * H, dtype=store.dtype)
        bias[H:2 * H] = forget_bias
        self.b = store.create(f"{prefix}.b", (4 * H,), init=bias)

    def parameters(self):
        return [self.W_x, self.W_h, self.b]

    def zero_state(self):
        z = np.zeros(self.hidden_size, dtype=self.W_h.data.dtype)
        return ag.Tensor(z), ag.Tensor(z.copy())

    def project(self, inputs):
        """Input contribution ``W_x x + b`` for one vector or a matrix of rows."""
        return ag.linear(inputs, self.W_x, self.b)

    def step(self, x, state):
        """One recurrence step from a raw input vector."""
        x = ag.as_tensor(x)
        if x.shape != (self.input_size,):
            raise ConfigurationError(
                f"LSTM input has shape {x.shape}, cell expects ({self.input_size},)")
        return self.step_projected(self.project(x), state)

    def step_projected(self, xproj, state):
        """One recurrence step given a precomputed ``W_x x + b``."""
        h, c = state
        H = self.hidden_size
        if h.shape != (H,) or c.shape != (H,):
            raise ConfigurationError(
                f"LSTM state shapes {h.shape}/{c.shape}, cell expects ({H},)")
        z = ag.add(xproj, ag.linear(h, self.W_h))
        gates = ag.sigmoid(z)
        i = ag.slice_(gates, 0, H)
        f = ag.slice_(gates, H, 2 * H)
        o = ag.slice_(gates, 3 * H, 4 * H)
        g = ag.tanh(ag.slice_(z, 2 * H, 3 * H))
        c_new = ag.add(ag.mul(f, c), ag.mul(i, g))
        h_new = ag.mul(o, ag.tanh(c_new))
        return h_new, c_new

    def run(self, inputs, state=None, reverse=False):
        """Run over the rows of ``inputs``; returns per-position states and the final state.

        With ``reverse=True`` the sequence is read right to left, but the
        returned list is still indexed by input position.
        """
        proj = self.project(inputs)
        n = proj.shape[0]
        if state is None:
            state = self.zero_state()
        hs = [None] * n
        order = range(n - 1, -1, -1) if reverse else range(n)
        for t in order:
            state = self.step_projected(ag.row(proj, t), state)
            hs[t] = state[0]
        return hs, state


def lstm_step(cell, x, state):
    """Functional form of :meth:`LstmCell.step`."""
    return cell.step(x, state)


def bilstm(fwd, bwd, inputs):
    """Bidirectional run; returns position-wise ``[fwd; bwd]`` states and both final states."""
    hf, sf = fwd.run(inputs)
    hb, sb = bwd.run(inputs, reverse=True)
    states = [ag.concat([a, b]) for a, b in zip(hf, hb)]
    return states, sf, sb
