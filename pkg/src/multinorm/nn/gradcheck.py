from __future__ import annotations

import numpy as np

from .autograd import no_grad

FD_STEP = 1e-4
# Floor on the relative-error denominator: gradients below it are compared absolutely.
REL_FLOOR = 1e-6


def relative_error(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return np.abs(analytic - numeric) / denom


def grad_check(loss_fn, params, step=FD_STEP):
    """Worst relative error between backprop and central finite differences.

    ``loss_fn`` takes no arguments and returns a scalar Tensor computed from
    the current values of ``params``.  Every coordinate of every parameter is
    perturbed in place by ``+/- step`` and restored afterwards.
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss.data):
        raise FloatingPointError(f"non-finite loss {float(loss.data)}")
    loss.backward()
    worst = 0.0
    for p in params:
        analytic = p.grad.copy()
        numeric = np.zeros_like(analytic)
        flat = p.data.reshape(-1)
        with no_grad():
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + step
                up = float(loss_fn().data)
                flat[k] = orig - step
                down = float(loss_fn().data)
                flat[k] = orig
                if not (np.isfinite(up) and np.isfinite(down)):
                    raise FloatingPointError(f"non-finite loss while perturbing {p.name}[{k}]")
                numeric.reshape(-1)[k] = (up - down) / (2.0 * step)
        if analytic.size:
            worst = max(worst, float(relative_error(analytic, numeric).max()))
        p.zero_grad()
    return worst
