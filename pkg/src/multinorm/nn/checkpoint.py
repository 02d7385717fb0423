"""Plain-text checkpoint container.

Layout (UTF-8, one record per line)::

    multinorm-checkpoint 1
    header <JSON object>
    param <name> <dtype> <dim1,dim2,...>
    <row-major values as C99 hex floats, space separated>
    ... (one param/values pair per parameter, in store order)
    end

Hex floats make the round trip bit-exact in either precision.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

from ..errors import InputError

MAGIC = "multinorm-checkpoint 1"


def vocab_hash(symbols):
    h = hashlib.sha256("\n".join(symbols).encode("utf-8"))
    return h.hexdigest()[:16]


def save_checkpoint(path, params, header):
    header = dict(header)
    dtypes = {p.data.dtype.name for p in params}
    header.setdefault("precision", dtypes.pop() if len(dtypes) == 1 else "mixed")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MAGIC + "\n")
        fh.write("header " + json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
        for p in params:
            shape = ",".join(str(d) for d in p.data.shape)
            fh.write(f"param {p.name} {p.data.dtype.name} {shape}\n")
            fh.write(" ".join(float(v).hex() for v in p.data.reshape(-1)) + "\n")
        fh.write("end\n")


def load_checkpoint(path):
    """Return ``(header, {name: array})`` with arrays in the stored dtype."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != MAGIC:
        raise InputError(f"{path}: not a multinorm checkpoint")
    if not lines[1].startswith("header "):
        raise InputError(f"{path}:2: missing header line")
    header = json.loads(lines[1][len("header "):])
    arrays = {}
    i = 2
    while i < len(lines) and lines[i] != "end":
        parts = lines[i].split(" ")
        if len(parts) != 4 or parts[0] != "param":
            raise InputError(f"{path}:{i + 1}: malformed param line")
        _, name, dtype, shape = parts
        dims = tuple(int(d) for d in shape.split(",")) if shape else ()
        raw = lines[i + 1].split(" ") if lines[i + 1] else []
        values = np.array([float.fromhex(v) for v in raw], dtype=np.float64)
        if values.size != int(np.prod(dims)):
            raise InputError(f"{path}:{i + 2}: expected {int(np.prod(dims))} values, got {values.size}")
        arrays[name] = values.astype(dtype).reshape(dims)
        i += 2
    if i >= len(lines):
        raise InputError(f"{path}: truncated checkpoint (no end marker)")
    return header, arrays
