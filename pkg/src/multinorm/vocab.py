"""Symbol vocabularies and the target-string <-> symbol-sequence mapping."""
from __future__ import annotations

from collections import Counter

from .errors import ConfigurationError
from .nn.checkpoint import vocab_hash

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
SEG = "<seg>"
RESERVED = (BOS, EOS, UNK, SEG)


class Vocabulary:
    """Dense symbol index; reserved symbols come first, in the given order."""

    def __init__(self, symbols=(), reserved=RESERVED):
        self.reserved = tuple(reserved)
        self.symbols = list(self.reserved)
        self._index = {s: i for i, s in enumerate(self.symbols)}
        if len(self._index) != len(self.symbols):
            raise ConfigurationError("reserved symbols must be distinct")
        for s in symbols:
            if s in self._index:
                if s in self.reserved:
                    continue
                raise ConfigurationError(f"duplicate symbol {s!r}")
            self._index[s] = len(self.symbols)
            self.symbols.append(s)

    @classmethod
    def from_counts(cls, counts, reserved=RESERVED):
        """Most frequent first, ties in lexicographic order."""
        counts = Counter(counts)
        for r in reserved:
            counts.pop(r, None)
        ordered = sorted(counts, key=lambda s: (-counts[s], s))
        return cls(ordered, reserved=reserved)

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def __iter__(self):
        return iter(self.symbols)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.symbols == other.symbols

    def __repr__(self):
        return f"Vocabulary({len(self)} symbols)"

    def index(self, symbol):
        """Index of ``symbol``; unknown symbols map to UNK when it is reserved."""
        i = self._index.get(symbol)
        if i is None:
            if UNK not in self._index:
                raise KeyError(symbol)
            return self._index[UNK]
        return i

    def encode(self, symbols):
        return [self.index(s) for s in symbols]

    def decode(self, indices):
        return [self.symbols[i] for i in indices]

    @property
    def bos(self):
        return self._index[BOS]

    @property
    def eos(self):
        return self._index[EOS]

    @property
    def unk(self):
        return self._index[UNK]

    @property
    def seg(self):
        return self._index[SEG]

    def hash(self):
        return vocab_hash(self.symbols)

    def to_list(self):
        return list(self.symbols)

    @classmethod
    def from_list(cls, symbols, reserved=RESERVED):
        reserved = tuple(reserved)
        if tuple(symbols[:len(reserved)]) != reserved:
            raise ConfigurationError("stored vocabulary does not start with the reserved symbols")
        return cls(symbols[len(reserved):], reserved=reserved)


def target_symbols(target, boundary=" "):
    """Characters of ``target`` with each ``boundary`` replaced by SEG."""
    out = []
    for k, segment in enumerate(target.split(boundary)):
        if k:
            out.append(SEG)
        out.extend(segment)
    return out


def symbols_to_target(symbols, boundary=" "):
    """Inverse of :func:`target_symbols`; stops at the first EOS."""
    parts = []
    for s in symbols:
        if s == EOS:
            break
        if s == SEG:
            parts.append(boundary)
        elif s in (BOS, UNK):
            continue
        else:
            parts.append(s)
    return "".join(parts)


def split_segments(target, boundary=" "):
    """Higher-level units (words or morphemes) of a target string."""
    return [s for s in target.split(boundary) if s]
