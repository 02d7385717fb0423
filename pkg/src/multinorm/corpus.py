"""Tab-separated corpora shared by the three tasks.

Each non-blank line is ``segmentId<TAB>position<TAB>source<TAB>target[<TAB>pos]``.
Composite POS tags are joined with ``+``.  Targets use a space between
words (normalization, lemmatization) or ``|`` between morphemes
(segmentation).  Text is UTF-8 and a character is one Unicode code point.
"""
from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass

from .errors import CorpusFormatError, InputError
from .seq2seq import TrainingExample
from .vocab import SEG, Vocabulary, target_symbols

TASKS = ("normalization", "lemmatization", "segmentation")
SPLITS = ("train", "dev", "test")
TAG_SEPARATOR = "+"


def task_boundary(task):
    """Delimiter of higher-level units inside target strings for ``task``."""
    if task not in TASKS:
        raise InputError(f"unknown task {task!r}; choose one of {', '.join(TASKS)}")
    return "|" if task == "segmentation" else " "


@dataclass(frozen=True)
class TokenRecord:
    segment_id: str
    position: int
    source: str
    target: str
    pos: tuple | None = None


@dataclass
class DatasetSplit:
    train: list
    dev: list
    test: list

    def split(self, name):
        return getattr(self, name)


def parse_line(line, path=None, lineno=None):
    cols = line.rstrip("\r\n").split("\t")
    if len(cols) not in (4, 5):
        raise CorpusFormatError(f"expected 4 or 5 tab-separated columns, found {len(cols)}", path, lineno)
    seg_id, position, source, target = cols[:4]
    if not seg_id:
        raise CorpusFormatError("empty segment id", path, lineno)
    try:
        pos_idx = int(position)
    except ValueError:
        raise CorpusFormatError(f"position {position!r} is not an integer", path, lineno) from None
    if not source:
        raise CorpusFormatError("empty source token", path, lineno)
    if not target:
        raise CorpusFormatError("empty target", path, lineno)
    tags = None
    if len(cols) == 5 and cols[4]:
        tags = tuple(cols[4].split(TAG_SEPARATOR))
        if not all(tags):
            raise CorpusFormatError(f"malformed POS feature {cols[4]!r}", path, lineno)
    return TokenRecord(seg_id, pos_idx, source, target, tags)


def read_segments(path):
    """Segments of one TSV file, in order of first appearance."""
    segments = {}
    first_line = {}
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = parse_line(line, path, lineno)
            key = (rec.segment_id, rec.position)
            if key in seen:
                raise CorpusFormatError(
                    f"duplicate position {rec.position} in segment {rec.segment_id!r}", path, lineno)
            seen.add(key)
            segments.setdefault(rec.segment_id, []).append(rec)
            first_line.setdefault(rec.segment_id, lineno)
    out = []
    for seg_id, recs in segments.items():
        recs.sort(key=lambda r: r.position)
        if [r.position for r in recs] != list(range(len(recs))):
            raise CorpusFormatError(
                f"positions of segment {seg_id!r} are not 0..{len(recs) - 1}", path, first_line[seg_id])
        out.append(recs)
    return out


def write_segments(path, segments):
    with open(path, "w", encoding="utf-8") as fh:
        for seg in segments:
            for r in seg:
                cols = [r.segment_id, str(r.position), r.source, r.target]
                if r.pos is not None:
                    cols.append(TAG_SEPARATOR.join(r.pos))
                fh.write("\t".join(cols) + "\n")


def load_corpus(directory):
    """Read ``train.tsv``, ``dev.tsv`` and ``test.tsv`` from ``directory``.

    A missing dev or test file gives an empty split; train is required.
    """
    parts = {}
    for name in SPLITS:
        path = os.path.join(directory, f"{name}.tsv")
        if name == "train" and not os.path.exists(path):
            raise InputError(f"no training file at {path}")
        parts[name] = read_segments(path) if os.path.exists(path) else []
    owner = {}
    for name in SPLITS:
        for seg in parts[name]:
            sid = seg[0].segment_id
            if sid in owner:
                raise InputError(f"segment {sid!r} occurs in both {owner[sid]} and {name}")
            owner[sid] = name
    return DatasetSplit(**parts)


def save_corpus(directory, data):
    os.makedirs(directory, exist_ok=True)
    for name in SPLITS:
        write_segments(os.path.join(directory, f"{name}.tsv"), data.split(name))


def build_vocab(train, boundary=" "):
    """Source, target and tag vocabularies from the training split only."""
    if not train:
        raise InputError("cannot build vocabularies from an empty training split")
    src, tgt, tags = Counter(), Counter(), Counter()
    for seg in train:
        for r in seg:
            src.update(r.source)
            tgt.update(s for s in target_symbols(r.target, boundary) if s != SEG)
            if r.pos:
                tags.update(r.pos)
    return (Vocabulary.from_counts(src), Vocabulary.from_counts(tgt),
            Vocabulary.from_counts(tags, reserved=("<unk>",)))


def build_feature_vocab(train):
    """Label set of the POS classifier: composite features seen in training."""
    feats = Counter(TAG_SEPARATOR.join(r.pos) for seg in train for r in seg if r.pos)
    return Vocabulary.from_counts(feats, reserved=())


def segment_examples(segment, with_context=True):
    tokens = tuple(r.source for r in segment)
    return [TrainingExample(r.source, r.target, r.pos,
                            tokens if with_context else None, r.position if with_context else None)
            for r in segment]


def to_examples(segments, with_context=True):
    """Flatten segments into per-token examples (sentence order kept)."""
    out = []
    for seg in segments:
        out.extend(segment_examples(seg, with_context))
    return out


def is_type_level(segments):
    """True for word-type data (every segment is a single token)."""
    return all(len(seg) == 1 for seg in segments)


def lexicon_records(segments):
    return [(r.source, r.target, TAG_SEPARATOR.join(r.pos) if r.pos else None)
            for seg in segments for r in seg]


# -- prediction files ------------------------------------------------------------

def write_predictions(path, records, predictions):
    with open(path, "w", encoding="utf-8") as fh:
        for r, p in zip(records, predictions):
            fh.write(f"{r.segment_id}\t{r.position}\t{r.source}\t{p}\n")


def read_predictions(path):
    """``{(segmentId, position): prediction}`` from a prediction file."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            cols = line.rstrip("\r\n").split("\t")
            if len(cols) != 4:
                raise CorpusFormatError(f"expected 4 columns, found {len(cols)}", path, lineno)
            try:
                key = (cols[0], int(cols[1]))
            except ValueError:
                raise CorpusFormatError(f"position {cols[1]!r} is not an integer", path, lineno) from None
            out[key] = cols[3]
    return out
