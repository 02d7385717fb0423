"""POS baseline, test-word categories and accuracy breakdown tables.

Categories are defined against the training lexicon only:

* ``New``: the source word never occurs in training;
* ``Unique``: it occurs with exactly one distinct target;
* ``Ambiguous``: more than one target.  Ambiguous words split further into
  ``POS-unambiguous`` (every tag seen with the word maps to a single
  target) and ``POS-ambiguous`` (some tag maps to several targets).

For canonical segmentation the test words are split into ``Seen`` (the
source word occurs in training), ``New morphemes`` (some gold morpheme was
never seen in a training target) and ``New combinations``.
"""
from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .errors import InputError
from .vocab import split_segments

NEW = "New"
UNIQUE = "Unique"
AMBIGUOUS = "Ambiguous"
POS_UNAMBIGUOUS = "POS-unambiguous"
POS_AMBIGUOUS = "POS-ambiguous"
SEEN = "Seen"
NEW_MORPHEMES = "NewMorphemes"
NEW_COMBINATIONS = "NewCombinations"


@dataclass(frozen=True)
class CategoryLabel:
    top: str
    sub: str | None = None

    def __str__(self):
        return f"{self.top}/{self.sub}" if self.sub else self.top


@dataclass
class TrainLexicon:
    word_targets: dict = field(default_factory=lambda: defaultdict(Counter))
    word_pos_targets: dict = field(default_factory=lambda: defaultdict(Counter))
    morphemes: set = field(default_factory=set)
    case_sensitive: bool = True

    @classmethod
    def build(cls, records, boundary="|", case_sensitive=True):
        """``records`` yields ``(word, target, tag)``; ``tag`` may be None."""
        lex = cls(case_sensitive=case_sensitive)
        for word, target, tag in records:
            lex.add(word, target, tag, boundary)
        return lex

    def add(self, word, target, tag=None, boundary="|"):
        self.word_targets[word][target] += 1
        self.word_pos_targets[(word, tag)][target] += 1
        self.morphemes.update(split_segments(target, boundary))

    def tags_of(self, word):
        return sorted((t for (w, t) in self.word_pos_targets if w == word), key=str)


def categorize(lex, word, tag=None):
    """Category of a test word; depends only on the word and the lexicon."""
    targets = lex.word_targets.get(word)
    if not targets:
        return CategoryLabel(NEW)
    if len(targets) == 1:
        return CategoryLabel(UNIQUE)
    for t in lex.tags_of(word):
        if len(lex.word_pos_targets[(word, t)]) > 1:
            return CategoryLabel(AMBIGUOUS, POS_AMBIGUOUS)
    return CategoryLabel(AMBIGUOUS, POS_UNAMBIGUOUS)


def categorize_segmentation(lex, word, gold, boundary="|"):
    if word in lex.word_targets:
        return CategoryLabel(SEEN)
    if any(m not in lex.morphemes for m in split_segments(gold, boundary)):
        return CategoryLabel(NEW, NEW_MORPHEMES)
    return CategoryLabel(NEW, NEW_COMBINATIONS)


def tie_choice(candidates, seed, word, tag):
    """Seeded uniform pick among tied candidates.

    The generator is keyed on ``(seed, word, tag)`` so the pick does not
    depend on the order in which test words are processed.
    """
    rng = random.Random(f"{seed}|{word}|{tag}")
    return rng.choice(sorted(candidates))


def most_frequent(counter, seed, word, tag):
    top = max(counter.values())
    return tie_choice([t for t, c in counter.items() if c == top], seed, word, tag)


def baseline_predict(lex, word, tag=None, seed=0):
    """POS baseline: copy new words, look up the rest with frequency voting."""
    label = categorize(lex, word, tag)
    if label.top == NEW:
        return word
    targets = lex.word_targets[word]
    if label.top == UNIQUE:
        return next(iter(targets))
    pair = lex.word_pos_targets.get((word, tag)) if tag is not None else None
    if not pair:
        return most_frequent(targets, seed, word, tag)
    return most_frequent(pair, seed, word, tag)


def word_accuracy(predictions, golds, case_sensitive=True):
    predictions, golds = list(predictions), list(golds)
    if len(predictions) != len(golds):
        raise InputError(f"{len(predictions)} predictions for {len(golds)} gold targets")
    if not golds:
        return 0.0
    if not case_sensitive:
        predictions = [p.casefold() for p in predictions]
        golds = [g.casefold() for g in golds]
    return sum(p == g for p, g in zip(predictions, golds)) / len(golds)


# -- breakdown report --------------------------------------------------------------

# (row label, category key, parent key); shares are relative to the parent row
NORMALIZATION_ROWS = (
    ("Total", "Total", None),
    ("Unamb.", UNIQUE, "Total"),
    ("New", NEW, "Total"),
    ("Amb.", AMBIGUOUS, "Total"),
    ("POS-unamb.", POS_UNAMBIGUOUS, AMBIGUOUS),
    ("POS-amb.", POS_AMBIGUOUS, AMBIGUOUS),
)
SEGMENTATION_ROWS = (
    ("Total", "Total", None),
    ("New morph.", NEW_MORPHEMES, "Total"),
    ("New comb.", NEW_COMBINATIONS, "Total"),
)
# seen segmentation test words stay in Total but are reported below the table
SEGMENTATION_EXTRA = ("Seen", SEEN, "Total")


@dataclass
class ReportRow:
    label: str
    key: str
    count: int
    share: float | None  # percent of the parent row, None for Total
    accuracy: dict  # system name -> percent, None when the row is empty


@dataclass
class EvalReport:
    systems: list
    rows: list
    task: str
    extra: list = field(default_factory=list)  # rows reported under the table

    def row(self, label):
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    @property
    def overall(self):
        return {s: self.rows[0].accuracy[s] for s in self.systems}

    def to_text(self):
        head = ["", "No of, %"] + self.systems
        table = [head]
        for r in self.rows:
            share = "" if r.share is None else f"{r.share:.2f}"
            accs = ["-" if r.accuracy[s] is None else f"{r.accuracy[s]:.2f}" for s in self.systems]
            table.append([r.label, share] + accs)
        widths = [max(len(row[i]) for row in table) for i in range(len(head))]
        lines = []
        for row in table:
            cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
        for r in self.extra:
            accs = ", ".join(f"{s} {'-' if r.accuracy[s] is None else f'{r.accuracy[s]:.2f}'}"
                             for s in self.systems)
            lines.append(f"({r.label}: {r.count} words, {r.share:.2f}% of Total; accuracy {accs})")
        return "\n".join(lines) + "\n"

    def to_rows(self):
        """Machine-readable rows: ``(row, count, share, system, accuracy)``."""
        out = []
        for r in self.rows:
            for s in self.systems:
                out.append((r.label, r.count, r.share, s, r.accuracy[s]))
        return out

    def to_tsv(self):
        lines = ["row\tcount\tshare\tsystem\taccuracy"]
        for label, count, share, system, acc in self.to_rows():
            share_s = "" if share is None else f"{share:.6f}"
            acc_s = "" if acc is None else f"{acc:.6f}"
            lines.append(f"{label}\t{count}\t{share_s}\t{system}\t{acc_s}")
        return "\n".join(lines) + "\n"


def breakdown_report(lex, systems, test_items, task="normalization", order=None, boundary="|",
                     case_sensitive=True):
    """Accuracy of each named system overall and per test-word category.

    ``systems`` maps a name to a prediction list aligned with ``test_items``,
    which are ``(word, gold, tag)`` triples.  ``order`` picks and orders the
    columns; naming a system that was not supplied is an error.
    """
    test_items = list(test_items)
    names = list(systems) if order is None else list(order)
    for name in names:
        if name not in systems:
            raise InputError(f"unknown system {name!r}")
        if len(systems[name]) != len(test_items):
            raise InputError(f"system {name!r} has {len(systems[name])} predictions "
                             f"for {len(test_items)} test items")
    layout = SEGMENTATION_ROWS if task == "segmentation" else NORMALIZATION_ROWS
    members = defaultdict(list)
    for k, (word, gold, tag) in enumerate(test_items):
        members["Total"].append(k)
        if task == "segmentation":
            label = categorize_segmentation(lex, word, gold, boundary)
            members[label.sub or label.top].append(k)
        else:
            label = categorize(lex, word, tag)
            members[label.top].append(k)
            if label.sub:
                members[label.sub].append(k)

    def same(p, g):
        return p == g if case_sensitive else p.casefold() == g.casefold()

    def build_row(label, key, parent):
        idx = members.get(key, [])
        n_parent = len(members.get(parent, [])) if parent else None
        share = None if parent is None else (100.0 * len(idx) / n_parent if n_parent else 0.0)
        acc = {}
        for name in names:
            preds = systems[name]
            acc[name] = (100.0 * sum(same(preds[k], test_items[k][1]) for k in idx) / len(idx)
                         if idx else None)
        return ReportRow(label, key, len(idx), share, acc)

    rows = [build_row(*row) for row in layout]
    extra = [build_row(*SEGMENTATION_EXTRA)] if task == "segmentation" and members.get(SEEN) else []
    return EvalReport(names, rows, task, extra)
