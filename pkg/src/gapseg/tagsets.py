"""Gap tag sets: label inventories, transition tables and boundary semantics.

A gap sits between two adjacent characters. Under the paired schemes a gap
label is the pair of character tags flanking it ("BE" = left character
begins a word, right character ends one), so legal label sequences chain:
the right tag of one gap is the left tag of the next. The 01 scheme labels
gaps directly (1 = word boundary) and has no chaining constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass(frozen=True)
class TagSetSpec:
    name: str
    labels: tuple[str, ...]
    transitions: dict[str, tuple[str, ...]]
    start_allowed: frozenset[str]
    end_allowed: frozenset[str]
    boundary_labels: frozenset[str]
    # index-space mirrors, derived in _make_spec
    label_index: dict[str, int] = field(default_factory=dict)
    successor_indices: tuple[tuple[int, ...], ...] = ()
    start_indices: tuple[int, ...] = ()
    end_indices: tuple[int, ...] = ()

    @property
    def num_labels(self):
        return len(self.labels)


def _make_spec(name, labels, transitions, start_allowed, end_allowed, boundary):
    index = {lab: i for i, lab in enumerate(labels)}
    succ = tuple(
        tuple(index[s] for s in transitions[lab]) for lab in labels
    )
    return TagSetSpec(
        name=name,
        labels=tuple(labels),
        transitions={lab: tuple(transitions[lab]) for lab in labels},
        start_allowed=frozenset(start_allowed),
        end_allowed=frozenset(end_allowed),
        boundary_labels=frozenset(boundary),
        label_index=index,
        successor_indices=succ,
        start_indices=tuple(index[lab] for lab in labels if lab in start_allowed),
        end_indices=tuple(index[lab] for lab in labels if lab in end_allowed),
    )


def _tagset_01():
    labels = ("0", "1")
    return _make_spec(
        name="01",
        labels=labels,
        transitions={lab: labels for lab in labels},
        start_allowed=labels,
        end_allowed=labels,
        boundary=("1",),
    )


def _tagset_be():
    # A word is B, BE, BEE, ...; a boundary sits at a gap whose right tag is B.
    labels = ("BB", "BE", "EB", "EE")
    transitions = {
        "BE": ("EB", "EE"),
        "BB": ("BB", "BE"),
        "EB": ("BB", "BE"),
        "EE": ("EB", "EE"),
    }
    return _make_spec(
        name="BE",
        labels=labels,
        transitions=transitions,
        start_allowed=("BB", "BE"),           # first character starts a word
        end_allowed=labels,                   # final character may be B or E
        boundary=("BB", "EB"),                # right tag is B
    )


def _tagset_bems():
    # Words are S, BE, BME, BMME, ...; boundaries at gaps whose right tag is B or S.
    labels = ("BE", "BM", "EB", "ES", "SS", "SB", "ME", "MM")
    transitions = {
        "BE": ("EB", "ES"),
        "BM": ("ME", "MM"),
        "EB": ("BE", "BM"),
        "ES": ("SB", "SS"),
        "SS": ("SS", "SB"),
        "SB": ("BE", "BM"),
        "ME": ("EB", "ES"),
        "MM": ("MM", "ME"),
    }
    return _make_spec(
        name="BEMS",
        labels=labels,
        transitions=transitions,
        start_allowed=("BE", "BM", "SS", "SB"),   # left tag B or S
        end_allowed=("BE", "ME", "ES", "SS"),     # right tag E or S
        boundary=("EB", "ES", "SS", "SB"),        # right tag B or S
    )


def builtin_tagsets():
    """The three built-in tag sets, keyed by canonical name."""
    return {"01": _tagset_01(), "BE": _tagset_be(), "BEMS": _tagset_bems()}


_ALIASES = {
    "01": "01",
    "be": "BE",
    "bems": "BEMS",
}


def get_tagset(name):
    """Look up a built-in tag set by name (case-insensitive)."""
    key = _ALIASES.get(str(name).lower())
    if key is None:
        raise ConfigError(
            f"unknown tag set '{name}', expected one of 01, BE, BEMS"
        )
    return builtin_tagsets()[key]


@dataclass(frozen=True)
class Violation:
    """First constraint violation in a label sequence (1-based position)."""

    position: int
    message: str


def validate(labels, tagset):
    """Check a gap-label sequence against start, transition and end constraints.

    Returns None when valid, otherwise a Violation describing the first
    problem. The empty sequence (single-character sentence) is valid.
    """
    if not labels:
        return None
    for i, lab in enumerate(labels):
        if lab not in tagset.label_index:
            return Violation(i + 1, f"unknown label '{lab}'")
    first = labels[0]
    if first not in tagset.start_allowed:
        return Violation(1, f"label '{first}' may not start a sentence")
    for i in range(1, len(labels)):
        prev, cur = labels[i - 1], labels[i]
        if cur not in tagset.transitions[prev]:
            return Violation(i + 1, f"'{prev}' cannot precede '{cur}'")
    last = labels[-1]
    if last not in tagset.end_allowed:
        return Violation(len(labels), f"label '{last}' may not end a sentence")
    return None
