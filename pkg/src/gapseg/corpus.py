"""Reading segmented corpora, building vocabularies and gap-label conversion.

The corpus format is one sentence per line, words separated by spaces
(ASCII or full-width). A segmentation is stored as the character string
plus the strictly increasing word-end positions, the last of which is
always the sentence length.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor
from .errors import ConfigError, ContractError, CorpusError, DecodeError
from .tagsets import validate

log = logging.getLogger(__name__)

UNKNOWN_INDEX = 0

# word separators in raw corpus lines; other whitespace is stripped
_SEPARATORS = (" ", "　")


@dataclass(frozen=True)
class SegmentedSentence:
    chars: str
    boundaries: tuple[int, ...]

    def __post_init__(self):
        n = len(self.chars)
        if n < 1:
            raise ContractError("sentence must contain at least one character")
        if not self.boundaries:
            raise ContractError("boundary list must not be empty")
        prev = 0
        for b in self.boundaries:
            if not prev < b <= n:
                raise ContractError(
                    f"boundaries must be strictly increasing within 1..{n}, got {self.boundaries}"
                )
            prev = b
        if self.boundaries[-1] != n:
            raise ContractError(
                f"last boundary must equal sentence length {n}, got {self.boundaries[-1]}"
            )

    @property
    def length(self):
        return len(self.chars)

    def words(self):
        out = []
        prev = 0
        for b in self.boundaries:
            out.append(self.chars[prev:b])
            prev = b
        return out

    @classmethod
    def from_words(cls, words):
        chars = "".join(words)
        boundaries = []
        pos = 0
        for w in words:
            pos += len(w)
            boundaries.append(pos)
        return cls(chars, tuple(boundaries))


def render(sentence):
    """Render a segmentation as a space-separated line."""
    return " ".join(sentence.words())


def _clean_word(token):
    return "".join(ch for ch in token if not ch.isspace())


def parse_line(line):
    """Parse one corpus line; returns None for blank lines."""
    for sep in _SEPARATORS[1:]:
        line = line.replace(sep, " ")
    words = [w for w in (_clean_word(t) for t in line.split(" ")) if w]
    if not words:
        return None
    return SegmentedSentence.from_words(words)


def parse_corpus(lines):
    """Parse an iterable of corpus lines (str or UTF-8 bytes).

    Blank lines are skipped. Byte input that is not valid UTF-8 raises a
    CorpusError carrying the 1-based line number.
    """
    sentences = []
    for lineno, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusError(f"invalid UTF-8: {exc}", line=lineno) from exc
        s = parse_line(raw.rstrip("\n").rstrip("\r"))
        if s is not None:
            sentences.append(s)
    return sentences


def load_corpus(path):
    """Read a corpus file in binary mode so encoding errors carry line numbers."""
    with open(path, "rb") as fh:
        return parse_corpus(fh)


def read_raw_lines(path):
    """Read unsegmented input lines, preserving blank lines for alignment."""
    out = []
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusError(f"invalid UTF-8: {exc}", line=lineno) from exc
            out.append("".join(ch for ch in text if not ch.isspace()))
    return out


# ---------------------------------------------------------------------------
# gap labels

def _char_tags_be(sentence):
    tags = []
    prev = 0
    for b in sentence.boundaries:
        tags.append("B")
        tags.extend("E" * (b - prev - 1))
        prev = b
    return tags


def _char_tags_bems(sentence):
    tags = []
    prev = 0
    for b in sentence.boundaries:
        length = b - prev
        if length == 1:
            tags.append("S")
        else:
            tags.append("B")
            tags.extend("M" * (length - 2))
            tags.append("E")
        prev = b
    return tags


def to_gap_labels(sentence, tagset):
    """Convert a segmentation to per-gap labels under the given tag set.

    A single-character sentence has no gaps and yields an empty sequence.
    """
    n = sentence.length
    if n < 2:
        return []
    if tagset.name == "01":
        cuts = set(sentence.boundaries)
        return ["1" if i in cuts else "0" for i in range(1, n)]
    if tagset.name == "BE":
        tags = _char_tags_be(sentence)
    elif tagset.name == "BEMS":
        tags = _char_tags_bems(sentence)
    else:
        raise ConfigError(f"unsupported tag set '{tagset.name}'")
    return [tags[i] + tags[i + 1] for i in range(n - 1)]


def from_gap_labels(chars, labels, tagset):
    """Rebuild a segmentation from gap labels (inverse of to_gap_labels)."""
    n = len(chars)
    if len(labels) != n - 1:
        raise ContractError(
            f"expected {n - 1} gap labels for {n} characters, got {len(labels)}"
        )
    violation = validate(labels, tagset)
    if violation is not None:
        raise DecodeError(
            f"invalid label sequence at position {violation.position}: {violation.message}"
        )
    boundaries = [
        i + 1 for i, lab in enumerate(labels) if lab in tagset.boundary_labels
    ]
    boundaries.append(n)
    return SegmentedSentence(chars, tuple(boundaries))


# ---------------------------------------------------------------------------
# vocabulary and embeddings

@dataclass
class Vocabulary:
    """Character-to-index map; index 0 is reserved for unknown characters."""

    index: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_corpus(cls, sentences):
        index = {}
        for s in sentences:
            for ch in s.chars:
                if ch not in index:
                    index[ch] = len(index) + 1
        return cls(index)

    @classmethod
    def from_chars(cls, chars):
        return cls({ch: i + 1 for i, ch in enumerate(chars)})

    def __len__(self):
        return len(self.index) + 1  # rows including the unknown slot

    def __contains__(self, ch):
        return ch in self.index

    def lookup(self, ch):
        return self.index.get(ch, UNKNOWN_INDEX)

    def encode(self, chars):
        return np.array([self.lookup(ch) for ch in chars], dtype=np.intp)

    def chars_in_order(self):
        return list(self.index)


@dataclass
class EmbeddingTable:
    """Character embedding matrix, one row per vocabulary index."""

    weights: Tensor
    trainable: bool = True

    @property
    def dim(self):
        return self.weights.data.shape[1]

    @property
    def rows(self):
        return self.weights.data.shape[0]

    @classmethod
    def random(cls, vocab, dim, rng, trainable=True):
        data = rng.uniform(-0.05, 0.05, size=(len(vocab), dim))
        return cls(Tensor(data, name="embedding"), trainable=trainable)


@dataclass(frozen=True)
class EmbeddingLoadReport:
    loaded: int
    ignored: int


def load_embeddings(lines, vocab, dim, rng, trainable=True):
    """Load word2vec-text embeddings for the vocabulary.

    Expects a "count dim" header followed by "char v1 ... v_dim" lines.
    Rows for known characters are copied verbatim; characters missing from
    the file (and the unknown slot) keep a seeded uniform(-0.05, 0.05)
    initialization. Entries for out-of-vocabulary characters are counted
    and skipped.
    """
    table = EmbeddingTable.random(vocab, dim, rng, trainable=trainable)
    it = iter(enumerate(lines, start=1))
    try:
        lineno, header = next(it)
    except StopIteration:
        raise CorpusError("embedding file is empty", line=1) from None
    if isinstance(header, bytes):
        header = header.decode("utf-8")
    fields = header.split()
    if len(fields) != 2:
        raise CorpusError(f"expected 'count dim' header, got {header!r}", line=lineno)
    try:
        declared_count, file_dim = int(fields[0]), int(fields[1])
    except ValueError:
        raise CorpusError(f"non-numeric header {header!r}", line=lineno) from None
    if file_dim != dim:
        raise ConfigError(
            f"embedding dimension mismatch: file has {file_dim}, config wants {dim}"
        )
    loaded = 0
    ignored = 0
    for lineno, raw in it:
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusError(f"invalid UTF-8: {exc}", line=lineno) from exc
        raw = raw.rstrip("\n").rstrip("\r")
        if not raw:
            continue
        fields = raw.split(" ")
        if len(fields) != dim + 1:
            raise CorpusError(
                f"expected {dim + 1} fields, got {len(fields)}", line=lineno
            )
        ch = fields[0]
        try:
            values = [float(v) for v in fields[1:]]
        except ValueError as exc:
            raise CorpusError(f"bad float: {exc}", line=lineno) from None
        if ch in vocab:
            table.weights.data[vocab.lookup(ch)] = values
            loaded += 1
        else:
            ignored += 1
    if loaded + ignored != declared_count:
        log.warning(
            "embedding header declared %d entries, found %d",
            declared_count,
            loaded + ignored,
        )
    return table, EmbeddingLoadReport(loaded=loaded, ignored=ignored)


def dev_split(sentences):
    """Split off the last tenth of a corpus as the development set.

    The development set is the final floor(N/10) sentences in original
    order, but at least one sentence when the corpus has two or more.
    """
    if not sentences:
        raise ContractError("cannot split an empty corpus")
    n = len(sentences)
    if n == 1:
        log.warning("corpus has a single sentence; development set is empty")
        return list(sentences), []
    k = max(1, n // 10)
    return list(sentences[: n - k]), list(sentences[n - k :])
