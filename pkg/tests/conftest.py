"""Shared helpers: finite differences, fuzz generators, tiny model factories."""

import numpy as np
import pytest

from gapseg.corpus import SegmentedSentence, Vocabulary
from gapseg.model import Segmenter, SegmenterConfig

CJK_BASE = 0x4E00


def numeric_gradient(f, tensor, h=1e-5):
    """Central-difference gradient of scalar f() w.r.t. one tensor, in place."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f()
        flat[i] = orig - h
        down = f()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def max_rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-6)
    return float(np.max(np.abs(a - b) / denom))


def random_sentence(rng, min_chars=1, max_chars=20, alphabet=60):
    """A random segmentation over a small CJK alphabet."""
    n = int(rng.integers(min_chars, max_chars + 1))
    chars = "".join(chr(CJK_BASE + int(rng.integers(alphabet))) for _ in range(n))
    boundaries = []
    pos = 0
    while pos < n:
        pos = min(n, pos + int(rng.integers(1, 5)))
        boundaries.append(pos)
    return SegmentedSentence(chars, tuple(boundaries))


def make_lexicon(rng, size=50):
    """Words whose first character class differs from continuations.

    Word-initial and continuation characters come from disjoint pools, so
    any concatenation of lexicon words has exactly one segmentation.
    """
    starts = [chr(CJK_BASE + i) for i in range(25)]
    conts = [chr(CJK_BASE + 64 + i) for i in range(25)]
    words = set()
    while len(words) < size:
        length = int(rng.integers(1, 4))
        w = rng.choice(starts) + "".join(rng.choice(conts) for _ in range(length - 1))
        words.add(w)
    return sorted(words)


def sentences_from_lexicon(rng, lexicon, count, min_words=3, max_words=8):
    out = []
    for _ in range(count):
        k = int(rng.integers(min_words, max_words + 1))
        words = [lexicon[int(rng.integers(len(lexicon)))] for _ in range(k)]
        out.append(SegmentedSentence.from_words(words))
    return out


def tiny_model(tagset="01", seed=42, vocab_chars="ABCDE", **sizes):
    """A small random model for unit tests."""
    defaults = dict(embedding_dim=6, hidden_size=8, num_layers=1, biaffine_size=7)
    defaults.update(sizes)
    config = SegmenterConfig(tagset=tagset, **defaults)
    vocab = Vocabulary.from_chars(list(vocab_chars))
    return Segmenter.create(config, vocab, np.random.default_rng(seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
