"""Neural Chinese word segmenter that labels the gaps between characters.

A stacked bidirectional LSTM encodes each character in context, a biaffine
scorer rates every adjacent-character gap under one of three label schemes
(01, BE, BEMS), and constrained beam search or Viterbi decoding turns the
scores into a valid segmentation. Comes with training, evaluation and
timing tools plus a CLI (`gapseg`).
"""

from .autodiff import Adam, Tape, Tensor, backward
from .corpus import (
    EmbeddingTable,
    SegmentedSentence,
    Vocabulary,
    dev_split,
    from_gap_labels,
    load_corpus,
    load_embeddings,
    parse_corpus,
    render,
    to_gap_labels,
)
from .decoding import beam_decode, decode, segment, viterbi_decode
from .evaluation import EvalReport, bench, bucketed_f1, f1, hybrid_combine
from .model import Segmenter, SegmenterConfig
from .tagsets import TagSetSpec, builtin_tagsets, get_tagset, validate
from .training import Checkpoint, TrainConfig, gap_loss, train

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "Checkpoint",
    "EmbeddingTable",
    "EvalReport",
    "SegmentedSentence",
    "Segmenter",
    "SegmenterConfig",
    "TagSetSpec",
    "Tape",
    "Tensor",
    "TrainConfig",
    "Vocabulary",
    "backward",
    "beam_decode",
    "bench",
    "bucketed_f1",
    "builtin_tagsets",
    "decode",
    "dev_split",
    "f1",
    "from_gap_labels",
    "gap_loss",
    "get_tagset",
    "hybrid_combine",
    "load_corpus",
    "load_embeddings",
    "parse_corpus",
    "render",
    "segment",
    "to_gap_labels",
    "train",
    "validate",
    "viterbi_decode",
]
