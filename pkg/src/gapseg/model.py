"""Full segmenter model: vocabulary, encoder and scorer glued together."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import EmbeddingTable
from .decoding import DEFAULT_BEAM_WIDTH, segment
from .encoder import EncoderConfig, EncoderParams, encode
from .errors import ConfigError
from .scorer import AffineHeads, BiaffineParams, score_sentence
from .tagsets import get_tagset


@dataclass
class SegmenterConfig:
    tagset: str = "01"
    embedding_dim: int = 300
    hidden_size: int = 300
    num_layers: int = 3
    biaffine_size: int = 300
    dropout_p: float = 0.0

    def encoder_config(self):
        return EncoderConfig(
            embedding_dim=self.embedding_dim,
            hidden_size=self.hidden_size,
            num_layers=self.num_layers,
            dropout_p=self.dropout_p,
        )


class Segmenter:
    """A trained (or trainable) gap segmenter.

    Parameter creation order is fixed (embedding, LSTM layers, heads,
    biaffine) so runs with the same seed are reproducible and checkpoint
    manifests are stable.
    """

    def __init__(self, config, vocab, tagset, embedding, encoder_params, heads, biaffine):
        if biaffine.num_labels != tagset.num_labels:
            raise ConfigError(
                f"scorer has {biaffine.num_labels} labels but tag set "
                f"{tagset.name} defines {tagset.num_labels}"
            )
        self.config = config
        self.vocab = vocab
        self.tagset = tagset
        self.embedding = embedding
        self.encoder_params = encoder_params
        self.heads = heads
        self.biaffine = biaffine

    @classmethod
    def create(cls, config, vocab, rng, embedding=None):
        tagset = get_tagset(config.tagset)
        if embedding is None:
            embedding = EmbeddingTable.random(vocab, config.embedding_dim, rng)
        elif embedding.dim != config.embedding_dim:
            raise ConfigError(
                f"embedding table dim {embedding.dim} does not match config "
                f"{config.embedding_dim}"
            )
        encoder_params = EncoderParams.create(rng, config.encoder_config())
        heads = AffineHeads.create(rng, 2 * config.hidden_size, config.biaffine_size)
        biaffine = BiaffineParams.create(rng, config.biaffine_size, tagset.num_labels)
        return cls(config, vocab, tagset, embedding, encoder_params, heads, biaffine)

    def parameters(self):
        out = []
        if self.embedding.trainable:
            out.append(self.embedding.weights)
        out.extend(self.encoder_params.tensors())
        out.extend(self.heads.tensors())
        out.extend(self.biaffine.tensors())
        return out

    def named_tensors(self):
        """All persistent tensors (including a frozen embedding) by name."""
        tensors = [self.embedding.weights]
        tensors.extend(self.encoder_params.tensors())
        tensors.extend(self.heads.tensors())
        tensors.extend(self.biaffine.tensors())
        return {t.name: t for t in tensors}

    def encode_states(self, tape, indices, train=False, rng=None):
        return encode(
            tape,
            indices,
            self.embedding,
            self.encoder_params,
            self.config.encoder_config(),
            train=train,
            rng=rng,
        )

    def score_states(self, tape, states, train=False, rng=None):
        return score_sentence(
            tape,
            states,
            self.heads,
            self.biaffine,
            dropout_p=self.config.dropout_p,
            train=train,
            rng=rng,
        )

    def forward(self, tape, indices, train=False, rng=None):
        """Gap scores for a character-index sequence as an (n-1, L) tensor."""
        states = self.encode_states(tape, indices, train=train, rng=rng)
        return self.score_states(tape, states, train=train, rng=rng)

    def gap_scores(self, chars):
        """Inference-mode gap scores for raw characters as a numpy array."""
        indices = self.vocab.encode(chars)
        return self.forward(None, indices).data

    def segment_sentence(self, chars, decoder="auto", width=DEFAULT_BEAM_WIDTH):
        """Segment one unsegmented string with the trained model."""
        if len(chars) == 1:
            return segment(chars, np.zeros((0, self.tagset.num_labels)), self.tagset)
        scores = self.gap_scores(chars)
        return segment(chars, scores, self.tagset, decoder=decoder, width=width)
