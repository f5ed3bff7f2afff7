"""Character encoder: embedding lookup plus a stacked bidirectional LSTM.

Each layer runs one forward and one backward LSTM over its input and emits
the per-position concatenation of the two hidden states, so a layer's
output width is twice the hidden size. Layers above the first consume the
previous layer's concatenated output. Initial hidden and cell states are
zero; dropout (inverted scaling) is applied to each layer's input in
training mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ContractError

# LSTM weight matrices stack the four gates along the output axis in the
# order: input, forget, output, candidate.


@dataclass
class EncoderConfig:
    embedding_dim: int = 300
    hidden_size: int = 300
    num_layers: int = 3
    dropout_p: float = 0.0

    def __post_init__(self):
        if min(self.embedding_dim, self.hidden_size, self.num_layers) < 1:
            raise ContractError("encoder sizes must be positive")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ContractError(
                f"dropout probability must be in [0, 1), got {self.dropout_p}"
            )


@dataclass
class LstmWeights:
    """One direction of one layer."""

    w_x: Tensor  # (input_dim, 4*hidden)
    w_h: Tensor  # (hidden, 4*hidden)
    b: Tensor    # (4*hidden,)

    @classmethod
    def create(cls, rng, input_dim, hidden, name):
        r = 1.0 / math.sqrt(hidden)
        return cls(
            w_x=Tensor(rng.uniform(-r, r, size=(input_dim, 4 * hidden)), name=f"{name}.w_x"),
            w_h=Tensor(rng.uniform(-r, r, size=(hidden, 4 * hidden)), name=f"{name}.w_h"),
            b=Tensor(np.zeros(4 * hidden), name=f"{name}.b"),
        )

    def tensors(self):
        return [self.w_x, self.w_h, self.b]


@dataclass
class EncoderParams:
    layers: list[tuple[LstmWeights, LstmWeights]]  # (forward, backward) per layer

    @classmethod
    def create(cls, rng, config):
        layers = []
        input_dim = config.embedding_dim
        for i in range(config.num_layers):
            fwd = LstmWeights.create(rng, input_dim, config.hidden_size, f"lstm.{i}.fwd")
            bwd = LstmWeights.create(rng, input_dim, config.hidden_size, f"lstm.{i}.bwd")
            layers.append((fwd, bwd))
            input_dim = 2 * config.hidden_size
        return cls(layers)

    def tensors(self):
        out = []
        for fwd, bwd in self.layers:
            out.extend(fwd.tensors())
            out.extend(bwd.tensors())
        return out


def embed(tape, indices, table):
    """Look up embedding rows for a character-index sequence."""
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= table.rows):
        raise ContractError(
            f"character index out of range for table with {table.rows} rows"
        )
    if table.trainable:
        return ad.gather_rows(tape, table.weights, idx)
    return Tensor(table.weights.data[idx])


def dropout(tape, x, p, rng):
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""
    if p <= 0.0:
        return x
    if rng is None:
        raise ContractError("dropout with p > 0 requires a random generator")
    mask = (rng.random(x.data.shape) >= p) / (1.0 - p)
    return ad.mul_const(tape, x, mask)


def _apply_gates(tape, gates, c_prev, hidden):
    i = ad.sigmoid(tape, ad.slice1d(tape, gates, 0, hidden))
    f = ad.sigmoid(tape, ad.slice1d(tape, gates, hidden, 2 * hidden))
    o = ad.sigmoid(tape, ad.slice1d(tape, gates, 2 * hidden, 3 * hidden))
    g = ad.tanh(tape, ad.slice1d(tape, gates, 3 * hidden, 4 * hidden))
    c = ad.add(tape, ad.mul(tape, f, c_prev), ad.mul(tape, i, g))
    h = ad.mul(tape, o, ad.tanh(tape, c))
    return h, c


def lstm_cell(tape, x, h_prev, c_prev, weights):
    """One LSTM recurrence step on a single input vector."""
    hidden = weights.w_h.data.shape[0]
    gates = ad.add(
        tape,
        ad.add(tape, ad.matmul(tape, x, weights.w_x), ad.matmul(tape, h_prev, weights.w_h)),
        weights.b,
    )
    return _apply_gates(tape, gates, c_prev, hidden)


def _run_direction(tape, x, weights, hidden, reverse):
    n = x.data.shape[0]
    # fold the input projection and bias into one matrix product up front
    pre = ad.add(tape, ad.matmul(tape, x, weights.w_x), weights.b)
    h = Tensor(np.zeros(hidden))
    c = Tensor(np.zeros(hidden))
    outputs = [None] * n
    order = range(n - 1, -1, -1) if reverse else range(n)
    for t in order:
        gates = ad.add(tape, ad.row(tape, pre, t), ad.matmul(tape, h, weights.w_h))
        h, c = _apply_gates(tape, gates, c, hidden)
        outputs[t] = h
    return ad.stack_rows(tape, outputs)


def _run_direction_fast(x, weights, hidden, reverse):
    # untaped twin of _run_direction; must stay expression-for-expression
    # identical so inference matches the recorded forward bit for bit
    pre = x @ weights.w_x.data + weights.b.data
    w_h = weights.w_h.data
    n = x.shape[0]
    h = np.zeros(hidden)
    c = np.zeros(hidden)
    out = np.empty((n, hidden))
    order = range(n - 1, -1, -1) if reverse else range(n)
    for t in order:
        gates = pre[t] + h @ w_h
        i = ad.sigmoid_values(gates[:hidden])
        f = ad.sigmoid_values(gates[hidden : 2 * hidden])
        o = ad.sigmoid_values(gates[2 * hidden : 3 * hidden])
        g = np.tanh(gates[3 * hidden :])
        c = f * c + i * g
        h = o * np.tanh(c)
        out[t] = h
    return out


def encode(tape, indices, table, params, config, train=False, rng=None):
    """Encode a character-index sequence into per-position context vectors.

    Returns an (n, 2*hidden) tensor whose row i concatenates the forward
    and backward hidden states for position i of the top layer. Without a
    tape (inference) a vectorized path skips gradient bookkeeping but
    produces bit-identical values.
    """
    if len(indices) < 1:
        raise ContractError("cannot encode an empty sequence")
    if tape is None and not train:
        idx = np.asarray(indices, dtype=np.intp)
        if idx.size and (idx.min() < 0 or idx.max() >= table.rows):
            raise ContractError(
                f"character index out of range for table with {table.rows} rows"
            )
        x = table.weights.data[idx]
        for fwd, bwd in params.layers:
            h_fwd = _run_direction_fast(x, fwd, config.hidden_size, reverse=False)
            h_bwd = _run_direction_fast(x, bwd, config.hidden_size, reverse=True)
            x = np.concatenate([h_fwd, h_bwd], axis=1)
        return Tensor(x)
    x = embed(tape, indices, table)
    for fwd, bwd in params.layers:
        if train and config.dropout_p > 0.0:
            x = dropout(tape, x, config.dropout_p, rng)
        h_fwd = _run_direction(tape, x, fwd, config.hidden_size, reverse=False)
        h_bwd = _run_direction(tape, x, bwd, config.hidden_size, reverse=True)
        x = ad.concat(tape, h_fwd, h_bwd, axis=1)
    return x
