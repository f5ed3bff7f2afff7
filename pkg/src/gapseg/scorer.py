"""Biaffine gap scorer over encoder outputs.

Two distinct affine heads project every encoder state into a smaller
space: a "front" view used when the position is the left side of a gap
and a "rear" view for the right side. Each gap (i, i+1) is then scored
per label as

    front_i . W[label] . rear_{i+1}  +  U[label] . (front_i ++ rear_{i+1})  +  b[label]

where the bias term lets the scorer absorb label priors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoder import dropout
from .errors import ShapeError


@dataclass
class AffineHeads:
    """The two projection heads; front and rear are independent parameters."""

    w_front: Tensor  # (head_size, state_size)
    b_front: Tensor  # (head_size,)
    w_rear: Tensor   # (head_size, state_size)
    b_rear: Tensor   # (head_size,)

    @classmethod
    def create(cls, rng, state_size, head_size):
        r = 1.0 / math.sqrt(state_size)
        return cls(
            w_front=Tensor(rng.uniform(-r, r, size=(head_size, state_size)), name="heads.w_front"),
            b_front=Tensor(np.zeros(head_size), name="heads.b_front"),
            w_rear=Tensor(rng.uniform(-r, r, size=(head_size, state_size)), name="heads.w_rear"),
            b_rear=Tensor(np.zeros(head_size), name="heads.b_rear"),
        )

    @property
    def head_size(self):
        return self.w_front.data.shape[0]

    def tensors(self):
        return [self.w_front, self.b_front, self.w_rear, self.b_rear]


@dataclass
class BiaffineParams:
    """Per-label bilinear slices plus the linear and bias terms."""

    w_gap: list[Tensor]  # L tensors, each (head_size, head_size)
    u_gap: Tensor        # (L, 2*head_size)
    b_gap: Tensor        # (L,)

    @classmethod
    def create(cls, rng, head_size, num_labels):
        w = [
            Tensor(rng.uniform(-0.01, 0.01, size=(head_size, head_size)), name=f"biaffine.w_gap.{i}")
            for i in range(num_labels)
        ]
        u = Tensor(rng.uniform(-0.01, 0.01, size=(num_labels, 2 * head_size)), name="biaffine.u_gap")
        b = Tensor(np.zeros(num_labels), name="biaffine.b_gap")
        return cls(w_gap=w, u_gap=u, b_gap=b)

    @property
    def num_labels(self):
        return self.b_gap.data.shape[0]

    def tensors(self):
        return [*self.w_gap, self.u_gap, self.b_gap]


def affine_heads(tape, states, heads, dropout_p=0.0, train=False, rng=None):
    """Project encoder states through the front and rear heads.

    In training mode an independent dropout mask is drawn before each of
    the two transformations.
    """
    if states.data.ndim != 2 or states.data.shape[1] != heads.w_front.data.shape[1]:
        raise ShapeError(
            f"encoder states {states.data.shape} do not match heads "
            f"expecting width {heads.w_front.data.shape[1]}"
        )
    x_front = dropout(tape, states, dropout_p, rng) if train else states
    x_rear = dropout(tape, states, dropout_p, rng) if train else states
    h_front = ad.add(
        tape, ad.matmul(tape, x_front, ad.transpose(tape, heads.w_front)), heads.b_front
    )
    h_rear = ad.add(
        tape, ad.matmul(tape, x_rear, ad.transpose(tape, heads.w_rear)), heads.b_rear
    )
    return h_front, h_rear


def bilinear_score(tape, h_t, h_s, w):
    """Plain bilinear form h_t . W . h_s on two vectors; returns a scalar.

    Kept as the documented building block the biaffine form extends.
    """
    if h_t.data.ndim != 1 or h_s.data.ndim != 1:
        raise ShapeError("bilinear_score expects two vectors")
    projected = ad.matmul(tape, h_t, w)
    return ad.sum_all(tape, ad.mul(tape, projected, h_s))


def biaffine_score(tape, h_front, h_rear, params):
    """Score one gap: a vector with one entry per label."""
    bilinear_terms = [
        bilinear_score(tape, h_front, h_rear, w) for w in params.w_gap
    ]
    w_term = ad.stack_rows(tape, bilinear_terms)
    pair = ad.concat(tape, h_front, h_rear, axis=0)
    u_term = ad.matmul(tape, params.u_gap, pair)
    return ad.add(tape, ad.add(tape, w_term, u_term), params.b_gap)


def score_sentence(tape, states, heads, params, dropout_p=0.0, train=False, rng=None):
    """Score every adjacent-character gap of a sentence at once.

    Returns an (n-1, L) tensor; row i holds the label scores of the gap
    between characters i and i+1. Sentences with fewer than two
    characters produce an empty matrix.
    """
    n = states.data.shape[0]
    num_labels = params.num_labels
    if n < 2:
        return Tensor(np.zeros((0, num_labels)))
    h_front, h_rear = affine_heads(tape, states, heads, dropout_p, train, rng)
    front = ad.rows(tape, h_front, 0, n - 1)
    rear = ad.rows(tape, h_rear, 1, n)
    columns = []
    for w in params.w_gap:
        projected = ad.matmul(tape, front, w)
        columns.append(ad.row_sums(tape, ad.mul(tape, projected, rear)))
    w_term = ad.transpose(tape, ad.stack_rows(tape, columns))
    pair = ad.concat(tape, front, rear, axis=1)
    u_term = ad.matmul(tape, pair, ad.transpose(tape, params.u_gap))
    return ad.add(tape, ad.add(tape, w_term, u_term), params.b_gap)


def greedy_labels(scores):
    """Per-row argmax label indices; ties go to the lowest index."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] == 0:
        raise ShapeError(f"expected a non-empty score matrix, got shape {scores.shape}")
    return scores.argmax(axis=1)
