"""Minimal dense-tensor arithmetic with tape-based reverse-mode differentiation.

Everything is float64 numpy underneath. Each operation computes its result
eagerly and, when a tape is supplied, records a closure that propagates the
output gradient back to its inputs. Running the closures in reverse recording
order is a valid reverse topological walk because the forward pass executes
eagerly.

Supported shapes are only what the segmenter needs: scalars (0-d), vectors
and matrices. Broadcasting is deliberately restricted to combining a vector
with every row of a matrix (bias-over-rows), which keeps every gradient rule
auditable by hand.

A tape and the tensors it references belong to a single thread for the
duration of one forward/backward pass. Parameter tensors that are no longer
being updated can be shared freely across threads.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, ShapeError, TrainingError


class Tensor:
    """A named float64 array with a gradient slot."""

    __slots__ = ("data", "grad", "name")

    def __init__(self, data, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        label = self.name if self.name else "tensor"
        return f"Tensor({label}, shape={self.data.shape})"


class Tape:
    """Ordered record of the operations applied during one forward pass."""

    def __init__(self):
        self._backward_steps = []

    def record(self, step):
        self._backward_steps.append(step)

    def reset(self):
        self._backward_steps.clear()

    def __len__(self):
        return len(self._backward_steps)


def _accumulate(t, g):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def backward(tape, loss):
    """Propagate gradients from a scalar loss to every tensor on the tape.

    Tensors that do not participate in the loss keep their existing gradient
    (zeros if `zero_grad` was called, None otherwise).
    """
    if loss.data.size != 1:
        raise ContractError(
            f"backward: loss must be a scalar, got shape {loss.data.shape}"
        )
    loss.grad = np.ones_like(loss.data)
    for step in reversed(tape._backward_steps):
        step()


def matmul(tape, a, b):
    """Matrix product. Accepts (m,k)@(k,n), (m,k)@(k,) and (k,)@(k,n)."""
    ad, bd = a.data, b.data
    if ad.ndim == 2 and bd.ndim == 2:
        ok = ad.shape[1] == bd.shape[0]
    elif ad.ndim == 2 and bd.ndim == 1:
        ok = ad.shape[1] == bd.shape[0]
    elif ad.ndim == 1 and bd.ndim == 2:
        ok = ad.shape[0] == bd.shape[0]
    else:
        ok = False
    if not ok:
        raise ShapeError(f"matmul: incompatible shapes {ad.shape} x {bd.shape}")
    out = Tensor(ad @ bd)
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            if ad.ndim == 2 and bd.ndim == 2:
                _accumulate(a, g @ bd.T)
                _accumulate(b, ad.T @ g)
            elif ad.ndim == 2 and bd.ndim == 1:
                _accumulate(a, np.outer(g, bd))
                _accumulate(b, ad.T @ g)
            else:
                _accumulate(a, bd @ g)
                _accumulate(b, np.outer(ad, g))

        tape.record(step)
    return out


def _broadcast_kind(opname, a, b):
    if a.data.shape == b.data.shape:
        return "same"
    if (
        a.data.ndim == 2
        and b.data.ndim == 1
        and a.data.shape[1] == b.data.shape[0]
    ):
        return "rows"
    raise ShapeError(
        f"{opname}: incompatible shapes {a.data.shape} and {b.data.shape}"
    )


def add(tape, a, b):
    """Element-wise sum; `b` may be a vector added to every row of `a`."""
    kind = _broadcast_kind("add", a, b)
    out = Tensor(a.data + b.data)
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            _accumulate(a, g)
            _accumulate(b, g.sum(axis=0) if kind == "rows" else g)

        tape.record(step)
    return out


def mul(tape, a, b):
    """Element-wise product; `b` may be a vector applied to every row of `a`."""
    kind = _broadcast_kind("mul", a, b)
    ad, bd = a.data, b.data
    out = Tensor(ad * bd)
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            _accumulate(a, g * bd)
            gb = g * ad
            _accumulate(b, gb.sum(axis=0) if kind == "rows" else gb)

        tape.record(step)
    return out


def mul_const(tape, a, values):
    """Multiply by a fixed array that receives no gradient (dropout masks)."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != a.data.shape:
        raise ShapeError(
            f"mul_const: incompatible shapes {a.data.shape} and {values.shape}"
        )
    out = Tensor(a.data * values)
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            _accumulate(a, g * values)

        tape.record(step)
    return out


def scale(tape, a, factor):
    """Multiply every element by a python scalar."""
    factor = float(factor)
    out = Tensor(a.data * factor)
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            _accumulate(a, g * factor)

        tape.record(step)
    return out


def tanh(tape, a):
    out = Tensor(np.tanh(a.data))
    if tape is not None:
        od = out.data

        def step():
            g = out.grad
            if g is None:
                return
            _accumulate(a, g * (1.0 - od * od))

        tape.record(step)
    return out


def sigmoid_values(x):
    """Numerically stable sigmoid on a raw array (shared with fast paths)."""
    with np.errstate(over="ignore"):
        return np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)), np.exp(x) / (1.0 + np.exp(x)))


def sigmoid(tape, a):
    out = Tensor(sigmoid_values(a.data))
    if tape is not None:
        od = out.data

        def step():
            g = out.grad
            if g is None:
                return
            _accumulate(a, g * od * (1.0 - od))

        tape.record(step)
    return out


def concat(tape, a, b, axis=0):
    ad, bd = a.data, b.data
    if ad.ndim != bd.ndim:
        raise ShapeError(f"concat: rank mismatch {ad.shape} vs {bd.shape}")
    if not 0 <= axis < ad.ndim:
        raise ShapeError(f"concat: axis {axis} out of range for rank {ad.ndim}")
    for ax in range(ad.ndim):
        if ax != axis and ad.shape[ax] != bd.shape[ax]:
            raise ShapeError(
                f"concat: shapes {ad.shape} and {bd.shape} disagree on axis {ax}"
            )
    out = Tensor(np.concatenate([ad, bd], axis=axis))
    if tape is not None:
        split = ad.shape[axis]

        def step():
            g = out.grad
            if g is None:
                return
            if axis == 0:
                _accumulate(a, g[:split])
                _accumulate(b, g[split:])
            else:
                _accumulate(a, g[:, :split])
                _accumulate(b, g[:, split:])

        tape.record(step)
    return out


def transpose(tape, a):
    if a.data.ndim != 2:
        raise ShapeError(f"transpose: expected a matrix, got shape {a.data.shape}")
    out = Tensor(a.data.T.copy())
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            _accumulate(a, g.T)

        tape.record(step)
    return out


def row(tape, a, i):
    """Row `i` of a matrix as a vector."""
    if a.data.ndim != 2:
        raise ShapeError(f"row: expected a matrix, got shape {a.data.shape}")
    out = Tensor(a.data[i].copy())
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            a.grad[i] += g

        tape.record(step)
    return out


def rows(tape, a, start, stop):
    """Contiguous row range [start, stop) of a matrix."""
    if a.data.ndim != 2:
        raise ShapeError(f"rows: expected a matrix, got shape {a.data.shape}")
    out = Tensor(a.data[start:stop].copy())
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            a.grad[start:stop] += g

        tape.record(step)
    return out


def slice1d(tape, a, start, stop):
    """Contiguous slice [start, stop) of a vector."""
    if a.data.ndim != 1:
        raise ShapeError(f"slice1d: expected a vector, got shape {a.data.shape}")
    out = Tensor(a.data[start:stop].copy())
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            a.grad[start:stop] += g

        tape.record(step)
    return out


def stack_rows(tape, parts):
    """Stack equally shaped tensors along a new leading axis."""
    if not parts:
        raise ShapeError("stack_rows: nothing to stack")
    shape = parts[0].data.shape
    for p in parts:
        if p.data.shape != shape:
            raise ShapeError(
                f"stack_rows: mixed shapes {shape} and {p.data.shape}"
            )
    out = Tensor(np.stack([p.data for p in parts]))
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            for j, p in enumerate(parts):
                _accumulate(p, g[j])

        tape.record(step)
    return out


def row_sums(tape, a):
    """Per-row sums of a matrix, as a vector."""
    if a.data.ndim != 2:
        raise ShapeError(f"row_sums: expected a matrix, got shape {a.data.shape}")
    out = Tensor(a.data.sum(axis=1))
    if tape is not None:
        width = a.data.shape[1]

        def step():
            g = out.grad
            if g is None:
                return
            _accumulate(a, np.repeat(g[:, None], width, axis=1))

        tape.record(step)
    return out


def gather_rows(tape, table, indices):
    """Gather rows of a matrix by index; gradients accumulate per row."""
    if table.data.ndim != 2:
        raise ShapeError(
            f"gather_rows: expected a matrix, got shape {table.data.shape}"
        )
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= table.data.shape[0]):
        raise ContractError(
            f"gather_rows: index out of range for table with "
            f"{table.data.shape[0]} rows"
        )
    out = Tensor(table.data[idx])
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, idx, g)

        tape.record(step)
    return out


def sum_all(tape, a):
    """Sum of every element, as a 0-d scalar."""
    out = Tensor(a.data.sum())
    if tape is not None:

        def step():
            g = out.grad
            if g is None:
                return
            _accumulate(a, np.full_like(a.data, float(g)))

        tape.record(step)
    return out


def softmax_cross_entropy(tape, logits, targets):
    """Mean softmax cross-entropy of 2-d logits against integer targets."""
    z = logits.data
    if z.ndim != 2:
        raise ShapeError(
            f"softmax_cross_entropy: expected a matrix, got shape {z.shape}"
        )
    idx = np.asarray(targets, dtype=np.intp)
    m, k = z.shape
    if idx.shape != (m,):
        raise ContractError(
            f"softmax_cross_entropy: {m} rows but {idx.size} targets"
        )
    if idx.size and (idx.min() < 0 or idx.max() >= k):
        raise ContractError("softmax_cross_entropy: target index out of range")
    shifted = z - z.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1)
    losses = np.log(total) - shifted[np.arange(m), idx]
    out = Tensor(losses.mean())
    if tape is not None:
        probs = exp / total[:, None]

        def step():
            g = out.grad
            if g is None:
                return
            gl = probs.copy()
            gl[np.arange(m), idx] -= 1.0
            _accumulate(logits, gl * (float(g) / m))

        tape.record(step)
    return out


class Adam:
    """Adam with bias correction over a fixed list of parameter tensors.

    Moments live alongside this object; the step counter advances by one
    per call to `step`.
    """

    def __init__(self, params, learning_rate, beta1=0.9, beta2=0.999, epsilon=1e-8):
        if learning_rate <= 0:
            raise ContractError(f"Adam: learning rate must be positive, got {learning_rate}")
        self.params = list(params)
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.step_count = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grads(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            elif not np.all(np.isfinite(g)):
                raise TrainingError(
                    f"non-finite gradient for parameter '{p.name or '<unnamed>'}'"
                )
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)
