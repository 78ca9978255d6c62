"""Minimal reverse-mode autodiff over real numpy arrays.

The tape is an append-only list of nodes in topological order (parents are
created before children); the backward pass walks it exactly once in
reverse. Complex quantities are handled by the caller as separate
real/imaginary arrays. Only the operations needed by the training objective
are provided.
"""

from __future__ import annotations

import numpy as np

from .linalg import NormKind, norm as matrix_norm, norm_gradient


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    grad = np.asarray(grad)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Node:
    """Handle to one tape entry; supports +, -, * with nodes or constants."""

    __slots__ = ("tape", "index", "value")
    __array_priority__ = 100  # keep numpy from hijacking ndarray (op) Node

    def __init__(self, tape: "Tape", index: int, value: np.ndarray):
        self.tape = tape
        self.index = index
        self.value = value

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return self.tape.add(self, other)

    def __radd__(self, other):
        return self.tape.add(self, other)

    def __sub__(self, other):
        return self.tape.sub(self, other)

    def __rsub__(self, other):
        return self.tape.sub(self.tape.constant(other), self)

    def __mul__(self, other):
        return self.tape.mul(self, other)

    def __rmul__(self, other):
        return self.tape.mul(self, other)

    def __neg__(self):
        return self.tape.mul(self, -1.0)


class Tape:
    """Records operations for one forward pass; not reusable across passes."""

    def __init__(self):
        self._parents: list = []
        self._vjps: list = []
        self._values: list = []

    def __len__(self) -> int:
        return len(self._values)

    def _record(self, value, parents, vjp) -> Node:
        value = np.asarray(value, dtype=np.float64)
        self._values.append(value)
        self._parents.append(tuple(p.index for p in parents))
        self._vjps.append(vjp)
        return Node(self, len(self._values) - 1, value)

    def leaf(self, value) -> Node:
        """A differentiable input (parameters)."""
        return self._record(value, (), None)

    def constant(self, value) -> Node:
        """A non-differentiable input (data); gradient is discarded."""
        node = self._record(value, (), None)
        return node

    def _coerce(self, other) -> Node:
        return other if isinstance(other, Node) else self.constant(other)

    def add(self, a: Node, b) -> Node:
        b = self._coerce(b)
        sa, sb = a.value.shape, b.value.shape
        return self._record(
            a.value + b.value,
            (a, b),
            lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
        )

    def sub(self, a: Node, b) -> Node:
        b = self._coerce(b)
        sa, sb = a.value.shape, b.value.shape
        return self._record(
            a.value - b.value,
            (a, b),
            lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)),
        )

    def mul(self, a: Node, b) -> Node:
        b = self._coerce(b)
        sa, sb = a.value.shape, b.value.shape
        av, bv = a.value, b.value
        return self._record(
            av * bv,
            (a, b),
            lambda g: (_unbroadcast(g * bv, sa), _unbroadcast(g * av, sb)),
        )

    def matmul(self, a: Node, b: Node) -> Node:
        """2-D @ 2-D matrix product."""
        av, bv = a.value, b.value
        return self._record(
            av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g)
        )

    def matvec(self, a: Node, b: Node) -> Node:
        """2-D @ 1-D product."""
        av, bv = a.value, b.value
        return self._record(
            av @ bv, (a, b), lambda g: (np.outer(g, bv), av.T @ g)
        )

    def transpose(self, a: Node) -> Node:
        return self._record(a.value.T, (a,), lambda g: (g.T,))

    def reshape(self, a: Node, shape) -> Node:
        old = a.value.shape
        return self._record(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))

    def flip(self, a: Node, axis: int) -> Node:
        return self._record(
            np.flip(a.value, axis=axis), (a,), lambda g: (np.flip(g, axis=axis),)
        )

    def sum_axis(self, a: Node, axis: int) -> Node:
        shape = a.value.shape
        return self._record(
            a.value.sum(axis=axis),
            (a,),
            lambda g: (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),),
        )

    def mean_all(self, a: Node) -> Node:
        count = a.value.size
        shape = a.value.shape
        return self._record(
            a.value.mean(), (a,), lambda g: (np.broadcast_to(g / count, shape).copy(),)
        )

    def bce_with_logits(self, logits: Node, labels01: np.ndarray) -> Node:
        """Mean binary cross-entropy of sigmoid(logits) against {0,1} labels."""
        z = logits.value
        y = np.asarray(labels01, dtype=np.float64)
        # softplus(z) - y*z, computed stably
        loss = np.mean(np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z))))
        sig = 1.0 / (1.0 + np.exp(-z))
        count = z.size
        return self._record(
            loss, (logits,), lambda g: (g * (sig - y) / count,)
        )

    def complex_norm(self, re: Node, im: Node, kind: NormKind,
                     mask: np.ndarray | None = None) -> Node:
        """norm(mask * (re + i im), kind); mask (0/1) defaults to all-ones."""
        a = re.value + 1j * im.value
        if mask is not None:
            a = a * mask
        value = matrix_norm(a, kind)

        def vjp(g):
            grad = norm_gradient(a, kind)
            if mask is not None:
                grad = grad * mask
            return (g * grad.real, g * grad.imag)

        return self._record(value, (re, im), vjp)

    def backward(self, node: Node) -> dict:
        """Gradients of a scalar node w.r.t. every tape entry (by index)."""
        if node.value.shape != ():
            raise ValueError("backward requires a scalar node")
        grads: list = [None] * len(self._values)
        grads[node.index] = np.ones(())
        for idx in range(node.index, -1, -1):
            g = grads[idx]
            if g is None or self._vjps[idx] is None:
                continue
            parent_grads = self._vjps[idx](g)
            for parent_idx, pg in zip(self._parents[idx], parent_grads):
                if grads[parent_idx] is None:
                    grads[parent_idx] = np.asarray(pg, dtype=np.float64)
                else:
                    grads[parent_idx] = grads[parent_idx] + pg
        return {i: g for i, g in enumerate(grads) if g is not None}

    def grad(self, loss: Node, leaves: dict) -> dict:
        """Gradients of ``loss`` for a {name: Node} dict of leaves."""
        grads = self.backward(loss)
        return {
            name: grads.get(n.index, np.zeros_like(n.value))
            for name, n in leaves.items()
        }
