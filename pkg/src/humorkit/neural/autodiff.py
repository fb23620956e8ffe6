"""Minimal reverse-mode automatic differentiation on float64 numpy arrays.

A Tensor wraps an ndarray and records its producing operation; backward()
walks the graph in reverse topological order. Only what the models in this
package need is implemented: broadcasting add/mul, matmul, the usual
nonlinearities, reductions, concat/stack/slicing, masked softmax, layer norm,
same-padded 1-D convolution, dropout, and a fused binary cross entropy on
logits. Evaluation order is fixed, so identical inputs and parameters produce
bitwise-identical results.
"""

import numpy as np

from ..errors import NumericalError


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a gradient back to the shape it was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._backward = None
        self._parents: tuple[Tensor, ...] = ()

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph plumbing ----------------------------------------------------

    @staticmethod
    def _result(data, parents, backward):
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self) -> None:
        """Backpropagate from this (scalar) tensor through the graph."""
        if self.data.size != 1:
            raise NumericalError("backward() requires a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    def zero_grad(self) -> None:
        self.grad = None

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        data = self.data + other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g, other.data.shape))

        return Tensor._result(data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self):
        def backward(g):
            if self.requires_grad:
                self._accumulate(-g)

        return Tensor._result(-self.data, (self,), backward)

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        return self + (-other)

    def __rsub__(self, other):
        return Tensor(other) + (-self)

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        data = self.data * other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g * self.data, other.data.shape))

        return Tensor._result(data, (self, other), backward)

    __rmul__ = __mul__

    def scale(self, c: float):
        def backward(g):
            if self.requires_grad:
                self._accumulate(g * c)

        return Tensor._result(self.data * c, (self,), backward)

    def __matmul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        data = self.data @ other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(g @ other.data.T)
            if other.requires_grad:
                other._accumulate(self.data.T @ g)

        return Tensor._result(data, (self, other), backward)

    @property
    def T(self):
        def backward(g):
            if self.requires_grad:
                self._accumulate(g.T)

        return Tensor._result(self.data.T, (self,), backward)

    def __getitem__(self, idx):
        def backward(g):
            if self.requires_grad:
                full = np.zeros_like(self.data)
                np.add.at(full, idx, g)
                self._accumulate(full)

        return Tensor._result(self.data[idx], (self,), backward)

    def reshape(self, *shape):
        orig = self.data.shape

        def backward(g):
            if self.requires_grad:
                self._accumulate(g.reshape(orig))

        return Tensor._result(self.data.reshape(*shape), (self,), backward)

    # -- nonlinearities -----------------------------------------------------

    def tanh(self):
        out_data = np.tanh(self.data)

        def backward(g):
            if self.requires_grad:
                self._accumulate(g * (1.0 - out_data**2))

        return Tensor._result(out_data, (self,), backward)

    def sigmoid(self):
        out_data = stable_sigmoid(self.data)

        def backward(g):
            if self.requires_grad:
                self._accumulate(g * out_data * (1.0 - out_data))

        return Tensor._result(out_data, (self,), backward)

    def relu(self):
        mask = self.data > 0

        def backward(g):
            if self.requires_grad:
                self._accumulate(g * mask)

        return Tensor._result(self.data * mask, (self,), backward)

    def log(self):
        def backward(g):
            if self.requires_grad:
                self._accumulate(g / self.data)

        return Tensor._result(np.log(self.data), (self,), backward)

    # -- reductions ----------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        data = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(g):
            if not self.requires_grad:
                return
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.data.shape).copy())

        return Tensor._result(data, (self,), backward)

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            n = self.data.size
        else:
            n = self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims).scale(1.0 / n)


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    datas = [t.data for t in tensors]
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                t._accumulate(np.take(g, np.arange(lo, hi), axis=axis))

    return Tensor._result(np.concatenate(datas, axis=axis), tuple(tensors), backward)


def stack(tensors: list[Tensor], axis: int = 0) -> Tensor:
    def backward(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(np.take(g, i, axis=axis))

    return Tensor._result(np.stack([t.data for t in tensors], axis=axis), tuple(tensors), backward)


def masked_softmax(logits: Tensor, keep: np.ndarray) -> Tensor:
    """Row softmax over the last axis restricted to `keep` (bool) positions.

    Masked positions get probability exactly 0 and contribute nothing to the
    normalization, so the result is bitwise independent of their logits.
    """
    x = logits.data
    m = np.max(np.where(keep, x, -np.inf), axis=-1, keepdims=True)
    e = np.where(keep, np.exp(np.where(keep, x - m, 0.0)), 0.0)
    denom = e.sum(axis=-1, keepdims=True)
    p = e / denom

    def backward(g):
        if logits.requires_grad:
            inner = (g * p).sum(axis=-1, keepdims=True)
            logits._accumulate(p * (g - inner))

    return Tensor._result(p, (logits,), backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then apply elementwise gain and bias."""
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered**2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    data = xhat * gain.data + bias.data
    n = x.data.shape[-1]

    def backward(g):
        if gain.requires_grad:
            gain._accumulate((g * xhat).reshape(-1, n).sum(axis=0))
        if bias.requires_grad:
            bias._accumulate(g.reshape(-1, n).sum(axis=0))
        if x.requires_grad:
            dxhat = g * gain.data
            term = dxhat - dxhat.mean(axis=-1, keepdims=True)
            term -= xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
            x._accumulate(term * inv_std)

    return Tensor._result(data, (x, gain, bias), backward)


def conv1d_same(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """1-D convolution along time with zero same-padding.

    x is (T, d_in), weight is (k, d_in, d_out) with odd k, bias is (d_out,).
    Output row t is sum_j x[t + j - k//2] @ weight[j] + bias.
    """
    k = weight.data.shape[0]
    if k % 2 == 0:
        raise NumericalError("conv kernel size must be odd")
    T = x.data.shape[0]
    half = k // 2

    def shifted(arr, offset):
        out = np.zeros((T, arr.shape[1]), dtype=arr.dtype)
        src_lo, src_hi = max(0, offset), min(T, T + offset)
        dst_lo, dst_hi = max(0, -offset), min(T, T - offset)
        out[dst_lo:dst_hi] = arr[src_lo:src_hi]
        return out

    data = np.broadcast_to(bias.data, (T, weight.data.shape[2])).copy()
    for j in range(k):
        data += shifted(x.data, j - half) @ weight.data[j]

    def backward(g):
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=0))
        if weight.requires_grad:
            dw = np.empty_like(weight.data)
            for j in range(k):
                dw[j] = shifted(x.data, j - half).T @ g
            weight._accumulate(dw)
        if x.requires_grad:
            dx = np.zeros_like(x.data)
            for j in range(k):
                dx += shifted(g @ weight.data[j].T, -(j - half))
            x._accumulate(dx)

    return Tensor._result(data, (x, weight, bias), backward)


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    if not training or rate == 0.0:
        return x
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * mask)

    return Tensor._result(x.data * mask, (x,), backward)


def bce_with_logits(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean binary cross entropy from raw logits (numerically stable)."""
    z = logits.data
    y = np.asarray(targets, dtype=np.float64)
    if z.shape != y.shape:
        raise NumericalError(f"logit/target shape mismatch: {z.shape} vs {y.shape}")
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    n = z.size

    def backward(g):
        if logits.requires_grad:
            logits._accumulate(g * (stable_sigmoid(z) - y) / n)

    return Tensor._result(loss, (logits,), backward)


def bce_on_probabilities(probs: Tensor, targets: np.ndarray) -> Tensor:
    """Mean binary cross entropy on probabilities already in (0, 1)."""
    y = np.asarray(targets, dtype=np.float64)
    one = Tensor(np.ones_like(y))
    target = Tensor(y)
    loss = (target * probs.log() + (one - target) * (one - probs).log()).mean()
    return loss.scale(-1.0)
