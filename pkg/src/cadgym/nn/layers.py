"""Neural building blocks: linear, layer norm, attention, graph conv."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeMismatch
from .tensor import (Tensor, as_tensor, concat, dropout, gather_rows,
                     get_default_dtype, log_softmax, softmax)


class Module:
    """Minimal parameter container with named traversal."""

    def named_parameters(self, prefix=""):
        for key, val in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(val, Tensor) and val.requires_grad:
                yield name, val
            elif isinstance(val, Module):
                yield from val.named_parameters(prefix=name + ".")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(prefix=f"{name}.{i}.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()


def xavier(rng, fan_in, fan_out, shape=None):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    shape = shape or (fan_in, fan_out)
    return Tensor(rng.uniform(-limit, limit, size=shape).astype(
        get_default_dtype()), requires_grad=True)


class Linear(Module):
    def __init__(self, d_in, d_out, rng, bias=True):
        self.weight = xavier(rng, d_in, d_out)
        self.bias = Tensor(np.zeros(d_out), requires_grad=True) if bias else None

    def __call__(self, x):
        out = as_tensor(x) @ self.weight
        return out + self.bias if self.bias is not None else out


class LayerNorm(Module):
    def __init__(self, dim, eps=1e-5):
        self.gamma = Tensor(np.ones(dim), requires_grad=True)
        self.beta = Tensor(np.zeros(dim), requires_grad=True)
        self.eps = eps

    def __call__(self, x):
        x = as_tensor(x)
        mu = x.mean(axis=-1, keepdims=True)
        var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
        return (x - mu) / (var + self.eps).sqrt() * self.gamma + self.beta


class GraphConv(Module):
    """H' = relu(A_hat @ H @ W) with a fixed row-normalized adjacency."""

    def __init__(self, d_in, d_out, rng):
        self.weight = xavier(rng, d_in, d_out)

    def __call__(self, h, a_hat):
        h = as_tensor(h)
        if h.shape[-1] != self.weight.shape[0]:
            raise ShapeMismatch(
                f"graph conv expects width {self.weight.shape[0]}, got {h.shape[-1]}")
        return (as_tensor(a_hat) @ h @ self.weight).relu()


class GraphEncoder(Module):
    """Stacked graph convolutions, mean-pooled and projected."""

    def __init__(self, d_in, d_hidden, d_embed, rng, layers=2):
        dims = [d_in] + [d_hidden] * layers
        self.convs = [GraphConv(dims[i], dims[i + 1], rng) for i in range(layers)]
        self.proj = Linear(d_hidden, d_embed, rng)
        self.d_embed = d_embed

    def __call__(self, graph):
        """FaceGraph -> (d_embed,) tensor; a 0-node graph pools to zeros."""
        if graph.num_nodes == 0:
            return Tensor(np.zeros(self.d_embed))
        h = Tensor(graph.node_features)
        a = Tensor(graph.adj_normalized)
        for conv in self.convs:
            h = conv(h, a)
        pooled = h.mean(axis=0, keepdims=True)
        return self.proj(pooled).reshape(self.d_embed)

    def embed(self, graph):
        """Inference-only numpy embedding (used by the neural reward)."""
        return self(graph).data.copy()


class MultiHeadAttention(Module):
    def __init__(self, dim, heads, rng):
        if dim % heads:
            raise ShapeMismatch(f"width {dim} not divisible by {heads} heads")
        self.dim = dim
        self.heads = heads
        self.wq = Linear(dim, dim, rng)
        self.wk = Linear(dim, dim, rng)
        self.wv = Linear(dim, dim, rng)
        self.wo = Linear(dim, dim, rng)

    def __call__(self, query, key, value):
        q, k, v = self.wq(query), self.wk(key), self.wv(value)
        h, dh = self.heads, self.dim // self.heads
        tq, tk = q.shape[0], k.shape[0]
        q = q.reshape(tq, h, dh).transpose(1, 0, 2)
        k = k.reshape(tk, h, dh).transpose(1, 0, 2)
        v = v.reshape(tk, h, dh).transpose(1, 0, 2)
        scores = (q @ k.transpose(0, 2, 1)) * (1.0 / math.sqrt(dh))
        attn = softmax(scores, axis=-1)
        ctx = (attn @ v).transpose(1, 0, 2).reshape(tq, self.dim)
        return self.wo(ctx)


class TransformerBlock(Module):
    """Pre-norm encoder block: x + MHA(LN(x)); x + FF(LN(x))."""

    def __init__(self, dim, heads, rng, ff_mult=4):
        self.attn = MultiHeadAttention(dim, heads, rng)
        self.norm1 = LayerNorm(dim)
        self.norm2 = LayerNorm(dim)
        self.ff1 = Linear(dim, ff_mult * dim, rng)
        self.ff2 = Linear(ff_mult * dim, dim, rng)

    def __call__(self, x):
        h = self.norm1(x)
        x = x + self.attn(h, h, h)
        return x + self.ff2(self.ff1(self.norm2(x)).relu())


class Embedding(Module):
    def __init__(self, count, dim, rng):
        self.table = Tensor(rng.normal(0.0, 0.02, size=(count, dim)).astype(
            get_default_dtype()), requires_grad=True)

    def __call__(self, indices):
        return gather_rows(self.table, indices)


def sinusoidal_encoding(length, dim):
    pos = np.arange(length)[:, None].astype(float)
    i = np.arange(dim)[None, :]
    angles = pos / np.power(10000.0, (2 * (i // 2)) / dim)
    enc = np.where(i % 2 == 0, np.sin(angles), np.cos(angles))
    return enc.astype(get_default_dtype())


__all__ = ["Module", "Linear", "LayerNorm", "GraphConv", "GraphEncoder",
           "MultiHeadAttention", "TransformerBlock", "Embedding",
           "sinusoidal_encoding", "xavier", "dropout", "softmax",
           "log_softmax", "concat", "Tensor"]
