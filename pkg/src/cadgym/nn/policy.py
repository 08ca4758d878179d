"""Actor-critic policy over paired face graphs and action history.

Target and current graphs are encoded independently to 256-wide
embeddings, fused by self-attention over the two-token stack; the action
history runs through stacked pre-norm transformer blocks and the hidden
state at the last valid position queries the geometric stack by
cross-attention.  The 768-wide concatenation is projected to 2048 and
feeds the actor (masked logits over the action table) and the critic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..config import FEATURE_WIDTH
from ..errors import ShapeMismatch, VersionMismatch
from .layers import (Embedding, GraphEncoder, Linear, MultiHeadAttention,
                     TransformerBlock, sinusoidal_encoding)
from .tensor import Tensor, concat, dropout, log_softmax

CHECKPOINT_MAGIC = b"CGYM"
CHECKPOINT_VERSION = 1
MASK_FILL = -1e9


@dataclass
class PolicyConfig:
    embed_dim: int = 256
    heads: int = 8
    history_layers: int = 3
    hidden_dim: int = 2048
    gcn_layers: int = 2
    dropout: float = 0.1
    max_history: int = 16
    feature_width: int = FEATURE_WIDTH

    @property
    def fused_dim(self):
        # cross-attention context + concatenated pair embeddings
        return 3 * self.embed_dim


class PolicyNet:
    def __init__(self, action_count, config=None, seed=0):
        self.config = config or PolicyConfig()
        self.action_count = int(action_count)
        c = self.config
        rng = np.random.default_rng(seed)
        self.enc_target = GraphEncoder(c.feature_width, c.embed_dim, c.embed_dim,
                                       rng, layers=c.gcn_layers)
        self.enc_current = GraphEncoder(c.feature_width, c.embed_dim, c.embed_dim,
                                        rng, layers=c.gcn_layers)
        self.geo_attn = MultiHeadAttention(c.embed_dim, c.heads, rng)
        self.hist_blocks = [TransformerBlock(c.embed_dim, c.heads, rng)
                            for _ in range(c.history_layers)]
        self.cross_attn = MultiHeadAttention(c.embed_dim, c.heads, rng)
        self.fuse = Linear(c.fused_dim, c.hidden_dim, rng)
        self._pos = sinusoidal_encoding(c.max_history + 1, c.embed_dim)
        self.action_embed = None
        self.actor = None
        self.critic = Linear(c.hidden_dim, 1, rng)
        self.new_head(self.action_count, rng)

    # -- per-target head ----------------------------------------------------

    def new_head(self, action_count, rng):
        """Fresh actor head and action embedding sized to a target's table."""
        c = self.config
        self.action_count = int(action_count)
        self.action_embed = Embedding(self.action_count + 1, c.embed_dim, rng)
        self.actor = Linear(c.hidden_dim, self.action_count, rng)

    # -- parameters -----------------------------------------------------------

    def named_parameters(self):
        mods = {
            "enc_target": self.enc_target,
            "enc_current": self.enc_current,
            "geo_attn": self.geo_attn,
            "cross_attn": self.cross_attn,
            "fuse": self.fuse,
            "critic": self.critic,
            "action_embed": self.action_embed,
            "actor": self.actor,
        }
        for i, blk in enumerate(self.hist_blocks):
            mods[f"hist.{i}"] = blk
        for base, mod in mods.items():
            yield from mod.named_parameters(prefix=base + ".")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    # -- forward --------------------------------------------------------------

    def forward(self, target_graph, current_graph, history, mask,
                rng=None, training=False):
        """Returns (log_probs, value) tensors; logits are mask-filled."""
        c = self.config
        mask = np.asarray(mask, dtype=float).ravel()
        if mask.shape[0] != self.action_count:
            raise ShapeMismatch(
                f"mask width {mask.shape[0]} != action count {self.action_count}")
        g_t = self.enc_target(target_graph).reshape(1, c.embed_dim)
        g_c = self.enc_current(current_graph).reshape(1, c.embed_dim)
        g_stack = concat([g_t, g_c], axis=0)
        g_tilde = g_stack + self.geo_attn(g_stack, g_stack, g_stack)
        g_cat = g_tilde.reshape(2 * c.embed_dim)

        hist = [int(a) for a in history][-c.max_history:]
        tokens = np.array([0] + [a + 1 for a in hist], dtype=np.int64)
        h = self.action_embed(tokens) + Tensor(self._pos[:len(tokens)])
        for blk in self.hist_blocks:
            h = blk(h)
        h_last = h[len(tokens) - 1].reshape(1, c.embed_dim)

        f_a = self.cross_attn(h_last, g_tilde, g_tilde).reshape(c.embed_dim)
        fused = concat([f_a, g_cat], axis=0)
        hidden = self.fuse(fused.reshape(1, c.fused_dim)).relu()
        if training and c.dropout > 0:
            hidden = dropout(hidden, c.dropout, rng or np.random.default_rng(0),
                             training=True)
        logits = self.actor(hidden).reshape(self.action_count)
        masked = logits + Tensor((mask - 1.0) * (-MASK_FILL))
        log_probs = log_softmax(masked)
        value = self.critic(hidden).reshape(1)
        return log_probs, value

    def act(self, target_graph, current_graph, history, mask, rng,
            greedy=False):
        """Sample (or argmax) an action index; no gradients retained."""
        log_probs, value = self.forward(target_graph, current_graph, history,
                                        mask, training=False)
        p = np.exp(log_probs.data)
        p = p / p.sum()
        if greedy:
            idx = int(np.argmax(p))
        else:
            idx = int(rng.choice(len(p), p=p))
        return idx, float(log_probs.data[idx]), float(value.data[0])

    # -- state dict -----------------------------------------------------------

    def state_arrays(self):
        return {name: p.data for name, p in self.named_parameters()}

    def load_state_arrays(self, arrays, strict=True):
        own = dict(self.named_parameters())
        for name, arr in arrays.items():
            if name not in own:
                if strict:
                    raise ShapeMismatch(f"unexpected parameter {name!r}")
                continue
            if own[name].data.shape != arr.shape:
                raise ShapeMismatch(
                    f"parameter {name!r}: checkpoint shape {arr.shape} != "
                    f"model shape {own[name].data.shape}")
            own[name].data = np.array(arr, dtype=own[name].data.dtype)


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

class Adam:
    def __init__(self, named_params, lr=3e-4, betas=(0.9, 0.999), eps=1e-8):
        self.groups = list(named_params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in self.groups}
        self.v = {name: np.zeros_like(p.data) for name, p in self.groups}

    def rebind(self, named_params):
        """Attach to a (possibly re-headed) parameter set, keeping moments."""
        self.groups = list(named_params)
        for name, p in self.groups:
            if name not in self.m or self.m[name].shape != p.data.shape:
                self.m[name] = np.zeros_like(p.data)
                self.v[name] = np.zeros_like(p.data)

    def step(self):
        self.t += 1
        for name, p in self.groups:
            if p.grad is None:
                continue
            g = p.grad
            self.m[name] = self.b1 * self.m[name] + (1 - self.b1) * g
            self.v[name] = self.b2 * self.v[name] + (1 - self.b2) * g * g
            m_hat = self.m[name] / (1 - self.b1**self.t)
            v_hat = self.v[name] / (1 - self.b2**self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_arrays(self):
        out = {"opt.t": np.array([self.t], dtype=np.float64)}
        for name in self.m:
            out[f"opt.m.{name}"] = self.m[name]
            out[f"opt.v.{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays):
        if "opt.t" in arrays:
            self.t = int(arrays["opt.t"][0])
        for name in list(self.m):
            if f"opt.m.{name}" in arrays:
                self.m[name] = np.array(arrays[f"opt.m.{name}"])
            if f"opt.v.{name}" in arrays:
                self.v[name] = np.array(arrays[f"opt.v.{name}"])


# ---------------------------------------------------------------------------
# checkpoint format: magic, version, then (name, shape, raw data) entries
# ---------------------------------------------------------------------------

_DTYPE_CODES = {0: "<f4", 1: "<f8"}
_DTYPE_TO_CODE = {np.dtype("float32"): 0, np.dtype("float64"): 1}


def checkpoint_save(path, arrays):
    """Versioned binary dump of named float arrays."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(arrays)))
        for name in sorted(arrays):
            arr = np.asarray(arrays[name])
            if arr.dtype not in _DTYPE_TO_CODE:
                arr = arr.astype(np.float64)
            code = _DTYPE_TO_CODE[arr.dtype]
            nb = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<BB", code, arr.ndim))
            fh.write(struct.pack(f"<{max(arr.ndim, 0)}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPE_CODES[code]).tobytes())


def _read_exact(fh, n):
    buf = fh.read(n)
    if len(buf) != n:
        raise IOError("truncated checkpoint file")
    return buf


def checkpoint_load(path):
    """Load a checkpoint into {name: array}; values restore bit-identically."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4)
        if magic != CHECKPOINT_MAGIC:
            raise IOError(f"bad checkpoint magic {magic!r}")
        version, count = struct.unpack("<II", _read_exact(fh, 8))
        if version != CHECKPOINT_VERSION:
            raise VersionMismatch(
                f"checkpoint version {version}, expected {CHECKPOINT_VERSION}")
        out = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", _read_exact(fh, 2))
            name = _read_exact(fh, nlen).decode("utf-8")
            code, ndim = struct.unpack("<BB", _read_exact(fh, 2))
            if code not in _DTYPE_CODES:
                raise VersionMismatch(f"unknown dtype code {code}")
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
            n_items = int(np.prod(shape)) if ndim else 1
            raw = _read_exact(fh, n_items * int(_DTYPE_CODES[code][-1]))
            out[name] = np.frombuffer(raw, dtype=_DTYPE_CODES[code]).reshape(shape).copy()
        return out
