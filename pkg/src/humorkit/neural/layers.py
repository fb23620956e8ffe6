"""Building blocks of the sequence models: projections, attention, gating."""

import numpy as np

from ..errors import ValidationError
from .autodiff import Tensor, concat, conv1d_same, dropout, layer_norm, masked_softmax


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def sinusoidal_pe(n_frames: int, d: int) -> np.ndarray:
    """Fixed sinusoidal positional encodings, shape (n_frames, d); d must be even."""
    if d % 2 != 0:
        raise ValidationError("positional encoding size must be even")
    pos = np.arange(n_frames, dtype=np.float64)[:, None]
    i = np.arange(d // 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * i / d)
    pe = np.zeros((n_frames, d))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


class Linear:
    def __init__(self, rng, d_in: int, d_out: int, prefix: str):
        self.w = uniform_init(rng, (d_in, d_out), d_in)
        self.b = uniform_init(rng, (d_out,), d_in)
        self.prefix = prefix

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.w + self.b

    def parameters(self) -> dict[str, Tensor]:
        return {f"{self.prefix}.w": self.w, f"{self.prefix}.b": self.b}


class ConvProjection:
    """Same-padded 1-D convolution projecting (T, d_in) -> (T, d)."""

    def __init__(self, rng, d_in: int, d_out: int, kernel: int, prefix: str):
        if kernel % 2 == 0 or kernel < 1:
            raise ValidationError("conv kernel must be odd and positive")
        self.w = uniform_init(rng, (kernel, d_in, d_out), kernel * d_in)
        self.b = uniform_init(rng, (d_out,), kernel * d_in)
        self.prefix = prefix

    def __call__(self, x: Tensor) -> Tensor:
        return conv1d_same(x, self.w, self.b)

    def parameters(self) -> dict[str, Tensor]:
        return {f"{self.prefix}.w": self.w, f"{self.prefix}.b": self.b}


class LayerNorm:
    def __init__(self, d: int, prefix: str):
        self.g = Tensor(np.ones(d), requires_grad=True)
        self.b = Tensor(np.zeros(d), requires_grad=True)
        self.prefix = prefix

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.g, self.b)

    def parameters(self) -> dict[str, Tensor]:
        return {f"{self.prefix}.g": self.g, f"{self.prefix}.b": self.b}


class Gmu:
    """Gated bimodal unit: z*tanh(W_a a) + (1-z)*tanh(W_t t), z from [a; t]."""

    def __init__(self, rng, d: int, prefix: str):
        self.w_a = uniform_init(rng, (d, d), d)
        self.b_a = uniform_init(rng, (d,), d)
        self.w_t = uniform_init(rng, (d, d), d)
        self.b_t = uniform_init(rng, (d,), d)
        self.w_z = uniform_init(rng, (2 * d, d), 2 * d)
        self.b_z = uniform_init(rng, (d,), 2 * d)
        self.prefix = prefix

    def __call__(self, a: Tensor, t: Tensor) -> Tensor:
        if a.shape != t.shape:
            raise ValidationError(f"gmu shape mismatch: {a.shape} vs {t.shape}")
        h_a = (a @ self.w_a + self.b_a).tanh()
        h_t = (t @ self.w_t + self.b_t).tanh()
        z = (concat([a, t], axis=-1) @ self.w_z + self.b_z).sigmoid()
        return z * h_a + (1.0 - z) * h_t

    def parameters(self) -> dict[str, Tensor]:
        names = ("w_a", "b_a", "w_t", "b_t", "w_z", "b_z")
        return {f"{self.prefix}.{n}": getattr(self, n) for n in names}


def local_attention_mask(n_frames: int, window: int) -> np.ndarray:
    """Boolean (T, T) mask keeping |i - j| <= window."""
    if window < 0:
        raise ValidationError("local attention window must be >= 0")
    idx = np.arange(n_frames)
    return np.abs(idx[:, None] - idx[None, :]) <= window


class CrossModalBlock:
    """One pre-norm encoder layer where s1 queries s2 under a local window.

    out = x + FFN(norm2(x)) with x = s1 + MHAttn(norm1(s1), norm1(s2)); the
    attention restricts each query to keys within `window` positions on
    either side, and rows are normalized over the unmasked positions only.
    """

    def __init__(self, rng, d: int, heads: int, window: int, prefix: str, ffn_mult: int = 4):
        if d % heads != 0:
            raise ValidationError(f"model size {d} not divisible by {heads} heads")
        self.d = d
        self.heads = heads
        self.window = window
        self.ln_attn = LayerNorm(d, f"{prefix}.ln_attn")
        self.w_q = Linear(rng, d, d, f"{prefix}.q")
        self.w_k = Linear(rng, d, d, f"{prefix}.k")
        self.w_v = Linear(rng, d, d, f"{prefix}.v")
        self.w_o = Linear(rng, d, d, f"{prefix}.o")
        self.ln_ffn = LayerNorm(d, f"{prefix}.ln_ffn")
        self.ffn_1 = Linear(rng, d, ffn_mult * d, f"{prefix}.ffn1")
        self.ffn_2 = Linear(rng, ffn_mult * d, d, f"{prefix}.ffn2")
        self.prefix = prefix

    def attention(self, s1: Tensor, s2: Tensor) -> tuple[Tensor, np.ndarray]:
        n = s1.shape[0]
        q_in = self.ln_attn(s1)
        kv_in = self.ln_attn(s2)
        q, k, v = self.w_q(q_in), self.w_k(kv_in), self.w_v(kv_in)
        dh = self.d // self.heads
        mask = local_attention_mask(n, self.window)
        head_outputs = []
        attn_rows = []
        for h in range(self.heads):
            cols = slice(h * dh, (h + 1) * dh)
            logits = (q[:, cols] @ k[:, cols].T).scale(1.0 / np.sqrt(dh))
            attn = masked_softmax(logits, mask)
            attn_rows.append(attn.data)
            head_outputs.append(attn @ v[:, cols])
        merged = head_outputs[0] if self.heads == 1 else concat(head_outputs, axis=-1)
        return self.w_o(merged), np.stack(attn_rows)

    def __call__(
        self,
        s1: Tensor,
        s2: Tensor,
        rng: np.random.Generator | None = None,
        dropout_rate: float = 0.0,
        training: bool = False,
        return_attn: bool = False,
    ):
        if s1.shape != s2.shape:
            raise ValidationError(f"cmt expects equal shapes, got {s1.shape} vs {s2.shape}")
        attn_out, attn_probs = self.attention(s1, s2)
        if dropout_rate > 0.0:
            attn_out = dropout(attn_out, dropout_rate, rng, training)
        x = s1 + attn_out
        hidden = self.ffn_1(self.ln_ffn(x)).relu()
        if dropout_rate > 0.0:
            hidden = dropout(hidden, dropout_rate, rng, training)
        out = x + self.ffn_2(hidden)
        if return_attn:
            return out, attn_probs
        return out

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for part in (
            self.ln_attn,
            self.w_q,
            self.w_k,
            self.w_v,
            self.w_o,
            self.ln_ffn,
            self.ffn_1,
            self.ffn_2,
        ):
            params.update(part.parameters())
        return params
