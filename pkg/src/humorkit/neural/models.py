"""Sequence models: the video-focused multimodal network and the GRU baseline.

The multimodal model projects the three modality streams to a common size,
adds fixed sinusoidal positional encodings, fuses audio and text through a
gated unit, exchanges information with the video stream through two
cross-modal blocks (video querying the fused stream and vice versa, local
attention window on both), concatenates the four streams and maps every
timestep to a humor probability with a linear head and logistic activation.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .autodiff import Tensor, concat
from .layers import ConvProjection, CrossModalBlock, Gmu, Linear, sinusoidal_pe

FFN_MULT = 4


@dataclass(frozen=True)
class VfmmConfig:
    d: int = 16
    conv_kernel: int = 1
    attn_heads: int = 1
    local_window: int = 8
    dropout_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d % self.attn_heads != 0:
            raise ValidationError("d must be divisible by attn_heads")
        if self.d % 2 != 0:
            raise ValidationError("d must be even (sinusoidal positional encoding)")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValidationError("dropout_rate must be in [0, 1)")
        if self.local_window < 0:
            raise ValidationError("local_window must be >= 0")


@dataclass(frozen=True)
class GruConfig:
    layers: int = 1
    hidden: int = 32
    bidirectional: bool = False
    learning_rate: float | None = None

    def __post_init__(self):
        if self.layers < 1:
            raise ValidationError("GRU needs at least one layer")


class VfmmModel:
    """Cross-modal transformer over full clips, emitting per-frame probabilities."""

    def __init__(self, config: VfmmConfig, input_dims: dict[str, int], seed: int | None = None):
        self.config = config
        self.input_dims = dict(input_dims)
        rng = np.random.default_rng(config.seed if seed is None else seed)
        d, k = config.d, config.conv_kernel
        self.conv_t = ConvProjection(rng, input_dims["text"], d, k, "conv_t")
        self.conv_a = ConvProjection(rng, input_dims["audio"], d, k, "conv_a")
        self.conv_v = ConvProjection(rng, input_dims["video"], d, k, "conv_v")
        self.gmu = Gmu(rng, d, "gmu")
        self.cmt_v_to_at = CrossModalBlock(
            rng, d, config.attn_heads, config.local_window, "cmt_v_to_at", FFN_MULT
        )
        self.cmt_at_to_v = CrossModalBlock(
            rng, d, config.attn_heads, config.local_window, "cmt_at_to_v", FFN_MULT
        )
        self.head = Linear(rng, 4 * d, 1, "head")

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for part in (
            self.conv_t,
            self.conv_a,
            self.conv_v,
            self.gmu,
            self.cmt_v_to_at,
            self.cmt_at_to_v,
            self.head,
        ):
            params.update(part.parameters())
        return params

    def forward(
        self,
        text: np.ndarray,
        audio: np.ndarray,
        video: np.ndarray,
        rng: np.random.Generator | None = None,
        training: bool = False,
        return_attn: bool = False,
    ):
        """Per-frame humor probabilities for one clip, shape (T,)."""
        if not (len(text) == len(audio) == len(video)):
            raise ValidationError(
                f"modality length mismatch: {len(text)}/{len(audio)}/{len(video)}"
            )
        n = len(video)
        pe = Tensor(sinusoidal_pe(n, self.config.d))
        t2 = self.conv_t(Tensor(text)) + pe
        a2 = self.conv_a(Tensor(audio)) + pe
        v2 = self.conv_v(Tensor(video)) + pe
        at = self.gmu(a2, t2)
        rate = self.config.dropout_rate
        v_to_at, attn_1 = self.cmt_v_to_at(
            v2, at, rng=rng, dropout_rate=rate, training=training, return_attn=True
        )
        at_to_v, attn_2 = self.cmt_at_to_v(
            at, v2, rng=rng, dropout_rate=rate, training=training, return_attn=True
        )
        merged = concat([v2, at, v_to_at, at_to_v], axis=-1)
        probs = self.head(merged).reshape(n).sigmoid()
        if return_attn:
            return probs, {"v_to_at": attn_1, "at_to_v": attn_2}
        return probs


class _GruCell:
    def __init__(self, rng, d_in: int, hidden: int, prefix: str):
        bound = hidden
        names = ("w_r", "u_r", "b_r", "w_z", "u_z", "b_z", "w_n", "u_n", "b_n")
        shapes = {
            "w_r": (d_in, hidden),
            "u_r": (hidden, hidden),
            "b_r": (hidden,),
            "w_z": (d_in, hidden),
            "u_z": (hidden, hidden),
            "b_z": (hidden,),
            "w_n": (d_in, hidden),
            "u_n": (hidden, hidden),
            "b_n": (hidden,),
        }
        for name in names:
            limit = 1.0 / np.sqrt(bound)
            setattr(
                self, name, Tensor(rng.uniform(-limit, limit, shapes[name]), requires_grad=True)
            )
        self.hidden = hidden
        self.prefix = prefix

    def step(self, x: Tensor, h: Tensor) -> Tensor:
        r = (x @ self.w_r + h @ self.u_r + self.b_r).sigmoid()
        z = (x @ self.w_z + h @ self.u_z + self.b_z).sigmoid()
        n = (x @ self.w_n + (r * h) @ self.u_n + self.b_n).tanh()
        return (1.0 - z) * h + z * n

    def run(self, inputs: list[Tensor], batch: int) -> list[Tensor]:
        h = Tensor(np.zeros((batch, self.hidden)))
        states = []
        for x in inputs:
            h = self.step(x, h)
            states.append(h)
        return states

    def parameters(self) -> dict[str, Tensor]:
        names = ("w_r", "u_r", "b_r", "w_z", "u_z", "b_z", "w_n", "u_n", "b_n")
        return {f"{self.prefix}.{n}": getattr(self, n) for n in names}


class GruModel:
    """(Bi)GRU over short segment sequences with a logistic segment head.

    Update convention: h_t = (1 - z_t) * h_{t-1} + z_t * h~_t with candidate
    h~ = tanh(W x + U (r * h) + b). The segment score is the logistic of a
    linear map of the final hidden state (both directions' final states
    concatenated in the bidirectional case).
    """

    def __init__(self, config: GruConfig, d_in: int, seed: int = 0):
        self.config = config
        self.d_in = d_in
        rng = np.random.default_rng(seed)
        dirs = 2 if config.bidirectional else 1
        self.cells: list[list[_GruCell]] = []
        for layer in range(config.layers):
            layer_in = d_in if layer == 0 else config.hidden * dirs
            row = [_GruCell(rng, layer_in, config.hidden, f"gru.l{layer}.fwd")]
            if config.bidirectional:
                row.append(_GruCell(rng, layer_in, config.hidden, f"gru.l{layer}.bwd"))
            self.cells.append(row)
        self.head = Linear(rng, config.hidden * dirs, 1, "head")

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for row in self.cells:
            for cell in row:
                params.update(cell.parameters())
        params.update(self.head.parameters())
        return params

    def _run_layers(self, x: np.ndarray) -> tuple[list[Tensor], Tensor]:
        """Returns per-timestep outputs of the top layer and the head input."""
        batch, n_steps, _ = x.shape
        inputs: list[Tensor] = [Tensor(x[:, t, :]) for t in range(n_steps)]
        final = None
        for row in self.cells:
            fwd = row[0].run(inputs, batch)
            if self.config.bidirectional:
                bwd = row[1].run(inputs[::-1], batch)[::-1]
                outputs = [concat([f, b], axis=-1) for f, b in zip(fwd, bwd)]
                final = concat([fwd[-1], bwd[0]], axis=-1)
            else:
                outputs = fwd
                final = fwd[-1]
            inputs = outputs
        return inputs, final

    def forward(self, x: np.ndarray) -> Tensor:
        """Segment logits for a batch of sequences, shape (batch,)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[None]
        _, final = self._run_layers(x)
        return self.head(final).reshape(x.shape[0])

    def forward_sequence(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        """Hidden-state sequence (T, hidden*dirs) and segment score for one sequence."""
        x = np.asarray(x, dtype=np.float64)
        outputs, final = self._run_layers(x[None])
        seq = np.vstack([o.data[0] for o in outputs])
        score = float(self.head(final).sigmoid().data[0, 0])
        return seq, score


def param_count(model) -> int:
    """Exact number of trainable scalar parameters."""
    return int(sum(p.data.size for p in model.parameters().values()))


def vfmm_param_count(config: VfmmConfig, input_dims: dict[str, int]) -> int:
    """Analytic parameter count for a VfmmModel with the given input sizes."""
    d, k = config.d, config.conv_kernel
    convs = sum(k * d_in * d + d for d_in in input_dims.values())
    gmu = 4 * d * d + 3 * d
    cmt = 2 * d + 4 * (d * d + d) + 2 * d + (d * FFN_MULT * d + FFN_MULT * d) + (
        FFN_MULT * d * d + d
    )
    head = 4 * d + 1
    return convs + gmu + 2 * cmt + head


def gru_param_count(config: GruConfig, d_in: int) -> int:
    """Analytic parameter count for a GruModel."""
    dirs = 2 if config.bidirectional else 1
    total = 0
    for layer in range(config.layers):
        layer_in = d_in if layer == 0 else config.hidden * dirs
        per_cell = 3 * (layer_in * config.hidden + config.hidden * config.hidden + config.hidden)
        total += per_cell * dirs
    total += config.hidden * dirs + 1  # head
    return total
