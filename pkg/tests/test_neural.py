import numpy as np
import pytest

from humorkit.errors import ValidationError
from humorkit.neural import (
    CrossModalBlock,
    Gmu,
    GruConfig,
    GruModel,
    VfmmConfig,
    VfmmModel,
    gru_param_count,
    load_checkpoint,
    local_attention_mask,
    param_count,
    save_checkpoint,
    sinusoidal_pe,
    vfmm_param_count,
)
from humorkit.neural.autodiff import Tensor

from .oracles import (
    gru_scalar_reference,
    sinusoidal_pe_reference,
    vfmm_forward_reference,
)

DIMS = {"text": 3, "audio": 2, "video": 2}


def tiny_model(seed=0, **overrides) -> VfmmModel:
    config = VfmmConfig(**{"d": 4, "attn_heads": 1, "local_window": 8, **overrides})
    return VfmmModel(config, DIMS, seed=seed)


class TestPositionalEncoding:
    def test_position_zero_alternates(self):
        pe = sinusoidal_pe(3, 6)
        assert np.array_equal(pe[0], [0, 1, 0, 1, 0, 1])

    def test_scalar_values(self):
        pe = sinusoidal_pe(2, 2)
        assert pe[1, 0] == pytest.approx(np.sin(1.0), abs=1e-15)
        assert pe[1, 1] == pytest.approx(np.cos(1.0), abs=1e-15)

    def test_deterministic_and_matches_reference(self):
        assert np.array_equal(sinusoidal_pe(7, 8), sinusoidal_pe(7, 8))
        assert np.allclose(sinusoidal_pe(9, 6), sinusoidal_pe_reference(9, 6), atol=1e-12)

    def test_odd_dimension_rejected(self):
        with pytest.raises(ValidationError):
            sinusoidal_pe(4, 3)


class TestGmu:
    def test_zero_inputs_zero_biases(self):
        rng = np.random.default_rng(0)
        gmu = Gmu(rng, 3, "gmu")
        for name in ("b_a", "b_t", "b_z"):
            getattr(gmu, name).data[:] = 0.0
        out = gmu(Tensor(np.zeros((4, 3))), Tensor(np.zeros((4, 3))))
        assert np.array_equal(out.data, np.zeros((4, 3)))

    def test_gate_saturation_selects_first_branch(self):
        rng = np.random.default_rng(1)
        gmu = Gmu(rng, 2, "gmu")
        gmu.b_z.data[:] = 50.0  # saturate the gate towards the audio branch
        a = Tensor(rng.standard_normal((3, 2)))
        t = Tensor(rng.standard_normal((3, 2)))
        out = gmu(a, t)
        h_a = np.tanh(a.data @ gmu.w_a.data + gmu.b_a.data)
        assert np.allclose(out.data, h_a, atol=1e-12)

    def test_scalar_hand_example(self):
        rng = np.random.default_rng(2)
        gmu = Gmu(rng, 1, "gmu")
        for name in ("w_a", "w_t", "w_z"):
            getattr(gmu, name).data[:] = 1.0
        for name in ("b_a", "b_t", "b_z"):
            getattr(gmu, name).data[:] = 0.0
        out = gmu(Tensor(np.zeros((1, 1))), Tensor(np.full((1, 1), 0.5)))
        z = 1.0 / (1.0 + np.exp(-0.5))
        expected = z * 0.0 + (1 - z) * np.tanh(0.5)
        assert out.data[0, 0] == pytest.approx(expected, abs=1e-12)
        assert out.data[0, 0] == pytest.approx(0.17445, abs=5e-5)

    def test_output_between_branches(self):
        rng = np.random.default_rng(3)
        gmu = Gmu(rng, 5, "gmu")
        a = Tensor(rng.standard_normal((20, 5)))
        t = Tensor(rng.standard_normal((20, 5)))
        out = gmu(a, t).data
        h_a = np.tanh(a.data @ gmu.w_a.data + gmu.b_a.data)
        h_t = np.tanh(t.data @ gmu.w_t.data + gmu.b_t.data)
        lo = np.minimum(h_a, h_t) - 1e-12
        hi = np.maximum(h_a, h_t) + 1e-12
        assert np.all(out >= lo) and np.all(out <= hi)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(4)
        gmu = Gmu(rng, 2, "gmu")
        with pytest.raises(ValidationError):
            gmu(Tensor(np.zeros((2, 2))), Tensor(np.zeros((3, 2))))


class TestCrossModalBlock:
    def _block(self, d=4, heads=1, window=8, seed=5):
        return CrossModalBlock(np.random.default_rng(seed), d, heads, window, "cmt")

    def test_residual_passthrough_exact(self):
        block = self._block()
        block.w_o.w.data[:] = 0.0
        block.w_o.b.data[:] = 0.0
        block.ffn_2.w.data[:] = 0.0
        block.ffn_2.b.data[:] = 0.0
        rng = np.random.default_rng(6)
        s1 = Tensor(rng.standard_normal((6, 4)))
        s2 = Tensor(rng.standard_normal((6, 4)))
        out = block(s1, s2)
        assert np.array_equal(out.data, s1.data)

    def test_attention_rows_sum_to_one(self):
        block = self._block(d=8, heads=2, window=3)
        rng = np.random.default_rng(7)
        s1 = Tensor(rng.standard_normal((12, 8)))
        s2 = Tensor(rng.standard_normal((12, 8)))
        _, attn = block(s1, s2, return_attn=True)
        assert attn.shape == (2, 12, 12)
        assert np.all(np.abs(attn.sum(axis=-1) - 1.0) < 1e-12)
        mask = local_attention_mask(12, 3)
        assert np.all(attn[:, ~mask] == 0.0)

    def test_single_position_matches_scalar_attention(self):
        block = self._block(d=2, seed=8)
        rng = np.random.default_rng(9)
        s1 = Tensor(rng.standard_normal((1, 2)))
        s2 = Tensor(rng.standard_normal((1, 2)))
        out, attn = block(s1, s2, return_attn=True)
        assert attn.shape == (1, 1, 1) and attn[0, 0, 0] == 1.0
        # T=1: attention output is exactly W_o(v) + residual + FFN
        def ln(x, g, b, eps=1e-5):
            mu = x.mean(-1, keepdims=True)
            var = ((x - mu) ** 2).mean(-1, keepdims=True)
            return (x - mu) / np.sqrt(var + eps) * g + b

        kv = ln(s2.data, block.ln_attn.g.data, block.ln_attn.b.data)
        v = kv @ block.w_v.w.data + block.w_v.b.data
        x = s1.data + (v @ block.w_o.w.data + block.w_o.b.data)
        hidden = np.maximum(
            ln(x, block.ln_ffn.g.data, block.ln_ffn.b.data) @ block.ffn_1.w.data
            + block.ffn_1.b.data,
            0.0,
        )
        expected = x + hidden @ block.ffn_2.w.data + block.ffn_2.b.data
        assert np.allclose(out.data, expected, atol=1e-12)

    def test_negative_window_rejected(self):
        with pytest.raises(ValidationError):
            local_attention_mask(4, -1)

    def test_heads_must_divide(self):
        with pytest.raises(ValidationError):
            self._block(d=4, heads=3)


class TestVfmmModel:
    def test_output_shape_and_range(self):
        model = tiny_model()
        rng = np.random.default_rng(10)
        probs = model.forward(
            rng.standard_normal((7, 3)), rng.standard_normal((7, 2)), rng.standard_normal((7, 2))
        )
        assert probs.data.shape == (7,)
        assert np.all((probs.data > 0) & (probs.data < 1))

    def test_zero_head_gives_half(self):
        model = tiny_model(seed=1)
        model.head.w.data[:] = 0.0
        model.head.b.data[:] = 0.0
        rng = np.random.default_rng(11)
        probs = model.forward(
            rng.standard_normal((4, 3)), rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
        )
        assert np.all(probs.data == 0.5)

    def test_matches_composition_reference(self):
        for seed in (0, 1, 2):
            model = tiny_model(seed=seed)
            rng = np.random.default_rng(20 + seed)
            t = rng.standard_normal((5, 3))
            a = rng.standard_normal((5, 2))
            v = rng.standard_normal((5, 2))
            ours = model.forward(t, a, v).data
            reference = vfmm_forward_reference(model, t, a, v)
            assert np.max(np.abs(ours - reference)) < 1e-10

    def test_composition_reference_with_kernel3_heads2(self):
        config = VfmmConfig(d=4, conv_kernel=3, attn_heads=2, local_window=2)
        model = VfmmModel(config, DIMS, seed=3)
        rng = np.random.default_rng(30)
        t, a, v = rng.standard_normal((6, 3)), rng.standard_normal((6, 2)), rng.standard_normal((6, 2))
        assert np.max(np.abs(model.forward(t, a, v).data - vfmm_forward_reference(model, t, a, v))) < 1e-10

    def test_locality_beyond_window(self):
        model = VfmmModel(VfmmConfig(d=4, local_window=2), DIMS, seed=4)
        rng = np.random.default_rng(31)
        t, a, v = rng.standard_normal((12, 3)), rng.standard_normal((12, 2)), rng.standard_normal((12, 2))
        base = model.forward(t, a, v).data
        i, j = 1, 9  # |i - j| > window
        for stream in (t, a, v):
            perturbed = stream.copy()
            perturbed[j] += 5.0
            args = {"t": t, "a": a, "v": v}
            args["t" if stream is t else "a" if stream is a else "v"] = perturbed
            out = model.forward(args["t"], args["a"], args["v"]).data
            assert out[i] == base[i]  # bitwise

    def test_deterministic_across_calls(self):
        model = tiny_model(seed=5)
        rng = np.random.default_rng(32)
        t, a, v = rng.standard_normal((6, 3)), rng.standard_normal((6, 2)), rng.standard_normal((6, 2))
        assert np.array_equal(model.forward(t, a, v).data, model.forward(t, a, v).data)

    def test_length_mismatch_rejected(self):
        model = tiny_model()
        with pytest.raises(ValidationError):
            model.forward(np.zeros((3, 3)), np.zeros((4, 2)), np.zeros((4, 2)))

    def test_param_count_matches_formula_and_walker(self):
        for d, kernel, heads in ((4, 1, 1), (8, 3, 2), (6, 5, 3)):
            config = VfmmConfig(d=d, conv_kernel=kernel, attn_heads=heads)
            model = VfmmModel(config, DIMS, seed=0)
            walked = sum(int(np.prod(p.data.shape)) for p in model.parameters().values())
            assert param_count(model) == walked == vfmm_param_count(config, DIMS)

    def test_param_count_single_linear(self):
        from humorkit.neural.layers import Linear

        class Wrapper:
            def __init__(self):
                self.layer = Linear(np.random.default_rng(0), 2, 3, "x")

            def parameters(self):
                return self.layer.parameters()

        assert param_count(Wrapper()) == 2 * 3 + 3

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            VfmmConfig(d=5, attn_heads=2)
        with pytest.raises(ValidationError):
            VfmmConfig(d=4, dropout_rate=1.0)


class TestGruModel:
    def test_zero_params_give_half(self):
        model = GruModel(GruConfig(layers=1, hidden=3), d_in=2, seed=0)
        for p in model.parameters().values():
            p.data[:] = 0.0
        seq, score = model.forward_sequence(np.random.default_rng(0).standard_normal((4, 2)))
        assert np.array_equal(seq, np.zeros((4, 3)))
        assert score == 0.5

    def test_update_gate_saturation_freezes_state(self):
        model = GruModel(GruConfig(layers=1, hidden=2), d_in=1, seed=1)
        cell = model.cells[0][0]
        cell.b_z.data[:] = -50.0  # z ~ 0 -> h_t ~ h_{t-1}
        seq, _ = model.forward_sequence(np.ones((5, 1)))
        assert np.allclose(seq[1:], seq[:-1], atol=1e-12)

    def test_scalar_recurrence_matches_reference(self):
        model = GruModel(GruConfig(layers=1, hidden=1), d_in=1, seed=2)
        xs = np.random.default_rng(33).standard_normal(3)
        seq, score = model.forward_sequence(xs.reshape(-1, 1))
        ref_states, ref_score = gru_scalar_reference(model, xs)
        assert np.max(np.abs(seq.reshape(-1) - ref_states)) < 1e-10
        assert score == pytest.approx(ref_score, abs=1e-10)

    def test_bidirectional_output_width(self):
        model = GruModel(GruConfig(layers=2, hidden=3, bidirectional=True), d_in=2, seed=3)
        seq, score = model.forward_sequence(np.random.default_rng(1).standard_normal((4, 2)))
        assert seq.shape == (4, 6)
        assert 0.0 < score < 1.0

    def test_param_count_formula(self):
        for config in (
            GruConfig(layers=1, hidden=4),
            GruConfig(layers=2, hidden=3, bidirectional=True),
            GruConfig(layers=3, hidden=5, bidirectional=False),
        ):
            model = GruModel(config, d_in=6, seed=0)
            assert param_count(model) == gru_param_count(config, 6)

    def test_batch_matches_sequence(self):
        model = GruModel(GruConfig(layers=1, hidden=3), d_in=2, seed=4)
        rng = np.random.default_rng(34)
        batch = rng.standard_normal((5, 4, 2))
        logits = model.forward(batch).data
        from humorkit.neural.autodiff import stable_sigmoid

        for i in range(5):
            _, score = model.forward_sequence(batch[i])
            assert stable_sigmoid(logits[i]) == pytest.approx(score, abs=1e-12)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        model = tiny_model(seed=6)
        tensors = {name: p.data for name, p in model.parameters().items()}
        path = tmp_path / "model.ckpt"
        save_checkpoint(
            path, kind="vfmm", config={"d": 4}, seed=6, epoch=3, dev_auc=0.91, tensors=tensors
        )
        header, loaded = load_checkpoint(path)
        assert header["kind"] == "vfmm" and header["seed"] == 6 and header["epoch"] == 3
        assert header["dev_auc"] == pytest.approx(0.91)
        assert set(loaded) == set(tensors)
        for name in tensors:
            assert np.allclose(loaded[name], tensors[name], atol=1e-6)  # float32 storage

    def test_bad_format_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b'{"format": "other"}\n')
        with pytest.raises(ValidationError):
            load_checkpoint(path)
