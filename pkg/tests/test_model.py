"""Autoencoder assembly: shape chain, loss decomposition, gradients,
checkpoint round trips."""

import numpy as np
import pytest

from radioae.adam import adam_init
from radioae.errors import FormatError, ShapeError
from radioae.layers import grad_check
from radioae.model import (
    ModelParams,
    decode,
    encode,
    forward_loss,
    forward_pass,
    init_model,
    load_model,
    param_count,
    save_model,
)


@pytest.fixture
def model():
    return init_model(123)


@pytest.fixture
def example():
    rng = np.random.default_rng(77)
    x = rng.normal(size=(2, 88)).astype(np.float32)
    return x / np.sqrt(np.mean(x[0] ** 2 + x[1] ** 2))


def _nudge_away_from_kinks(model, x, margin):
    """Shift dense biases so every pre-activation clears its kink by margin.

    Hard-sigmoid kinks sit at +/-2.5 on the bottleneck pre-activation,
    the relu kink at 0 on the decoder hidden layer. The shift keeps each
    unit on the side it already occupies.
    """
    from radioae.layers import conv1d_depthwise, dense, hard_sigmoid

    flat = conv1d_depthwise(x, model.enc_filters, model.enc_pad).reshape(-1)
    z1 = dense(flat, model.enc_dense_w, model.enc_dense_b)
    for kink in (-2.5, 2.5):
        close = np.abs(z1 - kink) < margin
        push = np.where(z1 >= kink, kink + 2 * margin, kink - 2 * margin)
        model.enc_dense_b[close] += (push - z1)[close]
        z1 = dense(flat, model.enc_dense_w, model.enc_dense_b)
    code = hard_sigmoid(z1)
    z2 = dense(code, model.dec_dense_w, model.dec_dense_b)
    close = np.abs(z2) < margin
    push = np.where(z2 >= 0.0, 2 * margin, -2 * margin)
    model.dec_dense_b[close] += (push - z2)[close]


class TestInitModel:
    def test_deterministic(self):
        a, b = init_model(5), init_model(5)
        for name, arr in a.tensors().items():
            np.testing.assert_array_equal(arr, b.tensors()[name])

    def test_seeds_differ(self):
        a, b = init_model(5), init_model(6)
        assert not np.array_equal(a.enc_filters, b.enc_filters)

    def test_param_counts(self, model):
        assert param_count(model) == (161, 30448)

    def test_count_arithmetic(self):
        assert 516 * 44 + 44 * 176 == 30448
        assert 2 * 40 + 81 == 161

    def test_biases_start_at_zero(self, model):
        np.testing.assert_array_equal(model.enc_dense_b, 0.0)
        np.testing.assert_array_equal(model.dec_dense_b, 0.0)

    def test_inconsistent_shapes_rejected(self, model):
        tensors = model.tensors()
        tensors["enc_dense_w"] = np.zeros((500, 44), dtype=np.float32)
        with pytest.raises(ShapeError):
            ModelParams(**tensors)
        tensors = model.tensors()
        tensors["dec_filter"] = np.zeros((1, 80), dtype=np.float32)  # even K
        with pytest.raises(ShapeError):
            ModelParams(**tensors)


class TestShapes:
    def test_forward_shape_chain(self, model, example):
        trace = forward_pass(model, example)
        assert trace["conv_out"].shape == (2, 2, 129)
        assert trace["flat"].shape == (516,)
        assert trace["code"].shape == (44,)
        assert trace["hidden"].shape == (176,)
        assert trace["reconstruction"].shape == (2, 88)

    def test_wrong_input_shape_rejected(self, model):
        with pytest.raises(ShapeError):
            encode(model, np.zeros((2, 87), dtype=np.float32))

    def test_wrong_code_width_rejected(self, model):
        with pytest.raises(ShapeError):
            decode(model, np.zeros(43, dtype=np.float32))


class TestEncode:
    def test_zero_input_gives_half_codes(self, model):
        code = encode(model, np.zeros((2, 88), dtype=np.float32))
        np.testing.assert_allclose(code, 0.5, atol=1e-7)

    def test_code_range(self, model):
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.normal(scale=3.0, size=(2, 88)).astype(np.float32)
            code = encode(model, x)
            assert code.shape == (44,)
            assert np.all(code >= 0.0) and np.all(code <= 1.0)

    def test_eval_mode_is_deterministic(self, model, example):
        np.testing.assert_array_equal(encode(model, example), encode(model, example))

    def test_train_mode_uses_dropout(self, model, example):
        rng = np.random.default_rng(4)
        a = encode(model, example, mode="train", rng=rng)
        b = encode(model, example, mode="eval")
        assert not np.array_equal(a, b)


class TestDecode:
    def test_zero_code_zero_biases_gives_zero_output(self, model):
        out = decode(model, np.zeros(44, dtype=np.float32))
        np.testing.assert_array_equal(out, 0.0)

    def test_output_shape(self, model):
        rng = np.random.default_rng(5)
        out = decode(model, rng.uniform(size=44).astype(np.float32))
        assert out.shape == (2, 88)

    def test_deterministic(self, model):
        rng = np.random.default_rng(6)
        code = rng.uniform(size=44).astype(np.float32)
        np.testing.assert_array_equal(decode(model, code), decode(model, code))


class TestForwardLoss:
    def test_perfect_reconstruction_is_zero_loss(self):
        # all-zero weights and biases reproduce the all-zero example exactly
        zero = ModelParams(
            enc_filters=np.zeros((2, 40)), enc_dense_w=np.zeros((516, 44)),
            enc_dense_b=np.zeros(44), dec_dense_w=np.zeros((44, 176)),
            dec_dense_b=np.zeros(176), dec_filter=np.zeros((1, 81)))
        x = np.zeros((2, 88))
        loss, _ = forward_loss(zero, x, x, lambda1=0.0, lambda2=0.0)
        assert loss.total == 0.0
        assert loss.mse == 0.0

    def test_total_is_sum_of_parts(self, model, example):
        loss, _ = forward_loss(model, example, example, lambda1=1e-3, lambda2=1e-3)
        assert loss.total == pytest.approx(
            loss.mse + loss.l1_activity + loss.l2_weights, abs=1e-12)
        assert loss.l2_weights > 0.0
        assert loss.total > loss.mse

    def test_gradient_keys_cover_all_tensors(self, model, example):
        _, grads = forward_loss(model, example, example)
        assert set(grads) == set(model.tensors())
        for name, g in grads.items():
            assert g.shape == model.tensors()[name].shape

    def test_end_to_end_gradients_match_finite_differences(self, example):
        # double precision, eval mode (no dropout); pre-activations are
        # nudged at least 1e-3 away from the hard-sigmoid/relu kinks via the
        # dense biases so the central differences never cross a kink
        model = init_model(123).astype(np.float64)
        rng = np.random.default_rng(99)
        x_noisy = example.astype(np.float64) + 0.05 * rng.normal(size=(2, 88))
        x_clean = example.astype(np.float64)
        _nudge_away_from_kinks(model, x_noisy, margin=5e-3)

        # eps=2e-4: with loss ~0.5 the f64 roundoff floor of a central
        # difference is ~6e-13, so coordinates whose true gradient is ~1e-8
        # (dense weights fed by near-zero conv features) stay well below
        # 1e-4 relative error; a smaller step drowns them in cancellation.
        # The loss is piecewise quadratic, so the larger step costs no
        # truncation error worth worrying about.
        worst = 0.0
        for name in model.tensors():
            def f(flat, name=name):
                arr = getattr(model, name)
                arr[...] = flat.reshape(arr.shape)
                loss, grads = forward_loss(model, x_noisy, x_clean,
                                           lambda1=1e-4, lambda2=1e-4)
                return loss.total, grads[name].reshape(-1)

            orig = getattr(model, name).copy()
            err = grad_check(f, orig.reshape(-1), eps=2e-4)
            getattr(model, name)[...] = orig
            worst = max(worst, err)
        assert worst < 1e-4

    def test_shape_mismatch_rejected(self, model):
        with pytest.raises(ShapeError):
            forward_loss(model, np.zeros((2, 88)), np.zeros((2, 87)))


class TestCheckpoint:
    def test_roundtrip_bit_identical(self, model, tmp_path):
        state = adam_init(model.shapes(), dtype=np.float32)
        state.m["enc_filters"][0, 0] = 0.25
        state.step = 17
        path = tmp_path / "m.raem"
        save_model(model, state, path)
        back, back_state = load_model(path)
        for name, arr in model.tensors().items():
            np.testing.assert_array_equal(arr, back.tensors()[name])
        assert back_state.step == 17
        assert back_state.hyper == state.hyper
        np.testing.assert_array_equal(back_state.m["enc_filters"],
                                      state.m["enc_filters"])

    def test_file_size_matches_inventory(self, model, tmp_path):
        # 3 copies (params, m, v) of 30609 weights + 220 biases as float32,
        # plus header and per-tensor name/shape records
        state = adam_init(model.shapes(), dtype=np.float32)
        path = tmp_path / "m.raem"
        save_model(model, state, path)
        n_values = 3 * (30609 + 220)
        size = path.stat().st_size
        assert n_values * 4 < size < n_values * 4 + 2048

    def test_truncated_file_rejected(self, model, tmp_path):
        state = adam_init(model.shapes(), dtype=np.float32)
        path = tmp_path / "m.raem"
        save_model(model, state, path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(FormatError):
            load_model(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "m.raem"
        path.write_bytes(b"WHAT" + b"\x00" * 64)
        with pytest.raises(FormatError):
            load_model(path)

    def test_trailing_garbage_rejected(self, model, tmp_path):
        state = adam_init(model.shapes(), dtype=np.float32)
        path = tmp_path / "m.raem"
        save_model(model, state, path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FormatError):
            load_model(path)
