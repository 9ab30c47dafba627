import numpy as np
import pytest

from canser import autodiff as ad
from canser.autodiff import Tensor
from canser.errors import InvalidInputError
from canser.features import TokenSequence, build_segment_tensor
from canser.kernels import available_backends, load_backend
from canser.model import AudioEncoder, BLSTM, TextEncoder, embed_text, encode_audio, encode_text, lstm
from oracles import blstm_scalar, central_difference, max_relative_error

H = 3


def _blstm_arrays(b):
    return [tuple(p.data for _, p in part.named_parameters())
            for part in (b.forward_params, b.backward_params)]


def test_embed_examples():
    table = Tensor(np.random.default_rng(0).normal(size=(4, 3)), True)
    out = embed_text(TokenSequence([0, 0], 4), table).data
    np.testing.assert_array_equal(out[0], out[1])
    np.testing.assert_array_equal(embed_text(np.array([2, 0, 3]), Tensor(np.eye(4))).data,
                                  np.eye(4)[[2, 0, 3]])


def test_embed_gradient_counts_occurrences():
    table = Tensor(np.zeros((5, 2)), True)
    ad.sum(embed_text(np.array([1, 3, 1, 1]), table)).backward()
    np.testing.assert_array_equal(table.grad[:, 0], [0, 3, 0, 1, 0])
    np.testing.assert_array_equal(table.grad[:, 0], table.grad[:, 1])


def test_embed_out_of_range():
    with pytest.raises(InvalidInputError):
        embed_text(np.array([5]), Tensor(np.zeros((5, 2))))


def test_blstm_zero_parameters_give_zero():
    b = BLSTM(2, H, np.random.default_rng(0))
    for _, p in b.named_parameters():
        p.data[...] = 0.0
    out = b(Tensor(np.random.default_rng(1).normal(size=(1, 4, 2))), [4])
    assert not out.data.any()


def test_blstm_single_step_halves_equal():
    b = BLSTM(2, H, np.random.default_rng(0))
    for (_, f), (_, r) in zip(b.forward_params.named_parameters(),
                              b.backward_params.named_parameters()):
        r.data[...] = f.data
    out = b(Tensor(np.random.default_rng(1).normal(size=(1, 1, 2))), [1]).data[0, 0]
    np.testing.assert_array_equal(out[:H], out[H:])


@pytest.mark.parametrize("backend", available_backends())
def test_blstm_matches_scalar_reference(backend):
    rng = np.random.default_rng(2)
    b = BLSTM(4, H, rng)
    x = rng.normal(size=(2, 3, 4))
    out = b(Tensor(x), [3, 2], kernel=load_backend(backend)).data
    fwd, bwd = _blstm_arrays(b)
    np.testing.assert_allclose(out[0], blstm_scalar(x[0], fwd, bwd), atol=1e-10)
    np.testing.assert_allclose(out[1, :2], blstm_scalar(x[1, :2], fwd, bwd), atol=1e-10)
    assert not out[1, 2].any()


def test_blstm_zero_length_raises():
    b = BLSTM(2, H, np.random.default_rng(0))
    with pytest.raises(InvalidInputError):
        b(Tensor(np.zeros((1, 2, 2))), [0])


@pytest.mark.parametrize("backend", available_backends())
@pytest.mark.parametrize("reverse", [False, True])
def test_lstm_gradient(backend, reverse):
    rng = np.random.default_rng(3)
    b = BLSTM(3, H, rng)
    params = b.forward_params
    x = Tensor(rng.normal(size=(2, 4, 3)), True)
    lengths = [4, 2]
    w = rng.normal(size=(2, 4, H))
    kernel = load_backend(backend)

    def value():
        return float((lstm(x, lengths, params, reverse, kernel).data * w).sum())

    ad.sum(ad.mul(lstm(x, lengths, params, reverse, kernel), w)).backward()
    for t in (x, params.w_x, params.w_h, params.b):
        numeric = central_difference(value, t.data, 1e-6)
        assert max_relative_error(t.grad, numeric, floor=1e-6) < 1e-4


def test_backends_agree():
    if len(available_backends()) < 2:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(4)
    x = rng.normal(size=(5, 7, 6))
    lengths = np.array([7, 1, 3, 7, 5])
    w_x, w_h, b = rng.normal(size=(6, 16)), rng.normal(size=(4, 16)), rng.normal(size=16)
    py, cy = load_backend("python"), load_backend("cython")
    hp, cp, gp = py.lstm_forward(x, lengths, w_x, w_h, b)
    hc, cc, gc = cy.lstm_forward(x, lengths, w_x, w_h, b)
    np.testing.assert_allclose(hp, hc, atol=1e-12)
    dh = rng.normal(size=hp.shape)
    for a, c in zip(py.lstm_backward(dh, x, lengths, w_x, w_h, hp, cp, gp),
                    cy.lstm_backward(dh, x, lengths, w_x, w_h, hc, cc, gc)):
        np.testing.assert_allclose(a, c, atol=1e-10)


def test_encode_text_shape_mask_and_determinism():
    enc = TextEncoder(6, 4, H, np.random.default_rng(0))
    one = encode_text(enc, TokenSequence([2], 6))
    assert one.hidden.shape == (1, 1, 2 * H)
    out = enc(np.array([[1, 2, 3], [4, 0, 0]]), [3, 1])
    assert not out.hidden.data[1, 1:].any()
    np.testing.assert_array_equal(out.mask, [[True, True, True], [True, False, False]])
    again = enc(np.array([[1, 2, 3], [4, 0, 0]]), [3, 1])
    assert out.hidden.data.tobytes() == again.hidden.data.tobytes()


def _segments(rng, frames, d=3):
    return build_segment_tensor([rng.normal(size=(f, d)) for f in frames])


def test_encode_audio_shape_and_padding_invariance():
    rng = np.random.default_rng(0)
    enc = AudioEncoder(3, H, rng)
    segs = _segments(rng, [2, 5])
    out = encode_audio(enc, segs)
    assert out.hidden.shape == (1, 2, 2 * H)
    segs.features[0, 2:] = 123.0
    assert np.array_equal(encode_audio(enc, segs).hidden.data, out.hidden.data)


def test_encode_audio_zero_frames_raises():
    enc = AudioEncoder(3, H, np.random.default_rng(0))
    with pytest.raises(InvalidInputError):
        enc.pool_segments(np.zeros((1, 2, 3)), [0])


def test_lower_level_segment_at_a_time_is_bit_identical():
    rng = np.random.default_rng(5)
    enc = AudioEncoder(3, H, rng)
    segs = _segments(rng, [4, 1, 6, 3, 6])
    batch = enc.pool_segments(segs.features, segs.valid_frames).data
    for i, f in enumerate(segs.valid_frames):
        alone = enc.pool_segments(segs.features[i : i + 1, :f], [f]).data[0]
        assert alone.tobytes() == batch[i].tobytes()


def test_identical_segments_pool_identically_in_any_position():
    rng = np.random.default_rng(6)
    enc = AudioEncoder(3, H, rng)
    a, b = rng.normal(size=(4, 3)), rng.normal(size=(2, 3))
    first = enc.pool_segments(*_feats([a, b, a])).data
    second = enc.pool_segments(*_feats([b, a, a])).data
    np.testing.assert_array_equal(first[0], first[2])
    np.testing.assert_array_equal(first[0], second[1])
    np.testing.assert_array_equal(first[1], second[0])


def _feats(arrays):
    s = build_segment_tensor(arrays)
    return s.features, s.valid_frames


def test_text_and_audio_steps_align():
    rng = np.random.default_rng(7)
    text = TextEncoder(5, 4, H, rng)
    audio = AudioEncoder(3, H, rng)
    t = encode_text(text, TokenSequence([1, 2, 3], 5))
    a = encode_audio(audio, _segments(rng, [2, 3, 1]))
    assert t.hidden.shape == a.hidden.shape
    np.testing.assert_array_equal(t.mask, a.mask)


def test_all_encoder_parameters_get_nonzero_gradients():
    rng = np.random.default_rng(8)
    text = TextEncoder(5, 4, H, rng)
    audio = AudioEncoder(3, H, rng)
    t = text(np.array([[1, 2, 3], [4, 1, 0]]), [3, 2])
    segs = [_segments(rng, [2, 3, 1]), _segments(rng, [4, 2])]
    feats = np.zeros((5, 4, 3))
    feats[:3, :3] = segs[0].features
    feats[3:, :4] = segs[1].features
    frames = np.concatenate([segs[0].valid_frames, segs[1].valid_frames])
    a = audio(feats, frames, np.array([0, 1, 2, 3, 4]), np.array([3, 2]))
    w = rng.normal(size=t.hidden.shape)
    ad.add(ad.sum(ad.mul(t.hidden, w)), ad.sum(ad.mul(a.hidden, w))).backward()
    for name, p in text.named_parameters() + audio.named_parameters():
        assert p.grad is not None and np.abs(p.grad).max() > 0, name
