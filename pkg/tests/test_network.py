import numpy as np
import pytest

from lpic import kernels, network
from lpic.errors import LpicError
from lpic.network import (Distribution, ModelConfig, causal_taps,
                          count_parameters, estimate_macs, forward_fc,
                          forward_full, forward_patch, glorot_weights,
                          leaky_relu, load_weights, normalize, normalize_value,
                          save_weights, weight_fingerprint, zero_weights)

from conftest import random_image


def test_normalize_endpoints():
    img = np.zeros((1, 3, 3), np.uint8)
    img[0, 0] = 0
    img[0, 1] = 255
    img[0, 2] = 127
    xn = normalize(img)
    assert xn[0, 0, 0] == -1.0
    assert xn[0, 1, 0] == 1.0
    assert abs(xn[0, 2, 0] - (127 / 127.5 - 1)) < 1e-7
    assert abs(float(xn[0, 2, 0]) - (-0.00392157)) < 1e-6
    assert xn.dtype == np.float32


def test_normalize_value_matches_plane():
    img = np.arange(256, dtype=np.uint8).reshape(16, 16)
    img = np.stack([img] * 3, axis=2)
    xn = normalize(img)
    for v in (0, 1, 127, 128, 200, 255):
        i, j = divmod(v, 16)
        assert normalize_value(v) == xn[i, j, 0]


def test_leaky_relu_values():
    assert leaky_relu(0.0) == 0.0
    assert leaky_relu(3.5) == 3.5
    assert leaky_relu(-2.0) == pytest.approx(-0.02)


def test_causal_taps_reference_kernel():
    taps = causal_taps(2)
    assert taps.shape == (12, 2)
    # two full rows above, then two positions left of center
    expected = [(-2, -2), (-2, -1), (-2, 0), (-2, 1), (-2, 2),
                (-1, -2), (-1, -1), (-1, 0), (-1, 1), (-1, 2),
                (0, -2), (0, -1)]
    assert [tuple(t) for t in taps] == expected


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(mixtures=0)
    with pytest.raises(ValueError):
        ModelConfig(layers=2)
    assert ModelConfig().param_channels == 36


@pytest.mark.parametrize("cfg,expected", [
    (ModelConfig(mixtures=3, filters=128, layers=5), 58916),
    (ModelConfig(mixtures=5, filters=128, layers=5), 62012),
    (ModelConfig(mixtures=7, filters=128, layers=5), 65108),
    (ModelConfig(mixtures=3, filters=64, layers=5), 17188),
    (ModelConfig(mixtures=3, filters=192, layers=5), 125220),
    (ModelConfig(mixtures=3, filters=128, layers=4), 42404),
    (ModelConfig(mixtures=3, filters=128, layers=6), 75428),
])
def test_count_parameters(cfg, expected):
    assert count_parameters(cfg) == expected
    # the formula must agree with the actual tensor element totals
    w = zero_weights(cfg)
    assert sum(t.size for t in w.tensors()) == expected


def test_estimate_macs_reference():
    cfg = ModelConfig()
    per_pixel = 12 * 3 * 128 + 3 * 128 ** 2 + 128 * 36
    assert per_pixel == 58368
    assert estimate_macs(cfg, 1, 1) == per_pixel
    assert estimate_macs(cfg, 512, 512) == per_pixel * 512 * 512
    assert estimate_macs(cfg, 512, 512) == 15_300_820_992


def test_zero_weights_forward_is_constant(tiny_cfg):
    w = zero_weights(tiny_cfg)
    rng = np.random.default_rng(0)
    xn = normalize(random_image(rng, 6, 7))
    out = forward_full(xn, w, tiny_cfg)
    assert np.all(out == 0.0)
    # nonzero output bias propagates to every pixel identically
    w.out_b[:] = np.arange(tiny_cfg.param_channels, dtype=np.float32)
    out = forward_full(xn, w, tiny_cfg)
    assert np.all(out == w.out_b)


def test_forward_full_matches_numpy_reference(tiny_cfg, tiny_weights):
    rng = np.random.default_rng(3)
    for _ in range(3):
        H, W = rng.integers(1, 14, 2)
        xn = normalize(random_image(rng, H, W))
        fast = forward_full(xn, tiny_weights, tiny_cfg)
        ref = kernels.reference_forward_full(
            xn, causal_taps(tiny_cfg.kernel_half), tiny_weights.masked_w,
            tiny_weights.masked_b, tiny_weights.hidden_w, tiny_weights.hidden_b,
            tiny_weights.out_w, tiny_weights.out_b)
        assert np.array_equal(fast.view(np.uint32), ref.view(np.uint32))


def _padded(xn, h):
    H, W, _ = xn.shape
    out = np.zeros((H + 2 * h, W + 2 * h, 3), np.float32)
    out[h:h + H, h:h + W] = xn
    return out


def test_path_equivalence_bitwise(small_cfg, small_weights):
    rng = np.random.default_rng(11)
    h = small_cfg.kernel_half
    taps = causal_taps(h)
    for _ in range(3):
        H, W = rng.integers(1, 11, 2)
        xn = normalize(random_image(rng, H, W))
        full = forward_full(xn, small_weights, small_cfg)
        pad = _padded(xn, h)
        for i in range(H):
            for j in range(W):
                patch = pad[i:i + 2 * h + 1, j:j + 2 * h + 1]
                pv = forward_patch(patch, small_weights, small_cfg)
                assert np.array_equal(pv.view(np.uint32),
                                      full[i, j].view(np.uint32))
                ctx = patch[taps[:, 0] + h, taps[:, 1] + h, :].reshape(-1)
                fv = forward_fc(ctx, small_weights, small_cfg)
                assert np.array_equal(fv.view(np.uint32),
                                      full[i, j].view(np.uint32))


def test_patch_center_is_masked(small_cfg, small_weights):
    rng = np.random.default_rng(5)
    h = small_cfg.kernel_half
    patch = rng.standard_normal((2 * h + 1, 2 * h + 1, 3)).astype(np.float32)
    base = forward_patch(patch, small_weights, small_cfg)
    poked = patch.copy()
    poked[h, h] = rng.standard_normal(3).astype(np.float32)
    poked[h, h + 1:] = rng.standard_normal((h, 3)).astype(np.float32)
    poked[h + 1:] = rng.standard_normal((h, 2 * h + 1, 3)).astype(np.float32)
    assert np.array_equal(forward_patch(poked, small_weights, small_cfg), base)


def test_one_pixel_image_equals_all_padding_patch(small_cfg, small_weights):
    rng = np.random.default_rng(9)
    img = random_image(rng, 1, 1)
    full = forward_full(normalize(img), small_weights, small_cfg)[0, 0]
    h = small_cfg.kernel_half
    patch = np.zeros((2 * h + 1, 2 * h + 1, 3), np.float32)
    patch[h, h] = normalize(img)[0, 0]  # center is masked anyway
    pv = forward_patch(patch, small_weights, small_cfg)
    assert np.array_equal(pv.view(np.uint32), full.view(np.uint32))


def test_causality_probe(tiny_cfg, tiny_weights):
    rng = np.random.default_rng(17)
    size = 12
    trials = 1000
    for _ in range(trials):
        img = random_image(rng, size, size)
        base = forward_full(normalize(img), tiny_weights, tiny_cfg)
        i = int(rng.integers(0, size))
        j = int(rng.integers(0, size))
        poked = img.copy()
        poked[i, j, rng.integers(0, 3)] ^= 0xFF
        after = forward_full(normalize(poked), tiny_weights, tiny_cfg)
        changed = np.any(base != after, axis=2).reshape(-1)
        assert not changed[:i * size + j + 1].any(), \
            f"perturbation at ({i},{j}) leaked backwards"


def test_weight_file_roundtrip(tmp_path, small_cfg, small_weights):
    path = tmp_path / "model.lpwt"
    fp = save_weights(path, small_weights, small_cfg)
    w2, cfg2 = load_weights(path)
    assert cfg2 == small_cfg
    assert fp == weight_fingerprint(w2, cfg2)
    for a, b in zip(small_weights.tensors(), w2.tensors()):
        assert np.array_equal(a, b)


def test_weight_file_flip_detected(tmp_path, small_cfg, small_weights):
    path = tmp_path / "model.lpwt"
    save_weights(path, small_weights, small_cfg)
    blob = bytearray(path.read_bytes())
    blob[len(blob) // 2] ^= 0x01
    path.write_bytes(bytes(blob))
    with pytest.raises(LpicError, match="fingerprint"):
        load_weights(path)


def test_fnv1a64_reference_vectors():
    # published FNV-1a 64-bit test vectors
    assert network.fnv1a64(b"") == 0xcbf29ce484222325
    assert network.fnv1a64(b"a") == 0xaf63dc4c8601ec8c
    assert network.fnv1a64(b"foobar") == 0x85944171f73967e8


def test_forward_rejects_bad_shapes(tiny_cfg, tiny_weights):
    with pytest.raises(ValueError):
        forward_patch(np.zeros((3, 3, 3), np.float32), tiny_weights, tiny_cfg)
    with pytest.raises(ValueError):
        forward_fc(np.zeros(10, np.float32), tiny_weights, tiny_cfg)
    bad = glorot_weights(ModelConfig(mixtures=2, filters=4, layers=4),
                         np.random.default_rng(0))
    with pytest.raises(LpicError):
        forward_full(np.zeros((4, 4, 3), np.float32), bad, tiny_cfg)
