"""Model configuration, weights and the bit-reproducible forward paths.

The architecture is fixed up to four hyper-parameters: K mixtures, C filters,
L total conv layers and the kernel half-width h.  Layer 1 is a masked
(2h+1)x(2h+1) convolution restricted to the causal taps, layers 2..L-1 are
1x1 CxC, layer L is 1x1 CxM with M = 12K, and LeakyReLU sits after layers
1..L-1.  The masked layer stores only its causal taps; there is no zeroed
full kernel.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import kernels
from .errors import LpicError

WEIGHT_MAGIC = b"LPWT"
WEIGHT_VERSION = 1

LEAKY_SLOPE = 0.01


class Distribution(IntEnum):
    GAUSSIAN = 0
    LOGISTIC = 1


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyper-parameters.

    mixtures: K, components per sub-pixel mixture.
    filters: C, width of every internal layer.
    layers: L, total number of conv layers (masked + (L-2) hidden + output).
    kernel_half: h, the masked layer kernel is (2h+1)x(2h+1).
    """

    mixtures: int = 3
    filters: int = 128
    layers: int = 5
    kernel_half: int = 2
    distribution: Distribution = Distribution.GAUSSIAN

    def __post_init__(self):
        if self.mixtures < 1:
            raise ValueError("mixtures must be positive")
        if self.filters < 1:
            raise ValueError("filters must be positive")
        if self.layers < 3:
            raise ValueError("need at least masked + hidden + output layers")
        if self.kernel_half < 1:
            raise ValueError("kernel_half must be positive")
        if self.distribution not in (Distribution.GAUSSIAN, Distribution.LOGISTIC):
            raise ValueError("unknown distribution")

    @property
    def param_channels(self) -> int:
        """M: per sub-pixel K weights + K means + K scales, plus K each of
        the three cross-channel coefficients."""
        return 12 * self.mixtures

    @property
    def hidden_count(self) -> int:
        return self.layers - 2

    @property
    def tap_count(self) -> int:
        h = self.kernel_half
        return (2 * h + 1) * h + h


REFERENCE_CONFIG = ModelConfig()


def causal_taps(kernel_half: int) -> np.ndarray:
    """(T, 2) array of (di, dj) offsets in canonical tap order."""
    return kernels.causal_tap_offsets(kernel_half)


@dataclass
class Weights:
    """All learnable tensors, float32, in canonical storage order."""

    masked_w: np.ndarray  # (T, 3, C): tap-major, in-channel, out-filter
    masked_b: np.ndarray  # (C,)
    hidden_w: np.ndarray  # (L-2, C, C): row-major out x in
    hidden_b: np.ndarray  # (L-2, C)
    out_w: np.ndarray     # (M, C): row-major out x in
    out_b: np.ndarray     # (M,)

    def tensors(self):
        return [self.masked_w, self.masked_b, self.hidden_w, self.hidden_b,
                self.out_w, self.out_b]

    def copy(self) -> "Weights":
        return Weights(*[t.copy() for t in self.tensors()])


def weight_shapes(cfg: ModelConfig):
    T, C, M = cfg.tap_count, cfg.filters, cfg.param_channels
    return [
        ("masked_w", (T, 3, C)),
        ("masked_b", (C,)),
        ("hidden_w", (cfg.hidden_count, C, C)),
        ("hidden_b", (cfg.hidden_count, C)),
        ("out_w", (M, C)),
        ("out_b", (M,)),
    ]


def zero_weights(cfg: ModelConfig) -> Weights:
    return Weights(*[np.zeros(shape, np.float32) for _, shape in weight_shapes(cfg)])


def glorot_weights(cfg: ModelConfig, rng: np.random.Generator) -> Weights:
    """Uniform init with bound sqrt(6/(fan_in+fan_out)); zero biases."""
    w = zero_weights(cfg)
    T, C, M = cfg.tap_count, cfg.filters, cfg.param_channels

    def bound(fan_in, fan_out):
        return float(np.sqrt(6.0 / (fan_in + fan_out)))

    b = bound(T * 3, C)
    w.masked_w[:] = rng.uniform(-b, b, w.masked_w.shape).astype(np.float32)
    b = bound(C, C)
    w.hidden_w[:] = rng.uniform(-b, b, w.hidden_w.shape).astype(np.float32)
    b = bound(C, M)
    w.out_w[:] = rng.uniform(-b, b, w.out_w.shape).astype(np.float32)
    return w


def count_parameters(cfg: ModelConfig) -> int:
    """Exact element count of all trainable tensors.

    Closed form: 12*3*C + C + (L-2)*(C^2 + C) + (C*12K + 12K) for h = 2.
    """
    return sum(int(np.prod(shape)) for _, shape in weight_shapes(cfg))


def estimate_macs(cfg: ModelConfig, height: int, width: int) -> int:
    """Multiply-accumulate count for one forward pass over height x width.

    Counts one MAC per weight application; the masked layer is counted at
    its causal tap count.  Bias additions and activations are excluded, so
    profilers with different mask/bias accounting can land ~10-15% higher.
    """
    c = cfg.filters
    per_pixel = cfg.tap_count * 3 * c \
        + cfg.hidden_count * c * c \
        + c * cfg.param_channels
    return per_pixel * height * width


def check_weights(w: Weights, cfg: ModelConfig) -> None:
    for (name, shape), t in zip(weight_shapes(cfg), w.tensors()):
        if t.shape != shape:
            raise LpicError(f"weight tensor {name} has shape {t.shape}, expected {shape}")
        if t.dtype != np.float32:
            raise LpicError(f"weight tensor {name} must be float32")


# ---------------------------------------------------------------------------
# Normalization and forward paths
# ---------------------------------------------------------------------------


def normalize(image: np.ndarray) -> np.ndarray:
    """Map 0..255 intensities to [-1, 1] float32 via x/127.5 - 1."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("expected an HxWx3 image")
    x = image.astype(np.float32)
    return x / np.float32(127.5) - np.float32(1.0)


def normalize_value(v: int) -> np.float32:
    """Scalar twin of ``normalize``; both ends of the codec use this for the
    cross-channel mean updates."""
    return np.float32(np.float32(v) / np.float32(127.5) - np.float32(1.0))


def leaky_relu(x: float) -> float:
    """x for x >= 0, else 0.01*x.  The compiled paths evaluate the same
    function in float32."""
    return x if x >= 0 else LEAKY_SLOPE * x


def _kernel_args(w: Weights):
    return (w.masked_w, w.masked_b, w.hidden_w, w.hidden_b, w.out_w, w.out_b)


def forward_full(image_n: np.ndarray, w: Weights, cfg: ModelConfig) -> np.ndarray:
    """Evaluate the whole normalized image in one masked pass -> (H, W, M)."""
    check_weights(w, cfg)
    if image_n.dtype != np.float32 or image_n.ndim != 3 or image_n.shape[2] != 3:
        raise ValueError("expected a normalized HxWx3 float32 plane")
    H, W, _ = image_n.shape
    out = np.empty((H, W, cfg.param_channels), np.float32)
    taps = causal_taps(cfg.kernel_half)
    kernels.forward_full_f32(np.ascontiguousarray(image_n), taps,
                             *_kernel_args(w), out)
    return out


def forward_taps_batch(tap_values: np.ndarray, w: Weights, cfg: ModelConfig) -> np.ndarray:
    """Forward pass from pre-gathered causal tap values (N, T, 3) -> (N, M)."""
    check_weights(w, cfg)
    if tap_values.ndim != 3 or tap_values.shape[1:] != (cfg.tap_count, 3):
        raise ValueError(f"expected (N, {cfg.tap_count}, 3) tap values")
    N = tap_values.shape[0]
    out = np.empty((N, cfg.param_channels), np.float32)
    kernels.forward_taps_f32(np.ascontiguousarray(tap_values, dtype=np.float32),
                             *_kernel_args(w), out)
    return out


def forward_patch(patch: np.ndarray, w: Weights, cfg: ModelConfig) -> np.ndarray:
    """Raw parameter vector for the center pixel of a (2h+1)x(2h+1)x3 patch.

    The center value and all non-causal positions are ignored by the mask.
    Bit-identical to the matching position of ``forward_full`` when the
    patch is extracted with zero padding from the same image.
    """
    h = cfg.kernel_half
    k = 2 * h + 1
    if patch.shape != (k, k, 3):
        raise ValueError(f"expected a {k}x{k}x3 patch")
    taps = causal_taps(h)
    tap_values = np.ascontiguousarray(
        patch[taps[:, 0] + h, taps[:, 1] + h, :], dtype=np.float32)
    return forward_taps_batch(tap_values[None], w, cfg)[0]


def forward_fc(context: np.ndarray, w: Weights, cfg: ModelConfig) -> np.ndarray:
    """Fully-connected evaluation of one causal context vector.

    The context holds the causal pixels flattened in canonical tap order
    (tap-major, channel-minor), length 3*T.  Bit-identical to
    ``forward_patch``.
    """
    check_weights(w, cfg)
    n = 3 * cfg.tap_count
    context = np.ascontiguousarray(context, dtype=np.float32)
    if context.shape != (n,):
        raise ValueError(f"expected a context vector of length {n}")
    out = np.empty((1, cfg.param_channels), np.float32)
    kernels.forward_fc_f32(context[None], *_kernel_args(w), out)
    return out[0]


# ---------------------------------------------------------------------------
# Weight file format
# ---------------------------------------------------------------------------
#
# magic "LPWT", version u8, K u8, C u8, L u8, h u8, distribution u8, then
# every tensor as little-endian float32 in canonical storage order, then a
# 64-bit FNV-1a fingerprint of everything before it.


def fnv1a64(data: bytes) -> int:
    h = 0xcbf29ce484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return h


def serialize_weights(w: Weights, cfg: ModelConfig) -> bytes:
    check_weights(w, cfg)
    if cfg.filters > 255 or cfg.mixtures > 255 or cfg.layers > 255 or cfg.kernel_half > 255:
        raise LpicError("config fields must fit in one byte each")
    parts = [WEIGHT_MAGIC,
             struct.pack("<BBBBBB", WEIGHT_VERSION, cfg.mixtures, cfg.filters,
                         cfg.layers, cfg.kernel_half, int(cfg.distribution))]
    for t in w.tensors():
        parts.append(np.ascontiguousarray(t, dtype="<f4").tobytes())
    return b"".join(parts)


def weight_fingerprint(w: Weights, cfg: ModelConfig) -> int:
    return fnv1a64(serialize_weights(w, cfg))


def save_weights(path, w: Weights, cfg: ModelConfig) -> int:
    """Write the weight file; returns the fingerprint it was sealed with."""
    payload = serialize_weights(w, cfg)
    fp = fnv1a64(payload)
    with open(path, "wb") as f:
        f.write(payload)
        f.write(struct.pack("<Q", fp))
    return fp


def load_weights(path) -> tuple[Weights, ModelConfig]:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 18 or blob[:4] != WEIGHT_MAGIC:
        raise LpicError(f"{path}: not a weight file")
    payload, trailer = blob[:-8], blob[-8:]
    (stored_fp,) = struct.unpack("<Q", trailer)
    if fnv1a64(payload) != stored_fp:
        raise LpicError(f"{path}: fingerprint mismatch, file is corrupt")
    version, K, C, L, h, dist = struct.unpack("<BBBBBB", payload[4:10])
    if version != WEIGHT_VERSION:
        raise LpicError(f"{path}: unsupported weight format version {version}")
    cfg = ModelConfig(mixtures=K, filters=C, layers=L, kernel_half=h,
                      distribution=Distribution(dist))
    w = zero_weights(cfg)
    offset = 10
    for t in w.tensors():
        n = t.size * 4
        if offset + n > len(payload):
            raise LpicError(f"{path}: truncated weight file")
        t[:] = np.frombuffer(payload[offset:offset + n], dtype="<f4").reshape(t.shape)
        offset += n
    if offset != len(payload):
        raise LpicError(f"{path}: trailing bytes in weight file")
    return w, cfg
