"""End-to-end encode/decode pipelines and the container format.

Encoding runs the network once over the whole image (diagonal mode instead
evaluates step by step, because its substituted contexts differ from the
plain causal ones), then codes sub-pixels in schedule order.  Decoding
rebuilds the image step by step, evaluating all of a step's pixels in one
batched pass.  Both ends drive the identical compiled parameter->CDF
pipeline, so the CDF handed to the range coder for every symbol is
bit-identical on both sides.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels, network
from .coder import RangeDecoder, RangeEncoder
from .errors import FingerprintMismatchError, LpicError
from .network import ModelConfig, Weights
from .schedules import Schedule, ScheduleMode, build_schedule, parse_mode

CONTAINER_MAGIC = b"LPIC"
CONTAINER_VERSION = 1
_HEADER = struct.Struct("<4sBBBBIIQQ")


@dataclass
class Container:
    """Compressed image: header identifying mode/model plus the payload."""

    mode: ScheduleMode
    mixtures: int
    distribution: int
    width: int
    height: int
    weight_fingerprint: int
    payload: bytes
    version: int = CONTAINER_VERSION

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(CONTAINER_MAGIC, self.version, int(self.mode),
                              self.mixtures, self.distribution, self.width,
                              self.height, self.weight_fingerprint,
                              len(self.payload))
        return header + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "Container":
        if len(data) < _HEADER.size or data[:4] != CONTAINER_MAGIC:
            raise LpicError("not a compressed image container")
        magic, version, mode, K, dist, width, height, fp, n = \
            _HEADER.unpack(data[:_HEADER.size])
        if version != CONTAINER_VERSION:
            raise LpicError(f"unsupported container version {version}")
        payload = data[_HEADER.size:]
        if len(payload) != n:
            raise LpicError("container payload length mismatch")
        return cls(ScheduleMode(mode), K, dist, width, height, fp, payload,
                   version)


@dataclass
class CodecTrace:
    """Optional instrumentation: per-pixel raw parameter vectors and CDF
    tables in coding order, plus the network pass count."""

    raw: np.ndarray | None = None     # (N, M) float32
    cdfs: np.ndarray | None = None    # (N, 3, 257) int64
    order: list = field(default_factory=list)
    network_passes: int = 0


def _check_image(image: np.ndarray) -> None:
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("expected an HxWx3 uint8 image")
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise ValueError("empty image")


def gather_tap_values(plane: np.ndarray, step, schedule: Schedule,
                      taps: np.ndarray) -> np.ndarray:
    """Causal tap values for every pixel of a step, (N, T, 3) float32.

    Out-of-image taps read 0.0; diagonal substitutions override their three
    redirected taps with the substitute pixel's value (or 0.0 for padding).
    """
    H, W, _ = plane.shape
    pos = np.asarray(step, dtype=np.int64)
    ti = pos[:, 0:1] + taps[None, :, 0]
    tj = pos[:, 1:2] + taps[None, :, 1]
    inside = (ti >= 0) & (ti < H) & (tj >= 0) & (tj < W)
    values = plane[np.clip(ti, 0, H - 1), np.clip(tj, 0, W - 1)]
    values[~inside] = np.float32(0.0)
    if schedule.substitutions:
        tap_index = {(int(taps[k, 0]), int(taps[k, 1])): k
                     for k in range(taps.shape[0])}
        redirected = [(off, tap_index[off]) for off in schedule.sub_offsets]
        subs = schedule.substitutions
        for n, (i, j) in enumerate(step):
            for (di, dj), k in redirected:
                key = (i, j, di, dj)
                if key in subs:
                    src = subs[key]
                    values[n, k] = np.float32(0.0) if src is None else plane[src]
    return np.ascontiguousarray(values, dtype=np.float32)


def _coding_order(schedule: Schedule) -> np.ndarray:
    flat = [p for step in schedule.steps for p in step]
    return np.asarray(flat, dtype=np.int64)


def _raw_in_coding_order(image: np.ndarray, w: Weights, cfg: ModelConfig,
                         schedule: Schedule, trace: CodecTrace | None = None):
    """Raw parameter vectors for every pixel, ordered like the bitstream.

    Sequential/wavefront contexts are the plain causal neighborhoods, so one
    whole-image masked pass suffices.  Diagonal contexts contain substituted
    values, which a plain full pass cannot produce, so that mode evaluates
    step by step exactly as the decoder will.
    """
    order = _coding_order(schedule)
    plane = network.normalize(image)
    if schedule.mode != ScheduleMode.DIAGONAL:
        full = network.forward_full(plane, w, cfg)
        raw = np.ascontiguousarray(full[order[:, 0], order[:, 1]])
        passes = 1
    else:
        taps = network.causal_taps(cfg.kernel_half)
        raw = np.empty((order.shape[0], cfg.param_channels), np.float32)
        passes = 0
        k = 0
        for step in schedule.steps:
            if not step:
                continue
            tap_values = gather_tap_values(plane, step, schedule, taps)
            raw[k:k + len(step)] = network.forward_taps_batch(tap_values, w, cfg)
            passes += 1
            k += len(step)
    if trace is not None:
        trace.network_passes = passes
    return raw, order


def _channel_cdfs_batch(raw: np.ndarray, cfg: ModelConfig, channel: int,
                        rn: np.ndarray, gn: np.ndarray) -> np.ndarray:
    out = np.empty((raw.shape[0], 257), np.int64)
    kernels.channel_cdfs(raw, cfg.mixtures, int(cfg.distribution), channel,
                         rn, gn, kernels.EDGES, out)
    return out


def encode(image: np.ndarray, w: Weights, cfg: ModelConfig, mode,
           trace: CodecTrace | None = None) -> Container:
    """Compress an image; losslessly invertible by ``decode`` with the same
    weights."""
    _check_image(image)
    network.check_weights(w, cfg)
    H, W, _ = image.shape
    schedule = build_schedule(mode, H, W, cfg.kernel_half)
    raw, order = _raw_in_coding_order(image, w, cfg, schedule, trace)
    if not np.all(np.isfinite(raw)):
        raise LpicError("network produced non-finite parameters")

    syms = image[order[:, 0], order[:, 1]].astype(np.int64)
    plane = network.normalize(image)
    rn = plane[order[:, 0], order[:, 1], 0].copy()
    gn = plane[order[:, 0], order[:, 1], 1].copy()
    cdfs = np.empty((raw.shape[0], 3, 257), np.int64)
    zeros = np.zeros(raw.shape[0], np.float32)
    cdfs[:, 0] = _channel_cdfs_batch(raw, cfg, 0, zeros, zeros)
    cdfs[:, 1] = _channel_cdfs_batch(raw, cfg, 1, rn, zeros)
    cdfs[:, 2] = _channel_cdfs_batch(raw, cfg, 2, rn, gn)

    enc = RangeEncoder()
    for n in range(syms.shape[0]):
        enc.encode(int(syms[n, 0]), cdfs[n, 0])
        enc.encode(int(syms[n, 1]), cdfs[n, 1])
        enc.encode(int(syms[n, 2]), cdfs[n, 2])
    payload = enc.finish()

    if trace is not None:
        trace.raw = raw.copy()
        trace.cdfs = cdfs
        trace.order = [tuple(p) for p in order]
    return Container(schedule.mode, cfg.mixtures, int(cfg.distribution),
                     W, H, network.weight_fingerprint(w, cfg), payload)


def decode(container: Container, w: Weights, cfg: ModelConfig,
           trace: CodecTrace | None = None) -> np.ndarray:
    """Reconstruct the exact image from a container."""
    network.check_weights(w, cfg)
    if container.weight_fingerprint != network.weight_fingerprint(w, cfg):
        raise FingerprintMismatchError(
            "container was encoded with different weights")
    if container.mixtures != cfg.mixtures or container.distribution != int(cfg.distribution):
        raise LpicError("container model header does not match the config")
    H, W = container.height, container.width
    schedule = build_schedule(container.mode, H, W, cfg.kernel_half)
    taps = network.causal_taps(cfg.kernel_half)
    dec = RangeDecoder(container.payload)
    image = np.zeros((H, W, 3), np.uint8)
    plane = np.zeros((H, W, 3), np.float32)

    collect = trace is not None
    if collect:
        trace.raw = np.empty((H * W, cfg.param_channels), np.float32)
        trace.cdfs = np.empty((H * W, 3, 257), np.int64)
        trace.order = []
        trace.network_passes = 0

    zero1 = np.zeros(1, np.float32)
    done = 0
    for step in schedule.steps:
        if not step:
            continue
        tap_values = gather_tap_values(plane, step, schedule, taps)
        raw = network.forward_taps_batch(tap_values, w, cfg)
        if collect:
            trace.network_passes += 1
        step_zeros = np.zeros(len(step), np.float32)
        cdf_r = _channel_cdfs_batch(raw, cfg, 0, step_zeros, step_zeros)
        for n, (i, j) in enumerate(step):
            row = raw[n:n + 1]
            r = dec.decode(cdf_r[n])
            rn = np.full(1, network.normalize_value(r), np.float32)
            cdf_g = _channel_cdfs_batch(row, cfg, 1, rn, zero1)[0]
            g = dec.decode(cdf_g)
            gn = np.full(1, network.normalize_value(g), np.float32)
            cdf_b = _channel_cdfs_batch(row, cfg, 2, rn, gn)[0]
            b = dec.decode(cdf_b)
            image[i, j] = (r, g, b)
            plane[i, j, 0] = rn[0]
            plane[i, j, 1] = gn[0]
            plane[i, j, 2] = network.normalize_value(b)
            if collect:
                trace.raw[done] = raw[n]
                trace.cdfs[done, 0] = cdf_r[n]
                trace.cdfs[done, 1] = cdf_g
                trace.cdfs[done, 2] = cdf_b
                trace.order.append((i, j))
            done += 1
    return image


def bpsp(container: Container) -> float:
    """Bits per sub-pixel of the payload: 8*bytes / (3*H*W)."""
    return 8.0 * len(container.payload) / (3.0 * container.height * container.width)


def theoretical_bpsp(image: np.ndarray, w: Weights, cfg: ModelConfig,
                     mode=ScheduleMode.SEQUENTIAL) -> float:
    """Mean ideal code length, -log2 P(r,g,b | context) per sub-pixel,
    evaluated with the unquantized mixture probabilities the encoder would
    see.  The coded payload exceeds this only by CDF quantization and coder
    overhead."""
    _check_image(image)
    H, W, _ = image.shape
    schedule = build_schedule(parse_mode(mode), H, W, cfg.kernel_half)
    raw, order = _raw_in_coding_order(image, w, cfg, schedule)
    syms = image[order[:, 0], order[:, 1]].astype(np.int64)
    plane = network.normalize(image)
    rn = plane[order[:, 0], order[:, 1], 0].copy()
    gn = plane[order[:, 0], order[:, 1], 1].copy()
    probs = np.empty((raw.shape[0], 3), np.float64)
    kernels.true_symbol_probs(raw, syms, rn, gn, cfg.mixtures,
                              int(cfg.distribution), kernels.EDGES, probs)
    with np.errstate(divide="ignore"):
        bits = -np.log2(probs)
    return float(bits.sum() / (3.0 * H * W))
