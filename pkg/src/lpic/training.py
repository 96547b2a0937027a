"""Desk-scale training: analytic gradients, Adam, stepped learning rate.

The loss is the mean over pixels of -log2 P(r, g, b | context), with the
joint factored through the cross-channel mean updates using ground-truth
r and g (teacher forcing).  Gradients are derived by hand through the
mixture likelihood, the activations and the conv stack; a float64 shadow of
the whole path backs the finite-difference check.

Training uses BLAS matmuls rather than the codec's canonical scalar order;
the two evaluate the same function to float32 accuracy, and only the codec
path needs bit reproducibility.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtr

from . import kernels
from .errors import LpicError
from .network import (Distribution, ModelConfig, Weights, causal_taps,
                      glorot_weights, weight_shapes)

LN2 = math.log(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_BIN_PROB_FLOOR = 1e-12


@dataclass
class TrainConfig:
    batch_size: int = 64
    crop: int = 64
    lr: float = 1e-4
    lr_decay: float = 0.99
    lr_decay_every: int = 5
    epochs: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1 or self.crop < 1 or self.epochs < 0:
            raise ValueError("invalid training configuration")


class GradientSet(Weights):
    """One tensor per weight tensor, same shapes."""


def zero_gradients(cfg: ModelConfig, dtype=np.float32) -> GradientSet:
    return GradientSet(*[np.zeros(shape, dtype)
                         for _, shape in weight_shapes(cfg)])


def learning_rate(tc: TrainConfig, epoch: int) -> float:
    return tc.lr * tc.lr_decay ** (epoch // tc.lr_decay_every)


# ---------------------------------------------------------------------------
# Batched forward/backward (training path)
# ---------------------------------------------------------------------------


def _gather_causal(xn: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """(B, H, W, 3) -> (B, H, W, T, 3) causal tap values, zero padded."""
    B, H, W, _ = xn.shape
    out = np.zeros((B, H, W, taps.shape[0], 3), xn.dtype)
    for t in range(taps.shape[0]):
        di, dj = int(taps[t, 0]), int(taps[t, 1])
        i0, i1 = max(0, -di), min(H, H - di)
        j0, j1 = max(0, -dj), min(W, W - dj)
        if i0 < i1 and j0 < j1:
            out[:, i0:i1, j0:j1, t] = xn[:, i0 + di:i1 + di, j0 + dj:j1 + dj]
    return out


def _lrelu(z):
    return np.where(z >= 0, z, z * z.dtype.type(0.01))


def _lrelu_grad(z):
    return np.where(z >= 0, z.dtype.type(1.0), z.dtype.type(0.01))


def _network_forward(xn: np.ndarray, w: Weights, cfg: ModelConfig, dtype):
    """Returns raw (B, H, W, M) plus the cache backward needs."""
    B, H, W, _ = xn.shape
    taps = causal_taps(cfg.kernel_half)
    T, C = cfg.tap_count, cfg.filters
    x1 = _gather_causal(xn.astype(dtype), taps).reshape(B * H * W, T * 3)
    mw = w.masked_w.reshape(T * 3, C).astype(dtype)
    zs = [x1 @ mw + w.masked_b.astype(dtype)]
    a = _lrelu(zs[0])
    for l in range(cfg.hidden_count):
        z = a @ w.hidden_w[l].T.astype(dtype) + w.hidden_b[l].astype(dtype)
        zs.append(z)
        a = _lrelu(z)
    raw = a @ w.out_w.T.astype(dtype) + w.out_b.astype(dtype)
    return raw.reshape(B, H, W, cfg.param_channels), (x1, zs)


def _network_backward(draw, cache, w: Weights, cfg: ModelConfig) -> GradientSet:
    x1, zs = cache
    dtype = x1.dtype
    P = x1.shape[0]
    M = cfg.param_channels
    g = zero_gradients(cfg, dtype)
    draw = draw.reshape(P, M).astype(dtype)
    a_last = _lrelu(zs[-1])
    g.out_w[:] = draw.T @ a_last
    g.out_b[:] = draw.sum(axis=0)
    ga = draw @ w.out_w.astype(dtype)
    for l in range(cfg.hidden_count - 1, -1, -1):
        gz = ga * _lrelu_grad(zs[l + 1])
        a_prev = _lrelu(zs[l])
        g.hidden_w[l] = gz.T @ a_prev
        g.hidden_b[l] = gz.sum(axis=0)
        ga = gz @ w.hidden_w[l].astype(dtype)
    gz = ga * _lrelu_grad(zs[0])
    g.masked_w[:] = (x1.T @ gz).reshape(g.masked_w.shape)
    g.masked_b[:] = gz.sum(axis=0)
    return g


# ---------------------------------------------------------------------------
# Mixture likelihood and its gradient
# ---------------------------------------------------------------------------


def _cdf_pdf(z, dist: Distribution):
    if dist == Distribution.GAUSSIAN:
        F = ndtr(z)
        with np.errstate(over="ignore"):
            pdf = np.exp(-0.5 * np.square(z)) * _INV_SQRT_2PI
        return F, pdf
    F = expit(z)
    return F, F * (1.0 - F)


def _mixture_loss(raw, images, cfg: ModelConfig, want_grad: bool):
    """Loss in bits per pixel (summed over the 3 sub-pixels), teacher forced.

    Stabilized by log-sum-exp over mixtures, with each component's bin
    probability clamped at 1e-12 before the log.
    """
    K = cfg.mixtures
    B, H, W, _ = images.shape
    N = B * H * W
    r64 = raw.astype(np.float64)
    syms = images.astype(np.int64)

    logits = r64[..., :3 * K].reshape(B, H, W, 3, K)
    mu0 = r64[..., 3 * K:6 * K].reshape(B, H, W, 3, K)
    rho = r64[..., 6 * K:9 * K].reshape(B, H, W, 3, K)
    coef_pre = r64[..., 9 * K:12 * K].reshape(B, H, W, 3, K)

    lmax = logits.max(axis=-1, keepdims=True)
    lexp = np.exp(logits - lmax)
    log_pi = logits - lmax - np.log(lexp.sum(axis=-1, keepdims=True))
    pi = np.exp(log_pi)

    rho_c = np.clip(rho, -7.0, 7.0)
    s = np.exp(rho_c)
    s_open = (rho > -7.0) & (rho < 7.0)

    t = np.tanh(coef_pre)
    xn = (2.0 * syms - 255.0) / 255.0
    rn = xn[..., 0:1]
    gn = xn[..., 1:2]
    mu = mu0.copy()
    mu[..., 1, :] += t[..., 0, :] * rn
    mu[..., 2, :] += t[..., 1, :] * rn + t[..., 2, :] * gn

    lo = np.where(syms == 0, -np.inf, kernels.EDGES[syms])
    hi = np.where(syms == 255, np.inf, kernels.EDGES[np.minimum(syms + 1, 256)])
    zl = (lo[..., None] - mu) / s
    zu = (hi[..., None] - mu) / s
    Fl, fl = _cdf_pdf(zl, cfg.distribution)
    Fu, fu = _cdf_pdf(zu, cfg.distribution)
    P = Fu - Fl
    Pc = np.maximum(P, _BIN_PROB_FLOOR)

    joint = log_pi + np.log(Pc)
    jmax = joint.max(axis=-1, keepdims=True)
    logp = jmax[..., 0] + np.log(np.exp(joint - jmax).sum(axis=-1))
    loss = float(-logp.sum(axis=-1).mean() / LN2)
    if not want_grad:
        return loss, None

    scale = 1.0 / (N * LN2)
    q = np.exp(joint - logp[..., None])
    dlogits = (pi - q) * scale

    open_bin = P > _BIN_PROB_FLOOR
    A = np.where(open_bin, q / Pc, 0.0) * scale
    dmu_eff = A * (fu - fl) / s
    zfl = np.where(np.isfinite(zl), zl, 0.0) * fl
    zfu = np.where(np.isfinite(zu), zu, 0.0) * fu
    drho = A * (zfu - zfl) * s_open

    dcoef = np.empty_like(dlogits)
    sech2 = 1.0 - np.square(t)
    dcoef[..., 0, :] = dmu_eff[..., 1, :] * rn * sech2[..., 0, :]
    dcoef[..., 1, :] = dmu_eff[..., 2, :] * rn * sech2[..., 1, :]
    dcoef[..., 2, :] = dmu_eff[..., 2, :] * gn * sech2[..., 2, :]

    draw = np.concatenate([
        dlogits.reshape(B, H, W, 3 * K),
        dmu_eff.reshape(B, H, W, 3 * K),
        drho.reshape(B, H, W, 3 * K),
        dcoef.reshape(B, H, W, 3 * K),
    ], axis=-1)
    return loss, draw


def _normalize_batch(images: np.ndarray, dtype):
    x = images.astype(dtype)
    return x / dtype(127.5) - dtype(1.0)


def loss(batch: np.ndarray, w: Weights, cfg: ModelConfig,
         dtype=np.float32) -> float:
    """Mean -log2 P(r, g, b | context) per pixel over the batch, in bits."""
    if batch.ndim != 4 or batch.shape[0] < 1:
        raise ValueError("expected a nonempty (B, H, W, 3) batch")
    raw, _ = _network_forward(_normalize_batch(batch, np.dtype(dtype).type),
                              w, cfg, dtype)
    value, _ = _mixture_loss(raw, batch, cfg, want_grad=False)
    return value


def backward(batch: np.ndarray, w: Weights, cfg: ModelConfig,
             dtype=np.float32) -> tuple[float, GradientSet]:
    """Loss plus analytic gradients for every weight tensor."""
    if batch.ndim != 4 or batch.shape[0] < 1:
        raise ValueError("expected a nonempty (B, H, W, 3) batch")
    dt = np.dtype(dtype).type
    raw, cache = _network_forward(_normalize_batch(batch, dt), w, cfg, dtype)
    value, draw = _mixture_loss(raw, batch, cfg, want_grad=True)
    grads = _network_backward(draw, cache, w, cfg)
    return value, grads


# ---------------------------------------------------------------------------
# Adam and the training loop
# ---------------------------------------------------------------------------


class Adam:
    def __init__(self, cfg: ModelConfig, tc: TrainConfig):
        self.tc = tc
        self.m = zero_gradients(cfg)
        self.v = zero_gradients(cfg)
        self.t = 0

    def step(self, w: Weights, g: GradientSet, lr: float) -> None:
        self.t += 1
        b1, b2, eps = self.tc.beta1, self.tc.beta2, self.tc.eps
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for wt, gt, mt, vt in zip(w.tensors(), g.tensors(),
                                  self.m.tensors(), self.v.tensors()):
            mt *= b1
            mt += (1.0 - b1) * gt
            vt *= b2
            vt += (1.0 - b2) * np.square(gt)
            wt -= (lr / c1) * mt / (np.sqrt(vt / c2) + self.tc.eps)


@dataclass
class EpochStats:
    epoch: int
    loss_bits_per_pixel: float
    bpsp_estimate: float
    lr: float


def _random_crop(image: np.ndarray, crop: int, rng: np.random.Generator):
    H, W, _ = image.shape
    i = int(rng.integers(0, H - crop + 1))
    j = int(rng.integers(0, W - crop + 1))
    return image[i:i + crop, j:j + crop]


def train(images, tc: TrainConfig, cfg: ModelConfig,
          initial: Weights | None = None, on_epoch=None):
    """Train on shuffled random crops; deterministic given the seed.

    images: list of HxWx3 uint8 arrays (or a directory path of image files).
    Returns (weights, per-epoch stats).  The bpsp estimate is loss/3: the
    loss is per pixel and a pixel holds three sub-pixels.
    """
    if isinstance(images, (str, os.PathLike)):
        from .images import load_corpus
        images = load_corpus(images)
    if len(images) == 0:
        raise LpicError("empty training dataset")
    if tc.crop < 2 * cfg.kernel_half + 1:
        raise ValueError("crop smaller than the network's receptive field")
    smallest = min(min(im.shape[0], im.shape[1]) for im in images)
    if smallest < tc.crop:
        raise LpicError(f"crop {tc.crop} larger than smallest image ({smallest})")

    rng = np.random.default_rng(tc.seed)
    w = initial.copy() if initial is not None else glorot_weights(cfg, rng)
    opt = Adam(cfg, tc)
    curve = []
    for epoch in range(tc.epochs):
        lr = learning_rate(tc, epoch)
        perm = rng.permutation(len(images))
        epoch_losses = []
        for k in range(0, len(perm), tc.batch_size):
            chunk = perm[k:k + tc.batch_size]
            batch = np.stack([_random_crop(images[i], tc.crop, rng)
                              for i in chunk])
            value, grads = backward(batch, w, cfg)
            if not math.isfinite(value):
                raise LpicError(
                    f"non-finite loss at epoch {epoch}, batch {k // tc.batch_size}")
            opt.step(w, grads, lr)
            epoch_losses.append(value)
        mean_loss = float(np.mean(epoch_losses))
        stats = EpochStats(epoch, mean_loss, mean_loss / 3.0, lr)
        curve.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
    return w, curve


def write_curve(path, curve) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "loss_bits_per_pixel", "bpsp_estimate", "lr"])
        for st in curve:
            writer.writerow([st.epoch, repr(st.loss_bits_per_pixel),
                             repr(st.bpsp_estimate), repr(st.lr)])


# ---------------------------------------------------------------------------
# Gradient verification
# ---------------------------------------------------------------------------


def finite_difference_check(cfg: ModelConfig | None = None, checks: int = 200,
                            seed: int = 0, eps: float = 1e-3,
                            batch_shape=(2, 8, 8)):
    """Analytic vs central finite-difference gradients on the float64 path.

    Perturbs randomly chosen scalar parameters by +/-eps and compares
    (L+ - L-)/(2 eps) with the analytic value until ``checks`` valid draws
    accumulate.  Returns (max relative error, list of per-check records).

    Two LeakyReLU-kink precautions keep the comparison meaningful -- a
    central difference straddling the kink averages the two slopes and
    measures neither, which is a property of the estimator, not of the
    gradient:

    * biases are randomized (training initializes them to zero, which pins
      every pre-activation of an all-padding context pixel exactly at 0);
    * draws whose +/-eps window flips the sign of any pre-activation are
      discarded and redrawn.
    """
    if cfg is None:
        cfg = ModelConfig(mixtures=2, filters=8, layers=4)
    rng = np.random.default_rng(seed)
    B, H, W = batch_shape
    batch = rng.integers(0, 256, (B, H, W, 3), dtype=np.uint8)
    w32 = glorot_weights(cfg, rng)
    w32.masked_b[:] = rng.uniform(-0.3, 0.3, w32.masked_b.shape)
    w32.hidden_b[:] = rng.uniform(-0.3, 0.3, w32.hidden_b.shape)
    w32.out_b[:] = rng.uniform(-0.3, 0.3, w32.out_b.shape)
    w = Weights(*[t.astype(np.float64) for t in w32.tensors()])
    _, grads = backward(batch, w, cfg, dtype=np.float64)

    def eval_loss():
        xn = _normalize_batch(batch, np.float64)
        raw, (_, zs) = _network_forward(xn, w, cfg, np.float64)
        value, _ = _mixture_loss(raw, batch, cfg, want_grad=False)
        return value, zs

    tensors = w.tensors()
    gtensors = grads.tensors()
    records = []
    worst = 0.0
    attempts = 0
    while len(records) < checks:
        attempts += 1
        if attempts > checks * 50:
            raise LpicError("gradient check could not find enough kink-free draws")
        ti = int(rng.integers(0, len(tensors)))
        flat = int(rng.integers(0, tensors[ti].size))
        original = float(tensors[ti].flat[flat])
        tensors[ti].flat[flat] = original + eps
        up, zs_up = eval_loss()
        tensors[ti].flat[flat] = original - eps
        down, zs_down = eval_loss()
        tensors[ti].flat[flat] = original
        if any(np.any((zu >= 0) != (zd >= 0))
               for zu, zd in zip(zs_up, zs_down)):
            continue
        fd = (up - down) / (2.0 * eps)
        an = float(gtensors[ti].flat[flat])
        rel = abs(fd - an) / max(abs(fd), abs(an), 1e-6)
        worst = max(worst, rel)
        records.append((ti, flat, an, fd, rel))
    return worst, records
