"""Per-pixel mixture distributions over 8-bit intensities.

A raw M-vector from the network is split into, per sub-pixel channel,
K mixture weights (softmax of logits), K means (unbounded, normalized
domain) and K scales exp(clamp(rho, -7, 7)), plus K each of the
cross-channel coefficients alpha, beta, gamma (tanh, in [-1, 1]).

The probability of intensity x is the mixture CDF difference over the bin
[x_n - d, x_n + d) with x_n = x/127.5 - 1 and d = 1/255; the lowest bin
integrates to -infinity and the highest to +infinity, so the 256 bins always
sum to one.

The codec evaluates a compiled fusion of these operations (see
``kernels.channel_cdfs``); the functions here are the reference surface the
tests check both against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtr

from . import kernels
from .network import Distribution, ModelConfig

CHANNELS = ("r", "g", "b")

SCALE_LOG_MIN = -7.0
SCALE_LOG_MAX = 7.0


@dataclass
class PixelParams:
    """Mixture parameters for one pixel; rows of the (3, K) arrays are the
    r, g, b sub-pixels."""

    weights: np.ndarray  # (3, K) mixture weights, each row sums to 1
    means: np.ndarray    # (3, K) normalized-domain means
    scales: np.ndarray   # (3, K) in [e^-7, e^7]
    alpha: np.ndarray    # (K,) green-mean coefficient on r
    beta: np.ndarray     # (K,) blue-mean coefficient on r
    gamma: np.ndarray    # (K,) blue-mean coefficient on g

    def copy(self) -> "PixelParams":
        return PixelParams(self.weights.copy(), self.means.copy(),
                           self.scales.copy(), self.alpha.copy(),
                           self.beta.copy(), self.gamma.copy())


def activate(raw: np.ndarray, cfg: ModelConfig) -> PixelParams:
    """Turn a raw M-vector into bounded mixture parameters."""
    K = cfg.mixtures
    raw = np.asarray(raw, dtype=np.float32)
    if raw.shape != (cfg.param_channels,):
        raise ValueError(f"expected a raw vector of length {cfg.param_channels}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("non-finite raw parameter values")
    logits = raw[:3 * K].reshape(3, K)
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    weights = e / e.sum(axis=1, keepdims=True)
    means = raw[3 * K:6 * K].reshape(3, K).copy()
    scales = np.exp(np.clip(raw[6 * K:9 * K].reshape(3, K),
                            np.float32(SCALE_LOG_MIN), np.float32(SCALE_LOG_MAX)))
    coef = np.tanh(raw[9 * K:12 * K].reshape(3, K))
    return PixelParams(weights, means, scales, coef[0].copy(), coef[1].copy(),
                       coef[2].copy())


def update_means(p: PixelParams, r_n: float, g_n: float) -> PixelParams:
    """Shift green/blue means by the already-coded sub-pixels.

    Per mixture i: mu_g[i] += alpha[i]*r_n and mu_b[i] += beta[i]*r_n +
    gamma[i]*g_n.  Red means and all other fields are untouched.
    """
    out = p.copy()
    rn = np.float32(r_n)
    gn = np.float32(g_n)
    out.means[1] = p.means[1] + p.alpha * rn
    out.means[2] = p.means[2] + p.beta * rn + p.gamma * gn
    return out


def _cdf(z: np.ndarray, dist: Distribution) -> np.ndarray:
    if dist == Distribution.GAUSSIAN:
        return ndtr(z)
    return expit(z)


def bin_probability(x: int, mu: float, s: float, dist: Distribution) -> float:
    """Probability of intensity x under a single mixture component.

    F((x_n + d - mu)/s) - F((x_n - d - mu)/s) with d = 1/255; the lower edge
    is -infinity at x = 0 and the upper +infinity at x = 255.
    """
    if not 0 <= x <= 255:
        raise ValueError("intensity out of range")
    lo = 0.0 if x == 0 else float(_cdf(np.float64((kernels.EDGES[x] - mu) / s), dist))
    hi = 1.0 if x == 255 else float(_cdf(np.float64((kernels.EDGES[x + 1] - mu) / s), dist))
    return max(hi - lo, 0.0)


def pmf(p: PixelParams, channel: int, dist: Distribution = Distribution.GAUSSIAN) -> np.ndarray:
    """Mixture PMF over the 256 intensities of one channel (0=r, 1=g, 2=b).

    Assumes the channel's means were already updated via ``update_means``
    where applicable.  Sums to 1 within 1e-6.
    """
    out = np.zeros(256, np.float64)
    for i in range(p.weights.shape[1]):
        mu = float(p.means[channel, i])
        s = float(p.scales[channel, i])
        interior = _cdf((kernels.EDGES[1:256] - mu) / s, dist)
        edge_cdf = np.concatenate(([0.0], interior, [1.0]))
        out += float(p.weights[channel, i]) * np.maximum(np.diff(edge_cdf), 0.0)
    return out


def quantize_cdf(probabilities: np.ndarray) -> np.ndarray:
    """Deterministic 16-bit cumulative table with per-symbol mass >= 1.

    Scale to 65536-256, floor, add one count to every symbol, then hand the
    remaining deficit one unit at a time to the largest remainders (ties
    broken toward the lower symbol index).  Returns a strictly increasing
    (257,) int64 array with cdf[0] = 0 and cdf[256] = 65536.
    """
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if probabilities.shape != (256,):
        raise ValueError("expected a 256-entry pmf")
    if np.any(np.isnan(probabilities)):
        raise ValueError("NaN in pmf")
    v = probabilities * (kernels.CDF_FLOOR_TOTAL / probabilities.sum())
    floors = np.minimum(np.floor(v), kernels.CDF_FLOOR_TOTAL)
    masses = floors.astype(np.int64) + 1
    deficit = kernels.CDF_TOTAL - int(masses.sum())
    if deficit > 0:
        order = np.argsort(floors - v, kind="stable")
        masses[order[:deficit]] += 1
    cdf = np.zeros(257, np.int64)
    np.cumsum(masses, out=cdf[1:])
    return cdf
