"""Synthetic image sources with known statistics.

The causal-mean source generates each channel value as the average of its
already-generated west/north-west/north/north-east neighbors plus Gaussian
noise, rounded and clipped to 0..255.  Because the generator's conditional
distribution is known in closed form, the exact per-sub-pixel conditional
entropy of a generated corpus can be computed and used as a target for
trained models.

``natural_like`` produces smooth textured images standing in for natural
crops in tests and benchmarks, and ``pathological_images`` covers the
degenerate corners (flat extremes, checkerboard, lone extreme pixels).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.special import ndtr

CAUSAL_NEIGHBORS = ((0, -1), (-1, -1), (-1, 0), (-1, 1))
DEFAULT_SIGMA = 8.0
_BASE_LEVEL = 127.5  # conditioning value when no neighbor is available


@njit(cache=True)
def _fill_causal_mean(noise, out):
    H, W, _ = out.shape
    for i in range(H):
        for j in range(W):
            for c in range(3):
                total = 0.0
                count = 0
                if j - 1 >= 0:
                    total += out[i, j - 1, c]
                    count += 1
                if i - 1 >= 0:
                    if j - 1 >= 0:
                        total += out[i - 1, j - 1, c]
                        count += 1
                    total += out[i - 1, j, c]
                    count += 1
                    if j + 1 < W:
                        total += out[i - 1, j + 1, c]
                        count += 1
                m = total / count if count > 0 else 127.5
                v = math.floor(m + noise[i, j, c] + 0.5)
                if v < 0:
                    v = 0
                elif v > 255:
                    v = 255
                out[i, j, c] = v
    return out


def causal_mean_image(rng: np.random.Generator, height: int, width: int,
                      sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """One sample of the causal-mean source, HxWx3 uint8."""
    noise = rng.standard_normal((height, width, 3)) * sigma
    out = np.zeros((height, width, 3), np.float64)
    _fill_causal_mean(noise, out)
    return out.astype(np.uint8)


def causal_mean_corpus(rng: np.random.Generator, count: int, height: int,
                       width: int, sigma: float = DEFAULT_SIGMA) -> list:
    return [causal_mean_image(rng, height, width, sigma) for _ in range(count)]


def _conditioning_means(image: np.ndarray) -> np.ndarray:
    """Recompute the mean each pixel was generated around, (H, W, 3)."""
    x = image.astype(np.float64)
    H, W, _ = x.shape
    total = np.zeros_like(x)
    count = np.zeros((H, W, 1))
    for di, dj in CAUSAL_NEIGHBORS:
        i0, i1 = max(0, -di), min(H, H - di)
        j0, j1 = max(0, -dj), min(W, W - dj)
        total[i0:i1, j0:j1] += x[i0 + di:i1 + di, j0 + dj:j1 + dj]
        count[i0:i1, j0:j1] += 1
    means = np.full_like(x, _BASE_LEVEL)
    np.divide(total, count, out=means, where=count > 0)
    return means


def conditional_entropy_bits(images, sigma: float = DEFAULT_SIGMA) -> float:
    """Exact -log2 P(value | context) of a corpus under the true generator,
    averaged per sub-pixel.  This is the rate an ideal model would pay."""
    total_bits = 0.0
    total_count = 0
    for image in images:
        m = _conditioning_means(image)
        v = image.astype(np.float64)
        upper = np.where(v >= 255, np.inf, (v + 0.5 - m) / sigma)
        lower = np.where(v <= 0, -np.inf, (v - 0.5 - m) / sigma)
        p = ndtr(upper) - ndtr(lower)
        total_bits += float(-np.log2(p).sum())
        total_count += p.size
    return total_bits / total_count


def natural_like(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Smooth blobs, a gradient and an occasional hard edge; stands in for a
    natural crop."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.zeros((height, width, 3))
    base = rng.uniform(60, 200, 3)
    grad = rng.uniform(-0.5, 0.5, (2, 3))
    img += base + yy[..., None] * grad[0] + xx[..., None] * grad[1]
    for _ in range(4):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        radius = rng.uniform(2, max(height, width) / 2)
        amp = rng.uniform(-60, 60, 3)
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * radius ** 2))
        img += blob[..., None] * amp
    if rng.random() < 0.5 and width > 2:
        edge = int(rng.integers(1, width))
        img[:, edge:] += rng.uniform(-40, 40, 3)
    img += rng.standard_normal(img.shape) * 2.0
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def pathological_images(size: int = 16) -> dict:
    """Degenerate inputs every codec must survive."""
    black = np.zeros((size, size, 3), np.uint8)
    white = np.full((size, size, 3), 255, np.uint8)
    checker = np.zeros((size, size, 3), np.uint8)
    checker[(np.add.outer(np.arange(size), np.arange(size)) % 2) == 0] = 255
    lone_white = black.copy()
    lone_white[size // 2, size // 2] = 255
    lone_black = white.copy()
    lone_black[size // 2, size // 2] = 0
    return {
        "all_black": black,
        "all_white": white,
        "checkerboard": checker,
        "single_white_pixel": lone_white,
        "single_black_pixel": lone_black,
    }
