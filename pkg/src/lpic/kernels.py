"""Compiled evaluation kernels.

Everything that has to be bit-reproducible between the encoder and the
decoder lives here.  The contract is a single canonical accumulation order
for all network evaluation paths: for each output unit, tap contributions
are summed tap-index-major / input-channel-minor in 32-bit floats, the bias
is added last, and out-of-image context reads as 0.0.  The numba kernels
below implement exactly that order; ``reference_forward_full`` is the plain
numpy statement of the same order and the test suite pins the two against
each other bitwise.

The probability pipeline (mixture parameters -> quantized CDF) is also
compiled here so that the batched encoder path and the per-pixel decoder
path run the same machine code on the same inputs.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

# The TBB probe warns on older system TBBs; the omp/workqueue layers that
# numba falls back to are fine for these kernels.
warnings.filterwarnings("ignore", message=".*TBB.*", category=Warning)

from numba import njit, prange

LEAKY_SLOPE = np.float32(0.01)

# Lower bin edges in the normalized domain: EDGES[k] = (2k - 256)/255, so the
# bin of intensity x is [EDGES[x], EDGES[x+1]) and adjacent bins tile exactly.
EDGES = (2.0 * np.arange(257, dtype=np.float64) - 256.0) / 255.0

CDF_TOTAL = 65536
CDF_FLOOR_TOTAL = CDF_TOTAL - 256  # one guaranteed count per symbol

_SQRT1_2 = 0.7071067811865476


def causal_tap_offsets(kernel_half: int) -> np.ndarray:
    """Canonical causal tap order for a (2h+1)x(2h+1) masked kernel.

    Raster order over the kernel: the h full rows above the center, then the
    h positions left of the center.  Shape (T, 2) with T = (2h+1)*h + h.
    """
    h = kernel_half
    taps = []
    for di in range(-h, 0):
        for dj in range(-h, h + 1):
            taps.append((di, dj))
    for dj in range(-h, 0):
        taps.append((0, dj))
    return np.asarray(taps, dtype=np.int64)


# ---------------------------------------------------------------------------
# Network forward kernels (float32, canonical order)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _dense_stack(a, z, hidden_w, hidden_b, out_w, out_b, raw_out):
    """1x1 layer chain after the masked layer; writes M raw values."""
    C = a.shape[0]
    M = out_b.shape[0]
    n_hidden = hidden_w.shape[0]
    for l in range(n_hidden):
        for o in range(C):
            acc = np.float32(0.0)
            for i in range(C):
                acc = acc + hidden_w[l, o, i] * a[i]
            acc = acc + hidden_b[l, o]
            if acc >= np.float32(0.0):
                z[o] = acc
            else:
                z[o] = LEAKY_SLOPE * acc
        for o in range(C):
            a[o] = z[o]
    for m in range(M):
        acc = np.float32(0.0)
        for i in range(C):
            acc = acc + out_w[m, i] * a[i]
        raw_out[m] = acc + out_b[m]


@njit(cache=True, parallel=True)
def forward_full_f32(x, taps, masked_w, masked_b, hidden_w, hidden_b, out_w, out_b, out):
    """Whole-image forward pass; out has shape (H, W, M)."""
    H, W = x.shape[0], x.shape[1]
    T = taps.shape[0]
    C = masked_b.shape[0]
    for i in prange(H):
        a = np.empty(C, np.float32)
        z = np.empty(C, np.float32)
        for j in range(W):
            for f in range(C):
                acc = np.float32(0.0)
                for t in range(T):
                    ii = i + taps[t, 0]
                    jj = j + taps[t, 1]
                    if 0 <= ii and ii < H and 0 <= jj and jj < W:
                        for c in range(3):
                            acc = acc + masked_w[t, c, f] * x[ii, jj, c]
                    else:
                        for c in range(3):
                            acc = acc + masked_w[t, c, f] * np.float32(0.0)
                acc = acc + masked_b[f]
                if acc >= np.float32(0.0):
                    a[f] = acc
                else:
                    a[f] = LEAKY_SLOPE * acc
            _dense_stack(a, z, hidden_w, hidden_b, out_w, out_b, out[i, j])


@njit(cache=True, parallel=True)
def forward_taps_f32(tap_x, masked_w, masked_b, hidden_w, hidden_b, out_w, out_b, out):
    """Forward pass from pre-gathered tap values, shape (N, T, 3) -> (N, M)."""
    N = tap_x.shape[0]
    T = tap_x.shape[1]
    C = masked_b.shape[0]
    for n in prange(N):
        a = np.empty(C, np.float32)
        z = np.empty(C, np.float32)
        for f in range(C):
            acc = np.float32(0.0)
            for t in range(T):
                for c in range(3):
                    acc = acc + masked_w[t, c, f] * tap_x[n, t, c]
            acc = acc + masked_b[f]
            if acc >= np.float32(0.0):
                a[f] = acc
            else:
                a[f] = LEAKY_SLOPE * acc
        _dense_stack(a, z, hidden_w, hidden_b, out_w, out_b, out[n])


@njit(cache=True, parallel=True)
def forward_fc_f32(ctx, masked_w, masked_b, hidden_w, hidden_b, out_w, out_b, out):
    """Fully-connected view: ctx rows are causal taps flattened (tap-major,
    channel-minor), shape (N, 3T) -> (N, M)."""
    N = ctx.shape[0]
    T = masked_w.shape[0]
    C = masked_b.shape[0]
    for n in prange(N):
        a = np.empty(C, np.float32)
        z = np.empty(C, np.float32)
        for f in range(C):
            acc = np.float32(0.0)
            for t in range(T):
                for c in range(3):
                    acc = acc + masked_w[t, c, f] * ctx[n, t * 3 + c]
            acc = acc + masked_b[f]
            if acc >= np.float32(0.0):
                a[f] = acc
            else:
                a[f] = LEAKY_SLOPE * acc
        _dense_stack(a, z, hidden_w, hidden_b, out_w, out_b, out[n])


def reference_forward_full(x, taps, masked_w, masked_b, hidden_w, hidden_b, out_w, out_b):
    """Numpy statement of the canonical accumulation order.

    Vectorized across pixels only; the loops over taps, input channels and
    dense input indices run in Python so that every per-element float32
    operation happens in exactly the order the compiled kernels use.
    """
    H, W, _ = x.shape
    C = masked_b.shape[0]
    acc = np.zeros((H, W, C), np.float32)
    for t in range(taps.shape[0]):
        di, dj = int(taps[t, 0]), int(taps[t, 1])
        shifted = np.zeros((H, W, 3), np.float32)
        i0, i1 = max(0, -di), min(H, H - di)
        j0, j1 = max(0, -dj), min(W, W - dj)
        if i0 < i1 and j0 < j1:
            shifted[i0:i1, j0:j1] = x[i0 + di:i1 + di, j0 + dj:j1 + dj]
        for c in range(3):
            acc += shifted[:, :, c:c + 1] * masked_w[t, c, :]
    acc += masked_b
    a = np.where(acc >= 0, acc, LEAKY_SLOPE * acc)
    for l in range(hidden_w.shape[0]):
        acc = np.zeros((H, W, C), np.float32)
        for i in range(C):
            acc += a[:, :, i:i + 1] * hidden_w[l, :, i]
        acc += hidden_b[l]
        a = np.where(acc >= 0, acc, LEAKY_SLOPE * acc)
    M = out_b.shape[0]
    raw = np.zeros((H, W, M), np.float32)
    for i in range(C):
        raw += a[:, :, i:i + 1] * out_w[:, i]
    raw += out_b
    return raw


# ---------------------------------------------------------------------------
# Mixture parameters -> quantized CDF pipeline (float64, shared by both ends)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _cdf_value(z, dist):
    if dist == 0:
        return 0.5 * math.erfc(-z * _SQRT1_2)
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def _channel_mixture(raw_row, K, channel, rn, gn, pi, mu, s):
    """Decode one channel's mixture parameters from a raw M-vector.

    Channel layout of the raw vector: pi-logits r|g|b, means r|g|b,
    log-scales r|g|b, then alpha|beta|gamma pre-activations, K each.
    Cross-channel mean updates are folded in here: the green means shift by
    tanh(alpha)*rn and the blue means by tanh(beta)*rn + tanh(gamma)*gn.
    """
    base = channel * K
    m = -1.0e300
    for i in range(K):
        v = float(raw_row[base + i])
        if v > m:
            m = v
    tot = 0.0
    for i in range(K):
        e = math.exp(float(raw_row[base + i]) - m)
        pi[i] = e
        tot += e
    for i in range(K):
        pi[i] = pi[i] / tot
    for i in range(K):
        v = float(raw_row[3 * K + base + i])
        if channel == 1:
            v = v + math.tanh(float(raw_row[9 * K + i])) * rn
        elif channel == 2:
            v = v + math.tanh(float(raw_row[10 * K + i])) * rn \
                  + math.tanh(float(raw_row[11 * K + i])) * gn
        mu[i] = v
        rho = float(raw_row[6 * K + base + i])
        if rho < -7.0:
            rho = -7.0
        elif rho > 7.0:
            rho = 7.0
        s[i] = math.exp(rho)


@njit(cache=True)
def _quantized_cdf(pi, mu, s, K, dist, edges, cdf, pmf, neg_rem):
    """Discretized mixture PMF -> strictly increasing 257-entry table.

    Scale to 65536-256, floor, give every symbol one guaranteed count, then
    hand the remaining deficit to the largest remainders (ties to the lower
    symbol index).
    """
    for k in range(256):
        pmf[k] = 0.0
    for i in range(K):
        inv = 1.0 / s[i]
        prev = 0.0
        for k in range(256):
            if k == 255:
                cur = 1.0
            else:
                cur = _cdf_value((edges[k + 1] - mu[i]) * inv, dist)
            d = cur - prev
            if d > 0.0:
                pmf[k] += pi[i] * d
            prev = cur
    total = 0.0
    for k in range(256):
        total += pmf[k]
    scale = float(CDF_FLOOR_TOTAL) / total
    acc = 0
    for k in range(256):
        v = pmf[k] * scale
        f = math.floor(v)
        if f > CDF_FLOOR_TOTAL:
            f = float(CDF_FLOOR_TOTAL)
        m = np.int64(f) + 1
        cdf[k + 1] = m
        neg_rem[k] = f - v
        acc += m
    deficit = CDF_TOTAL - acc
    if deficit > 0:
        order = np.argsort(neg_rem, kind='mergesort')
        for d in range(deficit):
            cdf[order[d] + 1] += 1
    cdf[0] = 0
    for k in range(256):
        cdf[k + 1] += cdf[k]


@njit(cache=True, parallel=True)
def channel_cdfs(raw, K, dist, channel, rn, gn, edges, out):
    """Quantized CDF per pixel for one sub-pixel channel.

    raw: (N, M) float32; rn, gn: (N,) float32 normalized values of the
    already-coded sub-pixels (ignored for the red channel); out: (N, 257)
    int64.  Per-pixel work is independent, so batching the whole image at
    encode time and single rows at decode time produces identical tables.
    """
    N = raw.shape[0]
    for n in prange(N):
        pi = np.empty(K, np.float64)
        mu = np.empty(K, np.float64)
        s = np.empty(K, np.float64)
        pmf = np.empty(256, np.float64)
        neg_rem = np.empty(256, np.float64)
        _channel_mixture(raw[n], K, channel, float(rn[n]), float(gn[n]), pi, mu, s)
        _quantized_cdf(pi, mu, s, K, dist, edges, out[n], pmf, neg_rem)


@njit(cache=True, parallel=True)
def true_symbol_probs(raw, syms, rn, gn, K, dist, edges, out):
    """Unquantized mixture bin probability of each coded symbol.

    syms: (N, 3) int64 intensities; out: (N, 3) float64.  Used for the
    theoretical rate; evaluates the same CDF math as ``channel_cdfs`` but
    only at the realized bins.
    """
    N = raw.shape[0]
    for n in prange(N):
        pi = np.empty(K, np.float64)
        mu = np.empty(K, np.float64)
        s = np.empty(K, np.float64)
        for ch in range(3):
            _channel_mixture(raw[n], K, ch, float(rn[n]), float(gn[n]), pi, mu, s)
            x = syms[n, ch]
            p = 0.0
            for i in range(K):
                inv = 1.0 / s[i]
                if x == 0:
                    lo = 0.0
                else:
                    lo = _cdf_value((edges[x] - mu[i]) * inv, dist)
                if x == 255:
                    hi = 1.0
                else:
                    hi = _cdf_value((edges[x + 1] - mu[i]) * inv, dist)
                d = hi - lo
                if d > 0.0:
                    p += pi[i] * d
            out[n, ch] = p
