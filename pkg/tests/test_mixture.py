import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr
from scipy.stats import logistic, norm

from lpic import kernels, mixture
from lpic.mixture import (PixelParams, activate, bin_probability, pmf,
                          quantize_cdf, update_means)
from lpic.network import Distribution, ModelConfig

CFG = ModelConfig(mixtures=3, filters=8, layers=3)


def random_params(rng, scale=2.0):
    raw = rng.normal(0, scale, CFG.param_channels).astype(np.float32)
    return activate(raw, CFG)


def test_activate_all_zero():
    p = activate(np.zeros(CFG.param_channels, np.float32), CFG)
    assert np.allclose(p.weights, 1.0 / 3.0)
    assert np.all(p.means == 0.0)
    assert np.all(p.scales == 1.0)
    assert np.all(p.alpha == 0.0) and np.all(p.beta == 0.0) and np.all(p.gamma == 0.0)


def test_activate_scale_clamp():
    raw = np.zeros(CFG.param_channels, np.float32)
    raw[6 * 3:9 * 3] = -100.0
    p = activate(raw, CFG)
    assert np.allclose(p.scales, np.exp(-7.0), rtol=1e-6)
    raw[6 * 3:9 * 3] = 100.0
    p = activate(raw, CFG)
    assert np.allclose(p.scales, np.exp(7.0), rtol=1e-6)


def test_activate_softmax_symmetry():
    raw = np.zeros(CFG.param_channels, np.float32)
    raw[:9] = 1.0
    p = activate(raw, CFG)
    assert np.allclose(p.weights, 1.0 / 3.0)


def test_activate_rejects_nonfinite():
    raw = np.zeros(CFG.param_channels, np.float32)
    raw[0] = np.nan
    with pytest.raises(ValueError):
        activate(raw, CFG)


def test_update_means_identity_with_zero_coefficients():
    rng = np.random.default_rng(0)
    p = random_params(rng)
    p.alpha[:] = 0
    p.beta[:] = 0
    p.gamma[:] = 0
    q = update_means(p, 0.5, -0.25)
    assert np.array_equal(q.means, p.means)
    assert np.array_equal(q.weights, p.weights)


def test_update_means_unit_alpha_shift():
    rng = np.random.default_rng(1)
    p = random_params(rng)
    p.alpha[:] = 1.0
    q = update_means(p, 0.5, 0.0)
    assert np.allclose(q.means[1], p.means[1] + 0.5, atol=1e-7)
    assert np.array_equal(q.means[0], p.means[0])  # red never updated


def test_update_means_linearity_restores():
    rng = np.random.default_rng(2)
    p = random_params(rng)
    r_n, g_n = 0.625, -0.375
    q = update_means(update_means(p, r_n, g_n), -r_n, -g_n)
    assert np.allclose(q.means, p.means, rtol=1e-6, atol=1e-6)


def test_update_means_only_touches_green_blue():
    rng = np.random.default_rng(3)
    p = random_params(rng)
    q = update_means(p, 0.3, 0.7)
    assert np.array_equal(q.means[0], p.means[0])
    assert np.array_equal(q.scales, p.scales)
    assert np.array_equal(q.weights, p.weights)


@pytest.mark.parametrize("dist", [Distribution.GAUSSIAN, Distribution.LOGISTIC])
def test_bin_probability_sums_to_one(dist):
    for mu, s in [(0.0, 1.0), (0.3, 0.01), (-2.0, 0.5), (100.0, 1.0)]:
        total = sum(bin_probability(x, mu, s, dist) for x in range(256))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_bin_probability_center_symmetry():
    # mu exactly on a bin center: probability is 2*Phi(delta/s) - 1
    x = 77
    mu = float(2 * x - 255) / 255.0
    for s in (1.0, 0.05, 0.004):
        expected = 2 * ndtr((1.0 / 255.0) / s) - 1
        assert bin_probability(x, mu, s, Distribution.GAUSSIAN) == \
            pytest.approx(float(expected), rel=1e-12)


def test_bin_probability_far_mean_edge_bin():
    assert bin_probability(0, -100.0, 1.0, Distribution.GAUSSIAN) == \
        pytest.approx(1.0, abs=1e-12)
    assert bin_probability(255, 100.0, 1.0, Distribution.GAUSSIAN) == \
        pytest.approx(1.0, abs=1e-12)
    assert bin_probability(128, -100.0, 1.0, Distribution.GAUSSIAN) == 0.0


def _pmf_quadrature_oracle(p: PixelParams, channel, dist, points=10_000):
    """Numerical integration of the mixture density over each interior bin;
    edge bins take the remaining tail mass."""
    out = np.zeros(256)
    for x in range(256):
        lo = kernels.EDGES[x]
        hi = kernels.EDGES[x + 1]
        grid = np.linspace(lo, hi, points)
        dens = np.zeros_like(grid)
        for i in range(p.weights.shape[1]):
            mu = float(p.means[channel, i])
            s = float(p.scales[channel, i])
            if dist == Distribution.GAUSSIAN:
                dens += float(p.weights[channel, i]) * norm.pdf(grid, mu, s)
            else:
                dens += float(p.weights[channel, i]) * logistic.pdf(grid, mu, s)
        out[x] = np.trapezoid(dens, grid)
    # tails fold into the edge bins
    for i in range(p.weights.shape[1]):
        mu = float(p.means[channel, i])
        s = float(p.scales[channel, i])
        F = norm.cdf if dist == Distribution.GAUSSIAN else logistic.cdf
        out[0] += float(p.weights[channel, i]) * F(kernels.EDGES[0], mu, s)
        out[255] += float(p.weights[channel, i]) * (1.0 - F(kernels.EDGES[256], mu, s))
    return out


@pytest.mark.parametrize("dist", [Distribution.GAUSSIAN, Distribution.LOGISTIC])
def test_pmf_matches_quadrature_oracle(dist):
    rng = np.random.default_rng(4)
    for _ in range(2):
        p = random_params(rng, scale=1.0)
        ch = int(rng.integers(0, 3))
        ours = pmf(p, ch, dist)
        oracle = _pmf_quadrature_oracle(p, ch, dist)
        assert np.max(np.abs(ours - oracle)) < 1e-6
        assert ours.sum() == pytest.approx(1.0, abs=1e-6)


def test_pmf_mixture_degeneracy():
    rng = np.random.default_rng(5)
    p = random_params(rng)
    # two identical components at weight 1/2 equal either component alone
    p.means[0, :] = p.means[0, 0]
    p.scales[0, :] = p.scales[0, 0]
    p.weights[0, :] = 0.0
    p.weights[0, 0] = 0.5
    p.weights[0, 1] = 0.5
    mixture_pmf = pmf(p, 0)
    single = np.array([bin_probability(x, float(p.means[0, 0]),
                                       float(p.scales[0, 0]),
                                       Distribution.GAUSSIAN)
                       for x in range(256)])
    assert np.allclose(mixture_pmf, single, atol=1e-12)


def test_pmf_k1_reduces_to_bin_probability():
    cfg1 = ModelConfig(mixtures=1, filters=8, layers=3)
    raw = np.random.default_rng(6).normal(0, 1, cfg1.param_channels).astype(np.float32)
    p = activate(raw, cfg1)
    ours = pmf(p, 2)
    single = np.array([bin_probability(x, float(p.means[2, 0]),
                                       float(p.scales[2, 0]),
                                       Distribution.GAUSSIAN)
                       for x in range(256)])
    assert np.allclose(ours, single, atol=1e-15)


def test_quantize_uniform():
    cdf = quantize_cdf(np.full(256, 1.0 / 256.0))
    assert np.all(np.diff(cdf) == 256)


def test_quantize_spike():
    probs = np.zeros(256)
    probs[0] = 1.0
    cdf = quantize_cdf(probs)
    masses = np.diff(cdf)
    assert masses[0] == 65536 - 255
    assert np.all(masses[1:] == 1)


def test_quantize_rejects_nan():
    probs = np.full(256, 1.0 / 256.0)
    probs[3] = np.nan
    with pytest.raises(ValueError, match="NaN"):
        quantize_cdf(probs)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=256, max_size=256),
       st.integers(min_value=0, max_value=255))
def test_quantize_properties(values, spike):
    probs = np.asarray(values)
    probs[spike] += 1.0  # ensure a nonzero total, cover spiked shapes
    probs /= probs.sum()
    cdf = quantize_cdf(probs)
    masses = np.diff(cdf)
    assert cdf[0] == 0
    assert cdf[256] == 65536
    assert masses.min() >= 1
    assert np.all(np.diff(cdf) > 0)


def test_compiled_cdf_pipeline_agrees_with_module_ops():
    """The codec's fused kernel and the module ops implement the same math.

    The two paths use different library CDFs (ULP-level differences), so the
    pmfs are compared with a tight tolerance and the quantized tables at a
    fixed, non-knife-edge parameter set exactly.
    """
    rng = np.random.default_rng(8)
    for _ in range(20):
        pi_ = rng.dirichlet(np.ones(3))
        mu_ = rng.normal(0, 0.5, 3)
        s_ = np.exp(rng.uniform(-3, 1, 3))
        out = np.empty(257, np.int64)
        pmf_buf = np.empty(256, np.float64)
        rem_buf = np.empty(256, np.float64)
        kernels._quantized_cdf(pi_, mu_, s_, 3, 0, kernels.EDGES, out,
                               pmf_buf, rem_buf)
        masses = np.diff(out)
        assert out[0] == 0 and out[256] == 65536 and masses.min() >= 1
        p = PixelParams(np.tile(pi_, (3, 1)).astype(np.float32),
                        np.tile(mu_, (3, 1)).astype(np.float32),
                        np.tile(s_, (3, 1)).astype(np.float32),
                        np.zeros(3, np.float32), np.zeros(3, np.float32),
                        np.zeros(3, np.float32))
        module_pmf = pmf(p, 0)
        # float32 parameter storage in the module path dominates the gap
        assert np.max(np.abs(module_pmf - pmf_buf)) < 1e-6
