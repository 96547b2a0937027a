"""Training end to end on a synthetic source with known entropy.

The source generates each channel value as the mean of its already-written
causal neighbors plus sigma=8 Gaussian noise, so the exact conditional
entropy of a generated corpus is computable.  A small model trained for a
minute should close most of the gap between the untrained rate (~8 bpsp)
and that entropy (~5 bpsp).

Run with --full to train the reference 128-filter model instead of the
small demo model (several minutes).
"""

import sys
import time

import numpy as np

from lpic import ModelConfig, bpsp, encode
from lpic.synthetic import causal_mean_corpus, conditional_entropy_bits
from lpic.training import TrainConfig, train

full = "--full" in sys.argv
cfg = ModelConfig() if full else ModelConfig(mixtures=2, filters=24, layers=4)
rng = np.random.default_rng(0)

corpus = causal_mean_corpus(rng, 48, 40, 40)
held_out = causal_mean_corpus(np.random.default_rng(1), 4, 40, 40)
entropy = conditional_entropy_bits(held_out)
print(f"synthetic source conditional entropy: {entropy:.4f} bits/sub-pixel")
print(f"model: {cfg.filters} filters, {cfg.layers} layers, "
      f"K={cfg.mixtures}\n")

tc = TrainConfig(batch_size=16, crop=24, lr=1e-3,
                 epochs=120 if full else 60, seed=0)
t0 = time.time()
w, curve = train(corpus, tc, cfg,
                 on_epoch=lambda st: st.epoch % 10 == 0 and print(
                     f"  epoch {st.epoch:3d}  bpsp-estimate {st.bpsp_estimate:.4f}"
                     f"  lr {st.lr:.2e}"))
print(f"trained in {time.time() - t0:.0f}s")

rates = [bpsp(encode(im, w, cfg, "wave")) for im in held_out]
print(f"\nencoded held-out images: bpsp {np.mean(rates):.4f} "
      f"(entropy {entropy:.4f}, gap {np.mean(rates) - entropy:+.4f})")
