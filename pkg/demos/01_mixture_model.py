"""How a raw network output turns into a coding distribution.

Walks one parameter vector through activation, the cross-channel mean
update, the discretized mixture PMF, and CDF quantization.
"""

import numpy as np

from lpic import activate, normalize_value, pmf, quantize_cdf, update_means
from lpic.network import Distribution, ModelConfig

cfg = ModelConfig(mixtures=3, filters=8, layers=3)
rng = np.random.default_rng(0)

print("A raw parameter vector has 12*K channels: pi-logits, means,")
print("log-scales (K per sub-pixel), then alpha/beta/gamma coefficients.\n")

raw = rng.normal(0, 1, cfg.param_channels).astype(np.float32)
params = activate(raw, cfg)
np.set_printoptions(precision=4, suppress=True)
print("mixture weights per channel (rows r,g,b):\n", params.weights)
print("means:\n", params.means)
print("scales:\n", params.scales)
print("alpha:", params.alpha, " beta:", params.beta, " gamma:", params.gamma)

print("\nSuppose the red sub-pixel decoded to 200.  The green means shift")
print("by alpha * r_n before green is coded:")
r_n = normalize_value(200)
updated = update_means(params, float(r_n), 0.0)
print("green means before:", params.means[1])
print("green means after: ", updated.means[1])

print("\nThe green PMF over intensities 0..255 (sums to", end=" ")
probabilities = pmf(updated, 1, Distribution.GAUSSIAN)
print(f"{probabilities.sum():.9f}):")
top = np.argsort(probabilities)[-5:][::-1]
for x in top:
    print(f"  p({x:3d}) = {probabilities[x]:.5f}")

cdf = quantize_cdf(probabilities)
print("\nQuantized to a 16-bit cumulative table: total", cdf[-1],
      "- every symbol is guaranteed mass >= 1 so any byte stays decodable",
      f"(smallest here: {int(np.diff(cdf).min())}).")
print("most likely symbol gets", int(np.diff(cdf)[top[0]]), "of 65536 slots")
