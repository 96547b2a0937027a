"""Model size and arithmetic cost across the hyper-parameter axes.

Reproduces the shape of the ablation tables: parameter counts react mildly
to the mixture count (output layer only), quadratically to the filter
count, and linearly to depth.  The MAC estimate counts one multiply-add per
weight application, masked taps only.
"""

from lpic import ModelConfig, count_parameters, estimate_macs

print(f"{'config':28s} {'params':>8s} {'MMac/px':>9s} {'GMac@512^2':>11s}")


def row(label, cfg):
    per_px = estimate_macs(cfg, 1, 1)
    total = estimate_macs(cfg, 512, 512)
    print(f"{label:28s} {count_parameters(cfg):8d} {per_px / 1e6:9.4f} "
          f"{total / 1e9:11.2f}")


row("reference K=3 C=128 L=5", ModelConfig())
print()
for k in (3, 5, 7):
    row(f"mixtures K={k}", ModelConfig(mixtures=k))
print()
for c in (64, 128, 192):
    row(f"filters C={c}", ModelConfig(filters=c))
print()
for l in (4, 5, 6):
    row(f"layers L={l}", ModelConfig(layers=l))

print("""
Notes: the masked layer stores only its 12 causal taps, so its cost is
12*3*C.  Bias adds and activations are not counted as MACs; profilers that
count the full 5x5 kernel or fold biases in will report ~10% higher.""")
