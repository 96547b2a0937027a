"""Standing invariant suite behind the ``verify`` CLI subcommand.

Each check returns (name, passed, detail); they are weight-agnostic and are
also exercised by the test suite.  The checks cover: bit-equality of the
three evaluation paths, causality of the masked pass, PMF/CDF properties,
schedule validity, lossless round trips in every mode, and encoder/decoder
parameter bit-equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import codec, mixture, network, schedules
from .network import Distribution, ModelConfig, Weights


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def check_path_equivalence(w: Weights, cfg: ModelConfig, images: int = 3,
                           size: int = 8, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    h = cfg.kernel_half
    taps = network.causal_taps(h)
    for _ in range(images):
        img = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
        xn = network.normalize(img)
        full = network.forward_full(xn, w, cfg)
        pad = np.zeros((size + 2 * h, size + 2 * h, 3), np.float32)
        pad[h:h + size, h:h + size] = xn
        for i in range(size):
            for j in range(size):
                patch = pad[i:i + 2 * h + 1, j:j + 2 * h + 1]
                pv = network.forward_patch(patch, w, cfg)
                if not np.array_equal(pv.view(np.uint32), full[i, j].view(np.uint32)):
                    return CheckResult("path_equivalence", False,
                                       f"patch differs from full at ({i},{j})")
                ctx = patch[taps[:, 0] + h, taps[:, 1] + h, :].reshape(-1)
                fv = network.forward_fc(ctx, w, cfg)
                if not np.array_equal(fv.view(np.uint32), full[i, j].view(np.uint32)):
                    return CheckResult("path_equivalence", False,
                                       f"fc differs from full at ({i},{j})")
    return CheckResult("path_equivalence", True,
                       f"{images} images, full/patch/fc bit-identical")


def check_causality(w: Weights, cfg: ModelConfig, trials: int = 50,
                    size: int = 12, seed: int = 0) -> CheckResult:
    """Perturb one pixel; nothing at or raster-before it may change."""
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        img = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
        base = network.forward_full(network.normalize(img), w, cfg)
        i = int(rng.integers(0, size))
        j = int(rng.integers(0, size))
        c = int(rng.integers(0, 3))
        poked = img.copy()
        poked[i, j, c] ^= 0xFF
        after = network.forward_full(network.normalize(poked), w, cfg)
        changed = np.any(base != after, axis=2)
        flat = changed.reshape(-1)
        limit = i * size + j  # raster index of the perturbed pixel
        if np.any(flat[:limit + 1]):
            where = int(np.argmax(flat[:limit + 1]))
            return CheckResult(
                "causality", False,
                f"perturbing ({i},{j}) changed output at raster index {where}")
    return CheckResult("causality", True, f"{trials} single-pixel probes")


def check_cdf_properties(draws: int = 1000, seed: int = 0,
                         mixtures: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    cfg_g = ModelConfig(mixtures=mixtures, filters=8, layers=3)
    cfg_l = ModelConfig(mixtures=mixtures, filters=8, layers=3,
                        distribution=Distribution.LOGISTIC)
    for k in range(draws):
        raw = rng.normal(0, 2, cfg_g.param_channels).astype(np.float32)
        params = mixture.activate(raw, cfg_g)
        for cfg in (cfg_g, cfg_l):
            for ch in range(3):
                p = mixture.pmf(params, ch, cfg.distribution)
                if abs(p.sum() - 1.0) > 1e-6:
                    return CheckResult("cdf_properties", False,
                                       f"pmf sum {p.sum()} off at draw {k}")
                cdf = mixture.quantize_cdf(p)
                masses = np.diff(cdf)
                if cdf[0] != 0 or cdf[-1] != 65536 or masses.min() < 1:
                    return CheckResult("cdf_properties", False,
                                       f"bad quantized cdf at draw {k}")
    return CheckResult("cdf_properties", True,
                       f"{draws} random parameter draws, both distributions")


def check_schedules(max_dim: int = 16, kernel_half: int = 2) -> CheckResult:
    builders = [schedules.sequential,
                lambda h, w: schedules.wavefront(h, w, kernel_half)]
    if kernel_half == 2:
        builders.append(lambda h, w: schedules.diagonal(h, w, kernel_half))
    for H in range(1, max_dim + 1):
        for W in range(1, max_dim + 1):
            for build in builders:
                s = build(H, W)
                bad = schedules.validate(s, kernel_half)
                if bad:
                    return CheckResult(
                        "schedules", False,
                        f"{s.mode.name} {H}x{W}: {bad[0]}")
    return CheckResult("schedules", True,
                       f"all modes valid for sizes up to {max_dim}x{max_dim}")


def check_roundtrip(w: Weights, cfg: ModelConfig, sizes=((1, 1), (5, 3), (8, 8)),
                    seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    for (H, W) in sizes:
        img = rng.integers(0, 256, (H, W, 3), dtype=np.uint8)
        for mode in schedules.ScheduleMode:
            c = codec.encode(img, w, cfg, mode)
            out = codec.decode(c, w, cfg)
            if not np.array_equal(out, img):
                return CheckResult("roundtrip", False,
                                   f"{mode.name} {H}x{W} not lossless")
    return CheckResult("roundtrip", True,
                       f"{len(sizes)} sizes x 3 modes lossless")


def check_param_bit_equality(w: Weights, cfg: ModelConfig, size: int = 8,
                             seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    for mode in schedules.ScheduleMode:
        enc_trace = codec.CodecTrace()
        c = codec.encode(img, w, cfg, mode, trace=enc_trace)
        dec_trace = codec.CodecTrace()
        codec.decode(c, w, cfg, trace=dec_trace)
        if enc_trace.order != dec_trace.order:
            return CheckResult("param_bit_equality", False,
                               f"{mode.name}: coding orders differ")
        if not np.array_equal(enc_trace.raw.view(np.uint32),
                              dec_trace.raw.view(np.uint32)):
            return CheckResult("param_bit_equality", False,
                               f"{mode.name}: raw parameter planes differ")
        if not np.array_equal(enc_trace.cdfs, dec_trace.cdfs):
            return CheckResult("param_bit_equality", False,
                               f"{mode.name}: CDF tables differ")
    return CheckResult("param_bit_equality", True,
                       "raw params and CDFs bit-identical across all modes")


def run_all(w: Weights | None = None, cfg: ModelConfig | None = None,
            size: int = 8, seed: int = 0) -> list[CheckResult]:
    """Run the suite; fresh random weights are used when none are given
    (the invariants are weight-agnostic)."""
    if cfg is None:
        cfg = ModelConfig(mixtures=3, filters=16, layers=4)
    if w is None:
        w = network.glorot_weights(cfg, np.random.default_rng(seed))
    sizes = ((1, 1), (size, max(1, size // 2)), (size, size))
    return [
        check_path_equivalence(w, cfg, images=2, size=max(4, size // 2), seed=seed),
        check_causality(w, cfg, trials=25, size=max(6, size), seed=seed),
        check_cdf_properties(draws=300, seed=seed, mixtures=cfg.mixtures),
        check_schedules(max_dim=12, kernel_half=cfg.kernel_half),
        check_roundtrip(w, cfg, sizes=sizes, seed=seed),
        check_param_bit_equality(w, cfg, size=size, seed=seed),
    ]
