"""Command-line surface: encode, decode, train, bench, ablate, verify.

The environment variable LPIC_THREADS caps the compiled kernels' worker
pool.  Exit code is 0 only when the requested operation fully succeeded.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
import time

import numpy as np

from . import codec, images, network, schedules, training, verification
from .errors import LpicError
from .network import Distribution, ModelConfig


def _apply_thread_cap() -> None:
    cap = os.environ.get("LPIC_THREADS")
    if not cap:
        return
    import numba

    n = max(1, int(cap))
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mixtures", type=int, default=3, help="mixture components K")
    p.add_argument("--filters", type=int, default=128, help="conv filters C")
    p.add_argument("--layers", type=int, default=5, help="total conv layers L")
    p.add_argument("--kernel-half", type=int, default=2,
                   help="masked kernel is (2h+1)x(2h+1)")
    p.add_argument("--distribution", choices=("gaussian", "logistic"),
                   default="gaussian")


def _model_config(args) -> ModelConfig:
    dist = Distribution.LOGISTIC if args.distribution == "logistic" \
        else Distribution.GAUSSIAN
    return ModelConfig(mixtures=args.mixtures, filters=args.filters,
                       layers=args.layers, kernel_half=args.kernel_half,
                       distribution=dist)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpic",
        description="Learned pixel-by-pixel lossless image codec.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="compress an image")
    p.add_argument("-i", "--input", required=True, help="PPM or PNG image")
    p.add_argument("-w", "--weights", required=True, help="weight file")
    p.add_argument("-m", "--mode", default="seq",
                   choices=("seq", "wave", "diag", "sequential", "wavefront",
                            "diagonal"))
    p.add_argument("-o", "--output", required=True, help="container path")

    p = sub.add_parser("decode", help="decompress a container")
    p.add_argument("-i", "--input", required=True, help="container path")
    p.add_argument("-w", "--weights", required=True, help="weight file")
    p.add_argument("-o", "--output", required=True, help="image path")
    p.add_argument("--force", action="store_true",
                   help="allow overwriting an existing output file")

    p = sub.add_parser("train", help="train weights on an image directory")
    p.add_argument("-d", "--data", required=True, help="directory of images")
    p.add_argument("-o", "--output", required=True, help="weight file to write")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--crop", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--curve", help="loss-curve CSV path (default: <output>.curve.csv)")
    _add_model_args(p)

    p = sub.add_parser("bench", help="compression/timing report over a corpus")
    p.add_argument("-d", "--data", required=True)
    p.add_argument("-w", "--weights", required=True)
    p.add_argument("-m", "--mode", default="seq",
                   choices=("seq", "wave", "diag", "sequential", "wavefront",
                            "diagonal"))
    p.add_argument("--csv", help="write the per-image report here")

    p = sub.add_parser("ablate", help="bpsp/parameter sweep over a config grid")
    p.add_argument("-d", "--data", required=True)
    p.add_argument("--grid", required=True,
                   help="e.g. 'K=3,5;C=64,128;L=5;dist=gaussian,logistic'")
    p.add_argument("--weights-dir",
                   help="load K{K}_C{C}_L{L}_{dist}.lpwt per grid point "
                        "instead of training in place")
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--crop", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel-half", type=int, default=2)
    p.add_argument("--csv", help="write the grid report here")

    p = sub.add_parser("verify", help="run the standing invariant suite")
    p.add_argument("-w", "--weights", help="weight file (fresh random if omitted)")
    p.add_argument("--size", type=int, default=8, help="round-trip image size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="write machine-readable results here")

    return parser


def _cmd_encode(args) -> int:
    w, cfg = network.load_weights(args.weights)
    image = images.load_image(args.input)
    t0 = time.perf_counter()
    container = codec.encode(image, w, cfg, args.mode)
    dt = time.perf_counter() - t0
    with open(args.output, "wb") as f:
        f.write(container.to_bytes())
    print(f"{args.input}: {image.shape[0]}x{image.shape[1]}, "
          f"{len(container.payload)} payload bytes, "
          f"bpsp {codec.bpsp(container):.4f}, {dt:.2f}s")
    return 0


def _cmd_decode(args) -> int:
    if os.path.exists(args.output) and not args.force:
        print(f"error: {args.output} exists; pass --force to overwrite",
              file=sys.stderr)
        return 1
    w, cfg = network.load_weights(args.weights)
    with open(args.input, "rb") as f:
        container = codec.Container.from_bytes(f.read())
    t0 = time.perf_counter()
    image = codec.decode(container, w, cfg)
    dt = time.perf_counter() - t0
    images.save_image(args.output, image)
    print(f"{args.input}: decoded {image.shape[0]}x{image.shape[1]} "
          f"({container.mode.name.lower()}) in {dt:.2f}s -> {args.output}")
    return 0


def _cmd_train(args) -> int:
    cfg = _model_config(args)
    tc = training.TrainConfig(batch_size=args.batch, crop=args.crop,
                              lr=args.lr, epochs=args.epochs, seed=args.seed)
    corpus = images.load_corpus(args.data)
    print(f"training on {len(corpus)} images, {args.epochs} epochs, "
          f"{network.count_parameters(cfg)} parameters")

    def report(st):
        print(f"epoch {st.epoch:4d}  loss {st.loss_bits_per_pixel:8.4f} "
              f"bits/px  bpsp~{st.bpsp_estimate:6.4f}  lr {st.lr:.3e}")

    w, curve = training.train(corpus, tc, cfg, on_epoch=report)
    fp = network.save_weights(args.output, w, cfg)
    curve_path = args.curve or (args.output + ".curve.csv")
    training.write_curve(curve_path, curve)
    print(f"saved {args.output} (fingerprint {fp:016x}); curve -> {curve_path}")
    return 0


def _marginal_entropy(image) -> float:
    """Order-0 entropy of the sub-pixel histogram, bits per sub-pixel."""
    counts = np.bincount(image.reshape(-1), minlength=256)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def _bench_rows(corpus_names, corpus, w, cfg, mode):
    rows = []
    for name, image in zip(corpus_names, corpus):
        H, W, _ = image.shape
        t0 = time.perf_counter()
        container = codec.encode(image, w, cfg, mode)
        t_enc = time.perf_counter() - t0
        t0 = time.perf_counter()
        decoded = codec.decode(container, w, cfg)
        t_dec = time.perf_counter() - t0
        if not np.array_equal(decoded, image):
            raise LpicError(f"{name}: round trip is not lossless")
        sched = schedules.build_schedule(mode, H, W, cfg.kernel_half)
        rows.append({
            "image": name, "height": H, "width": W,
            "mode": sched.mode.name.lower(), "steps": sched.step_count,
            "payload_bytes": len(container.payload),
            "bpsp": codec.bpsp(container),
            "theoretical_bpsp": codec.theoretical_bpsp(image, w, cfg, mode),
            "marginal_entropy_bpsp": _marginal_entropy(image),
            "encode_s": t_enc, "decode_s": t_dec,
        })
    return rows


def _print_table(rows, columns) -> None:
    widths = {c: max(len(c), *(len(_fmt(r[c])) for r in rows)) for c in columns}
    print("  ".join(c.rjust(widths[c]) for c in columns))
    for r in rows:
        print("  ".join(_fmt(r[c]).rjust(widths[c]) for c in columns))


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _cmd_bench(args) -> int:
    w, cfg = network.load_weights(args.weights)
    names = sorted(n for n in os.listdir(args.data)
                   if os.path.splitext(n)[1].lower() in images.IMAGE_SUFFIXES)
    if not names:
        print(f"error: no images in {args.data}", file=sys.stderr)
        return 1
    corpus = [images.load_image(os.path.join(args.data, n)) for n in names]
    rows = _bench_rows(names, corpus, w, cfg, args.mode)
    columns = ["image", "height", "width", "mode", "steps", "payload_bytes",
               "bpsp", "theoretical_bpsp", "marginal_entropy_bpsp",
               "encode_s", "decode_s"]
    _print_table(rows, columns)
    mean_bpsp = float(np.mean([r["bpsp"] for r in rows]))
    mean_marginal = float(np.mean([r["marginal_entropy_bpsp"] for r in rows]))
    print(f"mean bpsp: {mean_bpsp:.4f} over {len(rows)} images "
          f"(marginal-entropy baseline {mean_marginal:.4f}, raw 8.0000)")
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=columns)
            writer.writeheader()
            writer.writerows(rows)
        print(f"report -> {args.csv}")
    return 0


def _parse_grid(spec: str) -> list[dict]:
    axes = {"K": [3], "C": [128], "L": [5], "dist": ["gaussian"]}
    for part in spec.split(";"):
        if not part.strip():
            continue
        key, _, values = part.partition("=")
        key = key.strip()
        if key not in axes:
            raise ValueError(f"unknown grid axis {key!r} (use K, C, L, dist)")
        vals = [v.strip() for v in values.split(",") if v.strip()]
        axes[key] = [v if key == "dist" else int(v) for v in vals]
    return [dict(zip(axes, combo)) for combo in itertools.product(*axes.values())]


def _cmd_ablate(args) -> int:
    corpus = images.load_corpus(args.data)
    points = _parse_grid(args.grid)
    rows = []
    for pt in points:
        dist = Distribution.LOGISTIC if pt["dist"] == "logistic" \
            else Distribution.GAUSSIAN
        cfg = ModelConfig(mixtures=pt["K"], filters=pt["C"], layers=pt["L"],
                          kernel_half=args.kernel_half, distribution=dist)
        tag = f"K{pt['K']}_C{pt['C']}_L{pt['L']}_{pt['dist']}"
        if args.weights_dir:
            path = os.path.join(args.weights_dir, tag + ".lpwt")
            if not os.path.exists(path):
                print(f"error: missing weights for grid point {tag}: {path}",
                      file=sys.stderr)
                return 1
            w, cfg = network.load_weights(path)
        else:
            tc = training.TrainConfig(batch_size=args.batch, crop=args.crop,
                                      epochs=args.epochs, seed=args.seed,
                                      lr=1e-3)
            w, _ = training.train(corpus, tc, cfg)
        bpsps = []
        for image in corpus:
            container = codec.encode(image, w, cfg, "seq")
            bpsps.append(codec.bpsp(container))
        rows.append({
            "config": tag, "mixtures": pt["K"], "filters": pt["C"],
            "layers": pt["L"], "distribution": pt["dist"],
            "bpsp": float(np.mean(bpsps)),
            "parameters": network.count_parameters(cfg),
        })
    columns = ["config", "bpsp", "parameters"]
    _print_table(rows, columns)
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"report -> {args.csv}")
    return 0


def _cmd_verify(args) -> int:
    w = cfg = None
    if args.weights:
        w, cfg = network.load_weights(args.weights)
    results = verification.run_all(w, cfg, size=args.size, seed=args.seed)
    for res in results:
        mark = "pass" if res.passed else "FAIL"
        print(f"[{mark}] {res.name}: {res.detail}")
    if args.json:
        with open(args.json, "w") as f:
            json.dump([res.__dict__ for res in results], f, indent=2)
    return 0 if all(res.passed for res in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_thread_cap()
    handlers = {
        "encode": _cmd_encode, "decode": _cmd_decode, "train": _cmd_train,
        "bench": _cmd_bench, "ablate": _cmd_ablate, "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (LpicError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
