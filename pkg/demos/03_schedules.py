"""The three decoding orders, drawn as step-index maps.

Sequential decodes one pixel per network pass; wavefront groups pixels
whose causal context is complete; diagonal decodes whole anti-diagonals by
substituting the three not-yet-available neighbors.
"""

from lpic import build_schedule, diagonal, sequential, validate, wavefront

H = W = 8
h = 2


def show(schedule):
    step_of = {p: t for t, step in enumerate(schedule.steps) for p in step}
    print(f"{schedule.mode.name.lower()}: {schedule.step_count} steps "
          f"for {H}x{W}")
    for i in range(H):
        print("   " + " ".join(f"{step_of[(i, j)]:3d}" for j in range(W)))
    print()


show(sequential(H, W))
show(wavefront(H, W, h))
show(diagonal(H, W, h))

print("step counts for a DxD image (h=2):")
print(f"{'D':>5} {'sequential':>11} {'wavefront':>10} {'diagonal':>9}")
for d in (4, 16, 64, 256, 512):
    print(f"{d:5d} {d * d:11d} {d + (d - 1) * (h + 1):10d} {2 * d - 1:9d}")

s = diagonal(H, W, h)
print(f"\ndiagonal substitutions for pixel (5,5): the three taps on the same")
print("or later anti-diagonal read the already-decoded pixel below-left of them:")
for (i, j, di, dj), src in sorted(s.substitutions.items()):
    if (i, j) == (5, 5):
        print(f"  tap ({i + di},{j + dj}) -> {src}")

for mode in ("seq", "wave", "diag"):
    bad = validate(build_schedule(mode, 31, 17, h), h)
    print(f"validate {mode:4s} 31x17: {'ok' if not bad else bad}")
