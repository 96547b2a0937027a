"""Decoding schedules: which pixels can be decoded together, and in what order.

A schedule is an ordered list of steps; all pixels inside one step can be
evaluated by the network in a single pass because every causal tap they need
is either out of the image (zero padding), decoded in an earlier step, or --
in diagonal mode -- redirected to a substitute pixel.  Within a step, pixels
are coded in raster order and each pixel's sub-pixels in r, g, b order; this
total order is part of the bitstream contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

from .kernels import causal_tap_offsets


class ScheduleMode(IntEnum):
    SEQUENTIAL = 0
    WAVEFRONT = 1
    DIAGONAL = 2


_MODE_NAMES = {
    "seq": ScheduleMode.SEQUENTIAL, "sequential": ScheduleMode.SEQUENTIAL,
    "wave": ScheduleMode.WAVEFRONT, "wavefront": ScheduleMode.WAVEFRONT,
    "diag": ScheduleMode.DIAGONAL, "diagonal": ScheduleMode.DIAGONAL,
}


def parse_mode(name) -> ScheduleMode:
    if isinstance(name, ScheduleMode):
        return name
    try:
        return _MODE_NAMES[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown schedule mode {name!r}") from None


# The three causal taps a diagonal step cannot have decoded yet (they sit on
# the same or a later anti-diagonal), and the decoded pixel whose value
# stands in for them.  Fixed constants of the bitstream for h = 2.
DIAGONAL_UNAVAILABLE = ((-1, 1), (-1, 2), (-2, 2))
DIAGONAL_SOURCE = (-2, 1)


@dataclass
class Schedule:
    """steps[t] lists the pixel coordinates decoded in pass t (raster order
    inside a step; a step may be empty).  substitutions maps
    (i, j, di, dj) -> source coordinate or None for zero padding, and is
    only populated in diagonal mode."""

    mode: ScheduleMode
    height: int
    width: int
    steps: list
    substitutions: dict = field(default_factory=dict)
    sub_offsets: tuple = ()  # tap offsets that substitutions may redirect

    @property
    def step_count(self) -> int:
        return len(self.steps)


def _check_dims(height: int, width: int) -> None:
    if height < 1 or width < 1:
        raise ValueError("image dimensions must be positive")


def sequential(height: int, width: int) -> Schedule:
    """One pixel per step, raster order: H*W passes."""
    _check_dims(height, width)
    steps = [[(i, j)] for i in range(height) for j in range(width)]
    return Schedule(ScheduleMode.SEQUENTIAL, height, width, steps)


def wavefront(height: int, width: int, kernel_half: int) -> Schedule:
    """Pixel (i, j) decodes at step (h+1)*i + j.

    Every causal tap of a pixel lands in a strictly earlier step, so no
    substitutions are needed.  For a DxD image the step count is
    D + (D-1)(h+1).  Steps that no pixel maps to stay as empty placeholders
    so the count matches that expression for every size.
    """
    _check_dims(height, width)
    if kernel_half < 1:
        raise ValueError("kernel_half must be positive")
    h = kernel_half
    n_steps = (h + 1) * (height - 1) + width
    steps = [[] for _ in range(n_steps)]
    for i in range(height):
        for j in range(width):
            steps[(h + 1) * i + j].append((i, j))
    return Schedule(ScheduleMode.WAVEFRONT, height, width, steps)


def diagonal(height: int, width: int, kernel_half: int) -> Schedule:
    """Pixel (i, j) decodes at step i + j: 2D - 1 passes for DxD.

    Three causal taps of each pixel sit on the same or a later
    anti-diagonal; their values are taken from the already-decoded pixel at
    (i-2, j+1).  Where that pixel is outside the image, the first in-bounds
    already-decoded causal tap (in canonical tap order) stands in, or zero
    padding if there is none.  The rule is defined for the 5x5 kernel only.
    """
    _check_dims(height, width)
    if kernel_half != 2:
        raise ValueError("diagonal schedule is only defined for kernel_half=2")
    taps = causal_tap_offsets(kernel_half)
    steps = [[] for _ in range(height + width - 1)]
    substitutions = {}
    for i in range(height):
        for j in range(width):
            steps[i + j].append((i, j))
            for di, dj in DIAGONAL_UNAVAILABLE:
                ti, tj = i + di, j + dj
                if not (0 <= ti < height and 0 <= tj < width):
                    continue  # padding handles it, like any out-of-image tap
                si, sj = i + DIAGONAL_SOURCE[0], j + DIAGONAL_SOURCE[1]
                if not (0 <= si < height and 0 <= sj < width):
                    source = None
                    for k in range(taps.shape[0]):
                        ci, cj = i + int(taps[k, 0]), j + int(taps[k, 1])
                        if 0 <= ci < height and 0 <= cj < width and ci + cj < i + j:
                            source = (ci, cj)
                            break
                    substitutions[(i, j, di, dj)] = source
                else:
                    substitutions[(i, j, di, dj)] = (si, sj)
    return Schedule(ScheduleMode.DIAGONAL, height, width, steps, substitutions,
                    DIAGONAL_UNAVAILABLE)


def build_schedule(mode, height: int, width: int, kernel_half: int) -> Schedule:
    mode = parse_mode(mode)
    if mode == ScheduleMode.SEQUENTIAL:
        return sequential(height, width)
    if mode == ScheduleMode.WAVEFRONT:
        return wavefront(height, width, kernel_half)
    return diagonal(height, width, kernel_half)


def validate(schedule: Schedule, kernel_half: int) -> list[str]:
    """Exhaustively check the schedule invariants; returns violations.

    Checks: each pixel appears in exactly one step, raster order inside each
    step, and every causal tap of every pixel is out of bounds, decoded in
    an earlier step, or covered by a substitution entry whose source (when
    not padding) is itself in bounds and already decoded.
    """
    H, W = schedule.height, schedule.width
    violations = []
    step_of = {}
    for t, step in enumerate(schedule.steps):
        prev = None
        for (i, j) in step:
            if not (0 <= i < H and 0 <= j < W):
                violations.append(f"pixel ({i},{j}) out of bounds in step {t}")
                continue
            if (i, j) in step_of:
                violations.append(f"pixel ({i},{j}) appears in steps {step_of[(i, j)]} and {t}")
            step_of[(i, j)] = t
            if prev is not None and (i, j) <= prev:
                violations.append(f"step {t} is not in raster order at ({i},{j})")
            prev = (i, j)
    if len(step_of) != H * W:
        violations.append(f"{H * W - len(step_of)} pixels missing from the schedule")
    taps = causal_tap_offsets(kernel_half)
    for (i, j), t in step_of.items():
        for k in range(taps.shape[0]):
            di, dj = int(taps[k, 0]), int(taps[k, 1])
            ti, tj = i + di, j + dj
            if not (0 <= ti < H and 0 <= tj < W):
                continue  # padding
            tap_step = step_of.get((ti, tj))
            if tap_step is not None and tap_step < t:
                continue  # decoded earlier
            sub = schedule.substitutions.get((i, j, di, dj), "missing")
            if sub == "missing":
                violations.append(
                    f"pixel ({i},{j}) needs tap ({ti},{tj}) before it is decoded")
            elif sub is not None:
                si, sj = sub
                if not (0 <= si < H and 0 <= sj < W):
                    violations.append(
                        f"substitution source ({si},{sj}) for ({i},{j}) out of bounds")
                elif step_of.get((si, sj), t) >= t:
                    violations.append(
                        f"substitution source ({si},{sj}) for ({i},{j}) not decoded yet")
    return violations
