import numpy as np
import pytest

from lpic.schedules import (DIAGONAL_UNAVAILABLE, Schedule, ScheduleMode,
                            build_schedule, diagonal, parse_mode, sequential,
                            validate, wavefront)


def test_sequential_counts():
    assert sequential(2, 2).step_count == 4
    assert sequential(1, 5).step_count == 5
    s = sequential(1, 5)
    assert [step[0] for step in s.steps] == [(0, j) for j in range(5)]
    for d in (3, 16, 64):
        assert sequential(d, d).step_count == d * d


def test_wavefront_step_formula():
    # square: D + (D-1)(h+1)
    assert wavefront(512, 512, 2).step_count == 2045
    assert wavefront(4, 4, 2).step_count == 13
    for d in range(1, 65):
        assert wavefront(d, d, 2).step_count == d + (d - 1) * 3
    for h in (1, 2, 3):
        for d in (1, 2, 7, 16):
            assert wavefront(d, d, h).step_count == d + (d - 1) * (h + 1)


def test_wavefront_assignment_five_by_five():
    s = wavefront(5, 5, 2)
    step_of = {p: t for t, step in enumerate(s.steps) for p in step}
    assert step_of[(1, 0)] == 3
    assert step_of[(0, 3)] == 3
    for (i, j), t in step_of.items():
        assert t == 3 * i + j


def test_wavefront_no_substitutions():
    assert wavefront(8, 8, 2).substitutions == {}


def test_diagonal_step_formula():
    assert diagonal(512, 512, 2).step_count == 1023
    assert diagonal(4, 4, 2).step_count == 7
    for d in range(1, 65):
        assert diagonal(d, d, 2).step_count == 2 * d - 1


def test_diagonal_rejects_other_kernels():
    with pytest.raises(ValueError):
        diagonal(4, 4, 1)
    with pytest.raises(ValueError):
        diagonal(4, 4, 3)


def test_diagonal_unavailable_taps_interior():
    """For an interior pixel, exactly the three same-or-later anti-diagonal
    taps need substitution, and they map to (i-2, j+1)."""
    s = diagonal(12, 12, 2)
    i, j = 5, 5
    keys = [k for k in s.substitutions if (k[0], k[1]) == (i, j)]
    taps = {(i + di, j + dj) for (_, _, di, dj) in keys}
    assert taps == {(4, 6), (4, 7), (3, 7)}
    for k in keys:
        assert s.substitutions[k] == (3, 6)


def test_diagonal_substitution_sources_are_decoded_earlier():
    s = diagonal(9, 7, 2)
    step_of = {p: t for t, step in enumerate(s.steps) for p in step}
    for (i, j, di, dj), src in s.substitutions.items():
        assert step_of[(i + di, j + dj)] >= step_of[(i, j)]  # genuinely unavailable
        if src is not None:
            assert step_of[src] < step_of[(i, j)]


def test_validate_wavefront_exhaustive_sweep():
    for H in range(1, 33):
        for W in range(1, 33):
            assert validate(wavefront(H, W, 2), 2) == []


def test_validate_all_modes_shapes():
    for H in range(1, 33):
        for W in (1, 2, 3, H, 32):
            assert validate(sequential(H, W), 2) == []
            assert validate(diagonal(H, W, 2), 2) == []


def test_validate_detects_missing_substitutions():
    s = diagonal(8, 8, 2)
    bare = Schedule(s.mode, s.height, s.width, s.steps, {}, ())
    violations = validate(bare, 2)
    # every interior pixel loses exactly its three redirected taps
    i, j = 4, 4
    mine = [v for v in violations if f"({i},{j}) needs" in v]
    assert len(mine) == len(DIAGONAL_UNAVAILABLE)


def test_validate_detects_duplicates_and_order():
    s = sequential(2, 2)
    s.steps[0] = [(0, 0), (0, 0)]
    assert any("appears in steps" in v for v in validate(s, 2))
    s2 = Schedule(ScheduleMode.SEQUENTIAL, 2, 2, [[(0, 1), (0, 0)], [(1, 0)], [(1, 1)]])
    assert any("raster order" in v for v in validate(s2, 2))


def test_union_of_steps_is_full_disjoint_pixel_set():
    for build in (lambda: sequential(6, 9),
                  lambda: wavefront(6, 9, 2),
                  lambda: diagonal(6, 9, 2)):
        s = build()
        seen = [p for step in s.steps for p in step]
        assert len(seen) == len(set(seen)) == 54


def test_parse_mode():
    assert parse_mode("seq") == ScheduleMode.SEQUENTIAL
    assert parse_mode("wavefront") == ScheduleMode.WAVEFRONT
    assert parse_mode(ScheduleMode.DIAGONAL) == ScheduleMode.DIAGONAL
    with pytest.raises(ValueError):
        parse_mode("spiral")


def test_raster_order_within_steps():
    for s in (wavefront(7, 11, 2), diagonal(7, 11, 2)):
        for step in s.steps:
            assert step == sorted(step)


def test_build_schedule_dispatch():
    assert build_schedule("seq", 3, 3, 2).mode == ScheduleMode.SEQUENTIAL
    assert build_schedule("wave", 3, 3, 2).mode == ScheduleMode.WAVEFRONT
    assert build_schedule("diag", 3, 3, 2).mode == ScheduleMode.DIAGONAL
    with pytest.raises(ValueError):
        build_schedule("seq", 0, 3, 2)
