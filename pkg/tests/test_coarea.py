import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bvext.coarea import (LevelSelection, assemble_extension, coarea_check, level_profile,
                          select_levels, superlevel)
from bvext.errors import ContractViolation, InvalidInputError
from bvext.grid import CellSet, Grid, GridFunction, perimeter, total_variation


def square_setup(level=5):
    n = 2 ** level
    g = Grid(2, level, (n + 8, n + 8))
    m = np.zeros(g.shape, bool); m[4:-4, 4:-4] = True
    return g, CellSet(g, m)


def test_superlevel_is_strict():
    g = Grid(2, 2, (4, 4))
    u = GridFunction(g, np.arange(16.0).reshape(4, 4) / 15)
    assert len(superlevel(u, 0.0)) == 15
    assert len(superlevel(u, 1.0)) == 0


def test_ramp_example_tv_is_one():
    # 16 columns of faces, each of area 1/16, each column rising by 1
    g = Grid(2, 4, (16, 16))
    u = GridFunction(g, np.repeat((np.arange(16) / 15.0)[:, None], 16, axis=1))
    tv, integral, err = coarea_check(u)
    assert tv == pytest.approx(1.0) and integral == pytest.approx(1.0)
    assert err < 1e-12


def test_constant_has_zero_variation():
    g = Grid(2, 3, (8, 8))
    tv, integral, err = coarea_check(GridFunction(g, np.full(g.shape, 0.3)))
    assert tv == integral == err == 0


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (7, 6), elements=st.floats(-3, 3, allow_nan=False)))
def test_profile_matches_direct_perimeters(vals):
    g = Grid(2, 3, vals.shape)
    u = GridFunction(g, vals)
    prof = level_profile(u)
    for t, p in zip(prof.thresholds, prof.perimeters):
        assert p == pytest.approx(perimeter(superlevel(u, t)), abs=1e-12)
    tv, integral, err = coarea_check(u)
    assert err <= 1e-10


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (5, 5, 4), elements=st.integers(0, 5).map(float)))
def test_coarea_in_region_3d(vals):
    g = Grid(3, 2, vals.shape)
    region = CellSet(g, np.indices(vals.shape)[0] < 4)
    u = GridFunction(g, vals)
    tv, integral, _ = coarea_check(u, region)
    assert tv == pytest.approx(total_variation(u, region)[0])
    assert integral == pytest.approx(tv, abs=1e-12)


def test_profile_integral_over_window():
    g = Grid(2, 1, (4, 2))
    u = GridFunction(g, np.repeat([[0.0], [0.2], [0.2], [0.6]], 2, axis=1))
    prof = level_profile(u)
    # P = two faces of area 1/2 on [0,0.2) and again on [0.2,0.6)
    assert prof.integral(0, 1) == pytest.approx(0.6)
    assert prof.integral(0.1, 0.3) == pytest.approx(0.2)
    assert "threshold,perimeter" in prof.to_csv()


def test_indicator_selection_reproduces_set():
    g, omega = square_setup()
    F = np.zeros(g.shape, bool); F[10:20, 8:30] = True
    u = GridFunction(g, F.astype(float))
    sel = select_levels(u, omega, 3)
    assert all(sel.good_flags)
    um = assemble_extension(sel)
    assert np.array_equal(um.values[omega.mask], u.values[omega.mask])


@pytest.mark.parametrize("depth", [2, 3, 4])
def test_linear_profile_sup_error(depth):
    g, omega = square_setup()
    x = np.clip((np.indices(g.shape)[0] - 4 + 0.5) / 2 ** 5, 0, 1)
    u = GridFunction(g, x)
    sel = select_levels(u, omega, depth)
    um = assemble_extension(sel)
    err = np.abs(um.values - u.values)[omega.mask].max()
    assert err <= 2.0 ** -depth + 1e-12


def test_spike_checkerboard_chosen_sets_obey_bound():
    g, omega = square_setup(4)
    cb = np.indices(g.shape).sum(0) % 2
    u = GridFunction(g, np.where(cb, 0.26, 0.24))
    sel = select_levels(u, omega, 1)
    prof = sel.profile
    for (a, b), E, ok in zip(sel.intervals, sel.extended, sel.good_flags):
        if ok:
            assert perimeter(E & omega, omega) <= 4 * prof.integral(a, b) + 1e-12
    # the first interval picks t = 0.26, where the superlevel set is empty
    assert sel.chosen[0] == pytest.approx(0.26)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(0, 4))
def test_good_intervals_respect_perimeter_bound(seed, depth):
    g, omega = square_setup(4)
    u = GridFunction(g, np.random.default_rng(seed).random(g.shape))
    sel = select_levels(u, omega, depth)
    for (a, b), t, E, ok in zip(sel.intervals, sel.chosen, sel.extended, sel.good_flags):
        assert a <= t < b
        if ok:
            assert perimeter(E, omega) <= 2.0 ** (depth + 1) * sel.profile.integral(a, b) + 1e-9


def test_collar_widths_prefer_small_collar_perimeter():
    g, omega = square_setup()
    u = GridFunction(g, np.random.default_rng(3).random(g.shape))
    sel = select_levels(u, omega, 2, collar_widths=[0.125])
    assert len(sel.collar_budget) == 4
    rows = sel.to_csv().strip().splitlines()
    assert rows[0].startswith("interval,lo,hi") and len(rows) == 5


def test_selection_input_errors():
    g, omega = square_setup(3)
    with pytest.raises(ContractViolation):
        select_levels(GridFunction(g, np.full(g.shape, 2.0)), omega, 1)
    with pytest.raises(InvalidInputError):
        select_levels(GridFunction(g, np.zeros(g.shape)), omega, -1)
    with pytest.raises(InvalidInputError):
        select_levels(GridFunction(g, np.zeros(g.shape)), g.empty(), 1)


def test_assemble_full_and_empty():
    g = Grid(2, 3, (8, 8))
    sel = LevelSelection(2, (0.1, 0.3, 0.6, 0.8), (True,) * 4, (0.0,) * 4)
    assert np.all(assemble_extension(sel, [g.full()] * 4).values == 1)
    assert np.all(assemble_extension(sel, [g.empty()] * 4).values == 0)
    with pytest.raises(ContractViolation):
        assemble_extension(sel, [g.full()] * 3)


def test_threshold_outside_interval_rejected():
    with pytest.raises(ContractViolation):
        LevelSelection(1, (0.7, 0.6), (True, True), (0.0, 0.0))
