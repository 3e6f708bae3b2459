import heapq
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from bvext.errors import InvalidInputError, ScaleError
from bvext.gallery import domain
from bvext.grid import CellSet, Grid, perimeter
from bvext.planar import (UnreachableError, greedy_arcs, hole_fill_baseline, hset_report,
                          interior_path, jordan_decompose, quasiconvex_path, ring_baseline,
                          strong_perimeter_extend_jordan, strong_perimeter_extend_set,
                          trace_cycles)


def cells(shape, *boxes):
    m = np.zeros(shape, bool)
    for x0, x1, y0, y1 in boxes:
        m[x0:x1, y0:y1] = True
    return m


def dijkstra_oracle(allowed, z, w):
    """Plain heap Dijkstra on the 8-neighbour graph; returns the path length in cells."""
    best = {z: 0.0}
    heap = [(0.0, z)]
    while heap:
        d, p = heapq.heappop(heap)
        if p == w:
            return d
        if d > best[p]:
            continue
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                q = (p[0] + dx, p[1] + dy)
                if q == p or not (0 <= q[0] < allowed.shape[0] and 0 <= q[1] < allowed.shape[1]):
                    continue
                if not allowed[q]:
                    continue
                nd = d + math.hypot(dx, dy)
                if nd < best.get(q, math.inf) - 1e-12:
                    best[q] = nd
                    heapq.heappush(heap, (nd, q))
    return math.inf


# -- Jordan decomposition -----------------------------------------------------

def test_square_single_plus_cycle():
    g = Grid(2, 4, (16, 16))
    E = CellSet(g, cells(g.shape, (4, 10, 3, 9)))
    J = jordan_decompose(E)
    assert len(J.plus_cycles) == 1 and not J.minus_cycles
    assert J.plus_cycles[0].length == pytest.approx(24 * g.spacing)
    assert J.parts[0] == E


def test_annulus_has_plus_and_minus():
    g = Grid(2, 4, (16, 16))
    E = CellSet(g, cells(g.shape, (2, 14, 2, 14)) & ~cells(g.shape, (5, 9, 5, 9)))
    J = jordan_decompose(E)
    assert len(J.plus_cycles) == 1 and len(J.minus_cycles) == 1
    assert J.plus_cycles[0].length == pytest.approx(48 * g.spacing)
    assert J.minus_cycles[0].length == pytest.approx(16 * g.spacing)
    assert J.minus_inside(0) == [0]
    assert J.to_json()["perimeter"] == pytest.approx(perimeter(E))


def test_two_squares_two_parts():
    g = Grid(2, 4, (16, 16))
    E = CellSet(g, cells(g.shape, (1, 5, 1, 5), (8, 12, 8, 14)))
    J = jordan_decompose(E)
    assert len(J.plus_cycles) == 2 and len(J.parts) == 2
    assert J.parts[0] | J.parts[1] == E


def test_diagonal_touch_counts_as_two_pieces():
    # cells touching only at a corner are two pieces with the left-turn rule
    g = Grid(2, 3, (8, 8))
    E = CellSet(g, cells(g.shape, (2, 4, 2, 4), (4, 6, 4, 6)))
    J = jordan_decompose(E)
    assert len(J.plus_cycles) == 2


def test_empty_and_frame_rejected():
    g = Grid(2, 3, (8, 8))
    with pytest.raises(InvalidInputError):
        jordan_decompose(g.empty())
    with pytest.raises(InvalidInputError):
        jordan_decompose(CellSet(g, cells(g.shape, (0, 3, 2, 4))))


@settings(max_examples=80, deadline=None)
@given(arrays(bool, (10, 9)))
def test_jordan_invariants(m):
    m = np.pad(m, 1)
    if not m.any():
        return
    g = Grid(2, 4, m.shape)
    E = CellSet(g, m)
    J = jordan_decompose(E)
    n4 = ndimage.label(m)[1]
    lab8, n8 = ndimage.label(~m, np.ones((3, 3)))
    assert len(J.plus_cycles) == n4
    assert len(J.minus_cycles) == n8 - 1  # the frame piece is unbounded
    assert sum(c.length for c in J.cycles) == pytest.approx(perimeter(E))
    union = np.zeros_like(m)
    for P in J.parts:
        assert not (union & P.mask).any()
        union |= P.mask
    assert np.array_equal(union, m)
    assert all(c.sign == 1 for c in J.plus_cycles)
    assert all(c.sign == -1 for c in J.minus_cycles)


def test_trace_cycles_closed():
    m = np.pad(cells((6, 6), (1, 5, 1, 5)), 1)
    cycles, (starts, dirs, _, _) = trace_cycles(m)
    assert len(cycles) == 1 and len(cycles[0]) == 16
    steps = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]])
    for cyc in cycles:
        ends = starts[cyc] + steps[dirs[cyc]]
        assert np.array_equal(ends, np.roll(starts[cyc], -1, axis=0))


# -- paths --------------------------------------------------------------------

def test_square_diagonal_path():
    g = Grid(2, 4, (16, 16))
    comp = CellSet(g, cells(g.shape, (0, 16, 0, 16)))
    p = quasiconvex_path(comp, (0, 0), (15, 15))
    assert p.length == pytest.approx(15 * math.sqrt(2) * g.spacing)
    assert p.ratio == pytest.approx(1.0)


def test_l_shape_matches_oracle():
    g = Grid(2, 4, (16, 16))
    m = cells(g.shape, (0, 16, 0, 4), (0, 4, 0, 16))
    p = quasiconvex_path(CellSet(g, m), (15, 0), (0, 15))
    assert p.length == pytest.approx(dijkstra_oracle(m, (15, 0), (0, 15)) * g.spacing)
    steps = np.abs(np.diff(p.cells, axis=0))
    assert steps.max() <= 1 and m[tuple(p.cells.T)].all()


@settings(max_examples=40, deadline=None)
@given(arrays(bool, (9, 9), elements=st.booleans()), st.data())
def test_random_paths_match_oracle(m, data):
    pts = np.argwhere(m)
    if len(pts) < 2:
        return
    i, j = data.draw(st.integers(0, len(pts) - 1)), data.draw(st.integers(0, len(pts) - 1))
    z, w = tuple(pts[i]), tuple(pts[j])
    g = Grid(2, 3, m.shape)
    ref = dijkstra_oracle(m, z, w)
    if math.isinf(ref):
        with pytest.raises(UnreachableError):
            quasiconvex_path(CellSet(g, m), z, w)
    else:
        assert quasiconvex_path(CellSet(g, m), z, w).length == pytest.approx(ref * g.spacing)


def test_same_endpoint_path():
    g = Grid(2, 3, (8, 8))
    comp = CellSet(g, cells(g.shape, (1, 7, 1, 7)))
    assert quasiconvex_path(comp, (3, 3), (3, 3)).length == 0
    p = interior_path(comp, (3, 3), (3, 3), 0.25)
    assert p.length == 0 and p.ratio == 1.0


def test_corridor_is_resolution_limited():
    g = Grid(2, 4, (16, 16))
    comp = CellSet(g, cells(g.shape, (2, 14, 7, 8)))
    p = interior_path(comp, (2, 7), (13, 7), 4 * g.spacing)
    assert p.resolution_limited and not p.interior_only


def test_interior_path_in_wide_square():
    g = Grid(2, 5, (32, 32))
    comp = CellSet(g, cells(g.shape, (0, 32, 0, 32)))
    p = interior_path(comp, (0, 0), (31, 31), 4 * g.spacing)
    assert p.interior_only and not p.resolution_limited
    with pytest.raises(ScaleError):
        interior_path(comp, (0, 0), (31, 31), g.spacing)


def test_path_endpoint_outside_component():
    g = Grid(2, 3, (8, 8))
    comp = CellSet(g, cells(g.shape, (1, 4, 1, 4)))
    with pytest.raises(InvalidInputError):
        quasiconvex_path(comp, (0, 0), (2, 2))


# -- arcs and extension -------------------------------------------------------

def test_greedy_arcs_on_flags():
    arcs, closed = greedy_arcs(np.array([0, 1, 1, 0, 0, 1], bool))
    assert not closed and len(arcs) >= 1
    arcs, closed = greedy_arcs(np.ones(7, bool))
    assert closed


def test_square_strictly_inside_unchanged():
    D = domain("square", 6)
    g = D.grid
    x, y = g.mesh()
    E = CellSet(g, (np.abs(x) < 0.3) & (np.abs(y) < 0.3))
    res = strong_perimeter_extend_jordan(E, D.omega)
    assert res.extended == E and res.constant == pytest.approx(1.0)


@pytest.mark.parametrize("level", [6, 7])
def test_half_disk_pushed_off_boundary(level):
    D = domain("disk", level)
    g = D.grid
    x, _ = g.mesh()
    E = CellSet(g, D.omega.mask & (x < 0))
    res = strong_perimeter_extend_jordan(E, D.omega)
    assert res.overlap_length == 0
    assert res.baseline_overlap_length > 1
    assert res.constant <= 3 + 8 * g.spacing
    assert np.array_equal(res.extended.mask & D.omega.mask, E.mask)


def test_non_jordan_set_rejected():
    D = domain("square", 5)
    g = D.grid
    x, y = g.mesh()
    r = np.maximum(np.abs(x), np.abs(y))
    E = CellSet(g, D.omega.mask & (r > 0.3) & (r < 0.8))
    with pytest.raises(InvalidInputError, match="minus"):
        strong_perimeter_extend_jordan(E, D.omega)
    res = strong_perimeter_extend_set(E, D.omega)
    assert res.extended == E


def test_set_extension_touching_boundary():
    D = domain("square", 6)
    g = D.grid
    x, y = g.mesh()
    E = CellSet(g, D.omega.mask & (x < 0) & (np.abs(y) > 0.2))
    res = strong_perimeter_extend_set(E, D.omega)
    assert res.overlap_length == 0
    assert np.array_equal(res.extended.mask & D.omega.mask, E.mask)
    assert res.to_json()["constant"] == pytest.approx(res.constant)


def test_baselines_agree_with_e_on_omega():
    D = domain("comb_4_2", 7)
    g = D.grid
    x, _ = g.mesh()
    E = CellSet(g, D.omega.mask & (x < 0))
    for B in (hole_fill_baseline(E, D.omega), ring_baseline(E, D.omega)):
        assert np.array_equal(B.mask & D.omega.mask, E.mask)
    filled = hole_fill_baseline(E, D.omega)
    assert (filled.mask & D.features["rectangles"].mask).any()


def test_comb_with_fill_baseline():
    D = domain("comb_4_2", 8)
    g = D.grid
    x, _ = g.mesh()
    E = CellSet(g, D.omega.mask & (x < 0))
    res = strong_perimeter_extend_set(E, D.omega, baseline=hole_fill_baseline(E, D.omega))
    assert res.overlap_length == 0
    assert res.constant < 8


def test_hset_square_empty_comb_slit():
    H, length = hset_report(domain("square", 5).omega)
    assert H.is_empty() and length == 0
    D = domain("comb_4_2", 8)
    H, length = hset_report(D.omega)
    assert abs(length - 1.0) <= 4 * D.grid.spacing
    assert H.issubset(D.features["slit"])
