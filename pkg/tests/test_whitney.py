import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvext.errors import ContractViolation, InvalidInputError, ScaleError
from bvext.gallery import domain
from bvext.grid import CellSet, Grid, GridFunction, perimeter, total_variation
from bvext.whitney import (GRADIENT_CAP, bv_norm, collar_variation_profile, cube_means,
                           partition_of_unity, smooth_bv, whitney_decompose)


def boundary_segments(mask):
    """Boundary faces of mask (off-grid = outside) as boxes [x0,x1]x[y0,y1] in vertex units."""
    p = np.pad(mask, 1)
    segs = []
    cut = p[:-1, :] != p[1:, :]
    for i, j in zip(*np.nonzero(cut)):
        segs.append((i, i, j - 1, j))  # vertical face at x = i between rows
    cut = p[:, :-1] != p[:, 1:]
    for i, j in zip(*np.nonzero(cut)):
        segs.append((i - 1, i, j, j))
    return np.array(segs, dtype=float)


def box_distance(box, segs):
    x0, x1, y0, y1 = box
    gx = np.maximum(0, np.maximum(segs[:, 0] - x1, x0 - segs[:, 1]))
    gy = np.maximum(0, np.maximum(segs[:, 2] - y1, y0 - segs[:, 3]))
    return float(np.sqrt(gx ** 2 + gy ** 2).min())


def oracle_check(W):
    """Re-check containment, tiling, distance window and neighbour sizes with exact box-to-face distances."""
    g = W.grid
    segs = boundary_segments(W.open_set.mask)
    cover = np.zeros(g.shape, dtype=int)
    for q in W.cubes:
        sl = q.cells(g)
        assert W.open_set.mask[sl].all()
        cover[sl] += 1
        if q.at_resolution_floor:
            continue
        box = (sl[0].start, sl[0].stop, sl[1].start, sl[1].stop)
        d = box_distance(box, segs) * g.spacing
        assert q.side <= d + 1e-12 <= 4 * math.sqrt(2) * q.side + 1e-12
    assert np.array_equal(cover == 1, W.open_set.mask) and cover.max() == 1
    for a, b in W.neighbors:
        la, lb = W.cubes[a].side, W.cubes[b].side
        assert la / 4 <= lb <= 4 * la


def poly(seed, level=5):
    return domain("random_polyomino", level, seed=seed).omega


def test_unit_square_passes_oracle():
    W = whitney_decompose(domain("square", 8, half=0.5).omega)
    oracle_check(W)
    assert W.floor_count > 0


def test_empty_and_full_rejected():
    g = Grid(2, 4, (16, 16))
    with pytest.raises(InvalidInputError):
        whitney_decompose(g.empty())
    with pytest.raises(InvalidInputError):
        whitney_decompose(g.full())


def test_two_squares_decompose_independently():
    g = Grid(2, 6, (64, 64))
    a = np.zeros(g.shape, bool); a[4:28, 4:28] = True
    b = np.zeros(g.shape, bool); b[36:60, 30:54] = True
    both = whitney_decompose(CellSet(g, a | b))
    sep = whitney_decompose(CellSet(g, a)).cubes + whitney_decompose(CellSet(g, b)).cubes
    key = lambda q: (q.level, q.index, q.at_resolution_floor)
    assert sorted(map(key, both.cubes)) == sorted(map(key, sep))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_polyomino_oracle(seed):
    oracle_check(whitney_decompose(poly(seed)))


def test_dump_has_level_index_flag():
    W = whitney_decompose(poly(1))
    rec = W.to_json()[0]
    assert set(rec) == {"level", "index", "at_resolution_floor"}


def test_partition_invariants_unit_square():
    A = domain("square", 8, half=0.5).omega
    P = partition_of_unity(whitney_decompose(A))
    s = P.bump_sum()
    assert np.abs(s[A.mask] - 1).max() <= 1e-9
    assert P.gradient_bound_constant <= 32
    assert P.gradient_bound_constant <= GRADIENT_CAP


def test_bump_support_within_eighth_of_side():
    A = domain("disk", 6, radius=0.8).omega
    W = whitney_decompose(A)
    P = partition_of_unity(W)
    g = A.grid
    for i in range(0, len(W), max(1, len(W) // 40)):
        psi = P.bump(i)
        q = W.cubes[i]
        sl = q.cells(g)
        cells = np.argwhere(psi > 0)
        lo = np.array([s.start for s in sl]); hi = np.array([s.stop for s in sl])
        gap = np.maximum(0, np.maximum(lo - (cells + 0.5), (cells + 0.5) - hi))
        d = np.sqrt((gap ** 2).sum(1)) * g.spacing
        assert d.max() <= q.side / 8 + 1e-12


def test_smooth_constant_and_linearity():
    B = domain("square", 6).omega
    g = B.grid
    x, y = g.mesh()
    A = CellSet(g, B.mask & (np.abs(x) < 0.5) & (np.abs(y) < 0.5))
    P = partition_of_unity(whitney_decompose(A))
    c = GridFunction(g, np.full(g.shape, 2.5))
    assert np.allclose(smooth_bv(c, B, A, P).values, 2.5, atol=1e-12)
    rng = np.random.default_rng(0)
    u, w = (GridFunction(g, rng.normal(size=g.shape)) for _ in range(2))
    lhs = smooth_bv(u * 2.0 + w * -3.0, B, A, P).values
    rhs = 2.0 * smooth_bv(u, B, A, P).values - 3.0 * smooth_bv(w, B, A, P).values
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()
    S = smooth_bv(u, B, A, P)
    assert np.array_equal(S.values[~A.mask], u.values[~A.mask])
    assert S.values[A.mask].min() >= u.values[A.mask].min() - 1e-12
    assert S.values[A.mask].max() <= u.values[A.mask].max() + 1e-12


def test_single_cube_gives_its_mean():
    g = Grid(2, 4, (16, 16))
    m = np.zeros(g.shape, bool); m[4:12, 4:12] = True
    A = CellSet(g, m)
    W = whitney_decompose(A)
    u = GridFunction(g, np.random.default_rng(2).normal(size=g.shape))
    S = smooth_bv(u, g.full(), A)
    i = W.labels[8, 8]
    if len(W.cubes) and not W.cubes[i].at_resolution_floor:
        sl = W.cubes[i].cells(g)
        inner = (slice(sl[0].start + 1, sl[0].stop - 1), slice(sl[1].start + 1, sl[1].stop - 1))
        assert np.allclose(S.values[inner], cube_means(u, W)[i])


def test_a_not_in_b_is_violation():
    g = Grid(2, 4, (16, 16))
    a = np.zeros(g.shape, bool); a[2:10, 2:10] = True
    b = np.zeros(g.shape, bool); b[2:6, 2:6] = True
    with pytest.raises(ContractViolation):
        smooth_bv(GridFunction(g, np.zeros(g.shape)), CellSet(g, b), CellSet(g, a))


def test_checkerboard_norm_bound():
    g = Grid(2, 7, (128, 128))
    B = g.full()
    m = np.zeros(g.shape, bool); m[32:96, 32:96] = True
    A = CellSet(g, m)
    P = partition_of_unity(whitney_decompose(A))
    u = GridFunction(g, (np.indices(g.shape).sum(0) % 2).astype(float))
    S = smooth_bv(u, B, A, P)
    ratio = (S.l1_norm(A) + total_variation(S, A)[0]) / (u.l1_norm(A) + total_variation(u, A)[0])
    assert ratio <= 4 * (1 + P.gradient_bound_constant)
    assert bv_norm(S, B) <= bv_norm(u, B)


def test_collar_examples():
    g = Grid(2, 6, (64, 64))
    m = np.zeros(g.shape, bool); m[16:48, 16:48] = True
    A = CellSet(g, m)
    widths = [0.25, 0.125, 0.0625]
    zero = collar_variation_profile(GridFunction(g, np.zeros(g.shape)), A, widths)
    assert all(v == 0 for _, v in zero)
    jump = collar_variation_profile(A.indicator(), A, widths)
    assert all(v == pytest.approx(perimeter(A)) for _, v in jump)
    with pytest.raises(ScaleError):
        collar_variation_profile(A.indicator(), A, [g.spacing])
    with pytest.raises(InvalidInputError):
        collar_variation_profile(A.indicator(), A, [0.0625, 0.25])
