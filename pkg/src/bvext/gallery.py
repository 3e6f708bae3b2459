"""Fixture domains: square, disk, slit disk, comb, cusp, a 3D fat-Cantor wedge and random polyominoes.

Planar domains live in the box [-1, 1]^2 with a margin of ``MARGIN`` cells;
the grid at level L has spacing 2^-L and is dyadically aligned, so Whitney
cubes line up with the world coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, ResolutionError
from .grid import CellSet, Grid, ball_counts, ball_kernel, outer_boundary

KINDS = ("square", "disk", "slit_disk", "comb_4_2", "cusp", "fat_cantor_3d", "random_polyomino")
MARGIN = 16


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    level: int
    parameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown domain kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.level < 1:
            raise InvalidInputError("level must be >= 1")


@dataclass(frozen=True, eq=False)
class Domain:
    spec: DomainSpec
    omega: CellSet
    features: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.omega.grid


def box_grid(level, dim=2, half=1.0, margin=MARGIN) -> Grid:
    h = 2.0 ** -level
    n = int(round(2 * half / h)) + 2 * margin
    return Grid(dim, level, (n,) * dim, (-half - margin * h,) * dim)


def _square(spec):
    half = float(spec.parameters.get("half", 1.0))
    g = box_grid(spec.level)
    x, y = g.mesh()
    return CellSet(g, (np.abs(x) < half) & (np.abs(y) < half)), {}, {"half": half}


def _disk(spec):
    r = float(spec.parameters.get("radius", 1.0))
    g = box_grid(spec.level)
    x, y = g.mesh()
    return CellSet(g, x ** 2 + y ** 2 < r ** 2), {}, {"radius": r}


def _slit_disk(spec):
    omega, _, meta = _disk(spec)
    g = omega.grid
    h = g.spacing
    x, y = g.mesh()
    # the slit [0, 1) x {0} becomes the row of cells just above y = 0
    slit = (x > 0) & (y > 0) & (y < h) & omega.mask
    return CellSet(g, omega.mask & ~slit), {"slit": CellSet(g, slit)}, meta


def comb_rectangles(level):
    """Cell-index rectangles (x0, x1, y0, y1), half-open, of the truncated comb families.

    Gaps are one cell wide; family i keeps squares of side 2^(L-i) - 1 cells,
    so it is kept while that is at least 3 cells (i <= L - 2).
    """
    i_star = level - 2
    if i_star < 2:
        raise ResolutionError(f"comb_4_2 needs level >= 4 for its first rectangle family, got {level}")
    rects = []
    for i in range(2, i_star + 1):
        s = 2 ** (level - i)
        for k in range(2 ** i):
            y0 = -2 ** (level - 1) + k * s
            rects.append((-2 * s, -s - 1, y0, y0 + s - 1, i))
            rects.append((s + 1, 2 * s, y0, y0 + s - 1, i))
    return rects, i_star


def _comb(spec):
    g = box_grid(spec.level)
    L = spec.level
    oi = -np.asarray(g.origin_index)  # array index of world coordinate 0
    N = 2 ** L
    mask = np.zeros(g.shape, dtype=bool)
    mask[oi[0] - N:oi[0] + N, oi[1] - N:oi[1] + N] = True
    slit = np.zeros_like(mask)
    slit[oi[0], oi[1] - N // 2:oi[1] + N // 2] = True
    rects, i_star = comb_rectangles(L)
    removed = np.zeros_like(mask)
    for x0, x1, y0, y1, _ in rects:
        removed[oi[0] + x0:oi[0] + x1, oi[1] + y0:oi[1] + y1] = True
    mask &= ~(slit | removed)
    feats = {"slit": CellSet(g, slit), "rectangles": CellSet(g, removed)}
    return CellSet(g, mask), feats, {"i_star": i_star, "families": i_star - 1,
                                     "rectangles": len(rects), "gap_cells": 1}


def _cusp(spec):
    g = box_grid(spec.level)
    x, y = g.mesh()
    mask = (x > 0) & (x < 1) & (y > 0) & (y < x ** 2)
    tip = tuple(int(v) for v in g.index_of((0.0, 0.0)))
    return CellSet(g, mask), {}, {"tip_cell": list(tip)}


def smith_volterra_intervals(depth):
    """Closed intervals left after ``depth`` steps: step k removes the middle 4^-k of each piece."""
    ivs = [(0.0, 1.0)]
    for k in range(1, depth + 1):
        gap = 4.0 ** -k
        nxt = []
        for a, b in ivs:
            m = 0.5 * (a + b)
            nxt += [(a, m - gap / 2), (m + gap / 2, b)]
        ivs = nxt
    return ivs


def dist_to_intervals(x, ivs):
    x = np.asarray(x, dtype=float)
    d = np.full(x.shape, np.inf)
    for a, b in ivs:
        d = np.minimum(d, np.maximum(np.maximum(a - x, x - b), 0.0))
    return d


def cantor_depth(level):
    """Deepest step whose removed gaps are at least a quarter cell wide."""
    return max(1, int(math.floor((level + 2) / 2)))


def _fat_cantor(spec):
    margin = int(spec.parameters.get("margin", 2))
    g = box_grid(spec.level, dim=3, margin=margin)
    depth = int(spec.parameters.get("depth", cantor_depth(spec.level)))
    ivs = smith_volterra_intervals(depth)
    c = g.axis_centers(0)
    inside = (np.abs(c) < 1)
    d1 = dist_to_intervals(c, ivs)
    dist2 = np.sqrt(d1[:, None] ** 2 + d1[None, :] ** 2)
    unit = (c >= 0) & (c <= 1)
    base = unit[:, None] & unit[None, :]
    wedge = base[:, :, None] & (np.abs(c)[None, None, :] <= dist2[:, :, None])
    box = inside[:, None, None] & inside[None, :, None] & inside[None, None, :]
    return CellSet(g, box & ~wedge), {"wedge": CellSet(g, wedge & box)}, \
        {"cantor_depth": depth, "intervals": len(ivs)}


def _random_polyomino(spec):
    rng = np.random.default_rng(spec.seed)
    n = 2 ** spec.level
    pad = max(2, n // 16)
    count = int(spec.parameters.get("rectangles", 6))
    g = Grid(2, spec.level, (n, n))
    mask = np.zeros((n, n), dtype=bool)
    for _ in range(count):
        x0, y0 = rng.integers(pad, n - pad - 2, size=2)
        w, h = rng.integers(2, max(3, n // 3), size=2)
        mask[x0:min(x0 + w, n - pad), y0:min(y0 + h, n - pad)] = True
    lab, k = ndimage.label(mask)
    if k > 1:
        sizes = np.bincount(lab.ravel())[1:]
        mask = lab == (1 + int(np.argmax(sizes)))
    return CellSet(g, mask), {}, {"rectangles": count}


_BUILDERS = {"square": _square, "disk": _disk, "slit_disk": _slit_disk, "comb_4_2": _comb,
             "cusp": _cusp, "fat_cantor_3d": _fat_cantor, "random_polyomino": _random_polyomino}


def build_domain(spec: DomainSpec) -> Domain:
    omega, feats, meta = _BUILDERS[spec.kind](spec)
    if omega.is_empty():
        raise ResolutionError(f"{spec.kind} has no cells at level {spec.level}")
    if omega.touches_frame():
        raise ResolutionError(f"{spec.kind} touches the grid frame")
    return Domain(spec, omega, feats, dict(meta, kind=spec.kind, level=spec.level, seed=spec.seed))


def make_domain(spec: DomainSpec) -> CellSet:
    return build_domain(spec).omega


def domain(kind, level, seed=0, **parameters) -> Domain:
    return build_domain(DomainSpec(kind, level, parameters, seed))


def max_density(omega: CellSet, radii):
    """Per cell: max over radii of the fraction of the ball (in cells) lying in omega."""
    grid = omega.grid
    best = np.zeros(grid.shape)
    for r in radii:
        rc = r / grid.spacing
        counts = ball_counts(omega.mask, rc)
        best = np.maximum(best, counts / ball_kernel(grid.dim, rc).sum())
    return best


def classify_density(omega: CellSet, radii, region: CellSet = None):
    """Boundary cells whose upper density estimate exceeds 1/2 + 2h/min(radii).

    Boundary cells are the cells outside omega touching it.  ``fraction`` is
    taken over the boundary cells inside ``region`` when one is given.
    """
    grid = omega.grid
    radii = list(radii)
    if min(radii) < 2 * grid.spacing:
        from .errors import ScaleError
        raise ScaleError(f"radii must be >= 2h = {2 * grid.spacing}")
    bnd = outer_boundary(omega).mask
    if region is not None:
        bnd = bnd & region.mask
    dens = max_density(omega, radii)
    high = bnd & (dens > 0.5 + 2 * grid.spacing / min(radii))
    total = int(bnd.sum())
    return CellSet(grid, high), (float(high.sum()) / total if total else 0.0)


def density_at_cell(omega: CellSet, cell, radii):
    """|B(x, r) ∩ omega| / r^n at one cell center for each radius."""
    from .grid import ball_offsets
    grid = omega.grid
    out = []
    for r in radii:
        offs = ball_offsets(grid.dim, r / grid.spacing) + np.asarray(cell)
        ok = np.all((offs >= 0) & (offs < np.asarray(grid.shape)), axis=1)
        hits = omega.mask[tuple(offs[ok].T)].sum()
        out.append(float(hits) * grid.cell_volume / r ** grid.dim)
    return out
