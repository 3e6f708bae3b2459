"""Planar machinery: Jordan cycles of cell sets, grid paths in complement
components, the strong perimeter extension, and the H-set diagnostic.

Coordinates follow the grid: array axis 0 is x, axis 1 is y, and cell
(i, j) covers [i, i+1] x [j, j+1] in vertex units.  Boundary edges are
oriented with the set on their left, so outer cycles run counterclockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import ContractViolation, InvalidInputError
from .grid import CellSet, full_structure, perimeter

# direction codes: 0 = +x, 1 = +y, 2 = -x, 3 = -y
_STEP = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]])


def _require_2d(E: CellSet):
    if E.grid.dim != 2:
        raise InvalidInputError("planar operations need a 2D grid")


def _pad_window(sl, pad, shape):
    return tuple(slice(max(s.start - pad, 0), min(s.stop + pad, n)) for s, n in zip(sl, shape))


@dataclass(frozen=True, eq=False)
class BoundaryCycle:
    """A closed face cycle of a cell boundary.

    ``inner`` and ``outer`` list, face by face in traversal order, the cell on
    the bounded side of the cycle and the cell across the face.  The bounded
    region itself is kept as a mask over ``window``.
    """

    vertices: np.ndarray = field(repr=False)
    sign: int
    spacing: float
    inner: np.ndarray = field(repr=False)
    outer: np.ndarray = field(repr=False)
    window: tuple = field(repr=False)
    region: np.ndarray = field(repr=False)
    parent: int = -1
    depth: int = 0

    @property
    def n_faces(self) -> int:
        return len(self.inner)

    @property
    def length(self) -> float:
        return self.n_faces * self.spacing

    def interior(self, grid) -> CellSet:
        mask = np.zeros(grid.shape, dtype=bool)
        mask[self.window] = self.region
        return CellSet(grid, mask)

    def interior_cells(self) -> np.ndarray:
        loc = np.argwhere(self.region)
        return loc + np.array([s.start for s in self.window])

    def to_json(self):
        return {"sign": "+" if self.sign > 0 else "-", "length": self.length,
                "depth": self.depth, "parent": self.parent,
                "vertices": self.vertices.tolist()}


def _boundary_edges(mask):
    """Directed boundary edges with the set on the left: (start vertices, dirs, inside cells, outside cells)."""
    starts, dirs, ins, outs = [], [], [], []
    # faces normal to x: between cells (i-1, j) and (i, j), vertical edge at x = i
    left, right = mask[:-1, :], mask[1:, :]
    i, j = np.nonzero(left & ~right)
    i = i + 1
    starts.append(np.stack([i, j], 1)); dirs.append(np.full(len(i), 1))
    ins.append(np.stack([i - 1, j], 1)); outs.append(np.stack([i, j], 1))
    i, j = np.nonzero(~left & right)
    i = i + 1
    starts.append(np.stack([i, j + 1], 1)); dirs.append(np.full(len(i), 3))
    ins.append(np.stack([i, j], 1)); outs.append(np.stack([i - 1, j], 1))
    # faces normal to y: between cells (i, j-1) and (i, j), horizontal edge at y = j
    below, above = mask[:, :-1], mask[:, 1:]
    i, j = np.nonzero(~below & above)
    j = j + 1
    starts.append(np.stack([i, j], 1)); dirs.append(np.full(len(i), 0))
    ins.append(np.stack([i, j], 1)); outs.append(np.stack([i, j - 1], 1))
    i, j = np.nonzero(below & ~above)
    j = j + 1
    starts.append(np.stack([i + 1, j], 1)); dirs.append(np.full(len(i), 2))
    ins.append(np.stack([i, j - 1], 1)); outs.append(np.stack([i, j], 1))
    return (np.concatenate(starts), np.concatenate(dirs),
            np.concatenate(ins), np.concatenate(outs))


def trace_cycles(mask):
    """Split the cell boundary of ``mask`` into closed edge cycles.

    At a pinch vertex (two set cells meeting only at a corner) the walk turns
    left, so the two cells end up on different cycles: the set is taken
    face-connected and its complement vertex-connected.
    Returns a list of index arrays into the edge arrays, plus the edge arrays.
    """
    starts, dirs, ins, outs = _boundary_edges(mask)
    ny = mask.shape[1] + 1
    key = starts[:, 0] * ny + starts[:, 1]
    order = np.argsort(key, kind="stable")
    skey = key[order]
    ends = starts + _STEP[dirs]
    end_key = ends[:, 0] * ny + ends[:, 1]
    lo = np.searchsorted(skey, end_key, side="left")
    hi = np.searchsorted(skey, end_key, side="right")
    nxt = np.empty(len(dirs), dtype=np.int64)
    for e in range(len(dirs)):
        a, b = lo[e], hi[e]
        if b - a == 1:
            nxt[e] = order[a]
        elif b - a == 2:
            want = (dirs[e] + 1) % 4
            c0, c1 = order[a], order[a + 1]
            nxt[e] = c0 if dirs[c0] == want else c1
            if dirs[nxt[e]] != want:
                raise ContractViolation("pinch vertex without a left turn")
        else:
            raise ContractViolation(f"boundary vertex with {b - a} outgoing edges")
    seen = np.zeros(len(dirs), dtype=bool)
    cycles = []
    for e0 in range(len(dirs)):
        if seen[e0]:
            continue
        cyc = []
        e = e0
        while not seen[e]:
            seen[e] = True
            cyc.append(e)
            e = nxt[e]
        if e != e0:
            raise ContractViolation("boundary walk did not close")
        cycles.append(np.array(cyc, dtype=np.int64))
    return cycles, (starts, dirs, ins, outs)


def _signed_area(verts):
    x, y = verts[:, 0].astype(float), verts[:, 1].astype(float)
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True, eq=False)
class JordanDecomposition:
    set: CellSet
    plus_cycles: tuple
    minus_cycles: tuple
    part_windows: tuple = field(repr=False)

    @property
    def cycles(self):
        """All cycles; plus cycles first. Parent indices refer to this list."""
        return self.plus_cycles + self.minus_cycles

    @property
    def parts(self):
        out = []
        for win, loc in self.part_windows:
            m = np.zeros(self.set.grid.shape, dtype=bool)
            m[win] = loc
            out.append(CellSet(self.set.grid, m))
        return out

    def minus_inside(self, j):
        """Indices (into ``minus_cycles``) of minus cycles nested inside plus cycle ``j``."""
        allc = self.cycles
        n_plus = len(self.plus_cycles)
        out = []
        for k, c in enumerate(self.minus_cycles):
            p = c.parent
            while p >= 0 and p != j:
                p = allc[p].parent
            if p == j:
                out.append(k)
        return out

    def to_json(self):
        return {"plus": [c.to_json() for c in self.plus_cycles],
                "minus": [c.to_json() for c in self.minus_cycles],
                "perimeter": sum(c.length for c in self.cycles)}

    def to_svg(self, scale=4.0) -> str:
        shape = self.set.grid.shape
        w, h = shape[0] * scale, shape[1] * scale
        lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:g}" height="{h:g}">']
        for c in self.cycles:
            pts = " ".join(f"{x * scale:g},{h - y * scale:g}" for x, y in c.vertices)
            colour = "#c0392b" if c.sign > 0 else "#2471a3"
            lines.append(f'<polygon points="{pts}" fill="none" stroke="{colour}" stroke-width="1"/>')
        lines.append("</svg>")
        return "\n".join(lines) + "\n"


def _fill_region(inner_mask, conn_outside):
    """Cells not reachable from the window border through ~inner_mask."""
    lab, _ = ndimage.label(~inner_mask, conn_outside)
    border = np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))
    outside = np.isin(lab, border[border > 0])
    return ~outside


def jordan_decompose(E: CellSet, check=True) -> JordanDecomposition:
    _require_2d(E)
    if E.is_empty():
        raise InvalidInputError("E is empty")
    if E.touches_frame():
        raise InvalidInputError("E touches the grid frame; its outer cycle is undefined")
    grid = E.grid
    mask = E.mask
    face, full = ndimage.generate_binary_structure(2, 1), full_structure(2)
    lab4, n4 = ndimage.label(mask, face)
    labc, nc = ndimage.label(~mask, full)
    exterior = labc[0, 0]
    sl4 = ndimage.find_objects(lab4)
    slc = ndimage.find_objects(labc)
    cycles, (starts, dirs, ins, outs) = trace_cycles(mask)
    plus, minus = [], []
    plus_of, minus_of = {}, {}
    for cyc in cycles:
        verts = starts[cyc]
        sign = 1 if _signed_area(verts) > 0 else -1
        if sign > 0:
            inner, outer = ins[cyc], outs[cyc]
            c = int(lab4[tuple(inner[0])])
            if c in plus_of:
                raise ContractViolation(f"component {c} has two outer cycles")
            win = _pad_window(sl4[c - 1], 1, grid.shape)
            region = _fill_region(lab4[win] == c, full)
            plus_of[c] = len(plus)
            plus.append((verts, sign, inner, outer, win, region))
        else:
            inner, outer = outs[cyc], ins[cyc]
            k = int(labc[tuple(inner[0])])
            if k == exterior:
                raise ContractViolation("clockwise cycle around the exterior")
            if k in minus_of:
                raise ContractViolation(f"hole {k} has two cycles")
            win = _pad_window(slc[k - 1], 1, grid.shape)
            region = _fill_region(labc[win] == k, face)
            minus_of[k] = len(minus)
            minus.append((verts, sign, inner, outer, win, region))
    n_plus = len(plus)
    built = []
    for idx, (verts, sign, inner, outer, win, region) in enumerate(plus + minus):
        if sign > 0:
            k = int(labc[tuple(outer[0])])
            parent = -1 if k == exterior else n_plus + minus_of[k]
        else:
            parent = plus_of[int(lab4[tuple(outer[0])])]
        built.append(dict(vertices=verts, sign=sign, spacing=grid.spacing, inner=inner,
                          outer=outer, window=win, region=region, parent=parent))
    depth = [0] * len(built)
    for idx in range(len(built)):
        d, p = 0, built[idx]["parent"]
        while p >= 0:
            d, p = d + 1, built[p]["parent"]
        depth[idx] = d
    allc = [BoundaryCycle(depth=d, **b) for b, d in zip(built, depth)]
    J = JordanDecomposition(E, tuple(allc[:n_plus]), tuple(allc[n_plus:]), ())
    parts = []
    for j, c in enumerate(J.plus_cycles):
        y = c.region.copy()
        off = np.array([s.start for s in c.window])
        for k in J.minus_inside(j):
            m = J.minus_cycles[k]
            cells = m.interior_cells() - off
            y[tuple(cells.T)] = False
        parts.append((c.window, y))
    J = JordanDecomposition(E, J.plus_cycles, J.minus_cycles, tuple(parts))
    if check:
        check_jordan(J)
    return J


def _inside(cycle: BoundaryCycle, cells) -> np.ndarray:
    off = np.array([s.start for s in cycle.window])
    stop = np.array([s.stop for s in cycle.window])
    ok = np.all((cells >= off) & (cells < stop), axis=1)
    out = np.zeros(len(cells), dtype=bool)
    loc = cells[ok] - off
    out[ok] = cycle.region[tuple(loc.T)]
    return out


def check_jordan(J: JordanDecomposition):
    grid = J.set.grid
    allc = J.cycles
    # (2) perimeter is the sum of cycle lengths
    total = sum(c.n_faces for c in allc)
    faces = int(round(perimeter(J.set) / grid.face_area))
    if total != faces:
        raise ContractViolation(f"cycle lengths {total} faces != perimeter {faces} faces")
    for idx, c in enumerate(allc):
        if c.parent >= 0:
            par = allc[c.parent]
            # (3) alternation of signs along the forest
            if par.sign == c.sign:
                raise ContractViolation(f"cycle {idx} nested directly in a same-sign cycle")
            # (1) nesting is containment
            if not _inside(par, c.interior_cells()).all():
                raise ContractViolation(f"cycle {idx} is not inside its parent {c.parent}")
        elif c.sign < 0:
            raise ContractViolation(f"minus cycle {idx} has no enclosing plus cycle")
    # (1) same-sign cycles at equal depth are disjoint (deeper ones are nested via parents)
    for sign in (1, -1):
        depths = {c.depth for c in allc if c.sign == sign}
        for d in depths:
            count = np.zeros(grid.shape, dtype=np.int32)
            for c in allc:
                if c.sign == sign and c.depth == d:
                    count[c.window] += c.region
            if count.max() > 1:
                raise ContractViolation(f"overlapping {'plus' if sign > 0 else 'minus'} cycles at depth {d}")
    # (4) parts are disjoint and reassemble E
    count = np.zeros(grid.shape, dtype=np.int32)
    for win, loc in J.part_windows:
        count[win] += loc
    if count.max() > 1:
        raise ContractViolation("parts overlap")
    if not np.array_equal(count == 1, J.set.mask):
        raise ContractViolation("parts do not reassemble E")
    return True


# -- paths -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridPath:
    """An 8-connected chain of cells; its polyline joins the cell centers."""

    cells: np.ndarray = field(repr=False)
    spacing: float
    interior_only: bool = False
    resolution_limited: bool = False

    @property
    def z(self):
        return tuple(int(v) for v in self.cells[0])

    @property
    def w(self):
        return tuple(int(v) for v in self.cells[-1])

    @property
    def length(self) -> float:
        if len(self.cells) < 2:
            return 0.0
        steps = np.diff(self.cells, axis=0)
        return float(np.sqrt((steps ** 2).sum(axis=1)).sum()) * self.spacing

    @property
    def chord(self) -> float:
        return float(np.hypot(*(self.cells[-1] - self.cells[0]))) * self.spacing

    @property
    def ratio(self) -> float:
        """length / |z - w|; 1 for a zero-length path."""
        return self.length / self.chord if self.chord > 0 else 1.0

    def vertices(self, grid):
        return (self.cells + 0.5) * grid.spacing + np.asarray(grid.origin)

    def to_json(self):
        return {"cells": self.cells.tolist(), "length": self.length,
                "interior_only": self.interior_only,
                "resolution_limited": self.resolution_limited}


class UnreachableError(ContractViolation):
    """No path joins the two cells inside the allowed set."""


_OFFSETS = ((1, 0), (0, 1), (1, 1), (1, -1))


def shortest_cell_path(allowed, z, w, spacing=1.0):
    """Dijkstra over the 8-connected graph of ``allowed`` cells.

    Steps cost ``spacing`` (face neighbours) or ``spacing * sqrt(2)`` (corner
    neighbours).  Returns an (m, 2) array of cells from z to w, or None.
    """
    allowed = np.asarray(allowed, dtype=bool)
    z, w = tuple(z), tuple(w)
    if not (allowed[z] and allowed[w]):
        return None
    if z == w:
        return np.array([z])
    # restrict to the connected piece containing z to keep the graph small
    lab, _ = ndimage.label(allowed, full_structure(2))
    if lab[z] != lab[w]:
        return None
    piece = lab == lab[z]
    sl = ndimage.find_objects(piece.astype(np.int8))[0]
    sub = piece[sl]
    off = np.array([s.start for s in sl])
    ids = np.full(sub.shape, -1, dtype=np.int64)
    n = int(sub.sum())
    ids[sub] = np.arange(n)
    rows, cols, wts = [], [], []
    for dx, dy in _OFFSETS:
        X, Y = sub.shape
        a = ids[max(0, -dx):X - max(0, dx), max(0, -dy):Y - max(0, dy)]
        b = ids[max(0, dx):X - max(0, -dx), max(0, dy):Y - max(0, -dy)]
        keep = (a >= 0) & (b >= 0)
        rows.append(a[keep]); cols.append(b[keep])
        wts.append(np.full(int(keep.sum()), math.hypot(dx, dy)))
    rows, cols, wts = map(np.concatenate, (rows, cols, wts))
    graph = csr_matrix((wts, (rows, cols)), shape=(n, n))
    src = ids[tuple(np.subtract(z, off))]
    dst = ids[tuple(np.subtract(w, off))]
    dist, pred = dijkstra(graph, directed=False, indices=src, return_predecessors=True)
    if not np.isfinite(dist[dst]):
        return None
    chain = [dst]
    while chain[-1] != src:
        chain.append(pred[chain[-1]])
    where = np.argwhere(sub)  # row-major order matches the id assignment
    return where[np.array(chain[::-1])] + off


def _as_cell(c):
    return tuple(int(v) for v in c)


def quasiconvex_path(component: CellSet, z, w) -> GridPath:
    """Shortest 8-connected path between two cells of a (closed) component."""
    _require_2d(component)
    z, w = _as_cell(z), _as_cell(w)
    for p in (z, w):
        if not component.mask[p]:
            raise InvalidInputError(f"cell {p} is not in the component")
    cells = shortest_cell_path(component.mask, z, w)
    if cells is None:
        raise UnreachableError(f"{z} and {w} lie in different pieces of the component")
    return GridPath(cells, component.grid.spacing)


def interior_path(component: CellSet, z, w, epsilon: float) -> GridPath:
    """Shortest path through interior cells of ``component`` (endpoints exempt).

    When no such path exists at this resolution, or it is longer than the
    closed-component path plus ``epsilon``, the best available path is
    returned with ``resolution_limited`` set.
    """
    _require_2d(component)
    grid = component.grid
    if epsilon < 2 * grid.spacing:
        from .errors import ScaleError
        raise ScaleError(f"epsilon must be >= 2h = {2 * grid.spacing}")
    z, w = _as_cell(z), _as_cell(w)
    closed = quasiconvex_path(component, z, w)
    if z == w:
        return GridPath(closed.cells, grid.spacing, interior_only=True)
    inner = ndimage.binary_erosion(component.mask, full_structure(2), border_value=0)
    allowed = inner.copy()
    allowed[z] = allowed[w] = True
    cells = shortest_cell_path(allowed, z, w)
    if cells is None:
        return GridPath(closed.cells, grid.spacing, interior_only=False, resolution_limited=True)
    path = GridPath(cells, grid.spacing, interior_only=True)
    if path.length > closed.length + epsilon + 1e-12:
        return GridPath(cells, grid.spacing, interior_only=True, resolution_limited=True)
    return path


# -- strong perimeter extension ----------------------------------------------

TUBE_RADII = (3, 6, 12)


def greedy_arcs(flags):
    """Split a cyclic 0/1 face sequence into arcs whose overlap fraction is >= 1/2.

    An arc starts at a flagged face and grows while the flagged fraction
    stays >= 1/2; it is cut back to its last flagged face.  Returns
    ``(arcs, closed)`` where arcs are arrays of cycle positions; ``closed``
    means every face is flagged and the single arc is the whole cycle.
    """
    flags = np.asarray(flags, dtype=bool)
    m = len(flags)
    if not flags.any():
        return [], False
    if flags.all():
        return [np.arange(m)], True
    first = int(np.nonzero(flags & ~np.roll(flags, 1))[0][0])
    order = (np.arange(m) + first) % m
    f = flags[order]
    arcs, i = [], 0
    while i < m:
        if not f[i]:
            i += 1
            continue
        cnt, last = 0, i
        for k in range(i, m):
            cnt += f[k]
            if 2 * cnt < k - i + 1:
                break
            if f[k]:
                last = k
        arcs.append(order[i:last + 1])
        i = last + 1
    return arcs, False


def _runs(positions, flags):
    """Maximal flagged runs (lists of positions) inside an arc."""
    runs, cur = [], []
    for p in positions:
        if flags[p]:
            cur.append(p)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return runs


def _enclosed(walls, region):
    """Face-connected pieces of ``region`` whose face neighbours are all walls."""
    lab, n = ndimage.label(region & ~walls)
    if n == 0:
        return np.zeros_like(walls)
    lab_p = np.pad(lab, 1)
    walls_p = np.pad(walls, 1)
    open_ = np.zeros(n + 1, dtype=bool)
    core = lab_p[1:-1, 1:-1]
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nb_lab = lab_p[1 + dx:lab_p.shape[0] - 1 + dx, 1 + dy:lab_p.shape[1] - 1 + dy]
        nb_wall = walls_p[1 + dx:walls_p.shape[0] - 1 + dx, 1 + dy:walls_p.shape[1] - 1 + dy]
        bad = (core > 0) & (nb_lab != core) & ~nb_wall
        open_[np.unique(core[bad])] = True
    keep = ~open_
    keep[0] = False
    return keep[lab]


def _arc_region(K, inner, anchors, runs_cells, z, w, radius):
    """Walls and enclosed cells for one arc, in window coordinates; None if a path is missing."""
    seed = np.zeros(K.shape, dtype=bool)
    seed[tuple(anchors.T)] = True
    tube = ndimage.binary_dilation(seed, full_structure(2), iterations=radius)
    allowed = inner & tube
    walls = seed.copy()
    paths = []
    for a, b in [(z, w)] + [(r1[-1], r2[0]) for r1, r2 in zip(runs_cells, runs_cells[1:])]:
        allow = allowed.copy()
        allow[tuple(a)] = allow[tuple(b)] = True
        cells = shortest_cell_path(allow, a, b)
        if cells is None:
            return None
        walls[tuple(cells.T)] = True
        paths.append(cells)
    F = walls | _enclosed(walls, K & tube)
    return F, paths


def _process_arc(K, inner, anchor_of, arc, flags, off, spacing):
    """Walls plus enclosed region for an arc; splits at excursions whose bridge fails."""
    runs = _runs(arc, flags)
    anchors = np.array([anchor_of[p] for p in arc if flags[p]]) - off
    runs_cells = [np.array([anchor_of[p] for p in r]) - off for r in runs]
    z, w = runs_cells[0][0], runs_cells[-1][-1]
    for radius in TUBE_RADII:
        got = _arc_region(K, inner, anchors, runs_cells, z, w, radius)
        if got is not None:
            F, paths = got
            rep = {"faces": len(arc), "overlap_faces": int(len(anchors)),
                   "z": (z + off).tolist(), "w": (w + off).tolist(),
                   "gamma_length": GridPath(paths[0], spacing).length,
                   "bridges": len(paths) - 1, "tube_radius": radius,
                   "f_cells": int(F.sum()), "resolution_limited": False}
            return [(F, rep)]
    if len(runs) > 1:
        # cut at the longest excursion and treat both sides as separate arcs
        gaps = []
        for r1, r2 in zip(runs, runs[1:]):
            i1, i2 = list(arc).index(r1[-1]), list(arc).index(r2[0])
            gaps.append(i2 - i1)
        cut = int(np.argmax(gaps))
        pos = list(arc).index(runs[cut][-1]) + 1
        left, right = arc[:pos], arc[list(arc).index(runs[cut + 1][0]):]
        return (_process_arc(K, inner, anchor_of, left, flags, off, spacing)
                + _process_arc(K, inner, anchor_of, right, flags, off, spacing))
    rep = {"faces": len(arc), "overlap_faces": int(len(anchors)),
           "z": (z + off).tolist(), "w": (w + off).tolist(), "gamma_length": None,
           "bridges": 0, "tube_radius": None, "f_cells": 0, "resolution_limited": True}
    return [(None, rep)]


def _cycle_modifications(cycle: BoundaryCycle, omega, clab, labeling, grid):
    """Cells to add (Ω_i outside the domain) and to remove (Ω_i inside) for one cycle.

    Returns (add_cells, remove_cells, report).
    """
    d, o = cycle.inner, cycle.outer
    om_d, om_o = omega[tuple(d.T)], omega[tuple(o.T)]
    cl_d, cl_o = clab[tuple(d.T)], clab[tuple(o.T)]
    add, remove, report = [], [], []
    cases = []
    for i in np.unique(cl_o[om_d & (cl_o > 0)]):
        cases.append((int(i), "outside", om_d & (cl_o == i), o))
    for i in np.unique(cl_d[om_o & (cl_d > 0)]):
        cases.append((int(i), "inside", om_o & (cl_d == i), d))
    for i, case, flags, anchor_of in cases:
        if flags.sum() < 2:
            continue
        win = labeling.window(i - 1, pad=2)
        lo = np.array([sl.start for sl in win])
        K = clab[win] == i
        inner = ndimage.binary_erosion(K, full_structure(2), border_value=0)
        arcs, closed = greedy_arcs(flags)
        comp_rep = {"component": i - 1, "side": case, "closed": closed, "arcs": []}
        for arc in arcs:
            if closed:
                seed = np.zeros(K.shape, dtype=bool)
                seed[tuple((anchor_of[flags] - lo).T)] = True
                F = ndimage.binary_dilation(seed, full_structure(2)) & K
                pieces = [(F, {"faces": len(arc), "overlap_faces": int(flags.sum()),
                               "gamma_length": None, "bridges": 0, "tube_radius": 1,
                               "f_cells": int(F.sum()), "resolution_limited": False})]
            else:
                pieces = _process_arc(K, inner, anchor_of, arc, flags, lo, grid.spacing)
            for F, rep in pieces:
                comp_rep["arcs"].append(rep)
                if F is None:
                    continue
                cells = np.argwhere(F) + lo
                (add if case == "outside" else remove).append(cells)
        report.append(comp_rep)
    cat = lambda xs: np.concatenate(xs) if xs else np.zeros((0, 2), dtype=np.int64)
    return cat(add), cat(remove), report


@dataclass(frozen=True, eq=False)
class ExtensionResult:
    extended: CellSet
    perimeter_in: float
    perimeter_out: float
    overlap_length: float
    hset_overlap_length: float
    baseline_overlap_length: float
    constant: float
    arcs_report: list = field(repr=False, default_factory=list)

    def to_json(self):
        c = self.constant
        return {"perimeter_in": self.perimeter_in, "perimeter_out": self.perimeter_out,
                "overlap_length": self.overlap_length,
                "hset_overlap_length": self.hset_overlap_length,
                "baseline_overlap_length": self.baseline_overlap_length,
                "constant": c if math.isfinite(c) else None,
                "per_component": self.arcs_report}


def boundary_overlap(S: CellSet, omega: CellSet, clab):
    """Lengths of ∂S on ∂Ω, split into (faces against component closures, other faces)."""
    comp = hset = 0
    s, om = S.mask, omega.mask
    inK = clab > 0
    for a in range(2):
        sl0 = [slice(None)] * 2
        sl1 = [slice(None)] * 2
        sl0[a], sl1[a] = slice(None, -1), slice(1, None)
        s0, s1 = s[tuple(sl0)], s[tuple(sl1)]
        o0, o1 = om[tuple(sl0)], om[tuple(sl1)]
        k0, k1 = inK[tuple(sl0)], inK[tuple(sl1)]
        cut = (s0 != s1) & (o0 != o1)
        other_in_k = np.where(o0, k1, k0)
        comp += int((cut & other_in_k).sum())
        hset += int((cut & ~other_in_k).sum())
    return comp * S.grid.spacing, hset * S.grid.spacing


def _labels_for(omega, labeling):
    from .grid import complement_components
    if labeling is None:
        labeling = complement_components(omega)
    return labeling, labeling.closure_labels()


def _apply(region_cells, grid, add, remove):
    m = np.zeros(grid.shape, dtype=bool)
    m[tuple(region_cells.T)] = True
    if len(add):
        m[tuple(add.T)] = True
    if len(remove):
        m[tuple(remove.T)] = False
    return m


def _finish(E, omega, Et_mask, clab, baseline, report):
    grid = E.grid
    Et = CellSet(grid, Et_mask)
    if not np.array_equal(Et.mask & omega.mask, E.mask & omega.mask):
        raise ContractViolation("extension differs from E inside omega")
    p_in = perimeter(E, omega)
    p_out = perimeter(Et)
    ov, hov = boundary_overlap(Et, omega, clab)
    bov = sum(boundary_overlap(baseline, omega, clab))
    if p_in > 0:
        const = p_out / p_in
    else:
        const = 1.0 if p_out == 0 else math.inf
    return ExtensionResult(Et, p_in, p_out, ov, hov, bov, const, report)


def strong_perimeter_extend_jordan(E: CellSet, omega: CellSet, labeling=None) -> ExtensionResult:
    """Push the boundary of a Jordan domain off ∂Ω through the complement components."""
    _require_2d(E)
    if E.grid != omega.grid:
        raise ContractViolation("E and omega live on different grids")
    J = jordan_decompose(E)
    if len(J.plus_cycles) != 1 or J.minus_cycles:
        extra = (J.plus_cycles[1:] + J.minus_cycles)[0]
        raise InvalidInputError(f"E is not a Jordan domain: extra {'plus' if extra.sign > 0 else 'minus'}"
                                f" cycle of length {extra.length:g} at vertex {extra.vertices[0].tolist()}")
    labeling, clab = _labels_for(omega, labeling)
    c = J.plus_cycles[0]
    add, remove, rep = _cycle_modifications(c, omega.mask, clab, labeling, E.grid)
    Et = _apply(c.interior_cells(), E.grid, add, remove)
    return _finish(CellSet(E.grid, E.mask & omega.mask), omega, Et, clab, E,
                   [{"cycle": 0, "sign": "+", "components": rep}])


def strong_perimeter_extend_set(E: CellSet, omega: CellSet, baseline: CellSet = None,
                                labeling=None) -> ExtensionResult:
    """Extend every Jordan piece of the baseline E' and recombine.

    Each extended plus domain loses the extended minus domains nested inside it; the results are united.
    """
    _require_2d(E)
    grid = E.grid
    if E.grid != omega.grid:
        raise ContractViolation("E and omega live on different grids")
    if not E.issubset(omega):
        raise ContractViolation("E must lie inside omega")
    base = E if baseline is None else baseline
    if not np.array_equal(base.mask & omega.mask, E.mask):
        raise ContractViolation("baseline extension does not restrict to E on omega")
    labeling, clab = _labels_for(omega, labeling)
    J = jordan_decompose(base)
    mods = [_cycle_modifications(c, omega.mask, clab, labeling, grid) for c in J.cycles]
    n_plus = len(J.plus_cycles)
    out = np.zeros(grid.shape, dtype=bool)
    for j, c in enumerate(J.plus_cycles):
        add, remove, _ = mods[j]
        P = _apply(c.interior_cells(), grid, add, remove)
        for k in J.minus_inside(j):
            m = J.minus_cycles[k]
            madd, mremove, _ = mods[n_plus + k]
            M = _apply(m.interior_cells(), grid, madd, mremove)
            P &= ~M
        out |= P
    report = [{"cycle": idx, "sign": "+" if c.sign > 0 else "-", "components": mods[idx][2]}
              for idx, c in enumerate(J.cycles) if mods[idx][2]]
    return _finish(E, omega, out, clab, base, report)


def hole_fill_baseline(E: CellSet, omega: CellSet) -> CellSet:
    """E plus every hole of E made only of cells outside omega."""
    filled = ndimage.binary_fill_holes(E.mask)
    holes, n = ndimage.label(filled & ~E.mask)
    if n == 0:
        return E
    bad = np.unique(holes[omega.mask & (holes > 0)])
    keep = (holes > 0) & ~np.isin(holes, bad)
    return CellSet(E.grid, E.mask | keep)


def ring_baseline(E: CellSet, omega: CellSet) -> CellSet:
    """E plus the cells outside omega that touch E."""
    ring = ndimage.binary_dilation(E.mask, full_structure(2)) & ~omega.mask
    return CellSet(E.grid, E.mask | ring)


def hset_report(omega: CellSet, labeling=None):
    """Boundary cells of Ω in no component closure, with a length estimate.

    Each face between the H-set and Ω counts h/2: a curve-like H-set is seen
    from both of its sides.
    """
    _require_2d(omega)
    from .grid import outer_boundary
    labeling, clab = _labels_for(omega, labeling)
    H = outer_boundary(omega).mask & (clab == 0)
    faces = 0
    om = omega.mask
    for a in range(2):
        sl0 = [slice(None)] * 2
        sl1 = [slice(None)] * 2
        sl0[a], sl1[a] = slice(None, -1), slice(1, None)
        faces += int((H[tuple(sl0)] & om[tuple(sl1)]).sum() + (om[tuple(sl0)] & H[tuple(sl1)]).sum())
    return CellSet(omega.grid, H), faces * omega.grid.spacing / 2
