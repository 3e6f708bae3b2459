"""Whitney decomposition of a cell set, tent partition of unity, and the cube-mean smoothing.

Distances to the boundary are measured against the face boundary of ``A``
(off-grid cells count as outside).  Every quantity involved lives on the
integer vertex lattice, so the Whitney conditions are checked exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ContractViolation, InvalidInputError, ScaleError
from .grid import CellSet, GridFunction, total_variation

GRADIENT_CAP = 64.0


@dataclass(frozen=True)
class DyadicCube:
    level: int
    index: tuple
    at_resolution_floor: bool = False

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    def cells(self, grid):
        """Slice tuple of the grid cells covered by the cube."""
        s = 2 ** (grid.level - self.level)
        return tuple(slice(j * s - o, (j + 1) * s - o)
                     for j, o in zip(self.index, grid.origin_index))

    def to_json(self):
        return {"level": self.level, "index": list(self.index),
                "at_resolution_floor": self.at_resolution_floor}


def _boundary_vertices(mask):
    """Vertices (shape + 1 per axis) where cells of both kinds meet."""
    padded = np.pad(mask, 1, constant_values=False)
    n = mask.ndim
    any_in = np.zeros(tuple(s + 1 for s in mask.shape), dtype=bool)
    all_in = np.ones_like(any_in)
    for corner in np.ndindex(*([2] * n)):
        sl = tuple(slice(c, c + s + 1) for c, s in zip(corner, mask.shape))
        any_in |= padded[sl]
        all_in &= padded[sl]
    return any_in & ~all_in


def vertex_distance(mask):
    """Euclidean distance (in cells) from every lattice vertex to the face boundary of ``mask``."""
    bnd = _boundary_vertices(mask)
    if not bnd.any():
        raise InvalidInputError("set has no boundary inside the grid")
    return ndimage.distance_transform_edt(~bnd)


def cell_boundary_distance(mask):
    """Per cell: distance (in cells) from the closed cell to the face boundary."""
    vd = vertex_distance(mask)
    out = np.full(mask.shape, np.inf)
    for corner in np.ndindex(*([2] * mask.ndim)):
        sl = tuple(slice(c, c + s) for c, s in zip(corner, mask.shape))
        out = np.minimum(out, vd[sl])
    return out


def center_boundary_distance(mask):
    """Per cell: distance (in cells) from the cell center to the face boundary.

    Seen from a half-integer point, the nearest point of a lattice face lies on
    the half-integer lattice, so an EDT on the twice refined lattice is exact.
    A refined point is on the boundary when the cells whose closures contain
    it are of both kinds.
    """
    n = mask.ndim
    padded = np.pad(mask, 1, constant_values=False)
    fine = np.zeros(tuple(2 * s + 1 for s in mask.shape), dtype=bool)
    for parity in np.ndindex(*([2] * n)):
        # even fine coordinate = vertex (two cells meet), odd = cell interior
        choices = [(0, 1) if p == 0 else (1,) for p in parity]
        lengths = [s + 1 if p == 0 else s for p, s in zip(parity, mask.shape)]
        any_in = np.zeros(lengths, dtype=bool)
        all_in = np.ones(lengths, dtype=bool)
        for offs in _product(choices):
            sl = tuple(slice(o, o + m) for o, m in zip(offs, lengths))
            any_in |= padded[sl]
            all_in &= padded[sl]
        fine[tuple(slice(p, None, 2) for p in parity)] = any_in & ~all_in
    if not fine.any():
        raise InvalidInputError("set has no boundary inside the grid")
    dist = ndimage.distance_transform_edt(~fine)
    return dist[tuple(slice(1, None, 2) for _ in range(n))] / 2.0


def _product(choices):
    return itertools.product(*choices)


def _blocks(arr, s, pads, fill):
    """Pad then view ``arr`` as blocks of side ``s``; returns (n_blocks..., s, s[, s])."""
    n = arr.ndim
    widths = []
    for p, size in zip(pads, arr.shape):
        total = p + size
        widths.append((p, (-total) % s))
    padded = np.pad(arr, widths, constant_values=fill)
    shp = []
    for size in padded.shape:
        shp += [size // s, s]
    view = padded.reshape(shp)
    axes = tuple(range(1, 2 * n, 2))
    return view, axes


@dataclass(frozen=True, eq=False)
class WhitneyDecomposition:
    open_set: CellSet
    cubes: tuple
    labels: np.ndarray = field(repr=False)
    dist: np.ndarray = field(repr=False)
    neighbors: np.ndarray = field(repr=False)

    @property
    def grid(self):
        return self.open_set.grid

    def __len__(self):
        return len(self.cubes)

    @property
    def floor_count(self):
        return sum(c.at_resolution_floor for c in self.cubes)

    @property
    def floor_area(self):
        return self.floor_count * self.grid.cell_volume

    def neighbor_graph(self):
        adj = [[] for _ in self.cubes]
        for a, b in self.neighbors:
            adj[a].append(int(b))
            adj[b].append(int(a))
        return adj

    def distance(self, i) -> float:
        """dist(Q_i, ∂A) in world units."""
        return float(self.dist[i]) * self.grid.spacing

    def check(self):
        """Assert containment, tiling, the distance window and neighbour sizes; floor cubes skip the distance window."""
        grid = self.grid
        n = grid.dim
        covered = np.zeros(grid.shape, dtype=np.int64)
        for i, q in enumerate(self.cubes):
            sl = q.cells(grid)
            block = self.open_set.mask[sl]
            if block.shape != tuple([2 ** (grid.level - q.level)] * n) or not block.all():
                raise ContractViolation(f"cube {i} {q} is not inside A")
            covered[sl] += 1
        if (covered > 1).any():
            raise ContractViolation("cube interiors overlap")
        if not np.array_equal(covered == 1, self.open_set.mask):
            raise ContractViolation("cubes do not tile A")
        for i, q in enumerate(self.cubes):
            if q.at_resolution_floor:
                continue
            d, ell = self.distance(i), q.side
            if not (ell <= d <= 4 * math.sqrt(n) * ell):
                raise ContractViolation(f"cube {i} breaks side <= dist <= 4 sqrt(n) side: side {ell}, dist {d}")
        for a, b in self.neighbors:
            la, lb = self.cubes[a].side, self.cubes[b].side
            if not (la / 4 <= lb <= 4 * la):
                raise ContractViolation(f"neighbours {a},{b} differ in size by more than 4: {la} vs {lb}")
        return True

    def to_json(self):
        return [c.to_json() for c in self.cubes]


def whitney_decompose(A: CellSet, check=True) -> WhitneyDecomposition:
    """Maximal dyadic cubes Q inside A with side(Q) <= dist(Q, ∂A).

    Cells left uncovered at the finest level touch ∂A and become single-cell
    cubes flagged ``at_resolution_floor``.
    """
    grid = A.grid
    mask = A.mask
    if not mask.any():
        raise InvalidInputError("A is empty")
    if mask.all():
        raise InvalidInputError("A is the whole grid; no boundary to measure distance to")
    n, L = grid.dim, grid.level
    cellmin = cell_boundary_distance(mask)
    labels = np.full(grid.shape, -1, dtype=np.int64)
    cubes, dists = [], []
    oi = grid.origin_index
    top = 2 ** int(math.floor(math.log2(max(grid.shape))))
    s = top
    while s >= 1:
        k = L - int(round(math.log2(s)))
        pads = [o % s for o in oi]
        inA, axes = _blocks(mask, s, pads, False)
        dmin, _ = _blocks(cellmin, s, pads, 0.0)
        free, _ = _blocks(labels < 0, s, pads, False)
        ok = inA.all(axis=axes) & (dmin.min(axis=axes) >= s) & free.all(axis=axes)
        dvals = dmin.min(axis=axes)
        for b in zip(*np.nonzero(ok)):
            j = tuple(int(bi) + (o - p) // s for bi, o, p in zip(b, oi, pads))
            q = DyadicCube(k, j)
            labels[q.cells(grid)] = len(cubes)
            cubes.append(q)
            dists.append(float(dvals[b]))
        s //= 2
    rest = np.argwhere(mask & (labels < 0))
    for c in rest:
        j = tuple(int(ci) + o for ci, o in zip(c, oi))
        labels[tuple(c)] = len(cubes)
        cubes.append(DyadicCube(L, j, at_resolution_floor=True))
        dists.append(float(cellmin[tuple(c)]))
    labels.setflags(write=False)
    W = WhitneyDecomposition(A, tuple(cubes), labels, np.array(dists),
                             _neighbor_pairs(labels))
    if check:
        W.check()
    return W


def _neighbor_pairs(labels):
    """Unordered pairs of distinct cubes whose closures meet (face, edge or vertex contact)."""
    n = labels.ndim
    pairs = []
    for off in np.ndindex(*([3] * n)):
        off = tuple(o - 1 for o in off)
        if off <= (0,) * n:
            continue
        a_sl, b_sl = [], []
        for o, size in zip(off, labels.shape):
            a_sl.append(slice(max(0, -o), size - max(0, o)))
            b_sl.append(slice(max(0, o), size - max(0, -o)))
        a, b = labels[tuple(a_sl)], labels[tuple(b_sl)]
        sel = (a >= 0) & (b >= 0) & (a != b)
        pairs.append(np.stack([np.minimum(a[sel], b[sel]), np.maximum(a[sel], b[sel])], axis=1))
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    allp = np.concatenate(pairs)
    return np.unique(allp, axis=0) if len(allp) else allp.reshape(0, 2)


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Tent bumps grouped by cube side.

    ``groups`` holds tuples ``(s, cube_ids, base, psi)`` where ``s`` is the cube
    side in cells, ``base`` the grid index of each bump window's corner and
    ``psi`` the bump values on windows of side ``s + 2*spill``.
    """

    decomposition: WhitneyDecomposition
    groups: tuple = field(repr=False)
    total: np.ndarray = field(repr=False)
    gradient_bound_constant: float = 0.0

    def bump(self, i) -> np.ndarray:
        """Dense sampled ψ_i on the whole grid."""
        grid = self.decomposition.grid
        out = np.zeros(grid.shape)
        for s, ids, base, psi in self.groups:
            hit = np.nonzero(ids == i)[0]
            if len(hit):
                r = hit[0]
                win = tuple(slice(b, b + w) for b, w in zip(base[r], psi.shape[1:]))
                out[win] = psi[r]
                return out
        raise IndexError(i)

    def bump_sum(self) -> np.ndarray:
        grid = self.decomposition.grid
        out = np.zeros(grid.shape)
        for s, ids, base, psi in self.groups:
            _scatter(out, base, psi)
        return out

    def combine(self, coeffs) -> np.ndarray:
        """Σ_i coeffs[i] ψ_i sampled on the grid."""
        grid = self.decomposition.grid
        out = np.zeros(grid.shape)
        coeffs = np.asarray(coeffs, dtype=float)
        for s, ids, base, psi in self.groups:
            shape = (-1,) + (1,) * (psi.ndim - 1)
            _scatter(out, base, psi * coeffs[ids].reshape(shape))
        return out


def _window_index(base, wshape):
    """Absolute grid indices (per axis) for every window cell: list of arrays (m, *wshape)."""
    n = len(wshape)
    out = []
    for a in range(n):
        rng = np.arange(wshape[a]).reshape([-1 if b == a else 1 for b in range(n)])
        out.append(base[:, a].reshape((-1,) + (1,) * n) + rng[None, ...])
    return out


def _scatter(out, base, vals):
    idx = _window_index(base, vals.shape[1:])
    idx = [np.broadcast_to(i, vals.shape) for i in idx]
    np.add.at(out, tuple(idx), vals)


def _gather(arr, base, wshape):
    idx = _window_index(base, wshape)
    shape = (len(base),) + tuple(wshape)
    idx = [np.broadcast_to(i, shape) for i in idx]
    return arr[tuple(idx)]


def _tent(s, dim):
    """η on a window around a cube of side ``s`` cells; returns (spill, values)."""
    spill = int(math.ceil(s / 8.0 - 0.5)) if s > 4 else 0
    coords = np.arange(-spill, s + spill) + 0.5
    d_axis = np.maximum(np.maximum(0.0 - coords, coords - s), 0.0)
    grids = np.meshgrid(*([d_axis] * dim), indexing="ij")
    d = np.sqrt(sum(g ** 2 for g in grids))
    return spill, np.clip(1.0 - 8.0 * d / s, 0.0, 1.0)


def partition_of_unity(W: WhitneyDecomposition, check=True) -> PartitionOfUnity:
    grid = W.grid
    n, L = grid.dim, grid.level
    oi = np.asarray(grid.origin_index)
    by_side = {}
    for i, q in enumerate(W.cubes):
        by_side.setdefault(2 ** (L - q.level), []).append(i)
    raw = []
    total = np.zeros(grid.shape)
    for s, ids in sorted(by_side.items()):
        spill, eta = _tent(s, n)
        ids = np.asarray(ids)
        corner = np.array([W.cubes[i].index for i in ids]) * s - oi
        base = corner - spill
        if (base < 0).any() or (base + eta.shape[0] > np.asarray(grid.shape)).any():
            raise ContractViolation("bump support leaves the grid")
        vals = np.broadcast_to(eta, (len(ids),) + eta.shape).copy()
        _scatter(total, base, vals)
        raw.append((s, ids, base, vals))
    groups = []
    const = 0.0
    for s, ids, base, eta in raw:
        tot = _gather(total, base, eta.shape[1:])
        psi = np.where(eta > 0, eta / np.where(tot > 0, tot, 1.0), 0.0)
        psi.setflags(write=False)
        groups.append((s, ids, base, psi))
        const = max(const, _gradient_constant(psi, s))
    total.setflags(write=False)
    P = PartitionOfUnity(W, tuple(groups), total, const)
    if check:
        check_partition(P)
    return P


def _gradient_constant(psi, s):
    """max over bumps of side * |discrete gradient| (forward differences, zero outside the window)."""
    n = psi.ndim - 1
    padded = np.pad(psi, [(0, 0)] + [(1, 1)] * n)
    sq = np.zeros(padded.shape[:1] + tuple(x - 1 for x in padded.shape[1:]))
    for a in range(n):
        d = np.diff(padded, axis=a + 1)
        sl = [slice(None)] + [slice(None, -1) if b != a else slice(None) for b in range(n)]
        sq += d[tuple(sl)] ** 2
    return float(s * np.sqrt(sq.max())) if sq.size else 0.0


def check_partition(P: PartitionOfUnity, tol=1e-9):
    A = P.decomposition.open_set.mask
    ssum = P.bump_sum()
    if np.abs(ssum[A] - 1.0).max() > tol:
        raise ContractViolation("partition does not sum to 1 on A")
    from .grid import closure
    outside = ~closure(P.decomposition.open_set).mask
    if np.abs(ssum[outside]).max(initial=0.0) > 0:
        raise ContractViolation("partition is nonzero outside closure(A)")
    if P.gradient_bound_constant > GRADIENT_CAP:
        raise ContractViolation(f"gradient constant {P.gradient_bound_constant} exceeds {GRADIENT_CAP}")
    return True


def cube_means(u: GridFunction, W: WhitneyDecomposition) -> np.ndarray:
    lab = W.labels
    inside = lab >= 0
    sums = np.bincount(lab[inside], weights=u.values[inside], minlength=len(W.cubes))
    counts = np.bincount(lab[inside], minlength=len(W.cubes))
    return sums / counts


def smooth_bv(u: GridFunction, B: CellSet, A: CellSet, partition: PartitionOfUnity = None):
    """Replace u on A by Σ_i (mean of u over Q_i) ψ_i; keep u elsewhere."""
    if u.grid != A.grid or B.grid != A.grid:
        raise ContractViolation("u, A, B must share the grid")
    if not A.issubset(B):
        raise ContractViolation("A is not contained in B")
    if partition is None:
        partition = partition_of_unity(whitney_decompose(A))
    W = partition.decomposition
    if not np.array_equal(W.open_set.mask, A.mask):
        raise ContractViolation("partition was built for a different A")
    smooth = partition.combine(cube_means(u, W))
    out = np.where(A.mask, smooth, u.values)
    return GridFunction(u.grid, out)


def bv_norm(u: GridFunction, region: CellSet) -> float:
    return u.l1_norm(region) + total_variation(u, region)[0]


def collar(A: CellSet, width: float) -> CellSet:
    """Cells whose centers lie within ``width`` of the face boundary of A."""
    d = center_boundary_distance(A.mask) * A.grid.spacing
    return CellSet(A.grid, d < width)


def collar_variation_profile(v: GridFunction, A: CellSet, widths):
    """TV mass of ``v`` on faces touching the collar B(∂A, w), for each width w."""
    grid = v.grid
    widths = list(widths)
    if any(w < 2 * grid.spacing for w in widths):
        raise ScaleError(f"collar widths must be >= 2h = {2 * grid.spacing}")
    if any(b > a for a, b in zip(widths, widths[1:])):
        raise InvalidInputError("widths must be descending")
    d = center_boundary_distance(A.mask) * grid.spacing
    _, meas = total_variation(v)
    return [(w, meas.restrict(CellSet(grid, d < w)).total) for w in widths]
