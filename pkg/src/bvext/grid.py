"""Uniform dyadic grids, cell sets, grid functions and their discrete variation.

A grid of level ``L`` has spacing ``h = 2**-L``.  Array axis ``a`` is world
axis ``a``; cell ``i`` along that axis covers ``[origin + i*h, origin + (i+1)*h]``.
Faces are stored per axis: ``weights[a][idx]`` is the face between cell
``idx`` and ``idx + e_a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal

from .errors import (
    ContractViolation,
    InvalidInputError,
    ScaleError,
    UndefinedRatioError,
)


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    dim: int
    level: int
    shape: tuple
    origin: tuple = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidInputError(f"dim must be 2 or 3, got {self.dim}")
        if self.level < 1:
            raise InvalidInputError(f"level must be >= 1, got {self.level}")
        shape = tuple(int(s) for s in self.shape)
        if len(shape) != self.dim or min(shape) <= 0:
            raise InvalidInputError(f"bad cells_per_axis {self.shape} for dim {self.dim}")
        object.__setattr__(self, "shape", shape)
        origin = (0.0,) * self.dim if self.origin is None else tuple(float(o) for o in self.origin)
        if len(origin) != self.dim:
            raise InvalidInputError("origin has wrong length")
        object.__setattr__(self, "origin", origin)

    @property
    def spacing(self) -> float:
        return 2.0 ** -self.level

    h = spacing

    @property
    def cells_per_axis(self):
        return self.shape

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def face_area(self) -> float:
        return self.spacing ** (self.dim - 1)

    @property
    def origin_index(self):
        """Origin in units of h (integer for dyadically aligned grids)."""
        return tuple(int(round(o / self.spacing)) for o in self.origin)

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.shape[axis]) + 0.5) * self.spacing

    def mesh(self):
        """World coordinates of cell centers, one array per axis."""
        return np.meshgrid(*[self.axis_centers(a) for a in range(self.dim)], indexing="ij")

    def center(self, index) -> np.ndarray:
        return np.asarray(self.origin) + (np.asarray(index, dtype=float) + 0.5) * self.spacing

    def index_of(self, point) -> tuple:
        idx = np.floor((np.asarray(point, dtype=float) - np.asarray(self.origin)) / self.spacing)
        return tuple(int(i) for i in idx)

    def empty(self) -> "CellSet":
        return CellSet(self, np.zeros(self.shape, dtype=bool))

    def full(self) -> "CellSet":
        return CellSet(self, np.ones(self.shape, dtype=bool))


@dataclass(frozen=True, eq=False)
class CellSet:
    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.grid.shape:
            raise ContractViolation(
                f"mask shape {mask.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "mask", _frozen(mask))

    def __eq__(self, other):
        return (isinstance(other, CellSet) and self.grid == other.grid
                and np.array_equal(self.mask, other.mask))

    __hash__ = None

    def _check(self, other):
        if self.grid != other.grid:
            raise ContractViolation("cell sets live on different grids")

    def __or__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask & other.mask)

    def __sub__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask & ~other.mask)

    def __invert__(self):
        return CellSet(self.grid, ~self.mask)

    complement = __invert__

    def __len__(self):
        return int(self.mask.sum())

    count = __len__

    @property
    def measure(self) -> float:
        return len(self) * self.grid.cell_volume

    def is_empty(self) -> bool:
        return not self.mask.any()

    def issubset(self, other) -> bool:
        self._check(other)
        return not (self.mask & ~other.mask).any()

    def touches_frame(self) -> bool:
        m = self.mask
        for a in range(m.ndim):
            if np.take(m, 0, axis=a).any() or np.take(m, -1, axis=a).any():
                return True
        return False

    def indicator(self) -> "GridFunction":
        return GridFunction(self.grid, self.mask.astype(float))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ContractViolation(
                f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.isfinite(vals).all():
            raise ContractViolation("grid function has non-finite values")
        object.__setattr__(self, "values", _frozen(vals))

    def __add__(self, other):
        return GridFunction(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - _vals(other))

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def l1_norm(self, region=None) -> float:
        vals = np.abs(self.values)
        if region is not None:
            vals = vals[region.mask]
        return float(vals.sum()) * self.grid.cell_volume


def _vals(x):
    return x.values if isinstance(x, GridFunction) else x


@dataclass(frozen=True, eq=False)
class EdgeMeasure:
    """Nonnegative weights on interior faces of a grid."""

    grid: Grid
    weights: tuple

    def __post_init__(self):
        ws = []
        for a, w in enumerate(self.weights):
            w = np.asarray(w, dtype=float)
            expect = list(self.grid.shape)
            expect[a] -= 1
            if w.shape != tuple(expect):
                raise ContractViolation(f"face array {a} has shape {w.shape}, want {tuple(expect)}")
            if (w < 0).any():
                raise ContractViolation("edge measure has negative weights")
            ws.append(_frozen(w))
        object.__setattr__(self, "weights", tuple(ws))

    @property
    def total(self) -> float:
        return float(sum(w.sum(dtype=np.float64) for w in self.weights))

    def restrict(self, region: CellSet) -> "EdgeMeasure":
        """Keep faces with at least one endpoint cell in ``region``."""
        if region.grid != self.grid:
            raise ContractViolation("region on a different grid")
        out = []
        for a, w in enumerate(self.weights):
            keep = _face_any(region.mask, a)
            out.append(np.where(keep, w, 0.0))
        return EdgeMeasure(self.grid, tuple(out))

    def faces(self):
        """List of ``(cell_a, cell_b, weight)`` for faces of positive weight."""
        out = []
        for a, w in enumerate(self.weights):
            for idx in zip(*np.nonzero(w)):
                b = list(idx)
                b[a] += 1
                out.append([list(map(int, idx)), list(map(int, b)), float(w[idx])])
        return out

    def to_json(self) -> dict:
        return {"value": self.total, "faces": self.faces()}


def _lo(arr, axis):
    sl = [slice(None)] * arr.ndim
    sl[axis] = slice(None, -1)
    return arr[tuple(sl)]


def _hi(arr, axis):
    sl = [slice(None)] * arr.ndim
    sl[axis] = slice(1, None)
    return arr[tuple(sl)]


def _face_both(mask, axis):
    return _lo(mask, axis) & _hi(mask, axis)


def _face_any(mask, axis):
    return _lo(mask, axis) | _hi(mask, axis)


def _region_mask(grid, region):
    if region is None:
        return None
    if region.grid != grid:
        raise ContractViolation("function and region live on different grids")
    return region.mask


def total_variation(u: GridFunction, region: CellSet = None):
    """Anisotropic discrete total variation of ``u`` inside ``region``.

    A face counts when both of its cells lie in ``region`` (all interior
    faces when ``region`` is None).  Returns ``(value, EdgeMeasure)``.
    """
    mask = _region_mask(u.grid, region)
    area = u.grid.face_area
    weights = []
    for a in range(u.grid.dim):
        w = np.abs(np.diff(u.values, axis=a)) * area
        if mask is not None:
            w = np.where(_face_both(mask, a), w, 0.0)
        weights.append(w)
    measure = EdgeMeasure(u.grid, tuple(weights))
    return measure.total, measure


def perimeter(E: CellSet, region: CellSet = None) -> float:
    if region is not None and region.grid != E.grid:
        raise ContractViolation("set and region live on different grids")
    return boundary_face_count(E, region) * E.grid.face_area


def boundary_face_count(E: CellSet, region: CellSet = None) -> int:
    """Number of faces separating ``E`` from its complement (inside ``region``)."""
    n = 0
    for a in range(E.grid.dim):
        cut = _lo(E.mask, a) != _hi(E.mask, a)
        if region is not None:
            cut &= _face_both(region.mask, a)
        n += int(cut.sum())
    return n


def boundary_faces(E: CellSet):
    """Boolean face arrays (one per axis) marking the faces of the cell boundary of E."""
    return tuple(_lo(E.mask, a) != _hi(E.mask, a) for a in range(E.grid.dim))


# -- discrete topology -------------------------------------------------------

def full_structure(dim):
    return ndimage.generate_binary_structure(dim, dim)


def face_structure(dim):
    return ndimage.generate_binary_structure(dim, 1)


def closure(E: CellSet) -> CellSet:
    """E plus every cell sharing a face or a vertex with it."""
    return CellSet(E.grid, ndimage.binary_dilation(E.mask, full_structure(E.grid.dim)))


def open_interior(E: CellSet) -> CellSet:
    """Cells of E whose face and vertex neighbours all lie in E (off-grid counts as outside)."""
    return CellSet(E.grid, ndimage.binary_erosion(E.mask, full_structure(E.grid.dim), border_value=0))


def inner_boundary(E: CellSet) -> CellSet:
    return E - open_interior(E)


def outer_boundary(E: CellSet) -> CellSet:
    """Cells outside E touching E by a face or vertex: the discrete topological boundary ring."""
    return closure(E) - E


# -- densities ---------------------------------------------------------------

def ball_offsets(dim, radius_cells):
    """Integer offsets whose Euclidean length is strictly below ``radius_cells``."""
    k = int(math.ceil(radius_cells))
    rng = np.arange(-k, k + 1)
    grids = np.meshgrid(*([rng] * dim), indexing="ij")
    d2 = sum(g.astype(float) ** 2 for g in grids)
    keep = d2 < radius_cells ** 2
    return np.stack([g[keep] for g in grids], axis=1)


def ball_kernel(dim, radius_cells):
    k = int(math.ceil(radius_cells))
    rng = np.arange(-k, k + 1)
    grids = np.meshgrid(*([rng] * dim), indexing="ij")
    d2 = sum(g.astype(float) ** 2 for g in grids)
    return (d2 < radius_cells ** 2).astype(float)


def ball_counts(mask: np.ndarray, radius_cells: float) -> np.ndarray:
    """For every cell, the number of ``mask`` cells in the ball of the given radius (in cells)."""
    kern = ball_kernel(mask.ndim, radius_cells)
    counts = signal.fftconvolve(mask.astype(float), kern, mode="same")
    return np.rint(counts).astype(np.int64)


def _check_radius(grid, r, factor):
    if r < factor * grid.spacing - 1e-15:
        raise ScaleError(f"radius {r} is below {factor}h = {factor * grid.spacing}")


def density_at(E: CellSet, x, radii):
    """Ratios |E ∩ B(x,r)| / |B(x,r)| by exact cell counting.

    Balls are taken in cell-center distance and clipped to the grid, which
    is treated as the ambient space; so E and its complement sum to one.
    """
    grid = E.grid
    x = np.asarray(x, dtype=int)
    out = []
    for r in radii:
        _check_radius(grid, r, 2)
        offs = ball_offsets(grid.dim, r / grid.spacing) + x
        inside = np.all((offs >= 0) & (offs < np.asarray(grid.shape)), axis=1)
        offs = offs[inside]
        hits = E.mask[tuple(offs.T)].sum()
        out.append(float(hits) / len(offs))
    return out


def density_bounds(E: CellSet, x, radii):
    """(lower, upper) density estimates: min and max over the supplied radii."""
    d = density_at(E, x, radii)
    return min(d), max(d)


# -- components --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ComponentLabeling:
    """Face-connected components of the complement of closure(omega).

    Components are numbered 0..n-1 by decreasing size; ``labels`` holds
    ``i + 1`` on component ``i`` and 0 elsewhere.
    """

    grid: Grid
    omega: CellSet
    labels: np.ndarray
    sizes: tuple
    unbounded: tuple
    slices: tuple = field(repr=False)

    def __len__(self):
        return len(self.sizes)

    def component(self, i) -> CellSet:
        return CellSet(self.grid, self.labels == i + 1)

    @property
    def components(self):
        return [self.component(i) for i in range(len(self))]

    def window(self, i, pad=2):
        """Slice tuple of the component's bounding box padded by ``pad`` cells."""
        return tuple(slice(max(s.start - pad, 0), min(s.stop + pad, n))
                     for s, n in zip(self.slices[i], self.grid.shape))

    def closure_local(self, i, win):
        """Closure of component ``i`` as a mask over window ``win``."""
        comp = self.labels[win] == i + 1
        return ndimage.binary_dilation(comp, full_structure(self.grid.dim))

    def closure(self, i) -> CellSet:
        win = self.window(i)
        mask = np.zeros(self.grid.shape, dtype=bool)
        mask[win] = self.closure_local(i, win)
        return CellSet(self.grid, mask)

    def closure_labels(self):
        """Array with ``i + 1`` on closure(component i); overlaps keep the smallest index."""
        out = np.zeros(self.grid.shape, dtype=np.int64)
        for i in reversed(range(len(self))):
            win = self.window(i)
            loc = self.closure_local(i, win)
            out[win][loc] = i + 1
        return out

    def boundary_faces(self, i):
        """Faces between omega and closure(component i), one boolean array per axis."""
        closed = self.closure(i).mask
        om = self.omega.mask
        return tuple((_lo(om, a) & _hi(closed, a)) | (_lo(closed, a) & _hi(om, a))
                     for a in range(self.grid.dim))

    @property
    def unbounded_index(self):
        for i, u in enumerate(self.unbounded):
            if u:
                return i
        return None


def complement_components(omega: CellSet) -> ComponentLabeling:
    if omega.is_empty():
        raise InvalidInputError("omega is empty")
    grid = omega.grid
    free = ~closure(omega).mask
    raw, n = ndimage.label(free, face_structure(grid.dim))
    sizes = np.bincount(raw.ravel(), minlength=n + 1)[1:]
    order = np.argsort(-sizes, kind="stable")
    remap = np.zeros(n + 1, dtype=np.int64)
    remap[order + 1] = np.arange(1, n + 1)
    labels = remap[raw]
    frame = np.zeros(grid.shape, dtype=bool)
    for a in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[a] = 0
        frame[tuple(sl)] = True
        sl[a] = -1
        frame[tuple(sl)] = True
    touching = set(np.unique(labels[frame]).tolist()) - {0}
    slices = ndimage.find_objects(labels, max_label=n)
    return ComponentLabeling(
        grid=grid,
        omega=omega,
        labels=_frozen(labels),
        sizes=tuple(int(s) for s in sizes[order]),
        unbounded=tuple((i + 1) in touching for i in range(n)),
        slices=tuple(slices),
    )


# -- diagnostics -------------------------------------------------------------

def boundary_sample(omega: CellSet, samples: int):
    """Every ceil(#boundary/samples)-th cell of omega's inner boundary in scan order."""
    cells = np.flatnonzero(inner_boundary(omega).mask)
    stride = max(1, math.ceil(len(cells) / samples))
    return np.stack(np.unravel_index(cells[::stride], omega.grid.shape), axis=1)


def measure_density_scan(omega: CellSet, samples: int, radii):
    """Minimum of |B(x,r) ∩ omega| / r^n over sampled boundary cells and radii.

    Returns ``(c_hat, worst_point)``.
    """
    if omega.is_empty():
        raise InvalidInputError("omega is empty")
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    grid = omega.grid
    for r in radii:
        _check_radius(grid, r, 4)
    pts = boundary_sample(omega, samples)
    idx = tuple(pts.T)
    best, worst = math.inf, None
    for r in radii:
        counts = ball_counts(omega.mask, r / grid.spacing)[idx]
        ratios = counts * grid.cell_volume / r ** grid.dim
        k = int(np.argmin(ratios))
        if ratios[k] < best:
            best, worst = float(ratios[k]), tuple(int(v) for v in pts[k])
    return best, worst


def extent(region: CellSet) -> float:
    """Largest side of the region's bounding box in world units."""
    idx = np.nonzero(region.mask)
    return max(int(i.max() - i.min()) + 1 for i in idx) * region.grid.spacing


def poincare_ratio(u: GridFunction, region: CellSet) -> float:
    """Mean-deviation integral over ``extent(region) * TV(u, region)``."""
    if region.is_empty():
        raise InvalidInputError("region is empty")
    tv, _ = total_variation(u, region)
    if tv <= 0:
        raise UndefinedRatioError("total variation vanishes on the region")
    vals = u.values[region.mask]
    dev = np.abs(vals - vals.mean()).sum() * u.grid.cell_volume
    return float(dev / (extent(region) * tv))
