"""Superlevel sets, the discrete coarea identity, and level selection for the simple-function extension."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractViolation, InvalidInputError
from .grid import CellSet, GridFunction, _face_both, _hi, _lo, total_variation
from .whitney import center_boundary_distance


def superlevel(u: GridFunction, t: float) -> CellSet:
    """Cells with u > t (strict)."""
    return CellSet(u.grid, u.values > t)


def _face_pairs(u: GridFunction, region: CellSet = None):
    """Values on the two sides of every counted face, as (low, high) arrays."""
    lows, highs = [], []
    for a in range(u.grid.dim):
        lo, hi = _lo(u.values, a), _hi(u.values, a)
        if region is not None:
            keep = _face_both(region.mask, a)
            lo, hi = lo[keep], hi[keep]
        lows.append(np.minimum(lo, hi).ravel())
        highs.append(np.maximum(lo, hi).ravel())
    return np.concatenate(lows), np.concatenate(highs)


def _profile_at(u, region, thresholds):
    """P({u > t}, region) for each sorted threshold t.

    A face with side values a < b is cut by {u > t} exactly when a <= t < b,
    so each face adds its area to a contiguous run of thresholds.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    lo, hi = _face_pairs(u, region)
    start = np.searchsorted(thresholds, lo, side="left")
    stop = np.searchsorted(thresholds, hi, side="left")
    diff = np.zeros(len(thresholds) + 1)
    np.add.at(diff, start, 1.0)
    np.add.at(diff, stop, -1.0)
    return np.cumsum(diff)[:-1] * u.grid.face_area


@dataclass(frozen=True, eq=False)
class LevelProfile:
    thresholds: np.ndarray
    perimeters: np.ndarray
    region: Optional[CellSet] = None

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        p = np.asarray(self.perimeters, dtype=float)
        if t.shape != p.shape:
            raise ContractViolation("thresholds and perimeters differ in length")
        if len(t) > 1 and not (np.diff(t) > 0).all():
            raise ContractViolation("thresholds must be strictly ascending")
        if (p < 0).any():
            raise ContractViolation("negative perimeter")
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "perimeters", p)

    def integral(self, a: float, b: float) -> float:
        """∫_a^b P({u > s}) ds for the step profile (constant between thresholds, 0 outside)."""
        t, p = self.thresholds, self.perimeters
        if len(t) == 0 or b <= a:
            return 0.0
        right = np.append(t[1:], t[-1])
        lo = np.clip(t, a, b)
        hi = np.clip(right, a, b)
        return float(np.sum(p * (hi - lo)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "perimeter"])
        for t, p in zip(self.thresholds, self.perimeters):
            w.writerow([repr(float(t)), repr(float(p))])
        return buf.getvalue()


def level_profile(u: GridFunction, region: CellSet = None) -> LevelProfile:
    """Perimeters of {u > t} at every distinct value t of u (restricted to ``region``)."""
    vals = u.values if region is None else u.values[region.mask]
    t = np.unique(vals)
    return LevelProfile(t, _profile_at(u, region, t), region)


def coarea_check(u: GridFunction, region: CellSet = None):
    """Compare TV(u, region) with Σ_k (t_{k+1} - t_k) P({u > t_k}, region).

    Returns ``(tv, integral, rel_err)``; rel_err is absolute when tv is 0.
    """
    tv = total_variation(u, region)[0]
    prof = level_profile(u, region)
    t = prof.thresholds
    integral = float(np.sum(np.diff(t) * prof.perimeters[:-1])) if len(t) > 1 else 0.0
    err = abs(tv - integral)
    return tv, integral, err / tv if tv > 0 else err


@dataclass(frozen=True, eq=False)
class LevelSelection:
    depth: int
    chosen: tuple
    good_flags: tuple
    collar_budget: tuple
    extended: tuple = field(repr=False, default=())
    profile: Optional[LevelProfile] = field(repr=False, default=None)

    def __post_init__(self):
        step = 2.0 ** -self.depth
        for j, t in enumerate(self.chosen):
            if not (j * step <= t < (j + 1) * step):
                raise ContractViolation(f"threshold {t} outside interval {j}")

    @property
    def intervals(self):
        step = 2.0 ** -self.depth
        return [(j * step, (j + 1) * step) for j in range(2 ** self.depth)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["interval", "lo", "hi", "threshold", "good", "collar_perimeter"])
        for j, ((a, b), t, g, c) in enumerate(zip(self.intervals, self.chosen,
                                                  self.good_flags, self.collar_budget)):
            w.writerow([j, a, b, repr(float(t)), int(g), repr(float(c))])
        return buf.getvalue()

    def to_json(self):
        return {"depth": self.depth, "thresholds": [float(t) for t in self.chosen],
                "good": [bool(g) for g in self.good_flags],
                "collar_perimeter": [float(c) for c in self.collar_budget]}


def zero_extend(E: CellSet) -> CellSet:
    return E


def _collar_perimeter(E: CellSet, collar_mask) -> float:
    n = 0
    for a in range(E.grid.dim):
        cut = _lo(E.mask, a) != _hi(E.mask, a)
        keep = _lo(collar_mask, a) | _hi(collar_mask, a)
        n += int((cut & keep).sum())
    return n * E.grid.face_area


def select_levels(u: GridFunction, omega: CellSet, depth: int,
                  extender: Callable[[CellSet], CellSet] = None,
                  collar_widths=(), max_candidates: int = None) -> LevelSelection:
    """One deterministic pass of the dyadic threshold selection.

    For each interval [j 2^-l, (j+1) 2^-l) the candidates are the distinct values
    of u on omega inside the interval plus the midpoint.  A candidate qualifies
    when P(E_t, omega) <= 2^(l+1) ∫_interval P(E_s, omega) ds.  Among qualifying
    candidates the one whose extension has the smallest perimeter in the finest
    collar around ∂omega wins (first in ascending order on ties).  If none
    qualifies the interval is flagged bad and E_t itself is used at the midpoint.
    """
    if depth < 0:
        raise InvalidInputError("depth must be >= 0")
    vals = u.values[omega.mask]
    if vals.size == 0:
        raise InvalidInputError("omega is empty")
    if vals.min() < 0 or vals.max() > 1:
        raise ContractViolation("u must take values in [0, 1] on omega")
    extender = extender or zero_extend
    grid = u.grid
    inside = GridFunction(grid, np.where(omega.mask, u.values, 0.0))
    # values below min u on omega give E_t = omega, whose perimeter in omega is 0
    prof = level_profile(inside, omega)
    widths = list(collar_widths)
    collar_mask = None
    if widths:
        collar_mask = center_boundary_distance(omega.mask) * grid.spacing < min(widths)
    step = 2.0 ** -depth
    distinct = np.unique(vals)
    chosen, good, budget, ext = [], [], [], []
    for j in range(2 ** depth):
        a, b = j * step, (j + 1) * step
        mid = a + step / 2
        cands = distinct[(distinct >= a) & (distinct < b)]
        cands = np.unique(np.append(cands, mid))
        bound = 2.0 ** (depth + 1) * prof.integral(a, b)
        per = _profile_at(inside, omega, cands)
        qual = cands[per <= bound * (1 + 1e-12) + 1e-15]
        if max_candidates is not None and len(qual) > max_candidates:
            pick = np.linspace(0, len(qual) - 1, max_candidates).round().astype(int)
            qual = qual[np.unique(pick)]
        if len(qual) == 0:
            E = CellSet(grid, omega.mask & (u.values > mid))
            chosen.append(mid)
            good.append(False)
            ext.append(E)
            budget.append(_collar_perimeter(E, collar_mask) if collar_mask is not None else 0.0)
            continue
        best = None
        for t in qual:
            E = CellSet(grid, omega.mask & (u.values > t))
            Et = extender(E)
            cp = _collar_perimeter(Et, collar_mask) if collar_mask is not None else 0.0
            if best is None or cp < best[0]:
                best = (cp, float(t), Et)
            if collar_mask is None:
                break
        budget.append(best[0])
        chosen.append(best[1])
        good.append(True)
        ext.append(best[2])
    return LevelSelection(depth, tuple(chosen), tuple(good), tuple(budget), tuple(ext), prof)


def assemble_extension(selection: LevelSelection, extended_sets=None) -> GridFunction:
    """Sum of 2^-l times the indicator of each extended set."""
    sets = selection.extended if extended_sets is None else tuple(extended_sets)
    if len(sets) != len(selection.chosen):
        raise ContractViolation(f"{len(sets)} sets for {len(selection.chosen)} intervals")
    if not sets:
        raise ContractViolation("no intervals to assemble")
    grid = sets[0].grid
    acc = np.zeros(grid.shape)
    for E in sets:
        if E.grid != grid:
            raise ContractViolation("extended sets live on different grids")
        acc += E.mask
    um = acc * 2.0 ** -selection.depth
    if um.min() < 0 or um.max() > 1 + 1e-12:
        raise ContractViolation("assembled function leaves [0, 1]")
    return GridFunction(grid, um)
