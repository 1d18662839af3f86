"""Wafer geometry: dies per wafer and reticle fit.

Two dicing models. Grid dicing cuts the whole wafer on shared lines, so
every die sits on one rectangular grid; the grid phase is seeded by
placing the first column of h dies flush against the usable circle and
the best h wins. Free dicing (laser or plasma) lets each row slide
independently, so every row packs the full chord at its worse edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .model import WaferProcessDef

# Boundary tolerance: a corner exactly on the usable circle counts as inside.
_EPS = 1e-9


@dataclass(frozen=True)
class DiePackingResult:
    """Die count plus the per-column (grid) or per-row (free) audit layout."""

    dies_per_wafer: int
    layout: tuple[int, ...]


def _count_grid_cells(r: float, pitch_x: float, pitch_y: float,
                      x0: float, y0: float) -> int:
    """Cells of the infinite grid with origin (x0, y0) fully inside radius r."""
    total = 0
    i_lo = math.ceil((-r - y0) / pitch_y - _EPS)
    i_hi = math.floor((r - y0) / pitch_y + _EPS) - 1
    r2 = r * r
    for i in range(i_lo, i_hi + 1):
        y_bot = y0 + i * pitch_y
        y_top = y_bot + pitch_y
        y_worst = max(abs(y_bot), abs(y_top))
        rem = r2 - y_worst * y_worst
        if rem < -_EPS * r2:
            continue
        half = math.sqrt(max(0.0, rem))
        j_lo = math.ceil((-half - x0) / pitch_x - _EPS)
        j_hi = math.floor((half - x0) / pitch_x + _EPS) - 1
        if j_hi >= j_lo:
            total += j_hi - j_lo + 1
    return total


def _grid_columns(r: float, pitch_x: float, pitch_y: float,
                  x0: float, y0: float) -> tuple[int, ...]:
    """Per-column die counts, left to right, for the same grid."""
    counts: dict[int, int] = {}
    i_lo = math.ceil((-r - y0) / pitch_y - _EPS)
    i_hi = math.floor((r - y0) / pitch_y + _EPS) - 1
    r2 = r * r
    for i in range(i_lo, i_hi + 1):
        y_bot = y0 + i * pitch_y
        y_worst = max(abs(y_bot), abs(y_bot + pitch_y))
        rem = r2 - y_worst * y_worst
        if rem < -_EPS * r2:
            continue
        half = math.sqrt(max(0.0, rem))
        j_lo = math.ceil((-half - x0) / pitch_x - _EPS)
        j_hi = math.floor((half - x0) / pitch_x + _EPS) - 1
        for j in range(j_lo, j_hi + 1):
            counts[j] = counts.get(j, 0) + 1
    return tuple(counts[j] for j in sorted(counts))


@lru_cache(maxsize=65536)
def grid_packing(die_x: float, die_y: float, wafer_diameter: float,
                 edge_exclusion: float, scribe_x: float,
                 scribe_y: float) -> DiePackingResult:
    """Best packing over first-column heights h = 1, 2, ...

    For each h the leftmost column of h dies is pushed flush against the
    circle (its left corners on the boundary), which fixes the grid phase;
    all grid cells fully inside then count, partial columns included.
    """
    r = wafer_diameter / 2.0 - edge_exclusion
    pitch_x = die_x + scribe_x
    pitch_y = die_y + scribe_y
    if r <= 0.0 or pitch_x <= 0.0 or pitch_y <= 0.0:
        return DiePackingResult(0, ())
    if die_x <= 0.0 or die_y <= 0.0:
        return DiePackingResult(0, ())
    best = 0
    best_seed = None
    h_max = int(2.0 * r / pitch_y + _EPS)
    for h in range(1, h_max + 1):
        half_height = h * pitch_y / 2.0
        if half_height > r * (1.0 + _EPS):
            break
        x0 = -math.sqrt(max(0.0, r * r - half_height * half_height))
        n = _count_grid_cells(r, pitch_x, pitch_y, x0, -half_height)
        if n > best:
            best = n
            best_seed = (x0, -half_height)
    if best_seed is None:
        return DiePackingResult(0, ())
    return DiePackingResult(best, _grid_columns(r, pitch_x, pitch_y,
                                                *best_seed))


def _row_capacity(r: float, pitch_x: float, y_worst: float) -> int:
    """Dies of width pitch_x that fit in the chord at height y_worst."""
    rem = r * r - y_worst * y_worst
    if rem < 0.0:
        return 0
    width = 2.0 * math.sqrt(rem)
    return int(math.floor(width / pitch_x + _EPS))


@lru_cache(maxsize=65536)
def free_packing(die_x: float, die_y: float, wafer_diameter: float,
                 edge_exclusion: float, scribe_x: float,
                 scribe_y: float) -> DiePackingResult:
    """Row-by-row packing, each row at its maximal chord width.

    Two seedings: rows starting on the horizontal diameter (mirrored
    below), or a first row centered on it. The better one wins.
    """
    r = wafer_diameter / 2.0 - edge_exclusion
    pitch_x = die_x + scribe_x
    pitch_y = die_y + scribe_y
    if r <= 0.0 or pitch_x <= 0.0 or pitch_y <= 0.0:
        return DiePackingResult(0, ())
    if die_x <= 0.0 or die_y <= 0.0:
        return DiePackingResult(0, ())

    # case 1: first row sits on the diameter, stack up, double for below
    caps_on = []
    k = 0
    while True:
        cap = _row_capacity(r, pitch_x, (k + 1) * pitch_y)
        if cap <= 0:
            break
        caps_on.append(cap)
        k += 1
    total_on = 2 * sum(caps_on)
    layout_on = tuple(reversed(caps_on)) + tuple(caps_on)

    # case 2: first row centered on the diameter, mirror the rows above it
    center = _row_capacity(r, pitch_x, pitch_y / 2.0)
    caps_above = []
    if center > 0:
        k = 0
        while True:
            cap = _row_capacity(r, pitch_x, pitch_y / 2.0 + (k + 1) * pitch_y)
            if cap <= 0:
                break
            caps_above.append(cap)
            k += 1
    total_centered = center + 2 * sum(caps_above)
    layout_centered = (tuple(reversed(caps_above)) + (center,)
                       + tuple(caps_above)) if center > 0 else ()

    if total_on >= total_centered:
        return DiePackingResult(total_on, layout_on if total_on else ())
    return DiePackingResult(total_centered, layout_centered)


def dies_per_wafer_grid(die_x: float, die_y: float, wafer_diameter: float,
                        edge_exclusion: float, scribe_x: float,
                        scribe_y: float) -> int:
    return grid_packing(die_x, die_y, wafer_diameter, edge_exclusion,
                        scribe_x, scribe_y).dies_per_wafer


def dies_per_wafer_free(die_x: float, die_y: float, wafer_diameter: float,
                        edge_exclusion: float, scribe_x: float,
                        scribe_y: float) -> int:
    return free_packing(die_x, die_y, wafer_diameter, edge_exclusion,
                        scribe_x, scribe_y).dies_per_wafer


def dies_per_wafer(wp: WaferProcessDef, die_x: float, die_y: float) -> int:
    """Dispatch on the process dicing style."""
    fn = dies_per_wafer_grid if wp.dicing == "grid" else dies_per_wafer_free
    return fn(die_x, die_y, wp.wafer_diameter, wp.edge_exclusion,
              wp.scribe_x, wp.scribe_y)


@dataclass(frozen=True)
class ReticleFit:
    """How a die area maps onto the exposure field."""

    n_reticles: int       # exposures stitched into one die
    k_reticle: int        # dies per exposure when the die fits in one
    utilization: float    # used share of the exposed field area
    k_stitch: int         # stitch boundaries inside a super-reticle die


def reticle_fit(area: float, reticle_x: float, reticle_y: float) -> ReticleFit:
    """Field fit for a die of the given area.

    Sub-reticle dies pack k = floor(field/area) per exposure. Super-reticle
    dies stitch n = ceil(area/field) exposures, laid out as the largest
    square block plus remainder runs along its boundary; k_stitch counts
    the shared internal edges of that layout.
    """
    if area <= 0.0:
        raise ValueError("reticle_fit needs a positive area")
    field = reticle_x * reticle_y
    if area <= field * (1.0 + _EPS):
        k = int(math.floor(field / area + _EPS))
        return ReticleFit(n_reticles=1, k_reticle=k,
                          utilization=k * area / field, k_stitch=0)
    n = int(math.ceil(area / field - _EPS))
    side = int(math.floor(math.sqrt(n) + _EPS))
    square = side * side
    rest = n - square
    k_stitch = 2 * side * (side - 1) + 2 * rest - int(math.ceil(rest / side))
    return ReticleFit(n_reticles=n, k_reticle=0,
                      utilization=area / (n * field), k_stitch=k_stitch)
