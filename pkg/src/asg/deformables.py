"""Relation extraction for ring-shaped and string-like deformable parts.

Ring parts are radially scaled until some displacement direction frees up;
the adopted scaled grid then substitutes for the rigid grid everywhere.
String parts contribute only their rigid tips to any matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRing, InterpenetratingParts, MissingTipAnnotation, NoFeasibleScale
from .mesh import TriangleMesh
from .relations import AnalysisPart, GeometryConfig, constraint_free_info
from .voxel import DISPLACEMENT_LABELS, VoxelGrid, voxelize

log = logging.getLogger(__name__)

SCALE_STEP = 0.05
SCALE_BOUNDS = (0.5, 2.0)
RADIAL_SCALE_LIMITS = (0.25, 4.0)


@dataclass
class RingScalingResult:
    """Adopted deformation for one ring part (embedded in the bundle)."""

    part_id: int
    scale_factor: float
    scaled_grid: VoxelGrid
    free_directions: dict[str, bool]

    def any_free(self) -> bool:
        return any(self.free_directions.values())


def ring_axis_default(grid: VoxelGrid) -> np.ndarray:
    """Smallest principal axis of the occupied-cell cloud (the ring normal)."""
    pts = grid.cell_centers()
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / max(len(pts), 1)
    _, vecs = np.linalg.eigh(cov)
    axis = vecs[:, 0]
    # deterministic sign: largest-magnitude component positive
    k = int(np.argmax(np.abs(axis)))
    if axis[k] < 0:
        axis = -axis
    return axis / np.linalg.norm(axis)


def radial_scale(g: VoxelGrid, axis, center, factor: float) -> VoxelGrid:
    """Scale occupied cells radially about the axis line through ``center``.

    Axial coordinates are preserved. After scaling with factor != 1 the
    occupancy is dilated by one cell within each slice perpendicular to the
    (dominant lattice direction of the) axis, closing re-rasterization gaps
    without fattening the part axially.
    """
    lo_f, hi_f = RADIAL_SCALE_LIMITS
    if not (lo_f <= factor <= hi_f):
        raise ValueError(f"scale factor {factor} outside {RADIAL_SCALE_LIMITS}")
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    center = np.asarray(center, dtype=np.float64)
    pts = g.cell_centers() - center
    axial = np.outer(pts @ axis, axis)
    radial = pts - axial
    if float(np.linalg.norm(radial, axis=1).max()) < 1e-9:
        raise DegenerateRing("grid has zero radial extent about the ring axis")
    if factor == 1.0:
        moved = pts + center
    else:
        moved = center + axial + factor * radial
    idx = np.floor((moved - g.origin) / g.resolution).astype(np.int64)
    lo = idx.min(axis=0)
    hi = idx.max(axis=0) + 1
    pad = 1 if factor != 1.0 else 0
    lo -= pad
    hi += pad
    occ = np.zeros(hi - lo, dtype=bool)
    s = idx - lo
    occ[s[:, 0], s[:, 1], s[:, 2]] = True
    if factor != 1.0:
        occ = _dilate_in_slice(occ, int(np.argmax(np.abs(axis))))
    return VoxelGrid(g.origin + lo * g.resolution, g.resolution, occ)


def _dilate_in_slice(occ: np.ndarray, axial: int) -> np.ndarray:
    """8-neighborhood dilation within slices perpendicular to ``axial``."""
    grown = occ.copy()
    planar = [ax for ax in range(3) if ax != axial]
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            if da == 0 and db == 0:
                continue
            shifted = np.roll(occ, shift=(da, db), axis=tuple(planar))
            # roll wraps; zero out the wrapped border
            for ax, d in zip(planar, (da, db)):
                if d == 1:
                    shifted[tuple(slice(0, 1) if a == ax else slice(None) for a in range(3))] = False
                elif d == -1:
                    shifted[tuple(slice(-1, None) if a == ax else slice(None) for a in range(3))] = False
            grown |= shifted
    return grown


def scale_schedule() -> list[float]:
    """1.0, 1.05, 0.95, 1.10, 0.90, ... alternating, clipped to [0.5, 2.0].

    Contraction exhausts at 0.5; the remaining expansions continue to 2.0.
    """
    factors = [1.0]
    k = 1
    while True:
        up = round(1.0 + SCALE_STEP * k, 4)
        dn = round(1.0 - SCALE_STEP * k, 4)
        added = False
        if up <= SCALE_BOUNDS[1]:
            factors.append(up)
            added = True
        if dn >= SCALE_BOUNDS[0]:
            factors.append(dn)
            added = True
        if not added:
            return factors
        k += 1


def find_feasible_scale(
    ring: AnalysisPart,
    others: list[AnalysisPart],
    config: GeometryConfig,
    axis=None,
    center=None,
) -> RingScalingResult:
    """Walk the scaling schedule until some displacement direction frees up.

    Each candidate scales the ring's grid and recomputes the 12-direction
    constraint-free info against the union of all other parts (at their
    undeformed grids). Factors that interpenetrate anything are skipped.
    """
    if len(ring.grids) != 1:
        raise ValueError("ring part must carry exactly one grid")
    grid = ring.grids[0]
    axis = ring_axis_default(grid) if axis is None else np.asarray(axis, dtype=np.float64)
    center = grid.cell_centers().mean(axis=0) if center is None else np.asarray(center, dtype=np.float64)
    rest = AnalysisPart(id=0, name="(rest)", grids=[g for p in others for g in p.grids])
    for factor in scale_schedule():
        scaled = radial_scale(grid, axis, center, factor)
        candidate = AnalysisPart(id=ring.id, name=ring.name, grids=[scaled], tag="ring")
        if not rest.grids:
            return RingScalingResult(ring.id, factor, scaled, {lab: True for lab in DISPLACEMENT_LABELS})
        try:
            info = constraint_free_info(candidate, rest, config)
        except InterpenetratingParts:
            continue
        if info.free_count() > 0:
            return RingScalingResult(ring.id, factor, scaled, dict(info.F))
    raise NoFeasibleScale(
        f"ring part {ring.name!r}: no factor in the schedule frees any direction"
    )


# ---------------------------------------------------------------------------
# String-like parts
# ---------------------------------------------------------------------------


def string_tip_grids(
    mesh: TriangleMesh,
    tips: list | None,
    resolution: float,
    full_grid: VoxelGrid | None = None,
) -> list[VoxelGrid]:
    """Rigid-tip sub-grids of a string-like part.

    Tips are named OBJ sub-objects or AABB annotations ({"min": .., "max": ..});
    only these grids enter relation computations, the flexible run is dropped.
    """
    if not tips:
        raise MissingTipAnnotation(
            f"string part {mesh.name!r} has no rigid-tip annotation"
        )
    grids: list[VoxelGrid] = []
    for tip in tips:
        if isinstance(tip, str):
            if tip not in mesh.groups:
                raise MissingTipAnnotation(
                    f"string part {mesh.name!r}: no sub-object named {tip!r}"
                )
            sub = mesh.submesh(mesh.groups[tip], f"{mesh.name}:{tip}")
            grids.append(voxelize(sub, resolution))
        elif isinstance(tip, dict) and "min" in tip and "max" in tip:
            if full_grid is None:
                full_grid = voxelize(mesh, resolution)
            lo = np.asarray(tip["min"], dtype=np.float64)
            hi = np.asarray(tip["max"], dtype=np.float64)
            centers = full_grid.cell_centers()
            keep = np.all((centers >= lo) & (centers <= hi), axis=1)
            if not keep.any():
                raise MissingTipAnnotation(
                    f"string part {mesh.name!r}: tip AABB {tip} selects no cells"
                )
            idx = np.floor((centers[keep] - full_grid.origin) / full_grid.resolution).astype(np.int64)
            occ = np.zeros(full_grid.dims, dtype=bool)
            occ[idx[:, 0], idx[:, 1], idx[:, 2]] = True
            grids.append(VoxelGrid(full_grid.origin.copy(), full_grid.resolution, occ))
        else:
            raise MissingTipAnnotation(f"string part {mesh.name!r}: bad tip annotation {tip!r}")
    return grids
