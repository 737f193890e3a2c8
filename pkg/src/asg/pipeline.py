"""End-to-end extraction: manifest -> voxel grids -> relation matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .bundle import ring_result_payload
from .deformables import find_feasible_scale, string_tip_grids
from .errors import AsgError
from .manifest import AssemblyManifest, PartSpec
from .mesh import load_mesh
from .relations import (
    AnalysisPart,
    GeometryConfig,
    RelationSet,
    degree_matrix,
    detect_insertions,
    interference_free_matrix,
)
from .voxel import stable_pose_frame, voxelize

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION_FRACTION = 64  # default cell size: longest product edge / 64


@dataclass
class ExtractionSummary:
    eta: int
    resolution: float
    contact_pairs: int
    deformable_notes: list[str]


def _resolve_resolution(manifest: AssemblyManifest, meshes: list) -> float:
    if manifest.geometry.resolution is not None:
        return float(manifest.geometry.resolution)
    lo = None
    hi = None
    for mesh in meshes:
        mlo, mhi = mesh.aabb
        lo = mlo if lo is None else [min(a, b) for a, b in zip(lo, mlo)]
        hi = mhi if hi is None else [max(a, b) for a, b in zip(hi, mhi)]
    longest = max(h - l for l, h in zip(lo, hi))
    return longest / DEFAULT_RESOLUTION_FRACTION


def extract_relations(manifest: AssemblyManifest) -> tuple[RelationSet, ExtractionSummary]:
    """Run the geometry pipeline for one assembled model.

    Rigid parts are voxelized as-is; string parts contribute only their
    annotated rigid tips; ring parts are radially scaled until a displacement
    direction frees up and the scaled grid substitutes everywhere.
    """
    posed = []
    for spec in manifest.parts:
        mesh = load_mesh(spec.mesh_path, name=spec.name).transformed(spec.pose)
        posed.append(mesh)
    resolution = _resolve_resolution(manifest, posed)
    config = manifest.geometry.resolved(resolution)

    parts: list[AnalysisPart] = []
    notes: list[str] = []
    for spec, mesh in zip(manifest.parts, posed):
        try:
            if spec.deformable == "string":
                grids = string_tip_grids(mesh, spec.tips, resolution)
                notes.append(f"{spec.name}: string part, {len(grids)} rigid tip(s) analyzed")
            else:
                grids = [voxelize(mesh, resolution)]
        except AsgError as e:
            raise type(e)(f"part {spec.name!r}: {e}")
        parts.append(AnalysisPart(spec.id, spec.name, grids, tag=spec.deformable))

    ring_payloads = []
    for i, spec in enumerate(manifest.parts):
        if spec.deformable != "ring":
            continue
        others = [p for p in parts if p.id != spec.id]
        try:
            result = find_feasible_scale(parts[i], others, config, axis=spec.ring_axis)
        except AsgError as e:
            raise type(e)(f"part {spec.name!r}: {e}")
        parts[i] = AnalysisPart(spec.id, spec.name, [result.scaled_grid], tag="ring")
        ring_payloads.append(
            ring_result_payload(spec.id, result.scale_factor, result.free_directions, result.scaled_grid)
        )
        notes.append(f"{spec.name}: ring part, adopted scale factor {result.scale_factor}")

    C, infos = degree_matrix(parts, config)
    M = interference_free_matrix(parts, config)
    I = detect_insertions(parts, infos, C, manifest.insertion_overrides)
    up = stable_pose_frame([g for p in parts for g in p.grids])
    contact_pairs = sum(1 for info in infos.values() if info.contact)
    rel = RelationSet(
        eta=manifest.eta,
        part_names=[p.name for p in parts],
        M=M,
        I=I,
        C=C,
        geometry=config,
        stable_up=up,
        model=manifest.model,
        ring_scaling=ring_payloads,
    )
    return rel, ExtractionSummary(manifest.eta, resolution, contact_pairs, notes)
