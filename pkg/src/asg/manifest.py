"""Assembly manifest: the input contract for extraction.

A manifest lists the parts (id, name, mesh file, pose, deformability) plus
the geometry configuration. Part ids must be contiguous starting at 1 and
every referenced mesh file must exist at load time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ManifestError
from .relations import GeometryConfig

SCHEMA_VERSION = 1

DEFORMABLE_TAGS = ("rigid", "ring", "string")


@dataclass
class PartSpec:
    id: int
    name: str
    mesh_path: Path
    pose: np.ndarray
    deformable: str = "rigid"
    ring_axis: np.ndarray | None = None
    tips: list | None = None


@dataclass
class AssemblyManifest:
    model: str
    parts: list[PartSpec]
    geometry: GeometryConfig
    insertion_overrides: list[dict] = field(default_factory=list)

    @property
    def eta(self) -> int:
        return len(self.parts)


def load_manifest(path: str | Path) -> AssemblyManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}")
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest {path} is not valid JSON: {e}")
    return parse_manifest(doc, base_dir=path.parent)


def parse_manifest(doc: dict, base_dir: Path) -> AssemblyManifest:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ManifestError(
            f"manifest schema_version {doc.get('schema_version')!r} != {SCHEMA_VERSION}"
        )
    raw_parts = doc.get("parts") or []
    if not raw_parts:
        raise ManifestError("manifest lists no parts")
    parts: list[PartSpec] = []
    for entry in raw_parts:
        try:
            pid = int(entry["id"])
            name = str(entry["name"])
            mesh_rel = entry["mesh"]
        except (KeyError, TypeError, ValueError) as e:
            raise ManifestError(f"bad part entry {entry!r}: {e}")
        tag = entry.get("deformable", "rigid")
        if tag not in DEFORMABLE_TAGS:
            raise ManifestError(
                f"part {name!r}: deformable tag {tag!r} not supported "
                f"(large-volume deformables are out of scope); use one of {DEFORMABLE_TAGS}"
            )
        pose = np.asarray(entry.get("pose", np.eye(4).tolist()), dtype=np.float64)
        if pose.size != 16:
            raise ManifestError(f"part {name!r}: pose must be a 4x4 row-major matrix")
        pose = pose.reshape(4, 4)
        mesh_path = base_dir / mesh_rel
        if not mesh_path.exists():
            raise ManifestError(f"part {name!r}: mesh file {mesh_path} does not exist")
        axis = entry.get("ring_axis")
        parts.append(
            PartSpec(
                id=pid,
                name=name,
                mesh_path=mesh_path,
                pose=pose,
                deformable=tag,
                ring_axis=None if axis is None else np.asarray(axis, dtype=np.float64),
                tips=entry.get("tips"),
            )
        )
    ids = sorted(p.id for p in parts)
    if ids != list(range(1, len(parts) + 1)):
        raise ManifestError(f"part ids must be contiguous 1..eta, got {ids}")
    parts.sort(key=lambda p: p.id)
    geo = doc.get("geometry", {})
    config = GeometryConfig(
        resolution=geo.get("resolution"),
        rotation_tolerance=float(geo.get("rotation_tolerance", 0.10)),
        seed=int(geo.get("seed", 0)),
    )
    overrides = doc.get("insertion_overrides", [])
    known = set(ids)
    for ov in overrides:
        if int(ov.get("part", -1)) not in known or int(ov.get("into", -1)) not in known:
            raise ManifestError(f"insertion override references unknown parts: {ov}")
    return AssemblyManifest(
        model=doc.get("model", "model"),
        parts=parts,
        geometry=config,
        insertion_overrides=overrides,
    )
