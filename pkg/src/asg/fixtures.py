"""Shipped fixture models.

The published CAD models are replaced by synthetic ones with tuned contact
geometry: a 2-part stack, a 4-part peg board, 5/6/7-part bracket assemblies
whose degree-of-constraint pattern reproduces the 24-vs-16 case study, a
two-pulley unit with a ring band, and a 33-part stack for scale testing.
Meshes are synthesized on demand; ``write_fixture`` emits STL/OBJ files plus
a manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import (
    TriangleMesh,
    box_mesh,
    cylinder_mesh,
    merge_meshes,
    prism_mesh,
    rectangle_matched,
    regular_polygon,
    ring_prism_mesh,
    save_obj,
    save_stl,
    stadium_polygon,
)

IDENTITY_POSE = [[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 1.0, 0], [0, 0, 0, 1.0]]

FIXTURE_SEED = 20240601

ROD_RADIUS = 3.5
ROD_SEGMENTS = 32


@dataclass
class Fixture:
    name: str
    meshes: dict[str, TriangleMesh]
    manifest: dict


def _part(pid: int, name: str, deformable: str = "rigid", **extra) -> dict:
    entry = {
        "id": pid,
        "name": name,
        "mesh": f"{name}.stl",
        "pose": IDENTITY_POSE,
        "deformable": deformable,
    }
    entry.update(extra)
    return entry


def _manifest(model: str, parts: list[dict], **extra) -> dict:
    doc = {
        "schema_version": 1,
        "model": model,
        "geometry": {"resolution": 1.0, "rotation_tolerance": 0.10, "seed": FIXTURE_SEED},
        "parts": parts,
    }
    doc.update(extra)
    return doc


def slab_with_holes(x0, x1, y0, y1, z0, z1, holes) -> TriangleMesh:
    """Axis-aligned slab with rectangular through-holes, composed of boxes.

    Holes are (hx0, hx1, hy0, hy1) tuples and must not overlap each other.
    """
    ys = sorted({y0, y1, *[h[2] for h in holes], *[h[3] for h in holes]})
    boxes = []
    for ya, yb in zip(ys, ys[1:]):
        cuts = sorted(
            [(h[0], h[1]) for h in holes if h[2] <= ya and h[3] >= yb]
        )
        x = x0
        for cx0, cx1 in cuts:
            if cx0 > x:
                boxes.append(box_mesh((x, ya, z0), (cx0, yb, z1)))
            x = cx1
        if x < x1:
            boxes.append(box_mesh((x, ya, z0), (x1, yb, z1)))
    return merge_meshes(boxes)


def _bored_block(x0, x1, y0, y1, z0, z1, bore_center_xz, bore_radius) -> TriangleMesh:
    """Block with a horizontal round bore (axis y) through its full depth.

    For a y-axis prism the section coordinates map (u, v) -> (z, x), so the
    matched rectangle takes the z half-extent first.
    """
    cx, cz = bore_center_xz
    ring_lo, ring_hi = cz - 4.0, cz + 4.0
    inner = regular_polygon(bore_radius, ROD_SEGMENTS)
    outer = rectangle_matched(inner, 4.0, (x1 - x0) / 2.0)
    cy = (y0 + y1) / 2.0
    pieces = []
    if z0 < ring_lo:
        pieces.append(box_mesh((x0, y0, z0), (x1, y1, ring_lo)))
    pieces.append(ring_prism_mesh(outer, inner, "y", (cx, cy, cz), y1 - y0))
    if ring_hi < z1:
        pieces.append(box_mesh((x0, y0, ring_hi), (x1, y1, z1)))
    return merge_meshes(pieces)


# ---------------------------------------------------------------------------
# stack2: flat cube on a plate
# ---------------------------------------------------------------------------


def _stack2() -> Fixture:
    plate = box_mesh((0, 0, 0), (20, 20, 2))
    cube = box_mesh((5, 5, 2), (15, 15, 12))
    parts = [_part(1, "plate"), _part(2, "cube")]
    return Fixture("stack2", {"plate": plate, "cube": cube}, _manifest("stack2", parts))


# ---------------------------------------------------------------------------
# pegboard4: board with three blind sockets and three pegs
# ---------------------------------------------------------------------------

_SOCKETS = [(4, 8, 4, 8), (12, 16, 4, 8), (8, 12, 14, 18)]


def _pegboard4() -> Fixture:
    bottom = box_mesh((0, 0, 0), (24, 24, 3))
    top = slab_with_holes(0, 24, 0, 24, 3, 6, _SOCKETS)
    board = merge_meshes([bottom, top])
    meshes = {"board": board}
    parts = [_part(1, "board")]
    for i, (hx0, hx1, hy0, hy1) in enumerate(_SOCKETS, start=2):
        peg = box_mesh((hx0, hy0, 3), (hx1, hy1, 13))
        name = f"peg{i - 1}"
        meshes[name] = peg
        parts.append(_part(i, name))
    return Fixture("pegboard4", meshes, _manifest("pegboard4", parts))


# ---------------------------------------------------------------------------
# bracket5/6/7: the case-study analog
# ---------------------------------------------------------------------------

_TOWER_X = {2: 10.0, 3: 30.0}  # tower center per part id
_ROD_Z = 12.0
_ROD_C_X = 46.0
_ROD_C_Z = 26.0


def _tower(cx: float, with_roof: bool) -> TriangleMesh:
    body = [
        box_mesh((cx - 8, -3, 2), (cx + 8, 13, 8)),
        _bored_block(cx - 8, cx + 8, -3, 13, 8, 16, (cx, _ROD_Z), ROD_RADIUS),
        box_mesh((cx - 8, -3, 16), (cx + 8, 13, 20)),
        box_mesh((cx - 2, -1, -6), (cx + 2, 3, 2)),   # front foot
        box_mesh((cx - 2, 9, -6), (cx + 2, 13, 2)),   # rear foot
    ]
    if with_roof:
        body.append(box_mesh((cx + 8, -5, 16), (54, 15, 20)))
    return merge_meshes(body)


def _bracket(n_rods3: bool = True) -> TriangleMesh:
    pieces = [
        box_mesh((0, -12, 6), (56, -10, 18)),  # backplate
        cylinder_mesh(ROD_RADIUS, "y", (_TOWER_X[2], -2, _ROD_Z), 16, ROD_SEGMENTS),
        cylinder_mesh(ROD_RADIUS, "y", (_TOWER_X[3], -2, _ROD_Z), 16, ROD_SEGMENTS),
    ]
    if n_rods3:
        pieces.append(box_mesh((42, -12, 18), (50, -10, 30)))  # riser
        pieces.append(cylinder_mesh(ROD_RADIUS, "y", (_ROD_C_X, -2, _ROD_C_Z), 16, ROD_SEGMENTS))
    return merge_meshes(pieces)


def _base_plate() -> TriangleMesh:
    holes = []
    for cx in _TOWER_X.values():
        holes.append((cx - 2, cx + 2, -1, 3))
        holes.append((cx - 2, cx + 2, 9, 13))
    return slab_with_holes(-4, 58, -8, 18, -6, 0, holes)


def _socket_plate() -> TriangleMesh:
    return merge_meshes(
        [
            box_mesh((40, -3, 20), (52, 13, 22)),
            _bored_block(40, 52, -3, 13, 22, 30, (_ROD_C_X, _ROD_C_Z), ROD_RADIUS),
            box_mesh((40, -3, 30), (52, 13, 32)),
        ]
    )


def _bracket_family(extra_plates: int) -> Fixture:
    name = f"bracket{5 + extra_plates}"
    meshes = {
        "bracket": _bracket(),
        "tower_a": _tower(_TOWER_X[2], with_roof=False),
        "tower_b": _tower(_TOWER_X[3], with_roof=True),
        "base": _base_plate(),
        "socket_plate": _socket_plate(),
    }
    parts = [
        _part(1, "bracket"),
        _part(2, "tower_a"),
        _part(3, "tower_b"),
        _part(4, "base"),
        _part(5, "socket_plate"),
    ]
    z = 32.0
    for k in range(extra_plates):
        pid = 6 + k
        pname = f"cap{chr(ord('a') + k)}"
        meshes[pname] = box_mesh((40, -3, z), (52, 13, z + 4))
        parts.append(_part(pid, pname))
        z += 4.0
    overrides = [
        {"part": 1, "into": 5, "value": 1},
        {"part": 5, "into": 1, "value": 0},
    ]
    return Fixture(name, meshes, _manifest(name, parts, insertion_overrides=overrides))


# ---------------------------------------------------------------------------
# pulleys_ring4: two grooved pulleys, a base, and a rubber band
# ---------------------------------------------------------------------------

_PULLEY_SPAN = 15.0
_CORE_R = 5.0
_FLANGE_R = 6.0


def _pulley(cx: float) -> TriangleMesh:
    return merge_meshes(
        [
            cylinder_mesh(_FLANGE_R, "z", (cx, 0, 1), 2, ROD_SEGMENTS),
            cylinder_mesh(_CORE_R, "z", (cx, 0, 4), 4, ROD_SEGMENTS),
            cylinder_mesh(_FLANGE_R, "z", (cx, 0, 7), 2, ROD_SEGMENTS),
        ]
    )


def _band_mesh() -> TriangleMesh:
    return ring_prism_mesh(
        stadium_polygon(_PULLEY_SPAN, _CORE_R + 3.0),
        stadium_polygon(_PULLEY_SPAN, _CORE_R),
        "z",
        (0, 0, 4),
        4,
    )


def _pulleys_ring4() -> Fixture:
    meshes = {
        "base": box_mesh((-26, -14, -6), (26, 14, 0)),
        "pulley_a": _pulley(-_PULLEY_SPAN),
        "pulley_b": _pulley(_PULLEY_SPAN),
        "band": _band_mesh(),
    }
    parts = [
        _part(1, "base"),
        _part(2, "pulley_a"),
        _part(3, "pulley_b"),
        _part(4, "band", deformable="ring", ring_axis=[0.0, 0.0, 1.0]),
    ]
    return Fixture("pulleys_ring4", meshes, _manifest("pulleys_ring4", parts))


# ---------------------------------------------------------------------------
# stack33: scale-test tower of plates
# ---------------------------------------------------------------------------


def _stack33() -> Fixture:
    meshes = {}
    parts = []
    for k in range(33):
        name = f"plate{k + 1:02d}"
        meshes[name] = box_mesh((0, 0, 4 * k), (20, 20, 4 * k + 4))
        parts.append(_part(k + 1, name))
    return Fixture("stack33", meshes, _manifest("stack33", parts))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

_BUILDERS = {
    "stack2": _stack2,
    "pegboard4": _pegboard4,
    "bracket5": lambda: _bracket_family(0),
    "bracket6": lambda: _bracket_family(1),
    "bracket7": lambda: _bracket_family(2),
    "pulleys_ring4": _pulleys_ring4,
    "stack33": _stack33,
}

FIXTURE_NAMES = tuple(_BUILDERS)


def fixture(name: str) -> Fixture:
    if name not in _BUILDERS:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURE_NAMES}")
    return _BUILDERS[name]()


def write_fixture(name: str, directory: str | Path) -> Path:
    """Write the meshes and manifest of one fixture; returns the manifest path."""
    fx = fixture(name)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for part in fx.manifest["parts"]:
        stem = part["mesh"].rsplit(".", 1)[0]
        mesh = fx.meshes[stem]
        if part["mesh"].endswith(".obj"):
            save_obj(mesh, directory / part["mesh"])
        else:
            save_stl(mesh, directory / part["mesh"])
    path = directory / "manifest.json"
    path.write_text(json.dumps(fx.manifest, indent=2) + "\n")
    return path
