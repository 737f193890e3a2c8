"""Triangle meshes: the raw part geometry.

Loads binary/ASCII STL and OBJ (with named sub-objects), applies rigid poses,
and provides the primitive builders the shipped fixture models are made of.
Units are millimeters throughout; no unit metadata in the files is trusted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyMesh


@dataclass
class TriangleMesh:
    """Vertices (N,3 float, mm) plus triangle index triples (M,3 int).

    ``groups`` maps a sub-object name (OBJ ``o``/``g``) to the triangle rows
    that belong to it; STL files produce a single unnamed group.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    name: str = ""
    groups: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.triangles) == 0 or len(self.vertices) == 0:
            raise EmptyMesh(f"mesh {self.name!r} has no geometry")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise EmptyMesh(f"mesh {self.name!r} has out-of-range triangle indices")

    @property
    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        used = self.vertices[np.unique(self.triangles)]
        return used.min(axis=0), used.max(axis=0)

    def transformed(self, pose: np.ndarray) -> "TriangleMesh":
        """Apply a 4x4 row-major rigid transform to every vertex."""
        pose = np.asarray(pose, dtype=np.float64).reshape(4, 4)
        hom = np.hstack([self.vertices, np.ones((len(self.vertices), 1))])
        moved = hom @ pose.T
        return TriangleMesh(moved[:, :3], self.triangles.copy(), self.name, dict(self.groups))

    def submesh(self, triangle_rows: np.ndarray, name: str) -> "TriangleMesh":
        return TriangleMesh(self.vertices.copy(), self.triangles[triangle_rows], name)

    def is_watertight(self) -> bool:
        """Every undirected edge must be used by exactly two triangles."""
        tri = self.triangles
        edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        return bool(np.all(counts == 2))


# ---------------------------------------------------------------------------
# File loading
# ---------------------------------------------------------------------------


def load_mesh(path: str | Path, name: str | None = None) -> TriangleMesh:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".stl":
        mesh = _load_stl(path)
    elif suffix == ".obj":
        mesh = _load_obj(path)
    else:
        raise EmptyMesh(f"unsupported mesh format: {path.name}")
    mesh.name = name or path.stem
    return mesh


def _load_stl(path: Path) -> TriangleMesh:
    raw = path.read_bytes()
    if len(raw) < 84:
        return _load_stl_ascii(raw.decode("latin-1"))
    count = struct.unpack_from("<I", raw, 80)[0]
    if len(raw) == 84 + 50 * count and not raw[:5].lower().startswith(b"solid"):
        return _load_stl_binary(raw, count)
    if raw[:5].lower().startswith(b"solid"):
        try:
            return _load_stl_ascii(raw.decode("latin-1"))
        except EmptyMesh:
            pass
    if len(raw) >= 84 + 50 * count:
        return _load_stl_binary(raw, count)
    raise EmptyMesh(f"cannot parse STL file {path.name}")


def _load_stl_binary(raw: bytes, count: int) -> TriangleMesh:
    if count == 0:
        raise EmptyMesh("binary STL contains zero facets")
    data = np.frombuffer(raw, dtype=np.uint8, count=50 * count, offset=84)
    records = data.reshape(count, 50)[:, :48].copy().view("<f4").reshape(count, 12)
    verts = records[:, 3:12].reshape(count * 3, 3).astype(np.float64)
    return _dedup_vertices(verts)


def _load_stl_ascii(text: str) -> TriangleMesh:
    verts = []
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 4 and parts[0] == "vertex":
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
    if not verts or len(verts) % 3 != 0:
        raise EmptyMesh("ASCII STL contains no complete facets")
    return _dedup_vertices(np.asarray(verts, dtype=np.float64))


def _dedup_vertices(verts: np.ndarray) -> TriangleMesh:
    uniq, inverse = np.unique(verts.round(9), axis=0, return_inverse=True)
    tris = inverse.reshape(-1, 3)
    return TriangleMesh(uniq, tris)


def _load_obj(path: Path) -> TriangleMesh:
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    group_rows: dict[str, list[int]] = {}
    current = ""

    def vidx(token: str) -> int:
        i = int(token.split("/")[0])
        return i - 1 if i > 0 else len(verts) + i

    for line in path.read_text().splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
        elif parts[0] in ("o", "g"):
            current = parts[1] if len(parts) > 1 else ""
        elif parts[0] == "f":
            idx = [vidx(t) for t in parts[1:]]
            for k in range(1, len(idx) - 1):  # fan-triangulate polygons
                group_rows.setdefault(current, []).append(len(tris))
                tris.append([idx[0], idx[k], idx[k + 1]])
    if not tris:
        raise EmptyMesh(f"OBJ file {path.name} contains no faces")
    groups = {g: np.asarray(rows, dtype=np.int64) for g, rows in group_rows.items() if g}
    return TriangleMesh(np.asarray(verts), np.asarray(tris), groups=groups)


def save_obj(mesh: TriangleMesh, path: str | Path, groups: dict[str, np.ndarray] | None = None) -> None:
    """Write an OBJ file, optionally splitting triangles into named objects."""
    lines = [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in mesh.vertices]
    groups = groups if groups is not None else mesh.groups
    if groups:
        emitted = np.zeros(len(mesh.triangles), dtype=bool)
        for gname, rows in groups.items():
            lines.append(f"o {gname}")
            for r in rows:
                a, b, c = mesh.triangles[r] + 1
                lines.append(f"f {a} {b} {c}")
                emitted[r] = True
        rest = np.nonzero(~emitted)[0]
        if len(rest):
            lines.append("o rest")
            for r in rest:
                a, b, c = mesh.triangles[r] + 1
                lines.append(f"f {a} {b} {c}")
    else:
        for a, b, c in mesh.triangles + 1:
            lines.append(f"f {a} {b} {c}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_stl(mesh: TriangleMesh, path: str | Path) -> None:
    """Write a binary STL file."""
    tris = mesh.vertices[mesh.triangles]  # (M,3,3)
    n = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    n = np.where(norm > 0, n / np.maximum(norm, 1e-30), 0.0)
    count = len(tris)
    buf = bytearray(struct.pack("<80sI", b"asg fixture", count))
    rec = np.zeros((count, 50), dtype=np.uint8)
    payload = np.hstack([n, tris.reshape(count, 9)]).astype("<f4")
    rec[:, :48] = payload.view(np.uint8).reshape(count, 48)
    buf.extend(rec.tobytes())
    Path(path).write_bytes(bytes(buf))


# ---------------------------------------------------------------------------
# Primitive builders (fixture geometry is composed from these)
# ---------------------------------------------------------------------------


def box_mesh(lo, hi) -> TriangleMesh:
    """Axis-aligned closed box between corner points ``lo`` and ``hi``."""
    x0, y0, z0 = map(float, lo)
    x1, y1, z1 = map(float, hi)
    v = np.array(
        [
            [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
            [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
        ]
    )
    f = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom
            [4, 5, 6], [4, 6, 7],  # top
            [0, 1, 5], [0, 5, 4],  # y0
            [2, 3, 7], [2, 7, 6],  # y1
            [1, 2, 6], [1, 6, 5],  # x1
            [3, 0, 4], [3, 4, 7],  # x0
        ]
    )
    return TriangleMesh(v, f)


def _axis_frame(axis: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit vectors (u, v, w) with w along ``axis``."""
    w = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0]), "z": np.array([0, 0, 1.0])}[axis]
    u = np.array([0, 0, 1.0]) if axis != "z" else np.array([1.0, 0, 0])
    u = u - w * (u @ w)
    u /= np.linalg.norm(u)
    v = np.cross(w, u)
    return u, v, w


def regular_polygon(radius: float, segments: int = 32, phase: float = 0.0) -> np.ndarray:
    """CCW 2-D polygon approximating a circle; shared by rods and their bores."""
    ang = phase + 2.0 * np.pi * np.arange(segments) / segments
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])


def rectangle_polygon(half_u: float, half_v: float) -> np.ndarray:
    return np.array([[-half_u, -half_v], [half_u, -half_v], [half_u, half_v], [-half_u, half_v]])


def prism_mesh(polygon: np.ndarray, axis: str, center, length: float) -> TriangleMesh:
    """Solid prism: 2-D CCW polygon extruded ``length`` along ``axis``."""
    u, v, w = _axis_frame(axis)
    c = np.asarray(center, dtype=np.float64)
    n = len(polygon)
    lo = c - w * (length / 2.0)
    hi = c + w * (length / 2.0)
    bottom = lo + polygon[:, :1] * u + polygon[:, 1:2] * v
    top = hi + polygon[:, :1] * u + polygon[:, 1:2] * v
    verts = np.vstack([bottom, top, [lo], [hi]])
    cb, ct = 2 * n, 2 * n + 1
    faces = []
    for i in range(n):
        j = (i + 1) % n
        faces.append([i, j, n + j])
        faces.append([i, n + j, n + i])
        faces.append([cb, j, i])       # bottom cap fan (faces -w)
        faces.append([ct, n + i, n + j])  # top cap fan (faces +w)
    return TriangleMesh(verts, np.asarray(faces))


def cylinder_mesh(radius: float, axis: str, center, length: float, segments: int = 32) -> TriangleMesh:
    return prism_mesh(regular_polygon(radius, segments), axis, center, length)


def ring_prism_mesh(outer: np.ndarray, inner: np.ndarray, axis: str, center, length: float) -> TriangleMesh:
    """Plate with a hole: outer loop minus inner loop, extruded along ``axis``.

    The two loops must have equal vertex counts; vertices are paired 1:1 so
    the caps become clean quad strips and the shell is watertight. Used for
    bore plates and the ring band.
    """
    if len(outer) != len(inner):
        raise ValueError("ring_prism_mesh needs matched outer/inner loops")
    u, v, w = _axis_frame(axis)
    c = np.asarray(center, dtype=np.float64)
    n = len(outer)
    lo = c - w * (length / 2.0)
    hi = c + w * (length / 2.0)

    def ring(points: np.ndarray, base: np.ndarray) -> np.ndarray:
        return base + points[:, :1] * u + points[:, 1:2] * v

    ob, ot = ring(outer, lo), ring(outer, hi)
    ib, it = ring(inner, lo), ring(inner, hi)
    verts = np.vstack([ob, ot, ib, it])
    O_B, O_T, I_B, I_T = 0, n, 2 * n, 3 * n
    faces = []
    for i in range(n):
        j = (i + 1) % n
        faces.append([O_B + i, O_B + j, O_T + j])
        faces.append([O_B + i, O_T + j, O_T + i])
        faces.append([I_B + j, I_B + i, I_T + i])
        faces.append([I_B + j, I_T + i, I_T + j])
        faces.append([O_T + i, O_T + j, I_T + j])
        faces.append([O_T + i, I_T + j, I_T + i])
        faces.append([O_B + j, O_B + i, I_B + i])
        faces.append([O_B + j, I_B + i, I_B + j])
    return TriangleMesh(verts, np.asarray(faces))


def rectangle_matched(inner: np.ndarray, half_u: float, half_v: float) -> np.ndarray:
    """Rectangle outline sampled at the angular positions of ``inner``.

    Gives a rectangle loop with the same vertex count as the inner polygon so
    ``ring_prism_mesh`` can pair them 1:1.
    """
    ang = np.arctan2(inner[:, 1], inner[:, 0])
    cos, sin = np.cos(ang), np.sin(ang)
    t = 1.0 / np.maximum(np.abs(cos) / half_u, np.abs(sin) / half_v)
    return np.column_stack([t * cos, t * sin])


def merge_meshes(parts: list[TriangleMesh], name: str = "") -> TriangleMesh:
    """Concatenate closed sub-meshes into one mesh (shells stay disjoint)."""
    verts, tris, groups = [], [], {}
    offset = 0
    row = 0
    for m in parts:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        for g, rows in m.groups.items():
            groups[g] = rows + row
        offset += len(m.vertices)
        row += len(m.triangles)
    return TriangleMesh(np.vstack(verts), np.vstack(tris), name, groups)


def uv_sphere_mesh(radius: float, center, n_lat: int = 48, n_lon: int = 96) -> TriangleMesh:
    c = np.asarray(center, dtype=np.float64)
    lat = np.linspace(-np.pi / 2, np.pi / 2, n_lat + 1)[1:-1]
    lon = np.linspace(0, 2 * np.pi, n_lon, endpoint=False)
    grid = np.array([
        [radius * np.cos(la) * np.cos(lo), radius * np.cos(la) * np.sin(lo), radius * np.sin(la)]
        for la in lat for lo in lon
    ])
    south = [[0.0, 0.0, -radius]]
    north = [[0.0, 0.0, radius]]
    verts = np.vstack([grid, south, north]) + c
    si, ni = len(grid), len(grid) + 1
    faces = []
    rows = len(lat)
    for r in range(rows - 1):
        for k in range(n_lon):
            k2 = (k + 1) % n_lon
            a, b = r * n_lon + k, r * n_lon + k2
            d, e = (r + 1) * n_lon + k, (r + 1) * n_lon + k2
            faces.append([a, b, e])
            faces.append([a, e, d])
    for k in range(n_lon):
        k2 = (k + 1) % n_lon
        faces.append([si, k2, k])
        top = (rows - 1) * n_lon
        faces.append([ni, top + k, top + k2])
    return TriangleMesh(verts, np.asarray(faces))


def stadium_polygon(half_span: float, radius: float, segments: int = 32) -> np.ndarray:
    """Racetrack outline: semicircles of ``radius`` around (+-half_span, 0).

    Segment count is per semicircle and matches ``regular_polygon`` phases so
    a band built from this nests exactly against cylinder cores of the same
    radius centered at (+-half_span, 0).
    """
    ang_r = np.linspace(-np.pi / 2, np.pi / 2, segments + 1)
    right = np.column_stack([half_span + radius * np.cos(ang_r), radius * np.sin(ang_r)])
    ang_l = np.linspace(np.pi / 2, 3 * np.pi / 2, segments + 1)
    left = np.column_stack([-half_span + radius * np.cos(ang_l), radius * np.sin(ang_l)])
    return np.vstack([right, left])
