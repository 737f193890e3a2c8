"""Voxel geometry kernel.

Everything downstream (relation matrices, feasibility, deformables) runs on
dense boolean occupancy grids that share one world lattice: grid origins are
integer multiples of the resolution, so every pairwise test reduces to integer
index arithmetic and is exactly symmetric between the two parts.
"""

from __future__ import annotations

import base64
import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMesh, InterpenetratingParts, ResolutionMismatch, ResolutionTooCoarse
from .mesh import TriangleMesh

log = logging.getLogger(__name__)

MIN_OCCUPIED_CELLS = 8

# Deterministic sub-cell jitter keeps scanline rays off triangle edges.
_JITTER = np.array([2.03e-5, 3.11e-5, 1.77e-5])

AXES = ("x", "y", "z")
AXIS_INDEX = {"x": 0, "y": 1, "z": 2}
AXIS_UNIT = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0]), "z": np.array([0, 0, 1.0])}


@dataclass(frozen=True)
class Displacement:
    """One of the 12 infinitesimal displacement directions.

    ``origin`` matters only for rotations (the contact-frame center).
    """

    kind: str  # "translation" | "rotation"
    axis: str  # "x" | "y" | "z"
    sign: int  # +1 | -1
    origin: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("translation", "rotation"):
            raise ValueError(f"bad displacement kind {self.kind!r}")
        if self.axis not in AXES or self.sign not in (-1, 1):
            raise ValueError("displacement axis/sign out of range")

    @property
    def label(self) -> str:
        s = "+" if self.sign > 0 else "-"
        return f"{s}r{self.axis}" if self.kind == "rotation" else f"{s}{self.axis}"

    def opposite(self) -> "Displacement":
        return Displacement(self.kind, self.axis, -self.sign, self.origin)


TRANSLATION_LABELS = ("+x", "-x", "+y", "-y", "+z", "-z")
ROTATION_LABELS = ("+rx", "-rx", "+ry", "-ry", "+rz", "-rz")
DISPLACEMENT_LABELS = TRANSLATION_LABELS + ROTATION_LABELS
OPPOSITE_LABEL = {lab: lab.replace("+", "~").replace("-", "+").replace("~", "-") for lab in DISPLACEMENT_LABELS}


def translations() -> list[Displacement]:
    return [Displacement("translation", ax, sg) for ax in AXES for sg in (+1, -1)]


def rotations(origin) -> list[Displacement]:
    o = tuple(float(x) for x in origin)
    return [Displacement("rotation", ax, sg, o) for ax in AXES for sg in (+1, -1)]


def all_displacements(origin) -> list[Displacement]:
    """The canonical 12: +x,-x,+y,-y,+z,-z then the six rotations."""
    return translations() + rotations(origin)


@dataclass
class VoxelGrid:
    """Dense occupancy on the shared world lattice.

    ``origin`` is the world position of the minimum corner of cell (0,0,0)
    and is always an integer multiple of ``resolution``.
    """

    origin: np.ndarray
    resolution: float
    occupancy: np.ndarray

    def __post_init__(self) -> None:
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        if self.occupancy.ndim != 3:
            raise ValueError("occupancy must be a 3-D boolean array")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.occupancy.shape  # type: ignore[return-value]

    @property
    def count(self) -> int:
        return int(self.occupancy.sum())

    def cell_centers(self) -> np.ndarray:
        idx = np.argwhere(self.occupancy)
        return self.origin + (idx + 0.5) * self.resolution

    def occupied_index_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.argwhere(self.occupancy)
        if len(idx) == 0:
            raise ValueError("grid has no occupied cells")
        return idx.min(axis=0), idx.max(axis=0)

    def copy(self) -> "VoxelGrid":
        return VoxelGrid(self.origin.copy(), self.resolution, self.occupancy.copy())


def _lattice_offset(a: VoxelGrid, b: VoxelGrid) -> np.ndarray:
    """Integer cell offset of b's origin relative to a's origin."""
    if abs(a.resolution - b.resolution) > 1e-9 * max(a.resolution, b.resolution):
        raise ResolutionMismatch(f"resolutions differ: {a.resolution} vs {b.resolution}")
    delta = (b.origin - a.origin) / a.resolution
    rounded = np.rint(delta)
    if np.max(np.abs(delta - rounded)) > 1e-6:
        raise ResolutionMismatch("grids are not on a common lattice")
    return rounded.astype(np.int64)


def overlap_count(a: VoxelGrid, b: VoxelGrid, shift: tuple[int, int, int] = (0, 0, 0)) -> int:
    """World-space cells occupied in both grids, with ``a`` moved by ``shift`` cells."""
    off = _lattice_offset(a, b)
    # a-cell i, after shifting a, lands on b-cell i + shift - off
    rel = np.array(shift, dtype=np.int64) - off
    a_dims = np.array(a.dims)
    b_dims = np.array(b.dims)
    a_lo = np.maximum(0, -rel)
    a_hi = np.minimum(a_dims, b_dims - rel)
    if np.any(a_lo >= a_hi):
        return 0
    b_lo = a_lo + rel
    b_hi = a_hi + rel
    sub_a = a.occupancy[a_lo[0]:a_hi[0], a_lo[1]:a_hi[1], a_lo[2]:a_hi[2]]
    sub_b = b.occupancy[b_lo[0]:b_hi[0], b_lo[1]:b_hi[1], b_lo[2]:b_hi[2]]
    return int(np.count_nonzero(sub_a & sub_b))


# ---------------------------------------------------------------------------
# Voxelization
# ---------------------------------------------------------------------------


def voxelize(mesh: TriangleMesh, resolution: float, check_min_cells: bool = True) -> VoxelGrid:
    """Rasterize a mesh onto the shared lattice.

    Watertight meshes get a scanline parity fill (a cell is occupied iff its
    center lies inside). Anything else falls back to a surface shell plus an
    exterior flood fill from the grid boundary.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if len(mesh.triangles) == 0:
        raise EmptyMesh(f"mesh {mesh.name!r} has no triangles")
    lo, hi = mesh.aabb
    i0 = np.floor(lo / resolution + 1e-9).astype(np.int64) - 1
    i1 = np.floor(hi / resolution - 1e-9).astype(np.int64) + 2
    dims = i1 - i0
    origin = i0 * resolution
    tris = mesh.vertices[mesh.triangles]

    if mesh.is_watertight():
        occ = _parity_fill(tris, origin, dims, resolution)
    else:
        log.info("mesh %r is not watertight; using shell + flood fill", mesh.name)
        shell = _surface_shell(tris, origin, dims, resolution)
        occ = ~_exterior_flood(shell)

    grid = VoxelGrid(origin, resolution, occ)
    if check_min_cells and grid.count < MIN_OCCUPIED_CELLS:
        raise ResolutionTooCoarse(
            f"part {mesh.name!r} yields {grid.count} occupied cells at resolution "
            f"{resolution}; need at least {MIN_OCCUPIED_CELLS}"
        )
    return grid


def _parity_fill(tris: np.ndarray, origin: np.ndarray, dims: np.ndarray, res: float) -> np.ndarray:
    nx, ny, nz = (int(d) for d in dims)
    jit = _JITTER * res
    col_x = origin[0] + (np.arange(nx) + 0.5) * res + jit[0]
    col_y = origin[1] + (np.arange(ny) + 0.5) * res + jit[1]
    crossings: dict[tuple[int, int], list[float]] = defaultdict(list)

    for a, b, c in tris:
        d1, d2 = b - a, c - a
        det = d1[0] * d2[1] - d1[1] * d2[0]
        span = max(abs(d1[0]), abs(d1[1]), abs(d2[0]), abs(d2[1]), 1e-30)
        if abs(det) < 1e-12 * span * span:
            continue  # vertical triangle: zero-measure for z-rays
        xs = (a[0], b[0], c[0])
        ys = (a[1], b[1], c[1])
        ix0 = max(0, int(np.floor((min(xs) - origin[0]) / res - 0.5)))
        ix1 = min(nx - 1, int(np.ceil((max(xs) - origin[0]) / res)))
        iy0 = max(0, int(np.floor((min(ys) - origin[1]) / res - 0.5)))
        iy1 = min(ny - 1, int(np.ceil((max(ys) - origin[1]) / res)))
        if ix0 > ix1 or iy0 > iy1:
            continue
        px = col_x[ix0:ix1 + 1, None] - a[0]
        py = col_y[None, iy0:iy1 + 1] - a[1]
        u = (px * d2[1] - py * d2[0]) / det
        v = (d1[0] * py - d1[1] * px) / det
        hit = (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
        if not hit.any():
            continue
        z = a[2] + u * d1[2] + v * d2[2]
        for gx, gy in zip(*np.nonzero(hit)):
            crossings[(ix0 + gx, iy0 + gy)].append(float(z[gx, gy]))

    occ = np.zeros((nx, ny, nz), dtype=bool)
    centers_z = origin[2] + (np.arange(nz) + 0.5) * res + jit[2]
    for (ix, iy), zs in crossings.items():
        zs_sorted = np.sort(np.asarray(zs))
        below = np.searchsorted(zs_sorted, centers_z)
        occ[ix, iy, :] = (below % 2) == 1
    return occ


def _surface_shell(tris: np.ndarray, origin: np.ndarray, dims: np.ndarray, res: float) -> np.ndarray:
    """Cells whose closed box intersects any triangle (SAT test)."""
    nx, ny, nz = (int(d) for d in dims)
    shell = np.zeros((nx, ny, nz), dtype=bool)
    h = res / 2.0
    box_axes = np.eye(3)
    for a, b, c in tris:
        lo = np.minimum(np.minimum(a, b), c)
        hi = np.maximum(np.maximum(a, b), c)
        c0 = np.maximum(0, np.floor((lo - origin) / res - 1e-9).astype(int))
        c1 = np.minimum([nx - 1, ny - 1, nz - 1], np.floor((hi - origin) / res + 1e-9).astype(int))
        if np.any(c0 > c1):
            continue
        gx, gy, gz = np.meshgrid(*(np.arange(c0[i], c1[i] + 1) for i in range(3)), indexing="ij")
        centers = origin + (np.stack([gx, gy, gz], axis=-1) + 0.5) * res
        pts = centers.reshape(-1, 3)
        ok = np.ones(len(pts), dtype=bool)
        v0, v1, v2 = a - pts, b - pts, c - pts
        # box axes
        for i in range(3):
            mn = np.minimum(np.minimum(v0[:, i], v1[:, i]), v2[:, i])
            mx = np.maximum(np.maximum(v0[:, i], v1[:, i]), v2[:, i])
            ok &= ~((mn > h) | (mx < -h))
        # triangle normal
        n = np.cross(b - a, c - a)
        r = h * (abs(n[0]) + abs(n[1]) + abs(n[2]))
        dist = v0 @ n
        ok &= np.abs(dist) <= r + 1e-12
        # 9 edge cross axes
        for e in (b - a, c - b, a - c):
            for ax in box_axes:
                axis = np.cross(e, ax)
                if np.allclose(axis, 0):
                    continue
                p0, p1, p2 = v0 @ axis, v1 @ axis, v2 @ axis
                r = h * (abs(axis[0]) + abs(axis[1]) + abs(axis[2]))
                mn = np.minimum(np.minimum(p0, p1), p2)
                mx = np.maximum(np.maximum(p0, p1), p2)
                ok &= ~((mn > r + 1e-12) | (mx < -r - 1e-12))
        sel = np.stack([gx.ravel()[ok], gy.ravel()[ok], gz.ravel()[ok]])
        shell[sel[0], sel[1], sel[2]] = True
    return shell


def _exterior_flood(blocked: np.ndarray) -> np.ndarray:
    """Flood the complement of ``blocked`` from the grid boundary (6-conn)."""
    ext = np.zeros_like(blocked)
    free = ~blocked
    ext[0, :, :] |= free[0, :, :]
    ext[-1, :, :] |= free[-1, :, :]
    ext[:, 0, :] |= free[:, 0, :]
    ext[:, -1, :] |= free[:, -1, :]
    ext[:, :, 0] |= free[:, :, 0]
    ext[:, :, -1] |= free[:, :, -1]
    while True:
        grown = ext.copy()
        grown[1:, :, :] |= ext[:-1, :, :]
        grown[:-1, :, :] |= ext[1:, :, :]
        grown[:, 1:, :] |= ext[:, :-1, :]
        grown[:, :-1, :] |= ext[:, 1:, :]
        grown[:, :, 1:] |= ext[:, :, :-1]
        grown[:, :, :-1] |= ext[:, :, 1:]
        grown &= free
        if grown.sum() == ext.sum():
            return grown
        ext = grown


# ---------------------------------------------------------------------------
# Displacement
# ---------------------------------------------------------------------------


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    i = AXIS_INDEX[axis]
    j, k = (i + 1) % 3, (i + 2) % 3
    m = np.eye(3)
    m[j, j], m[j, k] = c, -s
    m[k, j], m[k, k] = s, c
    return m


def displace(g: VoxelGrid, d: Displacement, magnitude: float | None = None) -> VoxelGrid:
    """Move a grid by one infinitesimal displacement.

    Translations shift the origin (default: one cell). Rotations map occupied
    cell centers about ``d.origin`` and re-rasterize onto the same lattice;
    the default angle moves the farthest occupied cell by at most one cell.
    """
    if d.kind == "translation":
        mag = g.resolution if magnitude is None else float(magnitude)
        new_origin = g.origin + d.sign * mag * AXIS_UNIT[d.axis]
        return VoxelGrid(new_origin, g.resolution, g.occupancy.copy())

    if d.origin is None:
        raise ValueError("rotation displacement needs an origin")
    origin = np.asarray(d.origin, dtype=np.float64)
    pts = g.cell_centers() - origin
    r_max = float(np.sqrt((pts ** 2).sum(axis=1)).max()) if len(pts) else 0.0
    if r_max < 1e-12:
        log.info("rotation about a zero-radius grid: returning input unchanged")
        return g.copy()
    theta = (g.resolution / r_max) if magnitude is None else float(magnitude)
    rot = rotation_matrix(d.axis, d.sign * theta)
    moved = pts @ rot.T + origin
    idx = np.floor((moved - g.origin) / g.resolution).astype(np.int64)
    lo = idx.min(axis=0)
    hi = idx.max(axis=0)
    dims = hi - lo + 1
    occ = np.zeros(dims, dtype=bool)
    shifted = idx - lo
    occ[shifted[:, 0], shifted[:, 1], shifted[:, 2]] = True
    return VoxelGrid(g.origin + lo * g.resolution, g.resolution, occ)


# ---------------------------------------------------------------------------
# Contact patches
# ---------------------------------------------------------------------------

# Offsets (on the half-cell integer lattice) within which two contact faces
# count as connected: in-plane neighbors are 2 apart, faces meeting at an
# edge are (1,1) apart.
_FACE_NEIGHBOR_OFFSETS = [
    np.array(o)
    for o in (
        (dx, dy, dz)
        for dx in (-2, -1, 0, 1, 2)
        for dy in (-2, -1, 0, 1, 2)
        for dz in (-2, -1, 0, 1, 2)
    )
    if 0 < o[0] ** 2 + o[1] ** 2 + o[2] ** 2 <= 4
]


@dataclass
class ContactPatch:
    """All shared cell faces between two touching parts.

    ``normals`` point from the first part into the second; ``labels`` mark
    connected components so one constraint surface can be selected.
    """

    cell_faces: np.ndarray  # (F, 3) face centers, mm
    normals: np.ndarray  # (F, 3) unit integer vectors
    labels: np.ndarray  # (F,) component ids, 0-based
    resolution: float
    centroid: np.ndarray = field(init=False)
    area: float = field(init=False)

    def __post_init__(self) -> None:
        if len(self.cell_faces):
            self.centroid = self.cell_faces.mean(axis=0)
        else:
            self.centroid = np.zeros(3)
        self.area = float(len(self.cell_faces)) * self.resolution ** 2

    @property
    def is_empty(self) -> bool:
        return len(self.cell_faces) == 0

    @property
    def n_components(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def component_centroid(self, label: int) -> np.ndarray:
        return self.cell_faces[self.labels == label].mean(axis=0)


def contact_patch(a: VoxelGrid, b: VoxelGrid) -> ContactPatch:
    """Faces where an occupied cell of ``a`` is 6-adjacent to one of ``b``."""
    if overlap_count(a, b) > 0:
        raise InterpenetratingParts("parts overlap; contact surface is undefined")
    centers = []
    normals = []
    res = a.resolution
    for ax in range(3):
        for sg in (+1, -1):
            shift = [0, 0, 0]
            shift[ax] = sg
            off = _lattice_offset(a, b)
            rel = np.array(shift, dtype=np.int64) - off
            a_dims, b_dims = np.array(a.dims), np.array(b.dims)
            a_lo = np.maximum(0, -rel)
            a_hi = np.minimum(a_dims, b_dims - rel)
            if np.any(a_lo >= a_hi):
                continue
            b_lo, b_hi = a_lo + rel, a_hi + rel
            sub_a = a.occupancy[a_lo[0]:a_hi[0], a_lo[1]:a_hi[1], a_lo[2]:a_hi[2]]
            sub_b = b.occupancy[b_lo[0]:b_hi[0], b_lo[1]:b_hi[1], b_lo[2]:b_hi[2]]
            touch = np.argwhere(sub_a & sub_b)
            if len(touch) == 0:
                continue
            a_idx = touch + a_lo
            face = a.origin + (a_idx + 0.5) * res + 0.5 * res * np.array(shift)
            centers.append(face)
            normals.append(np.tile(shift, (len(face), 1)))
    if not centers:
        return ContactPatch(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros(0, dtype=np.int64), res)
    faces = np.vstack(centers)
    norms = np.vstack(normals)
    labels = _label_components(faces, res)
    return ContactPatch(faces, norms, labels, res)


def _label_components(faces: np.ndarray, res: float) -> np.ndarray:
    keys = np.rint(faces / (res / 2.0)).astype(np.int64)
    index: dict[tuple[int, int, int], int] = {}
    for i, k in enumerate(map(tuple, keys)):
        index[k] = i  # duplicate face centers (different normals) share a key
    labels = np.full(len(faces), -1, dtype=np.int64)
    groups: dict[tuple[int, int, int], list[int]] = defaultdict(list)
    for i, k in enumerate(map(tuple, keys)):
        groups[k].append(i)
    current = 0
    for seed_key in groups:
        if labels[groups[seed_key][0]] >= 0:
            continue
        stack = [seed_key]
        seen = {seed_key}
        while stack:
            k = stack.pop()
            for i in groups[k]:
                labels[i] = current
            base = np.array(k)
            for off in _FACE_NEIGHBOR_OFFSETS:
                nk = tuple(base + off)
                if nk in groups and nk not in seen:
                    seen.add(nk)
                    stack.append(nk)
        current += 1
    return labels


# ---------------------------------------------------------------------------
# Stable pose
# ---------------------------------------------------------------------------


def union_grid(grids: list[VoxelGrid]) -> VoxelGrid:
    """Union occupancy of several grids on their common lattice."""
    if not grids:
        raise ValueError("empty product")
    res = grids[0].resolution
    base = grids[0]
    mins, maxs = [], []
    for g in grids:
        off = _lattice_offset(base, g)
        mins.append(off)
        maxs.append(off + np.array(g.dims))
    lo = np.min(mins, axis=0)
    hi = np.max(maxs, axis=0)
    occ = np.zeros(hi - lo, dtype=bool)
    for g, off in zip(grids, mins):
        s = off - lo
        d = np.array(g.dims)
        occ[s[0]:s[0] + d[0], s[1]:s[1] + d[1], s[2]:s[2] + d[2]] |= g.occupancy
    return VoxelGrid(base.origin + lo * res, res, occ)


def stable_pose_frame(product: list[VoxelGrid]) -> str:
    """World direction to use as +Z: opposite the widest-footprint down axis.

    Candidates are the six axis-aligned "down" directions; ties prefer the
    input orientation (down = -z) and then lexicographic axis order.
    """
    union = union_grid(product)
    occ = union.occupancy

    def footprint(axis: int, sign: int) -> int:
        proj = np.moveaxis(occ, axis, 0)
        layers = np.nonzero(proj.reshape(proj.shape[0], -1).any(axis=1))[0]
        layer = layers[-1] if sign > 0 else layers[0]
        return int(proj[layer].sum())

    candidates = ["-z", "+x", "-x", "+y", "-y", "+z"]
    best, best_area = None, -1
    for down in candidates:
        area = footprint(AXIS_INDEX[down[1]], +1 if down[0] == "+" else -1)
        if area > best_area:
            best, best_area = down, area
    return OPPOSITE_LABEL[best]  # type: ignore[index]


# ---------------------------------------------------------------------------
# Debug serialization
# ---------------------------------------------------------------------------


def grid_to_payload(g: VoxelGrid) -> dict:
    packed = np.packbits(g.occupancy.astype(np.uint8).ravel())
    return {
        "origin": [float(x) for x in g.origin],
        "resolution": float(g.resolution),
        "dims": [int(d) for d in g.dims],
        "occupied": g.count,
        "bits": base64.b64encode(packed.tobytes()).decode("ascii"),
    }


def grid_from_payload(payload: dict) -> VoxelGrid:
    dims = payload["dims"]
    n = dims[0] * dims[1] * dims[2]
    raw = np.frombuffer(base64.b64decode(payload["bits"]), dtype=np.uint8)
    occ = np.unpackbits(raw, count=n).astype(bool).reshape(dims)
    return VoxelGrid(np.array(payload["origin"]), float(payload["resolution"]), occ)
