"""Two-part relationship matrices extracted from assembled part grids.

Three products per model: the interference-free matrix (can part i translate
away unboundedly along d without hitting part k), the insertion matrix, and
the degree-of-constraint matrix (12 minus the number of the 12 infinitesimal
displacements that cause no interpenetration; 0 for non-touching pairs).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InterpenetratingParts
from .voxel import (
    AXIS_INDEX,
    AXIS_UNIT,
    ContactPatch,
    DISPLACEMENT_LABELS,
    OPPOSITE_LABEL,
    TRANSLATION_LABELS,
    VoxelGrid,
    contact_patch,
    overlap_count,
)

# Stream ids for seed-sequence spawning; geometry draws must not collide with
# the optimizer's per-iteration streams.
GEOMETRY_STREAM = 104729

# Ball radius (in resolutions) for contact-normal smoothing.
NORMAL_SMOOTHING_RADIUS = 1.6


@dataclass
class GeometryConfig:
    """Knobs that shape matrix extraction; echoed into every bundle."""

    resolution: float | None = None  # None: 1/64 of the product AABB's longest edge
    rotation_tolerance: float = 0.10  # pressing-flow fraction above which a rotation interferes
    seed: int = 0

    def resolved(self, resolution: float) -> "GeometryConfig":
        return GeometryConfig(resolution, self.rotation_tolerance, self.seed)


@dataclass
class AnalysisPart:
    """A part as the relation extractor sees it.

    Rigid parts carry one grid; string-like parts carry one grid per rigid
    tip (the flexible run is ignored); ring parts carry the adopted scaled
    grid. ``volume`` is the occupied-cell count used by insertion detection.
    """

    id: int
    name: str
    grids: list[VoxelGrid]
    tag: str = "rigid"

    @property
    def volume(self) -> int:
        return sum(g.count for g in self.grids)


@dataclass
class ConstraintFreeInfo:
    """F_j for the 12 displacement directions of part i against part k."""

    part_i: int
    part_k: int
    contact: bool
    F: dict[str, bool]
    rotation_origin: np.ndarray | None = None

    def free_count(self) -> int:
        return sum(self.F.values())

    def swapped(self) -> "ConstraintFreeInfo":
        """The same relation seen from the other part (directions negate)."""
        return ConstraintFreeInfo(
            self.part_k,
            self.part_i,
            self.contact,
            {lab: self.F[OPPOSITE_LABEL[lab]] for lab in DISPLACEMENT_LABELS},
            self.rotation_origin,
        )


def _combined_patch(a: AnalysisPart, b: AnalysisPart) -> ContactPatch:
    """Contact faces over every grid pair of two parts (tips included)."""
    patches = []
    for ga in a.grids:
        for gb in b.grids:
            if overlap_count(ga, gb) > 0:
                raise InterpenetratingParts(
                    f"parts {a.name!r} and {b.name!r} interpenetrate in their assembled poses"
                )
            patches.append(contact_patch(ga, gb))
    non_empty = [p for p in patches if not p.is_empty]
    if not non_empty:
        return patches[0] if patches else ContactPatch(
            np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros(0, dtype=np.int64), a.grids[0].resolution
        )
    faces = np.vstack([p.cell_faces for p in non_empty])
    normals = np.vstack([p.normals for p in non_empty])
    labels = []
    offset = 0
    for p in non_empty:
        labels.append(p.labels + offset)
        offset += p.n_components
    return ContactPatch(faces, normals, np.concatenate(labels), non_empty[0].resolution)


def _smoothed_normals(patch: ContactPatch) -> np.ndarray:
    """Average face normals over a small ball to undo voxel stair-stepping."""
    pts = patch.cell_faces
    nrm = patch.normals.astype(np.float64)
    r2 = (NORMAL_SMOOTHING_RADIUS * patch.resolution) ** 2
    sm = np.empty_like(nrm)
    for i in range(len(pts)):
        d2 = ((pts - pts[i]) ** 2).sum(axis=1)
        sm[i] = nrm[d2 <= r2].mean(axis=0)
    return sm


def _rotation_pressing_ratio(
    patch: ContactPatch, smooth: np.ndarray, axis: str, sign: int, origin: np.ndarray
) -> float:
    lever = patch.cell_faces - origin
    v = np.cross(sign * AXIS_UNIT[axis], lever)
    pressing = float(np.maximum(0.0, (v * smooth).sum(axis=1)).sum())
    norm = float(np.linalg.norm(v, axis=1).sum())
    return pressing / norm if norm > 1e-12 else 0.0


def _translation_free(a: AnalysisPart, b: AnalysisPart, axis: str, sign: int) -> bool:
    shift = [0, 0, 0]
    shift[AXIS_INDEX[axis]] = sign
    for ga in a.grids:
        for gb in b.grids:
            if overlap_count(ga, gb, tuple(shift)) > 0:
                return False
    return True


def component_rng(seed: int, id_a: int, id_b: int) -> np.random.Generator:
    """Deterministic generator keyed by the unordered part pair."""
    lo, hi = (id_a, id_b) if id_a <= id_b else (id_b, id_a)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(GEOMETRY_STREAM, lo, hi)))


def constraint_free_info(
    part_i: AnalysisPart, part_k: AnalysisPart, config: GeometryConfig
) -> ConstraintFreeInfo:
    """The 12-direction constraint-free information for one ordered pair.

    Translations displace part i by one cell and test for interpenetration.
    Rotations run a first-order pressing-flow test about the centroid of one
    contact component; with several components one is picked by the seeded
    pair generator. Non-touching pairs are free in all 12 directions.
    """
    patch = _combined_patch(part_i, part_k)
    F: dict[str, bool] = {}
    for lab in TRANSLATION_LABELS:
        F[lab] = _translation_free(part_i, part_k, lab[1], +1 if lab[0] == "+" else -1)
    if patch.is_empty:
        for lab in DISPLACEMENT_LABELS[6:]:
            F[lab] = True
        return ConstraintFreeInfo(part_i.id, part_k.id, False, F, None)
    rng = component_rng(config.seed, part_i.id, part_k.id)
    label = int(rng.integers(patch.n_components))
    origin = patch.component_centroid(label)
    smooth = _smoothed_normals(patch)
    for lab in DISPLACEMENT_LABELS[6:]:
        ratio = _rotation_pressing_ratio(patch, smooth, lab[2], +1 if lab[0] == "+" else -1, origin)
        F[lab] = ratio <= config.rotation_tolerance
    return ConstraintFreeInfo(part_i.id, part_k.id, True, F, origin)


def degree_of_constraint(info: ConstraintFreeInfo) -> int:
    """Eq.-style degree: 0 without contact, else 12 minus the free count."""
    if not info.contact:
        return 0
    return 12 - info.free_count()


def degree_matrix(
    parts: list[AnalysisPart], config: GeometryConfig
) -> tuple[np.ndarray, dict[tuple[int, int], ConstraintFreeInfo]]:
    """Symmetric degree-of-constraint matrix plus the upper-triangle infos.

    Only the upper triangle is computed; the lower follows from symmetry and
    the negative-direction entries from the transpose identity.
    """
    eta = len(parts)
    C = np.zeros((eta, eta), dtype=np.int64)
    infos: dict[tuple[int, int], ConstraintFreeInfo] = {}
    by_pos = {p.id: i for i, p in enumerate(parts)}
    for i in range(eta):
        for k in range(i + 1, eta):
            try:
                info = constraint_free_info(parts[i], parts[k], config)
            except InterpenetratingParts:
                raise
            infos[(parts[i].id, parts[k].id)] = info
            d = degree_of_constraint(info)
            a, b = by_pos[parts[i].id], by_pos[parts[k].id]
            C[a, b] = C[b, a] = d
    return C, infos


def pair_info(
    infos: dict[tuple[int, int], ConstraintFreeInfo], id_i: int, id_k: int
) -> ConstraintFreeInfo:
    """Info for an ordered pair, derived from the stored upper triangle."""
    if (id_i, id_k) in infos:
        return infos[(id_i, id_k)]
    return infos[(id_k, id_i)].swapped()


# ---------------------------------------------------------------------------
# Interference-free (unbounded translation) matrix
# ---------------------------------------------------------------------------


def _sweep_free(a: AnalysisPart, b: AnalysisPart, axis: str, sign: int) -> bool:
    """Can part a translate in 1-cell steps along the axis forever?

    The sweep stops once the parts' occupied bounding boxes disjoin; any
    intermediate overlap blocks the direction.
    """
    ax = AXIS_INDEX[axis]
    pairs = []
    for ga in a.grids:
        lo_a, hi_a = ga.occupied_index_bounds()
        for gb in b.grids:
            lo_b, hi_b = gb.occupied_index_bounds()
            off = np.rint((gb.origin - ga.origin) / ga.resolution).astype(np.int64)
            pairs.append((ga, gb, lo_a, hi_a, lo_b + off, hi_b + off))
    step = 0
    while True:
        step += 1
        any_boxes_overlap = False
        shift = [0, 0, 0]
        shift[ax] = sign * step
        for ga, gb, lo_a, hi_a, lo_b, hi_b in pairs:
            la = lo_a.copy()
            ha = hi_a.copy()
            la[ax] += sign * step
            ha[ax] += sign * step
            if np.all(la <= hi_b) and np.all(lo_b <= ha):
                any_boxes_overlap = True
                if overlap_count(ga, gb, tuple(shift)) > 0:
                    return False
        if not any_boxes_overlap:
            return True


def interference_free_matrix(
    parts: list[AnalysisPart], config: GeometryConfig
) -> dict[str, np.ndarray]:
    """M[d][i][k] = 1 iff part i can retreat unboundedly along d past part k.

    Positive directions are swept; negatives come from the transpose
    identity M[d][i][k] = M[opp d][k][i]. Diagonals are 1 by convention.
    """
    eta = len(parts)
    M = {lab: np.zeros((eta, eta), dtype=bool) for lab in TRANSLATION_LABELS}
    for lab in TRANSLATION_LABELS:
        np.fill_diagonal(M[lab], True)
    for i in range(eta):
        for k in range(eta):
            if i == k:
                continue
            for axis in "xyz":
                free = _sweep_free(parts[i], parts[k], axis, +1)
                M[f"+{axis}"][i, k] = free
                M[f"-{axis}"][k, i] = free
    return M


# ---------------------------------------------------------------------------
# Insertion detection
# ---------------------------------------------------------------------------


def detect_insertions(
    parts: list[AnalysisPart],
    infos: dict[tuple[int, int], ConstraintFreeInfo],
    C: np.ndarray,
    overrides: list[dict] | None = None,
) -> np.ndarray:
    """Peg-hole style insertion matrix.

    I[i][k] = 1 (part i inserted into part k, so k should precede i) iff the
    pair touches, exactly one translation axis is free with the four lateral
    translations blocked, the pair's degree is at least 8, and part i is the
    smaller of the two. Rows of ring parts are zeroed; the manifest may
    override individual entries.
    """
    eta = len(parts)
    by_pos = {p.id: i for i, p in enumerate(parts)}
    I = np.zeros((eta, eta), dtype=np.int64)
    for i, pi in enumerate(parts):
        for k, pk in enumerate(parts):
            if i == k:
                continue
            info = pair_info(infos, pi.id, pk.id)
            if not info.contact:
                continue
            free_axes = [ax for ax in "xyz" if info.F[f"+{ax}"] or info.F[f"-{ax}"]]
            if len(free_axes) != 1:
                continue
            if C[i, k] < 8:
                continue
            if pi.volume >= pk.volume:
                continue
            I[i, k] = 1
    for p in parts:
        if p.tag == "ring":
            I[by_pos[p.id], :] = 0
    for ov in overrides or []:
        a, b = by_pos[int(ov["part"])], by_pos[int(ov["into"])]
        I[a, b] = int(ov["value"])
    return I


# ---------------------------------------------------------------------------
# The extraction product
# ---------------------------------------------------------------------------


@dataclass
class RelationSet:
    """Everything the optimizer needs, decoupled from geometry.

    Matrices are indexed by part position (id - 1 for contiguous 1-based
    ids). This is the in-memory form of the matrix bundle file.
    """

    eta: int
    part_names: list[str]
    M: dict[str, np.ndarray]
    I: np.ndarray
    C: np.ndarray
    geometry: GeometryConfig
    stable_up: str = "+z"
    model: str = ""
    ring_scaling: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._m_stack = np.stack([self.M[lab] for lab in TRANSLATION_LABELS])
        self._opp_index = np.array(
            [TRANSLATION_LABELS.index(OPPOSITE_LABEL[lab]) for lab in TRANSLATION_LABELS]
        )

    def m_stack(self) -> np.ndarray:
        """(6, eta, eta) boolean stack ordered like TRANSLATION_LABELS."""
        return self._m_stack

    def opposite_index(self) -> np.ndarray:
        return self._opp_index
