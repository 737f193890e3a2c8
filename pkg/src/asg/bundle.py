"""File formats: matrix bundle, sequence file, reports, convergence CSV.

Every artifact is schema-versioned and written atomically (temp + rename);
loading a file with the wrong schema version fails loudly. The matrix bundle
is the contract between extraction and optimization: the optimizer runs from
it alone.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import BundleCorrupt, EtaMismatch
from .moga import ConvergenceRow, EvolveResult
from .relations import GeometryConfig, RelationSet
from .sequence import Chromosome, FitnessPair, step_cstd
from .voxel import TRANSLATION_LABELS, grid_from_payload, grid_to_payload

SCHEMA_VERSION = 1


def write_atomic(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _check_version(doc: dict, kind: str) -> None:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise BundleCorrupt(
            f"{kind}: schema_version {doc.get('schema_version')!r} != {SCHEMA_VERSION}"
        )


# ---------------------------------------------------------------------------
# Matrix bundle
# ---------------------------------------------------------------------------


def bundle_to_dict(rel: RelationSet) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "matrix_bundle",
        "model": rel.model,
        "eta": rel.eta,
        "part_names": rel.part_names,
        "geometry": {
            "resolution": rel.geometry.resolution,
            "rotation_tolerance": rel.geometry.rotation_tolerance,
            "seed": rel.geometry.seed,
        },
        "stable_up": rel.stable_up,
        "interference_free": {lab: rel.M[lab].astype(int).tolist() for lab in TRANSLATION_LABELS},
        "insertion": rel.I.astype(int).tolist(),
        "degree": rel.C.astype(int).tolist(),
        "ring_scaling": rel.ring_scaling,
    }


def save_bundle(rel: RelationSet, path: str | Path) -> Path:
    return write_atomic(path, json.dumps(bundle_to_dict(rel), indent=1, sort_keys=True) + "\n")


def load_bundle(path: str | Path) -> RelationSet:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise BundleCorrupt(f"bundle not found: {path}")
    except json.JSONDecodeError as e:
        raise BundleCorrupt(f"bundle {path} is not valid JSON: {e}")
    _check_version(doc, "matrix bundle")
    try:
        eta = int(doc["eta"])
        M = {lab: np.asarray(doc["interference_free"][lab], dtype=bool) for lab in TRANSLATION_LABELS}
        I = np.asarray(doc["insertion"], dtype=np.int64)
        C = np.asarray(doc["degree"], dtype=np.int64)
        geo = doc["geometry"]
        config = GeometryConfig(geo.get("resolution"), float(geo["rotation_tolerance"]), int(geo["seed"]))
        names = list(doc["part_names"])
    except (KeyError, TypeError, ValueError) as e:
        raise BundleCorrupt(f"bundle {path} is missing fields: {e}")
    for lab in TRANSLATION_LABELS:
        if M[lab].shape != (eta, eta):
            raise BundleCorrupt(f"bundle matrix {lab} has shape {M[lab].shape}, expected {(eta, eta)}")
    if I.shape != (eta, eta) or C.shape != (eta, eta) or len(names) != eta:
        raise BundleCorrupt("bundle matrices do not match eta")
    return RelationSet(
        eta=eta,
        part_names=names,
        M=M,
        I=I,
        C=C,
        geometry=config,
        stable_up=doc.get("stable_up", "+z"),
        model=doc.get("model", ""),
        ring_scaling=doc.get("ring_scaling", []),
    )


def ring_result_payload(part_id: int, factor: float, free: dict, grid) -> dict:
    return {
        "part_id": part_id,
        "scale_factor": factor,
        "free_directions": {k: bool(v) for k, v in free.items()},
        "scaled_grid": grid_to_payload(grid),
    }


def ring_result_grid(payload: dict):
    return grid_from_payload(payload["scaled_grid"])


# ---------------------------------------------------------------------------
# Sequence file
# ---------------------------------------------------------------------------


def sequence_to_dict(c: Chromosome, fit: FitnessPair, rel: RelationSet) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "sequence",
        "model": rel.model,
        "eta": rel.eta,
        "steps": [
            {"id": pid, "name": rel.part_names[pid - 1], "direction": d}
            for pid, d in zip(c.order, c.directions)
        ],
        "fitness1": fit.fitness1,
        "fitness2": fit.fitness2,
        "feasible": fit.feasible,
        "sum": fit.total,
        "step_cstd": step_cstd(c, rel.C),
    }


def save_sequence(c: Chromosome, fit: FitnessPair, rel: RelationSet, path: str | Path) -> Path:
    return write_atomic(path, json.dumps(sequence_to_dict(c, fit, rel), indent=1) + "\n")


def load_sequence(path: str | Path) -> tuple[Chromosome, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise BundleCorrupt(f"sequence file not found: {path}")
    except json.JSONDecodeError as e:
        raise BundleCorrupt(f"sequence file {path} is not valid JSON: {e}")
    _check_version(doc, "sequence file")
    try:
        order = tuple(int(s["id"]) for s in doc["steps"])
        dirs = tuple(str(s["direction"]) for s in doc["steps"])
    except (KeyError, TypeError, ValueError) as e:
        raise BundleCorrupt(f"sequence file {path} is malformed: {e}")
    return Chromosome(order, dirs), doc


def check_eta(doc: dict, rel: RelationSet) -> None:
    if int(doc.get("eta", -1)) != rel.eta:
        raise EtaMismatch(f"sequence eta {doc.get('eta')} != bundle eta {rel.eta}")


# ---------------------------------------------------------------------------
# Optimizer report + convergence CSVs
# ---------------------------------------------------------------------------


def optimize_report_dict(result: EvolveResult, rel: RelationSet, config_echo: dict) -> dict:
    rank0 = [
        {
            "order": list(m.chromosome.order),
            "directions": list(m.chromosome.directions),
            "fitness1": m.fitness.fitness1,
            "fitness2": m.fitness.fitness2,
            "feasible": m.fitness.feasible,
        }
        for m in result.ranked.front(0)
    ]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "optimize_report",
        "model": rel.model,
        "eta": rel.eta,
        "config": config_echo,
        "rank0": rank0,
        "best": sequence_to_dict(result.best.chromosome, result.best.fitness, rel),
        "iterations": len(result.histories),
        "population_size": result.population_size,
    }


CSV_HEADER = ["generation", "mean_fitness1", "mean_fitness2", "feasible_count", "best_sum"]


def save_convergence_csv(rows: list[ConvergenceRow], path: str | Path) -> Path:
    lines = [",".join(CSV_HEADER)]
    for r in rows:
        lines.append(
            f"{r.generation},{r.mean_fitness1:.6f},{r.mean_fitness2:.6f},{r.feasible_count},{r.best_sum:.6f}"
        )
    return write_atomic(path, "\n".join(lines) + "\n")


def load_convergence_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise BundleCorrupt(f"convergence CSV {path} has header {reader.fieldnames}")
        return [row for row in reader]


# ---------------------------------------------------------------------------
# Verification report
# ---------------------------------------------------------------------------


def verification_report_dict(report, rel: RelationSet, exhaustive=None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "verification_report",
        "model": rel.model,
        "eta": rel.eta,
        "base": sequence_to_dict(report.base, report.base_fitness, rel),
        "neighbor_count": report.neighbor_count,
        "feasible_fraction": report.feasible_fraction,
        "dominated_by_neighbor": report.dominated_by_neighbor,
        "neighbor_vectors": [
            {"fitness1": f.fitness1, "fitness2": f.fitness2, "feasible": f.feasible}
            for _, f in report.neighbors
        ],
    }
    if exhaustive is not None:
        front_vecs = [list(f.vector()) for f, _ in exhaustive]
        doc["exhaustive_front"] = front_vecs
        doc["base_on_front"] = list(report.base_fitness.vector()) in front_vecs
    return doc
