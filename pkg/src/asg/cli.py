"""Command-line surface: extract, optimize, verify, report, fixture.

Exit codes: 0 success, 2 invalid input, 3 the optimizer found no feasible
sequence, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    tomllib = None

from . import __version__
from .bundle import (
    check_eta,
    load_bundle,
    load_sequence,
    optimize_report_dict,
    save_bundle,
    save_convergence_csv,
    save_sequence,
    sequence_to_dict,
    verification_report_dict,
    write_atomic,
)
from .errors import (
    AsgError,
    BadReference,
    BundleCorrupt,
    ConfigInvalid,
    EmptyMesh,
    EtaMismatch,
    ManifestError,
    MissingArtifacts,
    MissingTipAnnotation,
    ResolutionMismatch,
    ResolutionTooCoarse,
    TooLarge,
)
from .fixtures import FIXTURE_NAMES, write_fixture
from .manifest import load_manifest
from .moga import GAConfig, evolve
from .pipeline import extract_relations
from .plots import scatter_svg, write_summary
from .verify import exhaustive_front, pareto_check

_INVALID_INPUT = (
    ManifestError,
    BundleCorrupt,
    EtaMismatch,
    EmptyMesh,
    ResolutionTooCoarse,
    ResolutionMismatch,
    ConfigInvalid,
    MissingArtifacts,
    MissingTipAnnotation,
    TooLarge,
    BadReference,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asg", description="Assembly sequence generation")
    parser.add_argument("--version", action="version", version=f"asg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="Compute the relation matrices from a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True, help="bundle JSON path")
    p.add_argument("--resolution", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("optimize", help="Run the two-objective GA from a matrix bundle")
    p.add_argument("bundle", type=Path)
    p.add_argument("-o", "--outdir", type=Path, required=True)
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rates", type=str, default=None, help="crossover,mutation,cut-and-paste,break-and-join")
    p.add_argument("--config", type=Path, default=None, help="TOML/JSON file with GA parameters (flags win)")

    p = sub.add_parser("verify", help="Reorder-neighborhood Pareto check of a sequence")
    p.add_argument("bundle", type=Path)
    p.add_argument("sequence", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--exhaustive-max", type=int, default=7)

    p = sub.add_parser("report", help="Emit a scatter SVG and a text summary for a run directory")
    p.add_argument("rundir", type=Path)
    p.add_argument("-o", "--outdir", type=Path, required=True)

    p = sub.add_parser("fixture", help="Write one of the shipped fixture models")
    p.add_argument("name", choices=FIXTURE_NAMES)
    p.add_argument("-o", "--outdir", type=Path, required=True)
    return parser


def _cmd_extract(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.resolution is not None:
        manifest.geometry.resolution = args.resolution
    if args.seed is not None:
        manifest.geometry.seed = args.seed
    rel, summary = extract_relations(manifest)
    save_bundle(rel, args.output)
    print(f"model {rel.model}: eta={summary.eta} resolution={summary.resolution:g}")
    print(f"contact pairs: {summary.contact_pairs}")
    for note in summary.deformable_notes:
        print(f"deformable: {note}")
    print(f"stable up direction: {rel.stable_up}")
    print(f"bundle written to {args.output}")
    return 0


def _parse_flat_toml(text: str) -> dict:
    """Key = value lines with numeric/bool/string values (GA configs are flat)."""
    out: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"cannot parse TOML line: {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if value.lower() in ("true", "false"):
            out[key] = value.lower() == "true"
        elif value.startswith(("'", '"')):
            out[key] = value.strip("'\"")
        else:
            try:
                out[key] = int(value)
            except ValueError:
                out[key] = float(value)
    return out


def _ga_config(args) -> GAConfig:
    values: dict = {}
    if args.config is not None:
        if args.config.suffix.lower() == ".toml":
            text = args.config.read_text()
            values = tomllib.loads(text) if tomllib is not None else _parse_flat_toml(text)
        else:
            values = json.loads(args.config.read_text())
        unknown = set(values) - {f for f in GAConfig.__dataclass_fields__}
        if unknown:
            raise ConfigInvalid(f"unknown GA config keys: {sorted(unknown)}")
    cfg = GAConfig(**values)
    if args.rates is not None:
        try:
            c, m, cp, bj = (float(x) for x in args.rates.split(","))
        except ValueError:
            raise ConfigInvalid(f"--rates expects four comma-separated numbers, got {args.rates!r}")
        cfg.crossover_rate, cfg.mutation_rate = c, m
        cfg.cut_and_paste_rate, cfg.break_and_join_rate = cp, bj
    for field in ("generations", "iterations", "population", "seed"):
        v = getattr(args, field)
        if v is not None:
            setattr(cfg, field, v)
    cfg.validate()
    return cfg


def _cmd_optimize(args) -> int:
    rel = load_bundle(args.bundle)
    cfg = _ga_config(args)
    result = evolve(rel, cfg)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, rows in enumerate(result.histories):
        save_convergence_csv(rows, outdir / f"convergence_{i:02d}.csv")
    save_sequence(result.best.chromosome, result.best.fitness, rel, outdir / "sequence.json")
    echo = {f: getattr(cfg, f) for f in GAConfig.__dataclass_fields__}
    write_atomic(outdir / "report.json", json.dumps(optimize_report_dict(result, rel, echo), indent=1) + "\n")
    feasible = [m for m in result.ranked.members if m.fitness.feasible]
    print(f"model {rel.model}: best sum {result.best.fitness.total:g} "
          f"(fitness1={result.best.fitness.fitness1:g}, fitness2={result.best.fitness.fitness2:g})")
    print("order (direction): " + ", ".join(
        f"{pid} ({d})" for pid, d in zip(result.best.chromosome.order, result.best.chromosome.directions)))
    print(f"artifacts in {outdir}")
    if not feasible:
        print("warning: no feasible sequence found", file=sys.stderr)
        return 3
    return 0


def _cmd_verify(args) -> int:
    rel = load_bundle(args.bundle)
    chrom, doc = load_sequence(args.sequence)
    check_eta(doc, rel)
    report = pareto_check(chrom, rel)
    exhaustive = None
    if rel.eta <= args.exhaustive_max:
        exhaustive = exhaustive_front(rel, max_eta=args.exhaustive_max)
    payload = verification_report_dict(report, rel, exhaustive)
    write_atomic(args.output, json.dumps(payload, indent=1) + "\n")
    print(f"neighbors evaluated: {report.neighbor_count}")
    print(f"feasible fraction: {report.feasible_fraction:.3f}")
    print(f"dominated by a neighbor: {report.dominated_by_neighbor}")
    if exhaustive is not None:
        print(f"exhaustive front size: {len(exhaustive)}; base on front: {payload['base_on_front']}")
    print(f"report written to {args.output}")
    return 0


def _cmd_report(args) -> int:
    rundir = Path(args.rundir)
    report_path = rundir / "report.json"
    seq_path = rundir / "sequence.json"
    if not report_path.exists() or not seq_path.exists():
        raise MissingArtifacts(f"{rundir} lacks report.json/sequence.json (run `asg optimize` first)")
    report = json.loads(report_path.read_text())
    best = json.loads(seq_path.read_text())
    population = [(m["fitness1"], m["fitness2"]) for m in report["rank0"]]
    feasible_pct = 100.0 * sum(1 for m in report["rank0"] if m["feasible"]) / max(len(report["rank0"]), 1)
    neighborhood = None
    verification = None
    vpath = rundir / "verification.json"
    if vpath.exists():
        verification = json.loads(vpath.read_text())
        neighborhood = [(v["fitness1"], v["fitness2"]) for v in verification["neighbor_vectors"]]
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    svg = scatter_svg(population, (best["fitness1"], best["fitness2"]), neighborhood,
                      title=f"{report['model']}: fitness values")
    write_atomic(outdir / "scatter.svg", svg)
    write_summary(outdir / "summary.txt", report["model"], best, feasible_pct, verification)
    print(f"plots written to {outdir}")
    return 0


def _cmd_fixture(args) -> int:
    path = write_fixture(args.name, args.outdir)
    print(f"fixture {args.name} written; manifest at {path}")
    return 0


_HANDLERS = {
    "extract": _cmd_extract,
    "optimize": _cmd_optimize,
    "verify": _cmd_verify,
    "report": _cmd_report,
    "fixture": _cmd_fixture,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except _INVALID_INPUT as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except AsgError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # internal error
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
