"""
Command-line entry point.

Subcommands write their outputs plus a ``manifest.json`` into ``--out``.
The manifest holds everything needed to rerun the command (``monopole
replay``), and CSV bodies depend only on the manifest contents, never on
wall-clock time.

Exit codes: 0 success, 1 property or convergence failure, 2 usage or
config error, 3 divergence.

The layout of each ``report.json`` and of ``manifest.json`` is given as a
JSON Schema (draft 2020-12) in :data:`REPORT_SCHEMAS`.
"""
import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import cohomology as co
from . import kahler
from . import lattice as lat
from . import solver
from . import spinor_algebra as sa
from .lattice import ConfigError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3
CONVERGENCE_COLUMNS = ("N", "residual", "fitted_order")
STUDIES = ("weitzenbock", "dirac-dbar")


_NUM = {"type": "number"}
_INT_LIST = {"type": "array", "items": {"type": "integer"}}
REPORT_SCHEMAS = {
    "manifest": {
        "type": "object",
        "required": ["command", "config", "inputs", "out_dir", "seed", "version", "created"],
        "additionalProperties": False,
        "properties": {
            "command": {"enum": ["algebra-check", "cohomology", "solve", "convergence"]},
            "config": {"type": "object"},
            "inputs": {"type": "array", "items": {"type": "string"}},
            "out_dir": {"type": "string"},
            "seed": {"type": ["integer", "null"], "minimum": 0},
            "version": {"type": "string"},
            "created": {"type": "string"},
        },
    },
    "algebra-check": {
        "type": "object",
        "required": ["command", "invariants", "passed"],
        "additionalProperties": False,
        "properties": {
            "command": {"const": "algebra-check"},
            "passed": {"type": "boolean"},
            "invariants": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name", "defect", "tolerance", "passed"],
                    "additionalProperties": False,
                    "properties": {
                        "name": {"type": "string"},
                        "defect": {"type": "number", "minimum": 0},
                        "tolerance": {"type": "number", "minimum": 0},
                        "passed": {"type": "boolean"},
                    },
                },
            },
        },
    },
    "cohomology": {
        "type": "object",
        "required": ["command", "complex", "groups", "class", "lifts", "bockstein", "witness"],
        "additionalProperties": False,
        "properties": {
            "command": {"const": "cohomology"},
            "complex": {"type": ["string", "null"]},
            "class": {"type": "string"},
            "lifts": {"type": "boolean"},
            "bockstein": {"anyOf": [_INT_LIST, {"type": "null"}]},
            "witness": {"anyOf": [_INT_LIST, {"type": "null"}]},
            "groups": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["degree", "Z", "Z/2"],
                    "additionalProperties": False,
                    "properties": {"degree": {"type": "integer"}, "Z": {"type": "string"}, "Z/2": {"type": "string"}},
                },
            },
        },
    },
    "solve": {
        "type": "object",
        "required": ["command", "status"],
        "properties": {
            "command": {"const": "solve"},
            "status": {"enum": ["converged", "max_iterations", "stalled", "diverged"]},
            "converged": {"type": "boolean"},
            "iterations": {"type": "integer", "minimum": 0},
            "iteration": {"type": ["integer", "null"]},
            "message": {"type": "string"},
            "energy": _NUM,
            "dirac_residual": _NUM,
            "curv_residual": _NUM,
            "sup_phi_sq": _NUM,
            "wall_time": _NUM,
            "snapshot": {"type": ["string", "null"]},
            "bound": {
                "anyOf": [
                    {"type": "null"},
                    {
                        "type": "object",
                        "required": ["sup_phi_sq", "delta_sup", "bound", "margin", "ratio", "passed"],
                        "properties": {
                            "sup_phi_sq": _NUM, "delta_sup": _NUM, "bound": _NUM,
                            "margin": _NUM, "ratio": {"type": ["number", "null"]}, "passed": {"type": "boolean"},
                        },
                    },
                ]
            },
        },
    },
}


class UsageError(Exception):
    pass


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: list = field(default_factory=list)
    out_dir: str = None
    seed: int = None
    version: str = field(default_factory=tool_version)
    created: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S%z"))

    def write(self, out_dir):
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from None
        known = {"command", "config", "inputs", "out_dir", "seed", "version", "created"}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"{path}: unknown manifest key {sorted(unknown)[0]!r}")
        return cls(**doc)


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default, allow_nan=False) + "\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def parse_sizes(text) -> list:
    try:
        sizes = [int(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--sizes: expected comma-separated integers, got {text!r}") from None
    if len(sizes) < 2:
        raise UsageError("--sizes: need at least 2 grid sizes")
    if len(set(sizes)) != len(sizes):
        raise UsageError("--sizes: duplicate grid sizes")
    if min(sizes) < 3:
        raise UsageError("--sizes: grid sizes must be at least 3")
    return sizes


# ---------------------------------------------------------------------------
# commands; each takes a resolved config dict and an output directory


def run_algebra_check(config, out):
    report = sa.invariant_report(config["seed"], config["samples"])
    rows = [
        {"name": k, "defect": float(v), "tolerance": sa.INVARIANT_TOLERANCES[k],
         "passed": bool(v <= sa.INVARIANT_TOLERANCES[k])}
        for k, v in report.items()
    ]
    doc = {"command": "algebra-check", "invariants": rows, "passed": all(r["passed"] for r in rows)}
    _write_json(out / "report.json", doc)
    for r in rows:
        print(f"{r['name']:24s} {r['defect']:.3e}  {'ok' if r['passed'] else 'FAIL'}")
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def _load_complex(source) -> co.ChainComplex:
    if source in co.catalog_names():
        return co.load_catalog(source)
    path = Path(source)
    if not path.exists():
        raise UsageError(f"no such chain complex file or catalog entry: {source!r}")
    return co.ChainComplex.from_file(path)


def run_cohomology(config, out):
    cx = _load_complex(config["input"])
    table = []
    for k in range(cx.dim + 1):
        hz, h2 = co.cohomology_group(cx, k, "Z"), co.cohomology_group(cx, k, "Z/2")
        table.append({"degree": k, "Z": hz.describe(), "Z/2": h2.describe()})
    name = config["class"]
    doc = {"command": "cohomology", "complex": cx.name, "groups": table, "class": name}
    if name in cx.classes:
        w = cx.classes[name]
    elif cx.dim >= 2:
        w = co.cohomology_class(cx, 2, [0] * cx.rank(2), "Z/2")
        doc["class"] = "0"
    else:
        w = None
    if w is None:
        doc.update(lifts=True, bockstein=None, witness=None)
    else:
        decision = co.spinc_lift(cx, w)
        doc.update(
            lifts=decision.lifts,
            bockstein=list(decision.obstruction.coords),
            witness=None if decision.witness is None else list(decision.witness.representative),
        )
    _write_json(out / "report.json", doc)
    for row in table:
        print(f"H^{row['degree']}:  Z: {row['Z']:12s} Z/2: {row['Z/2']}")
    print(f"class: {doc['class']}")
    print(f"bockstein: {doc['bockstein']}")
    print(f"lifts: {'yes' if doc['lifts'] else 'no'}")
    if doc["witness"] is not None:
        print(f"witness: {doc['witness']}")
    return EXIT_OK


def run_solve(config, out):
    cfg = solver.SolverConfig.from_dict(config)
    try:
        report = solver.solve(cfg)
    except solver.DivergenceError as exc:
        _write_json(out / "report.json", {"command": "solve", "status": "diverged",
                                          "iteration": exc.iteration, "message": str(exc)})
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    grid = cfg.grid()
    if report.converged:
        report.bound = solver.bound_check(grid, report.A, report.phi, cfg.perturbation(), cfg.stencil,
                                          threshold=max(cfg.energy_tol, 1e-12))
    snap = out / "snapshot.npz"
    lat.save_snapshot(snap, grid, cfg.stencil, A=report.A, phi=report.phi)
    report.snapshot = snap.name
    report.write_trace(out / "trace.csv")
    doc = {"command": "solve", **report.to_dict()}
    _write_json(out / "report.json", doc)
    print(f"{report.status}: {report.iterations} iterations, energy {report.energy:.3e}, "
          f"sup|Phi|^2 {report.sup_phi_sq:.3e}")
    if report.bound is not None:
        b = report.bound
        verdict = "ok" if b.passed else "FAIL"
        if b.bound > 0:
            print(f"bound: sup|Phi|^2 / bound = {b.ratio:.3f} ({verdict})")
        else:
            print(f"bound: line is 0, sup|Phi|^2 = {b.sup_phi_sq:.3e} ({verdict})")
    ok = report.converged and (report.bound is None or report.bound.passed)
    return EXIT_OK if ok else EXIT_FAIL


def run_convergence(config, out):
    study, sizes, stencil, seed = config["study"], config["sizes"], config["stencil"], config["seed"]
    if study == "weitzenbock":
        res = lat.weitzenbock_study(sizes, stencil, variant=seed)
    else:
        res = kahler.dirac_dbar_study(sizes, stencil, variant=seed)
    order = lat.fitted_order(sizes, res)
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONVERGENCE_COLUMNS)
        for n, r in zip(sizes, res):
            w.writerow([n, repr(float(r)), repr(order)])
    print(f"{study} ({stencil}): fitted order {order:.3f} over N = {sizes}")
    return EXIT_OK


RUNNERS = {
    "algebra-check": run_algebra_check,
    "cohomology": run_cohomology,
    "solve": run_solve,
    "convergence": run_convergence,
}


# ---------------------------------------------------------------------------
# argument handling


def build_parser():
    p = argparse.ArgumentParser(prog="monopole", description="Lattice monopole equations on the flat 4-torus.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default="monopole-out", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="random seed (non-negative)")

    sp = sub.add_parser("algebra-check", help="check the spinor-algebra invariants")
    common(sp)
    sp.add_argument("--samples", type=int, default=200)

    sp = sub.add_parser("cohomology", help="cohomology table and Spin_c lift of a chain complex")
    common(sp)
    sp.add_argument("input", help="chain-complex JSON file or catalog name (" + ", ".join(co.catalog_names()) + ")")
    sp.add_argument("--class", dest="class_name", default="w2", help="named mod-2 class to test")

    sp = sub.add_parser("solve", help="gradient descent on the monopole energy")
    common(sp)
    sp.add_argument("--config", help="SolverConfig JSON file")
    sp.add_argument("--stencil", choices=lat.STENCILS)

    sp = sub.add_parser("convergence", help="grid-refinement study with a fitted order")
    common(sp)
    sp.add_argument("study", choices=STUDIES)
    sp.add_argument("--sizes", default="8,16", help="comma-separated grid sizes")
    sp.add_argument("--stencil", choices=lat.STENCILS, default="symmetric")

    sp = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    sp.add_argument("manifest")
    sp.add_argument("--out", default=None, help="output directory (default: the recorded one)")
    return p


def _check_seed(seed):
    if seed is not None and not 0 <= seed < 2**64:
        raise UsageError(f"--seed: must be an unsigned 64-bit integer, got {seed}")


def resolve(args) -> RunManifest:
    """Turn parsed arguments into a manifest with a complete config."""
    _check_seed(getattr(args, "seed", None))
    seed = args.seed
    inputs = []
    if args.command == "algebra-check":
        config = {"seed": 0 if seed is None else seed, "samples": args.samples}
    elif args.command == "cohomology":
        config = {"input": args.input, "class": args.class_name}
        inputs.append(args.input)
    elif args.command == "solve":
        cfg = solver.SolverConfig() if args.config is None else solver.SolverConfig.from_file(args.config)
        if args.config is not None:
            inputs.append(args.config)
        if seed is not None:
            cfg.seed = seed
        if args.stencil is not None:
            cfg.stencil = args.stencil
        cfg.validate()
        config = cfg.to_dict()
        seed = cfg.seed
    else:
        config = {
            "study": args.study,
            "sizes": parse_sizes(args.sizes),
            "stencil": args.stencil,
            "seed": 0 if seed is None else seed,
        }
    return RunManifest(args.command, config, inputs, str(args.out), config.get("seed", seed))


def execute(manifest: RunManifest, out_dir=None) -> int:
    out = _out_dir(out_dir or manifest.out_dir)
    manifest.out_dir = str(out)
    manifest.created = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    manifest.write(out)
    return RUNNERS[manifest.command](manifest.config, out)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "replay":
            manifest = RunManifest.read(args.manifest)
            if manifest.command not in RUNNERS:
                raise UsageError(f"{args.manifest}: unknown command {manifest.command!r}")
            return execute(manifest, args.out)
        return execute(resolve(args))
    except (UsageError, ConfigError, co.ChainComplexError, sa.DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
