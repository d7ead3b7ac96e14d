import json
from pathlib import Path

import jsonschema
import pytest

from monopole import cli
from monopole.solver import SolverConfig

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(argv, capsys=None):
    code = cli.main(argv)
    out = capsys.readouterr() if capsys is not None else None
    return code, out


def load(path):
    return json.loads(path.read_text())


def validate(out_dir, kind):
    report = load(out_dir / "report.json")
    jsonschema.validate(report, cli.REPORT_SCHEMAS[kind])
    jsonschema.validate(load(out_dir / "manifest.json"), cli.REPORT_SCHEMAS["manifest"])
    return report


def test_algebra_check(tmp_path, capsys):
    code, out = run(["algebra-check", "--out", str(tmp_path)], capsys)
    assert code == cli.EXIT_OK
    report = validate(tmp_path, "algebra-check")
    rows = {r["name"]: r for r in report["invariants"]}
    assert rows["star_squared"]["defect"] < 1e-13
    assert report["passed"] and "star_squared" in out.out
    # the schema round-trips: dump, reload, validate again
    again = json.loads(json.dumps(report))
    jsonschema.validate(again, cli.REPORT_SCHEMAS["algebra-check"])
    assert again == report


def test_schema_rejects_bad_report():
    bad = {"command": "algebra-check", "invariants": [{"name": "x", "defect": -1.0}], "passed": True}
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, cli.REPORT_SCHEMAS["algebra-check"])


def test_cohomology_cp2(tmp_path, capsys):
    code, out = run(["cohomology", "cp2", "--out", str(tmp_path)], capsys)
    assert code == cli.EXIT_OK
    assert "lifts: yes" in out.out
    report = validate(tmp_path, "cohomology")
    assert report["lifts"] and report["witness"] == [1]


def test_cohomology_torsion(tmp_path, capsys):
    code, out = run(["cohomology", "torsion_z2", "--out", str(tmp_path)], capsys)
    assert code == cli.EXIT_OK
    assert "lifts: no" in out.out
    report = validate(tmp_path, "cohomology")
    assert report["bockstein"] == [1] and report["witness"] is None


def test_cohomology_empty_file(tmp_path, capsys):
    src = tmp_path / "empty.json"
    src.write_text(json.dumps({"ranks": [0, 0, 0, 0, 0]}))
    code, out = run(["cohomology", str(src), "--out", str(tmp_path / "o")], capsys)
    assert code == cli.EXIT_OK and "lifts: yes" in out.out
    report = validate(tmp_path / "o", "cohomology")
    assert all(g["Z"] == "0" and g["Z/2"] == "0" for g in report["groups"])


def test_cohomology_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"ranks": [1, 1],\n "boundaries": {"1": [[1]}}')
    code, out = run(["cohomology", str(bad), "--out", str(tmp_path / "o")], capsys)
    assert code == cli.EXIT_USAGE and "line 2" in out.err
    bad.write_text(json.dumps({"ranks": [1, 1, 1], "boundaries": {"1": [[1]], "2": [[1]]}}))
    code, out = run(["cohomology", str(bad), "--out", str(tmp_path / "o")], capsys)
    assert code == cli.EXIT_USAGE
    code, _ = run(["cohomology", str(tmp_path / "missing.json"), "--out", str(tmp_path / "m")], capsys)
    assert code == cli.EXIT_USAGE


def test_solve_default(tmp_path, capsys):
    code, out = run(["solve", "--config", str(CONFIGS / "solve_default.json"), "--out", str(tmp_path)], capsys)
    assert code == cli.EXIT_OK, out.out
    report = validate(tmp_path, "solve")
    assert report["converged"] and report["bound"]["passed"]
    assert report["energy"] < 1e-8 and report["sup_phi_sq"] < 1e-6
    header = (tmp_path / "trace.csv").read_text().splitlines()[0]
    assert header == "iteration,energy,dirac_residual,curv_residual,sup_phi_sq,step_size"
    assert (tmp_path / "snapshot.npz").exists()


def test_solve_zero_iterations(tmp_path, capsys):
    cfg = SolverConfig(max_iterations=0).to_dict()
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    code, _ = run(["solve", "--config", str(p), "--out", str(tmp_path / "o")], capsys)
    assert code == cli.EXIT_FAIL
    report = validate(tmp_path / "o", "solve")
    assert report["status"] == "max_iterations" and report["bound"] is None


def test_solve_diverged(tmp_path, capsys):
    cfg = SolverConfig(n=4, step_rule="fixed", step_size=1e200).to_dict()
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    with pytest.warns(RuntimeWarning):
        code, _ = run(["solve", "--config", str(p), "--out", str(tmp_path / "o")], capsys)
    assert code == cli.EXIT_DIVERGED
    assert validate(tmp_path / "o", "solve")["status"] == "diverged"


@pytest.mark.parametrize("patch, key", [({"step_sise": 1e-3}, "step_sise"), ({"energy_tol": -1}, "energy_tol")])
def test_solve_bad_config(tmp_path, capsys, patch, key):
    cfg = SolverConfig().to_dict()
    cfg.update(patch)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    code, out = run(["solve", "--config", str(p), "--out", str(tmp_path / "o")], capsys)
    assert code == cli.EXIT_USAGE and key in out.err


@pytest.mark.parametrize("study", cli.STUDIES)
@pytest.mark.parametrize("stencil, floor", [("symmetric", 1.9), ("forward", 0.9)])
def test_convergence(tmp_path, capsys, study, stencil, floor):
    out_dir = tmp_path / "o"
    code, _ = run(["convergence", study, "--sizes", "8,16", "--stencil", stencil, "--out", str(out_dir)], capsys)
    assert code == cli.EXIT_OK
    lines = (out_dir / "convergence.csv").read_text().splitlines()
    assert lines[0] == "N,residual,fitted_order"
    assert [int(r.split(",")[0]) for r in lines[1:]] == [8, 16]
    assert float(lines[1].split(",")[2]) >= floor


@pytest.mark.parametrize("sizes", ["8,8", "8", "8,x", "2,8"])
def test_convergence_bad_sizes(tmp_path, capsys, sizes):
    code, out = run(["convergence", "weitzenbock", "--sizes", sizes, "--out", str(tmp_path)], capsys)
    assert code == cli.EXIT_USAGE and "--sizes" in out.err


def test_usage_errors(capsys):
    assert run(["frobnicate"], capsys)[0] == cli.EXIT_USAGE
    assert run(["solve", "--stencil", "wide"], capsys)[0] == cli.EXIT_USAGE
    assert run(["algebra-check", "--seed", "-1"], capsys)[0] == cli.EXIT_USAGE
    assert run(["--help"], capsys)[0] == cli.EXIT_OK


def test_replay_byte_identical(tmp_path, capsys):
    a = tmp_path / "a"
    run(["convergence", "dirac-dbar", "--sizes", "6,8", "--out", str(a)], capsys)
    code, _ = run(["replay", str(a / "manifest.json"), "--out", str(tmp_path / "b")], capsys)
    assert code == cli.EXIT_OK
    assert (a / "convergence.csv").read_bytes() == (tmp_path / "b" / "convergence.csv").read_bytes()
    m1, m2 = load(a / "manifest.json"), load(tmp_path / "b" / "manifest.json")
    assert m1["config"] == m2["config"] and m1["command"] == m2["command"]


def test_replay_solve_trace(tmp_path, capsys):
    cfg = SolverConfig(n=4, max_iterations=20).to_dict()
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    run(["solve", "--config", str(p), "--out", str(tmp_path / "a")], capsys)
    run(["replay", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")], capsys)
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()


def test_replay_rejects_unknown_key(tmp_path, capsys):
    p = tmp_path / "manifest.json"
    p.write_text(json.dumps({"command": "solve", "config": {}, "colour": 1}))
    code, out = run(["replay", str(p)], capsys)
    assert code == cli.EXIT_USAGE and "colour" in out.err
