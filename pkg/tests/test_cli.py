import json

import pytest

from core.datamodel import ParameterValue, serialize_tree
from core.optimizer import run_doe, write_doe_csv
from core.sampling import DesignSpace
from mdao_tool import main
from mdao_types import EvaluationResult
from utils.constants import BASELINE_MTOW, DEFAULT_BASELINE_FILE, P_EMPTY_MASS, P_MTOW, RUN_LOG_FILE


@pytest.fixture()
def workflow(tmp_path):
    path = tmp_path / "workflow.xml"
    assert main(["arch", "apply", "--pattern", "converged-mda-gs", "--out", str(path)]) == 0
    return path


def test_validate_baseline(capsys):
    assert main(["validate", str(DEFAULT_BASELINE_FILE)]) == 0
    assert "OK" in capsys.readouterr().out


def test_validate_broken_file(tmp_path, capsys):
    broken = tmp_path / "broken.xml"
    broken.write_text("<cpacs><a>")
    assert main(["validate", str(DEFAULT_BASELINE_FILE), str(broken)]) == 2
    assert "INVALID" in capsys.readouterr().out


def test_usage_errors():
    assert main(["opt", "run", "--out", "report.json"]) == 1
    assert main(["validate", "--colour", str(DEFAULT_BASELINE_FILE)]) == 1
    assert main([]) == 1


def test_graph_rcg_as_json(tmp_path, capsys):
    dot = tmp_path / "rcg.dot"
    assert main(["graph", "rcg", "--json", "--dot", str(dot)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["stage"] == "RCG"
    assert len(data["competences"]) == 5
    assert dot.read_text().startswith("digraph RCG {")


def test_architecture_output(workflow, capsys):
    assert main(["arch", "apply", "--out", str(workflow), "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["mdaLoop"][0] == "sizing"


def test_calibrate_then_run(tmp_path, workflow):
    constants = tmp_path / "constants.xml"
    assert main(["calibrate", "--target", str(BASELINE_MTOW), "--out", str(constants)]) == 0
    outdir = tmp_path / "runs"
    assert main(["run", "mda", "--workflow", str(workflow), "--outdir", str(outdir),
                 "--constants", str(constants)]) == 0
    logs = list(outdir.glob(f"*/{RUN_LOG_FILE}"))
    assert len(logs) == 1
    log = json.loads(logs[0].read_text())
    assert log["converged"] is True
    assert log["finalValues"][P_MTOW] == pytest.approx(BASELINE_MTOW, rel=1e-3)


def test_unconverged_run_exit_code(tmp_path, baseline):
    workflow = tmp_path / "short.xml"
    assert main(["arch", "apply", "--max-iter", "1", "--out", str(workflow)]) == 0
    data = tmp_path / "perturbed.xml"
    data.write_text(serialize_tree(baseline.with_value(P_EMPTY_MASS, ParameterValue.real(30000.0, "kg"))))
    assert main(["run", "mda", "--workflow", str(workflow), "--data", str(data),
                 "--outdir", str(tmp_path / "runs")]) == 3


def test_missing_workflow_is_an_error(tmp_path, capsys):
    assert main(["run", "mda", "--workflow", str(tmp_path / "none.xml"), "--outdir", str(tmp_path)]) == 2
    assert capsys.readouterr().out.startswith("Error:")


def test_sensitivity_from_a_doe_file(tmp_path):
    space = DesignSpace.case_study()

    def evaluate(point):
        values = space.as_dict(point)
        return EvaluationResult(point=values, fuelSaved=50.0 * values["panelEfficiency"] + 0.01 * values["wingArea"],
                                g1=9.0, g2=10.0, mtow=65000.0, status="ok", feasible=True, error=None)

    doe = write_doe_csv(run_doe(space, evaluate, 12, seed=0), tmp_path / "doe.csv")
    out = tmp_path / "sobol.csv"
    assert main(["sens", "run", "--doe", str(doe), "--out", str(out), "--n", "1024"]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "variable,S1"
    assert len(rows) == 7


def test_report_with_chart(tmp_path, capsys):
    report = tmp_path / "report.json"
    report.write_text(json.dumps({
        "bestPoint": {"panelEfficiency": 0.5}, "bestObjective": 40.0, "constraints": {"mtow": 67000.0},
        "feasibleFound": True, "history": [{"status": "ok"}], "seed": 1, "budget": 1,
    }))
    sobol = tmp_path / "sobol.csv"
    sobol.write_text("variable,S1\npanelEfficiency,0.9\nwingArea,0.1\n")
    svg = tmp_path / "sobol.svg"
    assert main(["report", "--report", str(report), "--sobol", str(sobol), "--svg", str(svg)]) == 0
    assert "panelEfficiency" in capsys.readouterr().out
    assert svg.exists()


def test_report_with_empty_sobol_file(tmp_path):
    report = tmp_path / "report.json"
    report.write_text(json.dumps({"bestPoint": {}, "bestObjective": None, "constraints": {},
                                  "history": [], "seed": 0, "budget": 0}))
    sobol = tmp_path / "sobol.csv"
    sobol.write_text("")
    assert main(["report", "--report", str(report), "--sobol", str(sobol)]) == 2


def test_architecture_prints_matrix_in_plan_order(tmp_path, capsys):
    assert main(["arch", "apply", "--out", str(tmp_path / "workflow.xml")]) == 0
    out = capsys.readouterr().out
    assert "[calibration]" in out
    assert out.index("[calibration]") < out.index("[sizing]") < out.index("[propulsion]")


def test_validate_tree_lists_merged_hierarchy(capsys):
    stub = DEFAULT_BASELINE_FILE.parent / "stubs" / "sizing.xml"
    assert main(["validate", "--tree", str(DEFAULT_BASELINE_FILE), str(stub)]) == 0
    out = capsys.readouterr().out
    assert "Combined hierarchy of 2 file(s)" in out
    assert "optimizer/" in out
    assert "wingArea = 113.0 [m2]  <- baseline" in out
    assert "area = 113.0 [m2]  <- sizing" in out


def test_validate_tree_as_json(capsys):
    assert main(["validate", "--tree", "--json", str(DEFAULT_BASELINE_FILE)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["files"][0]["error"] is None
    assert data["hierarchy"].startswith("cpacs (version 0)\n")


def test_seeded_doe_file_is_reproducible(tmp_path):
    outputs = [tmp_path / "first.csv", tmp_path / "second.csv"]
    for out in outputs:
        assert main(["doe", "run", "--n", "6", "--seed", "42", "--out", str(out)]) == 0
    assert outputs[0].read_bytes() == outputs[1].read_bytes()


def test_seeded_sobol_file_is_reproducible(tmp_path):
    space = DesignSpace.case_study()

    def evaluate(point):
        values = space.as_dict(point)
        return EvaluationResult(point=values, fuelSaved=40.0 * values["panelEfficiency"] + 0.02 * values["wingArea"],
                                g1=9.0, g2=10.0, mtow=65000.0, status="ok", feasible=True, error=None)

    doe = write_doe_csv(run_doe(space, evaluate, 12, seed=1), tmp_path / "doe.csv")
    outputs = [tmp_path / "first.csv", tmp_path / "second.csv"]
    for out in outputs:
        assert main(["sens", "run", "--doe", str(doe), "--out", str(out), "--n", "1024", "--seed", "3"]) == 0
    assert outputs[0].read_bytes() == outputs[1].read_bytes()


def test_seeded_report_is_reproducible(tmp_path):
    outputs = [tmp_path / "first.json", tmp_path / "second.json"]
    for out in outputs:
        code = main(["opt", "run", "--init", "8", "--budget", "9", "--seed", "42", "--no-sensitivity",
                     "--out", str(out)])
        assert code in (0, 3)
    assert outputs[0].read_bytes() == outputs[1].read_bytes()
