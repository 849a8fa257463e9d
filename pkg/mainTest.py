import os
import json
import main
import utils
from models import ExperimentSummary, GridSpec

rootDir = os.path.dirname(os.path.abspath(__file__))
experimentsDir = os.path.join(rootDir, "data", "experiments")
dagsDir = os.path.join(rootDir, "data", "dags")


def readFiles(directory):
    contents = {}
    for base, _, names in os.walk(directory):
        for name in names:
            path = os.path.join(base, name)
            with open(path, "rb") as file:
                contents[os.path.relpath(path, directory)] = file.read()
    return contents


def readReport(directory, name):
    with open(os.path.join(directory, name, "report.json")) as file:
        return json.load(file)


def testRunExperimentAntiCausalGirmv1(tmp_path):
    out = str(tmp_path)
    assert main.main(["run-experiment", "--dgp", "anticausal", "--method", "girmv1", "--name", "a", "--outputDir", out]) == 0

    report = readReport(out, "a")
    assert report["cfInvariant"] is True
    assert abs(report["testAccuracy"] - 0.75) < 1e-9

    runFiles = readFiles(os.path.join(out, "a"))
    assert set(runFiles) >= {
        "manifest.json",
        "report.json",
        "summary.json",
        "summary.csv",
        "predictor.csv",
        os.path.join("joints", "train0.csv"),
        os.path.join("joints", "test.csv"),
    }
    assert runFiles["predictor.csv"].decode().splitlines()[0] == "x1,x2,score"

    summaryLines = runFiles["summary.csv"].decode().splitlines()
    assert summaryLines[0].startswith("name,dgp,method,cfInvariant,trivial,testAccuracy")
    assert len(summaryLines) == 2
    assert summaryLines[1].startswith("a,anticausal,girmv1,True,False,")
    assert len(summaryLines[1].split(",")) == 10


def testRunExperimentConfDescendantGirmv1IsTrivial(tmp_path):
    out = str(tmp_path)
    assert main.main(["run-experiment", "--dgp", "confdesc", "--method", "girmv1", "--name", "c", "--outputDir", out]) == 0
    assert readReport(out, "c")["trivial"] is True


def testRunExperimentIsDeterministic(tmp_path):
    out = str(tmp_path)
    config = os.path.join(experimentsDir, "purely_spurious_augmented.json")

    assert main.main(["run-experiment", "--config", config, "--outputDir", out]) == 0
    once = readFiles(out)
    assert "purely_spurious_augmented/samples.csv" in {k.replace(os.sep, "/") for k in once}

    assert main.main(["run-experiment", "--config", config, "--outputDir", out]) == 0
    assert readFiles(out) == once


def testRerunFromManifestIsByteIdentical(tmp_path):
    out = str(tmp_path)
    assert main.main(["run-experiment", "--config", os.path.join(experimentsDir, "anticausal_irmv1_weak.json"), "--outputDir", out]) == 0
    before = readFiles(out)

    manifest = os.path.join(out, "anticausal_irmv1_weak", "manifest.json")
    assert main.main(["run-experiment", "--manifest", manifest]) == 0
    assert readFiles(out) == before

    # file values and the output flag both land in the manifest
    with open(manifest) as file:
        resolved = json.load(file)
    assert resolved["train"]["penaltyWeight"] == 3.0
    assert resolved["outputDir"] == out


def testFlagsOverrideConfig(tmp_path):
    out = str(tmp_path)
    config = os.path.join(experimentsDir, "anticausal_erm.json")
    assert main.main(["run-experiment", "--config", config, "--loss", "squared", "--alpha", "0.2", "--outputDir", out]) == 0

    with open(os.path.join(out, "anticausal_erm", "manifest.json")) as file:
        resolved = json.load(file)
    assert resolved["alpha"] == 0.2
    assert resolved["train"]["loss"] == "squared"
    assert resolved["method"] == "erm"


def testBadConfigExitsWithError(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text('{"name": "bad", "colour": "blue"}')

    assert main.main(["run-experiment", "--config", str(config), "--outputDir", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err

    assert main.main(["run-experiment", "--config", str(tmp_path / "missing.json")]) == 2


def testClassifyDag(capsys):
    assert main.main(["classify-dag", os.path.join(dagsDir, "antiCausal.dag")]) == 0
    assert capsys.readouterr().out.strip() == "anti-causal"

    assert main.main(["classify-dag", os.path.join(dagsDir, "confDescendant.dag")]) == 0
    assert capsys.readouterr().out.strip() == "confounded-descendant"


def testClassifyMalformedDag(tmp_path, capsys):
    path = tmp_path / "broken.dag"
    path.write_text("E->U\nU->Z\nZ-Y\n")

    assert main.main(["classify-dag", str(path)]) == 2
    assert "line 3" in capsys.readouterr().err


def testEnumerateDags(tmp_path):
    out = str(tmp_path / "dags.txt")
    assert main.main(["enumerate-dags", "--out", out, "--skipOracle"]) == 0

    with open(out) as file:
        lines = file.read().splitlines()
    assert len(lines) == 72
    assert sum(line.endswith("\tanti-causal") for line in lines) == 32
    assert all("E->U" in line for line in lines)


def testAnalyzeReweighting(tmp_path):
    out = str(tmp_path / "g.csv")
    assert main.main(["analyze-reweighting", "--alpha", "0.25", "--out", out]) == 0

    with open(out) as file:
        rows = [line.split(",") for line in file.read().splitlines()[1:]]
    assert len(rows) == 21
    centre = [row for row in rows if float(row[0]) == 0.5][0]
    assert abs(float(centre[1]) - 0.75) < 1e-12


def testAnalyzeReweightingEdgeInputs(tmp_path, capsys):
    out = str(tmp_path / "g.csv")
    assert main.main(["analyze-reweighting", "--gammaStep", "0", "--out", out]) == 2
    assert "gamma step" in capsys.readouterr().err

    # without label noise the end points have a label with no mass
    assert main.main(["analyze-reweighting", "--alpha", "0", "--out", out]) == 1
    with open(out) as file:
        lines = file.read().splitlines()
    assert lines[1] == "0.0,0.5,"
    assert lines[-1] == "1.0,0.5,"
    assert lines[11].split(",")[2] != ""


def testAuditTheoremsSuites(tmp_path):
    out = str(tmp_path)
    assert main.main(["audit-theorems", "--suite", "reweighting", "--suite", "signatures", "--outputDir", out]) == 0

    with open(os.path.join(out, "audit", "audit.json")) as file:
        checks = json.load(file)
    assert {c["suite"] for c in checks} == {"reweighting", "signatures"}
    assert all(c["passed"] for c in checks)


def testAuditTheoremsMembershipAndTransforms(tmp_path):
    out = str(tmp_path)
    assert main.main(["audit-theorems", "--suite", "membership", "--suite", "transforms", "--outputDir", out]) == 0
    assert os.path.isfile(os.path.join(out, "audit", "sweep_anticausal_conditional.csv"))


def testAuditTheoremsExperiments(tmp_path):
    assert main.main(["audit-theorems", "--suite", "experiments", "--outputDir", str(tmp_path)]) == 0


def testGrid(tmp_path):
    out = str(tmp_path)
    grid = tmp_path / "grid.json"
    utils.writeJson(
        str(grid),
        GridSpec(
            name="small",
            experiments=[
                os.path.join(experimentsDir, "anticausal_erm.json"),
                os.path.join(experimentsDir, "anticausal_consistency.json"),
            ],
            outputDir=out,
            maxProcesses=2,
        ),
    )

    assert main.main(["run-experiment", "--grid", str(grid)]) == 0

    with open(os.path.join(out, "small", "grid_summary.csv")) as file:
        lines = file.read().splitlines()
    assert lines[1].startswith("anticausal_erm,")
    assert lines[2].startswith("anticausal_consistency,")

    summary = utils.loadJson(os.path.join(out, "small", "anticausal_consistency", "summary.json"), ExperimentSummary)
    assert summary.cfInvariant
