import os
from typing import Tuple
from tabulate import tabulate
from environments import OBSERVED, jointRows, makeEnvironmentSet, sample
from invarianceAudit import auditPredictor
from models import (
    AuditReport,
    EnvironmentSet,
    ExperimentSpec,
    ExperimentSummary,
    Method,
    TabularPredictor,
)
from predictors import predictorRows
from trainers import (
    trainAugmentedErm,
    trainConsistency,
    trainErm,
    trainGirmv1,
    trainIrmv1,
    transformsByName,
)
from utils import toSignificant, writeCsv, writeJson


summaryHeader = ["name", "dgp", "method", "cfInvariant", "trivial", "testAccuracy", "fmm", "fmp", "fpm", "fpp"]


def summaryRow(summary: ExperimentSummary) -> list:
    return [
        summary.name,
        summary.dgp,
        summary.method,
        summary.cfInvariant,
        summary.trivial,
        summary.testAccuracy,
    ] + list(summary.scores)


def environmentSetFor(spec: ExperimentSpec) -> EnvironmentSet:
    return makeEnvironmentSet(
        spec.dgp, spec.alpha, spec.beta, spec.gamma, spec.betaTest, spec.gammaTest
    )


def transformDistFor(spec: ExperimentSpec):
    if spec.transformDist:
        return spec.transformDist
    return [1.0 / len(spec.transforms)] * len(spec.transforms)


def train(spec: ExperimentSpec, envSet: EnvironmentSet) -> TabularPredictor:
    envs, cfg = envSet.trainEnvs, spec.train

    if spec.method == Method.ERM:
        return trainErm(envs, cfg)
    if spec.method == Method.IRMV1:
        return trainIrmv1(envs, cfg)
    if spec.method == Method.GIRMV1:
        return trainGirmv1(envs, cfg)

    transforms = transformsByName(spec.transforms)
    if spec.method == Method.CONSISTENCY:
        return trainConsistency(envs, transforms, cfg)

    return trainAugmentedErm(envs, transforms, transformDistFor(spec), cfg)


def writeArtifacts(
    spec: ExperimentSpec,
    envSet: EnvironmentSet,
    f: TabularPredictor,
    report: AuditReport,
    summary: ExperimentSummary,
):
    runDir = os.path.join(spec.outputDir, spec.name)

    writeJson(os.path.join(runDir, "manifest.json"), spec)
    writeJson(os.path.join(runDir, "report.json"), report)
    writeJson(os.path.join(runDir, "summary.json"), summary)
    writeCsv(os.path.join(runDir, "summary.csv"), summaryHeader, [summaryRow(summary)])
    writeCsv(os.path.join(runDir, "predictor.csv"), ["x1", "x2", "score"], predictorRows(f))

    joints = [(f"train{i}", env) for i, env in enumerate(envSet.trainEnvs)]
    joints.append(("test", envSet.testEnv))

    for label, joint in joints:
        writeCsv(
            os.path.join(runDir, "joints", f"{label}.csv"),
            list(joint.variables) + ["prob"],
            jointRows(joint),
        )

    if spec.sampleSize > 0:
        rows = []
        for i, (label, joint) in enumerate(joints):
            draws = sample(joint, spec.sampleSize, spec.seed + i)
            rows.extend([label] + draw.tolist() for draw in draws)
        writeCsv(os.path.join(runDir, "samples.csv"), ["env"] + list(OBSERVED), rows)


def printResults(spec: ExperimentSpec, f: TabularPredictor, report: AuditReport):
    print(f"{spec.name}: {spec.method.value} on {spec.dgp.value}")
    print(
        tabulate(
            [[x1, x2, toSignificant(score)] for x1, x2, score in predictorRows(f)],
            headers=["x1", "x2", "f(x1, x2)"],
        )
    )
    print(
        f"cfInvariant={report.cfInvariant} (gap {toSignificant(report.spuriousGap)}), "
        f"trivial={report.trivial}, testAccuracy={toSignificant(report.testAccuracy)}, "
        f"irmMember={report.irmMember}, girmMember={report.girmMember}"
    )


def runExperiment(spec: ExperimentSpec) -> Tuple[TabularPredictor, AuditReport]:
    envSet = environmentSetFor(spec)
    f = train(spec, envSet)
    report = auditPredictor(
        f, envSet, spec.train.loss, spec.train.referenceLabelDist, spec.cfTolerance
    )

    summary = ExperimentSummary(
        name=spec.name,
        dgp=spec.dgp.value,
        method=spec.method.value,
        cfInvariant=report.cfInvariant,
        trivial=report.trivial,
        testAccuracy=report.testAccuracy,
        scores=f.flat().tolist(),
    )

    writeArtifacts(spec, envSet, f, report, summary)
    printResults(spec, f, report)

    return f, report
