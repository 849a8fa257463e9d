import os
from typing import Callable, Dict, List, Sequence
from tabulate import tabulate
import config
from causalGraph import countBySubtype, enumerateCisaDags
from classifyDag import compareWithOracle
from environments import checkPurelySpurious, makeEnvironmentSet
from errors import ConfigurationError
from invarianceAudit import (
    attainsOptimalSigns,
    ciDeviations,
    cfInvariant,
    diPassingNotCfInvariant,
    expectedSignature,
    gridOracle,
    membershipCounterexamples,
    pooledRisk,
    reweightingProperties,
    sweepRepresentations,
)
from models import AuditCheck, Dgp, DiKind, LossKind, TrainConfig
from predictors import accuracy, isTrivial
from trainers import (
    trainAugmentedErm,
    trainConsistency,
    trainGirmv1,
    trainIrmv1,
    transformsByName,
    tyingMatrix,
)
from utils import toSignificant, writeCsv, writeJson

Suite = Callable[[str, LossKind], List[AuditCheck]]


def check(suite: str, name: str, passed: bool, detail: str = "") -> AuditCheck:
    return AuditCheck(suite=suite, name=name, passed=bool(passed), detail=detail)


def enumerationSuite(outputDir: str, loss: LossKind) -> List[AuditCheck]:
    entries = enumerateCisaDags()
    difference, acceptedCount = compareWithOracle(entries, showProgress=False)
    counts = ", ".join(f"{s.value} {n}" for s, n in countBySubtype(entries).items() if n)

    return [
        check("enumeration", "templates equal brute-force verifier", difference == 0,
              f"{len(entries)} enumerated, {acceptedCount} accepted, symmetric difference {difference}"),
        check("enumeration", "every family is represented", all(countBySubtype(entries)[s] for s in expectedSignature),
              counts),
    ]


def transformsSuite(outputDir: str, loss: LossKind) -> List[AuditCheck]:
    cfg = TrainConfig(loss=loss)
    transforms = transformsByName(["identity", "flipX2"])
    uniform = [0.5, 0.5]

    envSet = makeEnvironmentSet(Dgp.ANTICAUSAL)
    consistent = trainConsistency(envSet.trainEnvs, transforms, cfg)
    oracle = gridOracle(envSet.trainEnvs, loss, tyingMatrix(transforms))
    gap = pooledRisk(consistent, envSet.trainEnvs, loss) - pooledRisk(oracle, envSet.trainEnvs, loss)
    testAccuracy = accuracy(consistent, envSet.testEnv)

    spuriousSet = makeEnvironmentSet(Dgp.ANTICAUSAL_PURELY_SPURIOUS)
    augmented = trainAugmentedErm(spuriousSet.trainEnvs, transforms, uniform, cfg)
    tied = trainConsistency(spuriousSet.trainEnvs, transforms, cfg)
    augmentationGap = float(abs(augmented.scores - tied.scores).max())

    return [
        check("transforms", "consistency matches the X1-only grid oracle", gap < 1e-6,
              f"risk gap {toSignificant(gap)}"),
        check("transforms", "consistency test accuracy is 1 - alpha",
              abs(testAccuracy - (1 - config.defaultAlpha)) < 1e-9, toSignificant(testAccuracy)),
        check("transforms", "augmented ERM matches consistency when purely spurious",
              augmentationGap < 1e-4, f"max score gap {toSignificant(augmentationGap)}"),
        check("transforms", "Y*Z attribution is not purely spurious", not checkPurelySpurious(envSet)),
        check("transforms", "Z <- Y*U attribution is purely spurious", checkPurelySpurious(spuriousSet)),
    ]


def signaturesSuite(outputDir: str, loss: LossKind) -> List[AuditCheck]:
    checks = []

    for dgp in (Dgp.ANTICAUSAL, Dgp.CONFOUTCOME, Dgp.CONFDESC):
        envSet = makeEnvironmentSet(dgp)
        expected = expectedSignature[envSet.subtype]
        deviations = ciDeviations(envSet)

        for kind, deviation in deviations.items():
            holds = deviation < config.ciTolerance if kind == expected else deviation > config.ciFailThreshold
            checks.append(
                check("signatures", f"{dgp.value} {kind.value} {'holds' if kind == expected else 'fails'}",
                      holds, f"deviation {toSignificant(deviation)}")
            )

    return checks


def writeSweep(path: str, rows):
    writeCsv(
        path,
        ["codes", "diDeviation", "diFlagged", "diPass", "irmMember", "girmMember", "cfInvariant"],
        [
            ["".join(str(c) for c in row.codes), row.diDeviation, row.diFlagged, row.diPass,
             row.irmMember, row.girmMember, row.cfInvariant]
            for row in rows
        ],
    )


def membershipSuite(outputDir: str, loss: LossKind) -> List[AuditCheck]:
    p0 = config.defaultReferenceLabelDist

    descendantRows = sweepRepresentations(makeEnvironmentSet(Dgp.CONFDESC), DiKind.SUFFICIENCY, loss, p0)
    antiCausalRows = sweepRepresentations(makeEnvironmentSet(Dgp.ANTICAUSAL), DiKind.CONDITIONAL, loss, p0)
    writeSweep(os.path.join(outputDir, "sweep_confdesc_sufficiency.csv"), descendantRows)
    writeSweep(os.path.join(outputDir, "sweep_anticausal_conditional.csv"), antiCausalRows)

    irmMisses = membershipCounterexamples(descendantRows, girm=False)
    girmMisses = membershipCounterexamples(antiCausalRows, girm=True)
    notInvariant = diPassingNotCfInvariant(descendantRows) + diPassingNotCfInvariant(antiCausalRows)

    return [
        check("membership", "sufficiency DI implies IRM membership", not irmMisses,
              f"{len(irmMisses)} counterexamples"),
        check("membership", "conditional DI implies g-IRM membership", not girmMisses,
              f"{len(girmMisses)} counterexamples"),
        # informational: DI alone does not force counterfactual invariance
        check("membership", "DI-passing representations reported", True,
              f"{len(notInvariant)} DI-passing but not CF-invariant"),
    ]


def reweightingSuite(outputDir: str, loss: LossKind) -> List[AuditCheck]:
    properties = reweightingProperties(config.defaultAlpha)
    return [check("reweighting", name, holds) for name, holds in properties.items()]


def experimentsSuite(outputDir: str, loss: LossKind) -> List[AuditCheck]:
    cfg = TrainConfig(loss=loss)
    weak = TrainConfig(loss=loss, penaltyWeight=3.0)
    antiCausal = makeEnvironmentSet(Dgp.ANTICAUSAL)
    descendant = makeEnvironmentSet(Dgp.CONFDESC)
    checks = []

    girm = trainGirmv1(antiCausal.trainEnvs, cfg)
    checks.append(check("experiments", "anti-causal g-IRMv1 is CF-invariant at 0.75",
                        cfInvariant(girm, antiCausal) and attainsOptimalSigns(girm)
                        and abs(accuracy(girm, antiCausal.testEnv) - 0.75) < 1e-9,
                        toSignificant(accuracy(girm, antiCausal.testEnv))))

    irm = trainIrmv1(antiCausal.trainEnvs, weak)
    checks.append(check("experiments", "anti-causal weak-penalty IRMv1 uses the spurious feature",
                        not cfInvariant(irm, antiCausal) and accuracy(irm, antiCausal.testEnv) <= 0.70,
                        toSignificant(accuracy(irm, antiCausal.testEnv))))

    irm = trainIrmv1(descendant.trainEnvs, cfg)
    checks.append(check("experiments", "confounded-descendant IRMv1 is CF-invariant at 0.75",
                        cfInvariant(irm, descendant) and attainsOptimalSigns(irm)
                        and abs(accuracy(irm, descendant.testEnv) - 0.75) < 1e-9,
                        toSignificant(accuracy(irm, descendant.testEnv))))

    girm = trainGirmv1(descendant.trainEnvs, cfg)
    checks.append(check("experiments", "confounded-descendant g-IRMv1 is trivial",
                        isTrivial(girm) and abs(accuracy(girm, descendant.testEnv) - 0.5) < 1e-9,
                        toSignificant(float(abs(girm.scores).max()))))

    return checks


suites: Dict[str, Suite] = {
    "enumeration": enumerationSuite,
    "transforms": transformsSuite,
    "signatures": signaturesSuite,
    "membership": membershipSuite,
    "reweighting": reweightingSuite,
    "experiments": experimentsSuite,
}


def auditTheoremsCmd(
    names: Sequence[str] = (), outputDir: str = config.defaultOutputDir, loss: LossKind = LossKind.LOGISTIC
) -> int:
    names = list(names) or list(suites)
    unknown = [n for n in names if n not in suites]
    if unknown:
        raise ConfigurationError(f"unknown suites {unknown}, known: {list(suites)}")

    auditDir = os.path.join(outputDir, "audit")
    checks = []
    for name in names:
        print(f"Running {name} suite...")
        checks.extend(suites[name](auditDir, loss))

    print(
        tabulate(
            [[c.suite, c.name, "pass" if c.passed else "FAIL", c.detail] for c in checks],
            headers=["suite", "check", "result", "detail"],
        )
    )
    writeJson(os.path.join(auditDir, "audit.json"), checks)

    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)} of {len(checks)} checks passed")

    return 1 if failed else 0
