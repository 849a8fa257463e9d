import sys
import argparse
from typing import List, Optional
import typedload
from typedload.exceptions import TypedloadException
import config
from analyzeReweighting import analyzeReweightingCmd
from auditTheorems import auditTheoremsCmd, suites
from classifyDag import classifyDagCmd, enumerateDagsCmd
from errors import CisaLabError, ConfigurationError
from gridManager import runGrid
from models import Dgp, ExperimentSpec, GirmReweighting, LossKind, Method, Optimizer
from runExperiment import runExperiment
from utils import loadJson

# flags that land in ExperimentSpec.train rather than on the spec itself
trainFlags = [
    "loss",
    "learningRate",
    "maxIters",
    "gradTolerance",
    "penaltyWeight",
    "penaltyAnnealIters",
    "init",
    "referenceLabelDist",
    "optimizer",
    "girmReweighting",
]
specFlags = [
    "name",
    "dgp",
    "method",
    "alpha",
    "beta",
    "gamma",
    "betaTest",
    "gammaTest",
    "transforms",
    "transformDist",
    "cfTolerance",
    "outputDir",
    "seed",
    "sampleSize",
]


def choices(enum) -> List[str]:
    return [member.value for member in enum]


def makeParser() -> argparse.ArgumentParser:
    argParser = argparse.ArgumentParser(prog="cisa-lab")
    subParsers = argParser.add_subparsers(dest="command", required=True)

    run = subParsers.add_parser("run-experiment")
    run.add_argument("--config", type=str)
    run.add_argument("--manifest", type=str)
    run.add_argument("--grid", type=str)
    run.add_argument("--name", type=str)
    run.add_argument("--dgp", type=str, choices=choices(Dgp))
    run.add_argument("--method", type=str, choices=choices(Method))
    run.add_argument("--alpha", type=float)
    run.add_argument("--beta", type=float, nargs="+")
    run.add_argument("--gamma", type=float, nargs="+")
    run.add_argument("--betaTest", type=float)
    run.add_argument("--gammaTest", type=float)
    run.add_argument("--transforms", type=str, nargs="+")
    run.add_argument("--transformDist", type=float, nargs="+")
    run.add_argument("--cfTolerance", type=float)
    run.add_argument("--outputDir", type=str)
    run.add_argument("--seed", type=int)
    run.add_argument("--sampleSize", type=int)
    run.add_argument("--loss", type=str, choices=choices(LossKind))
    run.add_argument("--learningRate", type=float)
    run.add_argument("--maxIters", type=int)
    run.add_argument("--gradTolerance", type=float)
    run.add_argument("--penaltyWeight", type=float)
    run.add_argument("--penaltyAnnealIters", type=int)
    run.add_argument("--init", type=float, nargs=4)
    run.add_argument("--referenceLabelDist", type=float, nargs=2)
    run.add_argument("--optimizer", type=str, choices=choices(Optimizer))
    run.add_argument("--girmReweighting", type=str, choices=choices(GirmReweighting))

    classify = subParsers.add_parser("classify-dag")
    classify.add_argument("path", type=str)

    enumerate_ = subParsers.add_parser("enumerate-dags")
    enumerate_.add_argument("--out", type=str, default="data/runs/dags.txt")
    enumerate_.add_argument("--skipOracle", action="store_true")

    audit = subParsers.add_parser("audit-theorems")
    audit.add_argument("--suite", type=str, action="append", choices=list(suites))
    audit.add_argument("--outputDir", type=str, default=config.defaultOutputDir)
    audit.add_argument("--loss", type=str, choices=choices(LossKind), default=LossKind.LOGISTIC.value)

    reweighting = subParsers.add_parser("analyze-reweighting")
    reweighting.add_argument("--alpha", type=float, default=config.defaultAlpha)
    reweighting.add_argument("--gammaStep", type=float, default=config.gammaGridStep)
    reweighting.add_argument("--out", type=str, default="data/runs/reweighting.csv")

    return argParser


def resolveSpec(args: argparse.Namespace) -> ExperimentSpec:
    """
    config file (or defaults) with every given flag applied on top;
    a manifest is taken as is
    """
    if args.manifest:
        return loadJson(args.manifest, ExperimentSpec)

    spec = loadJson(args.config, ExperimentSpec) if args.config else ExperimentSpec()
    data = typedload.dump(spec, hidedefault=False)

    for flag in specFlags:
        value = getattr(args, flag)
        if value is not None:
            data[flag] = value

    for flag in trainFlags:
        value = getattr(args, flag)
        if value is not None:
            data["train"][flag] = value

    try:
        return typedload.load(data, ExperimentSpec, failonextra=True)
    except TypedloadException as exc:
        raise ConfigurationError(str(exc))


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "run-experiment":
        if args.grid:
            return runGrid(args.grid)
        runExperiment(resolveSpec(args))
        return 0

    if args.command == "classify-dag":
        classifyDagCmd(args.path)
        return 0

    if args.command == "enumerate-dags":
        return enumerateDagsCmd(args.out, checkOracle=not args.skipOracle)

    if args.command == "audit-theorems":
        return auditTheoremsCmd(args.suite or [], args.outputDir, LossKind(args.loss))

    return analyzeReweightingCmd(args.alpha, args.gammaStep, args.out)


def main(argv: Optional[List[str]] = None) -> int:
    args = makeParser().parse_args(argv)

    try:
        return dispatch(args)
    except (CisaLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
