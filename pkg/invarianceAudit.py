from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
import numpy as np
from scipy.special import logit
import config
from environments import checkProbability, confDescendantLatent, marginal, probability
from errors import ConfigurationError, DegenerateError, ReweightingError
from models import (
    DOMAIN,
    Attribution,
    CisaSubtype,
    AuditReport,
    Code,
    DiKind,
    DiscreteJoint,
    EnvironmentSet,
    EnvParams,
    LossKind,
    MembershipResult,
    Representation,
    TabularPredictor,
)
from predictors import (
    accuracy,
    allBooleanRepresentations,
    decisionRepresentation,
    featureRepresentation,
    isTrivial,
    lossValues,
    observedTable,
    risk,
)
from trainers import codeLaws, diPenalty, reweightedJoint

expectedSignature = {
    CisaSubtype.ANTI_CAUSAL: DiKind.CONDITIONAL,
    CisaSubtype.CONF_OUTCOME: DiKind.MARGINAL,
    CisaSubtype.CONF_DESCENDANT: DiKind.SUFFICIENCY,
}


def requireAttribution(envSet: EnvironmentSet) -> Attribution:
    if envSet.attribution is None:
        raise ConfigurationError("environment set carries no latent attribution")
    return envSet.attribution


def spuriousGap(f: TabularPredictor, attribution: Attribution) -> float:
    """
    largest change of f when only the coordinate Z acts on is flipped
    """
    position = ("X1", "X2").index(attribution.spuriousFeature)
    gaps = []
    for x in DOMAIN:
        flipped = list(x)
        flipped[position] = -flipped[position]
        gaps.append(abs(f[x] - f[tuple(flipped)]))
    return max(gaps)


def cfInvariant(f: TabularPredictor, envSet: EnvironmentSet, tol: float = config.cfTolerance) -> bool:
    return spuriousGap(f, requireAttribution(envSet)) < tol


def attainsOptimalSigns(f: TabularPredictor) -> bool:
    """
    f(+1, .) > 0 and f(-1, .) < 0, strict on both sides since sign(0) = +1
    """
    return all(f[(1, x2)] > 0 and f[(-1, x2)] < 0 for x2 in (-1, 1))


def allEnvs(envSet: EnvironmentSet) -> List[DiscreteJoint]:
    return list(envSet.trainEnvs) + [envSet.testEnv]


def ciDeviations(envSet: EnvironmentSet) -> Dict[DiKind, float]:
    """
    distributional-invariance deviations of phi = XzPerp over every domain of the set
    """
    phi = featureRepresentation(requireAttribution(envSet).invariantFeature)
    envs = allEnvs(envSet)
    return {kind: diPenalty(phi, envs, kind).deviation for kind in DiKind}


def ciSignature(envSet: EnvironmentSet) -> Dict[DiKind, bool]:
    return {kind: d < config.ciTolerance for kind, d in ciDeviations(envSet).items()}


def signatureMatchesSubtype(envSet: EnvironmentSet) -> bool:
    """
    the declared family's invariance holds and the other two clearly fail
    """
    expected = expectedSignature[envSet.subtype]
    for kind, deviation in ciDeviations(envSet).items():
        if kind == expected and not deviation < config.ciTolerance:
            return False
        if kind != expected and not deviation > config.ciFailThreshold:
            return False
    return True


def optimalHeads(
    phi: Representation, env: DiscreteJoint, loss: LossKind
) -> Dict[Code, Optional[float]]:
    """
    per-cell minimizer of E[L(Y, w(phi(X)))]: conditional mean for squared loss,
    log-odds for logistic loss; None for cells without mass
    """
    codes, law = codeLaws(phi, env)
    heads = {}

    for code, row in zip(codes, law):
        mass = row.sum()
        if mass <= 0:
            heads[code] = None
            continue

        positive = row[1] / mass
        if loss == LossKind.SQUARED:
            heads[code] = 2.0 * positive - 1.0
        else:
            heads[code] = float(logit(positive))

    return heads


def compareHeads(headsPerEnv: Sequence[Dict[Code, Optional[float]]]) -> MembershipResult:
    result = MembershipResult()

    for code in headsPerEnv[0]:
        values = [heads[code] for heads in headsPerEnv]
        present = [v for v in values if v is not None]

        if len(present) < len(values):
            result.excludedCodes.append(code)
            continue

        if all(np.isinf(v) for v in present) and len(set(present)) == 1:
            continue

        gap = max(present) - min(present)
        if np.isnan(gap):
            gap = np.inf
        result.maxGap = max(result.maxGap, float(gap))

    result.member = result.maxGap <= config.headTolerance
    return result


def irmMembershipDetail(
    phi: Representation, envs: Sequence[DiscreteJoint], loss: LossKind
) -> MembershipResult:
    if len(envs) < 2:
        raise ConfigurationError("membership needs at least 2 environments")
    return compareHeads([optimalHeads(phi, env, loss) for env in envs])


def irmMembership(phi: Representation, envs: Sequence[DiscreteJoint], loss: LossKind) -> bool:
    return irmMembershipDetail(phi, envs, loss).member


def girmMembershipDetail(
    phi: Representation, envs: Sequence[DiscreteJoint], loss: LossKind, p0: Sequence[float]
) -> MembershipResult:
    return irmMembershipDetail(phi, [reweightedJoint(env, p0) for env in envs], loss)


def girmMembership(
    phi: Representation, envs: Sequence[DiscreteJoint], loss: LossKind, p0: Sequence[float]
) -> bool:
    return girmMembershipDetail(phi, envs, loss, p0).member


def gOfGamma(gamma: float, alpha: float) -> float:
    """
    Q(X1 = Y) after reweighting the confounded-descendant domain to a uniform label law
    """
    checkProbability("gamma", gamma)
    checkProbability("alpha", alpha)
    m = gamma * (1 - alpha) + (1 - gamma) * alpha  # P(Y = -1)

    total = 0.0
    for numerator, mass in ((gamma, m), (1 - gamma, 1 - m)):
        if numerator == 0:
            continue
        if mass <= 0:
            raise DegenerateError(f"label mass is 0 at gamma={gamma}, alpha={alpha}")
        total += numerator / mass

    return 0.5 * (1 - alpha) * total


def gOfGammaBruteForce(gamma: float, alpha: float) -> float:
    joint = confDescendantLatent(EnvParams(alpha=alpha, beta=0.5, gamma=gamma))
    reweighted = reweightedJoint(marginal(joint, ["X1", "Y"]), [0.5, 0.5])
    return probability(reweighted, {"X1": 1, "Y": 1}) + probability(reweighted, {"X1": -1, "Y": -1})


def gOfGammaBruteForceColumn(gammas: Sequence[float], alpha: float) -> List[Optional[float]]:
    """
    brute-force g per gamma, None where a label has no mass and reweighting is undefined
    """
    column: List[Optional[float]] = []
    for gamma in gammas:
        try:
            column.append(gOfGammaBruteForce(gamma, alpha))
        except ReweightingError:
            column.append(None)
    return column


def gammaGrid(step: float = config.gammaGridStep) -> List[float]:
    if not 0 < step <= 1:
        raise ConfigurationError(f"gamma step must be in (0, 1], got {step}")

    count = int(round(1 / step))
    return [round(i * step, 12) for i in range(count + 1)]


def reweightingProperties(alpha: float, gammas: Optional[Sequence[float]] = None) -> Dict[str, bool]:
    gammas = gammaGrid() if gammas is None else list(gammas)
    tol = config.normalizationTolerance
    g = {gamma: gOfGamma(gamma, alpha) for gamma in gammas}
    bruteForce = gOfGammaBruteForceColumn(gammas, alpha)
    lowerHalf = [gamma for gamma in sorted(gammas) if gamma <= 0.5]

    return {
        "closedFormMatchesBruteForce": all(
            abs(g[gamma] - value) < tol for gamma, value in zip(gammas, bruteForce) if value is not None
        ),
        "endpointsAreHalf": abs(gOfGamma(0, alpha) - 0.5) < tol and abs(gOfGamma(1, alpha) - 0.5) < tol,
        "centerIsOneMinusAlpha": abs(gOfGamma(0.5, alpha) - (1 - alpha)) < tol,
        "symmetric": all(abs(g[gamma] - gOfGamma(1 - gamma, alpha)) < tol for gamma in gammas),
        "increasingOnLowerHalf": all(g[a] < g[b] for a, b in zip(lowerHalf, lowerHalf[1:])),
        "orderingOfTrainingDomains": 0.5 < gOfGamma(0.9, alpha) < gOfGamma(0.7, alpha) < 1 - alpha
        and abs(gOfGamma(0.9, alpha) - gOfGamma(0.1, alpha)) < tol
        and abs(gOfGamma(0.7, alpha) - gOfGamma(0.3, alpha)) < tol,
    }


def isCfInvariantRepresentation(phi: Representation, attribution: Attribution) -> bool:
    position = ("X1", "X2").index(attribution.spuriousFeature)
    for x in DOMAIN:
        flipped = list(x)
        flipped[position] = -flipped[position]
        if phi[x] != phi[tuple(flipped)]:
            return False
    return True


@dataclass
class SweepRow:
    codes: List[Code] = field(default_factory=list)
    diDeviation: float = 0.0
    diFlagged: bool = False
    diPass: bool = False
    irmMember: bool = False
    girmMember: bool = False
    cfInvariant: bool = False


def sweepRepresentations(
    envSet: EnvironmentSet, kind: DiKind, loss: LossKind, p0: Sequence[float]
) -> List[SweepRow]:
    """
    every boolean-codomain representation on {-1,+1}^2 against the training domains
    """
    attribution = requireAttribution(envSet)
    rows = []

    for phi in allBooleanRepresentations():
        di = diPenalty(phi, envSet.trainEnvs, kind)
        rows.append(
            SweepRow(
                codes=list(phi.codes),
                diDeviation=di.deviation,
                diFlagged=di.flagged,
                diPass=di.deviation < config.ciTolerance,
                irmMember=irmMembership(phi, envSet.trainEnvs, loss),
                girmMember=girmMembership(phi, envSet.trainEnvs, loss, p0),
                cfInvariant=isCfInvariantRepresentation(phi, attribution),
            )
        )

    return rows


def membershipCounterexamples(rows: Sequence[SweepRow], girm: bool) -> List[SweepRow]:
    """
    DI-passing representations outside the IRM (or g-IRM) set
    """
    return [row for row in rows if row.diPass and not (row.girmMember if girm else row.irmMember)]


def diPassingNotCfInvariant(rows: Sequence[SweepRow]) -> List[SweepRow]:
    return [row for row in rows if row.diPass and not row.cfInvariant]


def auditPredictor(
    f: TabularPredictor,
    envSet: EnvironmentSet,
    loss: LossKind,
    p0: Sequence[float],
    tol: float = config.cfTolerance,
) -> AuditReport:
    attribution = requireAttribution(envSet)
    phi = decisionRepresentation(f)

    return AuditReport(
        cfInvariant=cfInvariant(f, envSet, tol),
        spuriousGap=spuriousGap(f, attribution),
        trivial=isTrivial(f),
        diDeviations={
            kind.value: diPenalty(phi, envSet.trainEnvs, kind).deviation for kind in DiKind
        },
        irmMember=irmMembership(phi, envSet.trainEnvs, loss),
        girmMember=girmMembership(phi, envSet.trainEnvs, loss, p0),
        trainAccuracies=[accuracy(f, env) for env in envSet.trainEnvs],
        trainRisks=[risk(f, env, loss) for env in envSet.trainEnvs],
        testAccuracy=accuracy(f, envSet.testEnv),
        testRisk=risk(f, envSet.testEnv, loss),
    )


def pooledRisk(f: TabularPredictor, envs: Sequence[DiscreteJoint], loss: LossKind) -> float:
    return sum(risk(f, env, loss) for env in envs) / len(envs)


def scoreGrid(step: float = config.gridStep, bound: float = config.gridBound) -> np.ndarray:
    count = int(round(2 * bound / step))
    return np.round(np.linspace(-bound, bound, count + 1), 12)


def gridOracle(
    envs: Sequence[DiscreteJoint], loss: LossKind, expand: Optional[np.ndarray] = None
) -> TabularPredictor:
    """
    exhaustive grid minimizer of the pooled risk, one grid value per column of expand;
    exact per coordinate because the unpenalized risk separates over tied cells
    """
    expand = np.eye(4) if expand is None else expand
    pooled = sum(observedTable(env) for env in envs) / len(envs)
    grid = scoreGrid()
    scores = np.zeros(4)

    for column in expand.T:
        cells = np.flatnonzero(column)
        # label masses of the tied cells
        cellMass = pooled.reshape(4, 2)[cells].sum(axis=0)
        candidates = [np.sum(cellMass * lossValues(loss, np.full((2, 2), s))[0, 0]) for s in grid]
        scores[cells] = grid[int(np.argmin(candidates))]

    return TabularPredictor(scores.reshape(2, 2))
