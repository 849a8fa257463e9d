import itertools
import math
from typing import Callable, Dict, List, Sequence, Tuple
import numpy as np
import config
from errors import (
    ConfigurationError,
    DomainError,
    InvalidQueryError,
    UndefinedConditionalError,
)
from models import (
    LABELS,
    Attribution,
    CisaSubtype,
    Dgp,
    DiscreteJoint,
    EnvironmentSet,
    EnvParams,
    Probability,
    valueToIndex,
)

OBSERVED = ("X1", "X2", "Y")
LATENT = ("X1", "X2", "Y", "U", "Z")

Noise = List[Tuple[str, Probability]]
Equations = Callable[[Dict[str, int]], Dict[str, int]]


def checkProbability(name: str, value: float):
    if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
        raise DomainError(f"{name} must be a probability in [0, 1], got {value!r}")


def rad(pi: Probability) -> np.ndarray:
    """
    Rad(pi): -1 with probability pi, +1 with probability 1 - pi, as [P(-1), P(+1)]
    """
    checkProbability("pi", pi)
    return np.array([pi, 1.0 - pi])


def enumerateStructuralModel(
    noise: Noise, equations: Equations, variables: Sequence[str] = LATENT
) -> DiscreteJoint:
    """
    exact joint of a structural model driven by independent Rad noise terms
    """
    names = [name for name, _ in noise]
    laws = [rad(pi) for _, pi in noise]
    table = np.zeros((2,) * len(variables))

    for values in itertools.product(LABELS, repeat=len(noise)):
        weight = math.prod(law[valueToIndex(v)] for law, v in zip(laws, values))
        if weight == 0.0:
            continue

        assignment = equations(dict(zip(names, values)))
        table[tuple(valueToIndex(assignment[v]) for v in variables)] += weight

    return DiscreteJoint(tuple(variables), table)


def checkParams(params: EnvParams, label: str):
    checkProbability(f"{label} alpha", params.alpha)
    checkProbability(f"{label} beta", params.beta)
    checkProbability(f"{label} gamma", params.gamma)


def antiCausalLatent(params: EnvParams) -> DiscreteJoint:
    # Y <- Rad(gamma), X1 <- Y * Rad(alpha), U <- Rad(beta), Z <- U, X2 <- Y * Z
    def equations(n):
        y, z = n["Y"], n["U"]
        return {"Y": y, "X1": y * n["A"], "U": n["U"], "Z": z, "X2": y * z}

    noise = [("Y", params.gamma), ("A", params.alpha), ("U", params.beta)]
    return enumerateStructuralModel(noise, equations)


def antiCausalPurelySpuriousLatent(params: EnvParams) -> DiscreteJoint:
    # same observed law, but the flip lives in Z: Z <- Y * U, X2 <- Z
    def equations(n):
        y = n["Y"]
        z = y * n["U"]
        return {"Y": y, "X1": y * n["A"], "U": n["U"], "Z": z, "X2": z}

    noise = [("Y", params.gamma), ("A", params.alpha), ("U", params.beta)]
    return enumerateStructuralModel(noise, equations)


def confDescendantLatent(params: EnvParams) -> DiscreteJoint:
    # X1 <- Rad(gamma), Y <- X1 * Rad(alpha), U <- Rad(beta), Z <- U, X2 <- Y * Z
    def equations(n):
        y = n["X1"] * n["A"]
        return {"X1": n["X1"], "Y": y, "U": n["U"], "Z": n["U"], "X2": y * n["U"]}

    noise = [("X1", params.gamma), ("A", params.alpha), ("U", params.beta)]
    return enumerateStructuralModel(noise, equations)


def confOutcomeLatent(params: EnvParams) -> DiscreteJoint:
    # X1 <- Rad(0.5), U <- Rad(gamma), Y <- X1 * U * Rad(alpha), Z <- U, X2 <- Z
    def equations(n):
        u = n["U"]
        return {"X1": n["X1"], "U": u, "Y": n["X1"] * u * n["A"], "Z": u, "X2": u}

    noise = [("X1", 0.5), ("U", params.gamma), ("A", params.alpha)]
    return enumerateStructuralModel(noise, equations)


def buildEnvironmentSet(
    subtype: CisaSubtype,
    latentModel: Callable[[EnvParams], DiscreteJoint],
    params: List[EnvParams],
    test: EnvParams,
) -> EnvironmentSet:
    if not params:
        raise ConfigurationError("at least one training environment is required")

    for i, envParams in enumerate(params):
        checkParams(envParams, f"env {i}")
    checkParams(test, "test env")

    latentTrainEnvs = [latentModel(p) for p in params]
    latentTestEnv = latentModel(test)

    return EnvironmentSet(
        subtype=subtype,
        trainEnvs=[marginal(j, OBSERVED) for j in latentTrainEnvs],
        testEnv=marginal(latentTestEnv, OBSERVED),
        latentTrainEnvs=latentTrainEnvs,
        latentTestEnv=latentTestEnv,
        attribution=Attribution(),
        trainParams=list(params),
        testParams=test,
    )


def twoBitAntiCausal(params: List[EnvParams], test: EnvParams) -> EnvironmentSet:
    return buildEnvironmentSet(CisaSubtype.ANTI_CAUSAL, antiCausalLatent, params, test)


def twoBitAntiCausalPurelySpurious(
    params: List[EnvParams], test: EnvParams
) -> EnvironmentSet:
    return buildEnvironmentSet(
        CisaSubtype.ANTI_CAUSAL, antiCausalPurelySpuriousLatent, params, test
    )


def twoBitConfDescendant(params: List[EnvParams], test: EnvParams) -> EnvironmentSet:
    return buildEnvironmentSet(
        CisaSubtype.CONF_DESCENDANT, confDescendantLatent, params, test
    )


def twoBitConfOutcome(params: List[EnvParams], test: EnvParams) -> EnvironmentSet:
    return buildEnvironmentSet(CisaSubtype.CONF_OUTCOME, confOutcomeLatent, params, test)


generators = {
    Dgp.ANTICAUSAL: twoBitAntiCausal,
    Dgp.ANTICAUSAL_PURELY_SPURIOUS: twoBitAntiCausalPurelySpurious,
    Dgp.CONFDESC: twoBitConfDescendant,
    Dgp.CONFOUTCOME: twoBitConfOutcome,
}


def makeEnvironmentSet(
    dgp: Dgp,
    alpha: Probability = config.defaultAlpha,
    betas: Sequence[Probability] = config.defaultBetas,
    gammas: Sequence[Probability] = config.defaultGammas,
    betaTest: Probability = config.defaultBetaTest,
    gammaTest: Probability = config.defaultGammaTest,
) -> EnvironmentSet:
    if len(betas) != len(gammas):
        raise ConfigurationError(
            f"beta and gamma lists differ in length ({len(betas)} vs {len(gammas)})"
        )

    params = [EnvParams(alpha, beta, gamma) for beta, gamma in zip(betas, gammas)]
    return generators[dgp](params, EnvParams(alpha, betaTest, gammaTest))


def marginal(joint: DiscreteJoint, variables: Sequence[str]) -> DiscreteJoint:
    variables = tuple(variables)
    missing = [v for v in variables if v not in joint.variables]
    if missing or len(set(variables)) != len(variables):
        raise InvalidQueryError(f"cannot marginalize {joint.variables} onto {variables}")

    dropped = tuple(i for i, v in enumerate(joint.variables) if v not in variables)
    table = joint.table.sum(axis=dropped)
    kept = [v for v in joint.variables if v in variables]
    table = np.transpose(table, [kept.index(v) for v in variables])

    return DiscreteJoint(variables, table)


def probability(joint: DiscreteJoint, event: Dict[str, int]) -> Probability:
    index = tuple(
        valueToIndex(event[v]) if v in event else slice(None) for v in joint.variables
    )
    return float(joint.table[index].sum())


def conditional(
    joint: DiscreteJoint, variables: Sequence[str], given: Dict[str, int]
) -> DiscreteJoint:
    overlap = set(variables) & set(given)
    if overlap:
        raise InvalidQueryError(f"{sorted(overlap)} both queried and conditioned on")

    mass = probability(joint, given)
    if mass <= 0.0:
        raise UndefinedConditionalError(f"conditioning event {given} has probability 0")

    index = tuple(
        valueToIndex(given[v]) if v in given else slice(None) for v in joint.variables
    )
    free = [v for v in joint.variables if v not in given]
    restricted = DiscreteJoint(tuple(free), joint.table[index] / mass)

    return marginal(restricted, variables)


def mixture(joints: Sequence[DiscreteJoint], weights: Sequence[float]) -> DiscreteJoint:
    if not joints or len(joints) != len(weights):
        raise DomainError("mixture needs one weight per joint")

    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > config.normalizationTolerance:
        raise DomainError(f"mixture weights must be non-negative and sum to 1: {weights}")

    variables = joints[0].variables
    if any(j.variables != variables for j in joints):
        raise DomainError("mixture components must share the same variables")

    table = sum(w * j.table for w, j in zip(weights, joints))
    return DiscreteJoint(variables, table)


def uniformMixture(joints: Sequence[DiscreteJoint]) -> DiscreteJoint:
    return mixture(joints, [1.0 / len(joints)] * len(joints))


def labelMarginal(joint: DiscreteJoint) -> np.ndarray:
    return marginal(joint, ["Y"]).table.copy()


def checkPurelySpurious(envSet: EnvironmentSet) -> bool:
    """
    Y independent of X given (XzPerp, Z) in every environment, exactly
    """
    attribution = envSet.attribution
    latentJoints = list(envSet.latentTrainEnvs)
    if envSet.latentTestEnv is not None:
        latentJoints.append(envSet.latentTestEnv)

    if attribution is None or not latentJoints:
        raise ConfigurationError("purely-spurious check needs latent joints and an attribution")

    invariant, latent = attribution.invariantFeature, attribution.spuriousLatent
    remaining = [v for v in OBSERVED if v not in ("Y", invariant)]

    for joint in latentJoints:
        for x, z in itertools.product(LABELS, repeat=2):
            given = {invariant: x, latent: z}
            if probability(joint, given) <= 0.0:
                continue

            labelLaws = []
            for rest in itertools.product(LABELS, repeat=len(remaining)):
                cell = dict(given, **dict(zip(remaining, rest)))
                if probability(joint, cell) > 0.0:
                    labelLaws.append(conditional(joint, ["Y"], cell).table)

            labelLaws = np.array(labelLaws)
            spread = (labelLaws.max(axis=0) - labelLaws.min(axis=0)).max()
            if spread > config.normalizationTolerance:
                return False

    return True


def sample(joint: DiscreteJoint, n: int, seed: int) -> np.ndarray:
    """
    n i.i.d. draws as an (n, len(variables)) array of +-1 values
    """
    if not isinstance(n, int) or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n!r}")

    rng = np.random.default_rng(seed)
    flat = joint.table.ravel()
    cells = rng.choice(flat.size, size=n, p=flat / flat.sum())
    indexes = np.stack(np.unravel_index(cells, joint.table.shape), axis=1)

    return 2 * indexes - 1


def jointRows(joint: DiscreteJoint) -> List[list]:
    rows = []
    for values in itertools.product(LABELS, repeat=len(joint.variables)):
        prob = float(joint.table[tuple(valueToIndex(v) for v in values)])
        rows.append(list(values) + [prob])
    return rows


def jointsEqual(a: DiscreteJoint, b: DiscreteJoint, tol: float = config.normalizationTolerance) -> bool:
    return a.variables == b.variables and bool(np.max(np.abs(a.table - b.table)) <= tol)
