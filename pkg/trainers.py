import itertools
from typing import Callable, List, Optional, Sequence, Tuple
import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
import config
from environments import OBSERVED, labelMarginal
from errors import ConfigurationError, DivergenceError, DomainError, ReweightingError
from models import (
    DOMAIN,
    LABELS,
    DiKind,
    DiResult,
    DiscreteJoint,
    GirmReweighting,
    LossKind,
    Optimizer,
    Representation,
    TabularPredictor,
    TrainConfig,
    Transform,
    TransformSet,
    valueToIndex,
)
from predictors import lossDerivatives, lossValues, observedTable

# value, gradient and hessian over the 4 flattened scores
Terms = Tuple[float, np.ndarray, np.ndarray]
Objective = Callable[[np.ndarray, float], Terms]


def validateTrainConfig(cfg: TrainConfig):
    if not cfg.learningRate > 0:
        raise ConfigurationError(f"learningRate must be positive, got {cfg.learningRate}")
    if not cfg.gradTolerance > 0:
        raise ConfigurationError(f"gradTolerance must be positive, got {cfg.gradTolerance}")
    if cfg.maxIters < 1 or cfg.penaltyAnnealIters < 0:
        raise ConfigurationError("maxIters must be >= 1 and penaltyAnnealIters >= 0")
    if cfg.penaltyWeight < 0:
        raise ConfigurationError(f"penaltyWeight must be non-negative, got {cfg.penaltyWeight}")
    if len(cfg.init) != 4 or not np.all(np.isfinite(cfg.init)):
        raise ConfigurationError(f"init must hold 4 finite scores, got {cfg.init}")

    p0 = np.asarray(cfg.referenceLabelDist, dtype=float)
    if p0.shape != (2,) or np.any(p0 <= 0) or abs(p0.sum() - 1.0) > config.normalizationTolerance:
        raise ConfigurationError(
            f"referenceLabelDist must be a strictly positive law over (-1, +1), got {cfg.referenceLabelDist}"
        )


def pooledRiskTerms(scores: np.ndarray, tables: Sequence[np.ndarray], loss: LossKind) -> Terms:
    pooled = sum(tables) / len(tables)
    first, second, _ = lossDerivatives(loss, scores)

    value = float(np.sum(pooled * lossValues(loss, scores)))
    grad = np.sum(pooled * first, axis=2).reshape(4)
    hess = np.diag(np.sum(pooled * second, axis=2).reshape(4))

    return value, grad, hess


def dummyDerivativeTerms(scores: np.ndarray, table: np.ndarray, loss: LossKind) -> Terms:
    """
    D = d/dw E[L(Y, w f(X))] at w = 1, with its gradient and (diagonal) hessian in f
    """
    s = scores.reshape(2, 2, 1)
    first, second, third = lossDerivatives(loss, scores)

    value = float(np.sum(table * first * s))
    grad = np.sum(table * (second * s + first), axis=2).reshape(4)
    hess = np.diag(np.sum(table * (third * s + 2.0 * second), axis=2).reshape(4))

    return value, grad, hess


def irmv1DummyDerivative(f: TabularPredictor, joint: DiscreteJoint, loss: LossKind) -> float:
    return dummyDerivativeTerms(f.scores, observedTable(joint), loss)[0]


def irmv1Penalty(f: TabularPredictor, joint: DiscreteJoint, loss: LossKind) -> float:
    return irmv1DummyDerivative(f, joint, loss) ** 2


def makeObjective(
    riskTables: Sequence[np.ndarray],
    penaltyTables: Sequence[np.ndarray],
    loss: LossKind,
) -> Objective:
    """
    pooled risk + weight * sum_e D_e^2, divided by weight when weight > 1
    """

    def objective(theta: np.ndarray, weight: float) -> Terms:
        scores = theta.reshape(2, 2)
        value, grad, hess = pooledRiskTerms(scores, riskTables, loss)

        if weight > 0:
            for table in penaltyTables:
                d, dGrad, dHess = dummyDerivativeTerms(scores, table, loss)
                value += weight * d * d
                grad = grad + weight * 2.0 * d * dGrad
                hess = hess + weight * 2.0 * (np.outer(dGrad, dGrad) + d * dHess)

        scale = 1.0 / weight if weight > 1 else 1.0
        return value * scale, grad * scale, hess * scale

    return objective


def checkFinite(value: float, theta: np.ndarray, iteration: int):
    if not np.isfinite(value) or not np.all(np.isfinite(theta)):
        raise DivergenceError(f"non-finite objective at iteration {iteration}", theta)


def dampedNewtonStep(grad: np.ndarray, hess: np.ndarray) -> np.ndarray:
    identity = np.eye(len(grad))
    damping = 0.0

    while True:
        try:
            factor = cho_factor(hess + damping * identity)
            return -cho_solve(factor, grad)
        except LinAlgError:
            damping = max(config.initialDamping, damping * 10.0)
            if damping > 1e16:
                raise DivergenceError("hessian could not be regularized")


def minimize(
    objective: Objective,
    cfg: TrainConfig,
    expand: Optional[np.ndarray] = None,
    penalized: bool = False,
) -> TabularPredictor:
    """
    gradient descent warm-up at penalty weight 1 for penaltyAnnealIters, then the
    configured optimizer at the full weight until the gradient norm is below
    gradTolerance; expand maps tied parameters onto the 4 scores
    """
    validateTrainConfig(cfg)
    expand = np.eye(4) if expand is None else expand
    params = np.linalg.lstsq(expand, np.asarray(cfg.init, dtype=float), rcond=None)[0]

    def reduced(v: np.ndarray, weight: float) -> Terms:
        value, grad, hess = objective(expand @ v, weight)
        return value, expand.T @ grad, expand.T @ hess @ expand

    iteration = 0

    if penalized:
        for _ in range(cfg.penaltyAnnealIters):
            value, grad, _ = reduced(params, 1.0)
            checkFinite(value, params, iteration)
            params = params - cfg.learningRate * grad
            iteration += 1

    weight = cfg.penaltyWeight if penalized else 0.0

    for _ in range(cfg.maxIters):
        value, grad, hess = reduced(params, weight)
        checkFinite(value, expand @ params, iteration)

        if np.linalg.norm(grad) < cfg.gradTolerance:
            return TabularPredictor((expand @ params).reshape(2, 2))

        if cfg.optimizer == Optimizer.GRADIENT_DESCENT:
            params = params - cfg.learningRate * grad
        else:
            params = lineSearch(reduced, params, value, grad, dampedNewtonStep(grad, hess), weight)

        iteration += 1

    raise DivergenceError(
        f"no convergence after {iteration} iterations, gradient norm {np.linalg.norm(grad):.3g}",
        expand @ params,
    )


def lineSearch(reduced, params, value, grad, step, weight) -> np.ndarray:
    slope = float(grad @ step)
    stepSize = 1.0

    while stepSize >= config.minStepSize:
        candidate = params + stepSize * step
        candidateValue = reduced(candidate, weight)[0]
        if np.isfinite(candidateValue) and candidateValue <= value + config.armijoConstant * stepSize * slope:
            return candidate
        stepSize /= 2.0

    # round-off floor: take the full step if it still shrinks the gradient
    candidate = params + step
    if np.linalg.norm(reduced(candidate, weight)[1]) < np.linalg.norm(grad):
        return candidate

    raise DivergenceError("line search stalled", params)


def requireEnvs(envs: Sequence[DiscreteJoint], minimum: int):
    if len(envs) < minimum:
        raise ConfigurationError(f"need at least {minimum} training environments, got {len(envs)}")


def trainErm(envs: Sequence[DiscreteJoint], cfg: TrainConfig) -> TabularPredictor:
    requireEnvs(envs, 1)
    tables = [observedTable(env) for env in envs]
    return minimize(makeObjective(tables, [], cfg.loss), cfg)


def trainIrmv1(envs: Sequence[DiscreteJoint], cfg: TrainConfig) -> TabularPredictor:
    requireEnvs(envs, 2)
    tables = [observedTable(env) for env in envs]
    return minimize(makeObjective(tables, tables, cfg.loss), cfg, penalized=True)


def reweightedJoint(env: DiscreteJoint, p0: Sequence[float]) -> DiscreteJoint:
    """
    Q_e(x, y) = P_e(x, y) P0(y) / P_e(y)
    """
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (2,) or np.any(p0 < 0) or abs(p0.sum() - 1.0) > config.normalizationTolerance:
        raise DomainError(f"reference label law must be a distribution over (-1, +1), got {p0}")

    labelLaw = labelMarginal(env)
    ratio = np.zeros(2)
    for i, label in enumerate(LABELS):
        if p0[i] == 0:
            continue
        if labelLaw[i] <= 0:
            raise ReweightingError(f"P_e(Y={label:+d}) = 0 while P0(Y={label:+d}) > 0")
        ratio[i] = p0[i] / labelLaw[i]

    shape = [1] * len(env.variables)
    shape[env.axis("Y")] = 2
    return DiscreteJoint(env.variables, env.table * ratio.reshape(shape))


def trainGirmv1(envs: Sequence[DiscreteJoint], cfg: TrainConfig) -> TabularPredictor:
    requireEnvs(envs, 2)
    reweighted = [reweightedJoint(env, cfg.referenceLabelDist) for env in envs]

    if cfg.girmReweighting == GirmReweighting.LOSS_AND_PENALTY:
        return trainIrmv1(reweighted, cfg)

    # importance weights inside the penalty only
    riskTables = [observedTable(env) for env in envs]
    penaltyTables = [observedTable(env) for env in reweighted]
    return minimize(makeObjective(riskTables, penaltyTables, cfg.loss), cfg, penalized=True)


def makeTransform(name: str, mapping) -> Transform:
    return Transform(name, tuple(mapping(x) for x in DOMAIN))


transformRegistry = {
    "identity": makeTransform("identity", lambda x: x),
    "flipX1": makeTransform("flipX1", lambda x: (-x[0], x[1])),
    "flipX2": makeTransform("flipX2", lambda x: (x[0], -x[1])),
    "flipBoth": makeTransform("flipBoth", lambda x: (-x[0], -x[1])),
}


def transformsByName(names: Sequence[str]) -> TransformSet:
    unknown = [n for n in names if n not in transformRegistry]
    if unknown:
        raise ConfigurationError(f"unknown transforms {unknown}, known: {sorted(transformRegistry)}")
    return [transformRegistry[n] for n in names]


def validateTransforms(transforms: TransformSet):
    for t in transforms:
        if len(t.table) != len(DOMAIN) or any(tuple(p) not in DOMAIN for p in t.table):
            raise ConfigurationError(f"transform {t.name} does not map {{-1,+1}}^2 into itself")

    if not any(tuple(t.table) == tuple(DOMAIN) for t in transforms):
        raise ConfigurationError("transform set must include the identity")


def orbits(transforms: TransformSet) -> List[List[int]]:
    """
    partition of the domain (as DOMAIN indexes) into orbits of the generated group
    """
    validateTransforms(transforms)
    root = list(range(len(DOMAIN)))

    def find(i):
        while root[i] != i:
            root[i] = root[root[i]]
            i = root[i]
        return i

    for t in transforms:
        for i, x in enumerate(DOMAIN):
            a, b = find(i), find(DOMAIN.index(tuple(t(x))))
            if a != b:
                root[max(a, b)] = min(a, b)

    groups = {}
    for i in range(len(DOMAIN)):
        groups.setdefault(find(i), []).append(i)

    return [groups[key] for key in sorted(groups)]


def tyingMatrix(transforms: TransformSet) -> np.ndarray:
    groups = orbits(transforms)
    expand = np.zeros((len(DOMAIN), len(groups)))
    for column, group in enumerate(groups):
        expand[group, column] = 1.0
    return expand


def trainConsistency(
    envs: Sequence[DiscreteJoint], transforms: TransformSet, cfg: TrainConfig
) -> TabularPredictor:
    """
    hard consistency f(x) = f(t(x)) by tying scores across each orbit, then ERM
    """
    requireEnvs(envs, 1)
    tables = [observedTable(env) for env in envs]
    return minimize(makeObjective(tables, [], cfg.loss), cfg, expand=tyingMatrix(transforms))


def augmentedJoint(
    joint: DiscreteJoint, transforms: TransformSet, transformDist: Sequence[float]
) -> DiscreteJoint:
    """
    law of (t(X), Y) with t drawn from transformDist independently of (X, Y)
    """
    validateTransforms(transforms)
    weights = np.asarray(transformDist, dtype=float)
    if (
        len(weights) != len(transforms)
        or np.any(weights < 0)
        or abs(weights.sum() - 1.0) > config.normalizationTolerance
    ):
        raise DomainError(f"transform distribution must match the transforms and sum to 1, got {transformDist}")

    table = observedTable(joint)
    augmented = np.zeros((2, 2, 2))

    for weight, t in zip(weights, transforms):
        for x in DOMAIN:
            tx = tuple(t(x))
            source = (valueToIndex(x[0]), valueToIndex(x[1]))
            target = (valueToIndex(tx[0]), valueToIndex(tx[1]))
            augmented[target] += weight * table[source]

    return DiscreteJoint(OBSERVED, augmented)


def trainAugmentedErm(
    envs: Sequence[DiscreteJoint],
    transforms: TransformSet,
    transformDist: Sequence[float],
    cfg: TrainConfig,
) -> TabularPredictor:
    requireEnvs(envs, 1)
    return trainErm([augmentedJoint(env, transforms, transformDist) for env in envs], cfg)


def codeLaws(phi: Representation, env: DiscreteJoint) -> Tuple[List[int], np.ndarray]:
    """
    the joint law of (phi(X), Y) as a (codes, 2) array
    """
    codes = phi.image()
    table = observedTable(env)
    law = np.zeros((len(codes), 2))

    for x, code in zip(DOMAIN, phi.codes):
        law[codes.index(code)] += table[valueToIndex(x[0]), valueToIndex(x[1])]

    return codes, law


def totalVariation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(p - q)))


def conditionalDeviation(laws: List[np.ndarray]) -> DiResult:
    """
    laws[e][c] are the unnormalized rows of the conditioning cell c in env e
    """
    result = DiResult()

    for cell in range(laws[0].shape[0]):
        masses = [law[cell].sum() for law in laws]
        present = [m > 0 for m in masses]
        if not any(present):
            continue
        if not all(present):
            return DiResult(deviation=1.0, flagged=True)

        rows = [law[cell] / mass for law, mass in zip(laws, masses)]
        for a, b in itertools.combinations(rows, 2):
            result.deviation = max(result.deviation, totalVariation(a, b))

    return result


def diPenalty(phi: Representation, envs: Sequence[DiscreteJoint], kind: DiKind) -> DiResult:
    """
    largest total-variation gap across environment pairs of P(phi), P(phi | Y) or P(Y | phi)
    """
    requireEnvs(envs, 2)
    laws = [codeLaws(phi, env)[1] for env in envs]

    if kind == DiKind.MARGINAL:
        marginals = [law.sum(axis=1) for law in laws]
        deviation = max(totalVariation(a, b) for a, b in itertools.combinations(marginals, 2))
        return DiResult(deviation=deviation)

    if kind == DiKind.CONDITIONAL:
        return conditionalDeviation([law.T for law in laws])

    return conditionalDeviation(laws)
