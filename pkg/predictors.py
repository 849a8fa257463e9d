import itertools
from typing import Dict, List, Optional, Tuple
import numpy as np
from scipy.special import expit
import config
from environments import OBSERVED, marginal
from errors import ConfigurationError, DomainError
from models import (
    DOMAIN,
    Code,
    DiscreteJoint,
    LossKind,
    Point,
    Representation,
    Score,
    TabularPredictor,
)

# label values broadcast against an (x1, x2, y) table
labelGrid = np.array([-1.0, 1.0]).reshape(1, 1, 2)


def observedTable(joint: DiscreteJoint) -> np.ndarray:
    if joint.variables == OBSERVED:
        return joint.table
    return marginal(joint, OBSERVED).table


def constantPredictor(score: Score) -> TabularPredictor:
    return TabularPredictor(np.full((2, 2), float(score)))


def predictorFromFunction(f) -> TabularPredictor:
    return TabularPredictor(np.array([f(x1, x2) for x1, x2 in DOMAIN]).reshape(2, 2))


def predict(f: TabularPredictor, x: Point) -> int:
    if tuple(x) not in DOMAIN:
        raise DomainError(f"{x!r} is not a point of {{-1,+1}}^2")
    # sign(0) = +1
    return 1 if f[tuple(x)] >= 0 else -1


def predictedLabels(f: TabularPredictor) -> np.ndarray:
    return np.where(f.scores >= 0, 1.0, -1.0)


def lossValues(loss: LossKind, scores: np.ndarray) -> np.ndarray:
    """
    L(y, f(x)) for every (x1, x2, y) cell
    """
    s = scores.reshape(2, 2, 1)
    if loss == LossKind.LOGISTIC:
        return np.logaddexp(0.0, -labelGrid * s)
    return (s - labelGrid) ** 2


def lossDerivatives(loss: LossKind, scores: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    first, second and third derivative of L(y, s) in s, per (x1, x2, y) cell
    """
    s = np.broadcast_to(scores.reshape(2, 2, 1), (2, 2, 2))
    if loss == LossKind.LOGISTIC:
        positive, negative = expit(s), expit(-s)
        first = -labelGrid * expit(-labelGrid * s)
        second = positive * negative
        third = second * (negative - positive)
        return first, second, third

    return 2.0 * (s - labelGrid), np.full((2, 2, 2), 2.0), np.zeros((2, 2, 2))


def risk(
    f: TabularPredictor,
    joint: DiscreteJoint,
    loss: LossKind,
    weights: Optional[np.ndarray] = None,
) -> float:
    table = observedTable(joint)

    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (2, 2, 2) or np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise DomainError("risk weights must be a finite non-negative (x1, x2, y) table")
        table = table * weights

    return float(np.sum(table * lossValues(loss, f.scores)))


def accuracy(f: TabularPredictor, joint: DiscreteJoint) -> float:
    table = observedTable(joint)
    correct = predictedLabels(f).reshape(2, 2, 1) == labelGrid
    return float(np.sum(table * correct))


def compose(head: Dict[Code, Score], phi: Representation) -> TabularPredictor:
    missing = [code for code in phi.image() if code not in head]
    if missing:
        raise ConfigurationError(f"head is undefined on codes {missing}")

    return TabularPredictor(np.array([head[code] for code in phi.codes]).reshape(2, 2))


def featureRepresentation(feature: str) -> Representation:
    position = ("X1", "X2").index(feature)
    return Representation(tuple(1 if x[position] == 1 else 0 for x in DOMAIN))


def constantRepresentation() -> Representation:
    return Representation((0, 0, 0, 0))


def identityRepresentation() -> Representation:
    return Representation((0, 1, 2, 3))


def allBooleanRepresentations() -> List[Representation]:
    return [Representation(codes) for codes in itertools.product([0, 1], repeat=4)]


def decisionRepresentation(f: TabularPredictor) -> Representation:
    """
    the level sets of x -> sign(f(x))
    """
    return Representation(tuple(1 if predict(f, x) == 1 else 0 for x in DOMAIN))


def isTrivial(f: TabularPredictor, threshold: float = config.trivialityThreshold) -> bool:
    return float(np.max(np.abs(f.scores))) < threshold


def predictorRows(f: TabularPredictor) -> List[list]:
    return [[x1, x2, f[(x1, x2)]] for x1, x2 in DOMAIN]
