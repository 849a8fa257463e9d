from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple
import numpy as np
import config
from errors import DomainError

Probability = float
Score = float
Label = int  # -1 or +1
Point = Tuple[int, int]  # (x1, x2), each -1 or +1
Code = int

# the 4-point domain {-1,+1}^2 in table order
DOMAIN: List[Point] = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
LABELS: List[Label] = [-1, 1]


def valueToIndex(value: int) -> int:
    return 0 if value == -1 else 1


class NodeRole(Enum):
    U = "U"
    Z = "Z"
    XZ = "XZ"
    XZPERP = "XZPERP"
    Y = "Y"
    E = "E"


Edge = Tuple[NodeRole, NodeRole]


class CisaSubtype(Enum):
    ANTI_CAUSAL = "anti-causal"
    CONF_OUTCOME = "confounded-outcome"
    CONF_DESCENDANT = "confounded-descendant"
    NOT_CISA = "not-cisa"


@dataclass(frozen=True)
class CausalDag:
    edges: FrozenSet[Edge] = frozenset()

    def sortedEdges(self) -> List[Tuple[str, str]]:
        return sorted((a.value, b.value) for a, b in self.edges)

    def __contains__(self, edge: Edge) -> bool:
        return edge in self.edges


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """
    exact probability table over named +-1 variables,
    axis i indexes variables[i] with index 0 -> -1 and 1 -> +1
    """

    variables: Tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)

        if len(set(self.variables)) != len(self.variables):
            raise DomainError(f"duplicate variables in {self.variables}")

        if table.shape != (2,) * len(self.variables):
            raise DomainError(
                f"table shape {table.shape} does not match {len(self.variables)} binary variables"
            )

        if not np.all(np.isfinite(table)) or np.any(table < 0):
            raise DomainError("probability table has negative or non-finite entries")

        if abs(table.sum() - 1.0) > config.normalizationTolerance:
            raise DomainError(f"probability table sums to {table.sum()!r}, not 1")

        table.setflags(write=False)
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "table", table)

    def axis(self, variable: str) -> int:
        return self.variables.index(variable)

    def __getitem__(self, assignment: Dict[str, int]) -> Probability:
        index = tuple(valueToIndex(assignment[v]) for v in self.variables)
        return float(self.table[index])


@dataclass
class EnvParams:
    alpha: Probability = config.defaultAlpha
    beta: Probability = 0.0
    gamma: Probability = 0.5


@dataclass
class Attribution:
    invariantFeature: str = "X1"  # XzPerp
    spuriousFeature: str = "X2"  # the coordinate Z acts on
    spuriousLatent: str = "Z"
    confounder: str = "U"


@dataclass(eq=False)
class EnvironmentSet:
    subtype: CisaSubtype
    trainEnvs: List[DiscreteJoint]
    testEnv: DiscreteJoint
    latentTrainEnvs: List[DiscreteJoint] = field(default_factory=list)
    latentTestEnv: Optional[DiscreteJoint] = None
    attribution: Optional[Attribution] = None
    trainParams: List[EnvParams] = field(default_factory=list)
    testParams: Optional[EnvParams] = None


@dataclass(frozen=True, eq=False)
class TabularPredictor:
    """
    real-valued score f(x1, x2), scores[i][j] with i, j the +-1 indexes of x1, x2
    """

    scores: np.ndarray

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float).reshape(2, 2)

        if not np.all(np.isfinite(scores)):
            raise DomainError(f"predictor scores must be finite: {scores.tolist()}")

        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    def __getitem__(self, point: Point) -> Score:
        return float(self.scores[valueToIndex(point[0]), valueToIndex(point[1])])

    def flat(self) -> np.ndarray:
        return self.scores.reshape(4)


@dataclass(frozen=True)
class Representation:
    codes: Tuple[Code, Code, Code, Code]  # phi(x) for x in DOMAIN order

    def __getitem__(self, point: Point) -> Code:
        return self.codes[DOMAIN.index(point)]

    def image(self) -> List[Code]:
        return sorted(set(self.codes))


class LossKind(Enum):
    LOGISTIC = "logistic"
    SQUARED = "squared"


class DiKind(Enum):
    MARGINAL = "marginal"
    CONDITIONAL = "conditional"
    SUFFICIENCY = "sufficiency"


class Optimizer(Enum):
    NEWTON = "newton"
    GRADIENT_DESCENT = "gradientDescent"


class GirmReweighting(Enum):
    LOSS_AND_PENALTY = "lossAndPenalty"
    PENALTY_ONLY = "penaltyOnly"


@dataclass
class TrainConfig:
    loss: LossKind = LossKind.LOGISTIC
    learningRate: float = config.defaultLearningRate
    maxIters: int = config.defaultMaxIters
    gradTolerance: float = config.defaultGradTolerance
    penaltyWeight: float = config.defaultPenaltyWeight
    penaltyAnnealIters: int = config.defaultPenaltyAnnealIters
    init: List[Score] = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    referenceLabelDist: List[Probability] = field(
        default_factory=lambda: list(config.defaultReferenceLabelDist)
    )
    optimizer: Optimizer = Optimizer.NEWTON
    girmReweighting: GirmReweighting = GirmReweighting.LOSS_AND_PENALTY


@dataclass(frozen=True)
class Transform:
    name: str
    table: Tuple[Point, Point, Point, Point]  # t(x) for x in DOMAIN order

    def __call__(self, point: Point) -> Point:
        return self.table[DOMAIN.index(point)]


TransformSet = List[Transform]


@dataclass
class DiResult:
    deviation: float = 0.0
    flagged: bool = False  # a conditioning cell had mass in some envs only


@dataclass
class MembershipResult:
    member: bool = True
    maxGap: float = 0.0
    excludedCodes: List[Code] = field(default_factory=list)


@dataclass
class AuditReport:
    cfInvariant: bool = False
    spuriousGap: float = 0.0
    trivial: bool = False
    diDeviations: Dict[str, float] = field(default_factory=dict)
    irmMember: bool = False
    girmMember: bool = False
    trainAccuracies: List[float] = field(default_factory=list)
    trainRisks: List[float] = field(default_factory=list)
    testAccuracy: float = 0.0
    testRisk: float = 0.0


class Dgp(Enum):
    ANTICAUSAL = "anticausal"
    ANTICAUSAL_PURELY_SPURIOUS = "anticausalPurelySpurious"
    CONFDESC = "confdesc"
    CONFOUTCOME = "confoutcome"


class Method(Enum):
    ERM = "erm"
    IRMV1 = "irmv1"
    GIRMV1 = "girmv1"
    CONSISTENCY = "consistency"
    AUGMENTED = "augmented"


@dataclass
class ExperimentSpec:
    name: str = "experiment"
    dgp: Dgp = Dgp.ANTICAUSAL
    method: Method = Method.GIRMV1
    alpha: Probability = config.defaultAlpha
    beta: List[Probability] = field(default_factory=lambda: list(config.defaultBetas))
    gamma: List[Probability] = field(default_factory=lambda: list(config.defaultGammas))
    betaTest: Probability = config.defaultBetaTest
    gammaTest: Probability = config.defaultGammaTest
    train: TrainConfig = field(default_factory=TrainConfig)
    transforms: List[str] = field(default_factory=lambda: ["identity", "flipX2"])
    transformDist: List[Probability] = field(default_factory=list)  # empty -> uniform
    cfTolerance: float = config.cfTolerance
    outputDir: str = config.defaultOutputDir
    seed: int = 0
    sampleSize: int = 0  # draws per environment written to samples csv, 0 -> none


@dataclass
class ExperimentSummary:
    name: str = ""
    dgp: str = ""
    method: str = ""
    cfInvariant: bool = False
    trivial: bool = False
    testAccuracy: float = 0.0
    scores: List[Score] = field(default_factory=list)


@dataclass
class GridSpec:
    name: str = "grid"
    experiments: List[str] = field(default_factory=list)  # experiment config paths
    outputDir: str = config.defaultOutputDir
    maxProcesses: int = 4


@dataclass
class AuditCheck:
    suite: str
    name: str
    passed: bool
    detail: str = ""
