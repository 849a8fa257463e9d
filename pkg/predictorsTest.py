import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
import predictors
from environments import makeEnvironmentSet, mixture
from errors import ConfigurationError, DomainError
from models import DOMAIN, Dgp, LossKind, Representation, TabularPredictor

scoreTables = st.lists(st.floats(min_value=-5, max_value=5), min_size=4, max_size=4)


def testPredictUsesSignZeroPositive():
    f = predictors.predictorFromFunction(lambda x1, x2: 0.0 if x1 == 1 else -x2)

    assert predictors.predict(f, (1, 1)) == 1
    assert predictors.predict(f, (1, -1)) == 1
    assert predictors.predict(f, (-1, 1)) == -1
    assert predictors.predict(f, (-1, -1)) == 1

    with pytest.raises(DomainError):
        predictors.predict(f, (0, 1))


def testTabularPredictorRejectsNonFinite():
    with pytest.raises(DomainError):
        TabularPredictor(np.array([0.0, np.nan, 1.0, 2.0]))


def testScoresFollowDomainOrder():
    f = predictors.predictorFromFunction(lambda x1, x2: 2 * x1 + x2)
    assert f.flat().tolist() == [-3.0, -1.0, 1.0, 3.0]
    assert [f[x] for x in DOMAIN] == [-3.0, -1.0, 1.0, 3.0]


def testAccuracyOfFeaturePredictors():
    envSet = makeEnvironmentSet(Dgp.ANTICAUSAL)
    x1Only = predictors.predictorFromFunction(lambda x1, x2: x1)

    assert predictors.accuracy(x1Only, envSet.testEnv) == pytest.approx(0.75, abs=1e-12)
    # the constant 0 predicts +1 everywhere
    assert predictors.accuracy(predictors.constantPredictor(0.0), envSet.testEnv) == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(scores=scoreTables, scale=st.floats(min_value=0.01, max_value=100))
def testAccuracyIsScaleInvariant(scores, scale):
    env = makeEnvironmentSet(Dgp.CONFDESC).trainEnvs[0]
    f = TabularPredictor(np.array(scores))
    scaled = TabularPredictor(np.array(scores) * scale)

    # scaling can only move scores across 0 by rounding, skip those
    if np.any(np.sign(f.scores) != np.sign(scaled.scores)):
        return

    assert predictors.accuracy(f, env) == predictors.accuracy(scaled, env)


@settings(max_examples=50, deadline=None)
@given(scores=scoreTables)
def testLossDerivativesMatchFiniteDifferences(scores):
    scores = np.array(scores).reshape(2, 2)
    h = 1e-5

    for loss in LossKind:
        first, second, _ = predictors.lossDerivatives(loss, scores)
        up, down = predictors.lossValues(loss, scores + h), predictors.lossValues(loss, scores - h)
        assert np.allclose(first, (up - down) / (2 * h), atol=1e-6)

        upFirst = predictors.lossDerivatives(loss, scores + h)[0]
        downFirst = predictors.lossDerivatives(loss, scores - h)[0]
        assert np.allclose(second, (upFirst - downFirst) / (2 * h), atol=1e-6)

        # convex in the score
        assert np.all(second >= 0)


def testRisk():
    env = makeEnvironmentSet(Dgp.ANTICAUSAL).testEnv
    zero = predictors.constantPredictor(0.0)

    assert predictors.risk(zero, env, LossKind.LOGISTIC) == pytest.approx(np.log(2), abs=1e-12)
    assert predictors.risk(zero, env, LossKind.SQUARED) == pytest.approx(1.0, abs=1e-12)

    # uniform weights of 2 double the risk
    assert predictors.risk(zero, env, LossKind.SQUARED, np.full((2, 2, 2), 2.0)) == pytest.approx(2.0)

    with pytest.raises(DomainError):
        predictors.risk(zero, env, LossKind.SQUARED, np.full((2, 2, 2), -1.0))


def testCompose():
    phi = predictors.featureRepresentation("X1")
    f = predictors.compose({0: -1.5, 1: 2.0}, phi)
    assert f.flat().tolist() == [-1.5, -1.5, 2.0, 2.0]

    with pytest.raises(ConfigurationError):
        predictors.compose({0: 1.0}, phi)


def testRepresentations():
    assert predictors.featureRepresentation("X2").codes == (0, 1, 0, 1)
    assert predictors.constantRepresentation().image() == [0]
    assert predictors.identityRepresentation().image() == [0, 1, 2, 3]

    everything = predictors.allBooleanRepresentations()
    assert len(everything) == 16
    assert len(set(everything)) == 16

    f = predictors.predictorFromFunction(lambda x1, x2: x1 * x2 - 0.5)
    assert predictors.decisionRepresentation(f) == Representation((1, 0, 0, 1))


def testIsTrivial():
    assert predictors.isTrivial(predictors.constantPredictor(-0.04))
    assert not predictors.isTrivial(predictors.predictorFromFunction(lambda x1, x2: 0.06 * x1))


def testPredictorRows():
    f = predictors.predictorFromFunction(lambda x1, x2: x1 + 0.5 * x2)
    assert predictors.predictorRows(f) == [[-1, -1, -1.5], [-1, 1, -0.5], [1, -1, 0.5], [1, 1, 1.5]]


@settings(max_examples=50, deadline=None)
@given(
    scores=scoreTables,
    rawWeights=st.lists(st.floats(min_value=0.01, max_value=1), min_size=4, max_size=4),
    loss=st.sampled_from(list(LossKind)),
)
def testRiskIsLinearInTheMixture(scores, rawWeights, loss):
    envs = makeEnvironmentSet(Dgp.ANTICAUSAL).trainEnvs
    weights = np.array(rawWeights) / sum(rawWeights)
    f = TabularPredictor(np.array(scores))

    pooled = predictors.risk(f, mixture(envs, weights), loss)
    assert abs(pooled - sum(w * predictors.risk(f, env, loss) for w, env in zip(weights, envs))) < 1e-12


@settings(max_examples=50, deadline=None)
@given(first=scoreTables, second=scoreTables)
def testLogisticRiskIsMidpointConvex(first, second):
    env = makeEnvironmentSet(Dgp.CONFDESC).trainEnvs[1]
    f, g = np.array(first), np.array(second)
    midpoint = TabularPredictor((f + g) / 2)

    bound = (
        predictors.risk(TabularPredictor(f), env, LossKind.LOGISTIC)
        + predictors.risk(TabularPredictor(g), env, LossKind.LOGISTIC)
    ) / 2
    assert predictors.risk(midpoint, env, LossKind.LOGISTIC) <= bound + 1e-12
