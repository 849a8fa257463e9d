import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
import config
import invarianceAudit
from environments import OBSERVED, makeEnvironmentSet
from errors import ConfigurationError, DegenerateError
from models import Dgp, DiKind, DiscreteJoint, LossKind
import predictors
from predictors import constantRepresentation, featureRepresentation, predictorFromFunction

antiCausal = makeEnvironmentSet(Dgp.ANTICAUSAL)
descendant = makeEnvironmentSet(Dgp.CONFDESC)
outcome = makeEnvironmentSet(Dgp.CONFOUTCOME)
p0 = [0.5, 0.5]
x1 = featureRepresentation("X1")


def testCfInvariance():
    x1Only = predictorFromFunction(lambda a, b: 1.1 * a)
    leaning = predictorFromFunction(lambda a, b: a + 0.2 * b)

    assert invarianceAudit.cfInvariant(x1Only, antiCausal)
    assert invarianceAudit.spuriousGap(x1Only, antiCausal.attribution) == 0.0
    assert not invarianceAudit.cfInvariant(leaning, antiCausal)
    assert invarianceAudit.spuriousGap(leaning, antiCausal.attribution) == pytest.approx(0.4)
    # a looser tolerance accepts it
    assert invarianceAudit.cfInvariant(leaning, antiCausal, tol=0.5)


def testCfInvarianceNeedsAttribution():
    envSet = makeEnvironmentSet(Dgp.ANTICAUSAL)
    envSet.attribution = None

    with pytest.raises(ConfigurationError):
        invarianceAudit.cfInvariant(predictorFromFunction(lambda a, b: a), envSet)


def testCiSignatureAtReferenceParameters():
    for envSet in [antiCausal, outcome, descendant]:
        signature = invarianceAudit.ciSignature(envSet)
        expected = invarianceAudit.expectedSignature[envSet.subtype]

        assert [kind for kind, holds in signature.items() if holds] == [expected]
        assert invarianceAudit.signatureMatchesSubtype(envSet)


gammaLevels = [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95]


@settings(max_examples=50, deadline=None)
@given(
    alpha=st.floats(min_value=0.1, max_value=0.35),
    betas=st.lists(st.floats(min_value=0.05, max_value=0.95), min_size=5, max_size=5),
    gammas=st.permutations(gammaLevels),
    dgp=st.sampled_from([Dgp.ANTICAUSAL, Dgp.CONFOUTCOME, Dgp.CONFDESC]),
)
def testCiSignatureOnRandomDomains(alpha, betas, gammas, dgp):
    envSet = makeEnvironmentSet(dgp, alpha, betas[:4], gammas[:4], betas[4], gammas[4])
    assert invarianceAudit.signatureMatchesSubtype(envSet)


def testOptimalHeads():
    env = descendant.trainEnvs[0]
    squared = invarianceAudit.optimalHeads(x1, env, LossKind.SQUARED)
    logistic = invarianceAudit.optimalHeads(x1, env, LossKind.LOGISTIC)

    # Y = X1 flipped with probability alpha
    assert squared[0] == pytest.approx(-0.5, abs=1e-12)
    assert squared[1] == pytest.approx(0.5, abs=1e-12)
    assert logistic[1] == pytest.approx(np.log(3), abs=1e-12)


def testOptimalHeadsOnEmptyAndPureCells():
    table = np.zeros((2, 2, 2))
    # X1 = -1 never happens, X1 = +1 always has Y = +1
    table[1, :, 1] = 0.5
    heads = invarianceAudit.optimalHeads(x1, DiscreteJoint(OBSERVED, table), LossKind.LOGISTIC)

    assert heads[0] is None
    assert heads[1] == np.inf


def testMembership():
    # sufficiency holds for X1 on the confounded-descendant set
    assert invarianceAudit.irmMembership(x1, descendant.trainEnvs, LossKind.LOGISTIC)
    assert not invarianceAudit.girmMembership(x1, descendant.trainEnvs, LossKind.LOGISTIC, p0)

    # the conditional law holds for X1 on the anti-causal set
    assert not invarianceAudit.irmMembership(x1, antiCausal.trainEnvs, LossKind.SQUARED)
    assert invarianceAudit.girmMembership(x1, antiCausal.trainEnvs, LossKind.SQUARED, p0)

    # the constant representation is always in the g-IRM set
    assert invarianceAudit.girmMembership(constantRepresentation(), antiCausal.trainEnvs, LossKind.LOGISTIC, p0)

    with pytest.raises(ConfigurationError):
        invarianceAudit.irmMembership(x1, descendant.trainEnvs[:1], LossKind.LOGISTIC)


def testMembershipExcludesEmptyCells():
    full = np.full((2, 2, 2), 0.125)
    partial = np.zeros((2, 2, 2))
    partial[1] = 0.25

    detail = invarianceAudit.irmMembershipDetail(
        x1, [DiscreteJoint(OBSERVED, full), DiscreteJoint(OBSERVED, partial)], LossKind.SQUARED
    )
    assert detail.member
    assert detail.excludedCodes == [0]


def testGOfGamma():
    alpha = config.defaultAlpha

    assert invarianceAudit.gOfGamma(0.5, alpha) == pytest.approx(0.75, abs=1e-12)
    assert invarianceAudit.gOfGamma(0.0, alpha) == pytest.approx(0.5, abs=1e-12)
    assert invarianceAudit.gOfGamma(1.0, alpha) == pytest.approx(0.5, abs=1e-12)

    for gamma in invarianceAudit.gammaGrid():
        assert abs(invarianceAudit.gOfGamma(gamma, alpha) - invarianceAudit.gOfGammaBruteForce(gamma, alpha)) < 1e-12

    g = invarianceAudit.gOfGamma
    assert 0.5 < g(0.9, alpha) < g(0.7, alpha) < 0.75
    assert g(0.9, alpha) == pytest.approx(g(0.1, alpha), abs=1e-12)
    assert g(0.7, alpha) == pytest.approx(g(0.3, alpha), abs=1e-12)

    with pytest.raises(DegenerateError):
        invarianceAudit.gOfGamma(1.0, 1.0)


def testGammaGrid():
    grid = invarianceAudit.gammaGrid()
    assert len(grid) == 21
    assert grid[0] == 0.0 and grid[10] == 0.5 and grid[-1] == 1.0

    with pytest.raises(ConfigurationError):
        invarianceAudit.gammaGrid(0.0)
    with pytest.raises(ConfigurationError):
        invarianceAudit.gammaGrid(1.5)


def testBruteForceColumnMarksZeroLabelMass():
    column = invarianceAudit.gOfGammaBruteForceColumn([0.0, 0.5, 1.0], 0.0)
    assert column[0] is None and column[2] is None
    assert column[1] == pytest.approx(1.0, abs=1e-12)

    # the closed form is still defined there
    assert invarianceAudit.gOfGamma(0.0, 0.0) == pytest.approx(0.5, abs=1e-12)


def testReweightingProperties():
    properties = invarianceAudit.reweightingProperties(config.defaultAlpha)
    assert all(properties.values())

    # above one half the centre is a minimum instead
    assert not invarianceAudit.reweightingProperties(0.75)["increasingOnLowerHalf"]


def testSweepRepresentations():
    rows = invarianceAudit.sweepRepresentations(descendant, DiKind.SUFFICIENCY, LossKind.LOGISTIC, p0)
    assert len(rows) == 16
    assert not invarianceAudit.membershipCounterexamples(rows, girm=False)

    byCodes = {tuple(row.codes): row for row in rows}
    assert byCodes[x1.codes].diPass and byCodes[x1.codes].cfInvariant
    # the label law moves with gamma, so a constant code is not sufficient
    assert not byCodes[(0, 0, 0, 0)].diPass
    assert not invarianceAudit.diPassingNotCfInvariant(rows)

    rows = invarianceAudit.sweepRepresentations(antiCausal, DiKind.CONDITIONAL, LossKind.LOGISTIC, p0)
    assert not invarianceAudit.membershipCounterexamples(rows, girm=True)
    byCodes = {tuple(row.codes): row for row in rows}
    assert byCodes[(0, 0, 0, 0)].diPass
    assert not invarianceAudit.diPassingNotCfInvariant(rows)


def testAuditPredictor():
    f = predictorFromFunction(lambda a, b: np.log(3) * a)
    report = invarianceAudit.auditPredictor(f, antiCausal, LossKind.LOGISTIC, p0)

    assert report.cfInvariant
    assert not report.trivial
    assert report.girmMember and not report.irmMember
    assert report.diDeviations["conditional"] < 1e-9
    assert report.testAccuracy == pytest.approx(0.75, abs=1e-12)
    assert report.trainAccuracies == pytest.approx([0.75] * 4, abs=1e-12)
    assert len(report.trainRisks) == 4


def testGridOracle():
    oracle = invarianceAudit.gridOracle(antiCausal.trainEnvs, LossKind.LOGISTIC)

    # every score sits on the grid
    assert np.allclose(np.round(oracle.scores / config.gridStep), oracle.scores / config.gridStep)
    assert np.max(np.abs(oracle.scores)) <= config.gridBound
    assert len(invarianceAudit.scoreGrid()) == 121


def testOptimalSignsAreStrict():
    assert invarianceAudit.attainsOptimalSigns(predictorFromFunction(lambda a, b: 1.16 * a))
    # f(-1, .) = 0 predicts +1, which costs accuracy on the test domain
    boundary = predictorFromFunction(lambda a, b: 1.0 if a == 1 else 0.0)
    assert not invarianceAudit.attainsOptimalSigns(boundary)
    assert invarianceAudit.cfInvariant(boundary, antiCausal)
    assert predictors.accuracy(boundary, antiCausal.testEnv) < 0.75
