# exact tables
normalizationTolerance = 1e-12
ciTolerance = 1e-9
ciFailThreshold = 1e-2
headTolerance = 1e-6

# reference two-bit environment sets: 4 training domains, 1 test domain
defaultAlpha = 0.25
defaultBetas = [0.1, 0.2, 0.15, 0.05]
defaultGammas = [0.9, 0.1, 0.7, 0.3]
defaultBetaTest = 0.9
defaultGammaTest = 0.5

# training defaults
defaultLearningRate = 0.1
defaultMaxIters = 50000
defaultGradTolerance = 1e-8
defaultPenaltyWeight = 1e4
defaultPenaltyAnnealIters = 500
defaultReferenceLabelDist = [0.5, 0.5]  # P0(y=-1), P0(y=+1)

# newton refinement
armijoConstant = 1e-4
minStepSize = 1e-12
initialDamping = 1e-8

# audits
cfTolerance = 0.1
trivialityThreshold = 0.05
gridStep = 0.05
gridBound = 3.0
gammaGridStep = 0.05

# output
significantDigits = 6
defaultOutputDir = "data/runs"
experimentsDir = "data/experiments"
