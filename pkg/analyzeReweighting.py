from tabulate import tabulate
import config
from invarianceAudit import gammaGrid, gOfGamma, gOfGammaBruteForceColumn, reweightingProperties
from utils import toSignificant, writeCsv


def analyzeReweightingCmd(
    alpha: float = config.defaultAlpha,
    gammaStep: float = config.gammaGridStep,
    out: str = "data/runs/reweighting.csv",
) -> int:
    """
    g(gamma) = Q(X1 = Y) on the reweighted confounded-descendant domain, as a plot-ready table;
    the bruteForce cell is left empty where a label has no mass
    """
    gammas = gammaGrid(gammaStep)
    bruteForce = gOfGammaBruteForceColumn(gammas, alpha)
    rows = [[gamma, gOfGamma(gamma, alpha), value] for gamma, value in zip(gammas, bruteForce)]
    writeCsv(out, ["gamma", "g", "bruteForce"], rows)

    print(
        tabulate(
            [[toSignificant(v) if v is not None else "degenerate" for v in row] for row in rows],
            headers=["gamma", "g", "brute force"],
        )
    )
    print(f"Wrote {len(rows)} rows to {out}")

    degenerate = [gamma for gamma, value in zip(gammas, bruteForce) if value is None]
    if degenerate:
        print(f"reweighting undefined (zero label mass) at gamma = {', '.join(toSignificant(g) for g in degenerate)}")

    properties = reweightingProperties(alpha, gammas)
    for name, holds in properties.items():
        print(f"{name}: {'pass' if holds else 'FAIL'}")

    return 0 if all(properties.values()) else 1
