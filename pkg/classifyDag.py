from typing import List, Tuple
from tabulate import tabulate
from causalGraph import (
    bruteForceCisaDags,
    classifyCisa,
    countBySubtype,
    enumerateCisaDags,
    loadDag,
)
from models import CausalDag, CisaSubtype
from utils import safeOpenWrite


def classifyDagCmd(path: str) -> CisaSubtype:
    subtype = classifyCisa(loadDag(path))
    print(subtype.value)
    return subtype


def formatDagLine(dag: CausalDag, subtype: CisaSubtype) -> str:
    edges = ",".join(f"{a}->{b}" for a, b in dag.sortedEdges())
    return f"{edges}\t{subtype.value}\n"


def compareWithOracle(
    entries: List[Tuple[CausalDag, CisaSubtype]], showProgress: bool = True
) -> Tuple[int, int]:
    """
    size of the symmetric difference with the brute-force constraint verifier,
    and the number of DAGs the verifier accepts
    """
    enumerated = {dag.edges for dag, _ in entries}
    accepted = {dag.edges for dag in bruteForceCisaDags(showProgress)}
    return len(enumerated ^ accepted), len(accepted)


def enumerateDagsCmd(out: str, checkOracle: bool = True) -> int:
    entries = enumerateCisaDags()

    with safeOpenWrite(out) as file:
        for dag, subtype in entries:
            file.write(formatDagLine(dag, subtype))

    counts = countBySubtype(entries)
    print(
        tabulate(
            [[subtype.value, count] for subtype, count in counts.items() if count]
            + [["total", len(entries)]],
            headers=["subtype", "dags"],
        )
    )
    print(f"Wrote {len(entries)} DAGs to {out}")

    if not checkOracle:
        return 0

    difference, acceptedCount = compareWithOracle(entries)
    print(f"Brute-force verifier accepts {acceptedCount}, symmetric difference {difference}")

    return 0 if difference == 0 else 1
