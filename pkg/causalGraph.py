import itertools
import re
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Set, Tuple
import networkx as nx
from alive_progress import alive_bar
from errors import DagError, DagParseError, InvalidQueryError
from models import CausalDag, CisaSubtype, Edge, NodeRole

U, Z, XZ, XZPERP, Y, E = (
    NodeRole.U,
    NodeRole.Z,
    NodeRole.XZ,
    NodeRole.XZPERP,
    NodeRole.Y,
    NodeRole.E,
)
ROLES: List[NodeRole] = [U, Z, XZ, XZPERP, Y, E]
LATENT_FREE_ROLES: List[NodeRole] = [U, Z, XZ, XZPERP, Y]  # everything but E

edgePattern = re.compile(r"^\s*([A-Za-z]+)\s*->\s*([A-Za-z]+)\s*$")


def makeDag(edges: Iterable[Edge]) -> CausalDag:
    edgeSet = frozenset(edges)

    for a, b in edgeSet:
        if a == b:
            raise DagError(f"self loop on {a.value}")
        if b == E:
            raise DagError(f"E cannot have parents ({a.value}->E)")
        if a == E and b != U:
            raise DagError(f"the only edge leaving E is E->U, got E->{b.value}")

    if not nx.is_directed_acyclic_graph(toDiGraph(CausalDag(edgeSet))):
        raise DagError(f"graph has a cycle: {describeEdges(edgeSet)}")

    return CausalDag(edgeSet)


def toDiGraph(dag: CausalDag) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(ROLES)
    graph.add_edges_from(dag.edges)
    return graph


def describeEdges(edges: Iterable[Edge]) -> str:
    return ", ".join(f"{a}->{b}" for a, b in sorted((a.value, b.value) for a, b in edges))


def parseDag(text: str) -> CausalDag:
    edges = []

    for lineNumber, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]

        if not line.strip():
            continue

        match = edgePattern.match(line)
        if not match:
            raise DagParseError(f"expected ROLE->ROLE, got {line.strip()!r}", lineNumber)

        try:
            edges.append((NodeRole(match[1].upper()), NodeRole(match[2].upper())))
        except ValueError:
            raise DagParseError(
                f"unknown role in {line.strip()!r}, roles are {[r.value for r in ROLES]}",
                lineNumber,
            )

    return makeDag(edges)


def loadDag(path: str) -> CausalDag:
    with open(path) as file:
        return parseDag(file.read())


def formatDag(dag: CausalDag) -> str:
    return "".join(f"{a}->{b}\n" for a, b in dag.sortedEdges())


def children(dag: CausalDag, role: NodeRole) -> Set[NodeRole]:
    return {b for a, b in dag.edges if a == role}


def parents(dag: CausalDag, role: NodeRole) -> Set[NodeRole]:
    return {a for a, b in dag.edges if b == role}


def hasDirectedPath(
    dag: CausalDag,
    source: NodeRole,
    target: NodeRole,
    avoiding: FrozenSet[NodeRole] = frozenset(),
) -> bool:
    """
    is there a directed path source ~> target whose intermediate nodes are not in avoiding
    """
    stack = [source]
    seen = {source}

    while stack:
        node = stack.pop()
        for child in children(dag, node):
            if child == target:
                return True
            if child not in seen and child not in avoiding:
                seen.add(child)
                stack.append(child)

    return False


def dSeparated(
    dag: CausalDag,
    a: Iterable[NodeRole],
    b: Iterable[NodeRole],
    cond: Iterable[NodeRole] = (),
) -> bool:
    """
    Bayes-ball reachability: a and b are d-separated given cond iff no active
    trail from a reaches b
    """
    a, b, cond = set(a), set(b), set(cond)

    if a & b or a & cond or b & cond:
        raise InvalidQueryError(
            f"query sets must be disjoint: {sorted(r.value for r in a)}, "
            f"{sorted(r.value for r in b)}, {sorted(r.value for r in cond)}"
        )

    # cond and all of its ancestors
    conditionedAncestors = set()
    toVisit = set(cond)
    while toVisit:
        node = toVisit.pop()
        if node not in conditionedAncestors:
            conditionedAncestors.add(node)
            toVisit.update(parents(dag, node))

    # (node, "up") arrived from a child, (node, "down") arrived from a parent
    queue = deque((node, "up") for node in a)
    visited = set()

    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))

        if node not in cond and node in b:
            return False

        if direction == "up" and node not in cond:
            for parent in parents(dag, node):
                queue.append((parent, "up"))
            for child in children(dag, node):
                queue.append((child, "down"))

        elif direction == "down":
            if node not in cond:
                for child in children(dag, node):
                    queue.append((child, "down"))
            if node in conditionedAncestors:
                # collider with an observed descendant
                for parent in parents(dag, node):
                    queue.append((parent, "up"))

    return True


def verifyCisaConstraints(dag: CausalDag) -> bool:
    """
    CISA constraints from first principles, independent of the templates
    """
    edges = dag.edges

    # Z is a spurious factor: it drives Xz, never Y nor the invariant part
    if (Z, XZ) not in edges or (Z, XZPERP) in edges:
        return False

    # the invariant part is a cause of X and X does not cause Y
    if (XZPERP, XZ) not in edges or (XZ, Y) in edges:
        return False

    # U is exogenous apart from the domain
    if not parents(dag, U) <= {E}:
        return False

    # U does not confound XzPerp and Y
    if (U, Y) in edges and (U, XZPERP) in edges:
        return False

    if hasDirectedPath(dag, Z, Y):
        return False

    # U is a common cause of Z and Y along paths that do not run through each other
    return hasDirectedPath(dag, U, Z, avoiding=frozenset({Y})) and hasDirectedPath(
        dag, U, Y, avoiding=frozenset({Z})
    )


@dataclass(frozen=True)
class Template:
    subtype: CisaSubtype
    required: FrozenSet[Edge]
    optional: FrozenSet[Edge]
    atLeastOne: FrozenSet[Edge] = frozenset()

    def matches(self, dag: CausalDag) -> bool:
        edges = dag.edges
        if not self.required <= edges or not edges <= self.required | self.optional:
            return False
        return not self.atLeastOne or bool(edges & self.atLeastOne)

    def members(self) -> List[CausalDag]:
        optional = sorted(self.optional, key=lambda e: (e[0].value, e[1].value))
        dags = []

        for mask in range(2 ** len(optional)):
            chosen = {edge for i, edge in enumerate(optional) if mask >> i & 1}
            dag = CausalDag(self.required | chosen)
            if self.matches(dag):
                dags.append(dag)

        return dags


baseEdges = frozenset({(Z, XZ), (XZPERP, XZ), (E, U)})
freeEdges = frozenset({(U, XZ), (Y, XZ), (Y, Z), (XZPERP, Z)})

# an absent XzPerp-Y edge is admitted by both the anti-causal and the
# confounded-outcome branch; classification resolves it to the first
TEMPLATES: List[Template] = [
    Template(
        CisaSubtype.ANTI_CAUSAL,
        required=baseEdges | {(U, Y), (U, Z)},
        optional=freeEdges | {(Y, XZPERP)},
    ),
    Template(
        CisaSubtype.CONF_OUTCOME,
        required=baseEdges | {(U, Y), (U, Z)},
        optional=freeEdges | {(XZPERP, Y)},
    ),
    Template(
        CisaSubtype.CONF_DESCENDANT,
        required=baseEdges | {(XZPERP, Y), (U, XZPERP)},
        optional=freeEdges | {(U, Z)},
        atLeastOne=frozenset({(U, Z), (XZPERP, Z)}),
    ),
]


def classifyCisa(dag: CausalDag) -> CisaSubtype:
    # a graph without E->U has no domain shift but the same structure
    withDomain = CausalDag(dag.edges | {(E, U)})

    # TEMPLATES is in subtype ordinal order so the first match wins ties
    for template in TEMPLATES:
        if template.matches(withDomain):
            return template.subtype

    return CisaSubtype.NOT_CISA


def enumerateCisaDags() -> List[Tuple[CausalDag, CisaSubtype]]:
    found: Dict[CausalDag, CisaSubtype] = {}

    for template in TEMPLATES:
        for dag in template.members():
            found.setdefault(dag, template.subtype)

    return sorted(found.items(), key=lambda item: item[0].sortedEdges())


def allAcyclicDags(showProgress: bool = False) -> List[CausalDag]:
    """
    every acyclic edge subset over the five non-E roles, with E->U fixed;
    each acyclic subset respects some topological order, so taking every
    subset of forward pairs of every order covers them all
    """
    found = set()
    orders = list(itertools.permutations(LATENT_FREE_ROLES))

    def collect(order):
        forwardPairs = list(itertools.combinations(order, 2))
        for mask in range(2 ** len(forwardPairs)):
            chosen = [pair for i, pair in enumerate(forwardPairs) if mask >> i & 1]
            found.add(frozenset(chosen) | {(E, U)})

    if showProgress:
        with alive_bar(len(orders), title="acyclic subsets") as aliveBar:
            for order in orders:
                collect(order)
                aliveBar()
    else:
        for order in orders:
            collect(order)

    return [CausalDag(edges) for edges in found]


def bruteForceCisaDags(showProgress: bool = False) -> List[CausalDag]:
    accepted = [dag for dag in allAcyclicDags(showProgress) if verifyCisaConstraints(dag)]
    return sorted(accepted, key=lambda dag: dag.sortedEdges())


def countBySubtype(entries: List[Tuple[CausalDag, CisaSubtype]]) -> Dict[CisaSubtype, int]:
    counts = {subtype: 0 for subtype in CisaSubtype}
    for _, subtype in entries:
        counts[subtype] += 1
    return counts


# example structures of the three families
ANTI_CAUSAL_EXAMPLE = makeDag(
    [(Z, XZ), (U, Z), (U, Y), (Y, XZ), (Y, XZPERP), (XZPERP, XZ), (E, U)]
)
CONF_OUTCOME_EXAMPLE = makeDag(
    [(Z, XZ), (U, Z), (U, Y), (Y, XZ), (XZPERP, Y), (XZPERP, XZ), (E, U)]
)
CONF_DESCENDANT_EXAMPLE = makeDag(
    [(Z, XZ), (XZPERP, XZ), (E, U), (Y, Z), (XZPERP, Y), (U, XZPERP), (U, Z)]
)
