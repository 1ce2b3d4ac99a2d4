"""The bipartite graph of stratum components and its tree test."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .freegroup import canonical_generator, conjugate_word
from .nerve import Complex, Labeling, Strata, internal_rank_of_simplex, proper_faces, theta

TREE = "tree"
DISCONNECTED = "disconnected"
HAS_CYCLE = "has_cycle"


@dataclass
class ComponentGraph:
    """Nodes are ``(r, i)``: the i-th component of the rank-r stratum."""

    lower: int
    components: dict  # node -> SaturatedSet
    edges: set = field(default_factory=set)  # frozenset({node, node})

    @property
    def nodes(self) -> list:
        return sorted(self.components)

    def neighbours(self, node) -> list:
        return sorted(next(iter(e - {node})) for e in self.edges if node in e)

    def is_bipartite(self) -> bool:
        return all(len({n[0] for n in e}) == 2 for e in self.edges)

    def sorted_edges(self) -> list:
        return sorted(tuple(sorted(e)) for e in self.edges)

    def to_edge_list(self) -> str:
        """Edge-list text: node lines ``# node r:i size`` then ``r:i r:j`` per edge."""
        lines = [f"# node {r}:{i} {len(self.components[(r, i)])}" for r, i in self.nodes]
        lines += [f"{a[0]}:{a[1]} {b[0]}:{b[1]}" for a, b in self.sorted_edges()]
        return "\n".join(lines) + "\n"


def build_component_graph(strata: Strata) -> ComponentGraph:
    """Join components of adjacent strata when one contains a face of a simplex of the other."""
    lo, hi = strata.k - 2, strata.k - 1
    components = {}
    where = {}
    for r in (lo, hi):
        for i, comp in enumerate(strata.components.get(r, [])):
            components[(r, i)] = comp
            for s in comp.simplices:
                where[s] = (r, i)
    edges = set()
    for s, node in where.items():
        for f in proper_faces(s):
            other = where.get(f)
            if other is not None and other[0] != node[0]:
                edges.add(frozenset((node, other)))
    return ComponentGraph(lo, components, edges)


@dataclass
class TreeVerdict:
    kind: str
    witness: list
    note: str = ""

    @property
    def is_tree(self) -> bool:
        return self.kind == TREE


def is_tree(g: ComponentGraph) -> TreeVerdict:
    """Tree test with a witness: the components when disconnected, a cycle otherwise."""
    nodes = g.nodes
    if not nodes:
        return TreeVerdict(DISCONNECTED, [], "empty graph")
    adj = {n: g.neighbours(n) for n in nodes}
    comps, seen = [], set()
    for n in nodes:
        if n in seen:
            continue
        comp, queue = [], deque([n])
        seen.add(n)
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        comps.append(sorted(comp))
    cycle = _find_cycle(nodes, adj)
    if cycle:
        return TreeVerdict(HAS_CYCLE, cycle)
    if len(comps) > 1:
        return TreeVerdict(DISCONNECTED, comps)
    return TreeVerdict(TREE, [])


def _find_cycle(nodes, adj) -> list:
    parent: dict = {}
    for root in nodes:
        if root in parent:
            continue
        parent[root] = None
        stack = [(root, iter(adj[root]))]
        while stack:
            u, it = stack[-1]
            v = next(it, None)
            if v is None:
                stack.pop()
                continue
            if v == parent[u]:
                continue
            if v in parent:
                # back edge u -> v closes a cycle along the tree path
                path = [u]
                while path[-1] != v:
                    path.append(parent[path[-1]])
                return path
            parent[v] = u
            stack.append((v, iter(adj[v])))
    return []


# --------------------------------------------------------------------------
# Partial group action on components


VertexMap = Callable[[object], Optional[object]]


@dataclass
class ActionReport:
    mapping: dict  # node -> node
    undefined: list
    coverage: float
    rank_pairs: dict  # node -> (rank Theta(W), rank Theta(gW))
    ir_preserved: bool
    stratum_preserved: bool
    edges_preserved: bool
    naturality: bool
    problems: list = field(default_factory=list)


def action_on_components(g: ComponentGraph, cx: Complex, labeling: Labeling, vertex_map: VertexMap) -> ActionReport:
    """Transport components along a simplicial vertex map, where it is defined.

    A component maps when every one of its simplices maps to a simplex of the
    complex; it must land in a single component of the same stratum.
    """
    where = {s: node for node, comp in g.components.items() for s in comp.simplices}
    mapping, undefined, problems, ranks = {}, [], [], {}
    ir_ok = stratum_ok = nat_ok = True
    for node in g.nodes:
        comp = g.components[node]
        images = []
        for s in comp.sorted_simplices():
            vs = [vertex_map(v) for v in s]
            if any(v is None for v in vs) or frozenset(vs) not in cx.simplices:
                images = None
                break
            images.append((s, frozenset(vs)))
        if images is None:
            undefined.append(node)
            continue
        for s, t in images:
            if internal_rank_of_simplex(None, labeling, s) != internal_rank_of_simplex(None, labeling, t):
                ir_ok = False
                problems.append(("internal-rank", node, sorted(s, key=str)))
        targets = {where.get(t) for _, t in images}
        if len(targets) != 1 or None in targets:
            stratum_ok = False
            problems.append(("stratum", node, sorted(targets, key=str)))
            continue
        target = targets.pop()
        if target[0] != node[0]:
            stratum_ok = False
            problems.append(("stratum", node, target))
        mapping[node] = target
        before = theta(None, labeling, comp).rank()
        after = theta(None, labeling, [t for _, t in images]).rank()
        ranks[node] = (before, after)
        if before != after:
            nat_ok = False
            problems.append(("naturality", node, (before, after)))
    edges_ok = True
    for e in g.edges:
        a, b = sorted(e)
        if a in mapping and b in mapping and frozenset((mapping[a], mapping[b])) not in g.edges:
            edges_ok = False
            problems.append(("edge", (a, b), (mapping[a], mapping[b])))
    total = len(g.components)
    coverage = len(mapping) / total if total else 1.0
    return ActionReport(mapping, undefined, coverage, ranks, ir_ok, stratum_ok, edges_ok, nat_ok, problems)


def word_conjugation_map(labeling: Labeling, gamma: str) -> VertexMap:
    """Vertex map induced by conjugating free-group labels by the word ``gamma``.

    The image of a vertex is the vertex carrying the conjugated label, if any.
    """
    index = {}
    for v in sorted(labeling, key=str):
        index.setdefault(canonical_generator(labeling.word(v)), v)

    def f(v):
        return index.get(canonical_generator(conjugate_word(gamma, labeling.word(v))))

    return f


def table_conjugation_map(labeling: Labeling, table, gamma) -> VertexMap:
    """Vertex map induced by conjugating cyclic labels by an element of a truncated group."""
    from .exceptions import OutOfTruncationError
    from .group import conjugate_label

    index = {}
    for v in sorted(labeling, key=str):
        index.setdefault(labeling.word(v), v)

    def f(v):
        lab = labeling[v]
        if isinstance(lab, str):
            lab = table.label_for_word(lab)
        try:
            image = conjugate_label(table, gamma, lab)
        except OutOfTruncationError:
            return None
        return index.get(image.word)

    return f

