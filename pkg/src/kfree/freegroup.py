"""Finitely generated subgroups of free groups via Stallings foldings.

Words are plain strings: a lowercase letter is a generator and the matching
uppercase letter its inverse, so ``"abA"`` is ``a b a^-1``.

A :class:`SubgroupGraph` is a folded core graph with a basepoint.  Its
adjacency is stored per vertex as a dict keyed by *signed* letters, so an
edge ``u --a--> v`` appears as ``adj[u]["a"] == v`` and ``adj[v]["A"] == u``.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .exceptions import NotConnectedError, SubsetCapError

Word = str

SUBSET_CAP = 16


def inverse_word(w: Word) -> Word:
    return w[::-1].swapcase()


def reduce_word(w: Word) -> Word:
    out: list[str] = []
    for x in w:
        if out and out[-1] == x.swapcase():
            out.pop()
        else:
            out.append(x)
    return "".join(out)


def is_reduced(w: Word) -> bool:
    return all(w[i] != w[i + 1].swapcase() for i in range(len(w) - 1))


def multiply(*words: Word) -> Word:
    return reduce_word("".join(words))


def conjugate_word(g: Word, w: Word) -> Word:
    """Reduced form of ``g w g^-1``."""
    return reduce_word(g + w + inverse_word(g))


def _word_key(w: Word):
    return (len(w), [(x.lower(), x.isupper()) for x in w])


def canonical_generator(w: Word) -> Word:
    """Preferred generator of the cyclic subgroup <w>: w or its inverse."""
    w = reduce_word(w)
    return min(w, inverse_word(w), key=_word_key)


def is_proper_power(w: Word) -> bool:
    """True if the reduced word ``w`` equals ``u^n`` for some ``n >= 2``."""
    w = reduce_word(w)
    n = len(w)
    # peel off the conjugating prefix so that the core is cyclically reduced
    i = 0
    while i < n - 1 - i and w[i] == w[n - 1 - i].swapcase():
        i += 1
    core = w[i:n - i]
    m = len(core)
    for d in range(1, m // 2 + 1):
        if m % d == 0 and core[:d] * (m // d) == core:
            return True
    return False


def letters_of(words: Iterable[Word]) -> list[str]:
    return sorted({x.lower() for w in words for x in w})


def _signed_order(x: str):
    return (x.lower(), x.isupper())


class _Folder:
    """Union-find based folding of a labeled graph, kept folded at all times."""

    __slots__ = ("adj", "parent")

    def __init__(self):
        self.adj: list[dict] = [{}]
        self.parent: list[int] = [0]

    def copy(self) -> "_Folder":
        f = _Folder.__new__(_Folder)
        f.adj = [dict(d) for d in self.adj]
        f.parent = list(self.parent)
        return f

    def find(self, v: int) -> int:
        parent = self.parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def new_vertex(self) -> int:
        self.adj.append({})
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def add_edge(self, u: int, x: str, w: int) -> None:
        queue = [(u, x, w)]
        adj, find = self.adj, self.find
        while queue:
            u, x, w = queue.pop()
            u, w = find(u), find(w)
            y = x.swapcase()
            t = adj[u].get(x)
            if t is not None:
                t = find(t)
                if t != w:
                    self._merge(t, w, queue)
                continue
            s = adj[w].get(y)
            if s is not None:
                s = find(s)
                if s != u:
                    self._merge(s, u, queue)
                continue
            adj[u][x] = w
            adj[w][y] = u

    def identify(self, u: int, w: int) -> None:
        queue: list = []
        self._merge(self.find(u), self.find(w), queue)
        while queue:
            a, x, b = queue.pop()
            self.add_edge(a, x, b)

    def _merge(self, a: int, b: int, queue: list) -> None:
        if a == b:
            return
        adj = self.adj
        if len(adj[a]) < len(adj[b]) or (len(adj[a]) == len(adj[b]) and b < a):
            a, b = b, a
        # b is absorbed into a; keep the basepoint 0 as a root
        if b == 0:
            a, b = b, a
        self.parent[b] = a
        moved = adj[b]
        adj[b] = {}
        for x, t in moved.items():
            if t != b:
                back = adj[t]
                y = x.swapcase()
                if back.get(y) == b:
                    del back[y]
                queue.append((a, x, t))
            else:
                queue.append((a, x, a))

    def add_loop(self, w: Word) -> None:
        """Insert a reduced word as a based loop, keeping the graph folded."""
        n = len(w)
        if n == 0:
            return
        adj = self.adj
        v, i = 0, 0
        while i < n:
            nx = adj[v].get(w[i])
            if nx is None:
                break
            v, i = nx, i + 1
        if i == n:
            if v != 0:
                self.identify(v, 0)
            return
        u, j = 0, n
        while j > i:
            nx = adj[u].get(w[j - 1].swapcase())
            if nx is None:
                break
            u, j = nx, j - 1
        if j == i:
            self.identify(v, u)
            return
        # a new path that starts and ends at one vertex must not begin and
        # end with cancelling letters there; grow a stem first
        while v == u and j - i >= 2 and w[i] == w[j - 1].swapcase():
            nv = self.new_vertex()
            adj[v][w[i]] = nv
            adj[nv][w[i].swapcase()] = v
            v = u = nv
            i, j = i + 1, j - 1
        for x in w[i:j - 1]:
            nv = self.new_vertex()
            adj[v][x] = nv
            adj[nv][x.swapcase()] = v
            v = nv
        x = w[j - 1]
        adj[v][x] = u
        adj[u][x.swapcase()] = v

    def rank(self) -> int:
        # assumes every root vertex is reachable from the basepoint
        roots = 0
        edges = 0
        for v, d in enumerate(self.adj):
            if self.parent[v] == v:
                roots += 1
                edges += len(d)
        return edges // 2 - roots + 1


def rank_of_words(words: Iterable[Word]) -> int:
    """Rank of the subgroup generated by ``words`` (no graph object built)."""
    f = _Folder()
    for w in words:
        f.add_loop(reduce_word(w))
    return f.rank()


@dataclass(frozen=True)
class SubgroupGraph:
    """Folded core graph; vertices are ``0..n-1`` with basepoint ``0``."""

    n_vertices: int
    edges: tuple  # sorted (u, letter, v) with lowercase letters
    adj: tuple = field(compare=False, repr=False)

    @classmethod
    def _from_folder(cls, f: _Folder) -> "SubgroupGraph":
        adj = {v: dict(d) for v, d in enumerate(f.adj) if f.parent[v] == v}
        _trim(adj)
        return cls._from_adj(adj)

    @classmethod
    def _from_adj(cls, adj: dict) -> "SubgroupGraph":
        # BFS relabelling from the basepoint with ordered signed letters
        order = {0: 0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for x in sorted(adj[v], key=_signed_order):
                t = adj[v][x]
                if t not in order:
                    order[t] = len(order)
                    queue.append(t)
        new_adj = [dict() for _ in order]
        edges = []
        for v, i in order.items():
            for x, t in adj[v].items():
                new_adj[i][x] = order[t]
                if x.islower():
                    edges.append((i, x, order[t]))
        return cls(len(order), tuple(sorted(edges)), tuple(new_adj))

    @property
    def rank(self) -> int:
        return len(self.edges) - self.n_vertices + 1

    def canonical_form(self) -> tuple:
        return (self.n_vertices, self.edges)

    def is_folded(self) -> bool:
        seen = set()
        for u, x, v in self.edges:
            for key in ((u, x), (v, x.upper())):
                if key in seen:
                    return False
                seen.add(key)
        return True

    def is_core(self) -> bool:
        return all(len(self.adj[v]) >= 2 for v in range(1, self.n_vertices))

    def reads(self, w: Word) -> Optional[int]:
        """End vertex of the path spelling ``w`` from the basepoint, if any."""
        v = 0
        for x in reduce_word(w):
            v = self.adj[v].get(x)
            if v is None:
                return None
        return v

    def contains(self, w: Word) -> bool:
        return self.reads(w) == 0

    def _folder(self) -> _Folder:
        f = _Folder()
        f.adj = [dict(d) for d in self.adj] or [{}]
        f.parent = list(range(len(f.adj)))
        return f

    def to_text(self) -> str:
        """Adjacency text format: a header line then one ``u letter v`` line per edge."""
        lines = [f"basepoint 0 vertices {self.n_vertices} edges {len(self.edges)}"]
        lines += [f"{u} {x} {v}" for u, x, v in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SubgroupGraph":
        lines = [ln.split() for ln in text.strip().splitlines()]
        header = lines[0]
        n = int(header[header.index("vertices") + 1])
        f = _Folder()
        for _ in range(n - 1):
            f.new_vertex()
        for u, x, v in lines[1:]:
            f.add_edge(int(u), x, int(v))
        return cls._from_folder(f)


def _trim(adj: dict) -> None:
    stack = [v for v in adj if v != 0 and len(adj[v]) <= 1]
    while stack:
        v = stack.pop()
        if v not in adj or len(adj[v]) > 1:
            continue
        for x, t in adj.pop(v).items():
            if t == v:
                continue
            del adj[t][x.swapcase()]
            if t != 0 and len(adj[t]) <= 1:
                stack.append(t)


def subgroup_from_words(words: Iterable[Word]) -> SubgroupGraph:
    f = _Folder()
    for w in words:
        f.add_loop(reduce_word(w))
    return SubgroupGraph._from_folder(f)


def fold_edges(edges: Sequence[tuple], n_vertices: int) -> SubgroupGraph:
    """Fold an arbitrary labeled graph (edges ``(u, letter, v)``) based at 0."""
    f = _Folder()
    for _ in range(n_vertices - 1):
        f.new_vertex()
    for u, x, v in edges:
        f.add_edge(u, x, v)
    root = f.find(0)
    # keep only the component of the basepoint
    adj = {}
    stack = [root]
    seen = {root}
    while stack:
        v = stack.pop()
        adj[v] = {x: f.find(t) for x, t in f.adj[v].items()}
        for t in adj[v].values():
            if t not in seen:
                seen.add(t)
                stack.append(t)
    if root != 0:
        relabel = {root: 0, 0: root} if 0 in adj else {root: 0}
        adj = {relabel.get(v, v): {x: relabel.get(t, t) for x, t in d.items()} for v, d in adj.items()}
    _trim(adj)
    return SubgroupGraph._from_adj(adj)


def rank(g: SubgroupGraph) -> int:
    return g.rank


def join(g1: SubgroupGraph, g2: SubgroupGraph) -> SubgroupGraph:
    """Core graph of the subgroup generated by both arguments."""
    f = g1._folder()
    offset = len(f.adj)
    for _ in range(g2.n_vertices):
        f.new_vertex()
    f.identify(0, offset)
    for u, x, v in g2.edges:
        f.add_edge(u + offset, x, v + offset)
    return SubgroupGraph._from_folder(f)


def intersect(g1: SubgroupGraph, g2: SubgroupGraph) -> SubgroupGraph:
    """Core of the basepoint component of the fiber product."""
    index = {(0, 0): 0}
    adj: dict = {0: {}}
    queue = deque([(0, 0)])
    while queue:
        pair = queue.popleft()
        u, v = pair
        i = index[pair]
        for x, s in g1.adj[u].items():
            t = g2.adj[v].get(x)
            if t is None:
                continue
            nxt = (s, t)
            if nxt not in index:
                index[nxt] = len(index)
                adj[index[nxt]] = {}
                queue.append(nxt)
            adj[i][x] = index[nxt]
    _trim(adj)
    return SubgroupGraph._from_adj(adj)


def _dedupe_generators(words: Iterable[Word]) -> list[Word]:
    seen = []
    for w in words:
        c = canonical_generator(w)
        if c and c not in seen:
            seen.append(c)
    return seen


@dataclass(frozen=True)
class InternalRank:
    value: int
    witness: tuple


def internal_rank(gens: Iterable[Word], cap: int = SUBSET_CAP) -> InternalRank:
    """Maximum of rank<T> over subsets T of ``gens``, with a smallest maximizing T.

    The empty set has internal rank 0.  Words and their inverses name the same
    cyclic subgroup and are identified; trivial words are dropped.
    """
    words = _dedupe_generators(gens)
    if len(words) > cap:
        raise SubsetCapError(f"{len(words)} generators exceed the subset cap {cap}")
    return _internal_rank_cached(tuple(words))


@lru_cache(maxsize=65536)
def _internal_rank_cached(words: tuple) -> InternalRank:
    n = len(words)
    if n == 0:
        return InternalRank(0, ())
    best_rank, best_mask = 0, 0
    folders: dict[int, _Folder] = {0: _Folder()}
    ranks = {0: 0}
    # each mask extends the mask without its highest bit
    for mask in range(1, 1 << n):
        top = mask.bit_length() - 1
        prev = mask & ~(1 << top)
        f = folders[prev].copy()
        f.add_loop(words[top])
        r = f.rank()
        ranks[mask] = r
        if top < n - 1:
            folders[mask] = f
        if r > best_rank or (r == best_rank and best_rank and bin(mask).count("1") < bin(best_mask).count("1")):
            best_rank, best_mask = r, mask
    witness = tuple(words[i] for i in range(n) if best_mask >> i & 1)
    return InternalRank(best_rank, witness)


# --------------------------------------------------------------------------
# The inductive argument for the local rank of a connected constant-IR set


@dataclass
class RankLemmaStep:
    index: int
    simplex: frozenset
    anchor: Optional[int]
    case: str  # base | face-of-earlier | extends-earlier
    partial_ranks: tuple  # ranks of the successive joins in the extends case
    rank: int


@dataclass
class RankLemmaRun:
    r: int
    passed: bool
    order: list
    trace: list
    final_rank: int
    failed_step: Optional[int] = None
    hypothesis_violations: list = field(default_factory=list)


def face_ordering(simplices: Sequence[frozenset], start: int = 0, strategy: str = "bfs") -> list[tuple[int, Optional[int]]]:
    """Order simplices so each one is a proper face or coface of an earlier one.

    Returns ``(position, anchor_position)`` pairs in visiting order.
    """
    n = len(simplices)
    if n == 0:
        return []
    nbrs = [[j for j in range(n) if j != i and (simplices[i] < simplices[j] or simplices[j] < simplices[i])]
            for i in range(n)]
    order = [(start, None)]
    seen = {start}
    frontier: deque = deque([start])
    while frontier:
        i = frontier.popleft() if strategy == "bfs" else frontier.pop()
        for j in nbrs[i]:
            if j not in seen:
                seen.add(j)
                order.append((j, i))
                frontier.append(j)
    if len(order) != n:
        raise NotConnectedError("not connected as saturated set")
    return order


def rank_lemma_run(
    simplices: Sequence[Iterable],
    labels: dict,
    r: int,
    start: int = 0,
    strategy: str = "bfs",
) -> RankLemmaRun:
    """Replay the induction bounding rank Theta(V_i) by ``r`` along a face ordering.

    ``labels`` maps each vertex to a word generating its cyclic subgroup.
    """
    simplices = [frozenset(s) for s in simplices]
    order = face_ordering(simplices, start, strategy)
    violations = [s for s in simplices if internal_rank(labels[v] for v in s).value != r]

    f = _Folder()
    seen_vertices: set = set()
    trace: list = []
    placed: dict[int, int] = {}
    failed = None
    current = 0
    for step, (pos, anchor_pos) in enumerate(order):
        sigma = simplices[pos]
        placed[pos] = step
        anchor = None if anchor_pos is None else placed[anchor_pos]
        if anchor_pos is None:
            case = "base"
            new = sorted(sigma, key=repr)
        elif sigma < simplices[anchor_pos]:
            case = "face-of-earlier"
            new = []
        else:
            case = "extends-earlier"
            new = sorted(sigma - simplices[anchor_pos], key=repr)
        partial = []
        for v in new:
            if v not in seen_vertices:
                seen_vertices.add(v)
                f.add_loop(reduce_word(labels[v]))
            partial.append(f.rank())
        current = f.rank()
        trace.append(RankLemmaStep(step, sigma, anchor, case, tuple(partial), current))
        if current > r and failed is None:
            failed = step
            break
    return RankLemmaRun(r, failed is None, [p for p, _ in order], trace, current, failed, violations)


def theta_rank(words: Iterable[Word]) -> int:
    return rank_of_words(_dedupe_generators(words))


def subsets(seq: Sequence, min_size: int = 1):
    for k in range(min_size, len(seq) + 1):
        yield from itertools.combinations(seq, k)
