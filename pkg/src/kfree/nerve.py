"""Finite simplicial complexes, nerves of indexed covers and labeled strata.

Simplices are frozensets of hashable, sortable vertex ids.  A complex stores
every simplex (the family is downward closed), so face queries are set
lookups.  Vertex labels are words naming cyclic subgroups of a free group, or
objects with a ``word`` attribute.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Optional, Sequence

from .exceptions import ComplexError, DimensionCapError, UncertifiedNerveError
from .feasibility import EMPTY, FEASIBLE, UNDECIDED, Cylinder, Region, cylinders_feasible
from .freegroup import _dedupe_generators, internal_rank, rank_of_words

DIMENSION_CAP = 8
HOMOLOGY_CAP = 200_000

Simplex = frozenset


def _vkey(v):
    return (0, v, "") if isinstance(v, int) else (1, 0, str(v))


def sorted_vertices(s: Iterable) -> list:
    return sorted(s, key=_vkey)


def _skey(s):
    return (len(s), [_vkey(v) for v in sorted_vertices(s)])


def proper_faces(s: Simplex):
    """Nonempty proper faces of ``s``."""
    items = sorted_vertices(s)
    for k in range(1, len(items)):
        for c in itertools.combinations(items, k):
            yield frozenset(c)


def faces(s: Simplex):
    yield from proper_faces(s)
    yield frozenset(s)


class Complex:
    """A finite abstract simplicial complex."""

    def __init__(self, simplices: Iterable[Iterable] = (), *, max_dim: int = DIMENSION_CAP, check: bool = True):
        simps = {frozenset(s) for s in simplices}
        if frozenset() in simps:
            simps.discard(frozenset())
        self.simplices: frozenset = frozenset(simps)
        self.max_dim = max_dim
        if check:
            self.validate()

    @classmethod
    def from_maximal(cls, maximal: Iterable[Iterable], *, max_dim: int = DIMENSION_CAP) -> "Complex":
        out = set()
        for m in maximal:
            m = frozenset(m)
            if len(m) - 1 > max_dim:
                raise DimensionCapError(f"simplex of dimension {len(m) - 1} exceeds the cap {max_dim}")
            out.update(faces(m))
        return cls(out, max_dim=max_dim, check=False)

    def validate(self) -> None:
        for s in self.simplices:
            if len(s) - 1 > self.max_dim:
                raise DimensionCapError(f"simplex of dimension {len(s) - 1} exceeds the cap {self.max_dim}")
            for x in s:
                if frozenset(s - {x}) and frozenset(s - {x}) not in self.simplices:
                    raise ComplexError(f"not downward closed: {sorted_vertices(s)} lacks a face")

    def is_downward_closed(self) -> bool:
        try:
            self.validate()
        except ComplexError:
            return False
        return True

    # -- queries ---------------------------------------------------------

    def __contains__(self, s) -> bool:
        return frozenset(s) in self.simplices

    def __len__(self) -> int:
        return len(self.simplices)

    def __iter__(self):
        return iter(self.sorted_simplices())

    def __eq__(self, other) -> bool:
        return isinstance(other, Complex) and self.simplices == other.simplices

    def __hash__(self):
        return hash(self.simplices)

    def __repr__(self) -> str:
        return f"Complex(vertices={len(self.vertices)}, simplices={len(self)}, dim={self.dim})"

    @property
    def vertices(self) -> list:
        return sorted_vertices({v for s in self.simplices if len(s) == 1 for v in s})

    @property
    def dim(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)

    def sorted_simplices(self) -> list:
        return sorted(self.simplices, key=_skey)

    def of_dim(self, d: int) -> list:
        return sorted((s for s in self.simplices if len(s) == d + 1), key=_skey)

    def maximal(self) -> list:
        cofaced = set()
        for s in self.simplices:
            for x in s:
                cofaced.add(s - {x})
        return sorted((s for s in self.simplices if s not in cofaced), key=_skey)

    def f_vector(self) -> list[int]:
        return [len(self.of_dim(d)) for d in range(self.dim + 1)]

    def subcomplex(self, keep: Callable[[Simplex], bool]) -> "Complex":
        return Complex((s for s in self.simplices if keep(s)), max_dim=self.max_dim, check=False)

    # -- text format -------------------------------------------------------

    def to_text(self) -> str:
        """One line per maximal simplex, vertices separated by spaces."""
        lines = ["# maximal simplices"]
        lines += [" ".join(str(v) for v in sorted_vertices(m)) for m in self.maximal()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, *, max_dim: int = DIMENSION_CAP) -> "Complex":
        maximal = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            maximal.append([int(t) if t.lstrip("-").isdigit() else t for t in line.split()])
        return cls.from_maximal(maximal, max_dim=max_dim)


def link(cx: Complex, sigma: Iterable) -> Complex:
    """Simplices disjoint from ``sigma`` whose union with it is a simplex."""
    sigma = frozenset(sigma)
    if sigma not in cx.simplices:
        raise ComplexError(f"{sorted_vertices(sigma)} is not a simplex of the complex")
    return Complex(
        (s - sigma for s in cx.simplices if sigma < s),
        max_dim=cx.max_dim,
        check=False,
    )


# --------------------------------------------------------------------------
# Labels


class Labeling(dict):
    """Vertex -> label.  ``free`` records whether labels are honest free-group words."""

    def __init__(self, mapping: Mapping = (), free: bool = True):
        super().__init__(mapping)
        self.free = free

    def word(self, v) -> str:
        lab = self[v]
        return getattr(lab, "word", lab)

    def check_total(self, cx: Complex) -> None:
        missing = [v for v in cx.vertices if v not in self]
        if missing:
            raise ComplexError(f"labeling is not total; unlabeled vertices {missing}")


@dataclass(frozen=True)
class Theta:
    """Generators of the subgroup spanned by the labels of a simplex or saturated set."""

    generators: tuple
    exact: bool = True

    def rank(self) -> int:
        return rank_of_words(self.generators)

    def internal_rank(self) -> int:
        return internal_rank(self.generators).value


def _as_simplices(target) -> list:
    if isinstance(target, SaturatedSet):
        return list(target.simplices)
    target = list(target)
    if target and isinstance(target[0], (frozenset, set, tuple, list)):
        return [frozenset(s) for s in target]
    return [frozenset(target)]


def theta(cx: Optional[Complex], labeling: Labeling, target) -> Theta:
    """Label generators of a simplex, or the union over a set of simplices.

    Generators are deduplicated as subgroups.
    """
    simplices = _as_simplices(target)
    if cx is not None:
        for s in simplices:
            if s not in cx.simplices:
                raise ComplexError(f"{sorted_vertices(s)} is not a simplex of the complex")
    verts = sorted_vertices({v for s in simplices for v in s})
    return Theta(tuple(_dedupe_generators(labeling.word(v) for v in verts)), labeling.free)


def internal_rank_of_simplex(cx: Optional[Complex], labeling: Labeling, sigma, *, cross_check: bool = False) -> int:
    th = theta(cx, labeling, sigma)
    value = internal_rank(th.generators).value
    if cross_check:
        other = face_max_rank(labeling, frozenset(sigma))
        if other != value:
            raise AssertionError(f"internal rank {value} disagrees with face maximum {other}")
    return value


def face_max_rank(labeling: Labeling, sigma: Simplex) -> int:
    """max rank Theta(tau) over faces tau of sigma."""
    return max((rank_of_words(_dedupe_generators(labeling.word(v) for v in t)) for t in faces(sigma)), default=0)


def internal_ranks(cx: Complex, labeling: Labeling) -> dict:
    labeling.check_total(cx)
    return {s: internal_rank_of_simplex(None, labeling, s) for s in cx.simplices}


def filtered_subcomplex(cx: Complex, labeling: Labeling, m: int, ranks: Optional[dict] = None) -> Complex:
    """Simplices of internal rank at most ``m``; always a subcomplex."""
    ranks = ranks if ranks is not None else internal_ranks(cx, labeling)
    sub = cx.subcomplex(lambda s: ranks[s] <= m)
    sub.validate()
    return sub


# --------------------------------------------------------------------------
# Saturated sets and strata


@dataclass(frozen=True)
class SaturatedSet:
    """A union of open simplices; not required to contain faces of its members."""

    simplices: frozenset
    r: Optional[int] = None

    def __len__(self) -> int:
        return len(self.simplices)

    def __contains__(self, s) -> bool:
        return frozenset(s) in self.simplices

    @property
    def vertices(self) -> list:
        return sorted_vertices({v for s in self.simplices for v in s})

    def sorted_simplices(self) -> list:
        return sorted(self.simplices, key=_skey)

    def is_subcomplex(self) -> bool:
        return all(f in self.simplices for s in self.simplices for f in proper_faces(s))

    def is_face_connected(self) -> bool:
        return len(face_components(self.simplices)) <= 1


def face_components(simplices: Iterable[Simplex]) -> list[frozenset]:
    """Components of a simplex set under the relation 'is a proper face of'."""
    simps = set(simplices)
    parent = {s: s for s in simps}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s in simps:
        for f in proper_faces(s):
            if f in simps:
                ra, rb = find(s), find(f)
                if ra != rb:
                    parent[ra] = rb
    groups: dict = {}
    for s in simps:
        groups.setdefault(find(s), set()).add(s)
    comps = [frozenset(g) for g in groups.values()]
    comps.sort(key=lambda c: _skey(min(c, key=_skey)))
    return comps


@dataclass
class Strata:
    k: int
    components: dict  # r -> list[SaturatedSet]
    violations: list  # (simplex, internal rank) outside the allowed strata
    ranks: dict = field(repr=False, default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def strata_components(cx: Complex, labeling: Labeling, k: int, ranks: Optional[dict] = None) -> Strata:
    """Face-connected components of the simplices of internal rank k-2 and k-1.

    Simplices of internal rank k or more are reported as violations.
    """
    ranks = ranks if ranks is not None else internal_ranks(cx, labeling)
    comps = {}
    for r in (k - 2, k - 1):
        layer = [s for s in cx.simplices if ranks[s] == r]
        comps[r] = [SaturatedSet(c, r) for c in face_components(layer)]
    bad = sorted(((s, ranks[s]) for s in cx.simplices if ranks[s] > k - 1), key=lambda p: _skey(p[0]))
    return Strata(k, comps, bad, ranks)


# --------------------------------------------------------------------------
# Homology over the field with two elements


def _rank_gf2(rows: list[int]) -> int:
    pivots: dict[int, int] = {}
    rank = 0
    for row in rows:
        while row:
            top = row.bit_length() - 1
            if top in pivots:
                row ^= pivots[top]
            else:
                pivots[top] = row
                rank += 1
                break
    return rank


def boundary_rank(cx: Complex, d: int) -> int:
    """Rank of the boundary map from d-chains to (d-1)-chains."""
    if d <= 0:
        return 0
    lower = {s: i for i, s in enumerate(cx.of_dim(d - 1))}
    rows = []
    for s in cx.of_dim(d):
        row = 0
        for x in s:
            row |= 1 << lower[s - {x}]
        rows.append(row)
    return _rank_gf2(rows)


def betti_z2(cx: Complex, max_degree: int = 2, cap: int = HOMOLOGY_CAP) -> tuple:
    if len(cx) > cap:
        raise ComplexError(f"{len(cx)} simplices exceed the homology cap {cap}")
    counts = [len(cx.of_dim(d)) for d in range(max_degree + 1)]
    ranks = [boundary_rank(cx, d) for d in range(max_degree + 2)]
    return tuple(counts[d] - ranks[d] - ranks[d + 1] for d in range(max_degree + 1))


def homology_z2(cx: Complex, cap: int = HOMOLOGY_CAP) -> tuple[int, int, int]:
    """Betti numbers (b0, b1, b2) with coefficients in the two-element field."""
    return betti_z2(cx, 2, cap)


def looks_contractible(cx: Complex, cap: int = HOMOLOGY_CAP) -> bool:
    """Homology proxy: b0 = 1 and all higher Betti numbers vanish up to the dimension."""
    if not len(cx):
        return False
    b = betti_z2(cx, max(cx.dim, 0), cap)
    return b[0] == 1 and not any(b[1:])


# --------------------------------------------------------------------------
# Nerves


Oracle = Callable[[Sequence[int]], str]


@dataclass
class NerveResult:
    complex: Complex
    labeling: Labeling
    undecided: list
    oracle_calls: int
    verdicts: dict = field(repr=False, default_factory=dict)


def nerve(
    items: Sequence,
    oracle: Oracle,
    *,
    labels: Optional[Sequence] = None,
    max_dim: int = DIMENSION_CAP,
    on_undecided: str = "raise",
    free: bool = True,
) -> NerveResult:
    """Nerve of an indexed family: vertex ``i`` per item, simplex per meeting subfamily.

    ``oracle(indices)`` returns ``feasible``, ``empty`` or ``undecided``.  Items
    are never merged, so equal sets under distinct indices get distinct
    vertices.  Candidates of each dimension are only tested when all their
    facets are present.
    """
    if on_undecided not in ("raise", "exclude"):
        raise ValueError("on_undecided must be 'raise' or 'exclude'")
    n = len(items)
    verdicts: dict = {}
    undecided: list = []
    calls = 0

    def ask(fam: tuple) -> bool:
        nonlocal calls
        calls += 1
        v = oracle(fam)
        v = getattr(v, "verdict", v)
        verdicts[fam] = v
        if v == UNDECIDED:
            if on_undecided == "raise":
                raise UncertifiedNerveError(fam)
            undecided.append(fam)
            return False
        if v not in (FEASIBLE, EMPTY):
            raise ValueError(f"oracle returned {v!r}")
        return v == FEASIBLE

    layer = [(i,) for i in range(n) if ask((i,))]
    simplices = [frozenset(s) for s in layer]
    dim = 0
    while layer:
        present = set(layer)
        nxt = []
        for a, b in itertools.combinations(layer, 2):
            if a[:-1] != b[:-1]:
                continue
            cand = a + (b[-1],)
            if all(cand[:j] + cand[j + 1:] in present for j in range(len(cand))) and ask(cand):
                nxt.append(cand)
        if nxt and dim + 1 > max_dim:
            raise DimensionCapError(
                f"nerve reached dimension {dim + 1}, beyond the cap {max_dim}; expected finite dimension"
            )
        simplices += [frozenset(s) for s in nxt]
        layer = sorted(nxt)
        dim += 1
    lab = labels if labels is not None else items
    labeling = Labeling({i: lab[i] for i in range(n) if (i,) in verdicts and verdicts[(i,)] == FEASIBLE}, free=free)
    return NerveResult(Complex(simplices, max_dim=max_dim, check=False), labeling, undecided, calls, verdicts)


def cylinder_oracle(cylinders: Sequence[Cylinder], region: Optional[Region] = None, **kw) -> Oracle:
    """Intersection oracle over cylinders, optionally restricted to a region."""

    cache: dict = {}

    def oracle(fam):
        fam = tuple(fam)
        if fam not in cache:
            cache[fam] = cylinders_feasible([cylinders[i] for i in fam], region=region, **kw).verdict
        return cache[fam]

    return oracle


def cylinder_nerve(cylinders: Sequence[Cylinder], labels: Optional[Sequence] = None,
                   region: Optional[Region] = None, **kw) -> NerveResult:
    oracle_kw = {k: kw.pop(k) for k in ("eps_witness", "eps_empty") if k in kw}
    return nerve(cylinders, cylinder_oracle(cylinders, region, **oracle_kw),
                 labels=labels if labels is not None else [c.label for c in cylinders], **kw)
