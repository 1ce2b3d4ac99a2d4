"""Finite truncations of discrete, purely loxodromic matrix groups.

An :class:`ElementTable` holds every reduced word of length at most ``R`` in
named generators together with its matrix.  Maximal cyclic subgroups are
recognised by shared translation axes; everything computed here is relative
to the word ball and records its radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import geometry as geo
from .exceptions import (
    DiscretenessError,
    IndeterminateClassificationError,
    NotPurelyLoxodromicError,
    OutOfTruncationError,
)
from .freegroup import Word, _word_key, canonical_generator, inverse_word, reduce_word
from .geometry import Geodesic, Isometry, LoxodromicData, Point

AXIS_TOL = 1e-7
MATRIX_TOL = 1e-9
MARGINAL_TOL = 1e-6
LENGTH_TOL = 1e-6


@dataclass(frozen=True)
class GroupSpec:
    generators: tuple  # ((name, Isometry), ...)
    ball_radius: int = 3
    matrix_tolerance: float = MATRIX_TOL

    def __post_init__(self):
        gens = tuple((str(n), g) for n, g in self.generators)
        names = [n for n, _ in gens]
        for n in names:
            if len(n) != 1 or not n.islower() or not n.isalpha():
                raise ValueError(f"generator names must be single lowercase letters, got {n!r}")
        if len(set(names)) != len(names):
            raise ValueError("duplicate generator names")
        if self.ball_radius < 1:
            raise ValueError("ball radius must be at least 1")
        for n, g in gens:
            if geo.classify(g).kind == "identity":
                raise ValueError(f"generator {n} is trivial")
        object.__setattr__(self, "generators", gens)

    @classmethod
    def from_list(cls, gens: Sequence[Isometry], ball_radius: int = 3, **kw) -> "GroupSpec":
        names = "abcdefghijklmnopqrstuvwxyz"
        return cls(tuple(zip(names, gens)), ball_radius, **kw)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.generators]

    @property
    def rank(self) -> int:
        return len(self.generators)


@dataclass(frozen=True)
class CyclicLabel:
    """A maximal cyclic subgroup, named by its shortest generator in the ball."""

    word: Word
    axis: Geodesic = field(compare=False)
    length: float = field(compare=False)
    angle: float = field(compare=False)
    element: Isometry = field(compare=False, repr=False)

    @property
    def data(self) -> LoxodromicData:
        return LoxodromicData(self.length, self.angle, self.axis)

    def power(self, n: int) -> Isometry:
        return self.element.power(n)


class ElementTable:
    """Reduced words of length <= R and their matrices, deduplicated up to sign."""

    def __init__(self, spec: GroupSpec, entries: dict, aliases: dict, data: dict):
        self.spec = spec
        self.entries = entries
        self.aliases = aliases
        self.data = data
        self._labels: Optional[list] = None
        self._label_of: dict = {}
        self._axis_arrays = None

    @property
    def ball_radius(self) -> int:
        return self.spec.ball_radius

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, w: Word) -> bool:
        w = reduce_word(w)
        return w in self.entries or w in self.aliases

    def __getitem__(self, w: Word) -> Isometry:
        w = reduce_word(w)
        w = self.aliases.get(w, w)
        try:
            return self.entries[w]
        except KeyError:
            raise OutOfTruncationError(f"word {w!r} is outside the ball of radius {self.ball_radius}") from None

    def evaluate(self, w: Word) -> Isometry:
        """Matrix of any word, whether or not it lies in the ball."""
        g = Isometry.identity()
        gens = dict(self.spec.generators)
        for x in reduce_word(w):
            m = gens[x.lower()]
            g = g @ (m if x.islower() else m.inverse())
        return g

    @property
    def words(self) -> list[Word]:
        return list(self.entries)

    # -- maximal cyclic subgroups ------------------------------------------

    def cyclic_labels(self) -> list[CyclicLabel]:
        if self._labels is None:
            self._labels = _group_by_axis(self)
            for lab in self._labels:
                self._label_of[lab.word] = lab
            self._axis_arrays = np.array([
                np.concatenate([geo.boundary_to_sphere(lab.axis.start), geo.boundary_to_sphere(lab.axis.end)])
                for lab in self._labels
            ]).reshape(-1, 6)
        return self._labels

    def label_for_axis(self, axis: Geodesic, tol: float = AXIS_TOL) -> Optional[CyclicLabel]:
        labels = self.cyclic_labels()
        if not labels:
            return None
        s, e = geo.boundary_to_sphere(axis.start), geo.boundary_to_sphere(axis.end)
        A = self._axis_arrays
        same = np.maximum(np.abs(A[:, :3] - s).max(1), np.abs(A[:, 3:] - e).max(1))
        flip = np.maximum(np.abs(A[:, :3] - e).max(1), np.abs(A[:, 3:] - s).max(1))
        d = np.minimum(same, flip)
        i = int(np.argmin(d))
        return labels[i] if d[i] <= tol else None

    def label_for_word(self, w: Word) -> CyclicLabel:
        """Label of the maximal cyclic subgroup containing the element ``w``."""
        self.cyclic_labels()
        w = canonical_generator(w)
        if w in self._label_of:
            return self._label_of[w]
        ld = self.data.get(reduce_word(w))
        if ld is None:
            cl = geo.classify(self.evaluate(w))
            if not cl.is_loxodromic:
                raise NotPurelyLoxodromicError(f"{w!r} is {cl.kind}")
            ld = cl.loxodromic
        lab = self.label_for_axis(ld.axis)
        if lab is None:
            raise OutOfTruncationError(f"no label in the ball shares the axis of {w!r}")
        return lab


def enumerate_ball(spec: GroupSpec) -> ElementTable:
    """All nontrivial reduced words of length <= R with their matrices.

    Raises :class:`NotPurelyLoxodromicError` for any non-loxodromic element.
    """
    gens = {}
    for n, g in spec.generators:
        gens[n] = g
        gens[n.upper()] = g.inverse()
    entries: dict[Word, Isometry] = {}
    aliases: dict[Word, Word] = {}
    data: dict[Word, LoxodromicData] = {}
    buckets: dict[int, list] = {}
    tol = spec.matrix_tolerance
    scale = 1.0 / max(tol * 100, 1e-12)

    def bucket_key(g: Isometry) -> float:
        return abs(g.a) + abs(g.b) + abs(g.c) + abs(g.d)

    layer = [("", Isometry.identity())]
    for _ in range(spec.ball_radius):
        nxt = []
        for w, m in layer:
            for x, gx in gens.items():
                if w and w[-1] == x.swapcase():
                    continue
                nw = w + x
                nm = m @ gx
                cl = geo.classify(nm)
                if cl.kind == "indeterminate":
                    raise IndeterminateClassificationError(f"{nw!r} is within tolerance of the parabolic boundary")
                if not cl.is_loxodromic:
                    raise NotPurelyLoxodromicError(f"{nw!r} is {cl.kind}: not purely loxodromic at this tolerance")
                key = bucket_key(nm)
                b = int(key * scale)
                dup = None
                for bb in (b - 1, b, b + 1):
                    for ow in buckets.get(bb, ()):
                        if entries[ow].distance_to(nm) <= tol:
                            dup = ow
                            break
                    if dup:
                        break
                if dup is not None:
                    aliases[nw] = dup
                else:
                    entries[nw] = nm
                    data[nw] = cl.loxodromic
                    buckets.setdefault(b, []).append(nw)
                nxt.append((nw, nm))
        layer = nxt
    return ElementTable(spec, entries, aliases, data)


def _group_by_axis(table: ElementTable) -> list[CyclicLabel]:
    words = list(table.entries)
    if not words:
        return []
    E = np.array([
        np.concatenate([geo.boundary_to_sphere(table.data[w].axis.start),
                        geo.boundary_to_sphere(table.data[w].axis.end)])
        for w in words
    ])
    n = len(words)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        s, e = E[i, :3], E[i, 3:]
        same = np.maximum(np.abs(E[i + 1:, :3] - s).max(1), np.abs(E[i + 1:, 3:] - e).max(1))
        flip = np.maximum(np.abs(E[i + 1:, :3] - e).max(1), np.abs(E[i + 1:, 3:] - s).max(1))
        for j in np.nonzero(np.minimum(same, flip) <= AXIS_TOL)[0]:
            parent[find(i + 1 + int(j))] = find(i)

    classes: dict[int, list] = {}
    for i, w in enumerate(words):
        classes.setdefault(find(i), []).append(w)

    labels = []
    for members in classes.values():
        prim = min(members, key=lambda w: (round(table.data[w].length, 9), _word_key(w)))
        prim = canonical_generator(prim) if inverse_word(prim) in table.entries else prim
        base = table.data[prim].length
        for w in members:
            ratio = table.data[w].length / base
            if abs(ratio - round(ratio)) > LENGTH_TOL * max(1.0, ratio):
                raise DiscretenessError(
                    f"{w!r} and {prim!r} share an axis but have incommensurable lengths"
                )
        ld = table.data[prim]
        labels.append(CyclicLabel(prim, ld.axis, ld.length, ld.angle, table.entries[prim]))
    labels.sort(key=lambda lab: _word_key(lab.word))
    return labels


def maximal_cyclics(table: ElementTable, lam: Optional[float] = None) -> list[CyclicLabel]:
    """Labels of maximal cyclic subgroups met by the ball, optionally only those shorter than ``lam``."""
    labels = table.cyclic_labels()
    if lam is None:
        return list(labels)
    return [lab for lab in labels if lab.length < lam]


def label_cylinder(label: CyclicLabel, lam: float):
    """The cylinder of a maximal cyclic subgroup: the widest tube among its powers."""
    from .feasibility import Cylinder

    best = None
    n = 1
    while n * label.length < lam:
        r = geo._radius(n * label.length, geo._wrap_angle(n * label.angle), lam)
        if r is not None and (best is None or r > best[1]):
            best = (n, r)
        n += 1
    if best is None:
        return None
    n, r = best
    return Cylinder(label.axis, r, lam, label.word, label.power(n), n * label.length,
                    geo._wrap_angle(n * label.angle))


@dataclass
class ShortSet:
    labels: list
    marginal: list
    lam: float
    ball_radius: int
    displacements: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return not self.marginal

    @property
    def words(self) -> list[Word]:
        return [lab.word for lab in self.labels]


def short_set(table: ElementTable, lam: float, p: Point, marginal_tol: float = MARGINAL_TOL) -> ShortSet:
    """Maximal cyclic subgroups having a nontrivial element that moves ``p`` less than ``lam``.

    Powers of each primitive are evaluated directly.  A displacement within
    ``marginal_tol`` of ``lam`` flags the label and de-certifies the result.
    """
    found, marginal, disp = [], [], {}
    for lab in table.cyclic_labels():
        if lab.length >= lam + marginal_tol:
            continue
        best = math.inf
        n = 1
        g = lab.element
        while n * lab.length < lam + marginal_tol:
            best = min(best, geo.displacement(g, p))
            n += 1
            g = g @ lab.element
        disp[lab.word] = best
        if abs(best - lam) <= marginal_tol:
            marginal.append(lab)
        if best < lam:
            found.append(lab)
    return ShortSet(found, marginal, lam, table.ball_radius, disp)


def conjugate_label(table: ElementTable, g: Union[Isometry, Word], c: CyclicLabel) -> CyclicLabel:
    """Label of ``g C g^-1``, located in the ball by the transported axis."""
    if isinstance(g, str):
        g = table.evaluate(g)
    axis = c.axis.image(g)
    lab = table.label_for_axis(axis)
    if lab is None:
        raise OutOfTruncationError(f"conjugate of {c.word!r} is out of truncation (R={table.ball_radius})")
    if abs(lab.length - c.length) > 1e-7 * max(1.0, c.length):
        raise DiscretenessError(f"conjugate of {c.word!r} matched a label of different length")
    return lab


@dataclass
class LogBoundReport:
    k: int
    displacements: list
    total: float
    max_displacement: float
    threshold: float
    sum_ok: bool
    max_ok: bool
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.sum_ok and self.max_ok


def check_log_bound(gens: Sequence[Isometry], p: Point, tol: float = 1e-9) -> LogBoundReport:
    """Evaluate sum 1/(1 + e^d_i) <= 1/2 and max d_i >= log(2k - 1) at ``p``."""
    d = [geo.displacement(g, p) for g in gens]
    k = len(d)
    total = sum(1.0 / (1.0 + math.exp(x)) for x in d)
    threshold = math.log(2 * k - 1)
    mx = max(d)
    return LogBoundReport(k, d, total, mx, threshold, total <= 0.5 + tol, mx >= threshold - tol, tol)
