"""Deciding whether finitely many hyperbolic cylinders have a common point.

In the Klein model geodesics are straight lines, so a tube around a geodesic
is an ellipsoid inscribed in the unit ball.  Writing ``xi = (1, x)`` for the
Klein coordinates of a point at distance ``rho`` from the axis, the form

    g(x) = (cosh^2 rho / cosh^2 r - 1) * (1 - |x|^2)

is a convex quadratic in ``x`` which is negative exactly on the open tube of
radius ``r``.  The intersection problem becomes the convex minimax
``min_x max_i g_i(x)``:

* a primal minimizer gives a witness point, which is then re-checked against
  the actual displacement functions;
* any convex combination ``sum_i mu_i g_i`` has a closed-form minimum over
  all of R^3 that bounds the minimax from below.  A positive bound ``L`` gives
  ``cosh rho_i >= cosh r_i sqrt(1 + L)`` for some ``i`` at every point, which
  converts to a lower bound on the maximal displacement.

The verdict is three-valued; the margin band is never resolved either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .geometry import (
    Geodesic,
    Isometry,
    LoxodromicData,
    Point,
    apply,
    boundary_null_vector,
    classify,
    displacement,
    distance,
    from_klein,
    line_distance,
    nearest_point_on_line,
    recentering,
    to_klein,
    tube_displacement,
    _radius,
)

FEASIBLE = "feasible"
EMPTY = "empty"
UNDECIDED = "undecided"

EPS_WITNESS = 1e-6
EPS_EMPTY = 1e-6

_J = np.diag([-1.0, 1.0, 1.0, 1.0])


@dataclass(frozen=True)
class Cylinder:
    """Open tube ``{P : d(P, gP) < lam}`` around the axis of ``element``."""

    core: Geodesic
    radius: float
    lam: float
    label: object
    element: Isometry = field(compare=False, repr=False)
    length: float = field(default=0.0, compare=False)
    angle: float = field(default=0.0, compare=False)

    @classmethod
    def from_element(cls, g: Isometry, lam: float, label: object = None) -> Optional["Cylinder"]:
        cl = classify(g)
        if not cl.is_loxodromic:
            raise ValueError(f"cylinder needs a loxodromic element, got {cl.kind}")
        ld = cl.loxodromic
        r = _radius(ld.length, ld.angle, lam)
        if r is None:
            return None
        return cls(ld.axis, r, lam, label, g, ld.length, ld.angle)

    @classmethod
    def from_data(cls, ld: LoxodromicData, element: Isometry, lam: float, label: object = None):
        r = _radius(ld.length, ld.angle, lam)
        if r is None:
            return None
        return cls(ld.axis, r, lam, label, element, ld.length, ld.angle)

    def contains(self, p: Point) -> bool:
        return displacement(self.element, p) < self.lam


@dataclass(frozen=True)
class Region:
    """Open hyperbolic ball used to restrict an intersection problem."""

    center: Point
    radius: float


@dataclass
class FeasibilityResult:
    verdict: str
    witness: Optional[Point] = None
    max_displacement: Optional[float] = None  # at the witness
    lower_margin: Optional[float] = None  # certified (min F) - lambda when positive
    method: str = ""

    @property
    def feasible(self) -> bool:
        return self.verdict == FEASIBLE


def _chart_center(cyls: Sequence[Cylinder], region: Optional[Region]) -> Point:
    if region is not None:
        return region.center
    p = nearest_point_on_line(Point(0j, 1.0), cyls[0].core)
    for _ in range(3):
        for c in cyls[1:]:
            p = nearest_point_on_line(p, c.core)
    return p


def _forms(cyls, region, h: Isometry):
    forms = []
    for c in cyls:
        core = c.core.image(h)
        u = boundary_null_vector(core.start)
        v = boundary_null_vector(core.end)
        a, b = _J @ u, _J @ v
        uv = float(u @ _J @ v)
        A = -(np.outer(a, b) + np.outer(b, a)) / uv / math.cosh(c.radius) ** 2 + _J
        forms.append(A)
    if region is not None:
        forms.append(np.diag([-math.tanh(region.radius) ** 2, 1.0, 1.0, 1.0]))
    return forms


def _split(A):
    return A[0, 0], A[0, 1:], A[1:, 1:]


def _primal(forms, x0):
    parts = [_split(A) for A in forms]

    def g_all(x):
        return np.array([al + 2 * be @ x + x @ Ga @ x for al, be, Ga in parts])

    def cons(v):
        return v[3] - g_all(v[:3])

    def cons_jac(v):
        x = v[:3]
        rows = [np.concatenate([-(2 * be + 2 * Ga @ x), [1.0]]) for _, be, Ga in parts]
        return np.array(rows)

    s0 = float(g_all(x0).max())
    res = minimize(
        lambda v: v[3],
        np.concatenate([x0, [s0]]),
        jac=lambda v: np.array([0.0, 0.0, 0.0, 1.0]),
        constraints=[
            {"type": "ineq", "fun": cons, "jac": cons_jac},
            {"type": "ineq", "fun": lambda v: 1.0 - 1e-12 - v[:3] @ v[:3],
             "jac": lambda v: np.concatenate([-2 * v[:3], [0.0]])},
        ],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 200},
    )
    x = res.x[:3]
    return x, float(g_all(x).max())


def _dual_value(forms, mu):
    A = sum(m * F for m, F in zip(mu, forms))
    al, be, Ga = _split(A)
    try:
        sol = np.linalg.solve(Ga, be)
    except np.linalg.LinAlgError:
        return -math.inf
    if np.any(np.linalg.eigvalsh(Ga) <= 0):
        return -math.inf
    return float(al - be @ sol)


def _dual(forms):
    n = len(forms)
    if n == 1:
        return _dual_value(forms, [1.0])

    def neg(w):
        e = np.exp(w - w.max())
        return -_dual_value(forms, e / e.sum())

    best = -math.inf
    for start in [np.zeros(n)] + [np.eye(n)[i] * 2.0 for i in range(n)]:
        res = minimize(neg, start, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400 * n})
        best = max(best, -float(res.fun))
    return best


def _margin_from_bound(L, cyls, lam, region):
    """Lower bound on max(F - lam, region excess) from a dual value ``L > 0``."""
    margins = []
    for c in cyls:
        rho = math.acosh(math.cosh(c.radius) * math.sqrt(1.0 + L))
        margins.append(tube_displacement(c.length, c.angle, rho) - lam)
    if region is not None:
        s = math.tanh(region.radius) ** 2 + L
        margins.append(math.inf if s >= 1 else math.atanh(math.sqrt(s)) - region.radius)
    return min(margins)


def _excess(p, cyls, lam, region):
    F = max(displacement(c.element, p) for c in cyls)
    ex = F - lam
    if region is not None:
        ex = max(ex, distance(p, region.center) - region.radius)
    return F, ex


def _polish(x0, cyls, lam, region, h_inv):
    def phi(x):
        n2 = x @ x
        if n2 >= 1.0 - 1e-14:
            return 1e6 * (1.0 + n2)
        return _excess(apply(h_inv, from_klein(x)), cyls, lam, region)[1]

    res = minimize(phi, x0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-13, "maxiter": 2000})
    return res.x


def cylinders_feasible(
    cylinders: Sequence[Cylinder],
    lam: Optional[float] = None,
    *,
    region: Optional[Region] = None,
    eps_witness: float = EPS_WITNESS,
    eps_empty: float = EPS_EMPTY,
) -> FeasibilityResult:
    """Decide whether the open cylinders (and optional region) share a point.

    Returns ``feasible`` with a witness whose maximal displacement is below
    ``lam - eps_witness``, ``empty`` when the minimal maximal displacement is
    certified to be at least ``lam + eps_empty``, and ``undecided`` otherwise.
    """
    cyls = list(cylinders)
    if not cyls:
        raise ValueError("need at least one cylinder")
    if lam is None:
        lam = cyls[0].lam
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if any(abs(c.lam - lam) > 1e-15 for c in cyls):
        raise ValueError("all cylinders must share lambda")

    if region is None and len(cyls) == 2:
        gap = line_distance(cyls[0].core, cyls[1].core) - cyls[0].radius - cyls[1].radius
        if gap > 0:
            m = min(tube_displacement(c.length, c.angle, c.radius + gap / 2) - lam for c in cyls)
            if m >= eps_empty:
                return FeasibilityResult(EMPTY, lower_margin=m, method="axis-distance")

    center = _chart_center(cyls, region)
    h = recentering(center)
    h_inv = h.inverse()
    forms = _forms(cyls, region, h)

    x, gmax = _primal(forms, np.zeros(3))
    if x @ x < 1.0:
        p = apply(h_inv, from_klein(x))
        F, ex = _excess(p, cyls, lam, region)
        if ex < -eps_witness:
            return FeasibilityResult(FEASIBLE, p, F, method="klein-primal")
        if gmax < 0 or ex < eps_empty:
            y = _polish(x, cyls, lam, region, h_inv)
            if y @ y < 1.0:
                p = apply(h_inv, from_klein(y))
                F, ex = _excess(p, cyls, lam, region)
                if ex < -eps_witness:
                    return FeasibilityResult(FEASIBLE, p, F, method="klein-polish")

    L = _dual(forms)
    if L > 0:
        m = _margin_from_bound(L, cyls, lam, region)
        if m >= eps_empty:
            return FeasibilityResult(EMPTY, lower_margin=m, method="klein-dual")
        return FeasibilityResult(UNDECIDED, lower_margin=m, method="klein-dual")
    return FeasibilityResult(UNDECIDED, method="klein")


def cylinders_feasible_for(
    cylinders: Sequence[Cylinder],
    gens: Sequence[Isometry],
    lam: float,
    **kwargs,
) -> FeasibilityResult:
    """Variant pairing each cylinder with an explicit defining isometry."""
    if len(cylinders) != len(gens):
        raise ValueError("one defining isometry per cylinder")
    rebuilt = []
    for c, g in zip(cylinders, gens):
        cyl = Cylinder.from_element(g, lam, c.label)
        if cyl is None:
            raise ValueError(f"element for {c.label!r} has translation length >= lambda")
        rebuilt.append(cyl)
    return cylinders_feasible(rebuilt, lam, **kwargs)


def witness_klein(p: Point, center: Point) -> np.ndarray:
    return to_klein(apply(recentering(center), p))
