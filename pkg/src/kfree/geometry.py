"""Upper half-space model of hyperbolic 3-space.

Points are pairs ``(z, t)`` with ``z`` complex and ``t > 0``.  Orientation
preserving isometries are unimodular 2x2 complex matrices acting by the
quaternionic extension of the Moebius action.  Boundary points are complex
numbers or :data:`INFINITY`.
"""

from __future__ import annotations

import cmath
import math
import sys
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .exceptions import GeometryError

INFINITY = math.inf

Boundary = Union[complex, float]

DET_TOL = 1e-12
PARABOLIC_TOL = 1e-9
EXACT_TOL = 1e-14


def is_infinite(w: Boundary) -> bool:
    return cmath.isinf(w)


@dataclass(frozen=True)
class Point:
    z: complex
    t: float

    def __post_init__(self):
        t = float(self.t)
        if not (t > 0.0 and math.isfinite(t)):
            raise ValueError(f"height must be positive and finite, got {self.t!r}")
        z = complex(self.z)
        if not cmath.isfinite(z):
            raise ValueError(f"horizontal coordinate must be finite, got {self.z!r}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_xyz(cls, x: float, y: float, t: float) -> "Point":
        return cls(complex(x, y), t)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.z.real, self.z.imag, self.t)


ORIGIN = Point(0j, 1.0)


@dataclass(frozen=True)
class Isometry:
    """Element of PSL(2, C); entries are rescaled to determinant one."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if det == 0 or not cmath.isfinite(det):
            raise GeometryError("singular or non-finite matrix")
        # rounding in ad - bc grows with the size of the entries
        scale = max(1.0, abs(a * d) + abs(b * c))
        # leave already normalized entries untouched so that serialisation round-trips exactly
        if abs(det - 1) > 8 * sys.float_info.epsilon * scale:
            s = cmath.sqrt(det)
            a, b, c, d = a / s, b / s, c / s, d / s
            scale = max(1.0, abs(a * d) + abs(b * c))
        if abs(a * d - b * c - 1) > DET_TOL * scale:
            raise GeometryError("matrix could not be normalized to determinant one")
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, v)

    @classmethod
    def from_matrix(cls, m) -> "Isometry":
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def from_reals(cls, values) -> "Isometry":
        """Build from 8 reals: re/im of a, b, c, d."""
        v = [float(x) for x in values]
        if len(v) != 8:
            raise ValueError("expected 8 reals (re/im per entry)")
        return cls(complex(v[0], v[1]), complex(v[2], v[3]), complex(v[4], v[5]), complex(v[6], v[7]))

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1, 0, 0, 1)

    def to_reals(self) -> list[float]:
        out = []
        for v in (self.a, self.b, self.c, self.d):
            out += [v.real, v.imag]
        return out

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def __matmul__(self, other: "Isometry") -> "Isometry":
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return Isometry(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "Isometry":
        return Isometry(self.d, -self.b, -self.c, self.a)

    def power(self, n: int) -> "Isometry":
        if n < 0:
            return self.inverse().power(-n)
        result = Isometry.identity()
        base = self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def conjugate_by(self, h: "Isometry") -> "Isometry":
        """Return ``h self h^-1``."""
        return h @ self @ h.inverse()

    def distance_to(self, other: "Isometry") -> float:
        """Entrywise distance in PSL(2, C), minimized over the sign."""
        m, n = self.matrix, other.matrix
        return float(min(np.abs(m - n).max(), np.abs(m + n).max()))

    def mobius(self, w: Boundary) -> Boundary:
        """Action on the sphere at infinity."""
        a, b, c, d = self.a, self.b, self.c, self.d
        if is_infinite(w):
            return INFINITY if abs(c) == 0 else a / c
        den = c * w + d
        if den == 0:
            return INFINITY
        return (a * w + b) / den

    def __call__(self, p: Point) -> Point:
        return apply(self, p)


def apply(g: Isometry, p: Point) -> Point:
    """Evaluate ``(aP + b)(cP + d)^-1`` for the quaternion ``P = z + t j``."""
    a, b, c, d = g.a, g.b, g.c, g.d
    z, t = p.z, p.t
    w = c * z + d
    den = abs(w) ** 2 + abs(c) ** 2 * t * t
    if not (den > 0.0 and math.isfinite(den)):
        raise GeometryError("overflow while applying isometry")
    znew = ((a * z + b) * w.conjugate() + a * c.conjugate() * t * t) / den
    tnew = t / den
    if not (tnew > 0.0 and math.isfinite(tnew) and cmath.isfinite(znew)):
        raise GeometryError("overflow while applying isometry")
    return Point(znew, tnew)


def distance(p: Point, q: Point) -> float:
    """Hyperbolic distance, via ``sinh(d/2) = |p - q|_E / (2 sqrt(t t'))``."""
    num = math.hypot(abs(p.z - q.z), p.t - q.t)
    return 2.0 * math.asinh(num / (2.0 * math.sqrt(p.t * q.t)))


def displacement(g: Isometry, p: Point) -> float:
    return distance(p, apply(g, p))


class Geodesic(NamedTuple):
    """Oriented geodesic line given by its two endpoints at infinity."""

    start: Boundary
    end: Boundary

    def reversed(self) -> "Geodesic":
        return Geodesic(self.end, self.start)

    def image(self, g: Isometry) -> "Geodesic":
        return Geodesic(g.mobius(self.start), g.mobius(self.end))


VERTICAL_AXIS = Geodesic(0j, INFINITY)


@dataclass(frozen=True)
class LoxodromicData:
    length: float
    angle: float
    axis: Geodesic  # (repelling, attracting)

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("translation length must be positive")
        if _same_boundary(self.axis.start, self.axis.end):
            raise ValueError("axis endpoints must be distinct")

    @property
    def complex_length(self) -> complex:
        return complex(self.length, self.angle)


@dataclass(frozen=True)
class Classification:
    kind: str  # identity | elliptic | parabolic | loxodromic | indeterminate
    loxodromic: Optional[LoxodromicData] = None

    @property
    def is_loxodromic(self) -> bool:
        return self.kind == "loxodromic"


def _wrap_angle(theta: float) -> float:
    theta = math.remainder(theta, 2 * math.pi)
    if theta <= -math.pi:
        theta += 2 * math.pi
    return theta


def _same_boundary(u: Boundary, v: Boundary, tol: float = 0.0) -> bool:
    if is_infinite(u) or is_infinite(v):
        return is_infinite(u) and is_infinite(v)
    return abs(u - v) <= tol


def fixed_points(g: Isometry) -> tuple[Boundary, Boundary]:
    """Fixed points ordered (repelling, attracting) for loxodromic ``g``."""
    a, b, c, d = g.a, g.b, g.c, g.d
    tr = a + d
    s = cmath.sqrt(tr * tr - 4)
    if abs(c) <= EXACT_TOL:
        finite = b / (d - a) if d != a else INFINITY
        # z -> a^2 z + ...; |a| > 1 means infinity attracts
        return (finite, INFINITY) if abs(a) > 1 else (INFINITY, finite)
    p, m = a - d + s, a - d - s
    if abs(p) < abs(m):
        p, m = m, p
    z1 = p / (2 * c)
    z2 = -2 * b / p if p != 0 else z1
    # derivative at a fixed point z is (cz + d)^-2
    if abs(c * z1 + d) > 1:
        return (z2, z1)
    return (z1, z2)


def classify(g: Isometry, tol: float = PARABOLIC_TOL) -> Classification:
    """Classify by the square of the trace.

    Values of tr^2 within ``tol`` of the segment [0, 4] but not on it, or
    within ``tol`` of 4 but not equal to it, are reported as indeterminate.
    """
    if min(g.distance_to(Isometry.identity()), 2.0) <= EXACT_TOL * 100:
        return Classification("identity")
    u = g.trace ** 2
    re = min(max(u.real, 0.0), 4.0)
    d_seg = abs(u - re)
    if d_seg > tol:
        mu = (g.trace + cmath.sqrt(u - 4)) / 2
        if abs(mu) < 1:
            mu = 1 / mu
        length = 2 * math.log(abs(mu))
        angle = _wrap_angle(2 * cmath.phase(mu))
        return Classification("loxodromic", LoxodromicData(length, angle, Geodesic(*fixed_points(g))))
    if abs(u - 4) <= EXACT_TOL:
        return Classification("parabolic")
    if abs(u - 4) <= tol:
        return Classification("indeterminate")
    if d_seg <= EXACT_TOL:
        return Classification("elliptic")
    return Classification("indeterminate")


def tube_displacement(length: float, angle: float, rho: float) -> float:
    """Displacement at distance ``rho`` from the axis of a loxodromic."""
    s2 = math.cosh(rho) ** 2 * math.sinh(length / 2) ** 2 + math.sinh(rho) ** 2 * math.sin(angle / 2) ** 2
    return 2.0 * math.asinh(math.sqrt(s2))


def cylinder_radius(ld: LoxodromicData, lam: float) -> Optional[float]:
    """Radius of the open tube ``{P : d(P, gP) < lam}``; None when it is empty."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return _radius(ld.length, ld.angle, lam)


def _radius(length: float, angle: float, lam: float) -> Optional[float]:
    if lam <= length:
        return None
    A = math.sinh(length / 2) ** 2
    B = math.sin(angle / 2) ** 2
    s = (math.sinh(lam / 2) ** 2 - A) / (A + B)
    return math.asinh(math.sqrt(s))


def normalizer(line: Geodesic) -> Isometry:
    """Isometry sending ``line`` to the vertical axis (start -> 0, end -> inf)."""
    u, v = line
    if _same_boundary(u, v):
        raise ValueError("geodesic endpoints must be distinct")
    if is_infinite(v):
        return Isometry(1, -u, 0, 1)
    if is_infinite(u):
        return Isometry(0, 1, 1, -v)
    return Isometry(1, -u, 1, -v)


def dist_point_to_line(p: Point, line: Geodesic) -> float:
    q = apply(normalizer(line), p)
    return math.asinh(abs(q.z) / q.t)


def nearest_point_on_line(p: Point, line: Geodesic) -> Point:
    h = normalizer(line)
    q = apply(h, p)
    return apply(h.inverse(), Point(0j, math.hypot(abs(q.z), q.t)))


def point_on_line(line: Geodesic, s: float, base: Point = ORIGIN) -> Point:
    """Point at signed arc length ``s`` from the projection of ``base``."""
    h = normalizer(line)
    q = apply(h, base)
    height = math.hypot(abs(q.z), q.t) * math.exp(s)
    return apply(h.inverse(), Point(0j, height))


def line_distance(l1: Geodesic, l2: Geodesic) -> float:
    """Distance between two geodesic lines (zero if they meet or are asymptotic)."""
    h = normalizer(l1)
    p, q = h.mobius(l2.start), h.mobius(l2.end)
    if is_infinite(p) or is_infinite(q):
        return 0.0
    if abs(p) <= EXACT_TOL or abs(q) <= EXACT_TOL:
        return 0.0
    m = (p + q) / 2
    r0 = abs(q - p) / 2
    u = (q - p) / abs(q - p)
    A = abs(m) ** 2
    B = r0 * (m * u.conjugate()).real
    if B == 0:
        c = 0.0
    else:
        S = A + r0 * r0
        disc = max(S * S - 4 * B * B, 0.0)
        # smaller root of B c^2 + S c + B = 0, written to avoid cancellation
        c = -2 * B / (S + math.sqrt(disc))
    c = min(max(c, -1.0), 1.0)
    sin2 = 1 - c * c
    if sin2 <= 0:
        return 0.0
    f = (A + 2 * B * c + r0 * r0 * c * c) / (r0 * r0 * sin2)
    return math.asinh(math.sqrt(max(f, 0.0)))


def loxodromic(length: float, angle: float, axis: Geodesic = VERTICAL_AXIS) -> Isometry:
    """Loxodromic with complex length ``length + i angle`` translating start -> end."""
    mu = cmath.exp(complex(length, angle) / 2)
    h = normalizer(axis)
    # diag(mu, 1/mu) pushes 0 -> inf
    return h.inverse() @ Isometry(mu, 0, 0, 1 / mu) @ h


def to_hyperboloid(p: Point) -> np.ndarray:
    x, y, t = p.z.real, p.z.imag, p.t
    r2 = x * x + y * y + t * t
    return np.array([(r2 + 1) / (2 * t), x / t, y / t, (r2 - 1) / (2 * t)])


def from_hyperboloid(X) -> Point:
    X = np.asarray(X, dtype=float)
    t = 1.0 / (X[0] - X[3])
    return Point(complex(X[1] * t, X[2] * t), t)


def boundary_null_vector(w: Boundary) -> np.ndarray:
    """Null vector of the Minkowski form representing a point at infinity."""
    if is_infinite(w):
        return np.array([1.0, 0.0, 0.0, 1.0])
    r2 = abs(w) ** 2
    return np.array([r2 + 1, 2 * w.real, 2 * w.imag, r2 - 1])


def to_klein(p: Point) -> np.ndarray:
    X = to_hyperboloid(p)
    return X[1:] / X[0]


def from_klein(x) -> Point:
    x = np.asarray(x, dtype=float)
    n2 = float(x @ x)
    if n2 >= 1.0:
        raise GeometryError("Klein coordinates outside the unit ball")
    x0 = 1.0 / math.sqrt(1.0 - n2)
    return from_hyperboloid(np.concatenate([[x0], x0 * x]))


def recentering(center: Point) -> Isometry:
    """Isometry taking ``center`` to the base point (0, 1)."""
    return Isometry(1, -center.z, 0, center.t)


def boundary_to_sphere(w: Boundary) -> np.ndarray:
    """Stereographic chart of the sphere at infinity (unit vectors in R^3)."""
    if is_infinite(w):
        return np.array([0.0, 0.0, 1.0])
    r2 = abs(w) ** 2
    return np.array([2 * w.real, 2 * w.imag, r2 - 1]) / (r2 + 1)


def point_at(center: Point, direction, rho: float) -> Point:
    """Point at distance ``rho`` from ``center`` along a unit ``direction`` of the ball chart."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    x = math.tanh(rho) * u
    return apply(recentering(center).inverse(), from_klein(x))
