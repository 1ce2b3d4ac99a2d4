"""Classical Schottky groups from pairs of disjoint isometric circles."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Isometry


@dataclass(frozen=True)
class CirclePair:
    """Generator pairing the circle about ``source`` with the one about ``target``."""

    source: complex
    target: complex
    radius: float
    twist: float = 0.0

    def generator(self) -> Isometry:
        # z -> target + r^2 e^{i twist} / (z - source); isometric circles are
        # the two given circles
        k = self.radius ** 2 * cmath.exp(1j * self.twist)
        c, cp = complex(self.source), complex(self.target)
        return Isometry(cp, k - cp * c, 1, -c)


def isometric_circles(g: Isometry) -> tuple[tuple[complex, float], tuple[complex, float]]:
    """Isometric circles of ``g`` and of ``g^-1`` as (center, radius)."""
    if abs(g.c) == 0:
        raise ValueError("isometric circles undefined when c = 0")
    r = 1.0 / abs(g.c)
    return (-g.d / g.c, r), (g.a / g.c, r)


@dataclass
class PingPongReport:
    ok: bool
    min_gap: float
    circles: list

    def __bool__(self) -> bool:
        return self.ok


def pingpong_certificate(gens: Sequence[Isometry], margin: float = 1e-9) -> PingPongReport:
    """Check that all 2n isometric circles bound pairwise disjoint closed disks.

    This is the classical ping-pong criterion: it certifies a free, discrete,
    purely loxodromic group freely generated by ``gens``.
    """
    circles = []
    for g in gens:
        if abs(g.c) < 1e-14:
            return PingPongReport(False, -math.inf, circles)
        circles.extend(isometric_circles(g))
    gap = math.inf
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            (ci, ri), (cj, rj) = circles[i], circles[j]
            gap = min(gap, abs(ci - cj) - ri - rj)
    return PingPongReport(gap > margin, gap, circles)


def random_schottky(rank: int, seed: int, tightness: float = 0.15, spread: float = 3.0,
                    max_tries: int = 10_000) -> list[Isometry]:
    """Random classical Schottky generators.

    Circle pairs share a radius; ``tightness`` bounds the relative gap between
    the two circles of a pair, so smaller values give shorter generators.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        pairs = []
        disks: list[tuple[complex, float]] = []
        ok = True
        for _ in range(rank):
            placed = False
            for _ in range(200):
                r = float(rng.uniform(0.4, 1.0))
                c = complex(*rng.uniform(-spread, spread, size=2))
                ang = rng.uniform(0, 2 * math.pi)
                gap = r * float(rng.uniform(0.02, tightness)) + 1e-3
                cp = c + (2 * r + gap) * cmath.exp(1j * ang)
                new = [(c, r), (cp, r)]
                if all(abs(a - b) - ra - rb > 1e-3 for a, ra in new for b, rb in disks):
                    disks += new
                    pairs.append(CirclePair(c, cp, r, float(rng.uniform(-math.pi, math.pi))))
                    placed = True
                    break
            if not placed:
                ok = False
                break
        if ok:
            gens = [p.generator() for p in pairs]
            if pingpong_certificate(gens):
                return gens
    raise RuntimeError("could not place disjoint circles")


# Two circle pairs whose tubes at displacement log 5 meet; found by numerical
# search over classical configurations.  The b-circles are nearly tangent.
_NEAR_EXTREMAL = (
    CirclePair(complex(-1.5998, 0.0090), complex(2.2766, -1.0534), 1.5660, 2.6057),
    CirclePair(complex(0.1470, -1.0826), complex(0.4330, -0.1773), 0.4740, -0.6162),
)


def near_extremal_schottky(seed: int = 0, jitter: float = 0.05) -> list[Isometry]:
    """Rank-2 classical Schottky group with short, nearly touching generators.

    Seeds shrink each radius by up to 0.3% and perturb the twists, which keeps
    the circles disjoint.  Seed 0 is the unperturbed configuration.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    for p in _NEAR_EXTREMAL:
        if seed == 0:
            pairs.append(p)
            continue
        shrink = 1.0 - float(rng.uniform(0.0, 0.003))
        twist = p.twist + float(rng.uniform(-jitter, jitter))
        pairs.append(CirclePair(p.source, p.target, p.radius * shrink, twist))
    gens = [p.generator() for p in pairs]
    if not pingpong_certificate(gens):
        raise RuntimeError("perturbed circles are not disjoint")
    return gens
