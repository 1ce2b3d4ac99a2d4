"""Scenario files: JSON with generator matrices written as 8 reals."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .exceptions import ScenarioError
from .feasibility import Region
from .geometry import Isometry, Point

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "matrix": 1e-9,
    "axis": 1e-7,
    "marginal": 1e-6,
    "eps_witness": 1e-6,
    "eps_empty": 1e-6,
    "log_bound": 1e-9,
}


@dataclass(frozen=True)
class Scenario:
    generators: tuple  # ((name, Isometry), ...)
    k: int = 3
    lam: Optional[float] = None
    ball_radius: int = 3
    center: Point = Point(0j, 1.0)
    region_radius: float = 2.0
    sample_count: int = 200
    seed: int = 0
    nerve_scope: str = "global"  # or "region"
    core_margin: float = 1.0
    name: str = ""
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        if self.k < 3:
            raise ScenarioError(f"k must be an integer >= 3, got {self.k}")
        if self.lam is not None and not self.lam > 0:
            raise ScenarioError("lambda must be positive")
        if self.ball_radius < 1:
            raise ScenarioError("ball radius must be >= 1")
        if self.region_radius <= 0:
            raise ScenarioError("sample region radius must be positive")
        if self.sample_count < 0:
            raise ScenarioError("sample count must be nonnegative")
        if self.nerve_scope not in ("global", "region"):
            raise ScenarioError("nerve_scope must be 'global' or 'region'")
        if not self.generators:
            raise ScenarioError("need at least one generator")
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(self.tolerances)
        object.__setattr__(self, "tolerances", tol)

    @property
    def lambda_(self) -> float:
        return self.lam if self.lam is not None else self.log_threshold

    @property
    def log_threshold(self) -> float:
        return math.log(2 * self.k - 1)

    @property
    def region(self) -> Region:
        return Region(self.center, self.region_radius)

    @property
    def isometries(self) -> list[Isometry]:
        return [g for _, g in self.generators]

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.generators]

    def with_overrides(self, **kw) -> "Scenario":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        c = self.center
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "generators": [{"name": n, "matrix": g.to_reals()} for n, g in self.generators],
            "k": self.k,
            "lambda": self.lam,
            "ball_radius": self.ball_radius,
            "sample_region": {"center": [c.z.real, c.z.imag, c.t], "radius": self.region_radius},
            "sample_count": self.sample_count,
            "seed": self.seed,
            "nerve_scope": self.nerve_scope,
            "core_margin": self.core_margin,
            "tolerances": dict(sorted(self.tolerances.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ScenarioError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
        try:
            gens = []
            for i, g in enumerate(d["generators"]):
                name = g.get("name", "abcdefghijklmnopqrstuvwxyz"[i])
                gens.append((name, Isometry.from_reals(g["matrix"])))
            region = d.get("sample_region", {})
            cx, cy, ct = region.get("center", [0.0, 0.0, 1.0])
            return cls(
                generators=tuple(gens),
                k=int(d.get("k", 3)),
                lam=None if d.get("lambda") is None else float(d["lambda"]),
                ball_radius=int(d.get("ball_radius", 3)),
                center=Point(complex(cx, cy), float(ct)),
                region_radius=float(region.get("radius", 2.0)),
                sample_count=int(d.get("sample_count", 200)),
                seed=int(d.get("seed", 0)),
                nerve_scope=d.get("nerve_scope", "global"),
                core_margin=float(d.get("core_margin", 1.0)),
                name=str(d.get("name", "")),
                tolerances=dict(d.get("tolerances", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def schottky_scenario(rank: int = 2, seed: int = 0, **kw) -> Scenario:
    """Scenario over a seeded classical Schottky group."""
    from .schottky import random_schottky

    gens = random_schottky(rank, seed)
    names = "abcdefghijklmnopqrstuvwxyz"
    kw.setdefault("name", f"schottky-rank{rank}-seed{seed}")
    kw.setdefault("seed", seed)
    return Scenario(tuple(zip(names, gens)), **kw)
