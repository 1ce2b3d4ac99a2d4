"""Suites that evaluate rank and displacement inequalities on a scenario.

Each suite returns a :class:`Certificate`.  Certificates are plain data with
deterministic JSON, CSV and text renderings, so reruns with the same scenario
and seed are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import qmc

from . import geometry as geo
from .exceptions import KFreeError, SubsetCapError
from .feasibility import EMPTY, FEASIBLE, Cylinder, cylinders_feasible
from .freegroup import internal_rank, rank_lemma_run, rank_of_words
from .geometry import Point
from .group import ElementTable, GroupSpec, check_log_bound, enumerate_ball, label_cylinder, maximal_cyclics, short_set
from .nerve import Labeling, NerveResult, cylinder_nerve, sorted_vertices, strata_components
from .scenario import Scenario
from .schottky import pingpong_certificate
from .tree import action_on_components, build_component_graph, is_tree, table_conjugation_map

PASS, FAIL, OBSERVED, NONCERTIFIED = "pass", "fail", "observed", "non-certified"


def _num(x):
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _pt(p: Point) -> list:
    return [_num(p.z.real), _num(p.z.imag), _num(p.t)]


@dataclass
class Certificate:
    suite: str
    scenario: dict
    verdict: str
    checks: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def check(self, name: str, passed: Optional[bool], value=None, tolerance=None, **extra) -> None:
        entry = {
            "name": name,
            "status": OBSERVED if passed is None else (PASS if passed else FAIL),
            "value": value,
            "tolerance": tolerance,
            "truncation_radius": self.scenario.get("ball_radius"),
        }
        entry.update(extra)
        self.checks.append(entry)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "verdict": self.verdict,
            "scenario": self.scenario,
            "checks": self.checks,
            "details": self.details,
            "table": {"columns": self.columns, "rows": self.rows},
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["suite"] + self.columns)
        for row in self.rows:
            w.writerow([self.suite] + [_csv_cell(c) for c in row])
        return buf.getvalue()

    def to_text(self) -> str:
        s = self.scenario
        lines = [
            f"suite: {self.suite}",
            f"verdict: {self.verdict}",
            f"scenario: {s.get('name', '')} digest={s.get('digest', '')[:16]}",
            f"lambda: {s.get('lambda')}  log(2k-1): {s.get('log_threshold')}  k: {s.get('k')}  R: {s.get('ball_radius')}",
        ]
        for c in self.checks:
            tol = "" if c["tolerance"] is None else f" tol={c['tolerance']}"
            lines.append(f"  [{c['status'].upper()}] {c['name']}: {c['value']}{tol}")
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def render(self, fmt: str = "json") -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "text":
            return self.to_text()
        raise ValueError(f"unknown format {fmt!r}")


def _csv_cell(c):
    if isinstance(c, (list, tuple)):
        return " ".join(str(x) for x in c)
    return c


def _scenario_info(s: Scenario) -> dict:
    return {
        "name": s.name,
        "digest": s.digest(),
        "k": s.k,
        "lambda": _num(s.lambda_),
        "log_threshold": _num(s.log_threshold),
        "ball_radius": s.ball_radius,
        "generators": s.names,
        "sample_region": {"center": _pt(s.center), "radius": _num(s.region_radius)},
        "sample_count": s.sample_count,
        "seed": s.seed,
        "nerve_scope": s.nerve_scope,
        "tolerances": {k: _num(v) for k, v in sorted(s.tolerances.items())},
    }


# --------------------------------------------------------------------------
# Shared pieces


class _Context:
    """Lazily built group data shared by the suites of one scenario."""

    def __init__(self, s: Scenario):
        self.s = s
        self._table: Optional[ElementTable] = None
        self._nerve: Optional[NerveResult] = None
        self._labels = None
        self._free: Optional[bool] = None

    @property
    def table(self) -> ElementTable:
        if self._table is None:
            spec = GroupSpec(self.s.generators, self.s.ball_radius, self.s.tolerances["matrix"])
            self._table = enumerate_ball(spec)
        return self._table

    @property
    def labels(self):
        if self._labels is None:
            self._labels = maximal_cyclics(self.table, self.s.lambda_)
        return self._labels

    @property
    def nerve(self) -> NerveResult:
        if self._nerve is None:
            lam = self.s.lambda_
            cyls = [label_cylinder(lab, lam) for lab in self.labels]
            region = self.s.region if self.s.nerve_scope == "region" else None
            self._nerve = cylinder_nerve(
                cyls, labels=self.labels, region=region, on_undecided="exclude",
                eps_witness=self.s.tolerances["eps_witness"], eps_empty=self.s.tolerances["eps_empty"],
            )
        return self._nerve

    @property
    def certified_free(self) -> bool:
        if self._free is None:
            self._free = pingpong_certificate(self.s.isometries).ok
        return self._free

    def rank_caveat(self, cert: "Certificate") -> None:
        # word ranks bound the ranks of the matrix subgroups from above; equality needs a free basis
        cert.details["ranks_exact"] = self.certified_free
        if not self.certified_free:
            cert.notes.append("generators are not ping-pong certified: ranks are upper bounds only")

    def truncation(self) -> dict:
        return {
            "ball_radius": self.s.ball_radius,
            "elements": len(self.table),
            "dedup_collisions": len(self.table.aliases),
            "short_labels": [lab.word for lab in self.labels],
        }


def sample_points(s: Scenario, n: Optional[int] = None) -> list[Point]:
    """Low-discrepancy points of the sample region, as a seed-determined stream.

    The first ``n`` points do not depend on how many are requested.
    """
    n = s.sample_count if n is None else n
    engine = qmc.Halton(d=3, scramble=True, seed=np.random.default_rng(s.seed))
    h_inv = geo.recentering(s.center).inverse()
    rad = math.tanh(s.region_radius)
    out: list[Point] = []
    while len(out) < n:
        for u in engine.random(64):
            x = (2 * u - 1) * rad
            if x @ x < rad * rad:
                out.append(geo.apply(h_inv, geo.from_klein(x)))
                if len(out) == n:
                    break
    return out


def _midpoint(p: Point, q: Point) -> Point:
    X = geo.to_hyperboloid(p) + geo.to_hyperboloid(q)
    X = X / math.sqrt(X[0] ** 2 - X[1:] @ X[1:])
    return geo.from_hyperboloid(X)


def common_perpendicular_midpoint(l1: geo.Geodesic, l2: geo.Geodesic) -> Point:
    """Midpoint of the shortest segment between two geodesics."""
    res = minimize_scalar(lambda t: geo.dist_point_to_line(geo.point_on_line(l2, t), l1),
                          bounds=(-30, 30), method="bounded", options={"xatol": 1e-10})
    q = geo.point_on_line(l2, float(res.x))
    return _midpoint(geo.nearest_point_on_line(q, l1), q)


def _candidates(ctx: _Context) -> list[tuple[str, Point]]:
    s = ctx.s
    out = [("center", s.center)]
    labs = ctx.labels
    for i in range(len(labs)):
        for j in range(i + 1, len(labs)):
            m = common_perpendicular_midpoint(labs[i].axis, labs[j].axis)
            if geo.distance(m, s.center) < s.region_radius:
                out.append((f"perp:{labs[i].word},{labs[j].word}", m))
    cyls = [Cylinder.from_element(g, s.lambda_, n) for n, g in s.generators]
    cyls = [c for c in cyls if c is not None]
    if cyls:
        res = cylinders_feasible(cyls, s.lambda_)
        if res.witness is not None and geo.distance(res.witness, s.center) < s.region_radius:
            out.append(("optimizer", res.witness))
    return out


def _ir(words) -> Optional[int]:
    try:
        return internal_rank(words).value
    except SubsetCapError:
        return None


# --------------------------------------------------------------------------
# Suites


def run_main_search(s: Scenario, ctx: Optional[_Context] = None) -> Certificate:
    """Search the sample region for a point whose short set has internal rank <= k - 3."""
    ctx = ctx or _Context(s)
    cert = Certificate("main-search", _scenario_info(s), FAIL)
    lam, goal, tol = s.lambda_, s.k - 3, s.tolerances["marginal"]
    pts = _candidates(ctx) + [(f"halton:{i}", p) for i, p in enumerate(sample_points(s))]
    cert.columns = ["index", "source", "x", "y", "t", "short_set", "internal_rank", "marginal", "near_core"]
    best, best_any, core_min, core_n = None, None, None, 0
    for idx, (src, p) in enumerate(pts):
        ss = short_set(ctx.table, lam, p, tol)
        ir = _ir(ss.words)
        dcore = min((geo.dist_point_to_line(p, lab.axis) for lab in ctx.table.cyclic_labels()), default=math.inf)
        near = dcore <= s.core_margin
        if near:
            core_n += 1
            if ir is not None and (core_min is None or ir < core_min):
                core_min = ir
        cert.rows.append([idx, src, *_pt(p), ss.words, ir, bool(ss.marginal), near])
        if ir is None:
            continue
        if best_any is None or ir < best_any[0]:
            best_any = (ir, idx, p, ss)
        if ss.certified and (best is None or ir < best[0]):
            best = (ir, idx, p, ss)
    minimum = None if best_any is None else best_any[0]
    cert.check("min internal rank <= k-3", minimum is not None and minimum <= goal, minimum, tol, bound=goal)
    success = best is not None and best[0] <= goal
    if best is not None:
        ir, idx, p, ss = best
        cert.details["witness"] = {
            "index": idx,
            "point": _pt(p),
            "short_set": ss.words,
            "internal_rank": ir,
            "certified": ss.certified,
            "min_displacement_margin": _num(min((d - lam for d in ss.displacements.values()), default=None)),
        }
    if best_any is not None and (best is None or best_any[0] < best[0]):
        cert.notes.append("lowest internal rank was attained only at marginal points")
    cert.check("witness certified (no marginal displacements)", success, None, tol)
    cert.details["points_evaluated"] = len(pts)
    ctx.rank_caveat(cert)
    cert.details["core_neighbourhood"] = {"margin": _num(s.core_margin), "points": core_n, "min_internal_rank": core_min}
    cert.details["truncation"] = ctx.truncation()
    cert.notes.append("short sets are computed within the word ball; elements beyond it are not inspected")
    cert.verdict = PASS if success else (NONCERTIFIED if minimum is not None and minimum <= goal else FAIL)
    return cert


def run_lemma51_suite(s: Scenario, ctx: Optional[_Context] = None) -> Certificate:
    """Rank of the label subgroup of every nerve simplex is at most k - 1."""
    ctx = ctx or _Context(s)
    cert = Certificate("lemma51", _scenario_info(s), FAIL)
    pp = pingpong_certificate(s.isometries)
    cert.check("ping-pong certificate", pp.ok, _num(pp.min_gap), 1e-9)
    nv = ctx.nerve
    cert.columns = ["simplex", "labels", "rank", "bound", "ok"]
    violations = []
    for sigma in nv.complex.sorted_simplices():
        words = [nv.labeling.word(v) for v in sorted_vertices(sigma)]
        r = rank_of_words(words)
        ok = r <= s.k - 1
        cert.rows.append([sorted_vertices(sigma), words, r, s.k - 1, ok])
        if not ok:
            violations.append({"simplex": sorted_vertices(sigma), "labels": words, "rank": r})
    cert.check("rank of every simplex <= k-1", not violations, len(violations), None,
               simplices=len(nv.complex), dimension=nv.complex.dim)
    cert.check("no undecided intersections", not nv.undecided, len(nv.undecided),
               s.tolerances["eps_empty"], excluded=[list(f) for f in nv.undecided])
    cert.details["violations"] = violations
    cert.details["oracle_calls"] = nv.oracle_calls
    cert.details["truncation"] = ctx.truncation()
    cert.details["k2_probe"] = _k2_probe(s)
    ctx.rank_caveat(cert)
    if violations and pp.ok:
        cert.notes.append("violation on ping-pong certified input: geometry or truncation defect")
    cert.verdict = PASS if not violations and not nv.undecided else FAIL
    return cert


def _k2_probe(s: Scenario, delta: float = 1e-3) -> dict:
    """Below log 3 the cylinders of two free generators cannot meet."""
    if len(s.generators) < 2:
        return {"skipped": "needs two generators"}
    lam = math.log(3) - delta
    (na, a), (nb, b) = s.generators[:2]
    ca, cb = Cylinder.from_element(a, lam, na), Cylinder.from_element(b, lam, nb)
    if ca is None or cb is None:
        return {"lambda": _num(lam), "verdict": EMPTY, "ok": True, "reason": "a generator is at least lambda long"}
    res = cylinders_feasible([ca, cb], lam)
    return {"lambda": _num(lam), "verdict": res.verdict, "ok": res.verdict != FEASIBLE,
            "margin": _num(res.lower_margin)}


def run_rank_lemma_suite(s: Scenario, ctx: Optional[_Context] = None) -> Certificate:
    """Replay the face-ordering induction on every stratum component."""
    ctx = ctx or _Context(s)
    cert = Certificate("rank-lemma", _scenario_info(s), FAIL)
    nv = ctx.nerve
    words = Labeling({v: nv.labeling.word(v) for v in nv.labeling})
    strata = strata_components(nv.complex, words, s.k)
    cert.check("stratum hypothesis (internal rank <= k-1)", strata.ok, len(strata.violations), None,
               offending=[sorted_vertices(x) for x, _ in strata.violations])
    cert.columns = ["stratum", "component", "simplices", "final_rank_bfs", "final_rank_dfs", "passed", "agree"]
    all_ok = True
    for r in sorted(strata.components):
        for i, comp in enumerate(strata.components[r]):
            simps = comp.sorted_simplices()
            a = rank_lemma_run(simps, words, r, start=0, strategy="bfs")
            b = rank_lemma_run(simps, words, r, start=len(simps) - 1, strategy="dfs")
            agree = a.final_rank == b.final_rank
            ok = a.passed and b.passed and agree
            all_ok &= ok
            cert.rows.append([r, i, len(simps), a.final_rank, b.final_rank, a.passed and b.passed, agree])
    n = sum(len(v) for v in strata.components.values())
    cert.check("rank Theta(V_i) <= r at every step, orderings agree", all_ok, n, None)
    cert.details["truncation"] = ctx.truncation()
    ctx.rank_caveat(cert)
    cert.verdict = PASS if all_ok else FAIL
    if not strata.ok:
        cert.notes.append("stratum hypothesis failed; components were still replayed")
    return cert


def run_displacement_suite(s: Scenario, points: Optional[Sequence[Point]] = None) -> Certificate:
    """sum 1/(1 + e^d_i) <= 1/2 and max d_i >= log(2n - 1) for the n generators."""
    cert = Certificate("displacement", _scenario_info(s), FAIL)
    gens = s.isometries
    n = len(gens)
    tol = s.tolerances["log_bound"]
    pp = pingpong_certificate(gens)
    cert.check("ping-pong certificate", pp.ok, _num(pp.min_gap), 1e-9)
    pts = list(points) if points is not None else sample_points(s)
    cert.columns = ["index", "x", "y", "t", "sum", "max_displacement", "sum_ok", "max_ok"]
    worst_sum, worst_max, ok = math.inf, math.inf, True
    for i, p in enumerate(pts):
        rep = check_log_bound(gens, p, tol)
        worst_sum = min(worst_sum, 0.5 - rep.total)
        worst_max = min(worst_max, rep.max_displacement - rep.threshold)
        ok &= rep.passed
        cert.rows.append([i, *_pt(p), _num(rep.total), _num(rep.max_displacement), rep.sum_ok, rep.max_ok])
    cert.check("sum 1/(1+e^d) <= 1/2", worst_sum >= -tol, _num(worst_sum), tol, points=len(pts))
    cert.check(f"max d >= log({2 * n - 1})", worst_max >= -tol, _num(worst_max), tol, points=len(pts))
    cert.details["generators"] = n
    cert.details["thresholds"] = {f"k={k}": _num(math.log(2 * k - 1)) for k in (2, 3, 4, s.k)}
    cert.verdict = PASS if ok else FAIL
    return cert


def run_tree_suite(s: Scenario, ctx: Optional[_Context] = None) -> Certificate:
    """Component graph of the two top strata, its tree test and the generator action."""
    ctx = ctx or _Context(s)
    cert = Certificate("tree", _scenario_info(s), OBSERVED)
    nv = ctx.nerve
    words = Labeling({v: nv.labeling.word(v) for v in nv.labeling})
    strata = strata_components(nv.complex, words, s.k)
    g = build_component_graph(strata)
    verdict = is_tree(g)
    cert.check("bipartite", g.is_bipartite(), len(g.edges), None)
    cert.check("tree", None, verdict.kind, None, witness=[[list(x) for x in w] if isinstance(w, list) else list(w)
                                                      for w in verdict.witness], note=verdict.note)
    cert.columns = ["generator", "mapped", "components", "coverage", "ir", "stratum", "edges", "naturality"]
    natural = True
    for name, _ in s.generators:
        for gw in (name, name.upper()):
            vm = table_conjugation_map(nv.labeling, ctx.table, gw)
            rep = action_on_components(g, nv.complex, words, vm)
            ok = rep.ir_preserved and rep.stratum_preserved and rep.edges_preserved and rep.naturality
            natural &= ok
            cert.rows.append([gw, len(rep.mapping), len(g.components), _num(rep.coverage), rep.ir_preserved,
                              rep.stratum_preserved, rep.edges_preserved, rep.naturality])
    cert.check("naturality of the partial action", natural, None, None)
    cert.details["edge_list"] = g.to_edge_list()
    cert.details["truncation"] = ctx.truncation()
    ctx.rank_caveat(cert)
    cert.notes.append("tree verdicts on truncated convex-cocompact examples are observations")
    cert.verdict = OBSERVED if natural and g.is_bipartite() else FAIL
    return cert


SUITES = {
    "main-search": run_main_search,
    "lemma51": run_lemma51_suite,
    "rank-lemma": run_rank_lemma_suite,
    "displacement": lambda s, ctx=None: run_displacement_suite(s),
    "tree": run_tree_suite,
}


def run_all(s: Scenario) -> Certificate:
    ctx = _Context(s)
    cert = Certificate("all", _scenario_info(s), PASS)
    for name, fn in SUITES.items():
        try:
            sub = fn(s, ctx)
        except KFreeError as exc:
            # a failed precondition downgrades this suite only
            sub = Certificate(name, _scenario_info(s), FAIL, notes=[f"{type(exc).__name__}: {exc}"])
        cert.details[name] = sub.to_dict()
        cert.checks.append({"name": name, "status": sub.verdict, "value": None, "tolerance": None,
                            "truncation_radius": s.ball_radius})
        cert.columns = ["name", "verdict"]
        cert.rows.append([name, sub.verdict])
        if sub.verdict == FAIL:
            cert.verdict = FAIL
    return cert
