"""Acceptance gate: one test per criterion, each printing a pass/fail line."""

import itertools
import json
import math
import time

import numpy as np

from conftest import Arc, arc_oracle, random_complex, random_isometry, random_labeling, random_point
from oracles import nielsen_rank, reduced_words
from kfree import harness
from kfree.feasibility import Cylinder, Region
from kfree.freegroup import internal_rank, rank_lemma_run, rank_of_words
from kfree.geometry import (
    INFINITY,
    ORIGIN,
    Geodesic,
    Point,
    classify,
    dist_point_to_line,
    displacement,
    from_klein,
    loxodromic,
    normalizer,
    recentering,
    tube_displacement,
)
from kfree.group import check_log_bound
from kfree.nerve import (
    Complex,
    Labeling,
    cylinder_nerve,
    faces,
    filtered_subcomplex,
    homology_z2,
    internal_ranks,
    nerve,
    strata_components,
)
from kfree.scenario import Scenario, schottky_scenario
from kfree.schottky import near_extremal_schottky, pingpong_certificate, random_schottky
from kfree.tree import action_on_components, build_component_graph, table_conjugation_map

LOG5 = math.log(5)


def near_extremal_scenario(seed, **kw):
    kw.setdefault("ball_radius", 4)
    return Scenario(tuple(zip("ab", near_extremal_schottky(seed))), k=3, name=f"near-extremal-{seed}", **kw)


def test_criterion_1_displacement_bounds(criterion):
    with criterion(1, "sum 1/(1+e^d) <= 1/2 and max d >= log(2k-1), ranks 2 and 3") as c:
        start = time.perf_counter()
        worst = {2: (math.inf, math.inf), 3: (math.inf, math.inf)}
        for rank in (2, 3):
            for seed in range(50):
                gens = random_schottky(rank, seed)
                assert pingpong_certificate(gens)
                s = schottky_scenario(rank, seed, sample_count=100)
                for p in harness.sample_points(s):
                    r = check_log_bound(gens, p, 1e-9)
                    assert r.total <= 0.5 + 1e-9, (rank, seed, p, r.total)
                    assert r.max_displacement >= math.log(2 * rank - 1) - 1e-9, (rank, seed, p)
                    ws, wm = worst[rank]
                    worst[rank] = (min(ws, 0.5 - r.total), min(wm, r.max_displacement - r.threshold))
        elapsed = time.perf_counter() - start
        c.detail = (f"{elapsed:.2f}s; min slack rank2 sum={worst[2][0]:.3g} max={worst[2][1]:.3g}, "
                    f"rank3 sum={worst[3][0]:.3g} max={worst[3][1]:.3g}")
        assert elapsed < 10.0


def test_criterion_2_folding_matches_nielsen(criterion):
    with criterion(2, "folded-core rank equals Nielsen rank, all sets of <= 3 words of length <= 4") as c:
        start = time.perf_counter()
        pool = reduced_words(4)
        checked = mismatches = 0
        for size in (1, 2, 3):
            for ws in itertools.combinations(pool, size):
                checked += 1
                if rank_of_words(ws) != nielsen_rank(ws):
                    mismatches += 1
        elapsed = time.perf_counter() - start
        c.detail = f"{checked} sets, {mismatches} mismatches, {elapsed:.1f}s"
        assert mismatches == 0
        assert elapsed < 60.0


def test_criterion_3_tube_formula(criterion):
    with criterion(3, "closed-form tube displacement matches the matrix action to 1e-9") as c:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            length, angle = rng.uniform(0.01, 5.0), rng.uniform(-math.pi, math.pi)
            h = random_isometry(rng)
            g = loxodromic(length, angle).conjugate_by(h)
            p = random_point(rng)
            data = classify(g).loxodromic
            rho = dist_point_to_line(p, data.axis)
            err = abs(tube_displacement(data.length, data.angle, rho) - displacement(g, p))
            worst = max(worst, err)
        c.detail = f"max error {worst:.2e}"
        assert worst <= 1e-9


def test_criterion_4_nerve_simplices_have_small_rank(criterion):
    with criterion(4, "rank Theta(sigma) <= 2 on every nerve simplex, k=3, lambda=log 5") as c:
        simplices = undecided = violations = 0
        for seed in range(10):
            s = near_extremal_scenario(seed, sample_count=0)
            assert pingpong_certificate(s.isometries)
            assert s.lambda_ == LOG5
            cert = harness.run_lemma51_suite(s)
            nv = harness._Context(s).nerve
            assert nv.complex.dim >= 1, "nerve is 0-dimensional: the check would be vacuous"
            simplices += len(nv.complex)
            undecided += len(nv.undecided)
            violations += len(cert.details["violations"])
            assert cert.verdict == harness.PASS
        c.detail = f"10 scenarios, {simplices} simplices, {violations} violations, {undecided} undecided"
        assert violations == 0 and undecided == 0


def _strip(dim, length):
    return Complex.from_maximal([range(i, i + dim + 1) for i in range(length)])


def _constant_ir_example(rng, r):
    """A strip of r-simplices whose simplices of dimension >= r-1 all have internal rank r."""
    letters = "abc"[:r]
    while True:
        length = int(rng.integers(2, 6))
        cx = _strip(r if r > 1 else 1, length)
        if r == 1:
            base = "ab"[int(rng.integers(2))]
            labels = {v: base * int(rng.integers(1, 4)) for v in cx.vertices}
            part = list(cx.simplices)
        else:
            labels = {}
            for v in cx.vertices:
                n = int(rng.integers(1, 4))
                labels[v] = "".join(letters[int(rng.integers(r))] for _ in range(n))
            part = [s for s in cx.simplices if len(s) >= r]
        lab = Labeling(labels)
        if all(internal_rank([lab[v] for v in s]).value == r for s in part):
            return part, lab


def test_criterion_5_rank_lemma_replays(criterion):
    with criterion(5, "rank lemma replay on constant-IR components, two orderings agree") as c:
        rng = np.random.default_rng(17)
        steps = 0
        for i in range(20):
            r = (1, 2, 3)[i % 3]
            part, lab = _constant_ir_example(rng, r)
            simps = sorted(part, key=lambda s: (len(s), sorted(s)))
            a = rank_lemma_run(simps, lab, r, start=0, strategy="bfs")
            b = rank_lemma_run(simps, lab, r, start=len(simps) - 1, strategy="dfs")
            assert not a.hypothesis_violations and not b.hypothesis_violations
            assert a.passed and b.passed
            assert all(step.rank <= r for step in a.trace + b.trace)
            assert a.final_rank == b.final_rank
            steps += len(a.trace) + len(b.trace)
        c.detail = f"20 complexes, {steps} induction steps"


def test_criterion_6_filtration_laws(criterion):
    with criterion(6, "internal rank is face-monotone and every filtration level is a subcomplex") as c:
        rng = np.random.default_rng(6)
        pairs = levels = 0
        for _ in range(200):
            cx = random_complex(rng, 7, 30)
            assert len(cx) <= 30
            lab = random_labeling(rng, cx)
            ranks = internal_ranks(cx, lab)
            for s in cx.simplices:
                for t in faces(s):
                    if t != s:
                        pairs += 1
                        assert ranks[t] <= ranks[s]
            for m in range(0, max(ranks.values()) + 2):
                levels += 1
                assert filtered_subcomplex(cx, lab, m, ranks).is_downward_closed()
        c.detail = f"200 complexes, {pairs} face pairs, {levels} filtration levels"


def _sphere_to_boundary(v):
    return INFINITY if v[2] > 1 - 1e-15 else complex(v[0], v[1]) / (1 - v[2])


def _axis_through(p, u):
    h = recentering(p).inverse()
    return Geodesic(h.mobius(_sphere_to_boundary(-u)), h.mobius(_sphere_to_boundary(u)))


def _distances_to_axis(z, t, line):
    """Vectorised distance from points (z, t) to a geodesic."""
    g = normalizer(line)
    w = g.c * z + g.d
    den = np.abs(w) ** 2 + abs(g.c) ** 2 * t * t
    zn = ((g.a * z + g.b) * np.conj(w) + g.a * np.conj(g.c) * t * t) / den
    return np.arcsinh(np.abs(zn) / (t / den))


def _grid(rho, h):
    """Cubical grid of spacing h in the Poincare ball around the base point, and its covering slack.

    Every point of the ball of radius rho is within Euclidean distance
    h*sqrt(3)/2 of a node, and along that segment the conformal factor is at
    most 2 / (1 - s^2) with s the largest radius reached.
    """
    r0 = math.tanh(rho / 2)
    half = h * math.sqrt(3) / 2
    s = r0 + half
    ticks = np.arange(-r0 - h, r0 + h + 1e-12, h)
    Y = np.array(list(itertools.product(ticks, repeat=3)))
    Y = Y[np.linalg.norm(Y, axis=1) <= s]
    X = 2 * Y / (1 + (Y * Y).sum(1))[:, None]
    pts = [from_klein(x) for x in X]
    return np.array([p.z for p in pts]), np.array([p.t for p in pts]), 2 / (1 - s * s) * half


def _greedy_cover(rho, length, lam, seed, h=0.03):
    """Tubes on random axes through uncovered grid nodes until the grid certificate holds."""
    rng = np.random.default_rng(seed)
    z, t, slack = _grid(rho, h)
    room = np.full(len(z), -np.inf)
    cyls = []
    while (room <= slack).any():
        bad = np.flatnonzero(room <= slack)
        j = bad[rng.integers(len(bad))]
        u = rng.normal(size=3)
        line = _axis_through(Point(z[j], t[j]), u / np.linalg.norm(u))
        g = loxodromic(length, 0.0).conjugate_by(normalizer(line).inverse())
        cy = Cylinder.from_element(g, lam, f"tube{len(cyls)}")
        cyls.append(cy)
        room = np.maximum(room, cy.radius - _distances_to_axis(z, t, cy.core))
    # spot check the vectorised distances against the library
    for j in range(0, len(z), 997):
        p = Point(z[j], t[j])
        assert abs(max(c.radius - dist_point_to_line(p, c.core) for c in cyls) - room[j]) < 1e-9
    return cyls, float((room - slack).min())


def test_criterion_7_nerve_homology(criterion):
    with criterion(7, "certified convex covers have Betti (1,0,0); arc control has (1,1,0)") as c:
        rho, lam = 1.0, 2.0
        details = []
        for seed in range(3):
            cyls, margin = _greedy_cover(rho, 1.6, lam, seed)
            assert margin > 0
            res = cylinder_nerve(cyls, region=Region(ORIGIN, rho))
            b = homology_z2(res.complex)
            details.append(f"{len(cyls)} tubes f={res.complex.f_vector()} b={b}")
            assert len(res.complex.maximal()) > 1, "nerve is a single simplex"
            assert not res.undecided
            assert b == (1, 0, 0)
        arcs = [Arc(2 * math.pi * i / 3, 2 * math.pi / 3 + 0.3) for i in range(3)]
        control = homology_z2(nerve(arcs, arc_oracle(arcs)).complex)
        c.detail = "; ".join(details) + f"; control {control}"
        assert control == (1, 1, 0)


def test_criterion_8_main_search(criterion):
    with criterion(8, "main-search finds a certified point with empty short set, deterministically") as c:
        s = schottky_scenario(2, 0, k=3)
        first = harness.run_main_search(s)
        second = harness.run_main_search(s)
        assert first.to_json() == second.to_json()
        w = first.details["witness"]
        c.detail = f"witness index {w['index']} at {[round(x, 4) for x in w['point']]}, IR {w['internal_rank']}"
        assert first.verdict == harness.PASS
        assert w["certified"] and w["short_set"] == [] and w["internal_rank"] == 0
        assert json.loads(first.to_json())["verdict"] == "pass"


def test_criterion_9_naturality(criterion):
    with criterion(9, "generators preserve rank Theta(W) and stratum on transportable components") as c:
        transported = 0
        for seed in range(5):
            s = near_extremal_scenario(seed, sample_count=0)
            ctx = harness._Context(s)
            nv = ctx.nerve
            words = Labeling({v: nv.labeling.word(v) for v in nv.labeling})
            g = build_component_graph(strata_components(nv.complex, words, s.k))
            for name in s.names:
                for gamma in (name, name.upper()):
                    rep = action_on_components(g, nv.complex, words, table_conjugation_map(nv.labeling, ctx.table, gamma))
                    assert rep.mapping, "no component could be transported"
                    assert rep.naturality and rep.stratum_preserved, rep.problems
                    assert all(a == b for a, b in rep.rank_pairs.values())
                    transported += len(rep.mapping)
        c.detail = f"{transported} component transports over 5 scenarios and 4 generators each"
