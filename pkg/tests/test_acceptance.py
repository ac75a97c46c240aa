"""Acceptance suite: one test per primary criterion, each printing a PASS/FAIL line.

The campaigns run single-threaded with fixed seeds; the stated sample
sizes, tolerances and time limits are used unchanged.
"""
from __future__ import annotations

import cmath
import math
import re
import time

import numpy as np
import pytest

from augstab.campaigns import CampaignSpec, run_campaign
from augstab.level_tree import (
    MarkedLevelTree,
    check_specialization,
    compose,
    contract_levels,
    enumerate_coarsenings,
    join,
    random_tree,
)
from augstab.moduli import (
    ChartPoint,
    RealBlowupPoint,
    canonical_anchors,
    change_chart,
    classify_limit,
    from_blowup,
    from_chart,
    periods_from_chart,
    smoothing,
    to_blowup,
    to_chart,
)
from augstab.multiscale_line import MultiscaleLine, is_isomorphic, random_line
from augstab.models import points as pts
from augstab.models.bessel import p1_bessel_coordinate
from augstab.models.p1 import F_map, P1Point, p1_boundary_limit


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return emit


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / max(1.0, abs(b))


# ----------------------------------------------------------------------
def test_criterion_01_gt_campaign(report):
    t0 = time.perf_counter()
    rep = run_campaign(CampaignSpec("gt", 100_000, 1, {"tol": 1e-10}), workers=1)
    dt = time.perf_counter() - t0
    ok = rep.ok and rep.min_margin >= -1e-10 and dt < 60
    report(1, ok, f"gt lemma, {rep.trials} instances ({rep.candidates} candidates), "
                  f"min margin {rep.min_margin:.3e}, {dt:.1f} s")


def test_criterion_02_image_bound(report):
    t0 = time.perf_counter()
    rep = run_campaign(CampaignSpec("image", 10_000, 2, {"tol": 1e-8}), workers=1)
    dt = time.perf_counter() - t0
    excess = -rep.min_margin
    ok = rep.ok and excess <= 1e-8 and dt < 120
    report(2, ok, f"image bound, {rep.trials} instances, max relative excess {excess:.3e}, {dt:.1f} s")


def test_criterion_03_truncated_and_filtration(report):
    parts = []
    ok = True
    for lemma in ("truncated", "filtration"):
        for family in ("split", "recipe"):
            rep = run_campaign(CampaignSpec(lemma, 10_000, 3, {"family": family}), workers=1)
            ok = ok and rep.ok
            parts.append(f"{lemma}/{family}: {len(rep.violations)} violations")
    report(3, ok, "; ".join(parts))


# ----------------------------------------------------------------------
def _chart_errors(rng) -> tuple[float, float, float]:
    gamma = random_tree(rng, int(rng.integers(2, 11)), 3)
    ell = gamma.depth
    deleted = [m for m in range(1, ell + 1) if rng.random() < 0.5]
    line = random_line(rng, contract_levels(gamma, deleted).target)

    # round trip through U_Gamma
    p = to_chart(line, gamma)
    back = from_chart(p, check=False)
    q = to_chart(back, gamma)
    rt = max([_rel(q.z[k], p.z[k]) for k in p.z] + [_rel(a, b) for a, b in zip(q.t, p.t)])
    if not is_isomorphic(line, back, tol=1e-10):
        rt = max(rt, 1.0)

    # cocycle: two steps against the composite and against the direct chart
    first = [m for m in deleted if rng.random() < 0.5]
    ca = contract_levels(gamma, first)
    cb = contract_levels(ca.target, [ca.alpha(m) for m in deleted if m not in first])
    two = change_chart(change_chart(p, ca), cb)
    co = 0.0
    for other in (change_chart(p, compose(ca, cb)), to_chart(line, cb.target)):
        co = max([co] + [_rel(two.z[k], other.z[k]) for k in other.z]
                 + [_rel(a, b) for a, b in zip(two.t, other.t)])

    # periods of a smoothing of a deepest-stratum line, read off its chart
    ts = [complex(x, y) for x, y in rng.uniform(0.05, 0.5, size=(ell, 2))]
    irr = MultiscaleLine.irreducible(smoothing(random_line(rng, gamma), ts), list(gamma.labels))
    pi = periods_from_chart(to_chart(irr, gamma))
    pr = max(_rel(v, irr.I(i, j)) for (i, j), v in pi.items())
    return rt, co, pr


def test_criterion_04_chart_calculus(report):
    rng = np.random.default_rng(4)
    worst = np.zeros(3)
    for _ in range(1000):
        worst = np.maximum(worst, _chart_errors(rng))
    ok = bool(np.all(worst <= 1e-10))
    report(4, ok, f"1000 lines: round trip {worst[0]:.2e}, cocycle {worst[1]:.2e}, periods {worst[2]:.2e}")


def test_criterion_05_contraction_calculus(report):
    rng = np.random.default_rng(5)
    counts_ok = True
    for ell in range(0, 7):
        tree = _tree_of_depth(ell)
        counts_ok &= tree.depth == ell and len(enumerate_coarsenings(tree)) == 2 ** ell
    problems = 0
    joins_checked = 0
    for _ in range(200):
        tree = random_tree(rng, int(rng.integers(2, 11)), 6)
        for c in enumerate_coarsenings(tree):
            problems += len(check_specialization(c))
            for u in tree.terminals:
                for v in tree.terminals:
                    joins_checked += 1
                    problems += c(join(tree, u, v)) != join(c.target, c(u), c(v))
    ok = counts_ok and problems == 0
    report(5, ok, f"enumeration 2^l for l <= 6: {counts_ok}; {joins_checked} joins, {problems} problems on 200 trees")


def _tree_of_depth(ell: int) -> MarkedLevelTree:
    """A caterpillar with exactly ``ell`` levels: spine vertices ``s_l`` with one leaf each."""
    if ell == 0:
        return MarkedLevelTree.trivial([1, 2])
    parent = {f"s{ell}": f"s{ell}"}
    level = {f"s{ell}": ell}
    marks: dict[int, str] = {}
    for lvl in range(ell, 0, -1):
        parent[f"x{lvl}"], level[f"x{lvl}"] = f"s{lvl}", 0
        marks[len(marks) + 1] = f"x{lvl}"
        if lvl > 1:
            parent[f"s{lvl - 1}"], level[f"s{lvl - 1}"] = f"s{lvl}", lvl - 1
    parent["y"], level["y"] = "s1", 0
    marks[len(marks) + 1] = "y"
    tree, _ = MarkedLevelTree.build(parent, level, marks, stable=True)
    return tree


# ----------------------------------------------------------------------
A3 = cmath.exp(1j * math.pi / 3)
S = [2.0 ** k for k in range(1, 41)]
N_CENTROID = [0, 1, 3, 2 + 7j]

LIMIT_FAMILIES = {
    "single cluster": (
        [(s, [0, 1, 2 + 1 / s]) for s in S],
        "(0|1,2,3|)",
        {(1, 2): 1, (1, 3): 2, (2, 3): 1},
        (),
    ),
    "two level": (
        [(s, [0, 1, s, s + 1]) for s in S],
        "(1||(0|1,2|),(0|3,4|))",
        {(1, 2): 1, (1, 3): 1, (1, 4): 1, (2, 3): 1, (2, 4): 1, (3, 4): 1},
        (1,),
    ),
    "three level": (
        [(s, [0, 1, A3 * s * s, A3 * s * s + s]) for s in S],
        "(2||(0|1,2|),(1||(0|3|),(0|4|)))",
        {(1, 2): 1, (1, 3): 1, (1, 4): 1, (2, 3): 1, (2, 4): 1, (3, 4): 1},
        (1, A3.conjugate()),
    ),
    "centroid": (
        [(s, [n * s + j * 1j * math.log(s) for j, n in enumerate(N_CENTROID)]) for s in S],
        "(1||(0|1|),(0|2|),(0|3|),(0|4|))",
        {(i, j): N_CENTROID[j - 1] - N_CENTROID[i - 1] for i in range(1, 5) for j in range(i + 1, 5)},
        (1,),
    ),
}


def test_criterion_06_limit_classification(report):
    t0 = time.perf_counter()
    bad = []
    for name, (path, tree, z, angles) in LIMIT_FAMILIES.items():
        res = classify_limit(path)
        good = (res.verdict == "converges" and res.tree.canonical_form() == tree
                and all(abs(res.chart.z[k] - v) <= 1e-4 for k, v in z.items())
                and len(res.angles) == len(angles)
                and all(abs(a - b) <= 1e-4 for a, b in zip(res.angles, angles)))
        if name == "three level":
            good = good and abs(res.anchor_phases[1] - A3) <= 1e-4
        if not good:
            bad.append(name)
    dt = time.perf_counter() - t0
    ok = not bad and dt < 5
    report(6, ok, f"{len(LIMIT_FAMILIES)} families, mismatches {bad}, {dt:.2f} s")


def test_criterion_07_blowup_fiber(report):
    rng = np.random.default_rng(7)
    gamma = classify_limit(LIMIT_FAMILIES["three level"][0]).tree
    z = dict(to_chart(random_line(rng, gamma), gamma).z)
    base = ChartPoint(gamma, z, (0j, 0j), canonical_anchors(gamma))
    worst = 0.0
    for _ in range(100):
        angles = tuple(cmath.exp(1j * x) for x in rng.uniform(-math.pi, math.pi, size=2))
        again = to_blowup(from_blowup(RealBlowupPoint(base, angles)), gamma)
        worst = max([worst] + [abs(a - b) for a, b in zip(again.angles, angles)]
                    + [abs(again.base.z[k] - v) for k, v in z.items()] + [abs(t) for t in again.base.t])
    report(7, gamma.depth == 2 and worst <= 1e-9, f"l = 2, 100 angle pairs, worst deviation {worst:.2e}")


# ----------------------------------------------------------------------
def test_criterion_08_points_model(report):
    rng = np.random.default_rng(8)
    rt_bad = 0
    for _ in range(500):
        s = pts.random_points_aug_stab(rng, n_max=6)
        rt_bad += not s.identical(pts.from_marked_line(pts.points_ell(s)))
    tri_worst = -math.inf
    for _ in range(1000):
        s = pts.random_points_aug_stab(rng)
        t = pts.random_coarsening(rng, s)
        u = pts.random_coarsening(rng, t)
        gap = pts.directed_distance(s, u) - pts.directed_distance(s, t) - pts.directed_distance(t, u)
        tri_worst = max(tri_worst, gap)
    rec_bad = 0
    charge_worst = 0.0
    for _ in range(100):
        seq, target = pts.synthetic_family(rng)
        got = pts.reconstruct_limit(seq)
        err = max(abs(got.charge[p] - target.charge[p]) for p in range(1, target.n + 1))
        charge_worst = max(charge_worst, err)
        same = got.partition() == target.partition() and got.line.tree.canonical_form() == target.line.tree.canonical_form()
        rec_bad += not same or err > 1e-6
    ok = rt_bad == 0 and tri_worst <= 1e-9 and rec_bad == 0
    report(8, ok, f"round trip {rt_bad}/500 bad; triangle excess {tri_worst:.2e}; "
                  f"reconstruction {rec_bad}/100 bad, charge error {charge_worst:.2e}")


def test_criterion_09_p1_model(report):
    rng = np.random.default_rng(9)
    dual = 0.0
    for _ in range(200):
        r = rng.uniform(5, 10)
        a = rng.uniform(-(math.pi / 2 - 0.1), math.pi / 2 - 0.1)
        tau = complex(math.log(r), a)
        vs = p1_bessel_coordinate(tau, "series")
        va = p1_bessel_coordinate(tau, "asymptotic")
        dual = max(dual, abs(vs - va) / max(1.0, abs(va)))
    large = 0.0
    for y in np.linspace(0.0, math.pi, 20):
        for x in (6.0, 8.0, 12.0):
            tau = complex(x, y)
            v = p1_bessel_coordinate(tau)
            u = cmath.exp(tau)
            large = max(large, abs(v - (0.5j * math.pi + 2 * u)) / abs(u))
    ang = 0.0
    for y in rng.uniform(0.0, 1.0, size=20):
        lim = p1_boundary_limit([complex(2 + n, math.pi * y) for n in range(16)])
        ang = max(ang, abs(lim.angle - cmath.exp(1j * math.pi * y)),
                  abs(lim.coordinate_angle - cmath.exp(1j * math.pi * y)))
    equi = True
    for _ in range(200):
        x = math.inf if rng.random() < 0.3 else float(rng.uniform(-5, 5))
        theta = 0.0 if rng.random() < 0.2 else float(rng.uniform(0, 1))
        p = P1Point(x, int(rng.integers(-50, 50)), theta)
        n = int(rng.integers(-20, 20))
        equi &= F_map(p.act(n), with_value=False) == _shifted(F_map(p, with_value=False), n)
    ok = dual <= 1e-8 and large < 1e-3 and ang <= 1e-3 and equi
    report(9, ok, f"dual methods {dual:.2e}; large x {large:.2e}; boundary angle {ang:.2e}; equivariance {equi}")


def _shift_text(text: str, n: int) -> str:
    return re.sub(r"O\((-?\d+)\)", lambda m: f"O({int(m.group(1)) + n})", text)


def _shifted(desc: dict, n: int) -> dict:
    """Shift every twist index in a descriptor by ``n``."""
    out = {}
    for key, val in desc.items():
        if isinstance(val, str):
            val = _shift_text(val, n)
        elif isinstance(val, list) and val and isinstance(val[0], str):
            val = [_shift_text(x, n) for x in val]
        elif key == "twist":
            val = val + n
        out[key] = val
    return out


def test_criterion_10_analytic_basics(report):
    rep = run_campaign(CampaignSpec("basics", 10_000, 10, {"step": 1e-5, "tol": 1e-7}), workers=1)
    report(10, rep.ok, f"{rep.trials} mass measures, {len(rep.violations)} violations, min margin {rep.min_margin:.3e}")
