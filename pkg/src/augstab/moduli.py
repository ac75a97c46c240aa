"""Charts on the compactified configuration space and limit detection.

For a stable marked level tree ``Γ`` with anchors ``(i_m, j_m)`` the chart
``U_Γ`` contains every line whose tree is a contraction of ``Γ``.  Writing
``s_0 = 1`` and ``s_m = I_{i_m j_m}``, the coordinates of a line are

* ``z_ij = I_ij / s_m`` where ``m`` is the ``Γ``-level of the join of marks
  ``i`` and ``j``, and
* ``t_m = s_{m-1} / s_m`` if levels ``m - 1`` and ``m`` of ``Γ`` land on the
  same level of the line's tree, and ``t_m = 0`` otherwise.

Every change of chart is a Laurent monomial in these coordinates.  The
implementation works throughout with the ratios ``s_a / s_b``, which are
products of consecutive ``t``'s, so that one formula covers both changes of
anchors and contractions ``Γ -> Γ'``.

The real oriented blowup keeps, for every level, the unit complex number
``T_m`` with ``T_m = t_m / |t_m|`` when ``t_m != 0``; on the boundary it is
the phase of ``s_{m-1} / s_m`` computed on a real-oriented line.

:func:`classify_limit` turns a sampled path of point configurations into a
limit tree, chart values and boundary angles.  Its verdicts are numerical:
they come from a fixed extrapolation policy on a finite tail of samples.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .level_tree import (
    Contraction,
    MarkedLevelTree,
    TreeError,
    contract_levels,
    find_isomorphism,
    join,
)
from .multiscale_line import (
    MultiscaleLine,
    canonical_anchors,
    period_Pi,
)

__all__ = [
    "ChartError",
    "ChartPoint",
    "RealBlowupPoint",
    "match_contraction",
    "to_chart",
    "from_chart",
    "change_chart",
    "reanchor",
    "periods_from_chart",
    "to_blowup",
    "from_blowup",
    "blowup_from_chart",
    "anchor_phases",
    "frak_p",
    "stratum_codim",
    "stratum_closure_contains",
    "ambient_dim",
    "smoothing",
    "LimitOptions",
    "Trend",
    "classify_trend",
    "LimitResult",
    "classify_limit",
    "ExtensionReport",
    "extend_markings_limit",
    "forget_marks",
]

VERDICTS = ("converges", "no_angular_limit", "undecided", "diverges_in_Mbar_impossible")


class ChartError(ValueError):
    """Raised for points outside a chart or inconsistent coordinates."""


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def _pair_level(tree: MarkedLevelTree, i: int, j: int) -> int:
    return tree.level[join(tree, tree.terminal_of(i), tree.terminal_of(j))]


def _close(x: complex, y: complex, tol: float) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """Coordinates ``(z_ij, t_m)`` of a point of ``U_Γ``.

    ``t[m - 1]`` holds ``t_m`` and ``anchors[m - 1]`` the anchor of level
    ``m``.
    """

    gamma: MarkedLevelTree
    z: Mapping[tuple[int, int], complex]
    t: tuple[complex, ...]
    anchors: tuple[tuple[int, int], ...]

    def zval(self, i: int, j: int) -> complex:
        """``z_ij`` with the antisymmetric extension ``z_ji = -z_ij``."""
        return self.z[(i, j)] if i < j else -self.z[(j, i)]

    def pair_level(self, i: int, j: int) -> int:
        return _pair_level(self.gamma, i, j)

    def ratio(self, a: int, b: int) -> complex:
        """``s_a / s_b`` as a monomial in the ``t``'s."""
        return _ratio(self.t, a, b)

    def is_interior(self) -> bool:
        return all(x != 0 for x in self.t)

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma.to_json(),
            "z": {f"{i},{j}": [v.real, v.imag] for (i, j), v in sorted(self.z.items())},
            "t": [[x.real, x.imag] for x in self.t],
            "anchors": [list(a) for a in self.anchors],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ChartPoint":
        gamma = MarkedLevelTree.from_json(data["gamma"], stable=True)
        z = {}
        for key, (re, im) in data["z"].items():
            i, j = (int(x) for x in key.split(","))
            z[_pair(i, j)] = complex(re, im) if i < j else -complex(re, im)
        t = tuple(complex(re, im) for re, im in data["t"])
        anchors = tuple(tuple(a) for a in data.get("anchors", canonical_anchors(gamma)))
        p = cls(gamma, z, t, anchors)
        _check_chart(p)
        return p


def _ratio(t: Sequence[complex], a: int, b: int) -> complex:
    if a == b:
        return 1.0 + 0j
    if a < b:
        out = 1.0 + 0j
        for p in range(a + 1, b + 1):
            out *= t[p - 1]
        return out
    den = 1.0 + 0j
    for p in range(b + 1, a + 1):
        den *= t[p - 1]
    if den == 0:
        raise ChartError(f"s_{a}/s_{b} is undefined: a vanishing t between those levels")
    return 1.0 / den


def _check_chart(p: ChartPoint) -> None:
    g = p.gamma
    ell = g.depth
    labels = g.labels
    if len(p.t) != ell or len(p.anchors) != ell:
        raise ChartError("need one t and one anchor per level")
    for m, (i, j) in enumerate(p.anchors, start=1):
        if i >= j or _pair_level(g, i, j) != m:
            raise ChartError(f"anchor {(i, j)} does not join on level {m}")
    expected = set(itertools.combinations(labels, 2))
    if set(p.z) != expected:
        raise ChartError("z must be given for every pair i < j of marks")
    for (i, j), v in p.z.items():
        if g.terminal_of(i) != g.terminal_of(j) and v == 0:
            raise ChartError(f"z_{i}{j} vanishes for marks on different terminals")


def match_contraction(gamma: MarkedLevelTree, tree: MarkedLevelTree) -> tuple[Contraction, dict[int, int]] | None:
    """A contraction of ``gamma`` onto ``tree`` and the matching isomorphism, if any."""
    if set(gamma.labels) != set(tree.labels):
        return None
    ell = gamma.depth
    k = ell - tree.depth
    if k < 0:
        return None
    for subset in itertools.combinations(range(1, ell + 1), k):
        c = contract_levels(gamma, subset)
        iso = find_isomorphism(c.target, tree)
        if iso is not None:
            return c, iso
    return None


def to_chart(line: MultiscaleLine, gamma: MarkedLevelTree,
             anchors: Sequence[tuple[int, int]] | None = None) -> ChartPoint:
    """Coordinates of ``line`` in the chart ``U_Γ``."""
    found = match_contraction(gamma, line.tree)
    if found is None:
        raise ChartError("the line's tree is not a contraction of the chart tree")
    c, _ = found
    anchors = tuple(tuple(a) for a in (anchors if anchors is not None else canonical_anchors(gamma)))
    s = [1.0 + 0j] + [line.I(i, j) for i, j in anchors]
    z = {}
    for i, j in itertools.combinations(gamma.labels, 2):
        z[(i, j)] = line.I(i, j) / s[_pair_level(gamma, i, j)]
    t = tuple(
        s[m - 1] / s[m] if c.alpha(m - 1) == c.alpha(m) else 0j
        for m in range(1, gamma.depth + 1)
    )
    p = ChartPoint(gamma, z, t, anchors)
    _check_chart(p)
    return p


def _configuration(p: ChartPoint, scales: Sequence[complex] | None):
    """Tree and positions represented by chart data.

    With ``scales=None`` each target level ``k`` is expressed in the scale
    ``s_r`` where ``r`` is the lowest chart level over ``k``.  Otherwise
    ``scales[m]`` is used as an absolute value of ``s_m``.
    """
    g = p.gamma
    deleted = [m for m in range(1, g.depth + 1) if p.t[m - 1] != 0]
    c = contract_levels(g, deleted)
    tree = c.target

    def value(i: int, j: int, k: int) -> complex:
        m = _pair_level(g, i, j)
        if scales is not None:
            return p.zval(i, j) * scales[m]
        r = min(c.level_fiber(k))
        return p.zval(i, j) * _ratio(p.t, m, r)

    nodes: dict[int, dict[int, complex]] = {}
    marks: dict[int, dict[int, complex]] = {}
    for w in range(tree.n_vertices):
        k = tree.level[w]
        kids = tree.children(w)
        if kids:
            rep = {ch: min(tree.marks_below(ch)) for ch in kids}
            c0 = min(kids, key=rep.get)
            nodes[w] = {ch: (0j if ch == c0 else value(rep[c0], rep[ch], k)) for ch in kids}
        else:
            labs = tree.marks_on(w)
            i0 = min(labs)
            marks[w] = {i: (0j if i == i0 else value(i0, i, k)) for i in labs}
    return tree, nodes, marks


def from_chart(p: ChartPoint, *, check: bool = True, tol: float = 1e-8) -> MultiscaleLine:
    """The complex-projective line with coordinates ``p``."""
    _check_chart(p)
    tree, nodes, marks = _configuration(p, None)
    try:
        line = MultiscaleLine.create(tree, nodes, marks, "complex_projective")
    except ValueError as exc:
        raise ChartError(f"coordinates do not define a line: {exc}") from exc
    if check:
        q = to_chart(line, p.gamma, p.anchors)
        bad = [key for key in p.z if not _close(p.z[key], q.z[key], tol)]
        bad_t = [m + 1 for m in range(len(p.t)) if not _close(p.t[m], q.t[m], tol)]
        if bad or bad_t:
            raise ChartError(f"inconsistent coordinates: z pairs {bad[:5]}, t levels {bad_t}")
    return line


def change_chart(p: ChartPoint, c: Contraction,
                 anchors: Sequence[tuple[int, int]] | None = None) -> ChartPoint:
    """Transport ``p`` from ``U_Γ`` to ``U_Γ'`` along ``c: Γ -> Γ'``.

    Needs ``t_m != 0`` on every deleted level.  With anchors ``a'_j`` of
    ``Γ'`` sitting on ``Γ``-level ``m_j`` the new coordinates are

    ``z'_ij = z_ij / z_{a'_k} * s_m / s_{m_k}`` for ``k = α(m)``, and
    ``t'_j = z_{a'_{j-1}} / z_{a'_j} * s_{m_{j-1}} / s_{m_j}``,

    where ``z_{a'_0} = 1``, ``m_0 = 0`` and each ``s`` ratio is a product of
    ``t``'s.  The identity contraction with new anchors is a change of
    indices.
    """
    if c.source != p.gamma:
        raise ChartError("contraction source differs from the chart tree")
    for m in c.deleted_levels:
        if p.t[m - 1] == 0:
            raise ChartError(f"point lies outside the target chart: t_{m} = 0 on a deleted level")
    g2 = c.target
    new_anchors = tuple(tuple(a) for a in (anchors if anchors is not None else canonical_anchors(g2)))
    za = [1.0 + 0j] + [p.zval(i, j) for i, j in new_anchors]
    ma = [0] + [p.pair_level(i, j) for i, j in new_anchors]
    for j, (ai, aj) in enumerate(new_anchors, start=1):
        if _pair_level(g2, ai, aj) != j:
            raise ChartError(f"anchor {(ai, aj)} does not join on level {j} of the target tree")
        if za[j] == 0:
            raise ChartError(f"anchor {(ai, aj)} has vanishing coordinate")
    z2 = {}
    for (i, j), v in p.z.items():
        m = p.pair_level(i, j)
        k = c.alpha(m)
        z2[(i, j)] = v / za[k] * p.ratio(m, ma[k])
    t2 = tuple(za[j - 1] / za[j] * p.ratio(ma[j - 1], ma[j]) for j in range(1, g2.depth + 1))
    q = ChartPoint(g2, z2, t2, new_anchors)
    _check_chart(q)
    return q


def reanchor(p: ChartPoint, anchors: Sequence[tuple[int, int]]) -> ChartPoint:
    """Change of indices within the same chart tree."""
    return change_chart(p, contract_levels(p.gamma, ()), anchors)


def periods_from_chart(p: ChartPoint) -> dict[tuple[int, int], complex]:
    """``Π_ij = z_ij / (t_1 ... t_m)`` for an interior point, ``m`` the pair's level."""
    if not p.is_interior():
        raise ChartError("periods are finite only when every t_m is nonzero")
    out = {}
    for (i, j), v in p.z.items():
        den = 1.0 + 0j
        for q in range(1, p.pair_level(i, j) + 1):
            den *= p.t[q - 1]
        out[(i, j)] = v / den
    return out


# ----------------------------------------------------------------------
# real oriented blowup
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class RealBlowupPoint:
    """A chart point with one unit angle ``T_m`` per level."""

    base: ChartPoint
    angles: tuple[complex, ...]

    def __post_init__(self) -> None:
        if len(self.angles) != len(self.base.t):
            raise ChartError("need one angle per level")
        for m, (tm, Tm) in enumerate(zip(self.base.t, self.angles), start=1):
            if abs(abs(Tm) - 1) > 1e-9:
                raise ChartError(f"angle T_{m} is not a unit complex number")
            if tm != 0 and abs(tm / abs(tm) - Tm) > 1e-9:
                raise ChartError(f"angle T_{m} disagrees with t_{m}")

    def to_json(self) -> dict:
        out = self.base.to_json()
        out["angles"] = [[a.real, a.imag] for a in self.angles]
        return out


def to_blowup(line: MultiscaleLine, gamma: MarkedLevelTree,
              anchors: Sequence[tuple[int, int]] | None = None) -> RealBlowupPoint:
    """Blowup coordinates of a real-oriented (or absolute) line."""
    if line.scale_mode == "complex_projective":
        raise ChartError("angles need a real-oriented line")
    base = to_chart(line, gamma, anchors)
    s = [1.0 + 0j] + [line.I(i, j) for i, j in base.anchors]
    angles = []
    for m in range(1, gamma.depth + 1):
        r = s[m - 1] / s[m]
        angles.append(r / abs(r))
    return RealBlowupPoint(base, tuple(angles))


def blowup_from_chart(p: ChartPoint) -> RealBlowupPoint:
    """The unique blowup point over an interior chart point."""
    if not p.is_interior():
        raise ChartError("angles are not determined on the boundary")
    return RealBlowupPoint(p, tuple(x / abs(x) for x in p.t))


def from_blowup(rb: RealBlowupPoint) -> MultiscaleLine:
    """The real-oriented line described by blowup coordinates."""
    p = rb.base
    scales = [1.0 + 0j]
    for tm, Tm in zip(p.t, rb.angles):
        scales.append(scales[-1] / (tm if tm != 0 else Tm))
    tree, nodes, marks = _configuration(p, scales)
    try:
        rough = MultiscaleLine.create(tree, nodes, marks, "absolute")
    except ValueError as exc:
        raise ChartError(f"coordinates do not define a line: {exc}") from exc
    return rough.normalize("real_oriented")


def anchor_phases(rb: RealBlowupPoint) -> tuple[complex, ...]:
    """``𝔭_{i_m j_m}`` of the line for each chart anchor."""
    line = from_blowup(rb)
    return tuple(frak_p(line, i, j) for i, j in rb.base.anchors)


def frak_p(obj, i: int, j: int) -> complex:
    """``I/|I|`` for marks on different terminals, ``Π/(1+|Π|)`` otherwise."""
    if isinstance(obj, ChartPoint):
        obj = blowup_from_chart(obj)
    if isinstance(obj, RealBlowupPoint):
        obj = from_blowup(obj)
    line: MultiscaleLine = obj
    if i == j:
        raise ValueError("frak_p needs two distinct marks")
    pi = period_Pi(line, i, j)
    if isinstance(pi, float) and math.isinf(pi):
        v = line.I(i, j)
        return v / abs(v)
    return pi / (1 + abs(pi))


def stratum_codim(gamma: MarkedLevelTree) -> int:
    """Complex codimension of the stratum ``S_Γ``: the number of levels."""
    gamma.validate(stable=True)
    return gamma.depth


def stratum_closure_contains(gamma: MarkedLevelTree, gamma_prime: MarkedLevelTree) -> bool:
    """Whether the closure of ``S_Γ`` contains ``S_Γ'`` (``Γ'`` contracts onto ``Γ``)."""
    return match_contraction(gamma_prime, gamma) is not None


def ambient_dim(n: int) -> int:
    """Complex dimension of the space of ``n`` marked points up to translation."""
    if n < 1:
        raise ValueError("need at least one mark")
    return n - 1


def smoothing(line: MultiscaleLine, t: Sequence[complex]) -> list[complex]:
    """Irreducible configuration obtained by scaling level ``m`` by ``prod_{k<=m} 1/t_k``.

    Mark ``i`` is placed at the sum, over the components on its root path, of
    the scaled position of the node (or mark) leading toward ``i``.  With
    positive real ``t`` tending to 0 the configurations converge to ``line``
    in the real oriented compactification.
    """
    tree = line.tree
    if len(t) != tree.depth:
        raise ValueError("need one smoothing parameter per level")
    if any(x == 0 for x in t):
        raise ValueError("smoothing parameters must be nonzero")
    scale = [1.0 + 0j]
    for x in t:
        scale.append(scale[-1] / complex(x))
    out = []
    for i in tree.labels:
        v = tree.terminal_of(i)
        z = line.mark_config[v][i]
        child = v
        w = tree.parent[v]
        while child != 0:
            z += scale[tree.level[w]] * line.node_config[w][child]
            child, w = w, tree.parent[w]
        out.append(z)
    return out


# ----------------------------------------------------------------------
# limits of sampled paths
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class LimitOptions:
    """Extrapolation policy for :func:`classify_limit`.

    ``tail`` samples are inspected and the geometric tests use the second
    half of them.  A tail converges when its last steps are below
    ``tol * (1 + |v|)``, or when its steps shrink geometrically by at least
    ``rho ** (1 - eta)`` and two successive Aitken extrapolations agree to
    ``tol``.  It diverges when ``|v|`` grows by at least ``rho ** (1 - eta)``
    per step.
    """

    tail: int = 8
    tol: float = 1e-6
    rho: float = 2.0
    eta: float = 0.1

    @property
    def factor(self) -> float:
        return self.rho ** (1 - self.eta)


@dataclass(frozen=True)
class Trend:
    kind: str  # "convergent", "divergent" or "undecided"
    limit: complex | None = None


def _aitken(v: np.ndarray) -> complex:
    d1 = v[-1] - v[-2]
    d0 = v[-2] - v[-3]
    if d0 == 0 or d1 == 0:
        return complex(v[-1])
    r = d1 / d0
    if r == 1:
        return complex(v[-1])
    return complex(v[-1] + d1 * r / (1 - r))


def classify_trend(values: Sequence[complex], opts: LimitOptions = LimitOptions()) -> Trend:
    """Classify the tail of a complex sequence as convergent, divergent or undecided."""
    v = np.asarray(values, dtype=complex)[-opts.tail:]
    if len(v) < 4:
        raise ValueError("need at least four samples to classify a trend")
    if not np.all(np.isfinite(v)):
        return Trend("undecided")
    d = np.abs(np.diff(v))
    half = max(2, len(d) // 2)
    if np.all(d[-half:] <= opts.tol * (1 + np.abs(v[-half:]))):
        return Trend("convergent", complex(v[-1]))
    q = opts.factor
    dt = d[-half:]
    if np.all(dt > 0) and np.all(dt[:-1] >= q * dt[1:]):
        a1, a0 = _aitken(v), _aitken(v[:-1])
        if abs(a1 - a0) <= opts.tol * (1 + abs(a1)):
            return Trend("convergent", a1)
    a = np.abs(v[-(half + 1):])
    if np.all(a > 0) and np.all(a[1:] >= q * a[:-1]):
        return Trend("divergent")
    return Trend("undecided")


@dataclass
class LimitResult:
    """Outcome of :func:`classify_limit`; verdicts are numerical, not proofs."""

    verdict: str
    reason: str = ""
    tree: MarkedLevelTree | None = None
    chart: ChartPoint | None = None
    angles: tuple[complex, ...] = ()
    blowup: RealBlowupPoint | None = None
    line: MultiscaleLine | None = None
    anchor_phases: tuple[complex, ...] = ()
    diagnostics: list[dict] = field(default_factory=list)
    numerical_verdict: bool = True

    def to_json(self) -> dict:
        out: dict = {"verdict": self.verdict, "reason": self.reason,
                     "numerical_verdict": self.numerical_verdict}
        if self.tree is not None:
            out["tree"] = self.tree.to_json()
        if self.chart is not None:
            cj = self.chart.to_json()
            out["chart"] = {"z": cj["z"], "t": cj["t"], "anchors": cj["anchors"]}
        out["angles"] = [[a.real, a.imag] for a in self.angles]
        out["anchor_phases"] = [[a.real, a.imag] for a in self.anchor_phases]
        return out

    def diagnostics_csv(self) -> str:
        if not self.diagnostics:
            return ""
        cols = list(self.diagnostics[0])
        lines = [",".join(cols)]
        for row in self.diagnostics:
            lines.append(",".join(_fmt(row[c]) for c in cols))
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _parse_path(path) -> tuple[np.ndarray, np.ndarray]:
    params, rows = [], []
    for k, sample in enumerate(path):
        if isinstance(sample, Mapping):
            s, pts = sample.get("s", float(k)), sample["points"]
        elif isinstance(sample, tuple) and len(sample) == 2 and np.ndim(sample[1]) == 1:
            s, pts = sample
        else:
            s, pts = float(k), sample
        row = [complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p) for p in pts]
        params.append(float(s))
        rows.append(row)
    if not rows:
        raise ValueError("empty path")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise ValueError("all samples must have the same number of points")
    return np.asarray(params), np.asarray(rows, dtype=complex)


class _UnionFind:
    def __init__(self, items: Iterable):
        self.p = {x: x for x in items}

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb, key=repr)] = min(ra, rb, key=repr)


def _build_limit_tree(X: np.ndarray, labels: list[int], opts: LimitOptions):
    """Cluster marks and stack levels; returns (tree, None) or (None, reason)."""
    n = X.shape[1]
    idx = {lab: k for k, lab in enumerate(labels)}

    def pi(i: int, j: int) -> np.ndarray:
        return X[:, idx[j]] - X[:, idx[i]]

    uf = _UnionFind(labels)
    for i, j in itertools.combinations(labels, 2):
        tr = classify_trend(pi(i, j), opts)
        if tr.kind == "undecided":
            return None, f"boundedness of Pi_{i}{j} undecided"
        if tr.kind == "convergent":
            if abs(tr.limit) <= opts.tol:
                return None, f"marks {i} and {j} collide in the limit"
            uf.union(i, j)
    clusters: dict[int, list[int]] = {}
    for lab in labels:
        clusters.setdefault(uf.find(lab), []).append(lab)
    for members in clusters.values():
        for i, j in itertools.combinations(members, 2):
            if classify_trend(pi(i, j), opts).kind != "convergent":
                return None, f"clustering of marks {i} and {j} is not transitive"

    parent: dict[str, str] = {}
    level: dict[str, int] = {}
    marks: dict[int, str] = {}
    comps: list[tuple[str, list[int]]] = []
    for members in sorted(clusters.values()):
        name = f"t{min(members)}"
        level[name] = 0
        for lab in members:
            marks[lab] = name
        comps.append((name, sorted(members)))
    lvl = 0
    while len(comps) > 1:
        lvl += 1
        pairs = list(itertools.combinations(range(len(comps)), 2))
        series = {pq: pi(comps[pq[0]][1][0], comps[pq[1]][1][0]) for pq in pairs}
        ref = min(pairs, key=lambda pq: abs(series[pq][-1]))
        uf2 = _UnionFind(range(len(comps)))
        for pq in pairs:
            tr = classify_trend(series[pq] / series[ref], opts)
            if tr.kind == "undecided":
                return None, f"scale comparison of components {comps[pq[0]][0]} and {comps[pq[1]][0]} undecided"
            if tr.kind == "convergent":
                uf2.union(*pq)
        groups: dict[int, list[int]] = {}
        for k in range(len(comps)):
            groups.setdefault(uf2.find(k), []).append(k)
        new = []
        for members in groups.values():
            for a, b in itertools.combinations(members, 2):
                if classify_trend(series[(a, b)] / series[ref], opts).kind != "convergent":
                    return None, "scale classes are not transitive"
            if len(members) == 1:
                new.append(comps[members[0]])
                continue
            name = f"v{lvl}_{min(comps[k][1][0] for k in members)}"
            level[name] = lvl
            for k in members:
                parent[comps[k][0]] = name
            new.append((name, sorted(x for k in members for x in comps[k][1])))
        comps = sorted(new, key=lambda c: c[1][0])
    root = comps[0][0]
    parent[root] = root
    tree, _ = MarkedLevelTree.build(parent, level, marks, stable=True)
    return tree, None


def classify_limit(path, options: LimitOptions | None = None) -> LimitResult:
    """Detect the limit of a sampled path of configurations.

    ``path`` is a sequence of samples: mappings ``{"s": ..., "points": [...]}``,
    ``(s, points)`` pairs, or bare point lists.  Points are complex numbers
    or ``[re, im]`` pairs; mark ``k`` is the ``k``-th point (from 1).
    """
    opts = options or LimitOptions()
    params, X = _parse_path(path)
    N, n = X.shape
    if N < max(opts.tail, 4):
        raise ValueError(f"insufficient samples: need at least {opts.tail}, got {N}")
    for k in range(N):
        for a, b in itertools.combinations(range(n), 2):
            if X[k, a] == X[k, b]:
                raise ValueError(f"sample {k} has coincident marks {a + 1} and {b + 1}")
    labels = list(range(1, n + 1))
    tail = X[-opts.tail:]
    tree, reason = _build_limit_tree(tail, labels, opts)
    if tree is None:
        return LimitResult("undecided", reason)
    charts = [to_chart(MultiscaleLine.irreducible(list(row), labels), tree) for row in X]
    diagnostics = []
    for k, (s, p) in enumerate(zip(params, charts)):
        row: dict = {"sample": k, "s": float(s)}
        for m, tm in enumerate(p.t, start=1):
            row[f"abs_t{m}"] = float(abs(tm))
            row[f"arg_T{m}_over_pi"] = float(cmath.phase(tm) / math.pi) if tm != 0 else float("nan")
        for (i, j), v in sorted(p.z.items()):
            row[f"re_z{i}_{j}"] = float(v.real)
            row[f"im_z{i}_{j}"] = float(v.imag)
        diagnostics.append(row)
    tail_charts = charts[-opts.tail:]
    zlim = {}
    for key in tail_charts[0].z:
        tr = classify_trend([p.z[key] for p in tail_charts], opts)
        if tr.kind != "convergent":
            return LimitResult("undecided", f"z_{key[0]}{key[1]} does not settle", tree, diagnostics=diagnostics)
        zlim[key] = tr.limit
        i, j = key
        if tree.terminal_of(i) != tree.terminal_of(j) and abs(tr.limit) <= opts.tol:
            return LimitResult("undecided", f"z_{i}{j} tends to zero", tree, diagnostics=diagnostics)
    angles = []
    angular = True
    for m in range(1, tree.depth + 1):
        tm = [p.t[m - 1] for p in tail_charts]
        tr = classify_trend(tm, opts)
        if tr.kind != "convergent" or abs(tr.limit) > opts.tol:
            return LimitResult("undecided", f"t_{m} does not tend to zero", tree, diagnostics=diagnostics)
        Tr = classify_trend([x / abs(x) for x in tm], opts)
        if Tr.kind != "convergent" or Tr.limit == 0:
            angular = False
            angles.append(complex("nan"))
        else:
            angles.append(Tr.limit / abs(Tr.limit))
    anchors = canonical_anchors(tree)
    base = ChartPoint(tree, zlim, tuple(0j for _ in range(tree.depth)), anchors)
    _check_chart(base)
    if not angular:
        return LimitResult("no_angular_limit", "the limit exists in the complex compactification but angles oscillate",
                           tree, base, tuple(angles), diagnostics=diagnostics)
    rb = RealBlowupPoint(base, tuple(angles))
    line = from_blowup(rb)
    phases = tuple(frak_p(line, i, j) for i, j in anchors)
    return LimitResult("converges", "", tree, base, tuple(angles), rb, line, phases, diagnostics)


def forget_marks(tree: MarkedLevelTree, drop: Iterable[int]) -> MarkedLevelTree:
    """Remove marks without touching the tree (the result may be unstable)."""
    drop = set(drop)
    return MarkedLevelTree(tree.parent, tree.level, tuple(m for m in tree.marks if m[0] not in drop))


@dataclass
class ExtensionReport:
    partners: dict[int, int]
    base: LimitResult
    extended: LimitResult
    consistent: bool
    messages: list[str]


def extend_markings_limit(base_path, extra_trajectories: Sequence[Sequence[complex]],
                          options: LimitOptions | None = None) -> ExtensionReport:
    """Add marks that follow base marks at convergent offsets and compare limits.

    Each extra trajectory must have a partner among the base marks whose
    offset converges (boundedness is tested through convergence of the
    offset).  The report checks that both paths have the same verdict and
    that every new mark ends on the terminal of its partner.
    """
    opts = options or LimitOptions()
    params, X = _parse_path(base_path)
    N, n = X.shape
    extras = [np.asarray([complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p) for p in traj])
              for traj in extra_trajectories]
    partners: dict[int, int] = {}
    for e, traj in enumerate(extras):
        if len(traj) != N:
            raise ValueError(f"trajectory {e} has {len(traj)} samples, expected {N}")
        for i in range(n):
            if classify_trend(traj - X[:, i], opts).kind == "convergent":
                partners[n + 1 + e] = i + 1
                break
        else:
            raise ValueError(f"trajectory {e} stays at bounded distance from no base mark")
    Y = np.concatenate([X] + [t[:, None] for t in extras], axis=1) if extras else X
    ext_path = [{"s": float(s), "points": list(row)} for s, row in zip(params, Y)]
    base = classify_limit([{"s": float(s), "points": list(row)} for s, row in zip(params, X)], opts)
    ext = classify_limit(ext_path, opts)
    messages = []
    consistent = base.verdict == ext.verdict
    if not consistent:
        messages.append(f"verdicts differ: base {base.verdict}, extended {ext.verdict}")
    if base.tree is not None and ext.tree is not None:
        for new, partner in partners.items():
            if ext.tree.terminal_of(new) != ext.tree.terminal_of(partner):
                consistent = False
                messages.append(f"mark {new} is not on the terminal of its partner {partner}")
        reduced = forget_marks(ext.tree, partners)
        if reduced.canonical_form() != base.tree.canonical_form():
            consistent = False
            messages.append("forgetting the new marks does not recover the base tree")
    return ExtensionReport(partners, base, ext, consistent, messages)
