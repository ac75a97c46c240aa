"""Augmented stability conditions on the category of ``n`` disjoint points.

The category is the orthogonal sum of ``n`` copies of the derived category
of a point; ``E_p`` is the skyscraper of the ``p``-th point.  A multiscale
decomposition is an ordered partition of ``{1..n}`` into blocks arranged on
a multiscale line with one terminal per block, and a stability condition on
a block is a choice of complex log-charges ``c_p`` for its points, defined up
to a common shift.

:class:`PointsAugStab` stores

* ``line``: a real-oriented line whose terminal ``v`` carries the single
  mark ``min(S_v)`` (the block minimum) at position 0,
* ``blocks``: the block ``S_v`` of each terminal ``v``,
* ``charges``: ``c_p`` for every point, translated so that the block minimum
  has charge 0.

:func:`points_ell` places mark ``p`` at ``c_p`` on the terminal of its block,
giving an ``n``-marked real-oriented line.  The normal forms of both sides
use the same translations and the same level anchors (lexicographically
smallest mark pairs are pairs of block minima), so the map and its inverse
:func:`from_marked_line` copy floating point data without arithmetic.
"""
from __future__ import annotations

import functools
import itertools
import math
import sys
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..level_tree import MarkedLevelTree, find_isomorphism, random_tree
from ..mass_phase import MassMeasure, c_t
from ..moduli import LimitOptions, LimitResult, classify_limit, classify_trend, match_contraction, smoothing, to_blowup
from ..multiscale_line import MultiscaleLine, leq_dir, random_line

__all__ = [
    "PointsError",
    "PointsObject",
    "PointsAugStab",
    "points_ell",
    "from_marked_line",
    "ScaleFiltration",
    "scale_filtration",
    "coarsens",
    "directed_distance",
    "ConvergenceReport",
    "check_convergence",
    "reconstruct_limit",
    "random_points_aug_stab",
    "random_coarsening",
    "synthetic_family",
]


class PointsError(ValueError):
    """Raised for malformed points-model data."""


# ----------------------------------------------------------------------
# objects
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class PointsObject:
    """A direct sum of shifted skyscrapers ``E_p[k]^{m}``.

    ``summands`` is a sorted tuple of ``(point, shift, multiplicity)`` with
    distinct ``(point, shift)`` pairs.
    """

    summands: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        if not self.summands:
            raise PointsError("objects must be nonzero")
        seen = set()
        for p, k, m in self.summands:
            if p < 1 or m < 1:
                raise PointsError("points are 1-based and multiplicities positive")
            if (p, k) in seen:
                raise PointsError("repeated summand; use PointsObject.of to merge")
            seen.add((p, k))
        if list(self.summands) != sorted(self.summands):
            raise PointsError("summands must be sorted")

    @classmethod
    def of(cls, items: Iterable[tuple[int, int, int] | tuple[int, int] | int]) -> "PointsObject":
        """Merge summands given as ``p``, ``(p, k)`` or ``(p, k, m)``."""
        acc: dict[tuple[int, int], int] = {}
        for it in items:
            if isinstance(it, int):
                it = (it, 0, 1)
            elif len(it) == 2:
                it = (it[0], it[1], 1)
            p, k, m = (int(x) for x in it)
            acc[(p, k)] = acc.get((p, k), 0) + m
        return cls(tuple(sorted((p, k, m) for (p, k), m in acc.items())))

    @property
    def support(self) -> frozenset[int]:
        return frozenset(p for p, _, _ in self.summands)

    def restrict(self, points: Iterable[int]) -> "PointsObject | None":
        keep = set(points)
        items = tuple(s for s in self.summands if s[0] in keep)
        return PointsObject(items) if items else None

    def mass_measure(self, charges: Mapping[int, complex]) -> MassMeasure:
        """Atoms ``(Im c_p / pi + k, m e^{Re c_p})`` for the given log-charges."""
        return MassMeasure.of([(charges[p].imag / math.pi + k, m * math.exp(charges[p].real))
                               for p, k, m in self.summands])

    def to_json(self) -> list:
        return [list(s) for s in self.summands]


# ----------------------------------------------------------------------
# augmented stability conditions
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class PointsAugStab:
    """A multiscale line with one block of points and its charges per terminal."""

    line: MultiscaleLine
    blocks: tuple[tuple[int, tuple[int, ...]], ...]
    charges: tuple[tuple[int, complex], ...]

    def __post_init__(self) -> None:
        tree = self.line.tree
        if self.line.scale_mode != "real_oriented":
            raise PointsError("the line must be real oriented")
        terms = [v for v, _ in self.blocks]
        if sorted(terms) != sorted(tree.terminals):
            raise PointsError("need exactly one block per terminal")
        pts = sorted(p for _, b in self.blocks for p in b)
        if pts != list(range(1, len(pts) + 1)):
            raise PointsError("blocks must partition 1..n")
        if tuple(p for p, _ in self.charges) != tuple(pts):
            raise PointsError("need one charge per point")
        expect = tuple(sorted((min(b), v) for v, b in self.blocks))
        if tree.marks != expect:
            raise PointsError("terminal marks must be the block minima")
        ch = dict(self.charges)
        for v, b in self.blocks:
            if ch[min(b)] != 0:
                raise PointsError("charges are not in normal form")
            if len({ch[p] for p in b}) != len(b):
                raise PointsError(f"coincident charges in block {b}")

    # --------------------------------------------------------------
    @classmethod
    def create(cls, tree: MarkedLevelTree, node_config: Mapping[int, Mapping[int, complex]],
               blocks: Mapping[int, Iterable[int]], charges: Mapping[int, complex]) -> "PointsAugStab":
        """Normalize arbitrary data: ``tree`` may carry any marks; they are replaced by block minima."""
        blk = {int(v): tuple(sorted(int(p) for p in b)) for v, b in blocks.items()}
        for v, b in blk.items():
            if not b:
                raise PointsError(f"empty block on terminal {v}")
        k_tree, relabel = MarkedLevelTree.build(list(tree.parent), list(tree.level),
                                                {min(b): v for v, b in blk.items()})
        nodes = {relabel[v]: {relabel[c]: z for c, z in pos.items()} for v, pos in node_config.items()}
        marks = {relabel[v]: {min(b): 0j} for v, b in blk.items()}
        line = MultiscaleLine.create(k_tree, nodes, marks, "real_oriented")
        ch = {int(p): complex(z) for p, z in charges.items()}
        norm = {}
        for b in blk.values():
            z0 = ch[min(b)]
            for p in b:
                norm[p] = ch[p] - z0
        return cls(line, tuple(sorted((relabel[v], b) for v, b in blk.items())),
                   tuple(sorted(norm.items())))

    @classmethod
    def interior(cls, charges: Sequence[complex]) -> "PointsAugStab":
        """The single-block point with charges ``charges[p - 1]`` for ``p = 1..n``."""
        n = len(charges)
        if n == 0:
            raise PointsError("need at least one point")
        tree = MarkedLevelTree.trivial([1])
        return cls.create(tree, {}, {0: range(1, n + 1)}, dict(enumerate(charges, start=1)))

    # --------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.charges)

    @property
    def k(self) -> int:
        return len(self.blocks)

    def is_interior(self) -> bool:
        return self.k == 1

    @functools.cached_property
    def charge(self) -> dict[int, complex]:
        return dict(self.charges)

    @functools.cached_property
    def terminal_of_point(self) -> dict[int, int]:
        return {p: v for v, b in self.blocks for p in b}

    def block(self, v: int) -> tuple[int, ...]:
        return dict(self.blocks)[v]

    def partition(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(b) for _, b in self.blocks)

    def identical(self, other: "PointsAugStab") -> bool:
        """Exact equality of normal forms."""
        return (self.line.dumps() == other.line.dumps() and self.blocks == other.blocks
                and self.charges == other.charges)

    def to_json(self) -> dict:
        return {
            "line": self.line.to_json(),
            "blocks": {str(v): list(b) for v, b in self.blocks},
            "charges": {str(p): [z.real, z.imag] for p, z in self.charges},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "PointsAugStab":
        """Rebuild from :meth:`to_json`; data not in normal form is normalized."""
        line = MultiscaleLine.from_json(data["line"], normalize=False)
        blocks = tuple(sorted((int(v), tuple(sorted(int(p) for p in b))) for v, b in data["blocks"].items()))
        charges = tuple(sorted((int(p), complex(z[0], z[1])) for p, z in data["charges"].items()))
        if _is_normal(line):
            try:
                return cls(line, blocks, charges)
            except PointsError:
                pass
        return from_marked_line(_marked_from_json(data))


def _marked_from_json(data: Mapping) -> MultiscaleLine:
    line = MultiscaleLine.from_json(data["line"], normalize=False)
    blocks = {int(v): [int(p) for p in b] for v, b in data["blocks"].items()}
    charges = {int(p): complex(z[0], z[1]) for p, z in data["charges"].items()}
    sigma = PointsAugStab.create(line.tree, line.node_config, blocks, charges)
    return points_ell(sigma)


# ----------------------------------------------------------------------
# the marked-line map
# ----------------------------------------------------------------------
def points_ell(sigma: PointsAugStab) -> MultiscaleLine:
    """The ``n``-marked real-oriented line with mark ``p`` at ``c_p`` on its block's terminal."""
    tree = sigma.line.tree
    marks = tuple(sorted((p, v) for v, b in sigma.blocks for p in b))
    n_tree = MarkedLevelTree(tree.parent, tree.level, marks)
    n_tree.validate(stable=True)
    mark_config = {v: {p: sigma.charge[p] for p in b} for v, b in sigma.blocks}
    node_config = {v: dict(pos) for v, pos in sigma.line.node_config.items()}
    return MultiscaleLine(n_tree, node_config, mark_config, "real_oriented")


def _is_normal(line: MultiscaleLine) -> bool:
    """Real-oriented normal form up to rounding of the anchor moduli.

    Renormalizing such a line would only move its data by a few ulps, which
    would break exact round trips.
    """
    if line.scale_mode != "real_oriented":
        return False
    tree = line.tree
    for v in range(tree.n_vertices):
        pos = line.positions(v)
        if tree.children(v):
            base = min(pos, key=lambda c: min(tree.marks_below(c)))
        else:
            base = min(pos)
        if pos[base] != 0:
            return False
    for i, j in line.anchors():
        if abs(abs(line.I(i, j)) - 1) > 8 * sys.float_info.epsilon:
            return False
    return True


def from_marked_line(line: MultiscaleLine) -> PointsAugStab:
    """Inverse of :func:`points_ell`; the line is first brought to real-oriented normal form."""
    if line.scale_mode == "complex_projective":
        raise PointsError("a complex projective line does not determine a points-model point")
    if not _is_normal(line):
        line = line.normalize("real_oriented")
    tree = line.tree
    blocks = tuple(sorted((v, tree.marks_on(v)) for v in tree.terminals))
    for v, b in blocks:
        if not b:
            raise PointsError(f"terminal {v} carries no mark")
    k_marks = tuple(sorted((min(b), v) for v, b in blocks))
    k_tree = MarkedLevelTree(tree.parent, tree.level, k_marks)
    k_line = MultiscaleLine(k_tree, {v: dict(pos) for v, pos in line.node_config.items()},
                            {v: {min(b): 0j} for v, b in blocks}, "real_oriented")
    charges = tuple(sorted((p, line.mark_config[v][p]) for v, b in blocks for p in b))
    return PointsAugStab(k_line, blocks, charges)


# ----------------------------------------------------------------------
# scale filtration
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ScaleFiltration:
    """Graded pieces ``(terminal, object)`` ordered by ``<=_{i,0}``."""

    steps: tuple[tuple[int, PointsObject], ...]
    t: float
    well_placed: bool
    dominant: int | None


def _below_inf(line: MultiscaleLine, u: int, v: int) -> bool:
    return u != v and leq_dir(line, 1, math.inf, u, v)


def scale_filtration(sigma: PointsAugStab, E: PointsObject, t: float = 0.0) -> ScaleFiltration:
    """Scale filtration of ``E`` and its ``t``-well-placedness.

    Blocks of ``E`` lying strictly ``<=_{1,inf}`` below another block of
    ``E`` have zero projection and are absorbed into the step of the
    ``<=_{1,inf}``-maximal block above them; the remaining blocks are
    pairwise ``<=_{i,0}``-comparable and are listed in that order.
    """
    if max(E.support) > sigma.n:
        raise PointsError("object involves points outside 1..n")
    line = sigma.line
    present = sorted({sigma.terminal_of_point[p] for p in E.support})
    tops = [v for v in present if not any(_below_inf(line, v, w) for w in present)]
    pieces: dict[int, list[int]] = {v: list(sigma.block(v)) for v in tops}
    for v in present:
        if v not in pieces:
            above = [w for w in tops if _below_inf(line, v, w)]
            pieces[above[0]].extend(sigma.block(v))

    def cmp(a: int, b: int) -> int:
        if leq_dir(line, 1j, 0.0, a, b):
            return -1
        if leq_dir(line, 1j, 0.0, b, a):
            return 1
        raise PointsError(f"terminals {a} and {b} are not <=_(i,0)-comparable")

    order = sorted(tops, key=functools.cmp_to_key(cmp))
    steps = tuple((v, E.restrict(pieces[v])) for v in order)
    dominant = None
    for v in order:
        if all(leq_dir(line, 1, t, w, v) for w in order):
            dominant = v
            break
    return ScaleFiltration(steps, t, dominant is not None, dominant)


# ----------------------------------------------------------------------
# directed distance
# ----------------------------------------------------------------------
def coarsens(tau: PointsAugStab, sigma: PointsAugStab) -> bool:
    """Whether the decomposition of ``tau`` coarsens that of ``sigma``."""
    if tau.n != sigma.n:
        return False
    return match_contraction(points_ell(sigma).tree, points_ell(tau).tree) is not None


def directed_distance(sigma: PointsAugStab, tau: PointsAugStab) -> float:
    """``d(sigma, tau)`` for a coarsening ``tau`` of ``sigma``.

    The supremum runs over the stable generators ``E_p`` of ``sigma``.  The
    infimum over objects with the same projection is attained by the block
    projection, so each generator contributes the phase and log-mass
    discrepancies of the charge differences ``c_s - c_p`` inside its block:
    ``max(|Im D| / pi, |Re D|)`` with ``D = (c^sigma_s - c^sigma_p) - (c^tau_s - c^tau_p)``.
    """
    if not coarsens(tau, sigma):
        raise PointsError("tau does not coarsen sigma")
    best = 0.0
    for _, b in sigma.blocks:
        for p, s in itertools.combinations(b, 2):
            d = (sigma.charge[s] - sigma.charge[p]) - (tau.charge[s] - tau.charge[p])
            best = max(best, abs(d.imag) / math.pi, abs(d.real))
    return best


# ----------------------------------------------------------------------
# convergence
# ----------------------------------------------------------------------
@dataclass
class ConvergenceReport:
    """Outcome of :func:`check_convergence`; ``verdict`` is ``converges``, ``mismatch`` or ``undecided``."""

    verdict: str
    checks: dict[str, bool]
    messages: list[str]
    limit: LimitResult | None = None
    distances: list[float] = field(default_factory=list)

    @property
    def converges(self) -> bool:
        return self.verdict == "converges"


def _path(seq: Sequence[PointsAugStab]) -> list[dict]:
    if len(seq) == 0:
        raise PointsError("empty sequence")
    n = seq[0].n
    out = []
    for a, s in enumerate(seq):
        if not s.is_interior():
            raise PointsError("sequence elements must be interior points")
        if s.n != n:
            raise PointsError("sequence elements have different numbers of points")
        out.append({"s": float(a), "points": [s.charge[p] for p in range(1, n + 1)]})
    return out


def _close_z(a: complex, b: complex, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(b))


def check_convergence(seq: Sequence[PointsAugStab], target: PointsAugStab, *,
                      options: LimitOptions | None = None, t_samples: Sequence[float] = (-2.0, 0.5, 3.0),
                      tol: float = 1e-4) -> ConvergenceReport:
    """Test weak convergence of interior points ``seq`` to ``target``.

    Checks, on the tail of the sequence:

    * ``marked_line``: the marked lines converge to ``points_ell(target)``
      (tree, chart values and boundary angles to ``tol``);
    * ``mass_ratio``: ``c^t -> 1`` for every target-semistable sum of two
      generators in one block, at the sampled ``t``;
    * ``log_charge``: ``l(E_s / E_p) -> c_s - c_p`` inside every target block;
    * ``distance``: ``d(target, seq_a) -> 0``;
    * ``stability``: target-stable objects stay stable along the sequence,
      which holds automatically here because every ``E_p`` is stable.
    """
    opts = options or LimitOptions()
    if any(s.n != target.n for s in seq):
        raise PointsError("sequence and target have different numbers of points")
    res = classify_limit(_path(seq), opts)
    checks: dict[str, bool] = {}
    messages: list[str] = []
    undecided = False
    if res.verdict != "converges":
        checks["marked_line"] = False
        undecided = res.verdict == "undecided"
        messages.append(f"marked lines: {res.verdict} ({res.reason})")
    else:
        tl = points_ell(target)
        ok = find_isomorphism(res.tree, tl.tree) is not None
        if ok:
            rb = to_blowup(tl, res.tree)
            ok = all(_close_z(res.chart.z[key], rb.base.z[key], tol) for key in rb.base.z)
            ok = ok and all(abs(a - b) <= tol for a, b in zip(res.angles, rb.angles))
        checks["marked_line"] = ok
        if not ok:
            messages.append("limit marked line differs from the target")
    tail = seq[-opts.tail:]
    ratio_ok = True
    charge_ok = True
    for _, b in target.blocks:
        for p, s in itertools.combinations(b, 2):
            want = target.charge[s] - target.charge[p]
            tr = classify_trend([x.charge[s] - x.charge[p] for x in tail], opts)
            if tr.kind != "convergent" or not _close_z(tr.limit, want, tol):
                charge_ok = False
                messages.append(f"l(E_{s}/E_{p}) does not tend to the target")
            if abs(want.imag) <= 1e-12:
                obj = PointsObject.of([p, s])
                for t in t_samples:
                    vals = [c_t(obj.mass_measure(x.charge), t) for x in tail]
                    tr = classify_trend(vals, opts)
                    if tr.kind != "convergent" or abs(tr.limit - 1) > tol:
                        ratio_ok = False
                        messages.append(f"c^{t} of E_{p}+E_{s} does not tend to 1")
    checks["log_charge"] = charge_ok
    checks["mass_ratio"] = ratio_ok
    dists = [directed_distance(target, x) for x in seq]
    tr = classify_trend(dists[-opts.tail:], opts)
    checks["distance"] = tr.kind == "convergent" and abs(tr.limit) <= tol
    if not checks["distance"]:
        messages.append("directed distance does not tend to zero")
    checks["stability"] = True
    if all(checks.values()):
        verdict = "converges"
    elif undecided:
        verdict = "undecided"
    else:
        verdict = "mismatch"
    return ConvergenceReport(verdict, checks, messages, res, dists)


def reconstruct_limit(seq: Sequence[PointsAugStab], options: LimitOptions | None = None) -> PointsAugStab:
    """The limit of a weakly convergent sequence of interior points.

    Eventual clusters of charges give the blocks, the marked-line limit
    gives the multiscale line, and the limits of ``l(E_s / E_p)`` inside a
    block give its charges.
    """
    res = classify_limit(_path(seq), options)
    if res.verdict != "converges":
        raise PointsError(f"sequence is not weakly convergent: {res.verdict} ({res.reason})")
    return from_marked_line(res.line)


# ----------------------------------------------------------------------
# random instances
# ----------------------------------------------------------------------
def random_points_aug_stab(rng, n_max: int = 6, max_depth: int = 3, spread: float = 1.0) -> PointsAugStab:
    """A random point with ``n <= n_max`` from Gaussian positions on a random tree."""
    n = int(rng.integers(1, n_max + 1))
    tree = random_tree(rng, n, max_depth)
    line = random_line(rng, tree, "real_oriented", spread)
    return from_marked_line(line)


def random_coarsening(rng, sigma: PointsAugStab, perturb: float = 0.5) -> PointsAugStab:
    """A random coarsening: contract a random set of levels and re-choose merged charges.

    Merged blocks receive fresh relative charges: the old charge of each
    point plus an offset per old terminal, plus a random perturbation.
    """
    from ..level_tree import contract_levels

    line = points_ell(sigma)
    tree = line.tree
    levels = [m for m in range(1, tree.depth + 1) if rng.random() < 0.5]
    c = contract_levels(tree, levels)
    target = c.target
    blocks = {w: target.marks_on(w) for w in target.terminals}
    node_config = {}
    for w in range(target.n_vertices):
        kids = target.children(w)
        if kids:
            pts = rng.normal(size=(len(kids), 2))
            node_config[w] = {k: complex(x, y) for k, (x, y) in zip(kids, pts)}
    charges = {}
    offsets = {v: complex(*rng.normal(scale=3.0, size=2)) for v in tree.terminals}
    for p in range(1, sigma.n + 1):
        v = tree.terminal_of(p)
        charges[p] = sigma.charge[p] + offsets[v] + perturb * complex(*rng.normal(size=2))
    return PointsAugStab.create(target, node_config, blocks, charges)


def _dyadic(rng, k: int) -> list[complex]:
    while True:
        z = (rng.integers(-16, 17, size=k) + 1j * rng.integers(-16, 17, size=k)) / 4
        if all(abs(a - b) >= 0.5 for a, b in itertools.combinations(z, 2)):
            return [complex(x) for x in z]


def synthetic_family(rng, n_max: int = 6, max_depth: int = 3, samples: int = 14
                     ) -> tuple[list[PointsAugStab], PointsAugStab]:
    """A convergent sequence of interior points with known limit.

    Positions on every component are quarter-integers, and the sequence
    smooths the limit line with ``t_m = 2^{-j}`` on every level.  The
    largest ``j`` keeps every coordinate below ``2^53`` in units of ``1/4``,
    so the samples are exact in double precision.
    """
    n = int(rng.integers(2, n_max + 1))
    tree = random_tree(rng, n, max_depth)
    nodes = {v: dict(zip(tree.children(v), _dyadic(rng, len(tree.children(v)))))
             for v in range(tree.n_vertices) if tree.children(v)}
    marks = {v: dict(zip(tree.marks_on(v), _dyadic(rng, len(tree.marks_on(v))))) for v in tree.terminals}
    raw = MultiscaleLine.create(tree, nodes, marks, "absolute", normalize=False)
    j_max = min(20, 47 // max(1, tree.depth))
    seq = [PointsAugStab.interior(smoothing(raw, [2.0 ** -j] * tree.depth))
           for j in range(j_max - samples + 1, j_max + 1)]
    return seq, from_marked_line(raw.normalize("real_oriented"))
