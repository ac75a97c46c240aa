"""Multiscale lines as level trees decorated with planar configurations.

Each component of a genus-zero multiscale line, with its node to the parent
removed and its translation-invariant differential, is identified with
``(C, dz)``.  A line is therefore stored as

* ``node_config[v][c]``: the position on the component ``v`` of the node
  leading down to the child ``c``,
* ``mark_config[v][i]``: the position of mark ``i`` on the terminal ``v``.

Two configurations describe the same line when they differ by a translation
on every component and, on each level ``m >= 1``, by a common rescaling of all
components of that level.  Level 0 is never rescaled.  The allowed rescalings
depend on the scale mode:

``complex_projective``
    any nonzero complex factor per level;
``real_oriented``
    a positive real factor per level;
``absolute``
    no rescaling, only translations.

Normal forms use the canonical anchor on each level: the lexicographically
smallest pair of marks ``(i, j)``, ``i < j``, whose join lies on that level.
After normalization the anchor period is ``1`` (complex projective) or has
modulus ``1`` (real oriented), and each component is translated so that the
point with the smallest representative mark sits at ``0``.
"""
from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .level_tree import MarkedLevelTree, TreeError, find_isomorphism, join

__all__ = [
    "MultiscaleLine",
    "SCALE_MODES",
    "canonical_anchors",
    "phase",
    "period_I",
    "period_Pi",
    "normalized_period",
    "leq_dir",
    "leq_lex",
    "signature",
    "gl2_act",
    "is_isomorphic",
    "descendent",
    "random_line",
    "unit",
]

SCALE_MODES = ("complex_projective", "real_oriented", "absolute")
_RANK = {"complex_projective": 0, "real_oriented": 1, "absolute": 2}

#: Default relative tolerance for normal-form comparisons.
REL_TOL = 1e-9
#: Zero tolerance for sign and order decisions on unit complex numbers.
SIGN_TOL = 1e-12


class LineError(ValueError):
    """Raised when configuration data is malformed."""


def phase(z: complex) -> float:
    """The phase ``phi(z)`` in ``(-1, 1]`` with ``z = |z| exp(i pi phi)``."""
    if z == 0:
        raise ValueError("phase of zero is undefined")
    a = math.atan2(z.imag, z.real) / math.pi
    return 1.0 if a <= -1.0 else a


def _rep(tree: MarkedLevelTree, v: int) -> tuple:
    below = tree.marks_below(v)
    return (0, min(below)) if below else (1, min(u for u in tree.subtree(v) if tree.level[u] == 0))


def canonical_anchors(tree: MarkedLevelTree) -> tuple[tuple[int, int], ...]:
    """Per level ``m = 1..ell`` the lexicographically smallest mark pair joining there.

    For unmarked trees terminal vertex ids stand in for marks.
    """
    if tree.marks:
        points = [(lab, v) for lab, v in tree.marks]
    else:
        points = [(v, v) for v in tree.terminals]
    best: dict[int, tuple[int, int]] = {}
    for (i, u), (j, w) in itertools.combinations(sorted(points), 2):
        lvl = tree.level[join(tree, u, w)]
        if lvl >= 1 and lvl not in best:
            best[lvl] = (i, j)
    missing = [m for m in range(1, tree.depth + 1) if m not in best]
    if missing:
        raise TreeError(f"no mark pair joins on levels {missing}")
    return tuple(best[m] for m in range(1, tree.depth + 1))


def _keys(tree: MarkedLevelTree, v: int) -> tuple:
    kids = tree.children(v)
    return tuple(kids) if kids else tree.marks_on(v)


@dataclass(frozen=True, eq=False)
class MultiscaleLine:
    """A multiscale line in one of the :data:`SCALE_MODES`."""

    tree: MarkedLevelTree
    node_config: Mapping[int, Mapping[int, complex]]
    mark_config: Mapping[int, Mapping[int, complex]]
    scale_mode: str = "complex_projective"

    # ------------------------------------------------------------------
    @classmethod
    def create(
        cls,
        tree: MarkedLevelTree,
        node_config: Mapping[int, Mapping[int, complex]],
        mark_config: Mapping[int, Mapping[int, complex]],
        scale_mode: str = "complex_projective",
        *,
        normalize: bool = True,
    ) -> "MultiscaleLine":
        """Validate the data and (optionally) bring it to normal form."""
        if scale_mode not in SCALE_MODES:
            raise LineError(f"unknown scale mode {scale_mode!r}")
        nodes = {int(v): {int(c): complex(z) for c, z in m.items()} for v, m in node_config.items()}
        marks = {int(v): {int(i): complex(z) for i, z in m.items()} for v, m in mark_config.items()}
        for v in tree.terminals:
            marks.setdefault(v, {})
        for v in range(tree.n_vertices):
            kids = tree.children(v)
            if kids:
                if set(nodes.get(v, {})) != set(kids):
                    raise LineError(f"node positions on vertex {v} must be given exactly for its children")
                pts = list(nodes[v].values())
            else:
                if set(marks[v]) != set(tree.marks_on(v)):
                    raise LineError(f"mark positions on terminal {v} must be given exactly for its marks")
                pts = list(marks[v].values())
            for z in pts:
                if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                    raise LineError(f"non-finite position on vertex {v}")
            for a, b in itertools.combinations(pts, 2):
                if a == b:
                    raise LineError(f"coincident positions on vertex {v}")
        extra = set(nodes) - {v for v in range(tree.n_vertices) if tree.children(v)}
        if extra or set(marks) - set(tree.terminals):
            raise LineError("configuration given for vertices of the wrong kind")
        line = cls(tree, nodes, marks, scale_mode)
        return line.normalize(scale_mode) if normalize else line

    @classmethod
    def irreducible(cls, points: Sequence[complex], labels: Sequence[int] | None = None,
                    scale_mode: str = "complex_projective") -> "MultiscaleLine":
        """The one-component line with marks ``labels`` (default ``1..n``) at ``points``."""
        labels = list(labels) if labels is not None else list(range(1, len(points) + 1))
        tree = MarkedLevelTree.trivial(labels)
        return cls.create(tree, {}, {0: dict(zip(labels, points))}, scale_mode)

    # ------------------------------------------------------------------
    def positions(self, v: int) -> dict:
        """Positions on component ``v`` keyed by child id or mark label."""
        return dict(self.node_config[v]) if self.tree.children(v) else dict(self.mark_config[v])

    def anchors(self) -> tuple[tuple[int, int], ...]:
        return canonical_anchors(self.tree)

    def _point_key(self, label: int) -> tuple[int, int]:
        """(terminal vertex, label) for a mark, or (vertex, vertex) for an unmarked terminal."""
        if self.tree.marks:
            return self.tree.terminal_of(label), label
        return label, label

    def node_difference(self, u: int, v: int) -> complex:
        """Difference of nodes toward terminals ``u`` and ``v`` on ``Σ_{u ∨ v}``."""
        w = join(self.tree, u, v)
        if w in (u, v):
            raise LineError(f"vertices {u} and {v} are comparable")
        pos = self.node_config[w]
        return pos[self.tree.child_toward(w, v)] - pos[self.tree.child_toward(w, u)]

    def I(self, i: int, j: int) -> complex:
        ti, _ = self._point_key(i)
        tj, _ = self._point_key(j)
        if ti == tj:
            pos = self.mark_config[ti]
            return pos[j] - pos[i]
        return self.node_difference(ti, tj)

    # ------------------------------------------------------------------
    def normalize(self, scale_mode: str | None = None) -> "MultiscaleLine":
        """Bring the configuration to the normal form of ``scale_mode``.

        Converting to a mode that remembers more than the current one (for
        example from complex projective to real oriented) is refused, since
        the lost phases cannot be recovered.
        """
        mode = scale_mode or self.scale_mode
        if mode not in SCALE_MODES:
            raise LineError(f"unknown scale mode {mode!r}")
        if _RANK[mode] > _RANK[self.scale_mode]:
            raise LineError(f"cannot refine a {self.scale_mode} line to {mode}")
        tree = self.tree
        nodes: dict[int, dict[int, complex]] = {}
        marks: dict[int, dict[int, complex]] = {}
        for v in range(tree.n_vertices):
            kids = tree.children(v)
            if kids:
                base_child = min(kids, key=lambda c: _rep(tree, c))
                z0 = self.node_config[v][base_child]
                nodes[v] = {c: z - z0 for c, z in self.node_config[v].items()}
            else:
                pos = self.mark_config[v]
                z0 = pos[min(pos)] if pos else 0j
                marks[v] = {i: z - z0 for i, z in pos.items()}
        line = MultiscaleLine(tree, nodes, marks, mode)
        if mode == "absolute" or tree.depth == 0:
            return line
        for m, (i, j) in enumerate(canonical_anchors(tree), start=1):
            s = line.I(i, j)
            factor = 1.0 / s if mode == "complex_projective" else 1.0 / abs(s)
            for v in range(tree.n_vertices):
                if tree.level[v] == m:
                    nodes[v] = {c: z * factor for c, z in nodes[v].items()}
        return MultiscaleLine(tree, nodes, marks, mode)

    # ------------------------------------------------------------------
    def to_json(self) -> dict:
        def enc(z: complex) -> list[float]:
            return [float(z.real), float(z.imag)]

        return {
            "tree": self.tree.to_json(),
            "node_config": {str(v): {str(c): enc(z) for c, z in sorted(m.items())}
                            for v, m in sorted(self.node_config.items())},
            "mark_config": {str(v): {str(i): enc(z) for i, z in sorted(m.items())}
                            for v, m in sorted(self.mark_config.items())},
            "scale_mode": self.scale_mode,
        }

    @classmethod
    def from_json(cls, data: Mapping, *, normalize: bool = True) -> "MultiscaleLine":
        tree = MarkedLevelTree.from_json(data["tree"])

        def dec(pair) -> complex:
            return complex(float(pair[0]), float(pair[1]))

        nodes = {int(v): {int(c): dec(z) for c, z in m.items()} for v, m in data.get("node_config", {}).items()}
        marks = {int(v): {int(i): dec(z) for i, z in m.items()} for v, m in data.get("mark_config", {}).items()}
        return cls.create(tree, nodes, marks, data.get("scale_mode", "complex_projective"), normalize=normalize)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ----------------------------------------------------------------------
# periods and orders
# ----------------------------------------------------------------------
def period_I(line: MultiscaleLine, i: int, j: int) -> complex:
    """``I_ij``: the period between marks ``i`` and ``j`` on their join component."""
    if i == j:
        raise LineError("period_I needs two distinct marks")
    return line.I(i, j)


def period_Pi(line: MultiscaleLine, i: int, j: int) -> complex | float:
    """``Π_ij``: the mark difference when both marks share a terminal, else ``inf``."""
    if i == j:
        raise LineError("period_Pi needs two distinct marks")
    if line.tree.terminal_of(i) != line.tree.terminal_of(j):
        return math.inf
    return line.I(i, j)


def normalized_period(line: MultiscaleLine, u: int, v: int) -> complex:
    """The unit complex number ``𝔭(u, v)`` for tree-incomparable vertices."""
    d = line.node_difference(u, v)
    return d / abs(d)


def leq_dir(line: MultiscaleLine, zeta: complex, t: float, v: int, w: int, *,
            tol: float = SIGN_TOL) -> bool:
    """The directional order ``v ≤_{ζ,t} w`` on terminal vertices."""
    if v == w:
        return True
    q = normalized_period(line, v, w) / zeta
    if math.isinf(t):
        return abs(q - 1) <= tol
    c = t / math.pi
    return (q * complex(1, c)).real > tol and (q * complex(1, -c)).real > tol


def leq_lex(line: MultiscaleLine, u: int, v: int, *, zeta: complex = 1, tol: float = SIGN_TOL) -> bool:
    """The lexicographic total order; ``zeta`` rotates the reference direction.

    With ``zeta = 1``: ``u ≤ v`` iff ``u ≤_{1,0} v``, or the two are
    ``≤_{1,0}``-incomparable and ``u ≤_{i,∞} v``.  In general the directions
    ``zeta`` and ``i * zeta`` play the roles of ``1`` and ``i``.
    """
    if u == v:
        return True
    q = normalized_period(line, u, v) / zeta
    if q.real > tol:
        return True
    return abs(q.real) <= tol and q.imag > 0


def _sign(x: float, tol: float = SIGN_TOL) -> int:
    return 0 if abs(x) <= tol else (1 if x > 0 else -1)


def signature(line: MultiscaleLine) -> dict[tuple[int, int], tuple[int, int]]:
    """``(sign Re 𝔭, sign Im 𝔭)`` for every ordered pair of distinct terminals."""
    out = {}
    for u, v in itertools.permutations(line.tree.terminals, 2):
        p = normalized_period(line, u, v)
        out[(u, v)] = (_sign(p.real), _sign(p.imag))
    return out


def gl2_act(line: MultiscaleLine, g: Sequence[Sequence[float]]) -> MultiscaleLine:
    """Apply a real invertible 2x2 matrix to every configuration point."""
    (a, b), (c, d) = g
    if a * d - b * c == 0:
        raise LineError("matrix is singular")

    def act(z: complex) -> complex:
        return complex(a * z.real + b * z.imag, c * z.real + d * z.imag)

    nodes = {v: {k: act(z) for k, z in m.items()} for v, m in line.node_config.items()}
    marks = {v: {k: act(z) for k, z in m.items()} for v, m in line.mark_config.items()}
    rough = MultiscaleLine(line.tree, nodes, marks, "absolute")
    return rough.normalize(line.scale_mode)


def _close(x: complex, y: complex, tol: float) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def is_isomorphic(a: MultiscaleLine, b: MultiscaleLine, mode: str = "complex_projective", *,
                  tol: float = REL_TOL) -> bool:
    """Compare normal forms in ``mode``.

    Vertices are matched by a mark-preserving tree isomorphism; for marked
    stable trees this matching is unique.
    """
    phi = find_isomorphism(a.tree, b.tree)
    if phi is None:
        return False
    na, nb = a.normalize(mode), b.normalize(mode)
    for v, pos in na.node_config.items():
        other = nb.node_config[phi[v]]
        for c, z in pos.items():
            if not _close(z, other[phi[c]], tol):
                return False
    for v, pos in na.mark_config.items():
        other = nb.mark_config[phi[v]]
        for i, z in pos.items():
            if not _close(z, other[i], tol):
                return False
    return True


def descendent(line: MultiscaleLine, v: int) -> MultiscaleLine:
    """The sub-line below ``v``, with ``v`` as root and levels relabelled contiguously."""
    tree = line.tree
    sub = tree.subtree(v)
    rank = {lvl: k for k, lvl in enumerate(sorted({tree.level[u] for u in sub}))}
    parent = {u: (tree.parent[u] if u != v else u) for u in sub}
    level = {u: rank[tree.level[u]] for u in sub}
    marks = {lab: w for lab, w in tree.marks if w in set(sub)}
    new_tree, relabel = MarkedLevelTree.build(parent, level, marks)
    nodes = {relabel[u]: {relabel[c]: z for c, z in line.node_config[u].items()}
             for u in sub if tree.children(u)}
    mk = {relabel[u]: dict(line.mark_config[u]) for u in sub if not tree.children(u)}
    return MultiscaleLine.create(new_tree, nodes, mk, line.scale_mode)


def random_line(rng, tree: MarkedLevelTree, scale_mode: str = "complex_projective",
                spread: float = 1.0) -> MultiscaleLine:
    """Random Gaussian positions on every component of ``tree``."""
    nodes: dict[int, dict[int, complex]] = {}
    marks: dict[int, dict[int, complex]] = {}
    for v in range(tree.n_vertices):
        keys = _keys(tree, v)
        vals = rng.normal(scale=spread, size=(len(keys), 2))
        pts = {k: complex(x, y) for k, (x, y) in zip(keys, vals)}
        if tree.children(v):
            nodes[v] = pts
        else:
            marks[v] = pts
    return MultiscaleLine.create(tree, nodes, marks, scale_mode)


def unit(theta: float) -> complex:
    """``exp(i pi theta)``."""
    return cmath.exp(1j * math.pi * theta)
