"""Rooted level trees with markings and the contraction calculus.

A :class:`MarkedLevelTree` is the combinatorial skeleton of a multiscale
line: a rooted tree whose vertices carry integer levels ``0..ell`` with the
root alone on level ``ell`` and the terminal (leaf) vertices exactly on level
``0``.  Marks are integer labels attached to terminal vertices.

Vertex ids are always ``0..N-1`` in breadth-first order from the root, with
children visited in increasing order of a deterministic key supplied at
construction time.  Because a BFS order lists ancestors before descendants,
the smallest id in any connected set of vertices is its top vertex; the
contraction code relies on this.

Contractions are determined by the set of deleted levels.  Deleting level
``m`` merges levels ``m - 1`` and ``m``; the fibres of the induced vertex map
are the connected components of the subgraph spanned by edges whose two
endpoints land on the same target level.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

__all__ = [
    "MarkedLevelTree",
    "Contraction",
    "join",
    "contract_levels",
    "compose",
    "enumerate_coarsenings",
    "dagger",
    "check_specialization",
    "find_isomorphism",
    "random_tree",
]


class TreeError(ValueError):
    """Raised when tree data violates a structural invariant."""


@dataclass(frozen=True)
class MarkedLevelTree:
    """An immutable rooted level tree.

    Attributes
    ----------
    parent:
        ``parent[v]`` is the parent id of ``v``; the root (id 0) is its own
        parent.
    level:
        ``level[v]`` in ``0..ell``.
    marks:
        Sorted tuple of ``(label, vertex)`` pairs.  Labels are distinct
        integers; vertices must be terminal.
    """

    parent: tuple[int, ...]
    level: tuple[int, ...]
    marks: tuple[tuple[int, int], ...] = ()

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------
    @classmethod
    def build(
        cls,
        parent: Mapping[object, object] | Sequence[int],
        level: Mapping[object, int] | Sequence[int],
        marks: Mapping[int, object] | None = None,
        *,
        stable: bool = False,
        strict: bool = True,
        order_key: Mapping[object, object] | None = None,
    ) -> tuple["MarkedLevelTree", dict]:
        """Build a tree from arbitrary vertex names.

        ``parent`` maps every vertex to its parent, with the root mapped to
        itself.  Returns the tree together with the relabelling
        ``{old_name: new_id}``.  Children are visited in BFS order sorted by
        ``order_key[child]`` when given, else by the smallest mark below the
        child, falling back to the original name.
        """
        if not isinstance(parent, Mapping):
            parent = dict(enumerate(parent))
        if not isinstance(level, Mapping):
            level = dict(enumerate(level))
        marks = dict(marks or {})
        names = list(parent)
        if set(level) != set(names):
            raise TreeError("parent and level must be defined on the same vertices")
        roots = [v for v in names if parent[v] == v]
        if len(roots) != 1:
            raise TreeError(f"expected exactly one root, found {len(roots)}")
        root = roots[0]
        children: dict[object, list] = {v: [] for v in names}
        for v in names:
            if v != root:
                if parent[v] not in children:
                    raise TreeError(f"unknown parent {parent[v]!r} of vertex {v!r}")
                children[parent[v]].append(v)

        below: dict[object, float] = {}
        marks_at: dict[object, list[int]] = {v: [] for v in names}
        for lab, v in marks.items():
            if v not in marks_at:
                raise TreeError(f"mark {lab} placed on unknown vertex {v!r}")
            marks_at[v].append(lab)

        def min_mark(v) -> float:
            if v in below:
                return below[v]
            best = min(marks_at[v], default=float("inf"))
            for c in children[v]:
                best = min(best, min_mark(c))
            below[v] = best
            return best

        def key(v):
            if order_key is not None:
                return (order_key[v],)
            return (min_mark(v), str(v))

        order: list = []
        seen = {root}
        queue = deque([root])
        while queue:
            v = queue.popleft()
            order.append(v)
            for c in sorted(children[v], key=key):
                if c in seen:
                    raise TreeError("parent map contains a cycle")
                seen.add(c)
                queue.append(c)
        if len(order) != len(names):
            raise TreeError("parent map is not connected to the root")
        relabel = {v: i for i, v in enumerate(order)}
        par = tuple(relabel[parent[v]] for v in order)
        lev = tuple(int(level[v]) for v in order)
        mk = tuple(sorted((int(lab), relabel[v]) for lab, v in marks.items()))
        tree = cls(par, lev, mk)
        tree.validate(stable=stable, strict=strict)
        return tree, relabel

    @classmethod
    def trivial(cls, labels: Iterable[int] = ()) -> "MarkedLevelTree":
        """One-vertex tree carrying the given marks."""
        return cls((0,), (0,), tuple((int(i), 0) for i in sorted(labels)))

    def validate(self, *, stable: bool = False, strict: bool = True) -> None:
        """Check the level-tree invariants, raising :class:`TreeError`.

        ``strict`` enforces the valence condition (root and every
        non-terminal vertex have at least two children).  ``stable`` also
        requires a mark on every terminal vertex.
        """
        n = len(self.parent)
        if n == 0 or len(self.level) != n:
            raise TreeError("empty tree or mismatched level vector")
        if self.parent[0] != 0:
            raise TreeError("vertex 0 must be the root")
        for v in range(1, n):
            p = self.parent[v]
            if not 0 <= p < v:
                raise TreeError("vertex ids must be in BFS order")
            if self.level[v] >= self.level[p]:
                raise TreeError(f"level must increase toward the root at vertex {v}")
        top = self.level[0]
        if set(self.level) != set(range(top + 1)):
            raise TreeError("every level between 0 and the root level must be occupied")
        kids = self.children_map
        for v in range(n):
            if (self.level[v] == 0) != (len(kids[v]) == 0):
                raise TreeError(f"vertex {v}: level 0 must coincide with being a leaf")
        labels = [lab for lab, _ in self.marks]
        if len(set(labels)) != len(labels):
            raise TreeError("mark labels must be distinct")
        for lab, v in self.marks:
            if not 0 <= v < n or self.level[v] != 0:
                raise TreeError(f"mark {lab} must sit on a terminal vertex")
        if stable:
            marked = {v for _, v in self.marks}
            for v in self.terminals:
                if v not in marked:
                    raise TreeError(f"terminal vertex {v} carries no mark")
        if strict:
            for v in range(n):
                if kids[v] and len(kids[v]) < 2:
                    raise TreeError(f"non-terminal vertex {v} has fewer than two children")

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    @property
    def depth(self) -> int:
        """The number of levels above 0, written ``ell``."""
        return self.level[0]

    @property
    def children_map(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.parent]
        for v in range(1, len(self.parent)):
            kids[self.parent[v]].append(v)
        return tuple(tuple(k) for k in kids)

    def children(self, v: int) -> tuple[int, ...]:
        self._check_vertex(v)
        return self.children_map[v]

    @property
    def terminals(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.n_vertices) if self.level[v] == 0)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(lab for lab, _ in self.marks)

    def terminal_of(self, label: int) -> int:
        for lab, v in self.marks:
            if lab == label:
                return v
        raise KeyError(f"unknown mark {label}")

    def marks_on(self, v: int) -> tuple[int, ...]:
        return tuple(lab for lab, w in self.marks if w == v)

    def root_path(self, v: int) -> tuple[int, ...]:
        """Vertices from ``v`` up to and including the root."""
        self._check_vertex(v)
        path = [v]
        while path[-1] != 0:
            path.append(self.parent[path[-1]])
        return tuple(path)

    def is_below(self, u: int, v: int) -> bool:
        """True iff ``u`` lies in the subtree of ``v`` (``u ⊆ v``)."""
        return v in self.root_path(u)

    def subtree(self, v: int) -> tuple[int, ...]:
        self._check_vertex(v)
        kids = self.children_map
        out = [v]
        i = 0
        while i < len(out):
            out.extend(kids[out[i]])
            i += 1
        return tuple(sorted(out))

    def marks_below(self, v: int) -> tuple[int, ...]:
        sub = set(self.subtree(v))
        return tuple(lab for lab, w in self.marks if w in sub)

    def child_toward(self, v: int, u: int) -> int:
        """The child of ``v`` whose subtree contains ``u`` (``u`` strictly below ``v``)."""
        path = self.root_path(u)
        if v not in path or v == u:
            raise TreeError(f"vertex {u} is not strictly below {v}")
        return path[path.index(v) - 1]

    def _check_vertex(self, v: int) -> None:
        if not isinstance(v, (int,)) or not 0 <= v < len(self.parent):
            raise KeyError(f"unknown vertex {v!r}")

    # ------------------------------------------------------------------
    # canonical forms, export
    # ------------------------------------------------------------------
    def canonical_form(self, v: int = 0) -> str:
        """A string equal for two trees iff they are isomorphic (marks respected)."""
        kids = self.children_map
        memo: dict[int, str] = {}

        def canon(u: int) -> str:
            if u in memo:
                return memo[u]
            inner = ",".join(sorted(canon(c) for c in kids[u]))
            mk = ",".join(str(x) for x in sorted(self.marks_on(u)))
            memo[u] = f"({self.level[u]}|{mk}|{inner})"
            return memo[u]

        return canon(v)

    def to_json(self) -> dict:
        return {
            "vertices": [
                {"id": v, "parent": self.parent[v], "level": self.level[v]}
                for v in range(self.n_vertices)
            ],
            "marks": {str(lab): v for lab, v in self.marks},
        }

    @classmethod
    def from_json(cls, data: Mapping, *, stable: bool = False, strict: bool = True) -> "MarkedLevelTree":
        verts = data["vertices"]
        parent = {int(d["id"]): int(d["parent"]) for d in verts}
        level = {int(d["id"]): int(d["level"]) for d in verts}
        marks = {int(k): int(v) for k, v in data.get("marks", {}).items()}
        ids = sorted(parent)
        tree = cls(tuple(parent[i] for i in ids), tuple(level[i] for i in ids),
                   tuple(sorted(marks.items())))
        if ids != list(range(len(ids))):
            raise TreeError("vertex ids must be 0..N-1")
        tree.validate(stable=stable, strict=strict)
        return tree

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def to_dot(self, name: str = "levels") -> str:
        """Graphviz source with one ``rank=same`` group per level."""
        lines = [f"digraph {name} {{", "  rankdir=TB;"]
        for lvl in range(self.depth, -1, -1):
            members = [v for v in range(self.n_vertices) if self.level[v] == lvl]
            lines.append(f"  {{ rank=same; " + " ".join(f"v{v};" for v in members) + " }")
        for v in range(self.n_vertices):
            mk = self.marks_on(v)
            label = f"{v}" + (f"\\n{{{','.join(map(str, mk))}}}" if mk else "")
            shape = "box" if self.level[v] == 0 else "ellipse"
            lines.append(f'  v{v} [label="{label}", shape={shape}];')
        for v in range(1, self.n_vertices):
            lines.append(f"  v{self.parent[v]} -> v{v};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def join(tree: MarkedLevelTree, u: int, v: int) -> int:
    """The first common vertex of the root paths of ``u`` and ``v``."""
    pu = tree.root_path(u)
    pv = set(tree.root_path(v))
    for w in pu:
        if w in pv:
            return w
    raise AssertionError("root paths always meet at the root")


def find_isomorphism(a: MarkedLevelTree, b: MarkedLevelTree) -> dict[int, int] | None:
    """A mark- and level-preserving isomorphism ``a -> b``, or ``None``."""
    if a.canonical_form() != b.canonical_form():
        return None
    ka, kb = a.children_map, b.children_map
    mapping = {0: 0}
    stack = [(0, 0)]
    while stack:
        u, w = stack.pop()
        ca = sorted(ka[u], key=a.canonical_form)
        cb = sorted(kb[w], key=b.canonical_form)
        for x, y in zip(ca, cb):
            mapping[x] = y
            stack.append((x, y))
    return mapping


@dataclass(frozen=True)
class Contraction:
    """The canonical contraction of ``source`` deleting ``deleted_levels``."""

    source: MarkedLevelTree
    target: MarkedLevelTree
    vertex_map: tuple[int, ...]
    deleted_levels: tuple[int, ...]

    def alpha(self, m: int) -> int:
        """The order-preserving surjection on levels ``[ell] -> [ell - |S|]``."""
        return m - sum(1 for d in self.deleted_levels if d <= m)

    def fiber(self, w: int) -> tuple[int, ...]:
        return tuple(v for v, x in enumerate(self.vertex_map) if x == w)

    def level_fiber(self, k: int) -> tuple[int, ...]:
        """Source levels sent to target level ``k``."""
        return tuple(m for m in range(self.source.depth + 1) if self.alpha(m) == k)

    def __call__(self, v: int) -> int:
        return self.vertex_map[v]


def contract_levels(tree: MarkedLevelTree, levels: Iterable[int]) -> Contraction:
    """The canonical contraction deleting ``levels`` (a subset of ``1..ell``)."""
    deleted = tuple(sorted(set(int(m) for m in levels)))
    for m in deleted:
        if not 1 <= m <= tree.depth:
            raise TreeError(f"cannot delete level {m}; valid levels are 1..{tree.depth}")

    def alpha(m: int) -> int:
        return m - sum(1 for d in deleted if d <= m)

    n = tree.n_vertices
    top = list(range(n))

    # Vertices are in BFS order, so parents are processed first and each
    # vertex either joins its parent's component or starts its own.
    for v in range(1, n):
        p = tree.parent[v]
        if alpha(tree.level[v]) == alpha(tree.level[p]):
            top[v] = top[p]
    comps = sorted(set(top))
    parent = {c: (top[tree.parent[c]] if c != 0 else 0) for c in comps}
    level = {c: alpha(tree.level[c]) for c in comps}
    marks = {lab: top[v] for lab, v in tree.marks}
    target, relabel = MarkedLevelTree.build(
        parent, level, marks, strict=False, order_key={c: c for c in comps}
    )
    vmap = tuple(relabel[top[v]] for v in range(n))
    return Contraction(tree, target, vmap, deleted)


def compose(c1: Contraction, c2: Contraction) -> Contraction:
    """The contraction ``c2 ∘ c1`` (first ``c1``, then ``c2``)."""
    if c1.target != c2.source:
        raise TreeError("cannot compose: target of the first contraction differs from source of the second")
    src = c1.source
    deleted = [m for m in range(1, src.depth + 1)
               if c2.alpha(c1.alpha(m)) == c2.alpha(c1.alpha(m - 1))]
    result = contract_levels(src, deleted)
    composite = tuple(c2.vertex_map[c1.vertex_map[v]] for v in range(src.n_vertices))

    def partition(vm: Sequence[int]) -> set[frozenset[int]]:
        groups: dict[int, set[int]] = {}
        for v, w in enumerate(vm):
            groups.setdefault(w, set()).add(v)
        return {frozenset(g) for g in groups.values()}

    if partition(composite) != partition(result.vertex_map):
        raise AssertionError("composite fibres disagree with the canonical contraction")
    return result


def enumerate_coarsenings(tree: MarkedLevelTree) -> list[Contraction]:
    """All ``2**ell`` canonical contractions, ordered by deleted set size then lexicographically."""
    ell = tree.depth
    out = []
    for k in range(ell + 1):
        for subset in itertools.combinations(range(1, ell + 1), k):
            out.append(contract_levels(tree, subset))
    return out


def dagger(c: Contraction, w: int) -> int:
    """The top vertex of the fibre over ``w``."""
    fib = c.fiber(w)
    if not fib:
        raise KeyError(f"unknown target vertex {w!r}")
    # BFS order: the smallest id in a connected fibre is its maximum under ⊆.
    return min(fib)


def check_specialization(c: Contraction) -> list[str]:
    """Return the violated specialization conditions (empty when all hold).

    Checked: the level preorder and the containment order are preserved,
    adjacent vertices go to equal or adjacent vertices, fibres are connected,
    and joins of terminal vertices are preserved.
    """
    src, tgt, f = c.source, c.target, c.vertex_map
    problems: list[str] = []
    n = src.n_vertices
    for u in range(n):
        for v in range(n):
            if src.level[u] <= src.level[v] and not tgt.level[f[u]] <= tgt.level[f[v]]:
                problems.append(f"level preorder broken at ({u},{v})")
    for u in range(n):
        for v in src.root_path(u):
            if not tgt.is_below(f[u], f[v]):
                problems.append(f"containment broken at ({u},{v})")
    for v in range(1, n):
        a, b = f[v], f[src.parent[v]]
        if a != b and tgt.parent[a] != b:
            problems.append(f"edge ({src.parent[v]},{v}) not sent to an edge or a vertex")
    for w in range(tgt.n_vertices):
        fib = set(c.fiber(w))
        if not fib:
            problems.append(f"target vertex {w} has empty fibre")
            continue
        tops = [v for v in fib if v == 0 or src.parent[v] not in fib]
        if len(tops) != 1:
            problems.append(f"fibre over {w} is disconnected")
    terms = src.terminals
    for u in terms:
        for v in terms:
            if f[join(src, u, v)] != join(tgt, f[u], f[v]):
                problems.append(f"join of ({u},{v}) not preserved")
    for lab, v in src.marks:
        if tgt.terminal_of(lab) != f[v]:
            problems.append(f"mark {lab} not carried along")
    return problems


def random_tree(rng, n_marks: int, max_depth: int, *, labels: Sequence[int] | None = None) -> MarkedLevelTree:
    """A random stable marked level tree with at most ``max_depth`` levels.

    Marks are split into random terminal clusters; then each round merges a
    random grouping of the current components into new vertices of the next
    level, the final round merging everything into the root.
    """
    labels = list(labels) if labels is not None else list(range(1, n_marks + 1))
    shuffled = list(labels)
    rng.shuffle(shuffled)
    n_terms = int(rng.integers(1, len(shuffled) + 1)) if max_depth > 0 else 1
    cuts = sorted(rng.choice(range(1, len(shuffled)), size=n_terms - 1, replace=False)) if n_terms > 1 else []
    blocks = [shuffled[i:j] for i, j in zip([0, *cuts], [*cuts, len(shuffled)])]
    parent: dict[int, int] = {}
    level: dict[int, int] = {}
    marks: dict[int, int] = {}
    comps = []
    for b, block in enumerate(blocks):
        level[b] = 0
        for lab in block:
            marks[lab] = b
        comps.append(b)
    next_id = len(blocks)
    lvl = 0
    while len(comps) > 1:
        lvl += 1
        if lvl == max_depth or len(comps) == 2:
            groups = [list(comps)]
        else:
            ngroups = int(rng.integers(1, len(comps)))
            assign = rng.integers(0, ngroups, size=len(comps))
            groups = [[c for c, a in zip(comps, assign) if a == g] for g in range(ngroups)]
            groups = [g for g in groups if g]
            if all(len(g) < 2 for g in groups):
                i, j = rng.choice(len(comps), size=2, replace=False)
                rest = [c for k, c in enumerate(comps) if k not in (i, j)]
                groups = [[comps[i], comps[j]]] + [[c] for c in rest]
        new_comps = []
        for g in groups:
            if len(g) == 1:
                new_comps.append(g[0])
                continue
            level[next_id] = lvl
            for c in g:
                parent[c] = next_id
            new_comps.append(next_id)
            next_id += 1
        comps = new_comps
    parent[comps[0]] = comps[0]
    tree, _ = MarkedLevelTree.build(parent, level, marks, stable=True)
    return tree
