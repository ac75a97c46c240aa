from __future__ import annotations

import itertools

import pytest
from hypothesis import given

from augstab.level_tree import (
    MarkedLevelTree,
    TreeError,
    check_specialization,
    compose,
    contract_levels,
    dagger,
    enumerate_coarsenings,
    find_isomorphism,
    join,
    random_tree,
)
from conftest import rng_from, seeds


def caterpillar() -> MarkedLevelTree:
    """Root ``r`` (level 2) over ``m`` (level 1) and terminal ``c``; ``m`` over terminals ``a``, ``b``."""
    tree, _ = MarkedLevelTree.build(
        {"r": "r", "m": "r", "c": "r", "a": "m", "b": "m"},
        {"r": 2, "m": 1, "c": 0, "a": 0, "b": 0},
        {1: "a", 2: "b", 3: "c"},
        stable=True,
    )
    return tree


def ids(tree: MarkedLevelTree) -> dict[str, int]:
    a, b, c = (tree.terminal_of(i) for i in (1, 2, 3))
    return {"r": 0, "m": tree.parent[a], "a": a, "b": b, "c": c}


def test_join_examples():
    t = caterpillar()
    v = ids(t)
    assert join(t, v["a"], v["a"]) == v["a"]
    assert join(t, v["a"], v["b"]) == v["m"]
    assert join(t, v["a"], v["c"]) == v["r"]
    two, _ = MarkedLevelTree.build({"r": "r", "x": "r", "y": "r"}, {"r": 1, "x": 0, "y": 0}, {1: "x", 2: "y"})
    assert join(two, 1, 2) == 0


def test_join_unknown_vertex():
    with pytest.raises(KeyError):
        join(caterpillar(), 0, 99)


def test_identity_contraction():
    t = caterpillar()
    c = contract_levels(t, ())
    assert c.target == t
    assert c.vertex_map == tuple(range(t.n_vertices))
    assert all(dagger(c, v) == v for v in range(t.n_vertices))


def test_contract_level_one_of_caterpillar():
    t = caterpillar()
    c = contract_levels(t, {1})
    v = ids(t)
    # deleting level 1 merges the middle vertex with the terminals below it
    assert c.target.depth == 1
    assert sorted(c.target.labels) == [1, 2, 3]
    assert len(c.target.terminals) == 2
    assert c(v["m"]) == c(v["a"]) == c(v["b"]) == c.target.terminal_of(1)
    assert c.target.marks_on(c.target.terminal_of(1)) == (1, 2)
    assert dagger(c, c.target.terminal_of(1)) == v["m"]
    assert dagger(c, c.target.terminal_of(3)) == v["c"]


def test_contract_level_two_of_caterpillar():
    t = caterpillar()
    c = contract_levels(t, {2})
    v = ids(t)
    # deleting level 2 merges the root with the middle vertex: three terminals under the root
    assert c(v["m"]) == c(v["r"]) == 0
    assert len(c.target.terminals) == 3
    assert dagger(c, 0) == v["r"]


@pytest.mark.parametrize("bad", [0, 3, -1])
def test_invalid_levels(bad):
    with pytest.raises(TreeError):
        contract_levels(caterpillar(), {bad})


def test_full_contraction_dagger_root():
    t = caterpillar()
    c = contract_levels(t, {1, 2})
    assert c.target.depth == 0
    assert dagger(c, 0) == 0


def test_enumeration_small_cases():
    assert len(enumerate_coarsenings(MarkedLevelTree.trivial([1, 2]))) == 1
    t = caterpillar()
    cs = enumerate_coarsenings(t)
    assert [c.deleted_levels for c in cs] == [(), (1,), (2,), (1, 2)]


def test_compose_examples():
    t = caterpillar()
    c = contract_levels(t, {1})
    assert compose(c, contract_levels(c.target, ())).vertex_map == c.vertex_map
    # sigma_0 after sigma_1 equals the full contraction
    c1 = contract_levels(t, {2})
    both = compose(c1, contract_levels(c1.target, {1}))
    assert both.deleted_levels == (1, 2)
    other = compose(contract_levels(t, {1}), contract_levels(contract_levels(t, {1}).target, {1}))
    assert other.vertex_map == both.vertex_map == contract_levels(t, {1, 2}).vertex_map


def test_compose_mismatch():
    t = caterpillar()
    with pytest.raises(TreeError):
        compose(contract_levels(t, {1}), contract_levels(t, ()))


def test_json_and_dot():
    t = caterpillar()
    again = MarkedLevelTree.from_json(t.to_json(), stable=True)
    assert again == t
    dot = t.to_dot()
    assert dot.startswith("digraph") and dot.count("rank=same") == 3


def test_isomorphism_respects_marks():
    t = caterpillar()
    relabelled, _ = MarkedLevelTree.build(
        {"r": "r", "m": "r", "c": "r", "a": "m", "b": "m"},
        {"r": 2, "m": 1, "c": 0, "a": 0, "b": 0},
        {2: "a", 1: "b", 3: "c"},
    )
    assert find_isomorphism(t, relabelled) is not None
    swapped, _ = MarkedLevelTree.build(
        {"r": "r", "m": "r", "c": "r", "a": "m", "b": "m"},
        {"r": 2, "m": 1, "c": 0, "a": 0, "b": 0},
        {1: "a", 3: "b", 2: "c"},
    )
    assert find_isomorphism(t, swapped) is None


# ----------------------------------------------------------------------
# properties
# ----------------------------------------------------------------------
def _tree(seed: int) -> MarkedLevelTree:
    rng = rng_from(seed)
    return random_tree(rng, int(rng.integers(1, 9)), int(rng.integers(0, 5)))


@given(seeds)
def test_random_trees_are_stable_and_levels_decrease(seed):
    t = _tree(seed)
    t.validate(stable=True)
    for v in range(1, t.n_vertices):
        assert t.level[v] < t.level[t.parent[v]]


@given(seeds)
def test_enumeration_has_two_to_the_depth_members(seed):
    t = _tree(seed)
    cs = enumerate_coarsenings(t)
    assert len(cs) == 2 ** t.depth
    assert len({c.deleted_levels for c in cs}) == len(cs)


@given(seeds)
def test_specialization_conditions_and_joins(seed):
    t = _tree(seed)
    for c in enumerate_coarsenings(t):
        assert check_specialization(c) == []
        for u, v in itertools.product(t.terminals, repeat=2):
            assert c(join(t, u, v)) == join(c.target, c(u), c(v))


@given(seeds)
def test_disjoint_contractions_commute(seed):
    t = _tree(seed)
    rng = rng_from(seed + 1)
    levels = list(range(1, t.depth + 1))
    a = [m for m in levels if rng.random() < 0.5]
    b = [m for m in levels if m not in a and rng.random() < 0.5]
    ca = contract_levels(t, a)
    cb = contract_levels(t, b)
    ab = compose(ca, contract_levels(ca.target, [ca.alpha(m) for m in b]))
    ba = compose(cb, contract_levels(cb.target, [cb.alpha(m) for m in a]))
    assert ab.vertex_map == ba.vertex_map == contract_levels(t, a + b).vertex_map


@given(seeds)
def test_dagger_is_top_of_fibre(seed):
    t = _tree(seed)
    for c in enumerate_coarsenings(t):
        for w in range(c.target.n_vertices):
            top = dagger(c, w)
            assert all(t.is_below(v, top) for v in c.fiber(w))
