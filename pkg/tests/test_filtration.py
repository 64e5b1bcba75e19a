from fractions import Fraction

import pytest

from haarlab.errors import (
    CyclicStructure,
    MassMismatch,
    NonPositiveMeasure,
    ParseError,
    UnknownAtom,
)
from haarlab.filtration import atoms_below, build_tree, merge_forest, random_tree

from conftest import example_tree_spec, split_tree


def test_two_leaf_additivity():
    f = build_tree(
        {
            "atoms": [
                {"id": "r", "parent": None, "measure": None},
                {"id": "l1", "parent": "r", "measure": [1, 2]},
                {"id": "l2", "parent": "r", "measure": [1, 2]},
            ]
        }
    )
    assert f.depth == 2
    assert f.mass("r") == 1
    assert f.backend == "rational"


def test_example_tree_builds(spike_tree):
    assert len(spike_tree) == 7
    assert spike_tree.mass("I") == 2
    assert spike_tree.mass("J1") == 1
    assert spike_tree.leaf_ids == ("I1", "I2", "I3", "I4")


def test_zero_measure_leaf_rejected():
    spec = {
        "atoms": [
            {"id": "r", "parent": None, "measure": None},
            {"id": "a", "parent": "r", "measure": 0},
            {"id": "b", "parent": "r", "measure": 1},
        ]
    }
    with pytest.raises(NonPositiveMeasure):
        build_tree(spec)


def test_mass_mismatch_rejected():
    spec = {
        "atoms": [
            {"id": "r", "parent": None, "measure": 5},
            {"id": "a", "parent": "r", "measure": 1},
            {"id": "b", "parent": "r", "measure": 1},
        ]
    }
    with pytest.raises(MassMismatch):
        build_tree(spec)


def test_cycle_rejected():
    spec = {
        "atoms": [
            {"id": "r", "parent": None, "measure": 1},
            {"id": "a", "parent": "b", "measure": 1},
            {"id": "b", "parent": "a", "measure": 1},
        ]
    }
    with pytest.raises(CyclicStructure):
        build_tree(spec)


def test_unknown_parent_rejected():
    spec = {"atoms": [{"id": "a", "parent": "ghost", "measure": 1}]}
    with pytest.raises(ParseError):
        build_tree(spec)


def test_atoms_below(spike_tree):
    assert atoms_below(spike_tree, "I4") == ["I4"]
    assert atoms_below(spike_tree, "I") == ["I", "J1", "I1", "I2", "J2", "I3", "I4"]
    assert atoms_below(spike_tree, "J2") == ["J2", "I3", "I4"]
    with pytest.raises(UnknownAtom):
        atoms_below(spike_tree, "nope")


def test_subtree_nesting_and_disjointness():
    t = split_tree(11)
    for aid in t.atom_ids:
        sub = set(t.subtree(aid))
        for child in t.atom(aid).children:
            assert set(t.subtree(child)) <= sub
    kids = t.atom(t.roots[0]).children
    if len(kids) >= 2:
        assert not (set(t.subtree(kids[0])) & set(t.subtree(kids[1])))


def test_random_tree_is_deterministic():
    a = random_tree(seed=7, max_depth=5, max_branching=3)
    b = random_tree(seed=7, max_depth=5, max_branching=3)
    assert a.to_json() == b.to_json()
    assert a.n_leaves <= 3 ** 5


def test_random_tree_single_atom():
    t = random_tree(seed=1, max_depth=1, max_branching=1)
    assert len(t) == 1 and t.n_leaves == 1
    assert t.atom(t.roots[0]).is_leaf


def test_random_tree_allows_chains():
    # a single-child node models an atom persisting across generations
    for seed in range(60):
        t = random_tree(seed=seed, max_depth=4, max_branching=3)
        if any(len(t.atom(a).children) == 1 for a in t.atom_ids):
            return
    raise AssertionError("no chain node in 60 random trees")


def test_random_tree_reaches_non_doubling_regime():
    # seed search frozen: the first seed whose tree has a sibling mass
    # ratio above 100 under the wide law
    accepted = None
    for seed in range(50):
        t = random_tree(seed=seed, max_depth=4, max_branching=4, measure_law=(1e-3, 1e3))
        for aid in t.atom_ids:
            kids = t.atom(aid).children
            if len(kids) >= 2:
                masses = sorted(float(t.mass(c)) for c in kids)
                if masses[-1] / masses[0] > 100:
                    accepted = seed
                    break
        if accepted is not None:
            break
    assert accepted == 0, f"expected the search to accept seed 0, got {accepted}"


def test_mass_telescoping_float():
    for seed in range(12):
        t = random_tree(seed=seed, max_depth=5, max_branching=3, measure_law=(1e-3, 1e3))
        for aid in t.atom_ids:
            kids = t.atom(aid).children
            if kids:
                total = sum(t.mass(c) for c in kids)
                assert abs(total - t.mass(aid)) <= 1e-12 * float(t.mass(aid))


def test_serialization_roundtrip_exact(spike_tree):
    again = build_tree(spike_tree.to_spec())
    assert again.to_json() == spike_tree.to_json()
    assert again.atom_ids == spike_tree.atom_ids  # depth-first order is stable
    assert [again.mass(a) for a in again.atom_ids] == [
        spike_tree.mass(a) for a in spike_tree.atom_ids
    ]


def test_leaf_measures_only_spec():
    spec = example_tree_spec(Fraction(1, 4))
    spec["leaf_measures_only"] = True
    f = build_tree(spec)
    assert f.mass("I") == 2


def test_merge_forest():
    a = build_tree(example_tree_spec(Fraction(1, 10)))
    b = build_tree(example_tree_spec(Fraction(1, 100)))
    forest = merge_forest([a, b])
    assert len(forest.roots) == 2
    assert len(forest) == 14
    assert forest.mass(forest.roots[0]) == 2


def test_leaf_vector_forms(spike_tree):
    assert spike_tree.leaf_vector(3) == [3, 3, 3, 3]
    assert spike_tree.leaf_vector({"I2": 5}) == [0, 5, 0, 0]
    with pytest.raises(ParseError):
        spike_tree.leaf_vector([1, 2, 3])
    with pytest.raises(UnknownAtom):
        spike_tree.leaf_vector({"J1": 1})  # not a leaf
