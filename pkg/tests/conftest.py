"""Shared fixtures: the small reference tree and seeded random instances."""

from fractions import Fraction

import pytest

from haarlab.filtration import build_tree, random_tree
from haarlab.marttools import Weight


def example_tree_spec(eps):
    """Three-level tree: root of mass 2, two middle atoms of mass 1, leaf
    masses (1-eps, eps, 1-eps, eps)."""
    e = Fraction(eps)
    return {
        "atoms": [
            {"id": "I", "parent": None, "measure": None},
            {"id": "J1", "parent": "I", "measure": None},
            {"id": "J2", "parent": "I", "measure": None},
            {"id": "I1", "parent": "J1", "measure": [(1 - e).numerator, (1 - e).denominator]},
            {"id": "I2", "parent": "J1", "measure": [e.numerator, e.denominator]},
            {"id": "I3", "parent": "J2", "measure": [(1 - e).numerator, (1 - e).denominator]},
            {"id": "I4", "parent": "J2", "measure": [e.numerator, e.denominator]},
        ]
    }


@pytest.fixture
def spike_tree():
    """The reference tree at eps = 1/100, rational backend."""
    return build_tree(example_tree_spec(Fraction(1, 100)))


@pytest.fixture
def spike_weight(spike_tree):
    """Weight 1 on the heavy leaves, 1/eps on the light ones."""
    return Weight(spike_tree, {"I1": 1, "I2": 100, "I3": 1, "I4": 100})


def split_tree(seed, max_depth=4, max_branching=3, measure_law=(1e-2, 1e2), max_leaves=300):
    """First random tree at or after ``seed`` with at least one real split
    (the two-sided projection bound is vacuous on pure chains)."""
    for probe in range(seed, seed + 200):
        t = random_tree(
            seed=probe,
            max_depth=max_depth,
            max_branching=max_branching,
            measure_law=measure_law,
        )
        if t.splitting_atoms() and t.n_leaves <= max_leaves:
            return t
    raise AssertionError("no split tree found in 200 probes")
