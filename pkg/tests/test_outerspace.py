import math
import random
from fractions import Fraction

import numpy as np
import pytest

from haarlab import carleson as cl
from haarlab import marttools as mt
from haarlab import outerspace as osp
from haarlab.errors import UnsupportedSize, ZeroMass
from haarlab.filtration import random_tree

from conftest import split_tree


def small_tree(seed):
    for probe in range(seed, seed + 100):
        t = random_tree(probe, max_depth=3, max_branching=2, measure_law=(0.1, 10))
        if len(t) <= 12 and t.splitting_atoms():
            return t
    raise AssertionError("no small tree found")


# -- outer lifting ------------------------------------------------------------


def test_outer_measure_of_full_subtree(spike_tree):
    for aid in spike_tree.atom_ids:
        assert osp.outer_measure(spike_tree, spike_tree.subtree(aid)) == spike_tree.mass(aid)


def test_outer_measure_empty(spike_tree):
    assert osp.outer_measure(spike_tree, []) == 0


def test_outer_measure_matches_bruteforce():
    rng = random.Random(0)
    for seed in range(10):
        t = small_tree(seed)
        for _ in range(8):
            members = [a for a in t.atom_ids if rng.random() < 0.4]
            dp = osp.outer_measure(t, members)
            bf = osp.outer_measure_bruteforce(t, members)
            if members:
                assert dp == pytest.approx(bf, rel=1e-12)
            else:
                assert dp == 0


def test_outer_measure_monotone_and_subadditive():
    t = small_tree(3)
    rng = random.Random(5)
    for _ in range(12):
        a = {x for x in t.atom_ids if rng.random() < 0.3}
        b = {x for x in t.atom_ids if rng.random() < 0.3}
        ma, mb = osp.outer_measure(t, a), osp.outer_measure(t, b)
        assert osp.outer_measure(t, a | b) <= ma + mb + 1e-12
        assert osp.outer_measure(t, a & b) <= min(ma, mb) + 1e-12


# -- sizes ----------------------------------------------------------------------


def test_size_of_constant(spike_tree):
    c = Fraction(3, 2)
    fn = {aid: c for aid in spike_tree.atom_ids}
    assert osp.size(spike_tree, fn, "I", osp.S_sup()) == c
    # power kind keeps the subtree-mass inflation factor
    total = sum(spike_tree.mass(a) for a in spike_tree.subtree("J1"))
    expected = c * total / spike_tree.mass("J1")
    assert osp.size(spike_tree, fn, "J1", osp.S_power(1)) == expected


def test_size_sup_of_indicator(spike_tree):
    fn = {"I3": 1}
    assert osp.size(spike_tree, fn, "I", osp.S_sup()) == 1
    assert osp.size(spike_tree, fn, "J2", osp.S_sup()) == 1
    assert osp.size(spike_tree, fn, "J1", osp.S_sup()) == 0


def test_size_power_two_matches_direct_sum():
    t = small_tree(4)
    rng = random.Random(1)
    fn = {aid: rng.uniform(-2, 2) for aid in t.atom_ids}
    root = t.roots[0]
    direct = math.sqrt(
        sum(fn[a] ** 2 * float(t.mass(a)) for a in t.subtree(root)) / float(t.mass(root))
    )
    assert osp.size(t, fn, root, osp.S_power(2)) == pytest.approx(direct, rel=1e-12)


def test_size_zero_mass_power_errors(spike_tree):
    dens = {"I1": 0, "I2": 0, "I3": 1, "I4": 1}
    with pytest.raises(ZeroMass):
        osp.size(spike_tree, {"J1": 1}, "J1", osp.S_power(1, dens))


# -- superlevel sets --------------------------------------------------------------


def test_superlevel_above_max_is_zero(spike_tree):
    fn = {aid: 1 for aid in spike_tree.atom_ids}
    assert osp.superlevel_outer_measure(spike_tree, fn, 2, osp.S_sup()) == 0


def test_superlevel_indicator(spike_tree):
    fn = {"I4": 1}
    val = osp.superlevel_outer_measure(spike_tree, fn, Fraction(1, 2), osp.S_sup())
    assert val == spike_tree.mass("I4")


def test_superlevel_power_unsupported(spike_tree):
    with pytest.raises(UnsupportedSize):
        osp.superlevel_outer_measure(spike_tree, {"I": 1}, 0.5, osp.S_power(2))


def test_superlevel_matches_bruteforce_sup():
    rng = random.Random(7)
    for seed in range(8):
        t = small_tree(seed + 20)
        fn = {aid: rng.uniform(-2, 2) for aid in t.atom_ids}
        for lam in (0.05, 0.4, 1.1, 1.9):
            a = osp.superlevel_outer_measure(t, fn, lam, osp.S_sup())
            b = osp.superlevel_bruteforce(t, fn, lam, osp.S_sup())
            assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


def test_superlevel_monotone_in_level():
    t = small_tree(2)
    rng = random.Random(9)
    fn = {aid: rng.uniform(0, 3) for aid in t.atom_ids}
    levels = [0.1, 0.5, 1.0, 2.0, 3.5]
    vals = [osp.superlevel_outer_measure(t, fn, l, osp.S_sup()) for l in levels]
    assert all(vals[i] >= vals[i + 1] - 1e-15 for i in range(len(vals) - 1))


# -- outer norms -------------------------------------------------------------------


def test_lp_norm_zero(spike_tree):
    assert osp.outer_lp_norm(spike_tree, 0, 2, osp.S_sup()) == 0


@pytest.mark.parametrize("p", [1, 2, 3])
def test_lp_norm_of_subtree_indicator(spike_tree, p):
    c = 2.5
    fn = {aid: c for aid in spike_tree.subtree("J2")}
    val = osp.outer_lp_norm(spike_tree, fn, p, osp.S_sup())
    assert float(val) == pytest.approx(c * float(spike_tree.mass("J2")) ** (1 / p), rel=1e-12)


def test_lp_norm_homogeneous_and_monotone():
    t = small_tree(6)
    rng = random.Random(11)
    fn = {aid: rng.uniform(-2, 2) for aid in t.atom_ids}
    base = float(osp.outer_lp_norm(t, fn, 2, osp.S_sup()))
    scaled = float(osp.outer_lp_norm(t, {k: 3 * v for k, v in fn.items()}, 2, osp.S_sup()))
    assert scaled == pytest.approx(3 * base, rel=1e-12)
    bigger = {k: v * (1 + rng.random()) for k, v in fn.items()}
    assert float(osp.outer_lp_norm(t, bigger, 2, osp.S_sup())) >= base - 1e-12


def test_lp_norm_matches_quadrature():
    t = small_tree(8)
    rng = random.Random(13)
    fn = {aid: rng.uniform(-3, 3) for aid in t.atom_ids}
    exact = float(osp.outer_lp_norm(t, fn, 2, osp.S_sup()))
    # midpoint quadrature of the step function against 2*lambda
    vmax = max(abs(v) for v in fn.values())
    grid = (np.arange(100000) + 0.5) * (vmax / 100000)
    breaks = sorted({abs(v) for v in fn.values() if v != 0})
    step_vals = np.array(
        [float(osp.superlevel_outer_measure(t, fn, b - 1e-13, osp.S_sup())) for b in breaks]
    )
    idx = np.searchsorted(breaks, grid, side="left")
    m = np.where(idx < len(breaks), step_vals[np.minimum(idx, len(breaks) - 1)], 0.0)
    quad = math.sqrt(float((2 * grid * m).sum() * (vmax / 100000)))
    assert exact == pytest.approx(quad, rel=1e-4)


def test_linf_norm_of_packing_sequence(spike_tree, spike_weight):
    tau = cl.tau_sequence(spike_tree, spike_weight)
    rep = cl.packing_constant(spike_tree, tau)
    assert float(osp.outer_linf_norm(spike_tree, tau, osp.S_power(1))) == pytest.approx(
        rep.constant, rel=1e-12
    )


def test_linf_norm_of_indicator_sup(spike_tree):
    assert osp.outer_linf_norm(spike_tree, {"J1": 1}, osp.S_sup()) == 1


# -- inequality checks -------------------------------------------------------------------


def test_duality_zero_case(spike_tree):
    res = osp.duality_check(spike_tree, {"I": 1}, 0)
    assert res.lhs == 0 and res.holds


def test_duality_indicator_case():
    t = small_tree(14)
    root = t.roots[0]
    fn = {aid: 1 for aid in t.subtree(root)}
    gn = {aid: 1 for aid in t.atom_ids}
    res = osp.duality_check(t, fn, gn)
    lhs_direct = sum(float(t.mass(a)) for a in t.subtree(root))
    assert res.lhs == pytest.approx(lhs_direct, rel=1e-12)
    assert res.holds


def test_duality_random_draws_never_violate():
    rng = random.Random(17)
    for seed in range(30):
        t = split_tree(seed + 100, max_depth=4)
        fn = {aid: rng.uniform(-3, 3) for aid in t.atom_ids}
        gn = {aid: rng.uniform(-3, 3) for aid in t.atom_ids}
        assert osp.duality_check(t, fn, gn).holds
        w = mt.random_weight(t, seed=seed)
        assert osp.duality_check(t, fn, gn, density=w.w).holds


def test_reciprocal_average_constant(spike_tree):
    res = osp.reciprocal_average_bound(spike_tree, 3, "I")
    assert res.lhs == pytest.approx(3 * 2)  # c * mass
    assert res.rhs == pytest.approx(2 * 3 * 2)


def test_reciprocal_average_spike(spike_tree, spike_weight):
    res = osp.reciprocal_average_bound(spike_tree, spike_weight.u, "I")
    assert res.holds and res.slack >= 0


def test_bilinear_embedding_cases(spike_tree, spike_weight):
    z = osp.bilinear_embedding_check(spike_tree, spike_weight, 0, 0)
    assert z.lhs == 0 and z.holds
    w1 = mt.Weight(spike_tree, 1)
    res = osp.bilinear_embedding_check(spike_tree, w1, 1, 1)
    assert res.lhs == pytest.approx(2.0)  # total mass
    assert res.rhs == pytest.approx(8.0)


def test_averaging_embedding_constant(spike_tree, spike_weight):
    res = osp.averaging_embedding_check(spike_tree, spike_weight.u, 1)
    total = float(sum(spike_weight.leaf_mass_u))
    assert res.lhs == pytest.approx(math.sqrt(total), rel=1e-12)
    assert res.rhs == pytest.approx(2 * math.sqrt(total), rel=1e-12)


def test_embedding_checks_random_draws():
    rng = random.Random(23)
    for seed in range(25):
        t = split_tree(seed + 200, max_depth=4)
        w = mt.random_weight(t, seed=seed, spread_decades=1.2)
        fn = [rng.uniform(-2, 2) for _ in range(t.n_leaves)]
        gn = [rng.uniform(-2, 2) for _ in range(t.n_leaves)]
        assert osp.bilinear_embedding_check(t, w, fn, gn).holds
        assert osp.averaging_embedding_check(t, w.u, fn).holds
        assert osp.averaging_embedding_check(t, w.w, gn).holds


# -- maximal function ----------------------------------------------------------------


def test_maximal_of_constant(spike_tree, spike_weight):
    out = osp.maximal_function(spike_tree, spike_weight.w, 4)
    assert out == [4, 4, 4, 4]


def test_maximal_of_leaf_indicator():
    t = small_tree(31)
    dens = [1.0] * t.n_leaves
    leaf = t.leaf_ids[-1]
    fn = {leaf: 1}
    out = osp.maximal_function(t, dens, fn)
    masses = mt.atom_masses(t)
    for pos, other in enumerate(t.leaf_ids):
        shared = [a for a in t.ancestors(other) if leaf in t.leaves_under(a)]
        expected = max(
            (float(t.mass(leaf)) / float(masses[a]) for a in shared), default=0.0
        )
        assert out[pos] == pytest.approx(expected, rel=1e-12)


def test_maximal_l2_bound_random():
    rng = random.Random(29)
    for seed in range(25):
        t = split_tree(seed + 300, max_depth=4)
        w = mt.random_weight(t, seed=seed)
        fn = [rng.uniform(-2, 2) for _ in range(t.n_leaves)]
        assert osp.maximal_bound_check(t, w.w, fn).holds
        assert osp.maximal_bound_check(t, None, fn).holds
