"""The unbounded-transform family: a rank-one block transform that every
weighted bound must exclude.

One block lives on a three-level tree (a root of mass 2, two middle atoms
of mass 1, and leaf masses 1-e, e, 1-e, e); the weight is 1 on the large
leaves and 1/e on the small ones.  The transform pairs a coarse Haar
function against a fine one, so it is diagonal in the martingale
decomposition with operator blocks (a transform) but is not a multiplier,
and its weighted norm grows like 1/sqrt(e) while the weight's
characteristic stays below 2.  All claimed inequalities are verified in
exact arithmetic on squared quantities when e is rational.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import EpsilonOutOfRange
from .filtration import Filtration, build_tree, merge_forest
from .marttools import (
    Weight,
    a2_characteristic,
    difference_matrix,
    operator_norm,
)
from .numutil import Number, fsqrt, is_exact


@dataclass
class CounterexampleInstance:
    epsilon: Number
    filtration: Filtration
    weight: Weight
    h1: list
    h2: list

    @property
    def transform_matrix(self) -> np.ndarray:
        """Rank-one map f -> (f, h1) h2, with the pairing against the base
        measure."""
        f = self.filtration
        row = np.array(
            [float(v) * float(m) for v, m in zip(self.h1, f.leaf_masses)]
        )
        col = np.array([float(v) for v in self.h2])
        return np.outer(col, row)


def build_instance(epsilon) -> CounterexampleInstance:
    """Build one block; exact when epsilon is rational."""
    if not 0 < epsilon < Fraction(1, 2):
        raise EpsilonOutOfRange(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
    e = Fraction(epsilon) if is_exact(epsilon) else epsilon
    spec = {
        "atoms": [
            {"id": "I", "parent": None, "measure": None},
            {"id": "J1", "parent": "I", "measure": None},
            {"id": "J2", "parent": "I", "measure": None},
            {"id": "I1", "parent": "J1", "measure": _num(1 - e)},
            {"id": "I2", "parent": "J1", "measure": _num(e)},
            {"id": "I3", "parent": "J2", "measure": _num(1 - e)},
            {"id": "I4", "parent": "J2", "measure": _num(e)},
        ]
    }
    f = build_tree(spec)
    w = Weight(f, {"I1": 1, "I2": 1 / e, "I3": 1, "I4": 1 / e})
    # h1 is coarse: constant +-1/sqrt(2) on the middle atoms; h2 is fine:
    # supported on the first middle atom, mean zero there
    sqrt2 = fsqrt(2)
    h1 = [1 / sqrt2, 1 / sqrt2, -1 / sqrt2, -1 / sqrt2]
    if is_exact(e):
        root_e = _exact_sqrt(e)
        if root_e is not None:
            h2 = [-root_e / (1 - e), 1 / root_e, 0, 0]
        else:
            h2 = [-fsqrt(e) / (1 - e), 1 / fsqrt(e), 0, 0]
    else:
        h2 = [-fsqrt(e) / (1 - e), 1 / fsqrt(e), 0, 0]
    return CounterexampleInstance(epsilon=e, filtration=f, weight=w, h1=h1, h2=h2)


def _num(x):
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    return x


def _exact_sqrt(x: Fraction) -> Optional[Fraction]:
    x = Fraction(x)
    import math

    rn = math.isqrt(x.numerator)
    rd = math.isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    return None


# squared quantities, exact for rational epsilon ------------------------------


def h1_norm_sq(e) -> Number:
    """Base-measure norm squared of the coarse Haar function: half the
    total mass, which is exactly 1."""
    half = Fraction(1, 2) if is_exact(e) else 0.5
    return half * (2 * (1 - e) + 2 * e)


def h2_norm_sq(e) -> Number:
    return 1 / (1 - e)


def h1_weighted_norm_sq(e) -> Number:
    return 2 - e


def h1_dual_norm_sq(e) -> Number:
    """Norm squared against the reciprocal weight."""
    return (1 - e) + e * e


def h2_weighted_norm_sq(e) -> Number:
    return 1 / e + e / (1 - e)


def transform_norm_sq_unweighted(e) -> Number:
    return h1_norm_sq(e) * h2_norm_sq(e)


def transform_norm_sq_weighted(e) -> Number:
    """Rank-one norm: the dual-weight norm of the analyzing function times
    the weighted norm of the output function, squared."""
    return h1_dual_norm_sq(e) * h2_weighted_norm_sq(e)


def a2_tree(e) -> Number:
    """Characteristic over the tree atoms: attained at the root and the
    middle atoms."""
    return (2 - e) * ((1 - e) + e * e)


def a2_unions(e) -> Number:
    """Characteristic over all nonempty unions of the four leaves."""
    leaves_mass = [1 - e, e, 1 - e, e]
    w = [1, 1 / e, 1, 1 / e]
    best = 0
    for k in range(1, 5):
        for combo in itertools.combinations(range(4), k):
            m = sum(leaves_mass[i] for i in combo)
            wm = sum(w[i] * leaves_mass[i] for i in combo)
            um = sum(leaves_mass[i] / w[i] for i in combo)
            val = wm * um / (m * m)
            if val > best:
                best = val
    return best


@dataclass
class VerificationReport:
    epsilon: Number
    h1_norm_sq: Number
    h2_norm_sq: Number
    transform_norm_sq: Number
    a2_tree: Number
    a2_unions: Number
    weighted_norm_sq: Number
    lower_bound_sq: Number
    spectral_weighted_norm: float
    multiplier_infeasibility: dict
    claims: dict

    @property
    def holds(self) -> bool:
        return all(self.claims.values())

    def to_json(self) -> dict:
        out = {
            k: float(v)
            for k, v in {
                "epsilon": self.epsilon,
                "h1_norm_sq": self.h1_norm_sq,
                "h2_norm_sq": self.h2_norm_sq,
                "transform_norm_sq": self.transform_norm_sq,
                "a2_tree": self.a2_tree,
                "a2_unions": self.a2_unions,
                "weighted_norm_sq": self.weighted_norm_sq,
                "lower_bound_sq": self.lower_bound_sq,
                "spectral_weighted_norm": self.spectral_weighted_norm,
            }.items()
        }
        out["claims"] = dict(self.claims)
        out["multiplier_infeasibility"] = self.multiplier_infeasibility
        out["holds"] = self.holds
        return out


def verify_instance(inst: CounterexampleInstance) -> VerificationReport:
    """Check every claimed quantity of one block, exactly where possible.

    Squared norms and characteristics are rational functions of epsilon and
    are compared exactly on the rational backend; the closed-form rank-one
    weighted norm is cross-checked against the spectral solver.
    """
    e = inst.epsilon
    f = inst.filtration
    n1 = h1_norm_sq(e)
    n2 = h2_norm_sq(e)
    tw_sq = transform_norm_sq_weighted(e)
    at = a2_tree(e)
    au = a2_unions(e)
    a2c = a2_characteristic(f, inst.weight)
    spectral = operator_norm(
        inst.transform_matrix, inst.weight.leaf_mass_w, inst.weight.leaf_mass_w
    )
    claims = {
        "h1_unit_norm": n1 == 1,
        "h2_norm_le_sqrt2": n2 <= 2,
        "unweighted_norm_le_sqrt2": transform_norm_sq_unweighted(e) <= 2,
        "a2_tree_le_2": at <= 2,
        "a2_tree_matches_characteristic": at == a2c.value
        if is_exact(e)
        else abs(float(at) - float(a2c.value)) <= 1e-9 * float(at),
        "a2_unions_le_3": au <= 3,
        "weighted_norm_ge_half_inv_sqrt_eps": tw_sq * 4 * e >= 1,
        "weighted_norm_scaling": Fraction(1, 4) <= tw_sq * e <= 4
        if is_exact(e)
        else 0.25 <= float(tw_sq * e) <= 4,
        "spectral_matches_closed_form": abs(spectral - fsqrt(tw_sq))
        <= 1e-9 * max(spectral, 1.0),
    }
    infeas = multiplier_infeasibility(inst)
    claims["not_a_multiplier"] = infeas["min_residual"] > 1e-6
    return VerificationReport(
        epsilon=e,
        h1_norm_sq=n1,
        h2_norm_sq=n2,
        transform_norm_sq=transform_norm_sq_unweighted(e),
        a2_tree=at,
        a2_unions=au,
        weighted_norm_sq=tw_sq,
        lower_bound_sq=1 / (4 * e),
        spectral_weighted_norm=spectral,
        multiplier_infeasibility=infeas,
        claims=claims,
    )


def multiplier_infeasibility(inst: CounterexampleInstance) -> dict:
    """Least-squares certificate that no multiplier reproduces the
    transform: even with unconstrained coefficients, the best coefficient
    combination of the difference operators leaves a positive residual."""
    f = inst.filtration
    T = inst.transform_matrix
    basis = [difference_matrix(f, aid) for aid in f.splitting_atoms()]
    cols = np.stack([b.ravel() for b in basis], axis=1)
    coef, *_ = np.linalg.lstsq(cols, T.ravel(), rcond=None)
    resid = float(np.linalg.norm(cols @ coef - T.ravel()))
    scale = float(np.linalg.norm(T))
    return {
        "best_sigma": {
            aid: float(c) for aid, c in zip(f.splitting_atoms(), coef)
        },
        "min_residual": resid / scale,
        "transform_scale": scale,
    }


# sweep and direct sum --------------------------------------------------------


SWEEP_COLUMNS = (
    "epsilon",
    "a2_tree",
    "a2_unions",
    "norm_unweighted",
    "norm_weighted",
    "lower_bound",
)


def sweep(eps_list: Sequence) -> list[dict]:
    """One verified row per epsilon; norms are reported (not squared)."""
    rows = []
    for e in eps_list:
        rep = verify_instance(build_instance(e))
        rows.append(
            {
                "epsilon": float(e),
                "a2_tree": float(rep.a2_tree),
                "a2_unions": float(rep.a2_unions),
                "norm_unweighted": fsqrt(rep.transform_norm_sq),
                "norm_weighted": fsqrt(rep.weighted_norm_sq),
                "lower_bound": fsqrt(rep.lower_bound_sq),
                "holds": rep.holds,
            }
        )
    return rows


def sweep_csv(rows: list[dict]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for r in rows:
        lines.append(",".join(repr(float(r[c])) for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def direct_sum_instance(eps_list: Sequence):
    """Forest of one block per epsilon: the characteristic stays bounded
    while the weighted transform norm is the max over blocks."""
    instances = [build_instance(e) for e in eps_list]
    forest = merge_forest([inst.filtration for inst in instances])
    weights = {}
    for i, inst in enumerate(instances):
        for leaf, val in zip(inst.filtration.leaf_ids, inst.weight.w):
            weights[f"t{i}.{leaf}"] = val
    w = Weight(forest, weights)
    n = forest.n_leaves
    block = np.zeros((n, n))
    offset = 0
    for inst in instances:
        k = inst.filtration.n_leaves
        block[offset : offset + k, offset : offset + k] = inst.transform_matrix
        offset += k
    norm = operator_norm(block, w.leaf_mass_w, w.leaf_mass_w)
    per_block = [fsqrt(transform_norm_sq_weighted(inst.epsilon)) for inst in instances]
    return {
        "forest": forest,
        "weight": w,
        "a2": float(a2_characteristic(forest, w).value),
        "norm": norm,
        "per_block_norms": per_block,
    }
