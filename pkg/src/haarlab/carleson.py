"""Carleson packing constants and the martingale Carleson embedding.

The three oscillation sequences of a weight (tau, rho, gamma) measure how
the averages of w and 1/w move from an atom to its children; their packing
constants control the multiplier norm.  Packing sums are accumulated
bottom-up in one pass over the tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ParseError
from .filtration import Filtration
from .marttools import (
    Weight,
    _prefix,
    _span_sum,
    atom_averages,
    leaf_mass,
    norm_sq,
)
from .numutil import Number, leq
from .outerspace import CheckResult


def _child_oscillation(f: Filtration, w: Weight, term) -> dict:
    """Shared loop for the oscillation sequences: ``term`` combines the
    child/parent average differences into one child contribution."""
    u_avg = atom_averages(f, w.u)
    w_avg = atom_averages(f, w.w)
    out: dict[str, Number] = {}
    for aid in f.atom_ids:
        atom = f.atom(aid)
        if len(atom.children) < 2:
            out[aid] = 0
            continue
        total = 0
        for c in atom.children:
            du = u_avg[c] - u_avg[aid]
            dw = w_avg[c] - w_avg[aid]
            total += term(du, dw, w_avg[aid], w_avg[c]) * f.mass(c)
        out[aid] = total / f.mass(aid)
    return out


def tau_sequence(f: Filtration, w: Weight) -> dict:
    """Squared u-oscillation weighted by both the parent and child
    w-averages."""
    return _child_oscillation(f, w, lambda du, dw, wp, wc: du * du * wp * wc)


def rho_sequence(f: Filtration, w: Weight) -> dict:
    """Mixed absolute oscillation of the u- and w-averages."""
    return _child_oscillation(f, w, lambda du, dw, wp, wc: abs(du) * abs(dw))


def gamma_sequence(f: Filtration, w: Weight) -> dict:
    """Normalized w-energy of the martingale difference of u; equals tau
    divided by the parent w-average."""
    return _child_oscillation(f, w, lambda du, dw, wp, wc: du * du * wc)


@dataclass
class PackingReport:
    """Packing constant of a nonnegative tree function: the largest
    normalized subtree sum, its attaining atom, and all per-atom ratios."""

    constant: float
    witness: Optional[str]
    ratios: dict

    def to_json(self) -> dict:
        return {
            "constant": float(self.constant),
            "witness": self.witness,
            "per_atom_ratios": {k: float(v) for k, v in self.ratios.items()},
        }


def packing_constant(f: Filtration, a, normalizer=None) -> PackingReport:
    """Sup over atoms of (sum of a_I |I| below the atom) / N(atom).

    ``N`` is the atom's base mass by default, or its mass under the
    supplied leaf density; atoms of zero normalizer mass are skipped.
    Subtree sums are accumulated bottom-up, one pass.
    """
    avec = f.tree_vector(a)
    for v in avec:
        if v < 0:
            raise ParseError("packing needs a nonnegative tree function")
    pos = {aid: i for i, aid in enumerate(f.atom_ids)}
    weighted = [v * f.mass(aid) for v, aid in zip(avec, f.atom_ids)]
    subtree_sum = list(weighted)
    for i in range(len(f.atom_ids) - 1, -1, -1):
        aid = f.atom_ids[i]
        for c in f.atom(aid).children:
            subtree_sum[i] += subtree_sum[pos[c]]
    if normalizer is None:
        norms = [f.mass(aid) for aid in f.atom_ids]
    else:
        p = _prefix(leaf_mass(f, normalizer))
        norms = [_span_sum(p, *f.leaf_slice(aid)) for aid in f.atom_ids]
    best = 0
    witness = None
    ratios = {}
    for i, aid in enumerate(f.atom_ids):
        if not norms[i] > 0:
            continue
        r = subtree_sum[i] / norms[i]
        ratios[aid] = r
        if r > best:
            best, witness = r, aid
    return PackingReport(constant=float(best), witness=witness, ratios=ratios)


def carleson_embedding_check(f: Filtration, density, a, fn) -> CheckResult:
    """Martingale Carleson embedding with the testing constant: the
    average-squared sum against a_I |I| is at most 4 times the packing
    constant (normalized by the measure) times ||f||^2."""
    avec = f.tree_vector(a)
    avg = atom_averages(f, fn, density=density)
    lhs = sum(
        avg[aid] ** 2 * v * f.mass(aid) for aid, v in zip(f.atom_ids, avec)
    )
    testing = packing_constant(f, avec, normalizer=density).constant
    rhs = 4.0 * testing * float(norm_sq(f, fn, density))
    return CheckResult(
        "carleson-embedding",
        float(lhs),
        float(rhs),
        leq(lhs, rhs),
        witness={"testing_constant": testing},
    )
