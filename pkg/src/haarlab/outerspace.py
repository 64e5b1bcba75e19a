"""Outer measure machinery on the atom set of a filtration.

Subsets of the atom set are measured by their cheapest cover with full
subtrees, each subtree priced at the mass of its top atom; this outer
lifting is computed exactly by a tree dynamic program.  Size functions
aggregate a tree function over a subtree (normalized p-th power mean, or a
sup over positive-mass atoms), and the induced outer Lebesgue-type norms
integrate the superlevel outer measure in closed form between breakpoints.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import UnsupportedSize, ZeroMass
from .filtration import Filtration
from .marttools import Weight, _prefix, _span_sum, atom_averages, leaf_mass, norm_sq
from .numutil import Number, fsqrt, leq


@dataclass(frozen=True)
class SizeSpec:
    """A size function: normalized p-mean ("power") or sup ("sup") of a
    tree function over a subtree, against an optional leaf density."""

    kind: str = "sup"
    p: float = 1.0
    density: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("power", "sup"):
            raise UnsupportedSize(f"unknown size kind {self.kind!r}")
        if self.kind == "power" and not self.p >= 1:
            raise UnsupportedSize("power sizes need p >= 1")


def S_sup(density=None) -> SizeSpec:
    return SizeSpec(kind="sup", density=_freeze(density))


def S_power(p: float, density=None) -> SizeSpec:
    return SizeSpec(kind="power", p=p, density=_freeze(density))


def _freeze(density):
    if density is None:
        return None
    if isinstance(density, dict):
        return tuple(sorted(density.items()))
    return tuple(density)


def _thaw(density):
    if density is None:
        return None
    if density and isinstance(density[0], tuple) and len(density[0]) == 2:
        return dict(density)
    return list(density)


# ---------------------------------------------------------------------------
# outer lifting
# ---------------------------------------------------------------------------


def outer_measure(f: Filtration, members: Iterable[str], density=None) -> Number:
    """Cheapest cover of a set of atoms by full subtrees.

    The cost to settle a subtree is its top atom's mass if the top atom
    itself must be covered, otherwise the cheaper of buying the whole
    subtree or settling the children recursively; subtrees not meeting the
    set cost nothing.
    """
    members = set(members)
    for aid in members:
        f.atom(aid)
    masses = _atom_mass_list(f, density)
    pos = {aid: i for i, aid in enumerate(f.atom_ids)}
    cost: list[Optional[Number]] = [None] * len(f.atom_ids)
    for i in range(len(f.atom_ids) - 1, -1, -1):
        aid = f.atom_ids[i]
        atom = f.atom(aid)
        if aid in members:
            cost[i] = masses[i]
            continue
        child_costs = [cost[pos[c]] for c in atom.children]
        live = [c for c in child_costs if c is not None]
        if not live:
            cost[i] = None
        else:
            cost[i] = min(masses[i], sum(live))
    total = 0
    for r in f.roots:
        c = cost[pos[r]]
        if c is not None:
            total += c
    return total


def _atom_mass_list(f: Filtration, density=None) -> list:
    p = _prefix(leaf_mass(f, density))
    out = []
    for aid in f.atom_ids:
        lo, hi = f.leaf_slice(aid)
        out.append(_span_sum(p, lo, hi))
    return out


def outer_measure_bruteforce(f: Filtration, members: Iterable[str], density=None) -> Number:
    """Independent oracle: minimum over all subtree collections covering
    the set.  Exponential; guarded to small trees."""
    members = set(members)
    if not members:
        return 0
    ids = f.atom_ids
    if len(ids) > 16:
        raise UnsupportedSize("brute-force cover search is capped at 16 atoms")
    masses = dict(zip(ids, _atom_mass_list(f, density)))
    bit = {aid: 1 << i for i, aid in enumerate(ids)}
    subtree_mask = {
        aid: sum(bit[b] for b in f.subtree(aid)) for aid in ids
    }
    target = sum(bit[m] for m in members)
    best = None
    for r in range(len(ids) + 1):
        for combo in itertools.combinations(ids, r):
            mask = 0
            for aid in combo:
                mask |= subtree_mask[aid]
            if mask & target == target:
                c = sum(masses[aid] for aid in combo)
                if best is None or c < best:
                    best = c
        # supersets cannot beat a full cover of minimum cardinality cost,
        # but cheaper large covers exist, so no early exit on r
    return best


# ---------------------------------------------------------------------------
# size functions
# ---------------------------------------------------------------------------


def size(f: Filtration, fn, atom_id: str, spec: SizeSpec) -> Number:
    """Evaluate the size of a tree function over one subtree."""
    vec = f.tree_vector(fn)
    pos = {aid: i for i, aid in enumerate(f.atom_ids)}
    masses = _atom_mass_list(f, _thaw(spec.density))
    sub = f.subtree(atom_id)
    if spec.kind == "sup":
        best = 0
        for aid in sub:
            if masses[pos[aid]] > 0:
                v = abs(vec[pos[aid]])
                if v > best:
                    best = v
        return best
    m0 = masses[pos[atom_id]]
    if not m0 > 0:
        raise ZeroMass(f"atom {atom_id!r} has zero mass under this measure")
    total = sum(
        abs(vec[pos[aid]]) ** spec.p * masses[pos[aid]] for aid in sub
    )
    val = total / m0
    if spec.p == 1:
        return val
    return float(val) ** (1.0 / spec.p)


def superlevel_outer_measure(f: Filtration, fn, level, spec: SizeSpec) -> Number:
    """Outer measure of the superlevel set of a sup-size.

    For the sup size the cheapest garbage set is exactly the atoms of
    positive mass whose values exceed the level; its outer measure equals
    the cover by the maximal such atoms.
    """
    if spec.kind != "sup":
        raise UnsupportedSize("superlevel minimization is closed-form only for sup sizes")
    vec = f.tree_vector(fn)
    density = _thaw(spec.density)
    masses = dict(zip(f.atom_ids, _atom_mass_list(f, density)))
    garbage = [
        aid
        for aid, v in zip(f.atom_ids, vec)
        if abs(v) > level and masses[aid] > 0
    ]
    return outer_measure(f, garbage, density)


def superlevel_bruteforce(f: Filtration, fn, level, spec: SizeSpec) -> Number:
    """Independent oracle for the superlevel infimum: try every garbage
    subset (any size kind).  Exponential; guarded to small trees."""
    ids = f.atom_ids
    n = len(ids)
    if n > 14:
        raise UnsupportedSize("brute-force superlevel search is capped at 14 atoms")
    vec = f.tree_vector(fn)
    density = _thaw(spec.density)
    masses = _atom_mass_list(f, density)
    pos = {aid: i for i, aid in enumerate(ids)}
    subtrees = [[pos[b] for b in f.subtree(aid)] for aid in ids]

    def admissible(keep_mask: int) -> bool:
        if spec.kind == "sup":
            return all(
                not (keep_mask >> i) & 1 or not masses[i] > 0 or abs(vec[i]) <= level
                for i in range(n)
            )
        for i in range(n):
            if not masses[i] > 0:
                continue
            total = sum(
                abs(vec[j]) ** spec.p * masses[j]
                for j in subtrees[i]
                if (keep_mask >> j) & 1
            )
            if float(total / masses[i]) ** (1.0 / spec.p) > float(level) * (1 + 1e-12):
                return False
        return True

    best = None
    for garbage_mask in range(1 << n):
        if not admissible(~garbage_mask):
            continue
        cost = outer_measure(
            f, [ids[i] for i in range(n) if (garbage_mask >> i) & 1], density
        )
        if best is None or cost < best:
            best = cost
    return best


def outer_lp_norm(f: Filtration, fn, p: float, spec: SizeSpec) -> Number:
    """Outer p-norm: integrate the superlevel outer measure against
    p * level^(p-1), exactly between the breakpoints of the step function."""
    if spec.kind != "sup":
        raise UnsupportedSize("outer p-norms are implemented for sup sizes")
    if not p >= 1:
        raise UnsupportedSize("outer norms need p >= 1")
    vec = f.tree_vector(fn)
    density = _thaw(spec.density)
    masses = dict(zip(f.atom_ids, _atom_mass_list(f, density)))
    breaks = sorted({abs(v) for aid, v in zip(f.atom_ids, vec) if masses[aid] > 0 and v != 0})
    if not breaks:
        return 0
    total = 0
    prev = 0
    for b in breaks:
        # measure is constant on [prev, b): the atoms above level prev
        # are exactly those with |value| >= b
        m = outer_measure(
            f,
            [aid for aid, v in zip(f.atom_ids, vec) if abs(v) >= b and masses[aid] > 0],
            density,
        )
        if p == 1:
            total += m * (b - prev)
        elif p == 2:
            total += m * (b * b - prev * prev)
        else:
            total += float(m) * (float(b) ** p - float(prev) ** p)
        prev = b
    if p == 1:
        return total
    if p == 2:
        return fsqrt(total)
    return float(total) ** (1.0 / p)


def outer_linf_norm(f: Filtration, fn, spec: SizeSpec) -> Number:
    """Largest size over all subtrees; for power sizes, atoms of zero mass
    are skipped (their size is undefined)."""
    density = _thaw(spec.density)
    masses = dict(zip(f.atom_ids, _atom_mass_list(f, density)))
    best = 0
    for aid in f.atom_ids:
        if spec.kind == "power" and not masses[aid] > 0:
            continue
        v = size(f, fn, aid, spec)
        if v > best:
            best = v
    return best


# ---------------------------------------------------------------------------
# inequality checks
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    """One verified inequality: lhs <= rhs with the slack rhs - lhs."""

    name: str
    lhs: float
    rhs: float
    holds: bool
    witness: Optional[dict] = None

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_json(self) -> dict:
        out = {
            "check": self.name,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "slack": float(self.slack),
            "holds": bool(self.holds),
        }
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def duality_check(f: Filtration, fn, gn, density=None) -> CheckResult:
    """Pairing of two tree functions against the atom masses, bounded by
    the outer 1-norm (sup size) of one times the outer sup-norm (1-size)
    of the other."""
    fvec = f.tree_vector(fn)
    gvec = f.tree_vector(gn)
    masses = _atom_mass_list(f, density)
    lhs = sum(abs(a * b) * m for a, b, m in zip(fvec, gvec, masses))
    spec_sup = SizeSpec(kind="sup", density=_freeze(density))
    spec_one = SizeSpec(kind="power", p=1, density=_freeze(density))
    rhs = outer_lp_norm(f, fvec, 1, spec_sup) * outer_linf_norm(f, gvec, spec_one)
    return CheckResult("l1-linf-duality", float(lhs), float(rhs), leq(lhs, rhs))


def reciprocal_average_bound(f: Filtration, h, root_atom: str) -> CheckResult:
    """The reciprocal of the running averages of 1/h, as a tree function on
    one subtree, has outer 1-norm at most twice the integral of h."""
    hvec = f.leaf_vector(h)
    lo0, hi0 = f.leaf_slice(root_atom)
    for i in range(lo0, hi0):
        if not hvec[i] > 0:
            raise ZeroMass("h must be strictly positive on the subtree's leaves")
    hinv = [1 / v if v > 0 else 0 for v in hvec]
    avg_inv = atom_averages(f, hinv)
    H = {aid: 1 / avg_inv[aid] for aid in f.subtree(root_atom)}
    lhs = outer_lp_norm(f, H, 1, S_sup())
    rhs = 2 * sum(hvec[i] * f.leaf_masses[i] for i in range(lo0, hi0))
    return CheckResult("harmonic-average-outer-l1", float(lhs), float(rhs), leq(lhs, rhs))


def bilinear_embedding_check(f: Filtration, w: Weight, fn, gn) -> CheckResult:
    """Product of the u-average of f and the w-average of g, as a tree
    function, lands in outer L1 with norm at most 4 ||f||_u ||g||_w."""
    favg = atom_averages(f, fn, density=w.u)
    gavg = atom_averages(f, gn, density=w.w)
    phi = {aid: favg[aid] * gavg[aid] for aid in f.atom_ids}
    lhs = outer_lp_norm(f, phi, 1, S_sup())
    rhs = 4.0 * fsqrt(norm_sq(f, fn, w.u)) * fsqrt(norm_sq(f, gn, w.w))
    return CheckResult("bilinear-average-embedding", float(lhs), float(rhs), leq(lhs, rhs))


def averaging_embedding_check(f: Filtration, density, fn) -> CheckResult:
    """The per-atom averages of f, in the outer 2-norm lifted from the same
    measure, are bounded by twice the L2 norm of f."""
    avg = atom_averages(f, fn, density=density)
    lhs = outer_lp_norm(f, avg, 2, S_sup(density))
    rhs = 2.0 * fsqrt(norm_sq(f, fn, density))
    return CheckResult("average-outer-l2-embedding", float(lhs), float(rhs), leq(lhs, rhs))


def maximal_function(f: Filtration, density, fn) -> list:
    """Per-leaf maximum of |f|-averages along the leaf's ancestor chain
    (atoms of zero mass contribute nothing)."""
    vec = [abs(v) for v in f.leaf_vector(fn)]
    avg = atom_averages(f, vec, density=density)
    masses = dict(zip(f.atom_ids, _atom_mass_list(f, density)))
    out = []
    for leaf in f.leaf_ids:
        best = 0
        for aid in f.ancestors(leaf):
            if masses[aid] > 0 and avg[aid] > best:
                best = avg[aid]
        out.append(best)
    return out


def maximal_bound_check(f: Filtration, density, fn) -> CheckResult:
    m = maximal_function(f, density, fn)
    lhs = fsqrt(norm_sq(f, m, density))
    rhs = 2.0 * fsqrt(norm_sq(f, fn, density))
    return CheckResult("maximal-function-l2", float(lhs), float(rhs), leq(lhs, rhs))
