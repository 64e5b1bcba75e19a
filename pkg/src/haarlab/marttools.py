"""Martingale differences, multipliers, weights, and weighted operator norms.

Leaf functions are vectors aligned with ``Filtration.leaf_ids``; all
averaging operators reduce to prefix sums over the contiguous leaf spans of
atoms.  Operators are dense matrices acting on leaf-value vectors; norms in
a weighted space are computed by a symmetric similarity transform to an
unweighted singular-value problem.
"""

from __future__ import annotations

import itertools
import json
import math
import random as _random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    BudgetExceeded,
    GenerationOutOfRange,
    NumericalFailure,
    ParseError,
    ZeroMass,
)
from .filtration import Filtration
from .numutil import Number, fsqrt, is_exact, rel_residual

# ---------------------------------------------------------------------------
# masses and averages
# ---------------------------------------------------------------------------


def leaf_mass(f: Filtration, density=None) -> list:
    """Per-leaf masses of the measure ``density * base``; ``None`` means the
    base measure itself."""
    if density is None:
        return list(f.leaf_masses)
    d = f.leaf_vector(density)
    return [di * mi for di, mi in zip(d, f.leaf_masses)]


def _prefix(values) -> list:
    out = [0]
    acc = 0
    for v in values:
        acc = acc + v
        out.append(acc)
    return out


def _span_sum(prefix: list, lo: int, hi: int):
    return prefix[hi] - prefix[lo]


def atom_masses(f: Filtration, density=None) -> dict:
    """Measure of every atom under ``density * base``."""
    p = _prefix(leaf_mass(f, density))
    out = {}
    for aid in f.atom_ids:
        lo, hi = f.leaf_slice(aid)
        out[aid] = _span_sum(p, lo, hi)
    return out


def atom_averages(f: Filtration, fn, density=None) -> dict:
    """Per-atom averages of the leaf function against ``density * base``.

    Atoms of zero mass get average 0 (the convention used whenever a
    degenerate measure enters an embedding).
    """
    vec = f.leaf_vector(fn)
    lm = leaf_mass(f, density)
    pm = _prefix(lm)
    pf = _prefix([v * m for v, m in zip(vec, lm)])
    out = {}
    for aid in f.atom_ids:
        lo, hi = f.leaf_slice(aid)
        m = _span_sum(pm, lo, hi)
        out[aid] = _span_sum(pf, lo, hi) / m if m > 0 else 0
    return out


def average(f: Filtration, fn, atom_id: str, density=None) -> Number:
    """Mass-normalized integral of ``fn`` over one atom."""
    vec = f.leaf_vector(fn)
    lm = leaf_mass(f, density)
    lo, hi = f.leaf_slice(atom_id)
    m = sum(lm[lo:hi])
    if not m > 0:
        raise ZeroMass(f"atom {atom_id!r} has zero mass under this measure")
    return sum(v * w for v, w in zip(vec[lo:hi], lm[lo:hi])) / m


def expectation(f: Filtration, fn, atom_id: str, density=None) -> list:
    """Averaging operator: the atom's average spread over its leaves,
    zero elsewhere (and zero everywhere if the atom has zero mass)."""
    vec = f.leaf_vector(fn)
    lm = leaf_mass(f, density)
    lo, hi = f.leaf_slice(atom_id)
    out = [0] * f.n_leaves
    m = sum(lm[lo:hi])
    if m > 0:
        a = sum(v * w for v, w in zip(vec[lo:hi], lm[lo:hi])) / m
        for i in range(lo, hi):
            out[i] = a
    return out


def martingale_difference(f: Filtration, fn, atom_id: str, density=None) -> list:
    """Difference of the children averages and the atom average, supported
    on the atom; identically zero on single-child (chain) atoms."""
    atom = f.atom(atom_id)
    out = [0] * f.n_leaves
    if len(atom.children) < 2:
        return out
    vec = f.leaf_vector(fn)
    lm = leaf_mass(f, density)
    lo, hi = f.leaf_slice(atom_id)
    m = sum(lm[lo:hi])
    a_parent = (
        sum(v * w for v, w in zip(vec[lo:hi], lm[lo:hi])) / m if m > 0 else None
    )
    for c in atom.children:
        clo, chi = f.leaf_slice(c)
        mc = sum(lm[clo:chi])
        a_child = (
            sum(v * w for v, w in zip(vec[clo:chi], lm[clo:chi])) / mc
            if mc > 0
            else 0
        )
        base = a_parent if a_parent is not None else 0
        d = a_child - base
        for i in range(clo, chi):
            out[i] = d
    return out


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


class Weight:
    """Strictly positive leaf function with its reciprocal cached."""

    def __init__(self, f: Filtration, values):
        vec = f.leaf_vector(values)
        norm = []
        for v in vec:
            if is_exact(v):
                v = Fraction(v)
            elif not (math.isfinite(v)):
                raise ParseError(f"weight value {v!r} is not finite")
            if not v > 0:
                raise ParseError(f"weight values must be positive, got {v!r}")
            norm.append(v)
        self.filtration = f
        self.w = norm
        self.u = [1 / v for v in norm]
        self.backend = "rational" if all(is_exact(v) for v in norm) else "float"
        self._wmass = [wv * m for wv, m in zip(self.w, f.leaf_masses)]
        self._umass = [uv * m for uv, m in zip(self.u, f.leaf_masses)]

    @property
    def leaf_mass_w(self) -> list:
        return self._wmass

    @property
    def leaf_mass_u(self) -> list:
        return self._umass

    def reciprocal(self) -> "Weight":
        return Weight(self.filtration, self.u)

    @classmethod
    def from_spec(cls, f: Filtration, spec: Union[dict, str]) -> "Weight":
        if isinstance(spec, str):
            spec = json.loads(spec)
        try:
            vals = spec["leaf_weights"]
        except (KeyError, TypeError) as exc:
            raise ParseError("weight spec needs a 'leaf_weights' map") from exc
        from .numutil import parse_number

        return cls(f, {k: parse_number(v) for k, v in vals.items()})

    def to_spec(self) -> dict:
        from .numutil import number_to_json

        return {
            "leaf_weights": {
                l: number_to_json(v) for l, v in zip(self.filtration.leaf_ids, self.w)
            }
        }


def load_weight(f: Filtration, path: str) -> Weight:
    with open(path, "r", encoding="utf-8") as fh:
        return Weight.from_spec(f, json.load(fh))


def random_weight(f: Filtration, seed: int, spread_decades: float = 1.0) -> Weight:
    """Log-uniform weight over 10^[-s, s] per leaf, reproducible from seed."""
    rng = _random.Random(seed)
    s = spread_decades
    return Weight(f, [10.0 ** rng.uniform(-s, s) for _ in range(f.n_leaves)])


@dataclass(frozen=True)
class A2Result:
    value: Number
    witness: str

    def __float__(self) -> float:
        return float(self.value)


def a2_characteristic(f: Filtration, w: Weight) -> A2Result:
    """Largest product of the w-average and the 1/w-average over atoms.

    Ties break toward the earliest atom in depth-first order.
    """
    pw = _prefix(w.leaf_mass_w)
    pu = _prefix(w.leaf_mass_u)
    best = None
    best_atom = None
    for aid in f.atom_ids:
        lo, hi = f.leaf_slice(aid)
        m = f.mass(aid)
        val = (_span_sum(pw, lo, hi) / m) * (_span_sum(pu, lo, hi) / m)
        if best is None or val > best:
            best, best_atom = val, aid
    return A2Result(best, best_atom)


def weighted_norm_sq(f: Filtration, fn, w: Weight) -> Number:
    vec = f.leaf_vector(fn)
    return sum(v * v * m for v, m in zip(vec, w.leaf_mass_w))


def weighted_norm(f: Filtration, fn, w: Weight) -> float:
    return fsqrt(weighted_norm_sq(f, fn, w))


def norm_sq(f: Filtration, fn, density=None) -> Number:
    vec = f.leaf_vector(fn)
    return sum(v * v * m for v, m in zip(vec, leaf_mass(f, density)))


def dual_form_check(f: Filtration, w: Weight, fn) -> Number:
    """Residual of the isometry between f in the w-space and f*w in the
    1/w-space; squares are compared so the exact backend returns exactly 0."""
    vec = f.leaf_vector(fn)
    fw = [v * wv for v, wv in zip(vec, w.w)]
    lhs = sum(v * v * m for v, m in zip(fw, w.leaf_mass_u))
    rhs = weighted_norm_sq(f, vec, w)
    return rel_residual(lhs, rhs)


# ---------------------------------------------------------------------------
# dense operators
# ---------------------------------------------------------------------------


def _zeros(n: int, m: int, exact: bool):
    if exact:
        return np.zeros((n, m), dtype=object)
    return np.zeros((n, m))


def expectation_matrix(f: Filtration, atom_id: str, density=None, exact: bool = False):
    """Dense matrix of the averaging operator on one atom."""
    n = f.n_leaves
    M = _zeros(n, n, exact)
    lm = leaf_mass(f, density)
    lo, hi = f.leaf_slice(atom_id)
    m = sum(lm[lo:hi])
    if m > 0:
        row = [v / m for v in lm[lo:hi]]
        for i in range(lo, hi):
            M[i, lo:hi] = row
    return M


def difference_matrix(f: Filtration, atom_id: str, density=None, exact: bool = False):
    """Dense matrix of the martingale difference on one atom (zero for
    chain atoms and for atoms of zero mass)."""
    n = f.n_leaves
    M = _zeros(n, n, exact)
    atom = f.atom(atom_id)
    if len(atom.children) < 2:
        return M
    lm = leaf_mass(f, density)
    lo, hi = f.leaf_slice(atom_id)
    m = sum(lm[lo:hi])
    if not m > 0:
        return M
    neg_row = [-v / m for v in lm[lo:hi]]
    for i in range(lo, hi):
        M[i, lo:hi] = neg_row
    for c in atom.children:
        clo, chi = f.leaf_slice(c)
        mc = sum(lm[clo:chi])
        if mc > 0:
            row = [v / mc for v in lm[clo:chi]]
            for i in range(clo, chi):
                M[i, clo:chi] += np.array(row, dtype=object if exact else float)
    return M


def multiplier_matrix(
    f: Filtration,
    sigma: dict,
    density=None,
    restrict_to: Optional[str] = None,
    exact: bool = False,
):
    """Dense matrix of the multiplier with per-atom coefficients ``sigma``
    (missing atoms count as 0); optionally restricted to one subtree."""
    n = f.n_leaves
    M = _zeros(n, n, exact)
    atoms = f.subtree(restrict_to) if restrict_to is not None else f.atom_ids
    for aid in atoms:
        s = sigma.get(aid, 0)
        if s == 0 or len(f.atom(aid).children) < 2:
            continue
        if not exact:
            s = float(s)
        M += s * difference_matrix(f, aid, density=density, exact=exact)
    return M


def apply_multiplier(f: Filtration, sigma: dict, fn, restrict_to: Optional[str] = None) -> list:
    """Apply the multiplier without building its matrix; linear in ``fn``."""
    vec = f.leaf_vector(fn)
    avg = atom_averages(f, vec)
    out = [0] * f.n_leaves
    atoms = f.subtree(restrict_to) if restrict_to is not None else f.atom_ids
    for aid in atoms:
        s = sigma.get(aid, 0)
        atom = f.atom(aid)
        if s == 0 or len(atom.children) < 2:
            continue
        a_parent = avg[aid]
        for c in atom.children:
            d = s * (avg[c] - a_parent)
            clo, chi = f.leaf_slice(c)
            for i in range(clo, chi):
                out[i] += d
    return out


def validate_sigma(f: Filtration, sigma: dict) -> dict:
    for aid, v in sigma.items():
        f.atom(aid)
        if abs(v) > 1 + 1e-12:
            raise ParseError(f"multiplier coefficient out of [-1, 1] at {aid!r}")
    return sigma


def load_sigma(f: Filtration, spec: Union[dict, str]) -> dict:
    if isinstance(spec, str):
        spec = json.loads(spec)
    coeffs = spec.get("coefficients", spec)
    from .numutil import parse_number

    return validate_sigma(f, {k: parse_number(v) for k, v in coeffs.items()})


@dataclass
class WeightedOperator:
    """Dense operator between two weighted leaf spaces.

    ``in_mass``/``out_mass`` are per-leaf masses of the domain/codomain
    measures; leaves of zero mass are quotiented out of the corresponding
    space when the norm is computed.
    """

    matrix: np.ndarray
    in_mass: Sequence[Number]
    out_mass: Sequence[Number]

    def apply(self, vec):
        return self.matrix @ np.asarray(vec, dtype=float)

    def norm(self, rel_tol: float = 1e-10, max_iter: int = 100000) -> float:
        return operator_norm(
            self.matrix, self.in_mass, self.out_mass, rel_tol=rel_tol, max_iter=max_iter
        )


def operator_norm(
    matrix,
    in_mass,
    out_mass,
    rel_tol: float = 1e-10,
    max_iter: int = 100000,
) -> float:
    """Exact operator norm between weighted leaf spaces.

    Conjugates by the square roots of the diagonal mass forms and takes the
    largest singular value; falls back to power iteration on the normal
    matrix when the direct solver fails.
    """
    M = np.asarray(matrix, dtype=float)
    mi = np.asarray([float(v) for v in in_mass])
    mo = np.asarray([float(v) for v in out_mass])
    keep_in = mi > 0
    keep_out = mo > 0
    if not keep_in.any() or not keep_out.any():
        return 0.0
    A = (
        np.sqrt(mo[keep_out])[:, None]
        * M[np.ix_(keep_out, keep_in)]
        / np.sqrt(mi[keep_in])[None, :]
    )
    if not np.isfinite(A).all():
        raise NumericalFailure("similarity transform produced non-finite entries")
    try:
        return float(np.linalg.svd(A, compute_uv=False)[0])
    except np.linalg.LinAlgError:
        pass
    # power iteration on A^T A with a deterministic start
    B = A.T @ A
    v = np.ones(B.shape[0]) + 1e-3 * np.arange(B.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w_vec = B @ v
        nw = np.linalg.norm(w_vec)
        if nw == 0:
            return 0.0
        v = w_vec / nw
        if abs(nw - lam) <= rel_tol * max(nw, 1e-300):
            return math.sqrt(nw)
        lam = nw
    raise NumericalFailure("power iteration did not converge")


def multiplier_operator(f: Filtration, sigma: dict, w: Weight) -> WeightedOperator:
    M = multiplier_matrix(f, sigma)
    return WeightedOperator(M, w.leaf_mass_w, w.leaf_mass_w)


# ---------------------------------------------------------------------------
# partial sums of martingale differences
# ---------------------------------------------------------------------------


def level_atoms(f: Filtration, k: int) -> list[str]:
    """Atoms alive at generation ``k``: those of generation k plus leaves
    that stopped earlier (a leaf persists through all later generations)."""
    out = []
    for aid in f.atom_ids:
        a = f.atom(aid)
        if a.generation == k or (a.is_leaf and a.generation < k):
            out.append(aid)
    return out


def level_expectation_matrix(f: Filtration, k: int) -> np.ndarray:
    if not 0 <= k <= f.max_generation:
        raise GenerationOutOfRange(f"generation {k} outside [0, {f.max_generation}]")
    n = f.n_leaves
    M = np.zeros((n, n))
    for aid in level_atoms(f, k):
        M += expectation_matrix(f, aid)
    return M


def partial_sum_operator(f: Filtration, w: Weight, m: int, n: int) -> WeightedOperator:
    """Sum of the level differences for generations m..n on the w-space."""
    if not (1 <= m <= n <= f.max_generation):
        raise GenerationOutOfRange(
            f"need 1 <= m <= n <= {f.max_generation}, got ({m}, {n})"
        )
    M = level_expectation_matrix(f, n) - level_expectation_matrix(f, m - 1)
    return WeightedOperator(M, w.leaf_mass_w, w.leaf_mass_w)


def partial_sum_norms(f: Filtration, w: Weight, m: int, n: int) -> float:
    return partial_sum_operator(f, w, m, n).norm()


def partial_sum_norm_sup(f: Filtration, w: Weight) -> tuple[float, tuple[int, int]]:
    """Maximum of the partial-sum projection norms over all generation
    windows, with the attaining window."""
    G = f.max_generation
    if G < 1:
        return 0.0, (0, 0)
    levels = [level_expectation_matrix(f, k) for k in range(G + 1)]
    best, arg = 0.0, (1, 1)
    for m in range(1, G + 1):
        for n in range(m, G + 1):
            val = operator_norm(levels[n] - levels[m - 1], w.leaf_mass_w, w.leaf_mass_w)
            if val > best:
                best, arg = val, (m, n)
    return best, arg


# ---------------------------------------------------------------------------
# the reduction report: h, gamma, rho, and the two localized targets
# ---------------------------------------------------------------------------


def reduction_chain(f: Filtration, w: Weight, root_atom: str, g=None) -> dict:
    """Localized reduction data below one atom.

    For every atom under ``root_atom``: the special Haar function (the
    martingale difference of 1/w), its w-orthogonalized correction
    coefficient gamma, the mixed-oscillation sequence rho, and the residual
    of the orthogonality and Pythagoras identities.  Aggregates the two
    localized sums that the multiplier bound reduces to and normalizes them
    by the appropriate powers of the A2 characteristic (the second sum
    needs a test function ``g``).
    """
    sub = f.subtree(root_atom)
    # averages of u and of w against the base measure
    u_avg = atom_averages(f, w.u)
    w_avg = atom_averages(f, w.w)
    pw = _prefix(w.leaf_mass_w)
    pu = _prefix(w.leaf_mass_u)

    gamma: dict[str, Number] = {}
    rho: dict[str, Number] = {}
    h_norm_sq_w: dict[str, Number] = {}
    orth_residual: dict[str, Number] = {}
    pyth_residual: dict[str, Number] = {}
    haar_mass_lhs = 0
    for aid in sub:
        atom = f.atom(aid)
        if len(atom.children) < 2:
            gamma[aid] = 0
            rho[aid] = 0
            h_norm_sq_w[aid] = 0
            orth_residual[aid] = 0
            pyth_residual[aid] = 0
            continue
        mI = f.mass(aid)
        gsum = 0
        rsum = 0
        hsq = 0
        child_terms = []
        for c in atom.children:
            du = u_avg[c] - u_avg[aid]
            dw = w_avg[c] - w_avg[aid]
            mc = f.mass(c)
            gsum += du * dw * mc
            rsum += abs(du) * abs(dw) * mc
            clo, chi = f.leaf_slice(c)
            wmass_c = _span_sum(pw, clo, chi)
            hsq += du * du * wmass_c
            child_terms.append((du, wmass_c))
            haar_mass_lhs += du * du * w_avg[c] * mc
        gamma[aid] = gsum / (w_avg[aid] * mI)
        rho[aid] = rsum / mI
        h_norm_sq_w[aid] = hsq
        lo, hi = f.leaf_slice(aid)
        wmass_I = _span_sum(pw, lo, hi)
        # mean of h against w over the atom, after the gamma correction
        orth_residual[aid] = (
            sum(du * wm for du, wm in child_terms) - gamma[aid] * wmass_I
        ) / mI
        hw_sq = sum((du - gamma[aid]) ** 2 * wm for du, wm in child_terms)
        pyth_residual[aid] = hsq - (hw_sq + gamma[aid] ** 2 * wmass_I)

    a2 = a2_characteristic(f, w).value
    lo0, hi0 = f.leaf_slice(root_atom)
    m0 = f.mass(root_atom)
    u0 = _span_sum(pu, lo0, hi0) / m0
    haar_mass_rhs_unit = a2 * a2 * u0 * m0

    report = {
        "root_atom": root_atom,
        "a2": a2,
        "gamma": gamma,
        "rho": rho,
        "h_norm_sq_w": h_norm_sq_w,
        "orthogonality_residual": orth_residual,
        "pythagoras_residual": pyth_residual,
        "haar_mass_lhs": haar_mass_lhs,
        "haar_mass_rhs_unit": haar_mass_rhs_unit,
        "haar_mass_ratio": float(haar_mass_lhs) / float(haar_mass_rhs_unit),
    }

    if g is not None:
        gvec = f.leaf_vector(g)
        gw_mass = _prefix([gv * wm for gv, wm in zip(gvec, w.leaf_mass_w)])
        g2w_mass = _prefix([gv * gv * wm for gv, wm in zip(gvec, w.leaf_mass_w)])
        pairing = 0
        for aid in sub:
            lo, hi = f.leaf_slice(aid)
            mI = f.mass(aid)
            gw_avg = _span_sum(gw_mass, lo, hi) / mI
            pairing += abs(gw_avg) / w_avg[aid] * rho[aid] * mI
        g2w0 = _span_sum(g2w_mass, lo0, hi0) / m0
        unit = a2 * fsqrt(u0) * fsqrt(g2w0) * m0
        report["gamma_pairing_lhs"] = pairing
        report["gamma_pairing_rhs_unit"] = unit
        report["gamma_pairing_ratio"] = float(pairing) / float(unit) if unit > 0 else 0.0
    return report


# ---------------------------------------------------------------------------
# multiplier norm scans
# ---------------------------------------------------------------------------

SCAN_MODES = ("exhaustive-01", "exhaustive-pm", "random-continuous", "generation")

#: exhaustive scans refuse trees above this size
EXHAUSTIVE_ATOM_CAP = 20


@dataclass
class ScanReport:
    mode: str
    seed: int
    a2: float
    max_norm: float
    argmax_sigma: dict
    ratio: float
    n_evaluated: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "mode": self.mode,
            "seed": self.seed,
            "a2": self.a2,
            "max_norm": self.max_norm,
            "argmax_sigma": {k: float(v) for k, v in self.argmax_sigma.items()},
            "ratio": self.ratio,
            "n_evaluated": self.n_evaluated,
        }
        out.update(self.extra)
        return out


def _scan_basis(f: Filtration):
    atoms = f.splitting_atoms()
    return atoms, [difference_matrix(f, aid) for aid in atoms]


def _scan_norm(coeffs, mats, wmass) -> float:
    if not mats:
        return 0.0
    M = np.zeros_like(mats[0])
    for c, D in zip(coeffs, mats):
        if c:
            M += c * D
    return operator_norm(M, wmass, wmass)


def multiplier_norm_scan(
    f: Filtration,
    w: Weight,
    mode: str,
    budget: int = 10000,
    seed: int = 0,
    record_norms: bool = False,
) -> ScanReport:
    """Scan multiplier coefficient patterns and report the largest norm.

    Modes: ``exhaustive-01`` (all {0,1} patterns, small trees only),
    ``exhaustive-pm`` (all {-1,1} patterns, small trees only),
    ``random-continuous`` (``budget`` uniform draws from [-1,1] per
    coefficient), ``generation`` (coefficients constant on generations:
    all {0,1} patterns plus ``budget`` continuous draws).
    """
    if mode not in SCAN_MODES:
        raise ParseError(f"unknown scan mode {mode!r}")
    if budget < 1:
        raise BudgetExceeded("budget must be >= 1")
    atoms, mats = _scan_basis(f)
    wmass = [float(v) for v in w.leaf_mass_w]
    a2 = float(a2_characteristic(f, w).value)
    k = len(atoms)

    best = 0.0
    best_sigma: dict = {}
    count = 0
    recorded: list[float] = []

    def consider(coeffs):
        nonlocal best, best_sigma, count
        count += 1
        val = _scan_norm(coeffs, mats, wmass)
        if record_norms:
            recorded.append(val)
        if val > best:
            best = val
            best_sigma = {a: c for a, c in zip(atoms, coeffs) if c}

    if mode in ("exhaustive-01", "exhaustive-pm"):
        if len(f) > EXHAUSTIVE_ATOM_CAP:
            raise BudgetExceeded(
                f"exhaustive scan needs <= {EXHAUSTIVE_ATOM_CAP} atoms, tree has {len(f)}"
            )
        values = (0, 1) if mode == "exhaustive-01" else (-1, 1)
        for coeffs in itertools.product(values, repeat=k):
            consider(coeffs)
    elif mode == "random-continuous":
        rng = _random.Random(seed)
        for _ in range(budget):
            consider([rng.uniform(-1, 1) for _ in range(k)])
    else:  # generation
        gens = sorted({f.atom(a).generation for a in atoms})
        gen_index = {g: i for i, g in enumerate(gens)}

        def expand(alpha):
            return [alpha[gen_index[f.atom(a).generation]] for a in atoms]

        if 2 ** len(gens) <= 4096:
            for alpha in itertools.product((0, 1), repeat=len(gens)):
                consider(expand(alpha))
        rng = _random.Random(seed)
        for _ in range(budget):
            consider(expand([rng.uniform(-1, 1) for _ in range(len(gens))]))

    report = ScanReport(
        mode=mode,
        seed=seed,
        a2=a2,
        max_norm=best,
        argmax_sigma=best_sigma,
        ratio=best / a2 if a2 > 0 else 0.0,
        n_evaluated=count,
    )
    if record_norms:
        report.extra["norms"] = recorded
    return report


def constant_pair(
    f: Filtration, w: Weight, budget: int = 10000, seed: int = 0
) -> tuple[float, float, dict]:
    """Unconditional-constant pair: the exhaustive {0,1} maximum and the
    |coefficients| <= 1 maximum.

    The norm is convex in the coefficients, so on small trees the second
    maximum is attained at a sign pattern and the exhaustive {-1,1} scan
    makes the sampled value exact; the continuous draws only add interior
    coverage.  By inclusion the sampled value is never below the first.
    """
    s01 = multiplier_norm_scan(f, w, "exhaustive-01", seed=seed)
    spm = multiplier_norm_scan(f, w, "exhaustive-pm", seed=seed)
    scont = multiplier_norm_scan(f, w, "random-continuous", budget=budget, seed=seed)
    c3 = s01.max_norm
    c4 = max(spm.max_norm, scont.max_norm, c3)
    detail = {
        "c3": c3,
        "c4": c4,
        "c4_sign_patterns": spm.max_norm,
        "c4_continuous_draws": scont.max_norm,
        "a2": s01.a2,
    }
    return c3, c4, detail
