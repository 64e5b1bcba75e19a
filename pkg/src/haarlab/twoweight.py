"""Testing bounds and paraproduct structure for general measure pairs.

A multiplier applied to ``f d(mu1)`` maps the mu1-space to the mu2-space;
its norm is controlled by the joint characteristic of the pair plus the
testing constant on atom indicators.  The operator splits into two
paraproducts and a diagonal part; on a finite forest the diagonal also
carries one coarse block per root (the expansion of a function starts at
the root indicators, which an unbounded-depth filtration would not have).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ParseError
from .filtration import Filtration
from .marttools import (
    Weight,
    _prefix,
    _span_sum,
    a2_characteristic,
    atom_averages,
    difference_matrix,
    expectation_matrix,
    leaf_mass,
    multiplier_matrix,
    norm_sq,
    operator_norm,
)
from .numutil import Number,fsqrt, is_exact, leq
from .outerspace import CheckResult
from .carleson import gamma_sequence, packing_constant, rho_sequence


@dataclass
class MeasurePair:
    """Two nonnegative leaf densities against the base measure; zero leaf
    values are allowed, but neither measure may vanish identically."""

    mu1: list
    mu2: list

    @classmethod
    def build(cls, f: Filtration, mu1, mu2) -> "MeasurePair":
        v1 = f.leaf_vector(mu1)
        v2 = f.leaf_vector(mu2)
        for v in (*v1, *v2):
            if v < 0:
                raise ParseError("measure densities must be nonnegative")
        if not any(v > 0 for v in v1) and not any(v > 0 for v in v2):
            raise ParseError("at least one measure must be nonzero")
        return cls(mu1=v1, mu2=v2)

    def exact(self) -> bool:
        return all(is_exact(v) for v in (*self.mu1, *self.mu2))


def _masses(f: Filtration, density) -> list:
    p = _prefix(leaf_mass(f, density))
    return [_span_sum(p, *f.leaf_slice(aid)) for aid in f.atom_ids]


def joint_a2(f: Filtration, pair: MeasurePair) -> tuple[Number, str]:
    """Largest normalized product of the two masses over atoms, with the
    attaining atom (first in depth-first order on ties)."""
    m1 = _masses(f, pair.mu1)
    m2 = _masses(f, pair.mu2)
    best, witness = None, None
    for aid, a, b in zip(f.atom_ids, m1, m2):
        v = a * b / f.mass(aid) ** 2
        if best is None or v > best:
            best, witness = v, aid
    return best, witness


def transform_matrix(f: Filtration, sigma: dict, density, exact: bool = False):
    """Matrix of f -> T(f dmu) on leaf values: the multiplier matrix against
    the base measure composed with multiplication by the density."""
    M = multiplier_matrix(f, sigma, exact=exact)
    d = f.leaf_vector(density)
    if exact:
        return M * np.array(d, dtype=object)[None, :]
    return np.asarray(M, dtype=float) * np.asarray(d, dtype=float)[None, :]


def testing_constant(f: Filtration, sigma: dict, pair: MeasurePair) -> tuple[float, Optional[str]]:
    """Largest localized norm on atom indicators, over atoms and both
    directions; atoms carrying no mass in the tested direction are skipped.

    For an atom, the localized transform of its indicator sums the
    difference vectors of the measure over the subtree, so one cumulative
    pass along the depth-first atom order covers all atoms.
    """
    best, witness = 0.0, None
    n = f.n_leaves
    pos = {aid: i for i, aid in enumerate(f.atom_ids)}
    for src, dst in ((pair.mu1, pair.mu2), (pair.mu2, pair.mu1)):
        src_mass = _masses(f, src)
        src_density = np.asarray([float(v) for v in f.leaf_vector(src)])
        dst_leaf = np.asarray([float(v) for v in leaf_mass(f, dst)])
        # the localized transform of an indicator sums the coefficiented
        # measure differences over the subtree; one cumulative pass in
        # depth-first order serves every atom
        rows = np.zeros((len(f.atom_ids) + 1, n))
        acc = np.zeros(n)
        for i, aid in enumerate(f.atom_ids):
            s = sigma.get(aid, 0)
            if s and len(f.atom(aid).children) >= 2:
                acc = acc + float(s) * (difference_matrix(f, aid) @ src_density)
            rows[i + 1] = acc
        for aid in f.atom_ids:
            m = float(src_mass[pos[aid]])
            if not m > 0:
                continue
            alo = pos[aid]
            ahi = alo + len(f.subtree(aid))
            vec = rows[ahi] - rows[alo]
            val = fsqrt(float((vec * vec * dst_leaf).sum())) / fsqrt(m)
            if val > best:
                best, witness = val, aid
    return best, witness


def t1_bound_check(f: Filtration, sigma: dict, pair: MeasurePair) -> CheckResult:
    """Exact operator norm against the testing-style bound
    2 sqrt(joint characteristic) + 5 (testing constant)."""
    M = transform_matrix(f, sigma, pair.mu1)
    in_mass = leaf_mass(f, pair.mu1)
    out_mass = leaf_mass(f, pair.mu2)
    norm = operator_norm(M, in_mass, out_mass)
    a2, a2_witness = joint_a2(f, pair)
    a, a_witness = testing_constant(f, sigma, pair)
    bound = 2.0 * fsqrt(a2) + 5.0 * a
    return CheckResult(
        "testing-bound",
        norm,
        bound,
        leq(norm, bound),
        witness={
            "joint_a2": float(a2),
            "joint_a2_witness": a2_witness,
            "testing_constant": a,
            "testing_witness": a_witness,
        },
    )


# ---------------------------------------------------------------------------
# paraproduct decomposition
# ---------------------------------------------------------------------------


def _avg_row(f: Filtration, aid: str, mass_vec, exact: bool):
    """Row vector of the mass-normalized averaging functional on one atom;
    zero when the atom carries no mass."""
    n = f.n_leaves
    row = np.zeros(n, dtype=object if exact else float)
    lo, hi = f.leaf_slice(aid)
    total = sum(mass_vec[lo:hi])
    if total > 0:
        for i in range(lo, hi):
            row[i] = mass_vec[i] / total
    return row


@dataclass
class ParaproductParts:
    pi1: np.ndarray
    pi2_adjoint: np.ndarray
    diag: np.ndarray
    transform: np.ndarray
    residual: Number
    pi1_norm: float
    pi2_norm: float
    diag_norm: float

    def to_json(self) -> dict:
        return {
            "residual": float(self.residual),
            "pi1_norm": self.pi1_norm,
            "pi2_norm": self.pi2_norm,
            "diag_norm": self.diag_norm,
        }


def paraproduct_decompose(
    f: Filtration, sigma: dict, pair: MeasurePair, exact: bool = False
) -> ParaproductParts:
    """Split the transform into paraproducts and a diagonal part.

    The first paraproduct pairs coarse averages of the input with the
    fine-scale differences of the transform applied to indicators; the
    second is its mirror image and enters through its dual with respect to
    the two mass pairings.  The diagonal collects the same-scale blocks
    plus one coarse block per root.  The four pieces sum back to the
    transform exactly; the residual is reported over the leaves that carry
    mass on the relevant side.
    """
    n = f.n_leaves
    T1 = transform_matrix(f, sigma, pair.mu1, exact=exact)
    T2 = transform_matrix(f, sigma, pair.mu2, exact=exact)
    mass1 = leaf_mass(f, pair.mu1)
    mass2 = leaf_mass(f, pair.mu2)
    if exact:
        mass1 = [Fraction(v) for v in mass1]
        mass2 = [Fraction(v) for v in mass2]

    def zeros():
        return np.zeros((n, n), dtype=object if exact else float)

    pi1 = zeros()
    pi2 = zeros()
    diag = zeros()
    one = np.ones(n, dtype=object if exact else float)
    for aid in f.atom_ids:
        lo, hi = f.leaf_slice(aid)
        ind = np.zeros(n, dtype=object if exact else float)
        ind[lo:hi] = one[lo:hi]
        d2 = difference_matrix(f, aid, density=pair.mu2, exact=exact)
        d1 = difference_matrix(f, aid, density=pair.mu1, exact=exact)
        v1 = d2 @ (T1 @ ind)
        r1 = _avg_row(f, aid, mass1, exact)
        pi1 += np.outer(v1, r1)
        v2 = d1 @ (T2 @ ind)
        r2 = _avg_row(f, aid, mass2, exact)
        pi2 += np.outer(v2, r2)
        diag += d2 @ T1 @ d1
    for r in f.roots:
        e2 = expectation_matrix(f, r, density=pair.mu2, exact=exact)
        e1 = expectation_matrix(f, r, density=pair.mu1, exact=exact)
        diag += e2 @ T1 @ e1
    # dual of pi2 with respect to the two mass pairings, on the support
    pi2_adj = zeros()
    for i in range(n):
        if not mass2[i] > 0:
            continue
        for j in range(n):
            pi2_adj[i, j] = pi2[j, i] * mass1[j] / mass2[i]
    total = pi1 + pi2_adj + diag
    resid = 0
    for i in range(n):
        if not mass2[i] > 0:
            continue
        for j in range(n):
            if not mass1[j] > 0:
                continue
            resid = max(resid, abs(total[i, j] - T1[i, j]))
    return ParaproductParts(
        pi1=pi1,
        pi2_adjoint=pi2_adj,
        diag=diag,
        transform=T1,
        residual=resid,
        pi1_norm=operator_norm(_floatm(pi1), mass1, mass2),
        pi2_norm=operator_norm(_floatm(pi2), mass2, mass1),
        diag_norm=operator_norm(_floatm(diag), mass1, mass2),
    )


def _floatm(M) -> np.ndarray:
    return np.vectorize(float)(M) if M.dtype == object else M


def annihilation_residual(f: Filtration, sigma: dict, pair: MeasurePair) -> float:
    """Largest entry of (fine difference) . pi1 . (coarser-or-equal
    difference): the first paraproduct never moves mass from a fine input
    scale to a coarser-or-equal output scale."""
    parts = paraproduct_decompose(f, sigma, pair)
    worst = 0.0
    for out_atom in f.atom_ids:
        d_out = difference_matrix(f, out_atom, density=pair.mu2)
        sub = set(f.subtree(out_atom))
        for in_atom in sub:
            d_in = difference_matrix(f, in_atom, density=pair.mu1)
            prod = d_out @ parts.pi1 @ d_in
            worst = max(worst, float(np.abs(prod).max()))
    return worst


# ---------------------------------------------------------------------------
# direct bilinear decomposition for a weight
# ---------------------------------------------------------------------------


@dataclass
class SigmaReport:
    sigma1: Number
    sigma2: Number
    sigma3: Number
    sigma4: Number
    vanishing_residual: Number
    atom_identity_residual: Number
    checks: list

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)

    def to_json(self) -> dict:
        return {
            "sigma1": float(self.sigma1),
            "sigma2": float(self.sigma2),
            "sigma3": float(self.sigma3),
            "sigma4": float(self.sigma4),
            "vanishing_residual": float(self.vanishing_residual),
            "atom_identity_residual": float(self.atom_identity_residual),
            "checks": [c.to_json() for c in self.checks],
            "holds": self.holds,
        }


def vanishing_smallscale_residual(f: Filtration, density, fn) -> Number:
    """Largest leaf value of the difference applied to the part of f*density
    below the same atom's own scale; identically zero by construction."""
    vec = f.leaf_vector(fn)
    d = f.leaf_vector(density)
    avg = atom_averages(f, vec, density=d)
    worst = 0
    for aid in f.atom_ids:
        atom = f.atom(aid)
        if len(atom.children) < 2:
            continue
        lo, hi = f.leaf_slice(aid)
        # f - (atom average) - (difference at this atom), times the density
        rest = [0] * f.n_leaves
        for c in atom.children:
            clo, chi = f.leaf_slice(c)
            for i in range(clo, chi):
                rest[i] = (vec[i] - avg[c]) * d[i]
        # base-measure difference of that remainder on this atom
        pf = _prefix([r * m for r, m in zip(rest, f.leaf_masses)])
        a_parent = _span_sum(pf, lo, hi) / f.mass(aid)
        worst = max(worst, abs(a_parent))
        for c in atom.children:
            clo, chi = f.leaf_slice(c)
            a_child = _span_sum(pf, clo, chi) / f.mass(c)
            worst = max(worst, abs(a_child - a_parent))
    return worst


def bilinear_sigma_decomposition(f: Filtration, w: Weight, fn, gn) -> SigmaReport:
    """Split the difference-pairing sum of (f du) against (g dw) into its
    four parts and verify the bounds each part obeys.

    Per atom, the difference of f*u splits exactly into the average of f
    times the difference of u plus a same-scale remainder; the four
    cross-products of that split for f and g give the four sums.
    """
    fvec = f.leaf_vector(fn)
    gvec = f.leaf_vector(gn)
    u_avg = atom_averages(f, w.u)
    w_avg = atom_averages(f, w.w)
    fu_avg = atom_averages(f, fvec, density=w.u)
    gw_avg = atom_averages(f, gvec, density=w.w)
    pu = _prefix(w.leaf_mass_u)
    pw = _prefix(w.leaf_mass_w)

    s1 = s2 = s3 = s4 = 0
    atom_resid = 0
    total_pairing = 0
    for aid in f.atom_ids:
        atom = f.atom(aid)
        if len(atom.children) < 2:
            continue
        mI = f.mass(aid)
        du, dw, phi, psi, umass, wmass, cmass = [], [], [], [], [], [], []
        for c in atom.children:
            du.append(u_avg[c] - u_avg[aid])
            dw.append(w_avg[c] - w_avg[aid])
            phi.append(fu_avg[c] - fu_avg[aid])
            psi.append(gw_avg[c] - gw_avg[aid])
            clo, chi = f.leaf_slice(c)
            umass.append(_span_sum(pu, clo, chi))
            wmass.append(_span_sum(pw, clo, chi))
            cmass.append(f.mass(c))
        # sigma4: both factors at the averaged scale
        cross_uw = sum(a * b * m for a, b, m in zip(du, dw, cmass))
        s4 += abs(fu_avg[aid] * gw_avg[aid] * cross_uw)
        # sigma3: same-scale remainder of f*u against the averaged g side
        smallf_w = sum(p * b * um for p, b, um in zip(phi, dw, umass))
        s3 += abs(gw_avg[aid] * smallf_w)
        # sigma2: mirror image
        smallg_u = sum(q * a * wm for q, a, wm in zip(psi, du, wmass))
        s2 += abs(fu_avg[aid] * smallg_u)
        # sigma1: both same-scale remainders; each is constant on children
        # after the base-measure difference
        alpha_mean = sum(p * um for p, um in zip(phi, umass)) / mI
        beta_mean = sum(q * wm for q, wm in zip(psi, wmass)) / mI
        alpha = [p * um / m - alpha_mean for p, um, m in zip(phi, umass, cmass)]
        beta = [q * wm / m - beta_mean for q, wm, m in zip(psi, wmass, cmass)]
        s1 += abs(sum(a * b * m for a, b, m in zip(alpha, beta, cmass)))
        # exact per-atom identity: the difference pairing equals the sum of
        # the four signed terms
        dfu = [
            fu_avg[aid] * a + (p * um / m - alpha_mean)
            for a, p, um, m in zip(du, phi, umass, cmass)
        ]
        dgw = [
            gw_avg[aid] * b + (q * wm / m - beta_mean)
            for b, q, wm, m in zip(dw, psi, wmass, cmass)
        ]
        pairing = sum(a * b * m for a, b, m in zip(dfu, dgw, cmass))
        total_pairing += abs(pairing)
        direct4 = (
            fu_avg[aid] * gw_avg[aid] * cross_uw
            + gw_avg[aid] * smallf_w
            + fu_avg[aid] * smallg_u
            + sum(a * b * m for a, b, m in zip(alpha, beta, cmass))
        )
        scale = max(abs(pairing), abs(direct4), 1)
        atom_resid = max(atom_resid, abs(pairing - direct4) / scale)

    a2_val = a2_characteristic(f, w).value
    fnorm = fsqrt(norm_sq(f, fvec, w.u))
    gnorm = fsqrt(norm_sq(f, gvec, w.w))
    checks = [
        CheckResult(
            "bilinear-part-1",
            float(s1),
            fsqrt(a2_val) * fnorm * gnorm,
            leq(s1, fsqrt(a2_val) * fnorm * gnorm),
        )
    ]
    gam = gamma_sequence(f, w)
    k_gamma = packing_constant(f, gam, normalizer=w.u).constant
    embed_f = sum(
        fu_avg[aid] ** 2 * gam[aid] * f.mass(aid) for aid in f.atom_ids
    )
    checks.append(
        CheckResult(
            "gamma-embedding-f",
            float(embed_f),
            4.0 * k_gamma * fnorm ** 2,
            leq(embed_f, 4.0 * k_gamma * fnorm ** 2),
        )
    )
    checks.append(
        CheckResult(
            "bilinear-part-2",
            float(s2),
            gnorm * fsqrt(4.0 * k_gamma) * fnorm,
            leq(s2, gnorm * fsqrt(4.0 * k_gamma) * fnorm),
        )
    )
    # mirrored embedding for the third part
    wrec = w.reciprocal()
    gam_rec = gamma_sequence(f, wrec)
    k_gamma_rec = packing_constant(f, gam_rec, normalizer=w.w).constant
    checks.append(
        CheckResult(
            "bilinear-part-3",
            float(s3),
            fnorm * fsqrt(4.0 * k_gamma_rec) * gnorm,
            leq(s3, fnorm * fsqrt(4.0 * k_gamma_rec) * gnorm),
        )
    )
    rho = rho_sequence(f, w)
    k_rho = packing_constant(f, rho).constant
    checks.append(
        CheckResult(
            "bilinear-part-4",
            float(s4),
            4.0 * k_rho * fnorm * gnorm,
            leq(s4, 4.0 * k_rho * fnorm * gnorm),
        )
    )
    vanish = vanishing_smallscale_residual(f, w.u, fvec)
    return SigmaReport(
        sigma1=s1,
        sigma2=s2,
        sigma3=s3,
        sigma4=s4,
        vanishing_residual=vanish,
        atom_identity_residual=atom_resid,
        checks=checks,
    )
