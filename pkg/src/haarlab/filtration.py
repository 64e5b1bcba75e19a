"""Finite atomic filtrations: rooted forests of positive-measure atoms.

An atom that persists across several generations is modeled as a chain of
single-child nodes, one node per generation it occupies, so the martingale
difference on a chain node is the zero operator.  Multiple roots are
allowed; every "sup over atoms" quantity ranges over the whole forest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

import random as _random

from .errors import (
    CyclicStructure,
    MassMismatch,
    NonPositiveMeasure,
    ParseError,
    UnknownAtom,
)
from .numutil import Number, is_exact, number_to_json, parse_number, to_backend


@dataclass(frozen=True)
class Atom:
    """One node of the forest: an atom of some generation."""

    id: str
    generation: int
    measure: Number
    parent: Optional[str]
    children: tuple[str, ...]

    @property
    def is_leaf(self) -> bool:
        return not self.children


class Filtration:
    """Immutable rooted forest with a positive measure on every atom.

    Atoms are kept in depth-first order (roots in input order, children in
    input order), which makes the leaves under any atom a contiguous slice
    of the global leaf order.  All derived indices are computed once at
    construction; instances are safe to share between workers.
    """

    def __init__(self, atoms: dict[str, Atom], roots: Sequence[str]):
        if not roots:
            raise ParseError("a filtration needs at least one root")
        self._atoms = dict(atoms)
        self.roots = tuple(roots)
        self.atom_ids = tuple(self._dfs_order())
        self._atom_pos = {a: i for i, a in enumerate(self.atom_ids)}
        self._index_subtrees()
        self._validate()

    # -- construction helpers ------------------------------------------------

    def _dfs_order(self) -> list[str]:
        order: list[str] = []
        seen: set[str] = set()
        for root in self.roots:
            stack = [root]
            while stack:
                aid = stack.pop()
                if aid in seen:
                    raise CyclicStructure(f"atom {aid!r} reached twice")
                seen.add(aid)
                order.append(aid)
                stack.extend(reversed(self._atoms[aid].children))
        if len(order) != len(self._atoms):
            missing = set(self._atoms) - seen
            raise CyclicStructure(f"unreachable atoms: {sorted(missing)[:5]}")
        return order

    def _index_subtrees(self) -> None:
        # contiguous spans into atom_ids / leaf order for every subtree,
        # via one iterative post-order pass
        leaf_ids: list[str] = []
        atom_span: dict[str, tuple[int, int]] = {}
        leaf_span: dict[str, tuple[int, int]] = {}
        leaf_lo: dict[str, int] = {}

        for root in self.roots:
            stack: list[tuple[str, bool]] = [(root, False)]
            while stack:
                aid, done = stack.pop()
                atom = self._atoms[aid]
                if not done:
                    leaf_lo[aid] = len(leaf_ids)
                    if atom.is_leaf:
                        leaf_ids.append(aid)
                    stack.append((aid, True))
                    stack.extend((c, False) for c in reversed(atom.children))
                else:
                    leaf_span[aid] = (leaf_lo[aid], len(leaf_ids))

        # subtree of aid occupies atom positions [pos, pos + subtree size)
        sizes = {aid: 1 for aid in self.atom_ids}
        for aid in reversed(self.atom_ids):
            for c in self._atoms[aid].children:
                sizes[aid] += sizes[c]
        for aid in self.atom_ids:
            p = self._atom_pos[aid]
            atom_span[aid] = (p, p + sizes[aid])

        self.leaf_ids = tuple(leaf_ids)
        self._leaf_pos = {l: i for i, l in enumerate(self.leaf_ids)}
        self._atom_span = atom_span
        self._leaf_span = leaf_span
        self.leaf_masses = [self._atoms[l].measure for l in self.leaf_ids]
        self.max_generation = max(a.generation for a in self._atoms.values())

    def _validate(self) -> None:
        import math

        exact = all(is_exact(a.measure) for a in self._atoms.values())
        for aid in self.atom_ids:
            atom = self._atoms[aid]
            m = atom.measure
            if not is_exact(m) and not math.isfinite(float(m)):
                raise NonPositiveMeasure(f"atom {aid!r} has measure {m!r}")
            if not m > 0:
                raise NonPositiveMeasure(f"atom {aid!r} has measure {m!r}")
            if atom.parent is not None:
                parent = self._atoms[atom.parent]
                if atom.generation != parent.generation + 1:
                    raise ParseError(
                        f"atom {aid!r} generation inconsistent with parent"
                    )
            if atom.children:
                total = sum(self._atoms[c].measure for c in atom.children)
                if exact:
                    if total != atom.measure:
                        raise MassMismatch(
                            f"atom {aid!r}: children sum {total} != {atom.measure}"
                        )
                elif abs(float(total) - float(atom.measure)) > 1e-12 * max(
                    float(total), float(atom.measure)
                ):
                    raise MassMismatch(
                        f"atom {aid!r}: children sum {total} != {atom.measure}"
                    )
        self.backend = "rational" if exact else "float"

    # -- queries -------------------------------------------------------------

    def __contains__(self, aid: str) -> bool:
        return aid in self._atoms

    def __len__(self) -> int:
        return len(self._atoms)

    def atom(self, aid: str) -> Atom:
        try:
            return self._atoms[aid]
        except KeyError:
            raise UnknownAtom(f"no atom {aid!r}") from None

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_ids)

    @property
    def depth(self) -> int:
        """Number of generations (root generation is 0)."""
        return self.max_generation + 1

    def mass(self, aid: str) -> Number:
        return self.atom(aid).measure

    def subtree(self, aid: str) -> tuple[str, ...]:
        """All atoms below (and including) ``aid``, in depth-first order."""
        lo, hi = self._atom_span[self.atom(aid).id]
        return self.atom_ids[lo:hi]

    def leaf_slice(self, aid: str) -> tuple[int, int]:
        """Contiguous range of leaf positions under ``aid``."""
        self.atom(aid)
        return self._leaf_span[aid]

    def leaves_under(self, aid: str) -> tuple[str, ...]:
        lo, hi = self.leaf_slice(aid)
        return self.leaf_ids[lo:hi]

    def leaf_position(self, leaf_id: str) -> int:
        try:
            return self._leaf_pos[leaf_id]
        except KeyError:
            raise UnknownAtom(f"no leaf {leaf_id!r}") from None

    def ancestors(self, aid: str) -> list[str]:
        """Chain from ``aid`` up to its root, inclusive."""
        chain = [self.atom(aid).id]
        while self._atoms[chain[-1]].parent is not None:
            chain.append(self._atoms[chain[-1]].parent)
        return chain

    def splitting_atoms(self) -> tuple[str, ...]:
        """Atoms with at least two children (the only ones with a nonzero
        martingale difference)."""
        return tuple(
            aid for aid in self.atom_ids if len(self._atoms[aid].children) >= 2
        )

    def atoms_at_generation(self, n: int) -> tuple[str, ...]:
        return tuple(
            aid for aid in self.atom_ids if self._atoms[aid].generation == n
        )

    # -- leaf / tree functions -----------------------------------------------

    def leaf_vector(self, values) -> list:
        """Normalize a leaf function (dict, sequence, or scalar) to a list
        aligned with ``leaf_ids``."""
        if isinstance(values, dict):
            missing = set(values) - set(self.leaf_ids)
            if missing:
                raise UnknownAtom(f"not leaves: {sorted(missing)[:5]}")
            return [values.get(l, 0) for l in self.leaf_ids]
        if isinstance(values, (int, float, Fraction)):
            return [values] * self.n_leaves
        vals = list(values)
        if len(vals) != self.n_leaves:
            raise ParseError(
                f"leaf function has {len(vals)} values, tree has {self.n_leaves} leaves"
            )
        return vals

    def tree_vector(self, values) -> list:
        """Normalize a tree function (dict with 0-default, sequence, or
        scalar) to a list aligned with ``atom_ids``."""
        if isinstance(values, dict):
            missing = set(values) - set(self.atom_ids)
            if missing:
                raise UnknownAtom(f"not atoms: {sorted(missing)[:5]}")
            return [values.get(a, 0) for a in self.atom_ids]
        if isinstance(values, (int, float, Fraction)):
            return [values] * len(self.atom_ids)
        vals = list(values)
        if len(vals) != len(self.atom_ids):
            raise ParseError(
                f"tree function has {len(vals)} values, tree has {len(self.atom_ids)} atoms"
            )
        return vals

    def leaf_dict(self, vec) -> dict:
        return dict(zip(self.leaf_ids, vec))

    def tree_dict(self, vec) -> dict:
        return dict(zip(self.atom_ids, vec))

    # -- serialization -------------------------------------------------------

    def to_spec(self) -> dict:
        return {
            "atoms": [
                {
                    "id": aid,
                    "parent": self._atoms[aid].parent,
                    "measure": number_to_json(self._atoms[aid].measure),
                }
                for aid in self.atom_ids
            ],
            "leaf_measures_only": False,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_spec(), sort_keys=True)

    def __repr__(self) -> str:
        return (
            f"Filtration({len(self)} atoms, {self.n_leaves} leaves, "
            f"depth {self.depth}, backend {self.backend})"
        )


def build_tree(spec: Union[dict, str], backend: Optional[str] = None) -> Filtration:
    """Build and validate a filtration from a spec dictionary or JSON text.

    The spec lists atoms with parent links; measures may be given on all
    atoms or on leaves only (``leaf_measures_only`` or simply omitted on
    internal nodes), in which case internal measures are children sums.
    Measures accept numbers, [num, den] pairs, and "p/q" strings.
    """
    if isinstance(spec, str):
        spec = json.loads(spec)
    try:
        entries = list(spec["atoms"])
    except (KeyError, TypeError) as exc:
        raise ParseError("spec must be a dict with an 'atoms' list") from exc

    parents: dict[str, Optional[str]] = {}
    raw_measures: dict[str, Optional[Number]] = {}
    children: dict[str, list[str]] = {}
    order: list[str] = []
    for e in entries:
        aid = e["id"]
        if aid in parents:
            raise ParseError(f"duplicate atom id {aid!r}")
        parents[aid] = e.get("parent")
        m = e.get("measure")
        raw_measures[aid] = None if m is None else parse_number(m)
        children.setdefault(aid, [])
        order.append(aid)
    for aid, p in parents.items():
        if p is not None:
            if p not in parents:
                raise ParseError(f"atom {aid!r} has unknown parent {p!r}")
            children[p].append(aid)
    roots = [aid for aid in order if parents[aid] is None]
    if not roots:
        raise CyclicStructure("no roots: every atom has a parent")

    # generations via BFS from roots; cycles leave atoms unreached
    generation: dict[str, int] = {}
    frontier = list(roots)
    for r in roots:
        generation[r] = 0
    while frontier:
        nxt: list[str] = []
        for aid in frontier:
            for c in children[aid]:
                generation[c] = generation[aid] + 1
                nxt.append(c)
        frontier = nxt
    if len(generation) != len(order):
        raise CyclicStructure("parent links contain a cycle")

    # fill internal measures bottom-up where omitted
    measures: dict[str, Number] = {}

    def resolve(aid: str) -> Number:
        if aid in measures:
            return measures[aid]
        kids = children[aid]
        raw = raw_measures[aid]
        if not kids:
            if raw is None:
                raise ParseError(f"leaf {aid!r} has no measure")
            m = raw
        else:
            total = sum(resolve(c) for c in kids)
            if raw is None or spec.get("leaf_measures_only"):
                m = total
            else:
                m = raw
                exact = is_exact(m) and is_exact(total)
                if exact and m != total:
                    raise MassMismatch(f"atom {aid!r}: {m} != children sum {total}")
                if not exact and abs(float(m) - float(total)) > 1e-12 * max(
                    abs(float(m)), abs(float(total)), 1.0
                ):
                    raise MassMismatch(f"atom {aid!r}: {m} != children sum {total}")
        measures[aid] = m
        return m

    for aid in reversed(order):
        resolve(aid)

    if backend is not None:
        measures = {a: to_backend(m, backend) for a, m in measures.items()}
        # re-derive internal sums so mass telescoping stays exact in the
        # converted number type
        for aid in sorted(order, key=lambda a: -generation[a]):
            if children[aid]:
                measures[aid] = sum(measures[c] for c in children[aid])

    atoms = {
        aid: Atom(
            id=aid,
            generation=generation[aid],
            measure=measures[aid],
            parent=parents[aid],
            children=tuple(children[aid]),
        )
        for aid in order
    }
    return Filtration(atoms, roots)


def load_tree(path: str, backend: Optional[str] = None) -> Filtration:
    with open(path, "r", encoding="utf-8") as fh:
        return build_tree(json.load(fh), backend=backend)


def atoms_below(f: Filtration, atom_id: str) -> list[str]:
    """The atom and all its descendants, in depth-first order."""
    return list(f.subtree(atom_id))


MeasureLaw = Union[tuple[float, float], Callable[["_random.Random"], float]]


def random_tree(
    seed: int,
    max_depth: int,
    max_branching: int,
    measure_law: MeasureLaw = (1e-3, 1e3),
    stop_prob: float = 0.15,
    backend: str = "float",
) -> Filtration:
    """Reproducible random forest with a single root.

    Children counts are uniform on {1, ..., max_branching} (so single-child
    chains occur naturally); below the root a branch may also stop early
    with probability ``stop_prob``.  Leaf masses are drawn from
    ``measure_law``: either a (lo, hi) range sampled log-uniformly, or a
    callable receiving the RNG.  The same seed always yields the same tree.
    """
    if max_depth < 1 or max_branching < 1:
        raise ParseError("max_depth and max_branching must be >= 1")
    rng = _random.Random(seed)
    if callable(measure_law):
        draw = measure_law
    else:
        lo, hi = measure_law
        if not (0 < lo <= hi):
            raise ParseError("measure_law range must be positive")
        import math

        def draw(r: _random.Random) -> float:
            return math.exp(r.uniform(math.log(lo), math.log(hi)))

    entries: list[dict] = [{"id": "a0", "parent": None, "measure": None}]
    counter = 1
    frontier = [("a0", 0)]
    while frontier:
        aid, gen = frontier.pop(0)
        terminal = gen >= max_depth - 1 or (gen >= 1 and rng.random() < stop_prob)
        if terminal:
            continue
        k = rng.randint(1, max_branching)
        for _ in range(k):
            cid = f"a{counter}"
            counter += 1
            entries.append({"id": cid, "parent": aid, "measure": None})
            frontier.append((cid, gen + 1))
    by_id = {e["id"]: e for e in entries}
    has_child = {e["parent"] for e in entries if e["parent"] is not None}
    for e in entries:
        if e["id"] not in has_child:
            e["measure"] = draw(rng)
    spec = {"atoms": entries, "leaf_measures_only": True}
    return build_tree(spec, backend=backend)


def merge_forest(parts: Iterable[Filtration], prefixes: Optional[list[str]] = None) -> Filtration:
    """Disjoint union of filtrations as one multi-root forest.

    Atom ids are prefixed to stay unique; used e.g. for direct sums of
    counterexample blocks.
    """
    parts = list(parts)
    if prefixes is None:
        prefixes = [f"t{i}." for i in range(len(parts))]
    entries = []
    for pref, f in zip(prefixes, parts):
        for aid in f.atom_ids:
            a = f.atom(aid)
            entries.append(
                {
                    "id": pref + aid,
                    "parent": None if a.parent is None else pref + a.parent,
                    "measure": number_to_json(a.measure),
                }
            )
    return build_tree({"atoms": entries})
