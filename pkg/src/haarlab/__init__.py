"""haarlab: exact finite computations for weighted martingale multipliers.

Everything operates on finite rooted forests of positive-measure atoms:
martingale differences and multipliers, Muckenhoupt-style characteristics,
weighted operator norms, outer-measure norms on the atom set, Carleson
packing constants, tangent-drop certificates, two-measure testing bounds,
and the unbounded-transform counterexample family.
"""

from .filtration import (
    Atom,
    Filtration,
    atoms_below,
    build_tree,
    load_tree,
    merge_forest,
    random_tree,
)
from .marttools import (
    Weight,
    WeightedOperator,
    a2_characteristic,
    apply_multiplier,
    average,
    martingale_difference,
    multiplier_norm_scan,
    operator_norm,
    partial_sum_norms,
    reduction_chain,
    weighted_norm,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Filtration",
    "Weight",
    "WeightedOperator",
    "a2_characteristic",
    "apply_multiplier",
    "atoms_below",
    "average",
    "build_tree",
    "load_tree",
    "martingale_difference",
    "merge_forest",
    "multiplier_norm_scan",
    "operator_norm",
    "partial_sum_norms",
    "random_tree",
    "reduction_chain",
    "weighted_norm",
    "__version__",
]
