"""Numeric helpers shared by the rational and float backends.

Values flow through the package as plain Python numbers: ``Fraction`` (and
``int``) for the exact backend, ``float`` for the spectral one.  Arithmetic
degrades gracefully: any float in a sum turns the result into a float, so
most operations are written once and work for both backends.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Number = Union[int, float, Fraction]

#: default relative tolerance for float comparisons
REL_TOL = 1e-9


def is_exact(x: Number) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def all_exact(values) -> bool:
    return all(is_exact(v) for v in values)


def to_backend(x, backend: str) -> Number:
    """Coerce ``x`` to the requested backend ("rational" or "float")."""
    if backend == "float":
        return float(x)
    if backend == "rational":
        if isinstance(x, Fraction):
            return x
        if isinstance(x, int):
            return Fraction(x)
        if isinstance(x, float):
            # exact binary expansion; callers who want pretty ratios should
            # pass [num, den] pairs instead of floats
            return Fraction(x)
        if isinstance(x, (list, tuple)) and len(x) == 2:
            return Fraction(int(x[0]), int(x[1]))
        if isinstance(x, str):
            return Fraction(x)
        raise TypeError(f"cannot convert {x!r} to a rational")
    raise ValueError(f"unknown backend {backend!r}")


def parse_number(x) -> Number:
    """Parse a JSON-level number: int/float pass through, [num, den] and
    "p/q" strings become Fractions."""
    if isinstance(x, bool):
        raise TypeError("booleans are not measures")
    if isinstance(x, (int, float, Fraction)):
        return x
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return Fraction(int(x[0]), int(x[1]))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot parse number {x!r}")


def number_to_json(x: Number):
    """Inverse of :func:`parse_number`; Fractions serialize as [num, den]."""
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    return x


def close(a: Number, b: Number, rel: float = REL_TOL, abs_tol: float = 0.0) -> bool:
    """Relative closeness; exact equality when both sides are exact."""
    if is_exact(a) and is_exact(b):
        return a == b
    fa, fb = float(a), float(b)
    return abs(fa - fb) <= max(rel * max(abs(fa), abs(fb)), abs_tol)


def leq(lhs: Number, rhs: Number, rel: float = REL_TOL) -> bool:
    """``lhs <= rhs`` with relative slack for the float backend."""
    if is_exact(lhs) and is_exact(rhs):
        return lhs <= rhs
    fl, fr = float(lhs), float(rhs)
    return fl <= fr + rel * max(abs(fl), abs(fr))


def fsqrt(x: Number) -> float:
    return math.sqrt(float(x))


def rel_residual(a: Number, b: Number) -> Number:
    """|a - b| normalized by max(|a|, |b|, 1); exact when both are exact."""
    if is_exact(a) and is_exact(b):
        d = abs(a - b)
        return d / max(abs(a), abs(b), 1)
    fa, fb = float(a), float(b)
    return abs(fa - fb) / max(abs(fa), abs(fb), 1.0)
