"""Scalar and coordinate helpers for the two arithmetic modes.

A *scalar* is a ``Fraction`` in exact mode and a ``float`` in float mode.
A *coordinate* (one entry of a point in V^n) is either a scalar or a tuple of
scalars, the latter when V itself is a coordinate space R^d (the norm-cube
mapping lives there).  A *point* is a tuple of n coordinates and a mapping
value is a tuple of m scalars.
"""
from __future__ import annotations

import math
import os
from fractions import Fraction
from numbers import Rational

from .errors import DomainError, ModelParseError, SingularityError

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)


def default_mode():
    mode = os.environ.get("MULTICUBIC_MODE", EXACT).strip().lower()
    if mode not in MODES:
        raise DomainError(f"MULTICUBIC_MODE must be one of {MODES}, got {mode!r}")
    return mode


def check_mode(mode):
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def parse_rational(text, context=None):
    """Parse ``"p/q"`` or ``"p"`` (ints and Fractions pass through) into a Fraction."""
    if isinstance(text, bool):
        raise ModelParseError(f"expected a rational, got {text!r}", context)
    if isinstance(text, Rational):
        return Fraction(text)
    if isinstance(text, str):
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise ModelParseError(f"not a rational literal: {text!r}", context)


def format_scalar(value):
    """Lossless text for exact values ("p/q" or "p"); repr-style text for floats."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def to_mode(value, mode):
    if mode == EXACT:
        if isinstance(value, float):
            if not math.isfinite(value):
                raise DomainError(f"non-finite value {value!r} in exact mode")
            return Fraction(value)
        return Fraction(value)
    return float(value)


def coord_to_mode(coord, mode):
    if isinstance(coord, (tuple, list)):
        return tuple(to_mode(c, mode) for c in coord)
    return to_mode(coord, mode)


def point_to_mode(point, mode):
    return tuple(coord_to_mode(c, mode) for c in point)


def lin(a, ca, b, cb):
    """ca*a + cb*b for coordinates that are scalars or equal-length tuples."""
    if isinstance(a, tuple):
        return tuple(ca * u + cb * v for u, v in zip(a, b))
    return ca * a + cb * b


def scale_coord(c, factor):
    if isinstance(c, tuple):
        return tuple(factor * u for u in c)
    return factor * c


def scale_point(point, factor):
    return tuple(scale_coord(c, factor) for c in point)


def zero_like(point):
    return tuple(scale_coord(c, 0) for c in point)


def coord_norm(c, kind="euclidean"):
    """Norm of one coordinate: |c| for scalars, euclidean or max norm for tuples.

    The euclidean norm of a tuple is a float unless the tuple has one entry.
    """
    if not isinstance(c, tuple):
        return abs(c)
    if kind == "max":
        return max((abs(u) for u in c), default=0)
    if len(c) == 1:
        return abs(c[0])
    return math.sqrt(sum(float(u) * float(u) for u in c))


def pow_norm(value, exponent):
    """value ** exponent for a norm value >= 0, exact whenever the inputs allow it.

    Integral exponents keep Fractions exact; 0 ** 0 is taken as 1 and
    0 ** negative raises SingularityError.
    """
    if value == 0:
        if exponent > 0:
            return value * 0
        if exponent == 0:
            return value * 0 + 1
        raise SingularityError(f"0 ** {exponent} is singular")
    if isinstance(exponent, Fraction) and exponent.denominator == 1:
        exponent = exponent.numerator
    if isinstance(exponent, int):
        return value ** exponent
    if isinstance(value, Fraction):
        raise DomainError(
            f"non-integral exponent {exponent} cannot be evaluated exactly; use float mode"
        )
    return float(value) ** float(exponent)


def vec_add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(u, factor):
    return tuple(factor * a for a in u)


def vec_norm(u):
    """Codomain norm: componentwise maximum of absolute values."""
    return max((abs(a) for a in u), default=0)


def is_finite(value):
    if isinstance(value, float):
        return math.isfinite(value)
    return True
