"""Node sets of the multi-cubic equation and the binomial weight identities.

A node of the right-hand side picks, per coordinate j, one of
``x1j + x2j`` (PlusDiff), ``x1j - x2j`` (MinusDiff) or ``x1j`` (First).
The terms with exactly k First entries form the set M_k^n.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

from .errors import DomainError


class NodeChoice(enum.Enum):
    # declaration order is the per-coordinate enumeration order
    FIRST = "F"
    PLUS_DIFF = "P"
    MINUS_DIFF = "M"

    @property
    def letter(self):
        return self.value

    @classmethod
    def from_letter(cls, letter):
        try:
            return cls(letter)
        except ValueError:
            raise DomainError(f"unknown node letter {letter!r}; expected F, P or M") from None


@dataclass(frozen=True)
class MkTerm:
    choices: tuple

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(self.choices))

    @property
    def fix_count(self):
        return sum(1 for c in self.choices if c is NodeChoice.FIRST)

    @property
    def n(self):
        return len(self.choices)

    def to_string(self):
        return "".join(c.letter for c in self.choices)

    @classmethod
    def from_string(cls, text):
        return cls(tuple(NodeChoice.from_letter(ch) for ch in text))

    def __str__(self):
        return self.to_string()


@dataclass(frozen=True)
class SignPattern:
    signs: tuple

    def __post_init__(self):
        object.__setattr__(self, "signs", tuple(self.signs))
        if any(s not in (-1, 1) for s in self.signs):
            raise DomainError(f"signs must be +1 or -1, got {self.signs}")

    def __len__(self):
        return len(self.signs)

    def __iter__(self):
        return iter(self.signs)


def _check_n(n):
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")


def _check_k(n, k):
    _check_n(n)
    if not isinstance(k, int) or isinstance(k, bool) or not 0 <= k <= n:
        raise DomainError(f"k must satisfy 0 <= k <= n = {n}, got {k!r}")


def _generate(n, k):
    # depth-first in F < P < M order, so output is lexicographic
    def rec(prefix, firsts_left, others_left):
        if firsts_left == 0 and others_left == 0:
            yield MkTerm(prefix)
            return
        if firsts_left:
            yield from rec(prefix + (NodeChoice.FIRST,), firsts_left - 1, others_left)
        if others_left:
            for choice in (NodeChoice.PLUS_DIFF, NodeChoice.MINUS_DIFF):
                yield from rec(prefix + (choice,), firsts_left, others_left - 1)

    return tuple(rec((), k, n - k))


@lru_cache(maxsize=128)
def _terms_by_k(n, k):
    return _generate(n, k)


def enumerate_Mk(n, k):
    """All terms of M_k^n in lexicographic order (F < P < M per coordinate).

    >>> [str(t) for t in enumerate_Mk(2, 1)]
    ['FP', 'FM', 'PF', 'MF']
    """
    _check_k(n, k)
    return list(_terms_by_k(n, k))


def enumerate_sign_patterns(n):
    """All 2^n sign patterns, +1 before -1 in each position."""
    _check_n(n)
    return [SignPattern(s) for s in itertools.product((1, -1), repeat=n)]


def mk_size(n, k):
    _check_k(n, k)
    return comb(n, k) * 2 ** (n - k)


def rhs_weight(n, k):
    """Weight 2^(n-k) * 12^k of f(M_k^n) on the right-hand side."""
    _check_k(n, k)
    return 2 ** (n - k) * 12 ** k


@dataclass(frozen=True)
class IdentityCheck:
    n: int
    computed: int
    expected: int

    @property
    def equal(self):
        return self.computed == self.expected

    def __iter__(self):
        # unpacks as (computed, expected, equal)
        return iter((self.computed, self.expected, self.equal))


def identity_total_weight(n):
    """sum_k C(n,k) 2^(2(n-k)) 12^k against its closed form 2^(4n)."""
    _check_n(n)
    computed = sum(comb(n, k) * 2 ** (2 * (n - k)) * 12 ** k for k in range(n + 1))
    return IdentityCheck(n, computed, 2 ** (4 * n))


def identity_w2(n):
    """Coefficient of f* after collapsing all but one variable; closed form 2^(4n-3).

    The sum over k = 1..n-1 is empty when n = 1.
    """
    _check_n(n)
    computed = 2 ** (2 * n - 1) + sum(
        comb(n - 1, k) * 2 ** (2 * (n - k) - 1) * 12 ** k for k in range(1, n)
    )
    return IdentityCheck(n, computed, 2 ** (4 * n - 3))


def identity_w1(n):
    """Coefficient of f(x1) after the same collapse; closed form 12 * 2^(4(n-1))."""
    _check_n(n)
    computed = 12 ** n + sum(
        comb(n - 1, k - 1) * 2 ** (2 * (n - k)) * 12 ** k for k in range(1, n)
    )
    return IdentityCheck(n, computed, 12 * 2 ** (4 * (n - 1)))


def identity_table(n_max):
    rows = []
    for n in range(1, n_max + 1):
        rows.append(
            {
                "n": n,
                "total": identity_total_weight(n),
                "w2": identity_w2(n),
                "w1": identity_w1(n),
            }
        )
    return rows
