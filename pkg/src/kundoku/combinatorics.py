"""Exact counts of reading orders expressible with Kaeriten.

Without bonds the marks drive a plain stack, so the expressible orders of n
characters are counted by the Catalan number.  With bonds the stack holds
queues of characters, whose count has the generating function

    (1 - 3x + x^2 - sqrt(1 - 6x + 7x^2 - 2x^3 + x^4)) / (2x)

and the closed form implemented in :func:`stack_of_queues_count`.  Every value
is computed in exact integer or rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .errors import KundokuError
from .markgen import reachable_orders
from .model import Permutation

DEFAULT_SERIES_ORDER = 64
BRUTE_FORCE_MAX_N = 9
ENUMERATE_MAX_N = 8


class ConsistencyError(KundokuError, ArithmeticError):
    """An exact formula produced a non-integer count."""


@dataclass(frozen=True)
class CountResult:
    n: int
    catalan: int
    stack_of_queues_closed: int
    stack_of_queues_series: int
    factorial: int
    brute_force: Optional[int] = None  # stack-of-queues brute force, n <= BRUTE_FORCE_MAX_N
    brute_force_stack: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "catalan": self.catalan,
            "stack_of_queues_closed": self.stack_of_queues_closed,
            "stack_of_queues_series": self.stack_of_queues_series,
            "brute_force": self.brute_force,
            "brute_force_stack": self.brute_force_stack,
            "factorial": self.factorial,
        }


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"sentence length must be >= 1, got {n}")


def binom(n: int, k: int) -> int:
    """Binomial coefficient, zero outside ``0 <= k <= n``."""
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def catalan_count(n: int) -> int:
    _check_n(n)
    value = binom(2 * n, n) - binom(2 * n, n - 1)
    assert value * (n + 1) == binom(2 * n, n)
    return value


def stack_of_queues_count(n: int) -> int:
    _check_n(n)
    total = Fraction(0)
    for m in range(1, n + 2):
        inner = sum(binom(m, i) * binom(2 * m - i - 2, m - 1) for i in range(m))
        total += Fraction((-1) ** (n - m + 1), m) * binom(m, n - m + 1) * inner
    if total.denominator != 1:
        raise ConsistencyError(f"closed form gave non-integer {total} at n={n}")
    return total.numerator


@lru_cache(maxsize=8)
def _gf_coefficients(order: int) -> tuple:
    """Coefficients of the generating function up to ``x^(order-2)``."""
    radicand = [1, -6, 7, -2, 1] + [0] * order
    # sqrt(p) = s with s0 = 1:  s_k = (p_k - sum_{i=1}^{k-1} s_i s_{k-i}) / 2
    root = [Fraction(1)] + [Fraction(0)] * (order - 1)
    for k in range(1, order):
        root[k] = (Fraction(radicand[k]) - sum(root[i] * root[k - i] for i in range(1, k))) / 2
    numerator = [Fraction(c) for c in (1, -3, 1)] + [Fraction(0)] * (order - 3)
    numerator = [numerator[k] - root[k] for k in range(order)]
    if numerator[0] != 0:
        raise ConsistencyError("numerator does not vanish at x = 0")
    # divide by 2x
    return tuple(c / 2 for c in numerator[1:])


def gf_series_count(n: int, order: int = DEFAULT_SERIES_ORDER) -> int:
    _check_n(n)
    coeffs = _gf_coefficients(order)
    if n >= len(coeffs):
        raise ValueError(f"x^{n} needs series order > {n + 1}, have {order}")
    c = coeffs[n]
    if c.denominator != 1:
        raise ConsistencyError(f"series coefficient {c} at n={n} is not an integer")
    return c.numerator


def _check_brute(n: int, limit: int) -> None:
    _check_n(n)
    if n > limit:
        raise ValueError(f"brute force is limited to n <= {limit}, got {n}")


def brute_force_count(n: int, allow_groups: bool) -> int:
    """Number of distinct orders the direct stack (of queues) simulator reaches."""
    _check_brute(n, BRUTE_FORCE_MAX_N)
    return len(reachable_orders(n, allow_groups))


def enumerate_expressible(n: int, allow_groups: bool) -> list[Permutation]:
    _check_brute(n, ENUMERATE_MAX_N)
    return [Permutation(p) for p in sorted(reachable_orders(n, allow_groups))]


def count_result(n: int, brute_threshold: int = BRUTE_FORCE_MAX_N,
                 series_order: int = DEFAULT_SERIES_ORDER) -> CountResult:
    brute = n <= brute_threshold
    return CountResult(
        n=n,
        catalan=catalan_count(n),
        stack_of_queues_closed=stack_of_queues_count(n),
        stack_of_queues_series=gf_series_count(n, series_order),
        factorial=math.factorial(n),
        brute_force=brute_force_count(n, True) if brute else None,
        brute_force_stack=brute_force_count(n, False) if brute else None,
    )
