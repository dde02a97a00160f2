"""Upper binomial tails evaluated in log space.

``binomial_tail(n, k, x)`` is sum_{m>=k} C(n,m) x^m (1-x)^(n-m). Terms are
formed as logarithms, shifted by the largest one and accumulated with
``math.fsum``, so tails far below the double-precision underflow threshold of
their individual factors keep full relative accuracy.
"""
from __future__ import annotations

import math


def _check(n: int, k: int, x: float) -> None:
    if n < 0 or k < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")


def log_binomial_tail(n: int, k: int, x: float) -> float:
    """Natural log of the upper tail; ``-inf`` when the tail is exactly zero."""
    _check(n, k, x)
    if k == 0 or x == 1.0:
        return 0.0
    if x == 0.0:
        return -math.inf
    log_x = math.log(x)
    if k == n:
        return n * log_x
    log_1mx = math.log1p(-x)
    terms = [math.log(math.comb(n, m)) + m * log_x + (n - m) * log_1mx for m in range(n + 1)]
    log_total = _logsumexp(terms)  # 0 up to rounding; dividing by it keeps the tail <= 1
    upper = _logsumexp(terms[k:]) - log_total
    if upper < -math.log(2):
        return upper
    # bulk of the mass sits at m >= k: take the complement so the tail never exceeds 1
    return math.log1p(-math.exp(_logsumexp(terms[:k]) - log_total))


def _logsumexp(values: list[float]) -> float:
    top = max(values)
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def binomial_tail(n: int, k: int, x: float) -> float:
    """P(at least k successes in n Bernoulli(x) trials)."""
    if k == 0:
        _check(n, k, x)
        return 1.0
    return math.exp(log_binomial_tail(n, k, x))


def binomial_pmf(n: int, m: int, x: float) -> float:
    _check(n, m, x)
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    if x == 1.0:
        return 1.0 if m == n else 0.0
    return math.exp(math.log(math.comb(n, m)) + m * math.log(x) + (n - m) * math.log1p(-x))
