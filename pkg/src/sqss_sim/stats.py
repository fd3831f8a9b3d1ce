"""Exact tail probabilities and goodness-of-fit used by the checks and the suite."""

from __future__ import annotations

from typing import Mapping

from scipy import special, stats


class SupportViolation(ValueError):
    """Observed counts on an outcome the exact distribution rules out."""


def binomial_lower_pvalue(observed: int, n: int, p: float) -> float:
    """P[X <= observed] for X ~ Binomial(n, p)."""
    if n < 0 or not 0 <= observed <= n:
        raise ValueError(f"need 0 <= observed <= n, got observed={observed}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if observed == n:
        return 1.0
    return float(special.bdtr(observed, n, p))


def chi_square_fit(observed: Mapping, expected: Mapping) -> tuple[float, float]:
    """Pearson statistic and p-value of ``observed`` counts against probabilities.

    Outcomes with zero expected probability must have zero count; anything
    else raises :class:`SupportViolation`. Degrees of freedom are the number
    of supported outcomes minus one.
    """
    total_p = sum(expected.values())
    if abs(total_p - 1.0) > 1e-9:
        raise ValueError(f"expected probabilities sum to {total_p}, not 1")
    stray = [k for k, c in observed.items() if c and expected.get(k, 0.0) <= 0.0]
    if stray:
        raise SupportViolation(f"counts on zero-probability outcomes: {sorted(map(str, stray))}")
    n = sum(observed.values())
    support = [k for k, p in expected.items() if p > 0.0]
    if n == 0:
        raise ValueError("no observations")
    stat = 0.0
    for k in support:
        e = n * expected[k]
        stat += (observed.get(k, 0) - e) ** 2 / e
    dof = len(support) - 1
    if dof == 0:
        return stat, 1.0
    return stat, float(stats.chi2.sf(stat, dof))
